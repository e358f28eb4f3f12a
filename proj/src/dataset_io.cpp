#include "pidinet/dataset_io.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "pidinet/pnm.hpp"

namespace fs = std::filesystem;

namespace pidinet {

std::vector<Sample> load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError("'" + dir + "' is not a directory");

    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path p = entry.path();
        if (p.extension() != ".ppm") continue;
        stems.push_back(p.stem().string());
    }
    std::sort(stems.begin(), stems.end());

    std::vector<Sample> out;
    for (const std::string& stem : stems) {
        const fs::path img = fs::path(dir) / (stem + ".ppm");
        const fs::path gt = fs::path(dir) / (stem + ".gt.pgm");
        if (!fs::exists(gt)) {
            std::cerr << "warning: skipping '" << img.string() << "' (no " << stem
                      << ".gt.pgm)\n";
            continue;
        }
        Sample s;
        s.name = stem;
        s.image = read_ppm(img.string());
        s.truth = read_pgm(gt.string());
        if (s.truth.h != s.image.h || s.truth.w != s.image.w)
            throw DataError(stem + ": image and truth sizes differ");
        out.push_back(std::move(s));
    }
    if (out.empty()) throw DataError("no image/truth pairs found in '" + dir + "'");
    return out;
}

void write_dataset(const std::string& dir, const std::vector<Sample>& samples) {
    fs::create_directories(dir);
    for (const Sample& s : samples) {
        write_ppm((fs::path(dir) / (s.name + ".ppm")).string(), s.image);
        write_pgm((fs::path(dir) / (s.name + ".gt.pgm")).string(), s.truth, 65535);
    }
}

}  // namespace pidinet
