#include "pidinet/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace pidinet {

namespace {

int quantize(real v, int maxval) {
    double d = double(v);
    if (d < 0.0) d = 0.0;
    if (d > 1.0) d = 1.0;
    return int(std::lround(d * maxval));
}

// Skips whitespace and '#' comments, then reads a non-negative integer.
int read_pnm_int(std::istream& in, const std::string& path) {
    int c = in.get();
    for (;;) {
        while (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v')
            c = in.get();
        if (c == '#') {
            while (c != '\n' && c != EOF) c = in.get();
            continue;
        }
        break;
    }
    if (c == EOF || c < '0' || c > '9')
        throw FormatError(path + ": malformed header");
    long val = 0;
    while (c >= '0' && c <= '9') {
        val = val * 10 + (c - '0');
        if (val > 1 << 30) throw FormatError(path + ": header value out of range");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return int(val);
}

void expect_single_whitespace(std::istream& in, const std::string& path) {
    const int c = in.get();
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n')
        throw FormatError(path + ": missing whitespace before raster");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return in;
}

}  // namespace

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.n != 1 || image.c != 3)
        throw DimensionError("write_ppm: expected a (1,3,H,W) image, got " + image.shape_str());
    std::ofstream out = open_out(path);
    out << "P6\n" << image.w << " " << image.h << "\n255\n";
    std::vector<unsigned char> row(std::size_t(image.w) * 3);
    for (int y = 0; y < image.h; ++y) {
        for (int x = 0; x < image.w; ++x)
            for (int c = 0; c < 3; ++c)
                row[std::size_t(x) * 3 + std::size_t(c)] =
                    (unsigned char)quantize(image.at(0, c, y, x), 255);
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in = open_in(path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw FormatError(path + ": not a binary PPM (P6)");
    const int w = read_pnm_int(in, path);
    const int h = read_pnm_int(in, path);
    const int maxval = read_pnm_int(in, path);
    if (w <= 0 || h <= 0) throw FormatError(path + ": bad dimensions");
    if (maxval != 255) throw FormatError(path + ": unsupported maxval " + std::to_string(maxval));
    expect_single_whitespace(in, path);

    Tensor img(1, 3, h, w);
    std::vector<unsigned char> row(std::size_t(w) * 3);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        if (std::size_t(in.gcount()) != row.size())
            throw CorruptionError(path + ": truncated raster");
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(0, c, y, x) = real(row[std::size_t(x) * 3 + std::size_t(c)] / 255.0);
    }
    return img;
}

void write_pgm(const std::string& path, const Tensor& map, int maxval) {
    if (map.n != 1 || map.c != 1)
        throw DimensionError("write_pgm: expected a (1,1,H,W) map, got " + map.shape_str());
    if (maxval != 255 && maxval != 65535)
        throw ParameterError("write_pgm: maxval must be 255 or 65535");
    std::ofstream out = open_out(path);
    out << "P5\n" << map.w << " " << map.h << "\n" << maxval << "\n";
    if (maxval == 255) {
        std::vector<unsigned char> row(std::size_t(map.w));
        for (int y = 0; y < map.h; ++y) {
            for (int x = 0; x < map.w; ++x)
                row[std::size_t(x)] = (unsigned char)quantize(map.at(0, 0, y, x), 255);
            out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
        }
    } else {
        std::vector<unsigned char> row(std::size_t(map.w) * 2);
        for (int y = 0; y < map.h; ++y) {
            for (int x = 0; x < map.w; ++x) {
                const int v = quantize(map.at(0, 0, y, x), 65535);
                row[std::size_t(x) * 2] = (unsigned char)(v >> 8);  // big-endian
                row[std::size_t(x) * 2 + 1] = (unsigned char)(v & 0xFF);
            }
            out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
        }
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

Tensor read_pgm(const std::string& path) {
    std::ifstream in = open_in(path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw FormatError(path + ": not a binary PGM (P5)");
    const int w = read_pnm_int(in, path);
    const int h = read_pnm_int(in, path);
    const int maxval = read_pnm_int(in, path);
    if (w <= 0 || h <= 0) throw FormatError(path + ": bad dimensions");
    if (maxval != 255 && maxval != 65535)
        throw FormatError(path + ": unsupported maxval " + std::to_string(maxval));
    expect_single_whitespace(in, path);

    Tensor map(1, 1, h, w);
    const int bytes = maxval == 255 ? 1 : 2;
    std::vector<unsigned char> row(std::size_t(w) * std::size_t(bytes));
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        if (std::size_t(in.gcount()) != row.size())
            throw CorruptionError(path + ": truncated raster");
        for (int x = 0; x < w; ++x) {
            const int v = bytes == 1 ? row[std::size_t(x)]
                                     : (row[std::size_t(x) * 2] << 8) | row[std::size_t(x) * 2 + 1];
            map.at(0, 0, y, x) = real(double(v) / maxval);
        }
    }
    return map;
}

}  // namespace pidinet
