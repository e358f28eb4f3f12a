#include "pidinet/model_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"

namespace pidinet {

namespace {

void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(char(v & 0xFF));
    out.push_back(char((v >> 8) & 0xFF));
    out.push_back(char((v >> 16) & 0xFF));
    out.push_back(char((v >> 24) & 0xFF));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

void put_f32le(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(out, bits);
}

float get_f32le(const unsigned char* p) {
    const std::uint32_t bits = get_u32le(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

constexpr char kMagic[4] = {'P', 'D', 'C', 'N'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_model(const PiDiNetModel& m, const std::string& path) {
    auto& blocks = const_cast<PiDiNetModel&>(m);
    std::vector<ParamBlockRef> refs = param_blocks(blocks);

    nlohmann::json manifest = nlohmann::json::array();
    std::string payload;
    std::uint64_t offset = 0;
    auto emit = [&](const std::string& name, const std::vector<real>& data,
                    nlohmann::json shape) {
        manifest.push_back({{"name", name}, {"shape", std::move(shape)}, {"offset", offset}});
        for (real v : data) put_f32le(payload, float(v));
        offset += data.size() * 4;
    };
    for (const ParamBlockRef& b : refs) {
        emit(b.name + ".weight", b.weight->data,
             {b.weight->n, b.weight->c, b.weight->h, b.weight->w});
        if (b.bias) emit(b.name + ".bias", *b.bias, {b.bias->size()});
    }

    nlohmann::json header;
    header["config"] = render_config(m.cfg.blocks);
    header["channels"] = m.cfg.base_channels;
    header["cdcm_channels"] = m.cfg.cdcm_channels;
    header["use_csam"] = m.cfg.use_csam;
    header["use_cdcm"] = m.cfg.use_cdcm;
    header["seed"] = m.seed;
    header["converted"] = m.converted;
    header["tensors"] = std::move(manifest);
    const std::string header_bytes = header.dump();

    std::string out;
    out.append(kMagic, 4);
    put_u32le(out, kVersion);
    put_u32le(out, std::uint32_t(header_bytes.size()));
    out += header_bytes;
    out += payload;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw DataError("write failed for '" + path + "'");
}

PiDiNetModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "' for reading");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 12) throw FormatError(path + ": file too small for a model header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(path + ": bad magic (expected PDCN)");
    const std::uint32_t version = get_u32le(bytes.data() + 4);
    if (version != kVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    const std::uint32_t header_len = get_u32le(bytes.data() + 8);
    if (12 + std::size_t(header_len) > bytes.size())
        throw CorruptionError(path + ": header extends past end of file");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": invalid header JSON: " + e.what());
    }

    PiDiNetModel m;
    try {
        const ArchConfig cfg = make_arch_config(
            header.at("config").get<std::string>(), header.at("channels").get<int>(),
            header.at("use_csam").get<bool>(), header.at("use_cdcm").get<bool>(),
            header.at("cdcm_channels").get<int>());
        m = build_model(cfg, header.at("seed").get<std::uint64_t>());
        if (header.at("converted").get<bool>()) m = convert_model_for_inference(m);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": header missing fields: " + e.what());
    }

    const unsigned char* payload = bytes.data() + 12 + header_len;
    const std::uint64_t payload_len = bytes.size() - 12 - header_len;

    if (!header.contains("tensors") || !header["tensors"].is_array())
        throw FormatError(path + ": header lacks a tensor manifest");
    std::vector<ParamBlockRef> refs = param_blocks(m);
    const auto& manifest = header.at("tensors");
    std::size_t entry = 0;
    std::uint64_t expect_offset = 0;
    auto fill = [&](const std::string& name, std::vector<real>& data,
                    std::vector<std::int64_t> want_shape) {
        if (entry >= manifest.size())
            throw ConsistencyError(path + ": manifest misses tensor '" + name + "'");
        const auto& e = manifest[entry++];
        if (e.at("name").get<std::string>() != name)
            throw ConsistencyError(path + ": manifest order mismatch at '" + name + "'");
        const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
        if (shape != want_shape)
            throw ConsistencyError(path + ": shape mismatch for '" + name + "'");
        const std::uint64_t off = e.at("offset").get<std::uint64_t>();
        if (off != expect_offset)
            throw ConsistencyError(path + ": non-contiguous manifest offset for '" + name + "'");
        const std::uint64_t nbytes = std::uint64_t(data.size()) * 4;
        if (off + nbytes > payload_len)
            throw CorruptionError(path + ": payload truncated, expected at least " +
                                  std::to_string(off + nbytes) + " bytes, found " +
                                  std::to_string(payload_len));
        for (std::size_t i = 0; i < data.size(); ++i)
            data[i] = real(get_f32le(payload + off + i * 4));
        expect_offset = off + nbytes;
    };
    for (const ParamBlockRef& b : refs) {
        fill(b.name + ".weight", b.weight->data,
             {b.weight->n, b.weight->c, b.weight->h, b.weight->w});
        if (b.bias)
            fill(b.name + ".bias", *b.bias, {std::int64_t(b.bias->size())});
    }
    if (entry != manifest.size())
        throw ConsistencyError(path + ": manifest lists " + std::to_string(manifest.size()) +
                               " tensors, model expects " + std::to_string(entry));
    if (expect_offset != payload_len)
        throw CorruptionError(path + ": payload holds " + std::to_string(payload_len) +
                              " bytes, manifest covers " + std::to_string(expect_offset));
    return m;
}

}  // namespace pidinet
