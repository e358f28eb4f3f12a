#include "pidinet/config.hpp"

#include <cctype>
#include <vector>

namespace pidinet {

namespace {

bool is_kind_letter(char c) {
    switch (std::toupper(static_cast<unsigned char>(c))) {
        case 'C':
        case 'A':
        case 'R':
        case 'V': return true;
        default: return false;
    }
}

// Accepts 'x', 'X' and the UTF-8 multiplication sign (0xC3 0x97). Returns the
// number of bytes consumed, 0 if no repeat marker is present.
std::size_t repeat_marker_len(const std::string& s, std::size_t i) {
    if (i < s.size() && (s[i] == 'x' || s[i] == 'X')) return 1;
    if (i + 1 < s.size() && static_cast<unsigned char>(s[i]) == 0xC3 &&
        static_cast<unsigned char>(s[i + 1]) == 0x97)
        return 2;
    return 0;
}

}  // namespace

std::array<PdcKind, kNumBlocks> parse_config(const std::string& text) {
    std::vector<PdcKind> expanded;
    std::size_t i = 0;
    bool expect_group = true;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '-') {
            if (expect_group) throw ParseError("unexpected '-'", i);
            expect_group = true;
            ++i;
            continue;
        }
        if (!expect_group)
            throw ParseError(std::string("expected '-' before '") + c + "'", i);
        if (c == '[') {
            const std::size_t open = i;
            ++i;
            std::vector<PdcKind> pattern;
            while (i < text.size() && text[i] != ']') {
                if (!is_kind_letter(text[i]))
                    throw ParseError(std::string("invalid character '") + text[i] +
                                         "' inside brackets",
                                     i);
                pattern.push_back(pdc_kind_from_letter(text[i]));
                ++i;
            }
            if (i >= text.size()) throw ParseError("unterminated '['", open);
            if (pattern.empty()) throw ParseError("empty brackets", open);
            ++i;  // ']'
            const std::size_t marker = repeat_marker_len(text, i);
            if (marker == 0) throw ParseError("expected 'x' after ']'", i);
            i += marker;
            if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
                throw ParseError("expected repeat count", i);
            long count = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                count = count * 10 + (text[i] - '0');
                if (count > 1000) throw ParseError("repeat count too large", i);
                ++i;
            }
            for (long r = 0; r < count; ++r)
                expanded.insert(expanded.end(), pattern.begin(), pattern.end());
        } else if (is_kind_letter(c)) {
            expanded.push_back(pdc_kind_from_letter(c));
            ++i;
        } else {
            throw ParseError(std::string("invalid character '") + c + "'", i);
        }
        expect_group = false;
    }
    if (expect_group && expanded.empty()) throw ParseError("empty configuration", 0);
    if (expect_group) throw ParseError("trailing '-'", text.size() - 1);
    if (int(expanded.size()) != kNumBlocks)
        throw ConfigError("configuration expands to " + std::to_string(expanded.size()) +
                          " blocks, expected " + std::to_string(kNumBlocks));
    std::array<PdcKind, kNumBlocks> out;
    std::copy(expanded.begin(), expanded.end(), out.begin());
    return out;
}

std::string render_config(const std::array<PdcKind, kNumBlocks>& blocks) {
    for (int plen : {1, 2, 4, 8}) {
        bool repeats = true;
        for (int i = plen; i < kNumBlocks && repeats; ++i)
            repeats = blocks[std::size_t(i)] == blocks[std::size_t(i % plen)];
        if (repeats) {
            std::string s = "[";
            for (int i = 0; i < plen; ++i) s += pdc_letter(blocks[std::size_t(i)]);
            s += "]x" + std::to_string(kNumBlocks / plen);
            return s;
        }
    }
    std::string s;
    for (int i = 0; i < kNumBlocks; ++i) {
        if (i) s += '-';
        s += pdc_letter(blocks[std::size_t(i)]);
    }
    return s;
}

ArchConfig make_arch_config(const std::string& config_text, int channels, bool use_csam,
                            bool use_cdcm, int cdcm_channels) {
    if (channels <= 1) throw ConfigError("base channel count must exceed 1");
    ArchConfig cfg;
    cfg.blocks = parse_config(config_text);
    cfg.base_channels = channels;
    cfg.cdcm_channels = cdcm_channels > 0 ? cdcm_channels : std::min(24, channels - 1);
    cfg.use_csam = use_csam;
    cfg.use_cdcm = use_cdcm;
    if (cfg.cdcm_channels >= channels)
        throw ConfigError("cdcm channels M=" + std::to_string(cfg.cdcm_channels) +
                          " must stay below C=" + std::to_string(channels));
    return cfg;
}

}  // namespace pidinet
