#pragma once

#include <array>
#include <string>

#include "pidinet/pdc.hpp"

namespace pidinet {

constexpr int kNumBlocks = 16;  // the initial convolution counts as block 1

// Parsed architecture: 16 block convolution kinds plus width parameters.
struct ArchConfig {
    std::array<PdcKind, kNumBlocks> blocks;
    int base_channels = 60;  // C; stages run C, 2C, 4C, 4C
    int cdcm_channels = 24;  // M, strictly below C
    bool use_csam = true;
    bool use_cdcm = true;
};

// Grammar:  config := group ('-' group)*
//           group  := letter | '[' letter+ ']' ('x'|'×') int
// Letters C/A/R/V, case-insensitive. The expansion must yield exactly 16
// letters. Throws ParseError (with position) on syntax, ConfigError on
// length.
std::array<PdcKind, kNumBlocks> parse_config(const std::string& text);

// Canonical pretty-printer: "[P]xN" for the shortest repeating pattern, a
// dash-joined letter list otherwise. parse_config(render_config(b)) == b.
std::string render_config(const std::array<PdcKind, kNumBlocks>& blocks);

// Validates widths and applies the default M = min(24, C - 1).
ArchConfig make_arch_config(const std::string& config_text, int channels,
                            bool use_csam = true, bool use_cdcm = true,
                            int cdcm_channels = 0);

}  // namespace pidinet
