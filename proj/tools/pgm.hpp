#pragma once

#include <string>
#include <vector>

namespace faseg::cli {

/// Plain-text portable graymap ("P2", maxval 255). Values are min-max
/// normalized to [0,255] per map; a constant map encodes as all zeros.
/// Rows are newline-separated without a trailing newline.
std::string encode_pgm(const std::vector<double>& values, int width, int height);

/// Writes content to path, throwing IoError on failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace faseg::cli
