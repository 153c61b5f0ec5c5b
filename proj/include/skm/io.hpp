#pragma once

#include <string>

namespace skm {

// Write via a sibling temp file and rename, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace skm
