#pragma once

#include <filesystem>
#include <string>

namespace cryptoscan {

// SHA-256 hex digests used for artifact integrity in the run manifest.

std::string sha256_hex(const std::string& bytes);

// Throws DataError if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

} // namespace cryptoscan
