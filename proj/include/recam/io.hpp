#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace recam::io {

std::string read_file(const std::filesystem::path& path);

// write-temp-then-rename; readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

// Raw little-endian doubles with a count header. Bit-exact round trip.
void write_doubles(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> read_doubles(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

}  // namespace recam::io
