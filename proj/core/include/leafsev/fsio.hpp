#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace leafsev {

// Throws std::runtime_error naming the path on failure.
std::vector<std::uint8_t> read_binary_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_binary_file(const std::string& path, const void* data, std::size_t size);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace leafsev
