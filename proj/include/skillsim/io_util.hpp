#pragma once

#include <filesystem>
#include <string>

namespace skillsim {

std::string read_file(const std::filesystem::path& path);

// Write-temp-then-rename so readers never observe partial content.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

std::string sha256_hex(const std::string& data);

// Full-precision float formatting ("%.17g", exact round trip) and a compact
// human form ("%g").
std::string fmt_full(double v);
std::string fmt_compact(double v);

}  // namespace skillsim
