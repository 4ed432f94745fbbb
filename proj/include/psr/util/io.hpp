#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace psr::util {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and require a little-endian host");

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<bool>(is);
}

/// Writes `contents` next to `path` and renames it into place, so readers
/// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

inline constexpr std::string_view kVersion = "0.1.0";

/// First line of every CSV the tools emit.
std::string csv_header_comment();

}  // namespace psr::util
