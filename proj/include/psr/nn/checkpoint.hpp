#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "psr/nn/linalg.hpp"

namespace psr::nn {

/// Tensor record of the parameter checkpoint format.
///
/// Layout (little-endian):
///   "PSRM"            4 bytes magic
///   version           u32 (currently 1)
///   repeated until EOF:
///     name_len        u32
///     name            name_len bytes (UTF-8, no terminator)
///     rank            u32
///     dims            rank x u64
///     values          prod(dims) x f64, row-major
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  static NamedTensor from(std::string name, const Mat& m);
  static NamedTensor from(std::string name, const Vec& v);
  Mat to_mat() const;
  Vec to_vec() const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);
bool has_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);

}  // namespace psr::nn
