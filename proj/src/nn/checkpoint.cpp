#include "psr/nn/checkpoint.hpp"

#include <sstream>

#include "psr/errors.hpp"
#include "psr/util/io.hpp"

namespace psr::nn {

NamedTensor NamedTensor::from(std::string name, const Mat& m) {
  NamedTensor t;
  t.name = std::move(name);
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.values.assign(m.data(), m.data() + m.size());
  return t;
}

NamedTensor NamedTensor::from(std::string name, const Vec& v) {
  NamedTensor t;
  t.name = std::move(name);
  t.dims = {static_cast<std::uint64_t>(v.size())};
  t.values.assign(v.data(), v.data() + v.size());
  return t;
}

Mat NamedTensor::to_mat() const {
  if (dims.size() != 2) throw FormatError("tensor " + name + ": expected rank 2");
  Mat m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

Vec NamedTensor::to_vec() const {
  if (dims.size() != 1) throw FormatError("tensor " + name + ": expected rank 1");
  Vec v(static_cast<Eigen::Index>(dims[0]));
  std::copy(values.begin(), values.end(), v.data());
  return v;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ostringstream os(std::ios::binary);
  os.write("PSRM", 4);
  util::write_pod(os, kCheckpointVersion);
  for (const NamedTensor& t : tensors) {
    std::uint64_t count = 1;
    for (auto d : t.dims) count *= d;
    if (count != t.values.size()) throw DimensionError("checkpoint tensor " + t.name + ": dims/values mismatch");
    util::write_pod(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    util::write_pod(os, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) util::write_pod(os, d);
    os.write(reinterpret_cast<const char*>(t.values.data()),
             static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  }
  util::write_file_atomic(path, os.str());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = util::read_file(path);
  std::istringstream is(bytes, std::ios::binary);
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "PSRM") {
    throw FormatError(path.string() + ": not a parameter checkpoint (bad magic)");
  }
  std::uint32_t version = 0;
  if (!util::read_pod(is, version) || version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::vector<NamedTensor> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    NamedTensor t;
    std::uint32_t len = 0, rank = 0;
    if (!util::read_pod(is, len)) throw FormatError(path.string() + ": truncated tensor header");
    t.name.resize(len);
    if (!is.read(t.name.data(), len)) throw FormatError(path.string() + ": truncated tensor name");
    if (!util::read_pod(is, rank) || rank > 8) throw FormatError(path.string() + ": bad rank for " + t.name);
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint64_t d = 0;
      if (!util::read_pod(is, d)) throw FormatError(path.string() + ": truncated dims for " + t.name);
      t.dims.push_back(d);
      count *= d;
    }
    if (count > bytes.size()) throw FormatError(path.string() + ": implausible size for " + t.name);
    t.values.resize(count);
    if (!is.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
      throw FormatError(path.string() + ": truncated values for " + t.name);
    }
    out.push_back(std::move(t));
  }
  return out;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t;
  }
  throw FormatError("checkpoint has no tensor named " + name);
}

bool has_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

}  // namespace psr::nn
