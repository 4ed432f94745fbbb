#pragma once

// Small seeded generators for the property tests.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "psr/geometry.hpp"
#include "psr/nn/linalg.hpp"
#include "psr/nn/mlp.hpp"
#include "psr/plan/voxel_map.hpp"

namespace psr::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  nn::Mat matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    nn::Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * uniform(-1, 1);
    return m;
  }
  nn::Vec vector(Eigen::Index n, double scale = 1.0) {
    nn::Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * uniform(-1, 1);
    return v;
  }
  Eigen::Vector3d command(double limit = 0.5) {
    return {uniform(-limit, limit), uniform(-limit, limit), uniform(-limit, limit)};
  }
  std::vector<Eigen::Vector3d> commands(int n, double limit = 0.5) {
    std::vector<Eigen::Vector3d> out;
    for (int i = 0; i < n; ++i) out.push_back(command(limit));
    return out;
  }
  PlanarPose pose(double extent = 3.0) {
    return {uniform(-extent, extent), uniform(-extent, extent), uniform(-3.14159, 3.14159)};
  }

  /// Random ReLU MLP with 1..max_layers layers and widths up to max_width.
  nn::MlpParams mlp(int max_layers, int max_width, Eigen::Index in = 0, Eigen::Index out = 0) {
    const int layers = integer(1, max_layers);
    std::vector<Eigen::Index> dims;
    dims.push_back(in > 0 ? in : integer(1, max_width));
    for (int l = 0; l + 1 < layers; ++l) dims.push_back(integer(1, max_width));
    dims.push_back(out > 0 ? out : integer(1, max_width));
    nn::MlpParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      p.weights.push_back(matrix(dims[l + 1], dims[l]));
      p.biases.push_back(vector(dims[l + 1]));
    }
    return p;
  }

  /// A few random boxes inside [-extent, extent]^2 x [0, height].
  std::vector<plan::Box> boxes(int count, double extent, double height) {
    std::vector<plan::Box> out;
    for (int i = 0; i < count; ++i) {
      plan::Box b;
      b.min = {uniform(-extent, extent), uniform(-extent, extent), uniform(0.0, height / 2)};
      b.max = b.min + Eigen::Vector3d(uniform(0.05, 0.6), uniform(0.05, 0.6), uniform(0.05, height / 2));
      out.push_back(b);
    }
    return out;
  }

  nn::Rng& rng() { return rng_; }

 private:
  nn::Rng rng_;
};

/// Runs `fn` on `cases` independently seeded generators.
inline void for_all(int cases, std::uint64_t seed, const std::function<void(Gen&, int)>& fn) {
  for (int i = 0; i < cases; ++i) {
    Gen g(seed * 1000003ull + static_cast<std::uint64_t>(i));
    fn(g, i);
  }
}

}  // namespace psr::testing
