#include "psr/nn/linalg.hpp"

#include <cmath>
#include <string>

#include "psr/errors.hpp"

namespace psr::nn {

namespace {

// Deterministic, non-degenerate start vector. Plain ones can be orthogonal to
// the dominant right singular vector (e.g. for [[1,-1]]).
Vec default_start(Eigen::Index n) {
  Vec v(n);
  std::uint64_t s = 0x9E3779B97F4A7C15ull;
  for (Eigen::Index i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v[i] = 0.5 + static_cast<double>(s % 1000003) / 1000003.0;
  }
  return v.normalized();
}

}  // namespace

SpectralResult spectral_decomposition(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                      const PowerIterationOptions& opts,
                                      const Vec* warm_start) {
  SpectralResult r;
  const Eigen::Index cols = m.cols();
  r.u = Vec::Zero(m.rows());
  r.v = Vec::Zero(cols);
  if (m.size() == 0) return r;

  Vec v;
  if (warm_start != nullptr && warm_start->size() == cols && warm_start->norm() > 0.0) {
    v = warm_start->normalized();
  } else {
    v = default_start(cols);
  }

  Vec mv = m * v;
  for (int it = 0; it < opts.iters; ++it) {
    Vec w = m.transpose() * mv;
    const double wn = w.norm();
    if (wn == 0.0) {
      // v is in the null space; either M == 0 or a degenerate start.
      if (m.norm() == 0.0) return r;
      v = default_start(cols);
      mv = m * v;
      continue;
    }
    const Vec next = w / wn;
    const double step = (next - v).norm();
    v = next;
    mv = m * v;
    if (step <= opts.tol) break;
  }
  r.sigma = mv.norm();
  r.v = v;
  if (r.sigma > 0.0) r.u = mv / r.sigma;
  return r;
}

double spectral_norm(const Mat& m, const PowerIterationOptions& opts) {
  return spectral_decomposition(m, opts).sigma;
}

Mat uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat w(rows, cols);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

Vec uniform_init_vec(Eigen::Index n, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Vec b(n);
  for (Eigen::Index i = 0; i < n; ++i) b[i] = dist(rng);
  return b;
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

void require_dims(Eigen::Index got, Eigen::Index want, std::string_view what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace psr::nn
