#include "psr/data/bezier.hpp"

#include <cmath>

#include "psr/errors.hpp"

namespace psr::data {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Command bezier_point(std::span<const Command> points, double s) {
  const int d = static_cast<int>(points.size()) - 1;
  Command u = Command::Zero();
  for (int j = 0; j <= d; ++j) {
    const double basis = binomial(d, j) * std::pow(1.0 - s, d - j) * std::pow(s, j);
    u += basis * points[static_cast<std::size_t>(j)];
  }
  return u;
}

Command bezier_eval(const CommandCurve& curve, double s) {
  if (curve.points.empty()) throw DomainError("bezier_eval: curve has no control points");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("bezier_eval: s = " + std::to_string(s) + " outside [0, 1]");
  return bezier_point(curve.points, s);
}

namespace {

// Blossom f(t_1, ..., t_d) of the curve: De Casteljau with a different
// parameter at each level.
Command blossom(std::span<const Command> points, std::span<const double> params) {
  std::vector<Command> work(points.begin(), points.end());
  const std::size_t d = points.size() - 1;
  for (std::size_t level = 0; level < d; ++level) {
    const double t = params[level];
    for (std::size_t i = 0; i + level < d; ++i) work[i] = (1.0 - t) * work[i] + t * work[i + 1];
  }
  return work[0];
}

}  // namespace

std::vector<Command> bezier_subsegment(std::span<const Command> points, double a, double b) {
  if (points.empty()) throw DomainError("bezier_subsegment: no control points");
  const std::size_t d = points.size() - 1;
  std::vector<Command> out;
  out.reserve(points.size());
  std::vector<double> params(d);
  for (std::size_t j = 0; j <= d; ++j) {
    for (std::size_t k = 0; k < d; ++k) params[k] = (k < d - j) ? a : b;
    out.push_back(blossom(points, params));
  }
  return out;
}

}  // namespace psr::data
