#pragma once

#include <span>
#include <vector>

#include "psr/model/observer_predictor.hpp"
#include "psr/nn/linalg.hpp"

namespace psr::data {

using model::Command;

/// Degree-d Bezier curve in command space; d = points.size() - 1.
struct CommandCurve {
  std::vector<Command> points;
  double duration = 0.0;  // seconds covered by s in [0, 1]

  int degree() const { return static_cast<int>(points.size()) - 1; }
};

/// Bernstein-basis evaluation. Throws DomainError for s outside [0, 1] or an
/// empty curve.
Command bezier_eval(const CommandCurve& curve, double s);

/// Unchecked Bernstein evaluation; s may lie outside [0, 1] (extrapolation).
Command bezier_point(std::span<const Command> points, double s);

/// Control points of the same polynomial restricted to [a, b] and
/// re-parameterised to [0, 1]. Computed by blossoming, so b > 1 extrapolates.
std::vector<Command> bezier_subsegment(std::span<const Command> points, double a, double b);

double binomial(int n, int k);

}  // namespace psr::data
