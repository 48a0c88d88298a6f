#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mapalign/error.hpp"
#include "mapalign/geometry.hpp"

namespace mapalign {

struct DescentParams {
  double initial_step = 0.1;
  double decay = 0.99;
  int max_iters = 500;
  double tolerance = 1e-4;
  int max_halvings = 20;

  void validate() const {
    if (!(initial_step > 0.0)) throw Error("invalid_params", "initial step must be > 0");
    if (!(decay > 0.0 && decay < 1.0)) throw Error("invalid_params", "step decay must lie in (0, 1)");
    if (max_iters < 0) throw Error("invalid_params", "max_iters must be >= 0");
    if (!(tolerance > 0.0)) throw Error("invalid_params", "convergence tolerance must be > 0");
  }
};

struct DescentTrace {
  std::vector<double> energy;  // energy[0] is the starting energy
  int iterations = 0;
  bool converged = false;
};

/// Monotone steepest descent. Each step moves every node along its negative
/// gradient, scaled so the fastest node travels exactly `step`. A trial is
/// accepted only if the energy does not increase; otherwise the step halves,
/// and after `max_halvings` failed halvings the run ends. Accepted steps
/// shrink by `decay`. Stops once the largest displacement falls below
/// `tolerance`. `energy` must return +inf for infeasible configurations.
template <class EnergyFn, class GradientFn>
DescentTrace monotone_descent(std::vector<Vec2>& pos, EnergyFn&& energy, GradientFn&& gradient,
                              const DescentParams& params) {
  DescentTrace trace;
  double current = energy(pos);
  trace.energy.push_back(current);
  double step = params.initial_step;
  std::vector<Vec2> grad(pos.size());
  std::vector<Vec2> trial(pos.size());

  for (int it = 0; it < params.max_iters; ++it) {
    gradient(pos, grad);
    double gmax = 0.0;
    for (const auto& g : grad) gmax = std::max(gmax, g.norm());
    if (gmax == 0.0 || !std::isfinite(gmax)) {
      trace.converged = gmax == 0.0;
      break;
    }
    bool accepted = false;
    double trial_energy = current;
    for (int h = 0; h <= params.max_halvings; ++h) {
      const double scale = step / gmax;
      for (std::size_t i = 0; i < pos.size(); ++i) trial[i] = pos[i] - grad[i] * scale;
      trial_energy = energy(trial);
      if (trial_energy <= current) {
        accepted = true;
        break;
      }
      if (h < params.max_halvings) step *= 0.5;
    }
    if (!accepted) break;
    pos.swap(trial);
    current = trial_energy;
    trace.energy.push_back(current);
    trace.iterations = it + 1;
    if (step < params.tolerance) {
      trace.converged = true;
      break;
    }
    step *= params.decay;
  }
  return trace;
}

}  // namespace mapalign
