#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "circcal/camera.hpp"

namespace circcal {

/// Which groups of the rig vector the optimizer may move. Fixed entries keep
/// their initial value.
struct ParameterMask {
  bool yaw = true;
  bool pitch = true;
  bool trans = true;
  bool rolls = true;

  bool operator==(const ParameterMask&) const = default;
};

struct ESConfig {
  int population_size = 0;  // 0 selects 4 + floor(3 ln dim)
  double initial_sigma_angles = 0.05 * 3.14159265358979323846;  // rad
  double initial_sigma_trans = 0.05;                            // mm
  int max_generations = 1000;
  double tol = 1e-6;        // stop when generation-best fitness spans less than this over `window` generations
  int window = 10;
  std::uint64_t seed = 1;
  ParameterMask free;
  int workers = 1;          // concurrent candidate evaluations per generation
};

/// Throws kInvalidParameter for out-of-range settings.
void CheckESConfig(const ESConfig& config);

enum class Convergence { kConverged, kMaxGenerations };

struct CalibrationResult {
  RigParams theta_star;
  double final_loglik = 0.0;
  int generations_used = 0;
  Convergence convergence = Convergence::kMaxGenerations;
  std::vector<double> history;  // best-so-far fitness after each generation
  long evaluations = 0;
};

/// theta0 = [0, 0, 0, delta * (1 .. N-1)]. Throws kInvalidParameter for N < 2.
RigParams InitializeTheta(int view_count, double delta_omega);

/// Objective to maximise. May be called concurrently; must be pure. Exceptions
/// and non-finite returns rank a candidate as worst.
using Objective = std::function<double(const RigParams&)>;

/// (mu/mu_w, lambda) CMA-ES maximising `objective` from theta0. Coordinates are
/// scaled by their initial sigmas so that a single step size covers angles and
/// translation. Reproducible from config.seed for any worker count.
CalibrationResult Calibrate(const Objective& objective, const RigParams& theta0, const ESConfig& config);

/// Default population size for a problem dimension.
int DefaultPopulationSize(int dimension);

}  // namespace circcal
