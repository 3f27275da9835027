#include "circcal/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "circcal/error.hpp"
#include "circcal/parallel.hpp"

namespace circcal {

namespace {

constexpr double kWorst = -std::numeric_limits<double>::infinity();

double SafeEvaluate(const Objective& objective, const RigParams& theta) {
  try {
    const double f = objective(theta);
    return std::isfinite(f) ? f : kWorst;
  } catch (const std::exception&) {
    return kWorst;
  }
}

}  // namespace

int DefaultPopulationSize(int dimension) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(std::max(dimension, 1)))));
}

void CheckESConfig(const ESConfig& c) {
  if (c.population_size != 0 && c.population_size < 4) throw InvalidParameter("population size must be >= 4");
  if (!(c.initial_sigma_angles > 0.0) || !(c.initial_sigma_trans > 0.0))
    throw InvalidParameter("initial step sizes must be positive");
  if (c.max_generations < 1) throw InvalidParameter("max generations must be >= 1");
  if (!(c.tol > 0.0)) throw InvalidParameter("tolerance must be positive");
  if (c.window < 1) throw InvalidParameter("improvement window must be >= 1");
  if (c.workers < 1) throw InvalidParameter("worker count must be >= 1");
}

RigParams InitializeTheta(int view_count, double delta_omega) {
  if (view_count < 2) throw InvalidParameter("need at least 2 views");
  if (!std::isfinite(delta_omega)) throw InvalidParameter("rotation step must be finite");
  RigParams theta;
  theta.rolls.resize(static_cast<std::size_t>(view_count - 1));
  for (std::size_t i = 0; i < theta.rolls.size(); ++i) theta.rolls[i] = static_cast<double>(i + 1) * delta_omega;
  return theta;
}

CalibrationResult Calibrate(const Objective& objective, const RigParams& theta0, const ESConfig& config) {
  CheckESConfig(config);
  if (theta0.rolls.empty()) throw InvalidParameter("initial rig parameters need at least 2 views");

  // Map free coordinates of the flat rig vector to the search space.
  const Eigen::VectorXd base = theta0.Flatten();
  std::vector<int> free_index;
  std::vector<double> scale;
  auto add = [&](int idx, bool is_free, double s) {
    if (!is_free) return;
    free_index.push_back(idx);
    scale.push_back(s);
  };
  add(0, config.free.yaw, config.initial_sigma_angles);
  add(1, config.free.pitch, config.initial_sigma_angles);
  add(2, config.free.trans, config.initial_sigma_trans);
  for (int i = 3; i < base.size(); ++i) add(i, config.free.rolls, config.initial_sigma_angles);

  auto to_theta = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd flat = base;
    for (std::size_t d = 0; d < free_index.size(); ++d) flat[free_index[d]] = base[free_index[d]] + scale[d] * x[d];
    return RigParams::Unflatten(flat);
  };

  CalibrationResult result;
  result.theta_star = theta0;
  result.final_loglik = SafeEvaluate(objective, theta0);
  result.evaluations = 1;
  if (!std::isfinite(result.final_loglik)) throw NumericError("objective is not finite at the initial parameters");

  const int n = static_cast<int>(free_index.size());
  if (n == 0) {
    result.convergence = Convergence::kConverged;
    return result;
  }

  const int lambda = config.population_size > 0 ? config.population_size : DefaultPopulationSize(n);
  const int mu = lambda / 2;
  Eigen::VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();

  const double dn = n;
  const double cs = (mueff + 2.0) / (dn + mueff + 5.0);
  const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (dn + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mueff / dn) / (dn + 4.0 + 2.0 * mueff / dn);
  const double c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mueff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dn + 2.0) * (dn + 2.0) + mueff));
  const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  double sigma = 1.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd ps = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd pc = Eigen::VectorXd::Zero(n);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd xs(n, lambda), ys(n, lambda);
  std::vector<RigParams> candidates(static_cast<std::size_t>(lambda));
  std::vector<double> fitness(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));
  std::vector<double> generation_best;

  for (int gen = 1; gen <= config.max_generations; ++gen) {
    for (int k = 0; k < lambda; ++k) {
      Eigen::VectorXd z(n);
      for (int d = 0; d < n; ++d) z[d] = normal(rng);
      ys.col(k) = basis * diag.cwiseProduct(z);
      xs.col(k) = mean + sigma * ys.col(k);
      candidates[k] = to_theta(xs.col(k));
    }
    ParallelFor(static_cast<std::size_t>(lambda), config.workers,
                [&](std::size_t k) { fitness[k] = SafeEvaluate(objective, candidates[k]); });
    result.evaluations += lambda;

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fitness[a] > fitness[b]; });
    if (fitness[order[0]] > result.final_loglik) {
      result.final_loglik = fitness[order[0]];
      result.theta_star = candidates[order[0]];
    }
    result.history.push_back(result.final_loglik);
    result.generations_used = gen;

    // Recombination and adaptation.
    Eigen::VectorXd yw = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < mu; ++i) yw += weights[i] * ys.col(order[i]);
    mean += sigma * yw;

    const Eigen::VectorXd inv_sqrt_c_yw = basis * (basis.transpose() * yw).cwiseQuotient(diag);
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * inv_sqrt_c_yw;
    const double ps_norm = ps.norm();
    const bool hsig =
        ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gen)) < (1.4 + 2.0 / (dn + 1.0)) * chi_n;
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * yw;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) rank_mu += weights[i] * ys.col(order[i]) * ys.col(order[i]).transpose();
    const double old_weight = 1.0 - c1 - cmu + (hsig ? 0.0 : c1 * cc * (2.0 - cc));
    cov = old_weight * cov + c1 * pc * pc.transpose() + cmu * rank_mu;
    cov = 0.5 * (cov + cov.transpose()).eval();

    sigma *= std::exp((cs / ds) * (ps_norm / chi_n - 1.0));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    basis = eig.eigenvectors();
    diag = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();

    // Stagnation: the generation-best fitness varied by less than tol over the
    // last `window` generations.
    generation_best.push_back(fitness[order[0]]);
    if (gen >= config.window) {
      const auto first = generation_best.end() - config.window;
      const auto [lo, hi] = std::minmax_element(first, generation_best.end());
      if (*hi - *lo < config.tol) {
        result.convergence = Convergence::kConverged;
        break;
      }
    }
    if (!std::isfinite(sigma) || sigma * diag.maxCoeff() < 1e-14) {
      result.convergence = Convergence::kConverged;
      break;
    }
  }
  return result;
}

}  // namespace circcal
