#pragma once

// Quantum phase estimation simulated at the outcome-distribution level.
//
// For a unitary U and unit start state written over eigencomponents
// (theta_j, w_j), an M-point estimation run lands in bin k with probability
// sum_j w_j * F_M(theta_j - 2*pi*k/M), where F_M is the standard kernel
// sin^2(Mx/2) / (M^2 sin^2(x/2)). No ancilla registers are simulated: the
// algorithms only consume the estimate's error law. One estimation call
// collapses onto a single eigencomponent and then medians several kernel
// reads of that component, the usual amplification argument.
//
// Costs are charged in controlled-U applications: M per kernel read.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qwalk/errors.hpp"
#include "qwalk/rng.hpp"

namespace qwalk {

inline constexpr double kPi = 3.14159265358979323846;

// wrap into (-pi, pi]
inline double wrap_phase(double x) {
  x = std::fmod(x, 2.0 * kPi);
  if (x <= -kPi) x += 2.0 * kPi;
  if (x > kPi) x -= 2.0 * kPi;
  return x;
}

inline double circ_dist(double a, double b) { return std::abs(wrap_phase(a - b)); }

// F_M(x) = sin^2(Mx/2) / (M^2 sin^2(x/2)); F_M(0) = 1
inline double qpe_kernel(double x, long long m) {
  x = wrap_phase(x);
  double s = std::sin(0.5 * x);
  if (std::abs(s) < 1e-12) return 1.0;
  double t = std::sin(0.5 * static_cast<double>(m) * x) / (static_cast<double>(m) * s);
  return t * t;
}

// Start-state decomposition over eigenphases of a unitary: phases in
// (-pi, pi] with weights |<psi_j|start>|^2 summing to 1.
struct PhaseProfile {
  std::vector<double> phases;
  std::vector<double> weights;

  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  // smallest nonzero |phase| carrying weight (diagnostic)
  double min_nonzero_phase(double tol = 1e-8) const {
    double best = kPi;
    for (std::size_t j = 0; j < phases.size(); ++j)
      if (std::abs(phases[j]) > tol && weights[j] > 1e-15) best = std::min(best, std::abs(phases[j]));
    return best;
  }
};

// Dense route: Schur form of U gives an orthonormal eigensystem, so the
// weights are exact projections even across degenerate eigenspaces.
inline PhaseProfile phase_profile(const Eigen::MatrixXcd& u_mat, const Eigen::VectorXcd& start) {
  if (u_mat.rows() != u_mat.cols() || u_mat.rows() != start.size())
    throw DomainError("unitary and start state dimensions disagree");
  double unit_err = (u_mat.adjoint() * u_mat - Eigen::MatrixXcd::Identity(u_mat.rows(), u_mat.cols()))
                        .cwiseAbs()
                        .maxCoeff();
  if (unit_err > 1e-10) throw DomainError("operator is not unitary to 1e-10");
  if (std::abs(start.norm() - 1.0) > 1e-9) throw DomainError("start state must be unit norm");

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(u_mat);
  if (schur.info() != Eigen::Success) throw NumericError("Schur decomposition failed");
  const auto& t = schur.matrixT();
  double offdiag = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = i + 1; j < t.cols(); ++j) offdiag = std::max(offdiag, std::abs(t(i, j)));
  if (offdiag > 1e-8) throw NumericError("eigensystem of a non-normal operator");

  Eigen::VectorXcd c = schur.matrixU().adjoint() * start;
  PhaseProfile p;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    double w = std::norm(c[j]);
    if (w < 1e-15) continue;
    p.phases.push_back(std::arg(t(j, j)));
    p.weights.push_back(w);
  }
  return p;
}

struct QpeConfig {
  int precision_bits = 4;  // window M = 2^b
  double delta_est = 0.1;
  double epsilon_est = 0.1;

  // b = ceil(log2(2*pi/delta)) + 2 padding bits; median of
  // 2*ceil(ln(1/eps)) + 1 kernel reads
  static QpeConfig for_target(double delta, double eps) {
    if (!(delta > 0.0)) throw ParameterError("delta_est must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("epsilon_est must lie in (0,1)");
    int b = static_cast<int>(std::ceil(std::log2(2.0 * kPi / delta))) + 2;
    b = std::max(b, 1);
    if (b > 24) throw ParameterError("delta_est below the desk-scale window (needs > 2^24 bins)");
    return {b, delta, eps};
  }

  long long window() const { return 1LL << precision_bits; }
  int median_runs() const {
    return 2 * static_cast<int>(std::ceil(std::log(1.0 / epsilon_est))) + 1;
  }
};

inline Eigen::VectorXd qpe_distribution(const PhaseProfile& p, const QpeConfig& cfg) {
  long long m = cfg.window();
  Eigen::VectorXd pmf = Eigen::VectorXd::Zero(m);
  for (std::size_t j = 0; j < p.phases.size(); ++j)
    for (long long k = 0; k < m; ++k)
      pmf[k] += p.weights[j] * qpe_kernel(p.phases[j] - 2.0 * kPi * k / m, m);
  if (std::abs(pmf.sum() - 1.0) > 1e-9)
    throw NumericError("qpe distribution does not sum to one");
  return pmf;
}

inline Eigen::VectorXd qpe_distribution(const Eigen::MatrixXcd& u_mat, const Eigen::VectorXcd& start,
                                        const QpeConfig& cfg) {
  return qpe_distribution(phase_profile(u_mat, start), cfg);
}

// Kernel read sampler for one eigenphase: the displacement d = k - round
// position has distribution sin^2(pi f) / (M sin(pi (f - d)/M))^2, built
// once and inverse-transformed per draw.
class KernelSampler {
public:
  KernelSampler(double theta, long long m) : m_(m) {
    double pos = wrap_phase(theta) * static_cast<double>(m) / (2.0 * kPi);
    z_ = std::llround(pos);
    double f = pos - static_cast<double>(z_);
    if (std::abs(f) < 1e-13) {
      dyadic_ = true;
      return;
    }
    cdf_.resize(static_cast<std::size_t>(m));
    double s = std::sin(kPi * f);
    double acc = 0.0;
    for (long long t = 0; t < m; ++t) {
      double d = static_cast<double>(t - m / 2);
      double den = static_cast<double>(m) * std::sin(kPi * (f - d) / static_cast<double>(m));
      acc += (s * s) / (den * den);
      cdf_[static_cast<std::size_t>(t)] = acc;
    }
  }

  // one signed grid phase 2*pi*k/M in (-pi, pi]
  double draw(RngStream& rng) const {
    long long bin = z_;
    if (!dyadic_) {
      double u = rng.uniform() * cdf_.back();
      auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
      bin = z_ + (static_cast<long long>(it - cdf_.begin()) - m_ / 2);
    }
    bin %= m_;
    if (bin < 0) bin += m_;
    return wrap_phase(2.0 * kPi * static_cast<double>(bin) / static_cast<double>(m_));
  }

private:
  long long m_;
  long long z_ = 0;
  bool dyadic_ = false;
  std::vector<double> cdf_;
};

// robust circular location: the sample minimizing total circular distance
inline double circular_median(const std::vector<double>& v) {
  double best = v.front();
  double best_cost = std::numeric_limits<double>::infinity();
  for (double a : v) {
    double cost = 0.0;
    for (double b : v) cost += circ_dist(a, b);
    if (cost < best_cost) {
      best_cost = cost;
      best = a;
    }
  }
  return best;
}

// one raw estimation read: collapse onto a component, then one kernel draw
inline double sample_qpe_outcome(const PhaseProfile& p, const QpeConfig& cfg, RngStream& rng) {
  double u = rng.uniform() * p.weight_sum();
  std::size_t j = 0;
  double acc = 0.0;
  for (; j + 1 < p.weights.size(); ++j) {
    acc += p.weights[j];
    if (u <= acc) break;
  }
  return KernelSampler(p.phases[j], cfg.window()).draw(rng);
}

struct PhaseEstimate {
  double theta_hat = 0.0;
  double branch_phase = 0.0;  // simulation diagnostic: the collapsed eigenphase
  long long controlled_u = 0;
};

inline PhaseEstimate estimate_phase_once(const PhaseProfile& p, const QpeConfig& cfg,
                                         RngStream& rng) {
  if (p.phases.empty()) throw DomainError("empty phase profile");
  double total = p.weight_sum();
  if (std::abs(total - 1.0) > 1e-6) throw DomainError("phase profile weights must sum to one");

  double u = rng.uniform() * total;
  std::size_t j = 0;
  double acc = 0.0;
  for (; j < p.weights.size(); ++j) {
    acc += p.weights[j];
    if (u <= acc) break;
  }
  if (j == p.weights.size()) j = p.weights.size() - 1;

  int runs = cfg.median_runs();
  KernelSampler sampler(p.phases[j], cfg.window());
  std::vector<double> reads(static_cast<std::size_t>(runs));
  for (auto& r : reads) r = sampler.draw(rng);

  PhaseEstimate e;
  e.theta_hat = circular_median(reads);
  e.branch_phase = p.phases[j];
  e.controlled_u = static_cast<long long>(runs) * cfg.window();
  return e;
}

struct MinPhaseConfig {
  double c_overlap = 4.0 / 9.0;  // lower bound on squared overlap with the +-theta_min plane
  double delta_min = 0.01;
  double epsilon_min = 0.05;

  MinPhaseConfig(double c, double delta, double eps) : c_overlap(c), delta_min(delta), epsilon_min(eps) {
    if (!(c > 0.0 && c <= 1.0)) throw ParameterError("overlap bound must lie in (0,1]");
    if (!(delta > 0.0)) throw ParameterError("delta_min must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("epsilon_min must lie in (0,1)");
  }

  int repetitions() const {
    return std::max(1, static_cast<int>(std::ceil((1.0 / c_overlap) * std::log(2.0 / epsilon_min))));
  }
  QpeConfig per_run() const {
    int t = repetitions();
    return QpeConfig::for_target(delta_min, epsilon_min / (2.0 * t));
  }
};

struct MinPhaseResult {
  double theta_hat = 0.0;
  long long controlled_u = 0;
};

// t = ceil((1/C) ln(2/eps_min)) estimation runs, each at (delta_min,
// eps_min/(2t)); the reported value is the smallest absolute estimate.
// Requires the start state to be orthogonal to the 1-eigenspace with
// squared overlap >= C on the +-theta_min pair; not checkable at runtime.
inline MinPhaseResult estimate_min_phase(const PhaseProfile& p, const MinPhaseConfig& cfg,
                                         RngStream& rng) {
  int t = cfg.repetitions();
  QpeConfig per_run = cfg.per_run();
  MinPhaseResult r;
  r.theta_hat = kPi;
  for (int i = 0; i < t; ++i) {
    PhaseEstimate e = estimate_phase_once(p, per_run, rng);
    r.theta_hat = std::min(r.theta_hat, std::abs(e.theta_hat));
    r.controlled_u += e.controlled_u;
  }
  return r;
}

}  // namespace qwalk
