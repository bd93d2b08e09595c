#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "riocpd/correlation.hpp"
#include "riocpd/spd.hpp"

namespace riocpd {

/// How particle state turns into observed series.
///  - CoordinateProjection: one series per particle, a single state
///    component (the stream dimension equals the particle count).
///  - ParticleState: four series per particle, [x, y, vx, vy] stacked.
enum class ObservationLayout { CoordinateProjection, ParticleState };

/// State component observed by CoordinateProjection.
enum class StateComponent { PositionX, PositionY, VelocityX, VelocityY };

/// A 2-D particle-spring system in a reflecting box. Particles have unit
/// mass; connected pairs attract with Hooke force -k (x_i - x_j).
/// Unset positions/velocities/adjacency are sampled from the run seed.
///
/// Defaults are tuned so that windowed correlations are informative at small
/// window sizes: stiff springs sampled every `substeps` integration steps
/// decorrelate consecutive observations, and the velocity projection reacts
/// to connectivity rewiring within one sample.
struct SpringSystem {
  int n_particles = 5;
  Matrix positions;            // n x 2; empty -> uniform in the inner half of the box
  Matrix velocities;           // n x 2; empty -> N(0, init_speed_std^2), COM removed
  std::vector<char> adjacency; // n*n row-major, symmetric, zero diagonal; empty -> pairs at p=0.5
  double spring_constant = 12.0;
  double dt = 0.01;
  int substeps = 12; // integration steps per observed sample
  double box_half_width = 1.0;
  double noise_std = 0.002;
  double init_speed_std = 0.2;
  ObservationLayout layout = ObservationLayout::CoordinateProjection;
  StateComponent projection = StateComponent::VelocityX;
};

enum class ChangeKind { Connection, Speed, Location };

inline const char* change_kind_name(ChangeKind k) {
  switch (k) {
    case ChangeKind::Connection: return "connection";
    case ChangeKind::Speed: return "speed";
    default: return "location";
  }
}

/// One scheduled regime change. `magnitude` is the perturbation std for
/// Speed/Location changes and is ignored for Connection.
struct ChangeSpec {
  ChangeKind kind = ChangeKind::Connection;
  Index at = 0;
  double magnitude = 5.0;
};

/// A generated stream with its ground truth.
struct LabeledStream {
  SeriesFrame frame;
  std::vector<Index> true_cps;
  std::map<std::string, std::string> meta;
};

/// Stateful integrator behind simulate_springs; exposed so tests can watch
/// energy and adjacency directly.
class SpringSimulator {
public:
  SpringSimulator(SpringSystem cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
    const int n = cfg_.n_particles;
    if (n < 2) throw ContractError("SpringSimulator: need at least two particles");
    if (cfg_.dt <= 0.0 || cfg_.spring_constant < 0.0 || cfg_.box_half_width <= 0.0 ||
        cfg_.noise_std < 0.0 || cfg_.substeps < 1)
      throw ContractError("SpringSimulator: invalid dynamics parameters");
    if (cfg_.positions.size() == 0) {
      // start away from the walls; springs only bound relative motion
      std::uniform_real_distribution<double> box(-0.5 * cfg_.box_half_width,
                                                 0.5 * cfg_.box_half_width);
      cfg_.positions.resize(n, 2);
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < 2; ++d) cfg_.positions(i, d) = box(rng_);
    }
    if (cfg_.velocities.size() == 0) {
      std::normal_distribution<double> speed(0.0, cfg_.init_speed_std);
      cfg_.velocities.resize(n, 2);
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < 2; ++d) cfg_.velocities(i, d) = speed(rng_);
      // remove the free center-of-mass drift so the cluster stays off the walls
      cfg_.velocities.rowwise() -= cfg_.velocities.colwise().mean();
    }
    if (cfg_.positions.rows() != n || cfg_.positions.cols() != 2 ||
        cfg_.velocities.rows() != n || cfg_.velocities.cols() != 2)
      throw ContractError("SpringSimulator: state must be n x 2");
    if (cfg_.adjacency.empty()) {
      cfg_.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
      sample_adjacency(cfg_.adjacency);
    }
    validate_adjacency(cfg_.adjacency);
    clamp_into_box();
  }

  /// Semi-implicit Euler step: velocities from spring forces, then positions,
  /// then elastic reflection at the walls.
  void step() {
    const int n = cfg_.n_particles;
    Matrix force = Matrix::Zero(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (!connected(i, j)) continue;
        Eigen::RowVector2d f = -cfg_.spring_constant * (cfg_.positions.row(i) - cfg_.positions.row(j));
        force.row(i) += f;
        force.row(j) -= f;
      }
    cfg_.velocities += cfg_.dt * force;
    cfg_.positions += cfg_.dt * cfg_.velocities;
    reflect_walls();
  }

  void apply(const ChangeSpec& change) {
    const int n = cfg_.n_particles;
    switch (change.kind) {
      case ChangeKind::Connection: {
        std::vector<char> fresh(cfg_.adjacency.size(), 0);
        do {
          sample_adjacency(fresh);
        } while (fresh == cfg_.adjacency);
        cfg_.adjacency = fresh;
        break;
      }
      case ChangeKind::Speed: {
        std::normal_distribution<double> kick(0.0, change.magnitude);
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < 2; ++d) cfg_.velocities(i, d) += kick(rng_);
        break;
      }
      case ChangeKind::Location: {
        std::normal_distribution<double> shift(0.0, change.magnitude);
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < 2; ++d) cfg_.positions(i, d) += shift(rng_);
        clamp_into_box();
        break;
      }
    }
  }

  /// Observation of the current state plus i.i.d. Gaussian noise.
  Eigen::RowVectorXd observe() {
    const int n = cfg_.n_particles;
    Eigen::RowVectorXd row(observed_dims());
    if (cfg_.layout == ObservationLayout::CoordinateProjection) {
      for (int i = 0; i < n; ++i) {
        switch (cfg_.projection) {
          case StateComponent::PositionX: row(i) = cfg_.positions(i, 0); break;
          case StateComponent::PositionY: row(i) = cfg_.positions(i, 1); break;
          case StateComponent::VelocityX: row(i) = cfg_.velocities(i, 0); break;
          case StateComponent::VelocityY: row(i) = cfg_.velocities(i, 1); break;
        }
      }
    } else {
      for (int i = 0; i < n; ++i) {
        row(4 * i + 0) = cfg_.positions(i, 0);
        row(4 * i + 1) = cfg_.positions(i, 1);
        row(4 * i + 2) = cfg_.velocities(i, 0);
        row(4 * i + 3) = cfg_.velocities(i, 1);
      }
    }
    if (cfg_.noise_std > 0.0) {
      std::normal_distribution<double> noise(0.0, cfg_.noise_std);
      for (Eigen::Index j = 0; j < row.size(); ++j) row(j) += noise(rng_);
    }
    return row;
  }

  Eigen::Index observed_dims() const {
    return cfg_.layout == ObservationLayout::CoordinateProjection ? cfg_.n_particles
                                                                  : 4 * cfg_.n_particles;
  }

  /// Kinetic plus spring potential energy of the current state.
  double energy() const {
    double e = 0.5 * cfg_.velocities.squaredNorm();
    for (int i = 0; i < cfg_.n_particles; ++i)
      for (int j = i + 1; j < cfg_.n_particles; ++j)
        if (connected(i, j))
          e += 0.5 * cfg_.spring_constant *
               (cfg_.positions.row(i) - cfg_.positions.row(j)).squaredNorm();
    return e;
  }

  bool bounced() const { return bounced_; }
  const Matrix& positions() const { return cfg_.positions; }
  const Matrix& velocities() const { return cfg_.velocities; }
  const std::vector<char>& adjacency() const { return cfg_.adjacency; }
  const SpringSystem& config() const { return cfg_; }

private:
  bool connected(int i, int j) const {
    return cfg_.adjacency[static_cast<std::size_t>(i) * cfg_.n_particles + j] != 0;
  }

  void sample_adjacency(std::vector<char>& adj) {
    const int n = cfg_.n_particles;
    std::bernoulli_distribution coin(0.5);
    std::fill(adj.begin(), adj.end(), 0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const char bit = coin(rng_) ? 1 : 0;
        adj[static_cast<std::size_t>(i) * n + j] = bit;
        adj[static_cast<std::size_t>(j) * n + i] = bit;
      }
  }

  void validate_adjacency(const std::vector<char>& adj) const {
    const int n = cfg_.n_particles;
    if (adj.size() != static_cast<std::size_t>(n) * n)
      throw ContractError("SpringSimulator: adjacency must be n x n");
    for (int i = 0; i < n; ++i) {
      if (adj[static_cast<std::size_t>(i) * n + i] != 0)
        throw ContractError("SpringSimulator: adjacency diagonal must be zero");
      for (int j = 0; j < n; ++j)
        if (adj[static_cast<std::size_t>(i) * n + j] != adj[static_cast<std::size_t>(j) * n + i])
          throw ContractError("SpringSimulator: adjacency must be symmetric");
    }
  }

  void reflect_walls() {
    const double b = cfg_.box_half_width;
    for (int i = 0; i < cfg_.n_particles; ++i)
      for (int d = 0; d < 2; ++d) {
        double& x = cfg_.positions(i, d);
        while (x < -b || x > b) {
          bounced_ = true;
          x = x > b ? 2.0 * b - x : -2.0 * b - x;
          cfg_.velocities(i, d) = -cfg_.velocities(i, d);
        }
      }
  }

  void clamp_into_box() {
    const double b = cfg_.box_half_width;
    for (int i = 0; i < cfg_.n_particles; ++i)
      for (int d = 0; d < 2; ++d)
        cfg_.positions(i, d) = std::clamp(cfg_.positions(i, d), -b, b);
  }

  SpringSystem cfg_;
  std::mt19937_64 rng_;
  bool bounced_ = false;
};

/// Generate a labeled stream from the particle-spring system. Changes apply
/// right before their index, so observation `at` is the first sample of the
/// new regime.
inline LabeledStream simulate_springs(const SpringSystem& system, Index length,
                                      std::vector<ChangeSpec> changes, std::uint64_t seed) {
  if (length < 2) throw ContractError("simulate_springs: length must be >= 2");
  for (const ChangeSpec& c : changes)
    if (c.at <= 0 || c.at >= length)
      throw ContractError("simulate_springs: change index outside (0, length)");
  std::sort(changes.begin(), changes.end(),
            [](const ChangeSpec& a, const ChangeSpec& b) { return a.at < b.at; });

  SpringSimulator sim(system, seed);
  Matrix values(length, sim.observed_dims());
  values.row(0) = sim.observe();
  std::size_t next_change = 0;
  for (Index t = 1; t < length; ++t) {
    while (next_change < changes.size() && changes[next_change].at == t)
      sim.apply(changes[next_change++]);
    for (int s = 0; s < system.substeps; ++s) sim.step();
    values.row(t) = sim.observe();
  }

  LabeledStream out{SeriesFrame(std::move(values)), {}, {}};
  for (const ChangeSpec& c : changes) out.true_cps.push_back(c.at);
  out.meta["generator"] = "springs";
  out.meta["n_particles"] = std::to_string(system.n_particles);
  out.meta["dt"] = std::to_string(system.dt);
  out.meta["spring_constant"] = std::to_string(system.spring_constant);
  out.meta["noise_std"] = std::to_string(system.noise_std);
  out.meta["seed"] = std::to_string(seed);
  if (!changes.empty()) out.meta["change_kind"] = change_kind_name(changes.front().kind);
  return out;
}

/// Correlation matrix with one correlated pair; every other series is
/// independent.
inline Matrix single_pair_correlation(Eigen::Index dims, Eigen::Index i, Eigen::Index j,
                                      double rho) {
  if (i == j || i < 0 || j < 0 || i >= dims || j >= dims)
    throw ContractError("single_pair_correlation: bad pair");
  Matrix c = Matrix::Identity(dims, dims);
  c(i, j) = rho;
  c(j, i) = rho;
  return c;
}

/// Correlation matrix with a constant off-diagonal. Positive definite only
/// for rho in (-1/(dims-1), 1).
inline Matrix uniform_correlation(Eigen::Index dims, double rho) {
  Matrix c = Matrix::Constant(dims, dims, rho);
  c.diagonal().setOnes();
  return c;
}

/// Piecewise-stationary zero-mean Gaussian stream: one correlation matrix
/// per segment, sampled through its Cholesky factor. True change points sit
/// at the segment boundaries.
inline LabeledStream gaussian_regimes(Eigen::Index dims,
                                      const std::vector<std::pair<Index, Matrix>>& segments,
                                      std::uint64_t seed) {
  if (segments.empty()) throw ContractError("gaussian_regimes: need at least one segment");
  Index total = 0;
  std::vector<Matrix> factors;
  factors.reserve(segments.size());
  for (const auto& [len, corr] : segments) {
    if (len < 1) throw ContractError("gaussian_regimes: segment length must be >= 1");
    if (corr.rows() != dims || corr.cols() != dims)
      throw ContractError("gaussian_regimes: segment correlation has wrong dimension");
    for (Eigen::Index i = 0; i < dims; ++i)
      if (std::abs(corr(i, i) - 1.0) > 1e-9)
        throw ContractError("gaussian_regimes: segment correlation must have unit diagonal");
    factors.push_back(SpdMatrix(corr).cholesky_lower()); // validates PD
    total += len;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix values(total, dims);
  Vector z(dims);
  Index t = 0;
  std::vector<Index> cps;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (s > 0) cps.push_back(t);
    for (Index k = 0; k < segments[s].first; ++k, ++t) {
      for (Eigen::Index d = 0; d < dims; ++d) z(d) = unit(rng);
      values.row(t) = (factors[s] * z).transpose();
    }
  }
  LabeledStream out{SeriesFrame(std::move(values)), std::move(cps), {}};
  out.meta["generator"] = "gaussian";
  out.meta["segments"] = std::to_string(segments.size());
  out.meta["seed"] = std::to_string(seed);
  return out;
}

} // namespace riocpd
