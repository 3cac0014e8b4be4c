#pragma once

// Retarded differential equations with pointwise and distributed delays, and a
// fixed-step RK4 integrator with cubic-Hermite dense output.

#include "krasovskii/histories.hpp"
#include "krasovskii/numerics.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace krasovskii {

/// B(θ) on [−h_M, 0], either Σₖ Cₖ θᵏ or piecewise-linear between uniform samples.
class DistributedKernel {
 public:
  static DistributedKernel constant(const Matrix& b);
  static DistributedKernel polynomial(std::vector<Matrix> coefficients);
  /// values[k] is B at θ = −h_M + k·h_M/(m−1).
  static DistributedKernel sampled(double h_max, std::vector<Matrix> values);

  [[nodiscard]] Matrix operator()(double theta) const;
  [[nodiscard]] Eigen::Index rows() const;
  [[nodiscard]] Eigen::Index cols() const;
  [[nodiscard]] bool is_sampled() const { return sampled_; }
  [[nodiscard]] const std::vector<Matrix>& data() const { return data_; }

 private:
  bool sampled_ = false;
  double h_max_ = 0.0;
  std::vector<Matrix> data_;
};

struct PointwiseTerm {
  Matrix B;
  std::size_t delay_index = 0;
};

struct DistributedTerm {
  DistributedKernel kernel;
  std::size_t delay_index = 0;
};

/// Constants of ‖x‖ ≤ g_alpha ⇒ ‖g(x)‖ ≤ g_beta·‖x‖^{1+g_gamma}.
struct GrowthCertificate {
  double g_alpha = 1.0;
  double g_beta = 1.0;
  double g_gamma = 1.0;
};

class Nonlinearity {
 public:
  enum class Kind { Cubic, ComponentwisePolynomial };

  /// g(x) = scale·x·‖x‖².
  static Nonlinearity cubic(double scale, GrowthCertificate growth);
  /// gᵢ(x) = Σₖ coefficients[k]·xᵢᵏ.
  static Nonlinearity componentwise_polynomial(std::vector<double> coefficients, GrowthCertificate growth);

  [[nodiscard]] Vector operator()(const Vector& x) const;
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const GrowthCertificate& growth() const { return growth_; }
  [[nodiscard]] const std::vector<double>& coefficients() const { return coefficients_; }
  /// True when g is linear (hence globally Lipschitz).
  [[nodiscard]] bool is_linear() const;

 private:
  Kind kind_ = Kind::Cubic;
  std::vector<double> coefficients_;  // {scale} for Cubic
  GrowthCertificate growth_;
};

/// ẋ(t) = A x(t) + Σ Bᵢ x(t − hᵢ(t)) + Σ ∫_{−hᵢ(t)}^0 Bᵢ(θ) x(t+θ) dθ + g(x(t)).
class SystemModel {
 public:
  SystemModel(double h_max, Matrix a, std::vector<PointwiseTerm> pointwise = {},
              std::vector<DistributedTerm> distributed = {}, std::optional<Nonlinearity> nonlinearity = std::nullopt);

  /// ẋ = M x(t) + N x(t − h(t)).
  static SystemModel delayed_linear(double h_max, const Matrix& m, const Matrix& n);

  [[nodiscard]] double h_max() const { return h_max_; }
  [[nodiscard]] Eigen::Index dim() const { return a_.rows(); }
  [[nodiscard]] const Matrix& a() const { return a_; }
  [[nodiscard]] const std::vector<PointwiseTerm>& pointwise() const { return pointwise_; }
  [[nodiscard]] const std::vector<DistributedTerm>& distributed() const { return distributed_; }
  [[nodiscard]] const std::optional<Nonlinearity>& nonlinearity() const { return nonlinearity_; }
  /// Number of delay components the model reads (max delay index + 1).
  [[nodiscard]] std::size_t required_delays() const;
  [[nodiscard]] bool is_linear() const { return !nonlinearity_ || nonlinearity_->is_linear(); }

  /// Right-hand side at time t, given the current state and a lookup for past
  /// states x(s), s ∈ [t − h_M, t].
  [[nodiscard]] Vector rhs(double t, const Vector& x, const std::function<Vector(double)>& past,
                           const DelaySignal& zeta, int distributed_panels = 16) const;

 private:
  double h_max_;
  Matrix a_;
  std::vector<PointwiseTerm> pointwise_;
  std::vector<DistributedTerm> distributed_;
  std::optional<Nonlinearity> nonlinearity_;
};

struct GrowthCheck {
  bool holds = true;
  double worst_ratio = 0.0;  // max ‖g(x)‖ / (g_beta‖x‖^{1+g_gamma}) over the samples
};

/// Samples x uniformly in the ball ‖x‖ ≤ g_alpha and tests the growth bound.
[[nodiscard]] GrowthCheck verify_growth(const SystemModel& model, std::uint64_t seed, int samples = 1000);

struct SolverOptions {
  double dt = 1e-3;
  double blowup_threshold = 1e8;
  int overlap_iterations = 5;
  int distributed_panels = 16;
};

enum class TrajectoryStatus { Complete, BlewUp };

/// Dense solution on [−h_M, t_end]: the history followed by Hermite segments.
class Trajectory {
 public:
  Trajectory(HistoryFunction history, std::shared_ptr<const HermitePath> path, double horizon,
             TrajectoryStatus status, double dt);

  [[nodiscard]] const HistoryFunction& history() const { return history_; }
  [[nodiscard]] const HermitePath& path() const { return *path_; }
  [[nodiscard]] const std::shared_ptr<const HermitePath>& shared_path() const { return path_; }
  [[nodiscard]] double h_max() const { return history_.h_max(); }
  [[nodiscard]] Eigen::Index dim() const { return history_.dim(); }
  [[nodiscard]] double horizon() const { return horizon_; }
  /// T when complete, t_f when blown up.
  [[nodiscard]] double end_time() const { return path_->end(); }
  [[nodiscard]] TrajectoryStatus status() const { return status_; }
  [[nodiscard]] bool blew_up() const { return status_ == TrajectoryStatus::BlewUp; }
  [[nodiscard]] double dt() const { return dt_; }

  [[nodiscard]] Vector state(double t) const;
  [[nodiscard]] Vector derivative(double t) const;
  [[nodiscard]] HistoryFunction window(double t) const;
  [[nodiscard]] double sup_norm_on(double a, double b) const;

 private:
  HistoryFunction history_;
  std::shared_ptr<const HermitePath> path_;
  double horizon_;
  TrajectoryStatus status_;
  double dt_;
};

/// Classical RK4 with Hermite dense output. Lookups falling inside the current
/// step are resolved by fixed-point iteration on that step's Hermite segment.
[[nodiscard]] Trajectory integrate(const SystemModel& model, const DelaySignal& zeta, const HistoryFunction& x0,
                                   double horizon, const SolverOptions& opts = {});

[[nodiscard]] inline Vector eval_state(const Trajectory& traj, double t) { return traj.state(t); }
[[nodiscard]] inline HistoryFunction window(const Trajectory& traj, double t) { return traj.window(t); }
[[nodiscard]] inline double sup_norm_on(const Trajectory& traj, double a, double b) { return traj.sup_norm_on(a, b); }

/// CSV with header t,x_1..x_n,dx_1..dx_n, one row per solver node on [0, t_end].
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace krasovskii
