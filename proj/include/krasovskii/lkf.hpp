#pragma once

// The functional V(t) = x(t)ᵀP1x(t) + ∫_{−h_M}^0 ∫_{t+θ}^t ẋᵀQẋ ds dθ along
// trajectories, forward-difference Dini estimates, and the dissipation and
// sandwich inequalities.

#include "krasovskii/histories.hpp"
#include "krasovskii/lmi.hpp"
#include "krasovskii/solver.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace krasovskii {

/// Evaluated as the single weighted integral ∫_{t−h_M}^t (s − t + h_M)·ẋ(s)ᵀQẋ(s) ds.
/// Solver steps are integrated exactly by 3-point Gauss; history pieces use
/// Simpson with `panels` per window length. Throws std::invalid_argument("V undefined: history not in W") when t < h_M and
/// the history carries no derivative.
[[nodiscard]] double lkf_value(const Trajectory& traj, double t, const SymMatrix& p1, const SymMatrix& q,
                               int panels = 64);

/// lkf_value at each time, evaluated in parallel.
[[nodiscard]] std::vector<double> lkf_values(const Trajectory& traj, const std::vector<double>& times,
                                             const SymMatrix& p1, const SymMatrix& q, int panels = 64);

/// max over offsets o of (values[index + o] − values[index]) / (o·spacing).
/// With offsets {4, 2, 1} and spacing Δ/4 this is the max over steps {Δ, Δ/2, Δ/4}.
[[nodiscard]] double dini_upper_estimate(const std::vector<double>& values, std::size_t index, double spacing,
                                         const std::vector<std::size_t>& offsets = {4, 2, 1});

enum class DissipationMode { Pointwise, Exponential };
enum class LkfVerdictKind { Pass, DissipationViolated, SandwichViolated };

[[nodiscard]] std::string to_string(LkfVerdictKind kind);

struct LkfTrace {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> dini;
  std::vector<double> residuals;
};

struct DissipationOptions {
  DissipationMode mode = DissipationMode::Pointwise;
  double k3 = 0.0;  // exponential mode: residual D⁺V + k3·V
  int samples = 200;
  double abs_tolerance = 1e-6;
  double rel_tolerance = 1e-3;  // times max V
  int panels = 64;
};

struct DissipationReport {
  LkfTrace trace;
  LkfVerdictKind verdict = LkfVerdictKind::Pass;
  double max_residual = 0.0;
  double tolerance = 0.0;
  double max_value = 0.0;
  std::string detail;
};

/// Samples V on a uniform grid of `samples` points over [0, t_end) and checks
/// D⁺V + ω₃(‖x(t)‖) ≤ tol (pointwise) or D⁺V + k3·V ≤ tol (exponential).
/// A certificate whose P1 is not positive definite, or a V sample below
/// λ_min(P1)‖x‖², is reported as SandwichViolated.
[[nodiscard]] DissipationReport dissipation_check(const Trajectory& traj, const LmiCertificate& cert,
                                                  const ComparisonFunction& omega3,
                                                  const DissipationOptions& opts = {});

struct SandwichReport {
  bool pass = true;
  int checked_samples = 0;
  double worst_lower_gap = 0.0;  // max of ω₁(‖x‖) − V, relative
  double worst_upper_gap = 0.0;  // max of V − ω₂(‖x_t‖_W), relative
};

/// ω₁(s) = λ_min(P1)s², ω₂(s) = max(λ_max(P1), h_M·λ_max(Q))s².
[[nodiscard]] std::pair<ComparisonFunction, ComparisonFunction> default_sandwich(const LmiCertificate& cert);

/// ω₁(‖x(t)‖) ≤ V(t) ≤ ω₂(‖x_t‖_W) at every sample whose window lies in W,
/// within relative tolerance `rel_tolerance`.
[[nodiscard]] SandwichReport sandwich_check(const Trajectory& traj, const LmiCertificate& cert,
                                            const ComparisonFunction& omega1, const ComparisonFunction& omega2,
                                            int samples = 200, double rel_tolerance = 1e-6);

/// CSV with header t,V,DiniV,residual.
void write_lkf_csv(const LkfTrace& trace, std::ostream& out);

}  // namespace krasovskii
