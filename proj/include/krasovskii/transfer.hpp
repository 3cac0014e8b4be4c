#pragma once

// Quantitative ingredients of the W-to-uniform stability transfer: Lipschitz
// bounds, the Grönwall envelope, the one-window smoothing estimate, restart
// consistency under shifted delays, and empirical KL envelopes.

#include "krasovskii/histories.hpp"
#include "krasovskii/rng.hpp"
#include "krasovskii/solver.hpp"

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace krasovskii {

/// ‖A‖₂ + Σ‖Bᵢ‖₂ + Σ∫‖Bᵢ(θ)‖₂dθ, plus 1.5× the largest sampled difference
/// quotient of g over 10⁴ pairs in the ball of radius `radius` when g is
/// nonlinear. Throws "no global Lipschitz bound" for nonlinear g without a radius.
[[nodiscard]] double lipschitz_bound(const SystemModel& model, std::optional<double> radius = std::nullopt,
                                     std::uint64_t seed = 0);

struct TransferOptions {
  SolverOptions solver;
  std::optional<double> radius;  // H, required when g is nonlinear
  std::uint64_t seed = 0;
};

struct SmoothingReport {
  double L = 0.0;
  double gronwall_factor = 0.0;
  double smoothing_factor = 0.0;
  double initial_uniform_norm = 0.0;
  double observed_w_norm = 0.0;
  double bound = 0.0;
  bool lipschitz_rigorous = true;
  bool pass = false;
};

/// Integrates one window and compares ‖x_{h_M}‖_W with
/// (1 + e^{L h_M})·sqrt(1 + h_M L²)·‖x₀‖∞. For nonlinear models the initial
/// condition must satisfy ‖x₀‖∞ < H/(1 + e^{L h_M}).
[[nodiscard]] SmoothingReport smoothing_check(const SystemModel& model, const DelaySignal& zeta,
                                              const HistoryFunction& x0, const TransferOptions& opts = {});

struct GronwallReport {
  double L = 0.0;
  double observed_factor = 0.0;  // sup_{[−h_M, h_M]} ‖x‖ / ‖x₀‖∞
  double bound_factor = 0.0;     // 1 + e^{L h_M}
  bool pass = false;
};

[[nodiscard]] GronwallReport gronwall_check(const SystemModel& model, const DelaySignal& zeta,
                                            const HistoryFunction& x0, const TransferOptions& opts = {});

/// max over a 200-point grid on [0, T − h_M] of ‖x(t + h_M) − x̃(t)‖, where x̃
/// restarts from x_{h_M} under the shifted delay signal.
[[nodiscard]] double shift_consistency(const SystemModel& model, const DelaySignal& zeta, const HistoryFunction& x0,
                                       double horizon, const SolverOptions& opts = {});

enum class NormScale { Uniform, W };
enum class KlVerdict { Decaying, Flat, Growing };

[[nodiscard]] std::string to_string(KlVerdict verdict);
[[nodiscard]] std::string to_string(NormScale scale);

enum class Pairing { Cartesian, Zip };

struct KlOptions {
  SolverOptions solver;
  Pairing pairing = Pairing::Cartesian;  // Zip pairs delays[k] with ics[k]
  int samples = 501;
  double flat_threshold = 1e-3;
  std::size_t min_members = 10;
};

struct KlEnvelope {
  NormScale scale = NormScale::Uniform;
  double radius = 0.0;  // largest ‖x₀‖_X in the ensemble
  std::vector<double> times;
  std::vector<double> envelope;
  double c0 = 0.0;
  double kappa = 0.0;
  double fit_residual = 0.0;  // RMS of the log-scale residual
  KlVerdict verdict = KlVerdict::Flat;
  std::size_t members = 0;
  std::size_t excluded_zero = 0;
  std::size_t excluded_not_w = 0;
  bool blew_up = false;
  double t_f = 0.0;  // earliest blow-up time
  std::vector<double> final_window_ratio;  // per member: sup over [T − h_M, T] of ‖x‖, over ‖x₀‖_X
  [[nodiscard]] double fit(double t) const { return c0 * std::exp(-kappa * t); }
};

/// Runs every (delay, initial condition) pair to T and summarizes
/// sup over members of ‖x(t)‖/‖x₀‖_X. The exponential fit is taken on [h_M, T]
/// over the non-increasing upper hull of the envelope unless the raw envelope
/// itself grows.
[[nodiscard]] KlEnvelope empirical_kl(const SystemModel& model, const std::vector<DelaySignal>& delays,
                                      const std::vector<HistoryFunction>& ics, double horizon, NormScale scale,
                                      const KlOptions& opts = {});

struct CompositionReport {
  double worst_ratio = 0.0;  // max over t ≥ h_M of envelope_U(t) / (c·fit_W(t − h_M))
  double factor = 0.0;       // c = (1 + e^{L h_M})·sqrt(1 + h_M L²)
  bool pass = false;
};

/// Checks envelope_U(t) ≤ (1 + slack)·fit_W(t − h_M)·c for t ≥ h_M.
[[nodiscard]] CompositionReport composition_check(const KlEnvelope& uniform, const KlEnvelope& w, double lipschitz,
                                                  double h_max, double slack = 0.1);

/// Random member of the delay preset families with range inside [0, h_M].
[[nodiscard]] DelaySignal random_delay_signal(CounterRng& rng, double h_max);

/// Random W-representable history: piecewise linear, cubic Hermite, sine, or constant.
[[nodiscard]] HistoryFunction random_w_history(CounterRng& rng, double h_max, Eigen::Index dim);

/// CSV with header t,envelope,fit.
void write_envelope_csv(const KlEnvelope& env, std::ostream& out);

}  // namespace krasovskii
