#pragma once

// Initial-condition histories on [−h_M, 0], delay signals, comparison functions,
// and the two history norms (uniform and W).

#include "krasovskii/numerics.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace krasovskii {

/// Piecewise cubic Hermite curve through (node, value, derivative) triples.
/// The curve is C¹: adjacent segments share endpoint values and derivatives.
class HermitePath {
 public:
  HermitePath() = default;
  HermitePath(std::vector<double> nodes, std::vector<Vector> values, std::vector<Vector> derivatives);

  /// Appends a node after the current last one.
  void append(double t, Vector value, Vector derivative);
  /// Drops every node after the first `count`.
  void truncate(std::size_t count);

  [[nodiscard]] bool empty() const { return nodes_.empty(); }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] double start() const { return nodes_.front(); }
  [[nodiscard]] double end() const { return nodes_.back(); }
  [[nodiscard]] Eigen::Index dim() const { return values_.empty() ? 0 : values_.front().size(); }
  [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
  [[nodiscard]] const Vector& node_value(std::size_t k) const { return values_[k]; }
  [[nodiscard]] const Vector& node_derivative(std::size_t k) const { return derivatives_[k]; }

  [[nodiscard]] Vector value(double t) const;
  [[nodiscard]] Vector derivative(double t) const;
  /// sup ‖x(s)‖ over [a, b] with per-segment critical-point search.
  [[nodiscard]] double sup_norm(double a, double b) const;
  /// ∫ₐᵇ ‖x'(s)‖² ds, exact up to rounding (the integrand is a quartic per segment).
  [[nodiscard]] double derivative_sq_integral(double a, double b) const;

  /// Index k of the segment [nodes[k], nodes[k+1]] containing t (clamped).
  [[nodiscard]] std::size_t locate(double t) const;

 private:
  std::vector<double> nodes_;
  std::vector<Vector> values_;
  std::vector<Vector> derivatives_;
};

/// A continuous map [−h_M, 0] → Rⁿ. Each representation carries its own
/// derivative structure; membership in W is a property of the representation.
class HistoryFunction {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    [[nodiscard]] virtual Vector value(double tau) const = 0;
    [[nodiscard]] virtual Vector derivative(double tau) const = 0;
    [[nodiscard]] virtual bool in_w() const = 0;
    [[nodiscard]] virtual std::string kind() const = 0;
    /// Points in [−h_M, 0] where the derivative may be discontinuous, excluding
    /// the endpoints.
    [[nodiscard]] virtual std::vector<double> breakpoints() const { return {}; }
    [[nodiscard]] virtual double sup_norm(double a, double b) const;
    [[nodiscard]] virtual double derivative_sq_integral(double a, double b) const;

    double h_max = 1.0;
    Eigen::Index dim = 1;
  };

  explicit HistoryFunction(std::shared_ptr<const Impl> impl);

  [[nodiscard]] double h_max() const { return impl_->h_max; }
  [[nodiscard]] Eigen::Index dim() const { return impl_->dim; }
  [[nodiscard]] bool in_w() const { return impl_->in_w(); }
  [[nodiscard]] std::string kind() const { return impl_->kind(); }

  /// Throws std::out_of_range outside [−h_M, 0].
  [[nodiscard]] Vector operator()(double tau) const;
  /// Weak derivative; throws std::invalid_argument("not in W") when the
  /// representation has none.
  [[nodiscard]] Vector derivative(double tau) const;
  [[nodiscard]] std::vector<double> breakpoints() const { return impl_->breakpoints(); }
  [[nodiscard]] double sup_norm(double a, double b) const;
  [[nodiscard]] double derivative_sq_integral(double a, double b) const;

  [[nodiscard]] const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

enum class Interpolation { Linear, CubicHermite };

enum class RoughKind { SqrtKink, TSinInvT, CantorApprox };

/// Parses "sqrt-kink", "t-sin-inv-t", "cantor-approx"; throws on anything else.
[[nodiscard]] RoughKind parse_rough_kind(std::string_view name);

[[nodiscard]] double uniform_norm(const HistoryFunction& phi);
/// sqrt(‖φ(0)‖² + ∫‖φ'‖²). Throws std::invalid_argument("not in W").
[[nodiscard]] double w_norm(const HistoryFunction& phi);

[[nodiscard]] HistoryFunction make_constant_history(double h_max, const Vector& value);
/// Piecewise linear through (nodes[k], values[k]); nodes must start at −h_M and end at 0.
[[nodiscard]] HistoryFunction make_piecewise_linear_history(std::vector<double> nodes, std::vector<Vector> values);
/// Sampled history on the uniform grid of values.size() ≥ 2 nodes over [−h_M, 0].
[[nodiscard]] HistoryFunction make_sampled_history(double h_max, std::vector<Vector> values, Interpolation kind);
[[nodiscard]] HistoryFunction make_hermite_history(HermitePath path, double h_max);
/// φ(τ) = amplitude·sin(ωτ + ψ).
[[nodiscard]] HistoryFunction make_sine_history(double h_max, const Vector& amplitude, double omega, double phase);
/// History given by closed-form callables. It lies in W iff `derivative` is set.
[[nodiscard]] HistoryFunction make_analytic_history(double h_max, Eigen::Index dim, std::string name,
                                                    std::function<Vector(double)> value,
                                                    std::function<Vector(double)> derivative = {});
/// Triangle train f_m(τ) = φ(mτ/h_M)·direction with 2m + 1 nodes.
[[nodiscard]] HistoryFunction make_triangle_history(int m, double h_max, const Vector& direction);
/// Continuous histories outside W. `levels` is used by CantorApprox only (≤ 20).
[[nodiscard]] HistoryFunction make_rough_history(RoughKind kind, double h_max, const Vector& direction, int levels = 8);
/// Piecewise-linear interpolant of φ on a uniform grid; always in W.
[[nodiscard]] HistoryFunction sample_piecewise_linear(const HistoryFunction& phi, std::size_t node_count);

/// x(t + ·) on [−h_M, 0] for a solution made of the history `past` on
/// [−h_M, 0] followed by `path` on [0, path.end()].
[[nodiscard]] HistoryFunction make_window(const HistoryFunction& past, std::shared_ptr<const HermitePath> path, double t);

// Delay signals ---------------------------------------------------------------

struct ConstantDelay {
  double value = 0.0;
};

/// h(t) = offset + amplitude·sin(frequency·t + phase).
struct SinusoidDelay {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

/// Continuous periodic ramp: rises linearly from `low` to `high` over the first
/// `rise` fraction of the period, then falls back linearly.
struct SawtoothDelay {
  double low = 0.0;
  double high = 0.0;
  double period = 1.0;
  double rise = 0.5;
  double phase = 0.0;
};

/// Periodic piecewise-linear interpolation of `values` at uniform knots over one period.
struct TableDelay {
  double period = 1.0;
  std::vector<double> values;
  double phase = 0.0;
};

using DelayComponent = std::variant<ConstantDelay, SinusoidDelay, SawtoothDelay, TableDelay>;

/// A continuous map R₊ → [0, h_M]ᵏ built from shift-closed preset families.
class DelaySignal {
 public:
  /// Validates every component's range against [0, h_M]; throws std::invalid_argument.
  DelaySignal(double h_max, std::vector<DelayComponent> components);
  static DelaySignal constant(double h_max, double value, std::size_t arity = 1);

  [[nodiscard]] double h_max() const { return h_max_; }
  [[nodiscard]] std::size_t arity() const { return components_.size(); }
  [[nodiscard]] const std::vector<DelayComponent>& components() const { return components_; }
  [[nodiscard]] double operator()(std::size_t index, double t) const;

 private:
  double h_max_;
  std::vector<DelayComponent> components_;
};

[[nodiscard]] double evaluate_delay(const DelayComponent& c, double t);
/// [min, max] of the component over t ≥ 0, from its parameters.
[[nodiscard]] std::pair<double, double> delay_range(const DelayComponent& c);
/// t ↦ ζ(t + a), expressed in the same preset family.
[[nodiscard]] DelaySignal shift_delay(const DelaySignal& zeta, double a);

// Comparison functions --------------------------------------------------------

/// Class-K power c·sᵖ or the exponential KL form C₀·e^{−κt}·s.
class ComparisonFunction {
 public:
  static ComparisonFunction power(double coefficient, double exponent);
  static ComparisonFunction exponential_kl(double c0, double kappa);

  [[nodiscard]] bool is_kl() const { return kl_; }
  [[nodiscard]] double coefficient() const { return coefficient_; }
  [[nodiscard]] double exponent() const { return exponent_; }
  /// Class-K evaluation; for the KL form this is β(s, 0).
  [[nodiscard]] double operator()(double s) const;
  [[nodiscard]] double operator()(double s, double t) const;

 private:
  ComparisonFunction(bool kl, double coefficient, double exponent)
      : kl_(kl), coefficient_(coefficient), exponent_(exponent) {}

  bool kl_;
  double coefficient_;
  double exponent_;  // p for the power form, κ for the KL form
};

}  // namespace krasovskii
