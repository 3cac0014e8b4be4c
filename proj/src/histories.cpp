#include "krasovskii/histories.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace krasovskii {

namespace {

constexpr int kUniformNormGrid = 2048;
constexpr int kSmoothPanels = 64;

// Cubic coefficients of one Hermite segment in the local variable s ∈ [0, 1].
struct Cubic {
  Vector c0, c1, c2, c3;
  double width;

  Vector value(double s) const { return c0 + s * (c1 + s * (c2 + s * c3)); }
  // d/ds
  Vector slope(double s) const { return c1 + s * (2.0 * c2 + s * 3.0 * c3); }
};

Cubic segment_cubic(double t0, double t1, const Vector& y0, const Vector& y1, const Vector& d0, const Vector& d1) {
  const double h = t1 - t0;
  Cubic c;
  c.width = h;
  c.c0 = y0;
  c.c1 = h * d0;
  c.c2 = 3.0 * (y1 - y0) - h * (2.0 * d0 + d1);
  c.c3 = 2.0 * (y0 - y1) + h * (d0 + d1);
  return c;
}

// max ‖p(s)‖ for s in [sa, sb] ⊆ [0, 1]: endpoints plus every sign change of
// p·p' from positive to negative, refined by bisection.
double cubic_sup(const Cubic& c, double sa, double sb) {
  auto norm_at = [&](double s) { return c.value(s).norm(); };
  auto dir = [&](double s) { return c.value(s).dot(c.slope(s)); };
  double best = std::max(norm_at(sa), norm_at(sb));
  if (sb <= sa) return best;
  constexpr int kSamples = 8;
  double prev_s = sa;
  double prev_q = dir(sa);
  for (int k = 1; k <= kSamples; ++k) {
    const double s = sa + (sb - sa) * k / kSamples;
    const double q = dir(s);
    best = std::max(best, norm_at(s));
    if (prev_q > 0.0 && q < 0.0) {
      double lo = prev_s, hi = s;
      for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dir(mid) > 0.0) lo = mid; else hi = mid;
      }
      best = std::max(best, norm_at(0.5 * (lo + hi)));
    }
    prev_s = s;
    prev_q = q;
  }
  return best;
}

const Vector& require_vector(const Vector& v, const char* what) {
  if (v.size() == 0 || !v.allFinite()) throw std::invalid_argument(std::string(what) + ": values must be finite and non-empty");
  return v;
}

void check_window(double h_max) {
  if (!(h_max > 0.0) || !std::isfinite(h_max)) throw std::invalid_argument("history: h_M must be positive and finite");
}

// --- Representations --------------------------------------------------------

class ConstantImpl final : public HistoryFunction::Impl {
 public:
  explicit ConstantImpl(Vector c) : c_(std::move(c)) {}
  Vector value(double) const override { return c_; }
  Vector derivative(double) const override { return Vector::Zero(c_.size()); }
  bool in_w() const override { return true; }
  std::string kind() const override { return "constant"; }
  double sup_norm(double, double) const override { return c_.norm(); }
  double derivative_sq_integral(double, double) const override { return 0.0; }

 private:
  Vector c_;
};

class PiecewiseLinearImpl final : public HistoryFunction::Impl {
 public:
  PiecewiseLinearImpl(std::vector<double> nodes, std::vector<Vector> values)
      : nodes_(std::move(nodes)), values_(std::move(values)) {}

  Vector value(double tau) const override {
    const std::size_t k = locate(tau);
    const double w = (tau - nodes_[k]) / (nodes_[k + 1] - nodes_[k]);
    return (1.0 - w) * values_[k] + w * values_[k + 1];
  }
  Vector derivative(double tau) const override { return slope(locate(tau)); }
  bool in_w() const override { return true; }
  std::string kind() const override { return "piecewise-linear"; }
  std::vector<double> breakpoints() const override { return {nodes_.begin() + 1, nodes_.end() - 1}; }

  // ‖·‖² is convex along each segment, so the maximum sits at a node or at an end of [a, b].
  double sup_norm(double a, double b) const override {
    double best = std::max(value(a).norm(), value(b).norm());
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      if (nodes_[k] > a && nodes_[k] < b) best = std::max(best, values_[k].norm());
    return best;
  }

  double derivative_sq_integral(double a, double b) const override {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
      const double lo = std::max(a, nodes_[k]);
      const double hi = std::min(b, nodes_[k + 1]);
      if (hi > lo) sum += slope(k).squaredNorm() * (hi - lo);
    }
    return sum;
  }

 private:
  std::size_t locate(double tau) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), tau);
    const auto k = static_cast<std::ptrdiff_t>(it - nodes_.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(nodes_.size()) - 2));
  }
  Vector slope(std::size_t k) const { return (values_[k + 1] - values_[k]) / (nodes_[k + 1] - nodes_[k]); }

  std::vector<double> nodes_;
  std::vector<Vector> values_;
};

class HermiteImpl final : public HistoryFunction::Impl {
 public:
  explicit HermiteImpl(HermitePath path) : path_(std::move(path)) {}
  Vector value(double tau) const override { return path_.value(tau); }
  Vector derivative(double tau) const override { return path_.derivative(tau); }
  bool in_w() const override { return true; }
  std::string kind() const override { return "cubic-hermite"; }
  std::vector<double> breakpoints() const override {
    const auto& n = path_.nodes();
    return {n.begin() + 1, n.end() - 1};
  }
  double sup_norm(double a, double b) const override { return path_.sup_norm(a, b); }
  double derivative_sq_integral(double a, double b) const override { return path_.derivative_sq_integral(a, b); }

 private:
  HermitePath path_;
};

class AnalyticImpl final : public HistoryFunction::Impl {
 public:
  using Fn = std::function<Vector(double)>;
  AnalyticImpl(std::string name, Fn value, Fn derivative, bool in_w)
      : name_(std::move(name)), value_(std::move(value)), derivative_(std::move(derivative)), in_w_(in_w) {}

  Vector value(double tau) const override { return value_(tau); }
  Vector derivative(double tau) const override {
    if (!in_w_ || !derivative_) throw std::invalid_argument("not in W");
    return derivative_(tau);
  }
  bool in_w() const override { return in_w_; }
  std::string kind() const override { return name_; }

 private:
  std::string name_;
  Fn value_;
  Fn derivative_;
  bool in_w_;
};

class WindowImpl final : public HistoryFunction::Impl {
 public:
  WindowImpl(HistoryFunction past, std::shared_ptr<const HermitePath> path, double t)
      : past_(std::move(past)), path_(std::move(path)), t_(t) {}

  Vector value(double tau) const override {
    const double s = t_ + tau;
    return s <= 0.0 ? past_(std::max(s, -h_max)) : path_->value(s);
  }
  Vector derivative(double tau) const override {
    const double s = t_ + tau;
    return s < 0.0 ? past_.derivative(std::max(s, -h_max)) : path_->derivative(s);
  }
  bool in_w() const override { return t_ >= h_max || past_.in_w(); }
  std::string kind() const override { return "window"; }

  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    if (t_ < h_max) {
      for (double b : past_.breakpoints())
        if (b > t_ - h_max) out.push_back(b - t_);
      if (t_ > 0.0) out.push_back(-t_);
    }
    for (double node : path_->nodes())
      if (node > std::max(0.0, t_ - h_max) && node < t_) out.push_back(node - t_);
    std::sort(out.begin(), out.end());
    return out;
  }

  double sup_norm(double a, double b) const override {
    const double sa = t_ + a, sb = t_ + b;
    double best = 0.0;
    if (sa <= 0.0) best = past_.sup_norm(std::max(sa, -h_max), std::min(sb, 0.0));
    if (sb > 0.0) best = std::max(best, path_->sup_norm(std::max(sa, 0.0), sb));
    return best;
  }

  double derivative_sq_integral(double a, double b) const override {
    const double sa = t_ + a, sb = t_ + b;
    double sum = 0.0;
    if (sa < 0.0) sum += past_.derivative_sq_integral(std::max(sa, -h_max), std::min(sb, 0.0));
    if (sb > 0.0) sum += path_->derivative_sq_integral(std::max(sa, 0.0), sb);
    return sum;
  }

 private:
  HistoryFunction past_;
  std::shared_ptr<const HermitePath> path_;
  double t_;
};

double cantor_level(double s, int levels) {
  if (levels == 0) return s;
  if (s <= 1.0 / 3.0) return 0.5 * cantor_level(3.0 * s, levels - 1);
  if (s >= 2.0 / 3.0) return 0.5 + 0.5 * cantor_level(3.0 * s - 2.0, levels - 1);
  return 0.5;
}

std::shared_ptr<HistoryFunction::Impl> with_window(std::shared_ptr<HistoryFunction::Impl> impl, double h_max,
                                                   Eigen::Index dim) {
  impl->h_max = h_max;
  impl->dim = dim;
  return impl;
}

}  // namespace

// --- HermitePath --------------------------------------------------------------

HermitePath::HermitePath(std::vector<double> nodes, std::vector<Vector> values, std::vector<Vector> derivatives)
    : nodes_(std::move(nodes)), values_(std::move(values)), derivatives_(std::move(derivatives)) {
  if (nodes_.size() < 2 || values_.size() != nodes_.size() || derivatives_.size() != nodes_.size())
    throw std::invalid_argument("HermitePath: need >= 2 nodes with matching values and derivatives");
  for (std::size_t k = 1; k < nodes_.size(); ++k)
    if (!(nodes_[k] > nodes_[k - 1])) throw std::invalid_argument("HermitePath: nodes must be increasing");
}

void HermitePath::append(double t, Vector value, Vector derivative) {
  if (!nodes_.empty() && !(t > nodes_.back())) throw std::invalid_argument("HermitePath: nodes must be increasing");
  nodes_.push_back(t);
  values_.push_back(std::move(value));
  derivatives_.push_back(std::move(derivative));
}

void HermitePath::truncate(std::size_t count) {
  nodes_.resize(std::min(count, nodes_.size()));
  values_.resize(nodes_.size());
  derivatives_.resize(nodes_.size());
}

std::size_t HermitePath::locate(double t) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  const auto k = static_cast<std::ptrdiff_t>(it - nodes_.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(nodes_.size()) - 2));
}

Vector HermitePath::value(double t) const {
  if (nodes_.size() == 1) return values_.front();
  const std::size_t k = locate(t);
  const double h = nodes_[k + 1] - nodes_[k];
  const double s = (t - nodes_[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * values_[k] + (h * (s3 - 2 * s2 + s)) * derivatives_[k] +
         (-2 * s3 + 3 * s2) * values_[k + 1] + (h * (s3 - s2)) * derivatives_[k + 1];
}

Vector HermitePath::derivative(double t) const {
  if (nodes_.size() == 1) return derivatives_.front();
  const std::size_t k = locate(t);
  const double h = nodes_[k + 1] - nodes_[k];
  const double s = (t - nodes_[k]) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) / h) * values_[k] + (3 * s2 - 4 * s + 1) * derivatives_[k] +
         ((-6 * s2 + 6 * s) / h) * values_[k + 1] + (3 * s2 - 2 * s) * derivatives_[k + 1];
}

double HermitePath::sup_norm(double a, double b) const {
  if (nodes_.size() == 1) return values_.front().norm();
  double best = std::max(value(a).norm(), value(b).norm());
  const std::size_t first = locate(a);
  const std::size_t last = locate(b);
  for (std::size_t k = first; k <= last; ++k) {
    const double t0 = nodes_[k], t1 = nodes_[k + 1];
    const double lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi < lo) continue;
    const Cubic c = segment_cubic(t0, t1, values_[k], values_[k + 1], derivatives_[k], derivatives_[k + 1]);
    best = std::max(best, cubic_sup(c, (lo - t0) / c.width, (hi - t0) / c.width));
  }
  return best;
}

double HermitePath::derivative_sq_integral(double a, double b) const {
  if (nodes_.size() < 2 || b <= a) return 0.0;
  double sum = 0.0;
  const std::size_t first = locate(a);
  const std::size_t last = locate(b);
  for (std::size_t k = first; k <= last; ++k) {
    const double lo = std::max(a, nodes_[k]), hi = std::min(b, nodes_[k + 1]);
    if (hi <= lo) continue;
    const Cubic c = segment_cubic(nodes_[k], nodes_[k + 1], values_[k], values_[k + 1], derivatives_[k],
                                  derivatives_[k + 1]);
    const double inv = 1.0 / c.width;
    sum += gauss3([&](double t) { return (c.slope((t - nodes_[k]) * inv) * inv).squaredNorm(); }, lo, hi);
  }
  return sum;
}

// --- HistoryFunction ----------------------------------------------------------

double HistoryFunction::Impl::sup_norm(double a, double b) const {
  if (b <= a) return value(a).norm();
  const double step = (b - a) / kUniformNormGrid;
  std::vector<double> norms(kUniformNormGrid + 1);
  for (int k = 0; k <= kUniformNormGrid; ++k) norms[static_cast<std::size_t>(k)] = value(a + step * k).norm();
  double best = *std::max_element(norms.begin(), norms.end());
  // One parabolic (Newton on finite differences) polish per interior local max.
  for (int k = 1; k < kUniformNormGrid; ++k) {
    const double l = norms[static_cast<std::size_t>(k - 1)], m = norms[static_cast<std::size_t>(k)],
                 r = norms[static_cast<std::size_t>(k + 1)];
    if (m >= l && m >= r && (m > l || m > r)) {
      const double curvature = l - 2.0 * m + r;
      if (curvature < 0.0) {
        const double offset = std::clamp(0.5 * (l - r) / curvature, -1.0, 1.0);
        best = std::max(best, value(a + step * (k + offset)).norm());
      }
    }
  }
  return best;
}

double HistoryFunction::Impl::derivative_sq_integral(double a, double b) const {
  if (!in_w()) throw std::invalid_argument("not in W");
  std::vector<double> cuts{a};
  for (double p : breakpoints())
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const double width = (hi - lo) / kSmoothPanels;
    for (int j = 0; j < kSmoothPanels; ++j)
      sum += gauss3([&](double s) { return derivative(s).squaredNorm(); }, lo + width * j, lo + width * (j + 1));
  }
  return sum;
}

HistoryFunction::HistoryFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {
  if (!impl_) throw std::invalid_argument("HistoryFunction: null representation");
}

namespace {
double clamp_to_domain(double tau, double h_max) {
  const double slack = 1e-12 * (1.0 + h_max);
  if (!(tau >= -h_max - slack && tau <= slack))
    throw std::out_of_range("history evaluated outside [-h_M, 0] at " + std::to_string(tau));
  return std::clamp(tau, -h_max, 0.0);
}
}  // namespace

Vector HistoryFunction::operator()(double tau) const { return impl_->value(clamp_to_domain(tau, h_max())); }

Vector HistoryFunction::derivative(double tau) const {
  if (!impl_->in_w()) throw std::invalid_argument("not in W");
  return impl_->derivative(clamp_to_domain(tau, h_max()));
}

double HistoryFunction::sup_norm(double a, double b) const {
  a = clamp_to_domain(a, h_max());
  b = clamp_to_domain(b, h_max());
  if (a > b) throw std::invalid_argument("sup_norm: a > b");
  return impl_->sup_norm(a, b);
}

double HistoryFunction::derivative_sq_integral(double a, double b) const {
  if (!impl_->in_w()) throw std::invalid_argument("not in W");
  a = clamp_to_domain(a, h_max());
  b = clamp_to_domain(b, h_max());
  if (b <= a) return 0.0;
  return impl_->derivative_sq_integral(a, b);
}

RoughKind parse_rough_kind(std::string_view name) {
  if (name == "sqrt-kink") return RoughKind::SqrtKink;
  if (name == "t-sin-inv-t") return RoughKind::TSinInvT;
  if (name == "cantor-approx") return RoughKind::CantorApprox;
  throw std::invalid_argument("unknown rough history kind '" + std::string(name) + "'");
}

double uniform_norm(const HistoryFunction& phi) { return phi.sup_norm(-phi.h_max(), 0.0); }

double w_norm(const HistoryFunction& phi) {
  if (!phi.in_w()) throw std::invalid_argument("not in W");
  const double tip = phi(0.0).squaredNorm();
  return std::sqrt(tip + phi.derivative_sq_integral(-phi.h_max(), 0.0));
}

// --- Factories ----------------------------------------------------------------

HistoryFunction make_constant_history(double h_max, const Vector& value) {
  check_window(h_max);
  require_vector(value, "constant history");
  return HistoryFunction(with_window(std::make_shared<ConstantImpl>(value), h_max, value.size()));
}

HistoryFunction make_piecewise_linear_history(std::vector<double> nodes, std::vector<Vector> values) {
  if (nodes.size() < 2 || nodes.size() != values.size())
    throw std::invalid_argument("piecewise-linear history: need >= 2 nodes with matching values");
  if (nodes.back() != 0.0) throw std::invalid_argument("piecewise-linear history: last node must be 0");
  const double h_max = -nodes.front();
  check_window(h_max);
  for (std::size_t k = 1; k < nodes.size(); ++k)
    if (!(nodes[k] > nodes[k - 1])) throw std::invalid_argument("piecewise-linear history: nodes must be increasing");
  const Eigen::Index dim = values.front().size();
  for (const auto& v : values) {
    require_vector(v, "piecewise-linear history");
    if (v.size() != dim) throw std::invalid_argument("piecewise-linear history: inconsistent dimensions");
  }
  return HistoryFunction(
      with_window(std::make_shared<PiecewiseLinearImpl>(std::move(nodes), std::move(values)), h_max, dim));
}

HistoryFunction make_sampled_history(double h_max, std::vector<Vector> values, Interpolation kind) {
  check_window(h_max);
  const std::size_t m = values.size();
  if (m < 2) throw std::invalid_argument("sampled history: need at least 2 nodes");
  std::vector<double> nodes(m);
  for (std::size_t k = 0; k < m; ++k) nodes[k] = -h_max + h_max * static_cast<double>(k) / static_cast<double>(m - 1);
  nodes.back() = 0.0;
  if (kind == Interpolation::Linear) return make_piecewise_linear_history(std::move(nodes), std::move(values));

  for (const auto& v : values) require_vector(v, "sampled history");
  const double dx = h_max / static_cast<double>(m - 1);
  std::vector<Vector> slopes(m);
  slopes[0] = (values[1] - values[0]) / dx;
  slopes[m - 1] = (values[m - 1] - values[m - 2]) / dx;
  for (std::size_t k = 1; k + 1 < m; ++k) slopes[k] = (values[k + 1] - values[k - 1]) / (2.0 * dx);
  return make_hermite_history(HermitePath(std::move(nodes), std::move(values), std::move(slopes)), h_max);
}

HistoryFunction make_hermite_history(HermitePath path, double h_max) {
  check_window(h_max);
  if (path.node_count() < 2 || path.start() != -h_max || path.end() != 0.0)
    throw std::invalid_argument("hermite history: path must span exactly [-h_M, 0]");
  const Eigen::Index dim = path.dim();
  return HistoryFunction(with_window(std::make_shared<HermiteImpl>(std::move(path)), h_max, dim));
}

HistoryFunction make_sine_history(double h_max, const Vector& amplitude, double omega, double phase) {
  check_window(h_max);
  require_vector(amplitude, "sine history");
  auto value = [amplitude, omega, phase](double tau) -> Vector { return std::sin(omega * tau + phase) * amplitude; };
  auto slope = [amplitude, omega, phase](double tau) -> Vector {
    return (omega * std::cos(omega * tau + phase)) * amplitude;
  };
  return HistoryFunction(
      with_window(std::make_shared<AnalyticImpl>("sine", value, slope, true), h_max, amplitude.size()));
}

HistoryFunction make_analytic_history(double h_max, Eigen::Index dim, std::string name,
                                      std::function<Vector(double)> value, std::function<Vector(double)> derivative) {
  check_window(h_max);
  if (dim < 1 || !value) throw std::invalid_argument("analytic history: need dim >= 1 and a value function");
  const bool in_w = static_cast<bool>(derivative);
  return HistoryFunction(with_window(
      std::make_shared<AnalyticImpl>(std::move(name), std::move(value), std::move(derivative), in_w), h_max, dim));
}

HistoryFunction make_triangle_history(int m, double h_max, const Vector& direction) {
  check_window(h_max);
  if (m < 1) throw std::invalid_argument("triangle history: m must be >= 1");
  require_vector(direction, "triangle history");
  if (std::abs(direction.norm() - 1.0) > 1e-12) throw std::invalid_argument("triangle history: direction must be a unit vector");
  const int count = 2 * m + 1;
  std::vector<double> nodes(static_cast<std::size_t>(count));
  std::vector<Vector> values(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    nodes[static_cast<std::size_t>(k)] = -h_max + h_max * k / (2.0 * m);
    values[static_cast<std::size_t>(k)] = (k % 2 == 1 ? 1.0 : 0.0) * direction;
  }
  nodes.back() = 0.0;
  return make_piecewise_linear_history(std::move(nodes), std::move(values));
}

HistoryFunction make_rough_history(RoughKind kind, double h_max, const Vector& direction, int levels) {
  check_window(h_max);
  require_vector(direction, "rough history");
  switch (kind) {
    case RoughKind::SqrtKink: {
      auto value = [direction, h_max](double tau) -> Vector { return std::sqrt(std::abs(tau) / h_max) * direction; };
      return HistoryFunction(
          with_window(std::make_shared<AnalyticImpl>("sqrt-kink", value, nullptr, false), h_max, direction.size()));
    }
    case RoughKind::TSinInvT: {
      auto value = [direction, h_max](double tau) -> Vector {
        if (tau == 0.0) return Vector::Zero(direction.size());
        const double u = tau / h_max;
        return (u * std::sin(1.0 / u)) * direction;
      };
      return HistoryFunction(
          with_window(std::make_shared<AnalyticImpl>("t-sin-inv-t", value, nullptr, false), h_max, direction.size()));
    }
    case RoughKind::CantorApprox: {
      if (levels < 0 || levels > 20) throw std::invalid_argument("cantor-approx: levels must be in [0, 20]");
      auto value = [direction, h_max, levels](double tau) -> Vector {
        const double s = std::clamp((tau + h_max) / h_max, 0.0, 1.0);
        return cantor_level(s, levels) * direction;
      };
      return HistoryFunction(
          with_window(std::make_shared<AnalyticImpl>("cantor-approx", value, nullptr, false), h_max, direction.size()));
    }
  }
  throw std::invalid_argument("unknown rough history kind");
}

HistoryFunction sample_piecewise_linear(const HistoryFunction& phi, std::size_t node_count) {
  if (node_count < 2) throw std::invalid_argument("sample_piecewise_linear: need >= 2 nodes");
  const double h = phi.h_max();
  std::vector<Vector> values(node_count);
  for (std::size_t k = 0; k < node_count; ++k)
    values[k] = phi(-h + h * static_cast<double>(k) / static_cast<double>(node_count - 1));
  values.back() = phi(0.0);
  return make_sampled_history(h, std::move(values), Interpolation::Linear);
}

HistoryFunction make_window(const HistoryFunction& past, std::shared_ptr<const HermitePath> path, double t) {
  if (!(t >= 0.0)) throw std::out_of_range("window: t must be >= 0");
  if (t == 0.0) return past;
  if (!path || path->node_count() < 2 || path->start() != 0.0)
    throw std::invalid_argument("window: solution path must start at 0");
  if (t > path->end() * (1.0 + 1e-14)) throw std::out_of_range("window: t beyond the end of the solution");
  const double end = path->end();
  auto impl = std::make_shared<WindowImpl>(past, std::move(path), std::min(t, end));
  return HistoryFunction(with_window(std::move(impl), past.h_max(), past.dim()));
}

// --- Delay signals ------------------------------------------------------------

namespace {
double frac(double x) { return x - std::floor(x); }

void check_range(const DelayComponent& c, double h_max, std::size_t index) {
  const auto [lo, hi] = delay_range(c);
  if (!(lo >= 0.0) || !(hi <= h_max) || !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("delay component " + std::to_string(index) + ": range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "] is outside [0, h_M] = [0, " + std::to_string(h_max) + "]");
}
}  // namespace

std::pair<double, double> delay_range(const DelayComponent& c) {
  struct Visitor {
    std::pair<double, double> operator()(const ConstantDelay& d) const { return {d.value, d.value}; }
    std::pair<double, double> operator()(const SinusoidDelay& d) const {
      return {d.offset - std::abs(d.amplitude), d.offset + std::abs(d.amplitude)};
    }
    std::pair<double, double> operator()(const SawtoothDelay& d) const {
      if (!(d.period > 0.0) || !(d.rise > 0.0 && d.rise < 1.0) || !(d.low <= d.high))
        throw std::invalid_argument("sawtooth delay: need period > 0, 0 < rise < 1, low <= high");
      return {d.low, d.high};
    }
    std::pair<double, double> operator()(const TableDelay& d) const {
      if (!(d.period > 0.0) || d.values.empty()) throw std::invalid_argument("table delay: need period > 0 and values");
      const auto [lo, hi] = std::minmax_element(d.values.begin(), d.values.end());
      return {*lo, *hi};
    }
  };
  return std::visit(Visitor{}, c);
}

double evaluate_delay(const DelayComponent& c, double t) {
  struct Visitor {
    double t;
    double operator()(const ConstantDelay& d) const { return d.value; }
    double operator()(const SinusoidDelay& d) const { return d.offset + d.amplitude * std::sin(d.frequency * t + d.phase); }
    double operator()(const SawtoothDelay& d) const {
      const double u = frac((t + d.phase) / d.period);
      const double shape = u < d.rise ? u / d.rise : (1.0 - u) / (1.0 - d.rise);
      return d.low + (d.high - d.low) * shape;
    }
    double operator()(const TableDelay& d) const {
      const double k = static_cast<double>(d.values.size());
      const double u = frac((t + d.phase) / d.period) * k;
      const auto i = std::min(static_cast<std::size_t>(u), d.values.size() - 1);
      const double w = u - static_cast<double>(i);
      return (1.0 - w) * d.values[i] + w * d.values[(i + 1) % d.values.size()];
    }
  };
  return std::visit(Visitor{t}, c);
}

DelaySignal::DelaySignal(double h_max, std::vector<DelayComponent> components)
    : h_max_(h_max), components_(std::move(components)) {
  check_window(h_max_);
  if (components_.empty()) throw std::invalid_argument("delay signal: need at least one component");
  for (std::size_t i = 0; i < components_.size(); ++i) check_range(components_[i], h_max_, i);
}

DelaySignal DelaySignal::constant(double h_max, double value, std::size_t arity) {
  return DelaySignal(h_max, std::vector<DelayComponent>(arity, ConstantDelay{value}));
}

double DelaySignal::operator()(std::size_t index, double t) const {
  return std::clamp(evaluate_delay(components_.at(index), t), 0.0, h_max_);
}

DelaySignal shift_delay(const DelaySignal& zeta, double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("shift_delay: a must be >= 0");
  struct Visitor {
    double a;
    DelayComponent operator()(ConstantDelay d) const { return d; }
    DelayComponent operator()(SinusoidDelay d) const {
      d.phase += d.frequency * a;
      return d;
    }
    DelayComponent operator()(SawtoothDelay d) const {
      d.phase += a;
      return d;
    }
    DelayComponent operator()(TableDelay d) const {
      d.phase += a;
      return d;
    }
  };
  std::vector<DelayComponent> shifted;
  shifted.reserve(zeta.arity());
  for (const auto& c : zeta.components()) shifted.push_back(std::visit(Visitor{a}, c));
  return DelaySignal(zeta.h_max(), std::move(shifted));
}

// --- Comparison functions -----------------------------------------------------

ComparisonFunction ComparisonFunction::power(double coefficient, double exponent) {
  if (!(coefficient > 0.0) || !(exponent > 0.0)) throw std::invalid_argument("power comparison function: need c > 0, p > 0");
  return {false, coefficient, exponent};
}

ComparisonFunction ComparisonFunction::exponential_kl(double c0, double kappa) {
  if (!(c0 > 0.0) || !(kappa >= 0.0)) throw std::invalid_argument("KL comparison function: need C0 > 0, kappa >= 0");
  return {true, c0, kappa};
}

double ComparisonFunction::operator()(double s) const { return kl_ ? coefficient_ * s : coefficient_ * std::pow(s, exponent_); }

double ComparisonFunction::operator()(double s, double t) const {
  if (!kl_) return (*this)(s);
  return coefficient_ * std::exp(-exponent_ * t) * s;
}

}  // namespace krasovskii
