#include "krasovskii/solver.hpp"

#include "krasovskii/io.hpp"
#include "krasovskii/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace krasovskii {

namespace {

void require_square(const Matrix& m, Eigen::Index n, const std::string& what) {
  if (m.rows() != n || m.cols() != n) throw std::invalid_argument(what + ": expected " + std::to_string(n) + "x" + std::to_string(n));
  if (!m.allFinite()) throw std::invalid_argument(what + ": entries must be finite");
}

bool windows_match(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace

// --- DistributedKernel --------------------------------------------------------

DistributedKernel DistributedKernel::constant(const Matrix& b) { return polynomial({b}); }

DistributedKernel DistributedKernel::polynomial(std::vector<Matrix> coefficients) {
  if (coefficients.empty()) throw std::invalid_argument("distributed kernel: need at least one coefficient");
  DistributedKernel k;
  k.data_ = std::move(coefficients);
  return k;
}

DistributedKernel DistributedKernel::sampled(double h_max, std::vector<Matrix> values) {
  if (values.size() < 2) throw std::invalid_argument("distributed kernel: need at least 2 samples");
  if (!(h_max > 0.0)) throw std::invalid_argument("distributed kernel: h_M must be positive");
  DistributedKernel k;
  k.sampled_ = true;
  k.h_max_ = h_max;
  k.data_ = std::move(values);
  return k;
}

Matrix DistributedKernel::operator()(double theta) const {
  if (!sampled_) {
    // Horner in θ.
    Matrix acc = data_.back();
    for (auto it = data_.rbegin() + 1; it != data_.rend(); ++it) acc = acc * theta + *it;
    return acc;
  }
  const double m = static_cast<double>(data_.size() - 1);
  const double u = std::clamp((theta + h_max_) / h_max_, 0.0, 1.0) * m;
  const auto i = std::min(static_cast<std::size_t>(u), data_.size() - 2);
  const double w = u - static_cast<double>(i);
  return (1.0 - w) * data_[i] + w * data_[i + 1];
}

Eigen::Index DistributedKernel::rows() const { return data_.front().rows(); }
Eigen::Index DistributedKernel::cols() const { return data_.front().cols(); }

// --- Nonlinearity -------------------------------------------------------------

Nonlinearity Nonlinearity::cubic(double scale, GrowthCertificate growth) {
  Nonlinearity g;
  g.kind_ = Kind::Cubic;
  g.coefficients_ = {scale};
  g.growth_ = growth;
  return g;
}

Nonlinearity Nonlinearity::componentwise_polynomial(std::vector<double> coefficients, GrowthCertificate growth) {
  if (coefficients.empty()) throw std::invalid_argument("polynomial nonlinearity: need coefficients");
  Nonlinearity g;
  g.kind_ = Kind::ComponentwisePolynomial;
  g.coefficients_ = std::move(coefficients);
  g.growth_ = growth;
  return g;
}

Vector Nonlinearity::operator()(const Vector& x) const {
  if (kind_ == Kind::Cubic) return (coefficients_[0] * x.squaredNorm()) * x;
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * x(i) + *it;
    out(i) = acc;
  }
  return out;
}

bool Nonlinearity::is_linear() const {
  if (kind_ == Kind::Cubic) return coefficients_[0] == 0.0;
  for (std::size_t k = 2; k < coefficients_.size(); ++k)
    if (coefficients_[k] != 0.0) return false;
  return true;
}

// --- SystemModel --------------------------------------------------------------

SystemModel::SystemModel(double h_max, Matrix a, std::vector<PointwiseTerm> pointwise,
                         std::vector<DistributedTerm> distributed, std::optional<Nonlinearity> nonlinearity)
    : h_max_(h_max),
      a_(std::move(a)),
      pointwise_(std::move(pointwise)),
      distributed_(std::move(distributed)),
      nonlinearity_(std::move(nonlinearity)) {
  if (!(h_max_ > 0.0) || !std::isfinite(h_max_)) throw std::invalid_argument("model: h_M must be positive and finite");
  const Eigen::Index n = a_.rows();
  if (n < 1) throw std::invalid_argument("model: dimension must be >= 1");
  require_square(a_, n, "model: A");
  for (std::size_t i = 0; i < pointwise_.size(); ++i) require_square(pointwise_[i].B, n, "model: pointwise B" + std::to_string(i));
  for (std::size_t i = 0; i < distributed_.size(); ++i)
    for (const auto& c : distributed_[i].kernel.data()) require_square(c, n, "model: distributed kernel " + std::to_string(i));
  if (nonlinearity_) {
    const auto& g = nonlinearity_->growth();
    if (!(g.g_alpha > 0.0) || !(g.g_beta > 0.0) || !(g.g_gamma > 0.0))
      throw std::invalid_argument("model: growth constants g_alpha, g_beta, g_gamma must be positive");
    for (double c : nonlinearity_->coefficients())
      if (!std::isfinite(c)) throw std::invalid_argument("model: nonlinearity coefficients must be finite");
    if ((*nonlinearity_)(Vector::Zero(n)).norm() != 0.0) throw std::invalid_argument("model: nonlinearity must satisfy g(0) = 0");
  }
}

SystemModel SystemModel::delayed_linear(double h_max, const Matrix& m, const Matrix& n) {
  return SystemModel(h_max, m, {PointwiseTerm{n, 0}});
}

std::size_t SystemModel::required_delays() const {
  std::size_t count = 0;
  for (const auto& p : pointwise_) count = std::max(count, p.delay_index + 1);
  for (const auto& d : distributed_) count = std::max(count, d.delay_index + 1);
  return count;
}

Vector SystemModel::rhs(double t, const Vector& x, const std::function<Vector(double)>& past, const DelaySignal& zeta,
                        int distributed_panels) const {
  Vector out = a_ * x;
  for (const auto& term : pointwise_) out.noalias() += term.B * past(t - zeta(term.delay_index, t));
  for (const auto& term : distributed_) {
    const double h = zeta(term.delay_index, t);
    if (h <= 0.0) continue;
    out += weighted_quadrature([&](double theta) { return past(t + theta); }, -h, 0.0,
                               [&](double theta) { return term.kernel(theta); }, distributed_panels);
  }
  if (nonlinearity_) out += (*nonlinearity_)(x);
  return out;
}

GrowthCheck verify_growth(const SystemModel& model, std::uint64_t seed, int samples) {
  GrowthCheck check;
  if (!model.nonlinearity()) return check;
  const auto& g = *model.nonlinearity();
  const auto& c = g.growth();
  CounterRng rng(seed, "growth-check");
  const Eigen::Index n = model.dim();
  for (int s = 0; s < samples; ++s) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.normal();
    const double r = c.g_alpha * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    if (x.norm() == 0.0) continue;
    x *= r / x.norm();
    const double bound = c.g_beta * std::pow(x.norm(), 1.0 + c.g_gamma);
    const double actual = g(x).norm();
    if (bound > 0.0) check.worst_ratio = std::max(check.worst_ratio, actual / bound);
    if (actual > bound * (1.0 + 1e-12) + 1e-300) check.holds = false;
  }
  return check;
}

// --- Trajectory ---------------------------------------------------------------

Trajectory::Trajectory(HistoryFunction history, std::shared_ptr<const HermitePath> path, double horizon,
                       TrajectoryStatus status, double dt)
    : history_(std::move(history)), path_(std::move(path)), horizon_(horizon), status_(status), dt_(dt) {}

Vector Trajectory::state(double t) const {
  if (t <= 0.0) return history_(t);
  if (t > end_time() * (1.0 + 1e-14) + 1e-300) throw std::out_of_range("trajectory evaluated beyond its end time");
  return path_->value(std::min(t, end_time()));
}

Vector Trajectory::derivative(double t) const {
  if (t < 0.0) return history_.derivative(t);
  if (t > end_time() * (1.0 + 1e-14) + 1e-300) throw std::out_of_range("trajectory evaluated beyond its end time");
  return path_->derivative(std::min(t, end_time()));
}

HistoryFunction Trajectory::window(double t) const {
  if (!(t >= 0.0) || t > end_time() * (1.0 + 1e-14)) throw std::out_of_range("window: t outside [0, t_end]");
  return make_window(history_, path_, t);
}

double Trajectory::sup_norm_on(double a, double b) const {
  const double h = h_max();
  if (!(a >= -h * (1.0 + 1e-14)) || !(b >= a) || b > end_time() * (1.0 + 1e-14))
    throw std::out_of_range("sup_norm_on: need -h_M <= a <= b <= t_end");
  double best = 0.0;
  if (a <= 0.0) best = history_.sup_norm(std::max(a, -h), std::min(b, 0.0));
  if (b > 0.0 && path_->node_count() >= 2) best = std::max(best, path_->sup_norm(std::max(a, 0.0), std::min(b, end_time())));
  return best;
}

// --- Integration --------------------------------------------------------------

Trajectory integrate(const SystemModel& model, const DelaySignal& zeta, const HistoryFunction& x0, double horizon,
                     const SolverOptions& opts) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("integrate: T must be positive");
  if (!(opts.dt > 0.0) || !std::isfinite(opts.dt)) throw std::invalid_argument("integrate: dt must be positive");
  if (opts.overlap_iterations < 1) throw std::invalid_argument("integrate: overlap iterations must be >= 1");
  if (x0.dim() != model.dim()) throw std::invalid_argument("integrate: history dimension does not match the model");
  if (!windows_match(x0.h_max(), model.h_max()) || !windows_match(zeta.h_max(), model.h_max()))
    throw std::invalid_argument("integrate: history, delay signal and model must share h_M");
  if (zeta.arity() < model.required_delays()) throw std::invalid_argument("integrate: delay signal has too few components");

  const double h_max = model.h_max();
  auto path = std::make_shared<HermitePath>();
  TrajectoryStatus status = TrajectoryStatus::Complete;

  // Provisional Hermite segment of the step in progress.
  double seg_t0 = 0.0, seg_t1 = 0.0;
  Vector seg_x0, seg_d0, seg_x1, seg_d1;
  bool overlap = false;

  auto segment_value = [&](double s) -> Vector {
    const double h = seg_t1 - seg_t0;
    const double u = (s - seg_t0) / h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * seg_x0 + (h * (u3 - 2 * u2 + u)) * seg_d0 + (-2 * u3 + 3 * u2) * seg_x1 +
           (h * (u3 - u2)) * seg_d1;
  };
  auto lookup = [&](double s) -> Vector {
    if (s <= 0.0) return x0(std::max(s, -h_max));
    if (s <= seg_t0) return path->value(s);
    overlap = true;
    return segment_value(std::min(s, seg_t1));
  };
  const std::function<Vector(double)> past = lookup;
  auto f = [&](double t, const Vector& x) { return model.rhs(t, x, past, zeta, opts.distributed_panels); };

  Vector x = x0(0.0);
  seg_t0 = 0.0;
  Vector dx = f(0.0, x);
  path->append(0.0, x, dx);

  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / opts.dt - 1e-9)));
  for (std::size_t k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * opts.dt;
    const double t1 = (k + 1 == steps) ? horizon : static_cast<double>(k + 1) * opts.dt;
    const double h = t1 - t0;

    seg_t0 = t0;
    seg_t1 = t1;
    seg_x0 = x;
    seg_d0 = dx;
    seg_x1 = x + h * dx;
    seg_d1 = dx;

    Vector x_next, dx_next;
    for (int it = 0; it < opts.overlap_iterations; ++it) {
      overlap = false;
      const Vector& k1 = dx;
      const Vector k2 = f(t0 + 0.5 * h, x + (0.5 * h) * k1);
      const Vector k3 = f(t0 + 0.5 * h, x + (0.5 * h) * k2);
      const Vector k4 = f(t1, x + h * k3);
      x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      seg_x1 = x_next;
      dx_next = f(t1, x_next);
      seg_d1 = dx_next;
      if (!overlap) break;
    }

    if (!x_next.allFinite() || !dx_next.allFinite()) {
      status = TrajectoryStatus::BlewUp;
      break;
    }
    path->append(t1, x_next, dx_next);
    x = std::move(x_next);
    dx = std::move(dx_next);
    if (x.norm() > opts.blowup_threshold) {
      status = TrajectoryStatus::BlewUp;
      break;
    }
  }
  return Trajectory(x0, std::move(path), horizon, status, opts.dt);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const Eigen::Index n = traj.dim();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",dx_" << i;
  out << '\n';
  const auto& p = traj.path();
  for (std::size_t k = 0; k < p.node_count(); ++k) {
    out << format_double(p.nodes()[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(p.node_value(k)(i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(p.node_derivative(k)(i));
    out << '\n';
  }
}

}  // namespace krasovskii
