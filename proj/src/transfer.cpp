#include "krasovskii/transfer.hpp"

#include "krasovskii/io.hpp"
#include "krasovskii/parallel.hpp"
#include "krasovskii/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace krasovskii {

namespace {

double kernel_norm_integral(const DistributedKernel& kernel, double h) {
  if (kernel.is_sampled()) {
    // The norm is convex along each linear piece, so the trapezoid rule on the
    // node norms bounds the integral from above.
    const auto& values = kernel.data();
    const double step = h / static_cast<double>(values.size() - 1);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k)
      sum += 0.5 * step * (matrix_2norm(values[k]) + matrix_2norm(values[k + 1]));
    return sum;
  }
  if (kernel.data().size() == 1) return h * matrix_2norm(kernel.data().front());
  return quadrature([&](double theta) { return matrix_2norm(kernel(theta)); }, -h, 0.0, 256);
}

Vector random_in_ball(CounterRng& rng, Eigen::Index n, double radius) {
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.normal();
  const double norm = x.norm();
  if (norm == 0.0) return Vector::Zero(n);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return x * (r / norm);
}

double sampled_lipschitz(const Nonlinearity& g, Eigen::Index n, double radius, std::uint64_t seed) {
  CounterRng rng(seed, "lipschitz-pairs");
  double best = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Vector x = random_in_ball(rng, n, radius);
    const Vector y = random_in_ball(rng, n, radius);
    const double dist = (x - y).norm();
    if (dist > 0.0) best = std::max(best, (g(x) - g(y)).norm() / dist);
  }
  return 1.5 * best;
}

struct WindowRun {
  Trajectory traj;
  double x0_norm;
};

WindowRun run_one_window(const SystemModel& model, const DelaySignal& zeta, const HistoryFunction& x0,
                         const TransferOptions& opts, double lipschitz) {
  const double h = model.h_max();
  const double x0_norm = uniform_norm(x0);
  if (!model.is_linear()) {
    const double required = *opts.radius / (1.0 + std::exp(lipschitz * h));
    if (!(x0_norm < required))
      throw std::invalid_argument("initial condition too large: need ||x0||_inf < " + format_double(required) +
                                  ", got " + format_double(x0_norm));
  }
  return {integrate(model, zeta, x0, h, opts.solver), x0_norm};
}

double least_squares_slope(const std::vector<double>& t, const std::vector<double>& y, double& intercept,
                           double& rms) {
  const auto n = static_cast<double>(t.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
  }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  intercept = my - slope * mt;
  double sr = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (intercept + slope * t[i]);
    sr += r * r;
  }
  rms = std::sqrt(sr / n);
  return slope;
}

}  // namespace

double lipschitz_bound(const SystemModel& model, std::optional<double> radius, std::uint64_t seed) {
  const double h = model.h_max();
  double l = matrix_2norm(model.a());
  for (const auto& term : model.pointwise()) l += matrix_2norm(term.B);
  for (const auto& term : model.distributed()) l += kernel_norm_integral(term.kernel, h);
  if (const auto& g = model.nonlinearity()) {
    if (g->is_linear()) {
      if (g->kind() == Nonlinearity::Kind::ComponentwisePolynomial && g->coefficients().size() > 1)
        l += std::abs(g->coefficients()[1]);
    } else {
      if (!radius || !std::isfinite(*radius)) throw std::invalid_argument("no global Lipschitz bound");
      if (!(*radius > 0.0)) throw std::invalid_argument("lipschitz_bound: radius must be positive");
      l += sampled_lipschitz(*g, model.dim(), *radius, seed);
    }
  }
  return l;
}

SmoothingReport smoothing_check(const SystemModel& model, const DelaySignal& zeta, const HistoryFunction& x0,
                                const TransferOptions& opts) {
  const double h = model.h_max();
  SmoothingReport r;
  r.lipschitz_rigorous = model.is_linear();
  r.L = lipschitz_bound(model, opts.radius, opts.seed);
  r.gronwall_factor = 1.0 + std::exp(r.L * h);
  r.smoothing_factor = r.gronwall_factor * std::sqrt(1.0 + h * r.L * r.L);
  const WindowRun run = run_one_window(model, zeta, x0, opts, r.L);
  r.initial_uniform_norm = run.x0_norm;
  r.bound = r.smoothing_factor * run.x0_norm;
  if (run.traj.blew_up()) {
    r.observed_w_norm = std::numeric_limits<double>::infinity();
    r.pass = false;
    return r;
  }
  r.observed_w_norm = w_norm(run.traj.window(h));
  r.pass = r.observed_w_norm <= r.bound + 1e-9;
  return r;
}

GronwallReport gronwall_check(const SystemModel& model, const DelaySignal& zeta, const HistoryFunction& x0,
                              const TransferOptions& opts) {
  const double h = model.h_max();
  GronwallReport r;
  r.L = lipschitz_bound(model, opts.radius, opts.seed);
  r.bound_factor = 1.0 + std::exp(r.L * h);
  const WindowRun run = run_one_window(model, zeta, x0, opts, r.L);
  if (run.x0_norm == 0.0) {
    r.observed_factor = 0.0;
    r.pass = true;
    return r;
  }
  if (run.traj.blew_up()) {
    r.observed_factor = std::numeric_limits<double>::infinity();
    r.pass = false;
    return r;
  }
  r.observed_factor = run.traj.sup_norm_on(-h, h) / run.x0_norm;
  r.pass = r.observed_factor <= r.bound_factor;
  return r;
}

double shift_consistency(const SystemModel& model, const DelaySignal& zeta, const HistoryFunction& x0,
                         double horizon, const SolverOptions& opts) {
  const double h = model.h_max();
  if (!(horizon >= 2.0 * h)) throw std::invalid_argument("shift_consistency: need T >= 2 h_M");
  const Trajectory full = integrate(model, zeta, x0, horizon, opts);
  if (full.blew_up()) return std::numeric_limits<double>::infinity();
  const Trajectory restarted = integrate(model, shift_delay(zeta, h), full.window(h), horizon - h, opts);
  if (restarted.blew_up()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  constexpr int kGrid = 200;
  const double span = std::min(horizon - h, restarted.end_time());
  for (int j = 0; j < kGrid; ++j) {
    const double t = span * j / (kGrid - 1);
    worst = std::max(worst, (full.state(std::min(t + h, full.end_time())) - restarted.state(t)).norm());
  }
  return worst;
}

std::string to_string(KlVerdict verdict) {
  switch (verdict) {
    case KlVerdict::Decaying: return "decaying";
    case KlVerdict::Flat: return "flat";
    case KlVerdict::Growing: return "growing";
  }
  return "unknown";
}

std::string to_string(NormScale scale) { return scale == NormScale::Uniform ? "uniform" : "w"; }

KlEnvelope empirical_kl(const SystemModel& model, const std::vector<DelaySignal>& delays,
                        const std::vector<HistoryFunction>& ics, double horizon, NormScale scale,
                        const KlOptions& opts) {
  if (delays.empty() || ics.empty()) throw std::invalid_argument("empirical_kl: empty ensemble");
  if (!(horizon > 0.0)) throw std::invalid_argument("empirical_kl: T must be positive");
  if (opts.samples < 2) throw std::invalid_argument("empirical_kl: need at least 2 samples");
  const double h = model.h_max();
  for (const auto& ic : ics)
    if (std::abs(ic.h_max() - h) > 1e-12 * h) throw std::invalid_argument("empirical_kl: members must share h_M");

  KlEnvelope env;
  env.scale = scale;
  struct Member {
    std::size_t delay;
    std::size_t ic;
    double norm;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (opts.pairing == Pairing::Zip) {
    if (delays.size() != ics.size()) throw std::invalid_argument("empirical_kl: zip pairing needs as many delays as ICs");
    for (std::size_t k = 0; k < ics.size(); ++k) pairs.emplace_back(k, k);
  } else {
    for (std::size_t d = 0; d < delays.size(); ++d)
      for (std::size_t i = 0; i < ics.size(); ++i) pairs.emplace_back(d, i);
  }
  std::vector<Member> members;
  for (const auto& [d, i] : pairs) {
    if (scale == NormScale::W && !ics[i].in_w()) {
      ++env.excluded_not_w;
      continue;
    }
    const double norm = scale == NormScale::Uniform ? uniform_norm(ics[i]) : w_norm(ics[i]);
    if (norm == 0.0) {
      ++env.excluded_zero;
      continue;
    }
    env.radius = std::max(env.radius, norm);
    members.push_back({d, i, norm});
  }
  env.members = members.size();
  if (members.size() < opts.min_members)
    throw std::invalid_argument("empirical_kl: need at least " + std::to_string(opts.min_members) +
                                " ensemble members with nonzero norm, got " + std::to_string(members.size()));

  const auto samples = static_cast<std::size_t>(opts.samples);
  env.times.resize(samples);
  for (std::size_t j = 0; j < samples; ++j) env.times[j] = horizon * static_cast<double>(j) / (opts.samples - 1);

  std::vector<std::vector<double>> curves(members.size());
  std::vector<double> end_times(members.size());
  env.final_window_ratio.assign(members.size(), std::numeric_limits<double>::infinity());
  parallel_for(members.size(), [&](std::size_t k) {
    const Member& m = members[k];
    const Trajectory traj = integrate(model, delays[m.delay], ics[m.ic], horizon, opts.solver);
    end_times[k] = traj.blew_up() ? traj.end_time() : std::numeric_limits<double>::infinity();
    if (!traj.blew_up()) env.final_window_ratio[k] = traj.sup_norm_on(std::max(horizon - h, -h), horizon) / m.norm;
    auto& curve = curves[k];
    curve.resize(samples);
    for (std::size_t j = 0; j < samples; ++j) {
      const double t = env.times[j];
      curve[j] = t <= traj.end_time() ? traj.state(t).norm() / m.norm : std::numeric_limits<double>::infinity();
    }
  });

  env.envelope.assign(samples, 0.0);
  for (std::size_t k = 0; k < members.size(); ++k)
    for (std::size_t j = 0; j < samples; ++j) env.envelope[j] = std::max(env.envelope[j], curves[k][j]);
  const double t_f = *std::min_element(end_times.begin(), end_times.end());
  env.blew_up = std::isfinite(t_f);
  env.t_f = env.blew_up ? t_f : 0.0;

  std::vector<double> ft, fy;
  for (std::size_t j = 0; j < samples; ++j)
    if (env.times[j] >= h && std::isfinite(env.envelope[j]) && env.envelope[j] > 0.0) {
      ft.push_back(env.times[j]);
      fy.push_back(std::log(env.envelope[j]));
    }
  if (ft.size() < 2) {
    env.c0 = ft.empty() ? 0.0 : std::exp(fy.front());
    env.kappa = 0.0;
    env.verdict = env.blew_up ? KlVerdict::Growing : KlVerdict::Flat;
    return env;
  }
  double intercept = 0.0, rms = 0.0;
  const double raw_slope = least_squares_slope(ft, fy, intercept, rms);
  if (-raw_slope < -opts.flat_threshold || env.blew_up) {
    env.kappa = -raw_slope;
  } else {
    for (std::size_t j = fy.size() - 1; j-- > 0;) fy[j] = std::max(fy[j], fy[j + 1]);
    env.kappa = -least_squares_slope(ft, fy, intercept, rms);
  }
  env.c0 = std::exp(intercept);
  env.fit_residual = rms;
  if (env.blew_up || env.kappa < -opts.flat_threshold) env.verdict = KlVerdict::Growing;
  else if (env.kappa > opts.flat_threshold) env.verdict = KlVerdict::Decaying;
  else env.verdict = KlVerdict::Flat;
  return env;
}

CompositionReport composition_check(const KlEnvelope& uniform, const KlEnvelope& w, double lipschitz, double h_max,
                                    double slack) {
  CompositionReport r;
  r.factor = (1.0 + std::exp(lipschitz * h_max)) * std::sqrt(1.0 + h_max * lipschitz * lipschitz);
  for (std::size_t j = 0; j < uniform.times.size(); ++j) {
    const double t = uniform.times[j];
    if (t < h_max) continue;
    const double bound = r.factor * w.fit(t - h_max);
    const double ratio = bound > 0.0 ? uniform.envelope[j] / bound
                                     : (uniform.envelope[j] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.worst_ratio = std::max(r.worst_ratio, ratio);
  }
  r.pass = r.worst_ratio <= 1.0 + slack;
  return r;
}

DelaySignal random_delay_signal(CounterRng& rng, double h_max) {
  constexpr double kTwoPi = 6.283185307179586;
  switch (rng.integer(0, 3)) {
    case 0:
      return DelaySignal(h_max, {ConstantDelay{rng.uniform(0.0, h_max)}});
    case 1: {
      const double offset = rng.uniform(0.2 * h_max, 0.8 * h_max);
      const double amplitude = rng.uniform(0.0, std::min(offset, h_max - offset));
      return DelaySignal(h_max, {SinusoidDelay{offset, amplitude, rng.uniform(0.2, 5.0), rng.uniform(0.0, kTwoPi)}});
    }
    case 2: {
      const double low = rng.uniform(0.0, 0.5 * h_max);
      const double high = rng.uniform(low, h_max);
      const double period = rng.uniform(0.5, 5.0);
      return DelaySignal(h_max, {SawtoothDelay{low, high, period, rng.uniform(0.1, 0.9), rng.uniform(0.0, period)}});
    }
    default: {
      const double period = rng.uniform(0.5, 5.0);
      std::vector<double> values(5);
      for (double& v : values) v = rng.uniform(0.0, h_max);
      return DelaySignal(h_max, {TableDelay{period, values, rng.uniform(0.0, period)}});
    }
  }
}

HistoryFunction random_w_history(CounterRng& rng, double h_max, Eigen::Index dim) {
  auto normal_vector = [&] {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.normal();
    return v;
  };
  switch (rng.integer(0, 3)) {
    case 0: {
      std::vector<Vector> values(static_cast<std::size_t>(rng.integer(2, 12)));
      for (auto& v : values) v = normal_vector();
      return make_sampled_history(h_max, std::move(values), Interpolation::Linear);
    }
    case 1: {
      std::vector<Vector> values(static_cast<std::size_t>(rng.integer(3, 12)));
      for (auto& v : values) v = normal_vector();
      return make_sampled_history(h_max, std::move(values), Interpolation::CubicHermite);
    }
    case 2:
      return make_sine_history(h_max, normal_vector(), rng.uniform(0.5, 6.0), rng.uniform(0.0, 6.283185307179586));
    default:
      return make_constant_history(h_max, normal_vector());
  }
}

void write_envelope_csv(const KlEnvelope& env, std::ostream& out) {
  out << "t,envelope,fit\n";
  for (std::size_t j = 0; j < env.times.size(); ++j)
    out << format_double(env.times[j]) << ',' << format_double(env.envelope[j]) << ','
        << format_double(env.fit(env.times[j])) << '\n';
}

}  // namespace krasovskii
