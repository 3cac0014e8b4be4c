#include "krasovskii/lkf.hpp"

#include "krasovskii/io.hpp"
#include "krasovskii/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace krasovskii {

namespace {

// Points in (a, b) where ẋ may lose smoothness: history breakpoints, 0, solver nodes.
std::vector<double> pieces(const Trajectory& traj, double a, double b) {
  std::vector<double> cuts{a};
  if (a < 0.0) {
    for (double p : traj.history().breakpoints())
      if (p > a && p < b) cuts.push_back(p);
    if (b > 0.0) cuts.push_back(0.0);
  }
  if (b > 0.0) {
    const auto& nodes = traj.path().nodes();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), std::max(a, 0.0));
    for (; it != nodes.end() && *it < b; ++it) cuts.push_back(*it);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace

double lkf_value(const Trajectory& traj, double t, const SymMatrix& p1, const SymMatrix& q, int panels) {
  const double h = traj.h_max();
  if (p1.dim() != traj.dim() || q.dim() != traj.dim()) throw std::invalid_argument("lkf_value: dimension mismatch");
  if (!(t >= 0.0) || t > traj.end_time() * (1.0 + 1e-14)) throw std::out_of_range("lkf_value: t outside [0, t_end]");
  const double a = t - h;
  if (a < 0.0 && !traj.history().in_w()) throw std::invalid_argument("V undefined: history not in W");

  const Vector x = traj.state(t);
  double value = p1.quadratic_form(x);
  const std::vector<double> cuts = pieces(traj, a, t);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k];
    const double hi = cuts[k + 1];
    // Interior evaluation keeps each piece on one side of its breakpoints.
    const double mid = 0.5 * (lo + hi);
    const bool on_history = mid < 0.0;
    auto integrand = [&](double s) {
      const double clamped = std::clamp(s, lo, hi);
      const Vector dx = on_history ? traj.history().derivative(std::min(clamped, 0.0))
                                   : traj.path().derivative(std::max(clamped, 0.0));
      return q.quadratic_form(dx);
    };
    if (!on_history) {
      // ẋ is quadratic between solver nodes, so (s − a)·ẋᵀQẋ is a quintic.
      value += gauss3([&](double s) { return (s - a) * integrand(s); }, lo, hi);
      continue;
    }
    const int n = std::max(2, static_cast<int>(std::ceil(panels * (hi - lo) / h)));
    value += weighted_quadrature(integrand, lo, hi, [&](double s) { return s - a; }, n);
  }
  return value;
}

std::vector<double> lkf_values(const Trajectory& traj, const std::vector<double>& times, const SymMatrix& p1,
                               const SymMatrix& q, int panels) {
  std::vector<double> out(times.size());
  parallel_for(times.size(), [&](std::size_t i) { out[i] = lkf_value(traj, times[i], p1, q, panels); });
  return out;
}

double dini_upper_estimate(const std::vector<double>& values, std::size_t index, double spacing,
                           const std::vector<std::size_t>& offsets) {
  if (offsets.empty() || !(spacing > 0.0)) throw std::invalid_argument("dini_upper_estimate: need offsets and spacing > 0");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t o : offsets) {
    if (o == 0 || index + o >= values.size()) throw std::out_of_range("dini_upper_estimate: insufficient forward samples");
    best = std::max(best, (values[index + o] - values[index]) / (static_cast<double>(o) * spacing));
  }
  return best;
}

std::string to_string(LkfVerdictKind kind) {
  switch (kind) {
    case LkfVerdictKind::Pass: return "pass";
    case LkfVerdictKind::DissipationViolated: return "dissipation-violated";
    case LkfVerdictKind::SandwichViolated: return "sandwich-violated";
  }
  return "unknown";
}

DissipationReport dissipation_check(const Trajectory& traj, const LmiCertificate& cert,
                                    const ComparisonFunction& omega3, const DissipationOptions& opts) {
  if (opts.samples < 1) throw std::invalid_argument("dissipation_check: samples must be >= 1");
  DissipationReport report;
  const double t_end = traj.end_time();
  const double step = t_end / opts.samples;
  const double fine = step / 4.0;
  const std::size_t fine_count = 4 * static_cast<std::size_t>(opts.samples) + 1;
  std::vector<double> fine_times(fine_count);
  for (std::size_t k = 0; k < fine_count; ++k) fine_times[k] = std::min(fine * static_cast<double>(k), t_end);
  const std::vector<double> v = lkf_values(traj, fine_times, cert.P1, cert.Q, opts.panels);

  const double lambda_min_p1 = sym_eig(cert.P1).min();
  report.max_value = *std::max_element(v.begin(), v.end());
  report.tolerance = opts.abs_tolerance + opts.rel_tolerance * std::max(report.max_value, 0.0);
  report.max_residual = -std::numeric_limits<double>::infinity();

  bool sandwich_ok = lambda_min_p1 > 0.0;
  if (!sandwich_ok) report.detail = "P1 is not positive definite";
  for (int j = 0; j < opts.samples; ++j) {
    const std::size_t idx = 4 * static_cast<std::size_t>(j);
    const double t = fine_times[idx];
    const double xnorm = traj.state(t).norm();
    const double dini = dini_upper_estimate(v, idx, fine);
    const double residual =
        dini + (opts.mode == DissipationMode::Pointwise ? omega3(xnorm) : opts.k3 * v[idx]);
    report.trace.times.push_back(t);
    report.trace.values.push_back(v[idx]);
    report.trace.dini.push_back(dini);
    report.trace.residuals.push_back(residual);
    report.max_residual = std::max(report.max_residual, residual);
    if (sandwich_ok && v[idx] < lambda_min_p1 * xnorm * xnorm - report.tolerance) {
      sandwich_ok = false;
      report.detail = "V below lambda_min(P1)|x|^2 at t = " + format_double(t);
    }
  }
  if (!sandwich_ok) report.verdict = LkfVerdictKind::SandwichViolated;
  else if (report.max_residual > report.tolerance) report.verdict = LkfVerdictKind::DissipationViolated;
  else report.verdict = LkfVerdictKind::Pass;
  return report;
}

std::pair<ComparisonFunction, ComparisonFunction> default_sandwich(const LmiCertificate& cert) {
  const Spectrum p1 = sym_eig(cert.P1);
  const Spectrum q = sym_eig(cert.Q);
  return {ComparisonFunction::power(p1.min(), 2.0),
          ComparisonFunction::power(std::max(p1.max(), cert.h_max * q.max()), 2.0)};
}

SandwichReport sandwich_check(const Trajectory& traj, const LmiCertificate& cert, const ComparisonFunction& omega1,
                              const ComparisonFunction& omega2, int samples, double rel_tolerance) {
  if (samples < 1) throw std::invalid_argument("sandwich_check: samples must be >= 1");
  SandwichReport report;
  const double t_end = traj.end_time();
  const double h = traj.h_max();
  std::vector<double> times;
  for (int j = 0; j <= samples; ++j) {
    const double t = t_end * j / samples;
    if (t >= h || traj.history().in_w()) times.push_back(t);
  }
  std::vector<double> lower(times.size()), upper(times.size());
  parallel_for(times.size(), [&](std::size_t i) {
    const double t = times[i];
    const double v = lkf_value(traj, t, cert.P1, cert.Q);
    const double w1 = omega1(traj.state(t).norm());
    const double w2 = omega2(w_norm(traj.window(t)));
    const double scale = std::max({std::abs(v), std::abs(w1), std::abs(w2), 1e-300});
    lower[i] = (w1 - v) / scale;
    upper[i] = (v - w2) / scale;
  });
  report.checked_samples = static_cast<int>(times.size());
  report.worst_lower_gap = -std::numeric_limits<double>::infinity();
  report.worst_upper_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < times.size(); ++i) {
    report.worst_lower_gap = std::max(report.worst_lower_gap, lower[i]);
    report.worst_upper_gap = std::max(report.worst_upper_gap, upper[i]);
  }
  report.pass = report.worst_lower_gap <= rel_tolerance && report.worst_upper_gap <= rel_tolerance;
  return report;
}

void write_lkf_csv(const LkfTrace& trace, std::ostream& out) {
  out << "t,V,DiniV,residual\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    out << format_double(trace.times[i]) << ',' << format_double(trace.values[i]) << ','
        << format_double(trace.dini[i]) << ',' << format_double(trace.residuals[i]) << '\n';
}

}  // namespace krasovskii
