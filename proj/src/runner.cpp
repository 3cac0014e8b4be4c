#include "krasovskii/runner.hpp"

#include "krasovskii/io.hpp"
#include "krasovskii/lkf.hpp"
#include "krasovskii/lmi.hpp"
#include "krasovskii/rng.hpp"
#include "krasovskii/transfer.hpp"

#include "json.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace krasovskii {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Output {
  ojson report;
  std::vector<std::pair<std::string, std::string>> files;
  bool pass = false;
};

ojson to_json(const Matrix& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

ojson to_json(const LmiCertificate& c) {
  return ojson{{"P1", to_json(c.P1.dense())}, {"P2", to_json(c.P2)}, {"P3", to_json(c.P3)},
               {"Q", to_json(c.Q.dense())}, {"h_max", c.h_max}};
}

ojson to_json(const CertificateReport& r) {
  return ojson{{"feasible", r.feasible},
               {"lambda_max_lmi", r.lambda_max_lmi},
               {"lambda_min_P1", r.lambda_min_P1},
               {"lambda_min_Q", r.lambda_min_Q},
               {"margin", r.margin}};
}

ojson to_json(const NonlinearRegion& r) {
  return ojson{{"epsilon", r.epsilon}, {"delta", r.delta}, {"eta", r.eta}, {"H", r.H},
               {"lambda_max_theta", r.lambda_max_theta}};
}

// Non-finite values have no JSON literal; they are written as strings.
ojson number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

ojson to_json(const KlEnvelope& e) {
  return ojson{{"scale", to_string(e.scale)},  {"verdict", to_string(e.verdict)}, {"c0", number(e.c0)},
               {"kappa", number(e.kappa)},     {"fit_residual", number(e.fit_residual)},
               {"radius", number(e.radius)},   {"members", e.members},
               {"excluded_zero", e.excluded_zero}, {"excluded_not_w", e.excluded_not_w},
               {"blew_up", e.blew_up},          {"t_f", number(e.t_f)}};
}

std::pair<Matrix, Matrix> delayed_pair(const SystemModel& model) {
  const Matrix n = model.pointwise().empty() ? Matrix::Zero(model.dim(), model.dim()) : model.pointwise().front().B;
  return {model.a(), n};
}

std::string csv_of(const Trajectory& traj) {
  std::ostringstream s;
  write_trajectory_csv(traj, s);
  return s.str();
}

SynthesisOptions synthesis_options(const ExperimentConfig& cfg) {
  SynthesisOptions o;
  o.seed = cfg.seed;
  if (const auto* t = std::get_if<CertifyTask>(&cfg.task)) {
    o.restarts = t->restarts;
    o.max_iterations = t->max_iterations;
  }
  return o;
}

ojson trajectory_summary(const Trajectory& traj) {
  return ojson{{"status", traj.blew_up() ? "blew-up" : "complete"},
               {"end_time", traj.end_time()},
               {"sup_norm", number(traj.sup_norm_on(-traj.h_max(), traj.end_time()))},
               {"final_norm", number(traj.state(traj.end_time()).norm())},
               {"steps", traj.path().node_count() - 1}};
}

Output run_certify(const ExperimentConfig& cfg, const CertifyTask& task) {
  Output out;
  const auto [m, n] = delayed_pair(*cfg.model);
  std::optional<LmiCertificate> cert;
  CertificateReport report;
  if (task.certificate) {
    cert = task.certificate;
    report = check_certificate(m, n, cfg.h_max, *cert);
    out.report["mode"] = "check";
  } else {
    const SynthesisResult r = synthesize_certificate(m, n, cfg.h_max, synthesis_options(cfg));
    out.report["mode"] = "synthesize";
    out.report["restart_index"] = r.restart_index;
    out.report["iterations"] = r.iterations;
    out.report["best_objective"] = number(r.best_objective);
    cert = r.certificate;
    report = r.report;
  }
  out.report["check"] = to_json(report);
  out.pass = report.feasible;
  if (cert) out.report["certificate"] = to_json(*cert);
  if (report.feasible && cert) {
    out.report["lambda_max_theta"] = sym_eig(assemble_theta(m, n, cfg.h_max, *cert)).max();
    if (const auto& g = cfg.model->nonlinearity(); g && !g->is_linear())
      out.report["nonlinear_region"] = to_json(nonlinear_region(m, n, cfg.h_max, *cert, g->growth()));
  }
  return out;
}

Output run_simulate(const ExperimentConfig& cfg) {
  Output out;
  const Trajectory traj = integrate(*cfg.model, *cfg.delay, *cfg.ic, cfg.horizon, cfg.solver);
  out.report["trajectory"] = trajectory_summary(traj);
  out.files.emplace_back("trajectory.csv", csv_of(traj));
  out.pass = !traj.blew_up();
  return out;
}

Output run_lkf_check(const ExperimentConfig& cfg, const LkfCheckTask& task) {
  Output out;
  const auto [m, n] = delayed_pair(*cfg.model);
  const SynthesisResult synth = synthesize_certificate(m, n, cfg.h_max, synthesis_options(cfg));
  out.report["check"] = to_json(synth.report);
  if (!synth.found()) {
    out.report["detail"] = "no certificate found at h_max";
    out.pass = false;
    return out;
  }
  const LmiCertificate& cert = *synth.certificate;
  out.report["certificate"] = to_json(cert);

  double eta = 0.0;
  if (const auto& g = cfg.model->nonlinearity(); g && !g->is_linear()) {
    const NonlinearRegion region = nonlinear_region(m, n, cfg.h_max, cert, g->growth());
    out.report["nonlinear_region"] = to_json(region);
    eta = region.eta;
  } else {
    const double lambda = sym_eig(assemble_theta(m, n, cfg.h_max, cert)).max();
    eta = -lambda / 2.0;
    out.report["lambda_max_theta"] = lambda;
  }
  out.report["omega3_coefficient"] = eta / 2.0;

  const Trajectory traj = integrate(*cfg.model, *cfg.delay, *cfg.ic, cfg.horizon, cfg.solver);
  out.report["trajectory"] = trajectory_summary(traj);
  out.files.emplace_back("trajectory.csv", csv_of(traj));

  DissipationOptions opts;
  opts.mode = task.mode;
  opts.k3 = task.k3;
  opts.samples = task.samples;
  const DissipationReport diss = dissipation_check(traj, cert, ComparisonFunction::power(eta / 2.0, 2.0), opts);
  const auto [w1, w2] = default_sandwich(cert);
  const SandwichReport sand = sandwich_check(traj, cert, w1, w2, task.samples);
  out.report["dissipation"] = ojson{{"mode", task.mode == DissipationMode::Pointwise ? "pointwise" : "exponential"},
                                    {"verdict", to_string(diss.verdict)},
                                    {"max_residual", number(diss.max_residual)},
                                    {"tolerance", diss.tolerance},
                                    {"max_value", diss.max_value},
                                    {"estimate", "forward-difference max over steps {D, D/2, D/4}"}};
  out.report["sandwich"] = ojson{{"pass", sand.pass},
                                 {"checked_samples", sand.checked_samples},
                                 {"worst_lower_gap", number(sand.worst_lower_gap)},
                                 {"worst_upper_gap", number(sand.worst_upper_gap)}};
  std::ostringstream csv;
  write_lkf_csv(diss.trace, csv);
  out.files.emplace_back("lkf.csv", csv.str());
  out.pass = !traj.blew_up() && diss.verdict == LkfVerdictKind::Pass && sand.pass;
  return out;
}

Output run_smoothing(const ExperimentConfig& cfg, const SmoothingCheckTask& task) {
  Output out;
  TransferOptions opts;
  opts.solver = cfg.solver;
  opts.radius = task.radius;
  opts.seed = cfg.seed;
  const SmoothingReport s = smoothing_check(*cfg.model, *cfg.delay, *cfg.ic, opts);
  const GronwallReport g = gronwall_check(*cfg.model, *cfg.delay, *cfg.ic, opts);
  out.report["smoothing"] = ojson{{"L", s.L},
                                  {"lipschitz_rigorous", s.lipschitz_rigorous},
                                  {"gronwall_factor", number(s.gronwall_factor)},
                                  {"smoothing_factor", number(s.smoothing_factor)},
                                  {"initial_uniform_norm", s.initial_uniform_norm},
                                  {"observed_w_norm", number(s.observed_w_norm)},
                                  {"bound", number(s.bound)},
                                  {"pass", s.pass}};
  out.report["gronwall"] = ojson{{"observed_factor", number(g.observed_factor)},
                                 {"bound_factor", number(g.bound_factor)},
                                 {"pass", g.pass}};
  out.pass = s.pass && g.pass;
  return out;
}

Output run_delay_sweep(const ExperimentConfig& cfg, const DelaySweepTask& task) {
  Output out;
  const auto [m, n] = delayed_pair(*cfg.model);
  DelaySweepOptions opts;
  opts.h_lo = task.h_lo;
  opts.h_cap = task.h_cap;
  opts.tol = task.tol;
  opts.coarse_points = task.coarse_points;
  opts.synthesis = synthesis_options(cfg);
  const DelaySweepResult sweep = max_feasible_delay(m, n, opts);
  out.report["feasible_at_h_lo"] = sweep.feasible_at_lo;
  out.report["h_lo"] = task.h_lo;
  out.report["h_cap"] = task.h_cap;
  out.report["tol"] = task.tol;
  out.report["synthesis_calls"] = sweep.synthesis_calls;
  out.report["used_linear_scan"] = sweep.used_linear_scan;
  if (!sweep.feasible_at_lo) {
    out.report["detail"] = "infeasible at h_lo";
    out.pass = false;
    return out;
  }
  out.report["h_star"] = sweep.h_star;
  if (sweep.certificate) out.report["certificate"] = to_json(*sweep.certificate);
  out.pass = true;

  if (task.cross_check) {
    const CrossCheck& cc = *task.cross_check;
    const double h = 0.9 * sweep.h_star;
    const SystemModel model = SystemModel::delayed_linear(h, m, n);
    CounterRng rng(cfg.seed, "delay-sweep-cross-check");
    std::vector<DelaySignal> delays;
    std::vector<HistoryFunction> ics;
    for (int k = 0; k < cc.members; ++k) {
      CounterRng member = rng.substream(static_cast<std::uint64_t>(k));
      delays.push_back(random_delay_signal(member, h));
      ics.push_back(random_w_history(member, h, m.rows()));
    }
    KlOptions kl;
    kl.solver = cfg.solver;
    kl.pairing = Pairing::Zip;
    const KlEnvelope env = empirical_kl(model, delays, ics, cc.horizon, NormScale::Uniform, kl);
    double worst = 0.0;
    for (double r : env.final_window_ratio) worst = std::max(worst, r);
    const bool decayed = !env.blew_up && worst <= 1.0 / cc.decay_factor;
    out.report["cross_check"] = ojson{{"h_max", h},
                                      {"T", cc.horizon},
                                      {"members", cc.members},
                                      {"required_decay_factor", cc.decay_factor},
                                      {"worst_final_ratio", number(worst)},
                                      {"pass", decayed},
                                      {"envelope", to_json(env)}};
    std::ostringstream csv;
    write_envelope_csv(env, csv);
    out.files.emplace_back("envelope.csv", csv.str());
    out.pass = decayed;
  }
  return out;
}

Output run_norms_demo(const ExperimentConfig& cfg, const NormsDemoTask& task) {
  Output out;
  const Eigen::Index n = cfg.model ? cfg.model->dim() : 1;
  Vector dir = Vector::Zero(n);
  dir(0) = 1.0;
  ojson rows = ojson::array();
  bool all = true;
  for (int m : task.m) {
    const HistoryFunction f = make_triangle_history(m, cfg.h_max, dir);
    const double u = uniform_norm(f);
    const double w = w_norm(f);
    const double closed = 2.0 * m / std::sqrt(cfg.h_max);
    const bool ok = u == 1.0 && std::abs(w - closed) <= 1e-9;
    all = all && ok;
    rows.push_back(ojson{{"m", m}, {"uniform_norm", u}, {"w_norm", w}, {"closed_form_w_norm", closed},
                         {"ratio", w / u}, {"pass", ok}});
  }
  out.report["h_max"] = cfg.h_max;
  out.report["triangles"] = rows;
  out.pass = all;
  return out;
}

}  // namespace

int execute(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  struct Visitor {
    const ExperimentConfig& cfg;
    Output operator()(const CertifyTask& t) const { return run_certify(cfg, t); }
    Output operator()(const SimulateTask&) const { return run_simulate(cfg); }
    Output operator()(const LkfCheckTask& t) const { return run_lkf_check(cfg, t); }
    Output operator()(const SmoothingCheckTask& t) const { return run_smoothing(cfg, t); }
    Output operator()(const DelaySweepTask& t) const { return run_delay_sweep(cfg, t); }
    Output operator()(const NormsDemoTask& t) const { return run_norms_demo(cfg, t); }
  };
  const std::string name = task_name(cfg.task);
  Output out;
  try {
    out = std::visit(Visitor{cfg}, cfg.task);
  } catch (const std::exception& e) {
    out.report = ojson{{"error", e.what()}};
    out.pass = false;
  }
  ojson report = ojson{{"task", name}, {"seed", cfg.seed}, {"h_max", cfg.h_max}, {"verdict", out.pass ? "pass" : "fail"}};
  for (auto& [key, value] : out.report.items()) report[key] = value;

  fs::create_directories(out_dir);
  write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
  for (const auto& [file, contents] : out.files) write_file_atomic(out_dir / file, contents);
  log << name << ": " << (out.pass ? "pass" : "fail") << " (report: " << (out_dir / "report.json").string() << ")\n";
  return out.pass ? kExitPass : kExitFail;
}

int run_config_file(const fs::path& config, const fs::path& out_dir, std::ostream& log, std::ostream& err) {
  const ParseResult parsed = load_config(config);
  if (!parsed.config) {
    for (const auto& d : parsed.diagnostics) err << config.string() << ": " << d.to_string() << "\n";
    return kExitInvalid;
  }
  try {
    return execute(*parsed.config, out_dir, log);
  } catch (const std::exception& e) {
    err << "cannot write outputs: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace krasovskii
