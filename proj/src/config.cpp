#include "krasovskii/config.hpp"

#include "krasovskii/transfer.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

namespace krasovskii {

using nlohmann::json;

std::string Diagnostic::to_string() const { return path.empty() ? message : path + ": " + message; }

std::string task_name(const Task& task) {
  struct Visitor {
    std::string operator()(const CertifyTask&) const { return "certify"; }
    std::string operator()(const SimulateTask&) const { return "simulate"; }
    std::string operator()(const LkfCheckTask&) const { return "lkf-check"; }
    std::string operator()(const SmoothingCheckTask&) const { return "smoothing-check"; }
    std::string operator()(const DelaySweepTask&) const { return "delay-sweep"; }
    std::string operator()(const NormsDemoTask&) const { return "norms-demo"; }
  };
  return std::visit(Visitor{}, task);
}

namespace {

std::string join(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string join(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

class Reader {
 public:
  std::vector<Diagnostic> diagnostics;

  void error(const std::string& path, std::string message) { diagnostics.push_back({path, std::move(message)}); }
  [[nodiscard]] bool ok() const { return diagnostics.empty(); }

  bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
      error(path, "expected an object");
      return false;
    }
    bool clean = true;
    for (const auto& item : j.items()) {
      bool known = false;
      for (auto k : allowed) known = known || item.key() == k;
      if (!known) {
        error(join(path, item.key()), "unknown key");
        clean = false;
      }
    }
    return clean;
  }

  const json* field(const json& obj, std::string_view key, const std::string& path, bool required) {
    auto it = obj.find(std::string(key));
    if (it == obj.end()) {
      if (required) error(join(path, key), "missing required field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      error(path, "expected a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      error(path, "must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> positive(const json& j, const std::string& path) {
    auto v = number(j, path);
    if (v && !(*v > 0.0)) {
      error(path, "must be > 0");
      return std::nullopt;
    }
    return v;
  }

  std::optional<long long> integer(const json& j, const std::string& path, long long lo, long long hi) {
    if (!j.is_number_integer()) {
      error(path, "expected an integer");
      return std::nullopt;
    }
    const long long v = j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)
                            ? hi + 1
                            : j.get<long long>();
    if (v < lo || v > hi) {
      error(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::string> string(const json& j, const std::string& path) {
    if (!j.is_string()) {
      error(path, "expected a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

  std::optional<Vector> vector(const json& j, const std::string& path, Eigen::Index expected) {
    if (!j.is_array() || j.empty()) {
      error(path, "expected a non-empty array of numbers");
      return std::nullopt;
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    bool good = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto x = number(j[i], join(path, i));
      if (x) v(static_cast<Eigen::Index>(i)) = *x;
      else good = false;
    }
    if (!good) return std::nullopt;
    if (expected > 0 && v.size() != expected) {
      error(path, "expected length " + std::to_string(expected) + ", got " + std::to_string(v.size()));
      return std::nullopt;
    }
    return v;
  }

  // Row-major square matrix; `expected` = 0 accepts any size.
  std::optional<Matrix> matrix(const json& j, const std::string& path, Eigen::Index expected) {
    if (!j.is_array() || j.empty()) {
      error(path, "expected a non-empty array of rows");
      return std::nullopt;
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    Matrix m(rows, rows);
    for (std::size_t r = 0; r < j.size(); ++r) {
      const std::string rp = join(path, r);
      if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != rows) {
        error(rp, "expected a row of length " + std::to_string(rows) + " (matrices must be square)");
        return std::nullopt;
      }
      for (std::size_t c = 0; c < j[r].size(); ++c) {
        auto x = number(j[r][c], join(rp, c));
        if (!x) return std::nullopt;
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *x;
      }
    }
    if (expected > 0 && rows != expected) {
      error(path, "expected a " + std::to_string(expected) + "x" + std::to_string(expected) + " matrix, got " +
                      std::to_string(rows) + "x" + std::to_string(rows));
      return std::nullopt;
    }
    return m;
  }

  std::optional<std::vector<Matrix>> matrix_list(const json& j, const std::string& path, Eigen::Index n,
                                                 std::size_t min_count) {
    if (!j.is_array() || j.size() < min_count) {
      error(path, "expected an array of at least " + std::to_string(min_count) + " matrices");
      return std::nullopt;
    }
    std::vector<Matrix> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
      auto m = matrix(j[k], join(path, k), n);
      if (!m) return std::nullopt;
      out.push_back(*m);
    }
    return out;
  }
};

bool delayed_linear_form(const SystemModel& model) { return model.distributed().empty() && model.pointwise().size() <= 1; }

std::optional<GrowthCertificate> read_growth(Reader& rd, const json& j, const std::string& path) {
  GrowthCertificate g;
  bool good = true;
  auto take = [&](std::string_view key, double& slot) {
    if (const json* f = rd.field(j, key, path, true)) {
      if (auto v = rd.positive(*f, join(path, key))) slot = *v;
      else good = false;
    } else {
      good = false;
    }
  };
  take("g_alpha", g.g_alpha);
  take("g_beta", g.g_beta);
  take("g_gamma", g.g_gamma);
  if (!good) return std::nullopt;
  return g;
}

std::optional<SystemModel> read_model(Reader& rd, const json& j, const std::string& path, double h) {
  if (!rd.object(j, path, {"A", "pointwise", "distributed", "nonlinearity"})) return std::nullopt;
  const std::size_t before = rd.diagnostics.size();
  std::optional<Matrix> a;
  if (const json* f = rd.field(j, "A", path, true)) a = rd.matrix(*f, join(path, "A"), 0);
  if (!a) return std::nullopt;
  const Eigen::Index n = a->rows();

  std::vector<PointwiseTerm> pointwise;
  if (const json* f = rd.field(j, "pointwise", path, false)) {
    const std::string pp = join(path, "pointwise");
    if (!f->is_array()) {
      rd.error(pp, "expected an array");
    } else {
      for (std::size_t k = 0; k < f->size(); ++k) {
        const std::string ip = join(pp, k);
        const json& item = (*f)[k];
        if (!rd.object(item, ip, {"B", "delay"})) continue;
        std::optional<Matrix> b;
        std::optional<long long> d = 0;
        if (const json* bf = rd.field(item, "B", ip, true)) b = rd.matrix(*bf, join(ip, "B"), n);
        if (const json* df = rd.field(item, "delay", ip, false)) d = rd.integer(*df, join(ip, "delay"), 0, 1000);
        if (b && d) pointwise.push_back({*b, static_cast<std::size_t>(*d)});
      }
    }
  }

  std::vector<DistributedTerm> distributed;
  if (const json* f = rd.field(j, "distributed", path, false)) {
    const std::string dp = join(path, "distributed");
    if (!f->is_array()) {
      rd.error(dp, "expected an array");
    } else {
      for (std::size_t k = 0; k < f->size(); ++k) {
        const std::string ip = join(dp, k);
        const json& item = (*f)[k];
        if (!rd.object(item, ip, {"kernel", "delay"})) continue;
        std::optional<long long> d = 0;
        if (const json* df = rd.field(item, "delay", ip, false)) d = rd.integer(*df, join(ip, "delay"), 0, 1000);
        const json* kf = rd.field(item, "kernel", ip, true);
        if (!kf) continue;
        const std::string kp = join(ip, "kernel");
        if (!kf->is_object()) {
          rd.error(kp, "expected an object");
          continue;
        }
        const json* tf = rd.field(*kf, "type", kp, true);
        if (!tf) continue;
        auto type = rd.string(*tf, join(kp, "type"));
        if (!type) continue;
        std::optional<DistributedKernel> kernel;
        if (*type == "constant") {
          if (!rd.object(*kf, kp, {"type", "B"})) continue;
          if (const json* bf = rd.field(*kf, "B", kp, true))
            if (auto b = rd.matrix(*bf, join(kp, "B"), n)) kernel = DistributedKernel::constant(*b);
        } else if (*type == "polynomial") {
          if (!rd.object(*kf, kp, {"type", "coefficients"})) continue;
          if (const json* cf = rd.field(*kf, "coefficients", kp, true))
            if (auto cs = rd.matrix_list(*cf, join(kp, "coefficients"), n, 1)) kernel = DistributedKernel::polynomial(*cs);
        } else if (*type == "sampled") {
          if (!rd.object(*kf, kp, {"type", "values"})) continue;
          if (const json* vf = rd.field(*kf, "values", kp, true))
            if (auto vs = rd.matrix_list(*vf, join(kp, "values"), n, 2)) kernel = DistributedKernel::sampled(h, *vs);
        } else {
          rd.error(join(kp, "type"), "unknown kernel type '" + *type + "' (expected constant, polynomial or sampled)");
        }
        if (kernel && d) distributed.push_back({*kernel, static_cast<std::size_t>(*d)});
      }
    }
  }

  std::optional<Nonlinearity> nonlinearity;
  if (const json* f = rd.field(j, "nonlinearity", path, false)) {
    const std::string np = join(path, "nonlinearity");
    if (!f->is_object()) {
      rd.error(np, "expected an object");
    } else if (const json* tf = rd.field(*f, "type", np, true)) {
      if (auto type = rd.string(*tf, join(np, "type"))) {
        if (*type == "cubic") {
          if (rd.object(*f, np, {"type", "scale", "g_alpha", "g_beta", "g_gamma"})) {
            std::optional<double> scale = 1.0;
            if (const json* sf = rd.field(*f, "scale", np, false)) scale = rd.number(*sf, join(np, "scale"));
            auto growth = read_growth(rd, *f, np);
            if (scale && growth) nonlinearity = Nonlinearity::cubic(*scale, *growth);
          }
        } else if (*type == "componentwise_polynomial") {
          if (rd.object(*f, np, {"type", "coefficients", "g_alpha", "g_beta", "g_gamma"})) {
            std::optional<Vector> cs;
            if (const json* cf = rd.field(*f, "coefficients", np, true)) cs = rd.vector(*cf, join(np, "coefficients"), 0);
            auto growth = read_growth(rd, *f, np);
            if (cs && growth) {
              if ((*cs)(0) != 0.0) rd.error(join(np, "coefficients/0"), "g(0) must be 0");
              else nonlinearity = Nonlinearity::componentwise_polynomial(std::vector<double>(cs->begin(), cs->end()), *growth);
            }
          }
        } else {
          rd.error(join(np, "type"), "unknown nonlinearity '" + *type + "' (expected cubic or componentwise_polynomial)");
        }
      }
    }
  }

  if (rd.diagnostics.size() != before) return std::nullopt;
  try {
    return SystemModel(h, *a, std::move(pointwise), std::move(distributed), std::move(nonlinearity));
  } catch (const std::exception& e) {
    rd.error(path, e.what());
    return std::nullopt;
  }
}

std::optional<DelayComponent> read_delay_component(Reader& rd, const json& j, const std::string& path, double h) {
  if (!j.is_object()) {
    rd.error(path, "expected an object");
    return std::nullopt;
  }
  const json* tf = rd.field(j, "type", path, true);
  if (!tf) return std::nullopt;
  auto type = rd.string(*tf, join(path, "type"));
  if (!type) return std::nullopt;
  const std::size_t before = rd.diagnostics.size();
  auto num = [&](std::string_view key, double fallback, bool required) -> double {
    if (const json* f = rd.field(j, key, path, required)) {
      if (auto v = rd.number(*f, join(path, key))) return *v;
    }
    return fallback;
  };
  DelayComponent c;
  if (*type == "constant") {
    if (!rd.object(j, path, {"type", "value"})) return std::nullopt;
    c = ConstantDelay{num("value", 0.0, true)};
  } else if (*type == "sinusoid") {
    if (!rd.object(j, path, {"type", "offset", "amplitude", "frequency", "phase"})) return std::nullopt;
    c = SinusoidDelay{num("offset", 0.0, true), num("amplitude", 0.0, true), num("frequency", 1.0, true),
                      num("phase", 0.0, false)};
  } else if (*type == "sawtooth") {
    if (!rd.object(j, path, {"type", "low", "high", "period", "rise", "phase"})) return std::nullopt;
    c = SawtoothDelay{num("low", 0.0, true), num("high", 0.0, true), num("period", 1.0, true), num("rise", 0.5, false),
                      num("phase", 0.0, false)};
  } else if (*type == "table") {
    if (!rd.object(j, path, {"type", "period", "values", "phase"})) return std::nullopt;
    std::optional<Vector> values;
    if (const json* f = rd.field(j, "values", path, true)) values = rd.vector(*f, join(path, "values"), 0);
    const double period = num("period", 1.0, true);
    const double phase = num("phase", 0.0, false);
    if (values) c = TableDelay{period, std::vector<double>(values->begin(), values->end()), phase};
  } else {
    rd.error(join(path, "type"), "unknown delay preset '" + *type + "' (expected constant, sinusoid, sawtooth or table)");
    return std::nullopt;
  }
  if (rd.diagnostics.size() != before) return std::nullopt;
  try {
    (void)DelaySignal(h, {c});
  } catch (const std::exception& e) {
    rd.error(path, e.what());
    return std::nullopt;
  }
  return c;
}

std::optional<HistoryFunction> read_ic(Reader& rd, const json& j, const std::string& path, double h, Eigen::Index n) {
  if (!j.is_object()) {
    rd.error(path, "expected an object");
    return std::nullopt;
  }
  const json* tf = rd.field(j, "type", path, true);
  if (!tf) return std::nullopt;
  auto type = rd.string(*tf, join(path, "type"));
  if (!type) return std::nullopt;
  try {
    if (*type == "constant") {
      if (!rd.object(j, path, {"type", "value"})) return std::nullopt;
      const json* f = rd.field(j, "value", path, true);
      auto v = f ? rd.vector(*f, join(path, "value"), n) : std::nullopt;
      if (!v) return std::nullopt;
      return make_constant_history(h, *v);
    }
    if (*type == "triangle") {
      if (!rd.object(j, path, {"type", "m", "direction"})) return std::nullopt;
      const json* mf = rd.field(j, "m", path, true);
      const json* df = rd.field(j, "direction", path, true);
      auto m = mf ? rd.integer(*mf, join(path, "m"), 1, 1000000) : std::nullopt;
      auto d = df ? rd.vector(*df, join(path, "direction"), n) : std::nullopt;
      if (!m || !d) return std::nullopt;
      if (std::abs(d->norm() - 1.0) > 1e-12) {
        rd.error(join(path, "direction"), "must be a unit vector");
        return std::nullopt;
      }
      return make_triangle_history(static_cast<int>(*m), h, *d);
    }
    if (*type == "rough") {
      if (!rd.object(j, path, {"type", "kind", "direction", "levels"})) return std::nullopt;
      const json* kf = rd.field(j, "kind", path, true);
      const json* df = rd.field(j, "direction", path, true);
      auto kind = kf ? rd.string(*kf, join(path, "kind")) : std::nullopt;
      auto d = df ? rd.vector(*df, join(path, "direction"), n) : std::nullopt;
      std::optional<long long> levels = 8;
      if (const json* lf = rd.field(j, "levels", path, false)) levels = rd.integer(*lf, join(path, "levels"), 0, 20);
      if (!kind || !d || !levels) return std::nullopt;
      RoughKind rk;
      try {
        rk = parse_rough_kind(*kind);
      } catch (const std::exception&) {
        rd.error(join(path, "kind"), "unknown rough kind '" + *kind + "' (expected sqrt-kink, t-sin-inv-t or cantor-approx)");
        return std::nullopt;
      }
      return make_rough_history(rk, h, *d, static_cast<int>(*levels));
    }
    if (*type == "sampled") {
      if (!rd.object(j, path, {"type", "interpolation", "values"})) return std::nullopt;
      Interpolation interp = Interpolation::Linear;
      if (const json* inf = rd.field(j, "interpolation", path, false)) {
        auto s = rd.string(*inf, join(path, "interpolation"));
        if (!s) return std::nullopt;
        if (*s == "cubic-hermite") interp = Interpolation::CubicHermite;
        else if (*s != "linear") {
          rd.error(join(path, "interpolation"), "expected linear or cubic-hermite");
          return std::nullopt;
        }
      }
      const json* vf = rd.field(j, "values", path, true);
      if (!vf) return std::nullopt;
      const std::string vp = join(path, "values");
      if (!vf->is_array() || vf->size() < 2) {
        rd.error(vp, "expected an array of at least 2 node values");
        return std::nullopt;
      }
      std::vector<Vector> values;
      for (std::size_t k = 0; k < vf->size(); ++k) {
        auto v = rd.vector((*vf)[k], join(vp, k), n);
        if (!v) return std::nullopt;
        values.push_back(*v);
      }
      return make_sampled_history(h, std::move(values), interp);
    }
    if (*type == "sine") {
      if (!rd.object(j, path, {"type", "amplitude", "omega", "phase"})) return std::nullopt;
      const json* af = rd.field(j, "amplitude", path, true);
      const json* of = rd.field(j, "omega", path, true);
      auto a = af ? rd.vector(*af, join(path, "amplitude"), n) : std::nullopt;
      auto w = of ? rd.number(*of, join(path, "omega")) : std::nullopt;
      std::optional<double> phase = 0.0;
      if (const json* pf = rd.field(j, "phase", path, false)) phase = rd.number(*pf, join(path, "phase"));
      if (!a || !w || !phase) return std::nullopt;
      return make_sine_history(h, *a, *w, *phase);
    }
    rd.error(join(path, "type"), "unknown initial condition '" + *type +
                                     "' (expected constant, triangle, rough, sampled or sine)");
  } catch (const std::exception& e) {
    rd.error(path, e.what());
  }
  return std::nullopt;
}

std::optional<LmiCertificate> read_certificate(Reader& rd, const json& j, const std::string& path, Eigen::Index n,
                                               double h) {
  if (!rd.object(j, path, {"P1", "P2", "P3", "Q"})) return std::nullopt;
  std::optional<Matrix> m[4];
  const char* keys[4] = {"P1", "P2", "P3", "Q"};
  for (int k = 0; k < 4; ++k)
    if (const json* f = rd.field(j, keys[k], path, true)) m[k] = rd.matrix(*f, join(path, keys[k]), n);
  if (!m[0] || !m[1] || !m[2] || !m[3]) return std::nullopt;
  return LmiCertificate{SymMatrix(*m[0]), *m[1], *m[2], SymMatrix(*m[3]), h};
}

std::optional<Task> read_task(Reader& rd, const json& j, const std::string& path, Eigen::Index n, double h) {
  if (!j.is_object()) {
    rd.error(path, "expected an object");
    return std::nullopt;
  }
  const json* nf = rd.field(j, "name", path, true);
  if (!nf) return std::nullopt;
  auto name = rd.string(*nf, join(path, "name"));
  if (!name) return std::nullopt;
  const std::size_t before = rd.diagnostics.size();
  auto opt_int = [&](std::string_view key, int fallback, long long lo, long long hi) {
    if (const json* f = rd.field(j, key, path, false))
      if (auto v = rd.integer(*f, join(path, key), lo, hi)) return static_cast<int>(*v);
    return fallback;
  };
  auto opt_pos = [&](std::string_view key, double fallback) {
    if (const json* f = rd.field(j, key, path, false))
      if (auto v = rd.positive(*f, join(path, key))) return *v;
    return fallback;
  };

  Task task;
  if (*name == "certify") {
    if (!rd.object(j, path, {"name", "restarts", "max_iterations", "certificate"})) return std::nullopt;
    CertifyTask t;
    t.restarts = opt_int("restarts", t.restarts, 1, 1000);
    t.max_iterations = opt_int("max_iterations", t.max_iterations, 1, 10000000);
    if (const json* cf = rd.field(j, "certificate", path, false))
      if (n > 0) t.certificate = read_certificate(rd, *cf, join(path, "certificate"), n, h);
    task = t;
  } else if (*name == "simulate") {
    if (!rd.object(j, path, {"name"})) return std::nullopt;
    task = SimulateTask{};
  } else if (*name == "lkf-check") {
    if (!rd.object(j, path, {"name", "mode", "k3", "samples"})) return std::nullopt;
    LkfCheckTask t;
    if (const json* mf = rd.field(j, "mode", path, false)) {
      if (auto s = rd.string(*mf, join(path, "mode"))) {
        if (*s == "exponential") t.mode = DissipationMode::Exponential;
        else if (*s != "pointwise") rd.error(join(path, "mode"), "expected pointwise or exponential");
      }
    }
    if (const json* kf = rd.field(j, "k3", path, false))
      if (auto v = rd.number(*kf, join(path, "k3"))) {
        if (*v < 0.0) rd.error(join(path, "k3"), "must be >= 0");
        t.k3 = *v;
      }
    if (t.mode == DissipationMode::Exponential && !j.contains("k3")) rd.error(join(path, "k3"), "required in exponential mode");
    t.samples = opt_int("samples", t.samples, 1, 100000);
    task = t;
  } else if (*name == "smoothing-check") {
    if (!rd.object(j, path, {"name", "radius"})) return std::nullopt;
    SmoothingCheckTask t;
    if (const json* f = rd.field(j, "radius", path, false)) t.radius = rd.positive(*f, join(path, "radius"));
    task = t;
  } else if (*name == "delay-sweep") {
    if (!rd.object(j, path, {"name", "h_lo", "h_cap", "tol", "coarse_points", "cross_check"})) return std::nullopt;
    DelaySweepTask t;
    t.h_lo = opt_pos("h_lo", t.h_lo);
    t.h_cap = opt_pos("h_cap", t.h_cap);
    t.tol = opt_pos("tol", t.tol);
    t.coarse_points = opt_int("coarse_points", t.coarse_points, 2, 1000);
    if (!(t.h_cap > t.h_lo)) rd.error(join(path, "h_cap"), "must exceed h_lo");
    if (const json* cf = rd.field(j, "cross_check", path, false)) {
      const std::string cp = join(path, "cross_check");
      if (rd.object(*cf, cp, {"members", "T", "decay_factor"})) {
        CrossCheck c;
        if (const json* f = rd.field(*cf, "members", cp, false))
          if (auto v = rd.integer(*f, join(cp, "members"), 10, 10000)) c.members = static_cast<int>(*v);
        if (const json* f = rd.field(*cf, "T", cp, false))
          if (auto v = rd.positive(*f, join(cp, "T"))) c.horizon = *v;
        if (const json* f = rd.field(*cf, "decay_factor", cp, false))
          if (auto v = rd.positive(*f, join(cp, "decay_factor"))) c.decay_factor = *v;
        t.cross_check = c;
      }
    }
    task = t;
  } else if (*name == "norms-demo") {
    if (!rd.object(j, path, {"name", "m"})) return std::nullopt;
    NormsDemoTask t;
    if (const json* mf = rd.field(j, "m", path, true)) {
      const std::string mp = join(path, "m");
      if (!mf->is_array() || mf->empty()) rd.error(mp, "expected a non-empty array of positive integers");
      else
        for (std::size_t k = 0; k < mf->size(); ++k)
          if (auto v = rd.integer((*mf)[k], join(mp, k), 1, 1000000)) t.m.push_back(static_cast<int>(*v));
    }
    task = t;
  } else {
    rd.error(join(path, "name"), "unknown task '" + *name +
                                     "' (expected certify, simulate, lkf-check, smoothing-check, delay-sweep or norms-demo)");
    return std::nullopt;
  }
  if (rd.diagnostics.size() != before) return std::nullopt;
  return task;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ParseResult parse_config(std::string_view text) {
  ParseResult result;
  Reader rd;
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string what = e.what();
    const auto pos = what.find(": ", what.find("] "));
    if (pos != std::string::npos) what = what.substr(pos + 2);
    result.diagnostics.push_back({"", "malformed JSON at line " + std::to_string(line) + ", column " +
                                          std::to_string(col) + ": " + what});
    return result;
  }

  if (!rd.object(root, "", {"version", "seed", "h_max", "model", "delay", "ic", "solver", "task"})) {
    if (!root.is_object()) {
      result.diagnostics = std::move(rd.diagnostics);
      return result;
    }
  }
  ExperimentConfig cfg;
  if (const json* f = rd.field(root, "version", "", true)) {
    if (!f->is_number_integer() || f->get<long long>() != 1) rd.error("/version", "unsupported version (expected 1)");
  }
  if (const json* f = rd.field(root, "seed", "", true)) {
    if (!f->is_number_integer() || (f->is_number_integer() && !f->is_number_unsigned() && f->get<long long>() < 0))
      rd.error("/seed", "expected a non-negative integer");
    else cfg.seed = f->get<std::uint64_t>();
  }
  bool have_h = false;
  if (const json* f = rd.field(root, "h_max", "", true))
    if (auto v = rd.positive(*f, "/h_max")) {
      cfg.h_max = *v;
      have_h = true;
    }

  if (const json* f = rd.field(root, "model", "", false); f && have_h) cfg.model = read_model(rd, *f, "/model", cfg.h_max);
  const Eigen::Index n = cfg.model ? cfg.model->dim() : 0;

  bool delay_given = false;
  if (const json* f = rd.field(root, "delay", "", false); f && have_h) {
    delay_given = true;
    if (!f->is_array() || f->empty()) {
      rd.error("/delay", "expected a non-empty array of delay presets");
    } else {
      std::vector<DelayComponent> comps;
      bool good = true;
      for (std::size_t k = 0; k < f->size(); ++k) {
        auto c = read_delay_component(rd, (*f)[k], join("/delay", k), cfg.h_max);
        if (c) comps.push_back(*c);
        else good = false;
      }
      if (good) cfg.delay = DelaySignal(cfg.h_max, std::move(comps));
    }
  }

  bool ic_given = false;
  if (const json* f = rd.field(root, "ic", "", false); f && have_h) {
    ic_given = true;
    if (n > 0) cfg.ic = read_ic(rd, *f, "/ic", cfg.h_max, n);
    else if (!cfg.model) rd.error("/ic", "an initial condition needs a model to fix its dimension");
  }

  bool horizon_given = false;
  if (const json* f = rd.field(root, "solver", "", false)) {
    if (rd.object(*f, "/solver", {"dt", "T", "blowup_threshold", "overlap_iterations", "distributed_panels"})) {
      if (const json* g = rd.field(*f, "dt", "/solver", false))
        if (auto v = rd.positive(*g, "/solver/dt")) cfg.solver.dt = *v;
      if (const json* g = rd.field(*f, "T", "/solver", false))
        if (auto v = rd.positive(*g, "/solver/T")) {
          cfg.horizon = *v;
          horizon_given = true;
        }
      if (const json* g = rd.field(*f, "blowup_threshold", "/solver", false))
        if (auto v = rd.positive(*g, "/solver/blowup_threshold")) cfg.solver.blowup_threshold = *v;
      if (const json* g = rd.field(*f, "overlap_iterations", "/solver", false))
        if (auto v = rd.integer(*g, "/solver/overlap_iterations", 1, 1000)) cfg.solver.overlap_iterations = static_cast<int>(*v);
      if (const json* g = rd.field(*f, "distributed_panels", "/solver", false))
        if (auto v = rd.integer(*g, "/solver/distributed_panels", 1, 100000)) cfg.solver.distributed_panels = static_cast<int>(*v);
    }
  }

  std::optional<Task> task;
  if (const json* f = rd.field(root, "task", "", true); f && have_h) task = read_task(rd, *f, "/task", n, cfg.h_max);

  // Cross-block requirements.
  if (task) {
    const std::string name = task_name(*task);
    const bool simulates = name == "simulate" || name == "lkf-check" || name == "smoothing-check";
    if (name != "norms-demo" && !root.contains("model")) rd.error("/model", "missing required field for task " + name);
    if (simulates) {
      if (!delay_given) rd.error("/delay", "missing required field for task " + name);
      if (!ic_given) rd.error("/ic", "missing required field for task " + name);
      if (name != "smoothing-check" && !horizon_given) rd.error("/solver/T", "missing required field for task " + name);
    }
    if (cfg.model) {
      if ((name == "certify" || name == "lkf-check" || name == "delay-sweep") && !delayed_linear_form(*cfg.model))
        rd.error("/model", "task " + name + " needs the form dx/dt = A x(t) + B x(t - h(t)) (at most one pointwise term, no distributed terms)");
      if (cfg.delay && cfg.delay->arity() < cfg.model->required_delays())
        rd.error("/delay", "model reads " + std::to_string(cfg.model->required_delays()) + " delay components, " +
                               std::to_string(cfg.delay->arity()) + " given");
      if (name == "lkf-check" && cfg.ic && !cfg.ic->in_w())
        rd.error("/ic", "V undefined: history not in W (lkf-check needs a W-representable initial condition)");
      if (name == "smoothing-check" && !cfg.model->is_linear()) {
        const auto& t = std::get<SmoothingCheckTask>(*task);
        if (!t.radius) {
          rd.error("/task/radius", "required for a nonlinear model (no global Lipschitz bound)");
        } else if (cfg.ic) {
          const double l = lipschitz_bound(*cfg.model, t.radius, cfg.seed);
          const double required = *t.radius / (1.0 + std::exp(l * cfg.h_max));
          const double norm = uniform_norm(*cfg.ic);
          if (!(norm < required))
            rd.error("/ic", "initial condition too large: need ||x0||_inf < " + std::to_string(required) +
                                ", got " + std::to_string(norm));
        }
      }
    }
    if (horizon_given && name == "lkf-check" && !(cfg.horizon > 0.0)) rd.error("/solver/T", "must be > 0");
  }

  if (!rd.ok()) {
    result.diagnostics = std::move(rd.diagnostics);
    return result;
  }
  cfg.task = *task;
  result.config = std::move(cfg);
  return result;
}

ParseResult load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return ParseResult{std::nullopt, {{"", "cannot read config file " + path.string()}}};
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<Diagnostic> validate_config(const std::filesystem::path& path) { return load_config(path).diagnostics; }

}  // namespace krasovskii
