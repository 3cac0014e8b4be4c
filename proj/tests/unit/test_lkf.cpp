#include "doctest.h"

#include "../support/oracles.hpp"
#include "krasovskii/lkf.hpp"
#include "krasovskii/transfer.hpp"

#include <cmath>
#include <sstream>

using namespace krasovskii;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }
Matrix mat1(double x) { return Matrix::Constant(1, 1, x); }

Trajectory delayed_decay_run(double horizon) {
  return integrate(SystemModel::delayed_linear(1.0, mat1(0.0), mat1(-1.0)), DelaySignal::constant(1.0, 1.0),
                   make_constant_history(1.0, scalar(1.0)), horizon);
}

struct Benchmark {
  Matrix m, n;
  double h;
};

}  // namespace

TEST_CASE("V on constant and zero trajectories") {
  const Vector c = (Vector(2) << 1.0, -2.0).finished();
  Matrix p(2, 2);
  p << 2.0, 0.5, 0.5, 1.0;
  const SystemModel zero(0.5, Matrix::Zero(2, 2));
  const Trajectory constant = integrate(zero, DelaySignal::constant(0.5, 0.5), make_constant_history(0.5, c), 2.0);
  for (double t : {0.0, 0.3, 1.0, 2.0})
    CHECK(lkf_value(constant, t, SymMatrix(p), SymMatrix::identity(2)) == doctest::Approx(c.dot(p * c)));
  const Trajectory nil = integrate(zero, DelaySignal::constant(0.5, 0.5), make_constant_history(0.5, Vector::Zero(2)), 1.0);
  CHECK(lkf_value(nil, 0.7, SymMatrix(p), SymMatrix(p)) == 0.0);
}

TEST_CASE("V at t = 1 for the delayed decay benchmark") {
  const Trajectory traj = delayed_decay_run(2.0);
  CHECK(std::abs(lkf_value(traj, 1.0, SymMatrix::identity(1), SymMatrix::identity(1)) - 0.5) < 1e-6);
  CHECK(std::abs(oracle::lkf_nested(traj, 1.0, Matrix::Identity(1, 1), Matrix::Identity(1, 1)) - 0.5) < 1e-6);
}

TEST_CASE("V needs a W history inside the first window") {
  const SystemModel model = SystemModel::delayed_linear(1.0, mat1(0.0), mat1(-1.0));
  const auto rough = make_rough_history(RoughKind::SqrtKink, 1.0, scalar(1.0));
  const Trajectory traj = integrate(model, DelaySignal::constant(1.0, 1.0), rough, 2.0);
  CHECK_THROWS_WITH(lkf_value(traj, 0.5, SymMatrix::identity(1), SymMatrix::identity(1)),
                    "V undefined: history not in W");
  CHECK_NOTHROW(lkf_value(traj, 1.5, SymMatrix::identity(1), SymMatrix::identity(1)));
}

TEST_CASE("order swap agrees with the nested double integral") {
  CounterRng rng(31, "order-swap");
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = rng.integer(1, 2);
    const double h = rng.uniform(0.3, 1.5);
    Matrix a(d, d), b(d, d), p(d, d), q(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        a(i, j) = rng.uniform(-1.0, 1.0);
        b(i, j) = rng.uniform(-1.0, 1.0);
        p(i, j) = rng.normal();
        q(i, j) = rng.normal();
      }
    p = p * p.transpose() + 0.1 * Matrix::Identity(d, d);
    q = q * q.transpose() + 0.1 * Matrix::Identity(d, d);
    const SystemModel model = SystemModel::delayed_linear(h, a, b);
    SolverOptions opts;
    opts.dt = rng.uniform(0.005, 0.02);
    const Trajectory traj = integrate(model, random_delay_signal(rng, h), random_w_history(rng, h, d), 3.0 * h, opts);
    const double t = rng.uniform(h, 3.0 * h);
    const double fast = lkf_value(traj, t, SymMatrix(p), SymMatrix(q));
    const double nested = oracle::lkf_nested(traj, t, p, q);
    worst = std::max(worst, std::abs(fast - nested) / std::max(std::abs(nested), 1e-300));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("forward-difference Dini estimates") {
  std::vector<double> line, constant, square;
  const double spacing = 0.025;
  for (int k = 0; k <= 8; ++k) {
    const double t = 1.0 + spacing * k;
    line.push_back(-t);
    constant.push_back(3.0);
    square.push_back(t * t);
  }
  CHECK(dini_upper_estimate(line, 0, spacing) == doctest::Approx(-1.0));
  CHECK(dini_upper_estimate(constant, 0, spacing) == 0.0);
  CHECK(dini_upper_estimate(square, 0, spacing) == doctest::Approx(2.1));
  CHECK_THROWS_AS(dini_upper_estimate(square, 6, spacing), std::out_of_range);
}

TEST_CASE("dissipation passes on the zero trajectory") {
  const SystemModel model = SystemModel::delayed_linear(0.5, mat1(0.0), mat1(-1.0));
  const Trajectory nil = integrate(model, DelaySignal::constant(0.5, 0.5), make_constant_history(0.5, scalar(0.0)), 4.0);
  const auto cert = synthesize_certificate(mat1(0.0), mat1(-1.0), 0.5);
  REQUIRE(cert.found());
  const DissipationReport report = dissipation_check(nil, *cert.certificate, ComparisonFunction::power(0.1, 2.0));
  CHECK(report.verdict == LkfVerdictKind::Pass);
  for (double r : report.trace.residuals) CHECK(r <= 0.0);
}

TEST_CASE("dissipation on the certified delayed decay at h = 0.5") {
  const Matrix m = mat1(0.0), n = mat1(-1.0);
  const auto synth = synthesize_certificate(m, n, 0.5);
  REQUIRE(synth.found());
  const LmiCertificate& cert = *synth.certificate;
  const double eta = -sym_eig(assemble_theta(m, n, 0.5, cert)).max() / 2.0;
  REQUIRE(eta > 0.0);
  const SystemModel model = SystemModel::delayed_linear(0.5, m, n);
  const Trajectory traj = integrate(model, DelaySignal(0.5, {SinusoidDelay{0.25, 0.25, 3.0, 0.0}}),
                                    make_sine_history(0.5, scalar(1.0), 4.0, 0.5), 10.0);
  const DissipationReport report = dissipation_check(traj, cert, ComparisonFunction::power(eta / 2.0, 2.0));
  CHECK(report.verdict == LkfVerdictKind::Pass);
  CHECK(report.tolerance == doctest::Approx(1e-6 + 1e-3 * report.max_value));
  CHECK(report.trace.times.size() == 200);

  LmiCertificate flipped = cert;
  flipped.P1 = cert.P1.scaled(-1.0);
  const DissipationReport bad = dissipation_check(traj, flipped, ComparisonFunction::power(eta / 2.0, 2.0));
  CHECK(bad.verdict == LkfVerdictKind::SandwichViolated);
  CHECK(to_string(bad.verdict) == "sandwich-violated");

  std::ostringstream csv;
  write_lkf_csv(report.trace, csv);
  CHECK(csv.str().rfind("t,V,DiniV,residual\n", 0) == 0);
}

TEST_CASE("V is non-increasing along certified trajectories") {
  CounterRng rng(37, "lkf-monotone");
  const std::vector<Benchmark> benchmarks{{mat1(0.0), mat1(-1.0), 0.5},
                                          {mat1(-1.0), mat1(-0.5), 1.0},
                                          {(Matrix(2, 2) << -2, 0, 0, -0.9).finished(),
                                           (Matrix(2, 2) << -1, 0, -1, -1).finished(), 0.5}};
  for (const auto& b : benchmarks) {
    const auto synth = synthesize_certificate(b.m, b.n, b.h);
    REQUIRE(synth.found());
    const LmiCertificate& cert = *synth.certificate;
    const double lmin = sym_eig(cert.P1).min();
    for (int trial = 0; trial < 5; ++trial) {
      const Trajectory traj = integrate(SystemModel::delayed_linear(b.h, b.m, b.n), random_delay_signal(rng, b.h),
                                        random_w_history(rng, b.h, b.m.rows()), 8.0);
      std::vector<double> times;
      for (int k = 0; k <= 160; ++k) times.push_back(0.05 * k);
      const std::vector<double> v = lkf_values(traj, times, cert.P1, cert.Q);
      const double tol = 1e-6 + 1e-3 * v.front();
      for (std::size_t k = 1; k < v.size(); ++k) REQUIRE(v[k] <= v[k - 1] + tol);
      for (std::size_t k = 0; k < v.size(); ++k) REQUIRE(v[k] >= lmin * traj.state(times[k]).squaredNorm() - 1e-12);
    }
  }
}

TEST_CASE("sandwich bounds") {
  const Vector c = (Vector(2) << 0.6, 0.8).finished();
  const SystemModel zero(1.0, Matrix::Zero(2, 2));
  const Trajectory constant = integrate(zero, DelaySignal::constant(1.0, 1.0), make_constant_history(1.0, c), 3.0);
  const LmiCertificate id{SymMatrix::identity(2), Matrix::Zero(2, 2), Matrix::Identity(2, 2), SymMatrix::identity(2), 1.0};
  const auto [w1, w2] = default_sandwich(id);
  const SandwichReport tight = sandwich_check(constant, id, w1, w2);
  CHECK(tight.pass);
  CHECK(tight.checked_samples > 0);
  CHECK(std::abs(tight.worst_lower_gap) < 1e-12);

  const Trajectory nil = integrate(zero, DelaySignal::constant(1.0, 1.0), make_constant_history(1.0, Vector::Zero(2)), 3.0);
  CHECK(sandwich_check(nil, id, w1, w2).pass);

  const auto synth = synthesize_certificate(mat1(-0.5), mat1(-1.0), 0.6);
  REQUIRE(synth.found());
  const auto [s1, s2] = default_sandwich(*synth.certificate);
  CounterRng rng(41, "sandwich-run");
  const Trajectory run = integrate(SystemModel::delayed_linear(0.6, mat1(-0.5), mat1(-1.0)),
                                   random_delay_signal(rng, 0.6), random_w_history(rng, 0.6, 1), 6.0);
  CHECK(sandwich_check(run, *synth.certificate, s1, s2).pass);
}
