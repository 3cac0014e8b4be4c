#include "doctest.h"

#include "../support/oracles.hpp"
#include "krasovskii/lmi.hpp"
#include "krasovskii/rng.hpp"

#include <cmath>

using namespace krasovskii;

namespace {

Matrix mat1(double x) { return Matrix::Constant(1, 1, x); }

LmiCertificate scalar_cert(double p1, double p2, double p3, double q, double h) {
  return LmiCertificate{SymMatrix(mat1(p1)), mat1(p2), mat1(p3), SymMatrix(mat1(q)), h};
}

// Largest eigenvalue of a symmetric 3×3 matrix from the trigonometric solution
// of its characteristic cubic.
double lambda_max_3x3(const Matrix& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  const double q = a.trace() / 3.0;
  const double p2 = std::pow(a(0, 0) - q, 2) + std::pow(a(1, 1) - q, 2) + std::pow(a(2, 2) - q, 2) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  if (p == 0.0) return q;
  const Matrix b = (a - q * Matrix::Identity(3, 3)) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  return q + 2.0 * p * std::cos(std::acos(r) / 3.0);
}

LmiCertificate random_candidate(CounterRng& rng, Eigen::Index n, double h) {
  auto rnd = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };
  const Matrix a = rnd(n, n), b = rnd(n, n);
  return LmiCertificate{SymMatrix(a * a.transpose() + 0.1 * Matrix::Identity(n, n)), rnd(n, n), rnd(n, n),
                        SymMatrix(b * b.transpose() + 0.1 * Matrix::Identity(n, n)), h};
}

}  // namespace

TEST_CASE("scalar descriptor LMI assembled by hand") {
  const SymMatrix lmi = assemble_descriptor_lmi(mat1(0.0), mat1(-1.0), 1.0, scalar_cert(1, 1, 1, 1, 1.0));
  Matrix expected(3, 3);
  expected << -2, -1, -1, -1, -1, -1, -1, -1, -1;
  CHECK((lmi.dense() - expected).norm() == 0.0);
  const CertificateReport report = check_certificate(mat1(0.0), mat1(-1.0), 1.0, scalar_cert(1, 1, 1, 1, 1.0));
  CHECK(report.lambda_max_lmi == doctest::Approx(lambda_max_3x3(expected)).epsilon(1e-12));
  CHECK(report.feasible == (lambda_max_3x3(expected) < -1e-9));
}

TEST_CASE("LMI with N = 0 has a decoupled last block") {
  Matrix m(2, 2);
  m << -1.0, 0.5, 0.0, -2.0;
  CounterRng rng(1, "n-zero");
  const LmiCertificate cert = random_candidate(rng, 2, 0.7);
  const Matrix lmi = assemble_descriptor_lmi(m, Matrix::Zero(2, 2), 0.7, cert).dense();
  CHECK(lmi.block(4, 0, 2, 4).norm() == 0.0);
  CHECK((lmi.block(4, 4, 2, 2) + 0.7 * cert.Q.dense()).norm() < 1e-15);
}

TEST_CASE("LMI symmetry and verdicts against the characteristic-polynomial oracle") {
  CounterRng rng(2, "lmi-random");
  for (int trial = 0; trial < 300; ++trial) {
    const double m = rng.uniform(-2.0, 1.0), n = rng.uniform(-2.0, 1.0), h = rng.uniform(0.05, 2.0);
    const LmiCertificate cert = scalar_cert(rng.uniform(0.01, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                                            rng.uniform(0.01, 3.0), h);
    const Matrix lmi = assemble_descriptor_lmi(mat1(m), mat1(n), h, cert).dense();
    REQUIRE((lmi - lmi.transpose()).norm() == 0.0);
    const double lmax = lambda_max_3x3(lmi);
    const CertificateReport report = check_certificate(mat1(m), mat1(n), h, cert, 0.0);
    REQUIRE(report.lambda_max_lmi == doctest::Approx(lmax).epsilon(1e-9));
    if (std::abs(lmax) > 1e-9)
      REQUIRE(report.feasible == oracle::scalar_lmi_negative(m, n, h, cert.P1(0, 0), cert.P2(0, 0), cert.P3(0, 0),
                                                              cert.Q(0, 0)));
  }
  Matrix m(2, 2), n(2, 2);
  m << -1, 2, 0.5, -3;
  n << 0.2, -1, 0.3, -0.4;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix lmi = assemble_descriptor_lmi(m, n, 0.4, random_candidate(rng, 2, 0.4)).dense();
    REQUIRE((lmi - lmi.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("certificate checks report the failing ingredient") {
  const CertificateReport bad_p1 = check_certificate(mat1(0.0), mat1(-1.0), 0.5, scalar_cert(-1, 0.5, 1, 1, 0.5));
  CHECK_FALSE(bad_p1.feasible);
  CHECK(bad_p1.lambda_min_P1 <= 0.0);
  CHECK_THROWS(check_certificate(Matrix::Zero(2, 2), Matrix::Zero(2, 2), 0.5, scalar_cert(1, 1, 1, 1, 0.5)));
}

TEST_CASE("synthesis on the scalar benchmark and the grid oracle") {
  const auto result = synthesize_certificate(mat1(0.0), mat1(-1.0), 0.5);
  REQUIRE(result.found());
  const CertificateReport report = check_certificate(mat1(0.0), mat1(-1.0), 0.5, *result.certificate);
  CHECK(report.feasible);
  CHECK(report.lambda_max_lmi < -1e-9);
  CHECK(oracle::scalar_grid_search(0.0, -1.0, 0.5).has_value());

  const auto unstable = synthesize_certificate(mat1(1.0), mat1(0.0), 0.5);
  CHECK_FALSE(unstable.found());
  CHECK_FALSE(oracle::scalar_grid_search(1.0, 0.0, 0.5).has_value());
  CHECK_FALSE(synthesize_certificate(mat1(0.0), mat1(0.0), 0.5).found());
}

TEST_CASE("synthesis is independent of the worker count and reproducible") {
  SynthesisOptions opts;
  opts.seed = 99;
  const auto a = synthesize_certificate(mat1(-0.5), mat1(-1.0), 0.9, opts);
  const auto b = synthesize_certificate(mat1(-0.5), mat1(-1.0), 0.9, opts);
  REQUIRE(a.found());
  CHECK(a.restart_index == b.restart_index);
  CHECK(a.iterations == b.iterations);
  CHECK((a.certificate->P2 - b.certificate->P2).norm() == 0.0);
}

TEST_CASE("feasibility is invariant under positive scaling") {
  const auto result = synthesize_certificate(mat1(0.0), mat1(-1.0), 0.5);
  REQUIRE(result.found());
  for (double s : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
    const LmiCertificate scaled = result.certificate->scaled(s);
    const CertificateReport r = check_certificate(mat1(0.0), mat1(-1.0), 0.5, scaled, 1e-9 * std::min(1.0, s));
    CHECK(r.feasible);
    CHECK(r.lambda_max_lmi == doctest::Approx(s * result.report.lambda_max_lmi).epsilon(1e-9));
  }
  const LmiCertificate hand = scalar_cert(1, 1, 1, 1, 1.0);
  for (double s : {1e-3, 1.0, 1e3})
    CHECK(check_certificate(mat1(0.0), mat1(-1.0), 1.0, hand.scaled(s), 0.0).feasible ==
          check_certificate(mat1(0.0), mat1(-1.0), 1.0, hand, 0.0).feasible);
}

TEST_CASE("maximal delay for the scalar benchmarks") {
  const auto ode = max_feasible_delay(mat1(-1.0), mat1(0.0));
  CHECK(ode.feasible_at_lo);
  CHECK(ode.h_star == 10.0);
  REQUIRE(ode.certificate.has_value());
  CHECK(check_certificate(mat1(-1.0), mat1(0.0), 10.0, *ode.certificate).feasible);

  const auto unstable = max_feasible_delay(mat1(1.0), mat1(0.0));
  CHECK_FALSE(unstable.feasible_at_lo);

  const DelaySweepOptions opts;
  const auto sweep = max_feasible_delay(mat1(0.0), mat1(-1.0), opts);
  REQUIRE(sweep.feasible_at_lo);
  CHECK(sweep.h_star > 0.0);
  CHECK(sweep.h_star <= 1.5);
  REQUIRE(sweep.certificate.has_value());
  CHECK(check_certificate(mat1(0.0), mat1(-1.0), sweep.h_star, *sweep.certificate).feasible);
  const auto again = max_feasible_delay(mat1(0.0), mat1(-1.0), opts);
  CHECK(again.h_star == sweep.h_star);

  const auto below = synthesize_certificate(mat1(0.0), mat1(-1.0), sweep.h_star - opts.tol, opts.synthesis);
  REQUIRE(below.found());
  CHECK(check_certificate(mat1(0.0), mat1(-1.0), sweep.h_star - opts.tol, *below.certificate).feasible);
  CHECK_FALSE(synthesize_certificate(mat1(0.0), mat1(-1.0), sweep.h_star + 10.0 * opts.tol, opts.synthesis).found());
}

TEST_CASE("theta matches its defining sum and reduces when N = 0") {
  CounterRng rng(5, "theta-oracle");
  Matrix m(2, 2), n(2, 2);
  m << -1, 0.3, 0.2, -2;
  n << -0.5, 0.1, 0.0, -0.3;
  for (int trial = 0; trial < 20; ++trial) {
    const LmiCertificate c = random_candidate(rng, 2, 0.6);
    const Matrix theta = assemble_theta(m, n, 0.6, c).dense();
    const Matrix expected = oracle::theta(m, n, 0.6, c.P1.dense(), c.P2, c.P3, c.Q.dense());
    REQUIRE((theta - expected).norm() < 1e-10 * (1.0 + expected.norm()));
    REQUIRE((theta - theta.transpose()).norm() == 0.0);

    const Matrix theta0 = assemble_theta(m, Matrix::Zero(2, 2), 0.6, c).dense();
    const Matrix without = oracle::theta(m, Matrix::Zero(2, 2), 0.6, c.P1.dense(), c.P2, c.P3, c.Q.dense());
    REQUIRE((theta0 - without).norm() < 1e-12 * (1.0 + without.norm()));
  }
}

TEST_CASE("Schur complement agreement on random candidates") {
  CounterRng rng(6, "schur-random");
  int agreements = 0, checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Eigen::Index d = rng.integer(1, 2);
    Matrix m(d, d), n(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        m(i, j) = rng.uniform(-1.0, 1.0) - (i == j ? 1.0 : 0.0);
        n(i, j) = rng.uniform(-1.0, 1.0) * 0.5;
      }
    const double h = rng.uniform(0.05, 1.0);
    LmiCertificate c = random_candidate(rng, d, h);
    const double lmi = sym_eig(assemble_descriptor_lmi(m, n, h, c)).max();
    const double theta = sym_eig(assemble_theta(m, n, h, c)).max();
    if (std::abs(lmi) < 1e-8 || std::abs(theta) < 1e-8) continue;
    ++checked;
    agreements += (lmi < 0.0) == (theta < 0.0) ? 1 : 0;
  }
  CHECK(checked > 1500);
  CHECK(agreements == checked);
}

TEST_CASE("nonlinear region identities") {
  const auto result = synthesize_certificate(mat1(-1.0), mat1(-0.5), 0.5);
  REQUIRE(result.found());
  const LmiCertificate& c = *result.certificate;
  const GrowthCertificate growth{2.0, 1.0, 2.0};
  const NonlinearRegion r = nonlinear_region(mat1(-1.0), mat1(-0.5), 0.5, c, growth);
  const double lambda = sym_eig(SymMatrix(oracle::theta(mat1(-1.0), mat1(-0.5), 0.5, c.P1.dense(), c.P2, c.P3,
                                                        c.Q.dense())))
                            .max();
  const double p2 = std::abs(c.P2(0, 0)), p3 = std::abs(c.P3(0, 0));
  CHECK(r.epsilon > 0.0);
  CHECK(r.eta > 0.0);
  CHECK(r.delta == doctest::Approx((p2 * p2 + p3 * p3) / r.epsilon).epsilon(1e-12));
  CHECK(lambda + r.epsilon <= -r.eta * (1.0 - 1e-12));
  const double H = std::min(growth.g_alpha, std::pow(r.eta / (2.0 * r.delta * growth.g_beta * growth.g_beta),
                                                     1.0 / (2.0 * growth.g_gamma)));
  CHECK(r.H == doctest::Approx(H).epsilon(1e-12));

  const NonlinearRegion tiny = nonlinear_region(mat1(-1.0), mat1(-0.5), 0.5, c, {2.0, 1e-9, 2.0});
  CHECK(tiny.H == 2.0);

  CHECK_THROWS(nonlinear_region(mat1(-1.0), mat1(-0.5), 0.5, scalar_cert(1, 5, -5, 1, 0.5), growth));
}

TEST_CASE("region_at maximizes H over epsilon") {
  const GrowthCertificate growth{10.0, 1.0, 1.0};
  const NonlinearRegion best = region_at(0.5, -1.0, 0.3, 0.4, growth);
  for (double eps : {0.1, 0.3, 0.45, 0.55, 0.7, 0.9}) CHECK(region_at(eps, -1.0, 0.3, 0.4, growth).H <= best.H);
  CHECK(best.eta == doctest::Approx(0.5));
  CHECK(best.delta == doctest::Approx(0.25 / 0.5));
}
