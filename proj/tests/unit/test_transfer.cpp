#include "doctest.h"

#include "krasovskii/lmi.hpp"
#include "krasovskii/transfer.hpp"

#include <cmath>
#include <sstream>

using namespace krasovskii;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }
Matrix mat1(double x) { return Matrix::Constant(1, 1, x); }

SystemModel delayed(double h, double m, double n) { return SystemModel::delayed_linear(h, mat1(m), mat1(n)); }

}  // namespace

TEST_CASE("Lipschitz bounds") {
  CHECK(lipschitz_bound(delayed(1.0, 0.0, -1.0)) == doctest::Approx(1.0));
  CHECK(lipschitz_bound(SystemModel(1.0, Matrix::Zero(2, 2))) == 0.0);
  const SystemModel dist(1.0, mat1(0.0), {}, {DistributedTerm{DistributedKernel::constant(mat1(1.0)), 0}});
  CHECK(lipschitz_bound(dist) == doctest::Approx(1.0));
  const SystemModel sampled(1.0, mat1(0.0), {},
                            {DistributedTerm{DistributedKernel::sampled(1.0, {mat1(1.0), mat1(1.0)}), 0}});
  CHECK(lipschitz_bound(sampled) == doctest::Approx(1.0));
  const SystemModel cubic(1.0, mat1(-1.0), {}, {}, Nonlinearity::cubic(-1.0, {1.0, 1.0, 2.0}));
  CHECK_THROWS_WITH(lipschitz_bound(cubic), "no global Lipschitz bound");
  // |d/dx x³| ≤ 3R² on [−R, R]; sampling sees at most that, times the safety factor
  const double L = lipschitz_bound(cubic, 0.5);
  CHECK(L > 1.0);
  CHECK(L <= 1.0 + 1.5 * 3.0 * 0.25 + 1e-12);
}

TEST_CASE("smoothing estimate corner cases") {
  const SystemModel model = delayed(1.0, 0.0, -1.0);
  const DelaySignal zeta = DelaySignal::constant(1.0, 1.0);
  const SmoothingReport zero = smoothing_check(model, zeta, make_constant_history(1.0, scalar(0.0)));
  CHECK(zero.pass);
  CHECK(zero.observed_w_norm == 0.0);

  const SystemModel still(0.5, Matrix::Zero(2, 2));
  const auto x0 = make_sine_history(0.5, (Vector(2) << 1.0, 0.5).finished(), 5.0, 0.2);
  const SmoothingReport flat = smoothing_check(still, DelaySignal::constant(0.5, 0.2), x0);
  CHECK(flat.L == 0.0);
  CHECK(flat.bound == doctest::Approx(2.0 * uniform_norm(x0)));
  CHECK(flat.observed_w_norm == doctest::Approx(x0(0.0).norm()).epsilon(1e-12));
  CHECK(flat.pass);
}

TEST_CASE("smoothing estimate from a square-root kink") {
  const SystemModel model = delayed(1.0, 0.0, -1.0);
  const auto kink = make_rough_history(RoughKind::SqrtKink, 1.0, scalar(1.0));
  const SmoothingReport r = smoothing_check(model, DelaySignal::constant(1.0, 1.0), kink);
  const double L = 1.0;
  CHECK(r.L == L);
  CHECK(r.gronwall_factor == doctest::Approx(1.0 + std::exp(L)).epsilon(1e-15));
  CHECK(r.smoothing_factor == doctest::Approx((1.0 + std::exp(L)) * std::sqrt(1.0 + L * L)).epsilon(1e-15));
  CHECK(r.bound == doctest::Approx(r.smoothing_factor * r.initial_uniform_norm).epsilon(1e-15));
  CHECK(r.initial_uniform_norm == doctest::Approx(1.0));
  CHECK(r.pass);
  CHECK(r.observed_w_norm < r.bound);
  CHECK(r.lipschitz_rigorous);
}

TEST_CASE("smoothing with a nonlinearity needs a radius and a small initial condition") {
  const SystemModel cubic(1.0, mat1(-1.0), {PointwiseTerm{mat1(-0.5), 0}}, {}, Nonlinearity::cubic(-1.0, {1.0, 1.0, 2.0}));
  const DelaySignal zeta = DelaySignal::constant(1.0, 0.5);
  CHECK_THROWS(smoothing_check(cubic, zeta, make_constant_history(1.0, scalar(0.1))));
  TransferOptions opts;
  opts.radius = 0.5;
  CHECK_THROWS(smoothing_check(cubic, zeta, make_constant_history(1.0, scalar(0.6)), opts));
  const SmoothingReport r = smoothing_check(cubic, zeta, make_constant_history(1.0, scalar(0.02)), opts);
  CHECK(r.pass);
  CHECK_FALSE(r.lipschitz_rigorous);
}

TEST_CASE("Gronwall factor on the first window") {
  const SystemModel still(1.0, mat1(0.0));
  const GronwallReport flat = gronwall_check(still, DelaySignal::constant(1.0, 1.0), make_constant_history(1.0, scalar(2.0)));
  CHECK(flat.observed_factor == doctest::Approx(1.0));
  CHECK(flat.bound_factor == 2.0);
  CHECK(flat.pass);

  const GronwallReport decay =
      gronwall_check(delayed(1.0, 0.0, -1.0), DelaySignal::constant(1.0, 1.0), make_constant_history(1.0, scalar(1.0)));
  CHECK(decay.observed_factor == doctest::Approx(1.0));
  CHECK(decay.bound_factor == doctest::Approx(1.0 + std::exp(1.0)));
  CHECK(decay.pass);

  const GronwallReport growth =
      gronwall_check(delayed(1.0, 0.0, 1.0), DelaySignal::constant(1.0, 1.0), make_constant_history(1.0, scalar(1.0)));
  CHECK(growth.observed_factor == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(growth.observed_factor <= 1.0 + std::exp(1.0));
  CHECK(growth.pass);

  CHECK(gronwall_check(still, DelaySignal::constant(1.0, 1.0), make_constant_history(1.0, scalar(0.0))).pass);
}

TEST_CASE("shift consistency") {
  const SystemModel model = delayed(1.0, 0.0, -1.0);
  const DelaySignal zeta = DelaySignal::constant(1.0, 1.0);
  CHECK(shift_consistency(model, zeta, make_constant_history(1.0, scalar(0.0)), 3.0) == 0.0);
  CHECK(shift_consistency(model, zeta, make_constant_history(1.0, scalar(1.0)), 4.0) <= 1e-6);

  const SystemModel planar(0.8, (Matrix(2, 2) << -1.0, 0.3, -0.2, -0.7).finished(),
                           {PointwiseTerm{(Matrix(2, 2) << -0.5, 0.1, 0.0, -0.4).finished(), 0}});
  const DelaySignal wave(0.8, {SinusoidDelay{0.4, 0.3, 2.0, 0.1}});
  const auto x0 = make_sine_history(0.8, (Vector(2) << 1.0, -0.5).finished(), 2.0, 0.3);
  CHECK(shift_consistency(planar, wave, x0, 4.0) <= 1e-5);
  CHECK_THROWS(shift_consistency(planar, wave, x0, 1.0));
}

TEST_CASE("empirical KL envelopes classify decay, flatness and growth") {
  CounterRng rng(43, "kl-unit");
  std::vector<DelaySignal> delays;
  std::vector<HistoryFunction> ics;
  for (int k = 0; k < 4; ++k) delays.push_back(random_delay_signal(rng, 0.5));
  for (int k = 0; k < 3; ++k) ics.push_back(random_w_history(rng, 0.5, 1));
  ics.push_back(make_rough_history(RoughKind::SqrtKink, 0.5, scalar(1.0)));
  ics.push_back(make_constant_history(0.5, scalar(0.0)));

  const KlEnvelope flat = empirical_kl(SystemModel(0.5, mat1(0.0)), delays, ics, 10.0, NormScale::Uniform);
  CHECK(flat.verdict == KlVerdict::Flat);
  CHECK(std::abs(flat.kappa) < 1e-3);
  CHECK(flat.excluded_zero == 4);
  CHECK(flat.members == 16);

  const KlEnvelope decay = empirical_kl(delayed(0.5, 0.0, -1.0), delays, ics, 20.0, NormScale::Uniform);
  CHECK(decay.verdict == KlVerdict::Decaying);
  CHECK(decay.kappa > 0.0);
  const KlEnvelope decay_w = empirical_kl(delayed(0.5, 0.0, -1.0), delays, ics, 20.0, NormScale::W);
  CHECK(decay_w.excluded_not_w == 4);
  CHECK(decay_w.verdict == KlVerdict::Decaying);
  const CompositionReport comp = composition_check(decay, decay_w, 1.0, 0.5);
  CHECK(comp.factor == doctest::Approx((1.0 + std::exp(0.5)) * std::sqrt(1.5)));
  CHECK(comp.pass);

  const KlEnvelope grow = empirical_kl(delayed(0.5, 1.0, 0.0), delays, ics, 10.0, NormScale::Uniform);
  CHECK(grow.verdict == KlVerdict::Growing);

  KlOptions zip;
  zip.pairing = Pairing::Zip;
  CHECK_THROWS(empirical_kl(delayed(0.5, 0.0, -1.0), delays, ics, 10.0, NormScale::Uniform, zip));

  std::ostringstream csv;
  write_envelope_csv(decay, csv);
  CHECK(csv.str().rfind("t,envelope,fit\n", 0) == 0);
  CHECK(to_string(KlVerdict::Decaying) == "decaying");
}
