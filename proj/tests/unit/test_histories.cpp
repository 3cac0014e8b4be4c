#include "doctest.h"

#include "krasovskii/histories.hpp"
#include "krasovskii/rng.hpp"
#include "krasovskii/transfer.hpp"

#include <cmath>
#include <vector>

using namespace krasovskii;

namespace {

Vector e1(Eigen::Index n = 1) {
  Vector v = Vector::Zero(n);
  v(0) = 1.0;
  return v;
}

Vector scalar(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_CASE("uniform norm examples") {
  CHECK(uniform_norm(make_constant_history(1.0, (Vector(2) << 3.0, 4.0).finished())) == doctest::Approx(5.0));
  const auto pl = make_piecewise_linear_history({-1.0, -0.5, 0.0}, {scalar(0.0), scalar(2.0), scalar(0.0)});
  CHECK(uniform_norm(pl) == doctest::Approx(2.0));
  CHECK(uniform_norm(make_triangle_history(7, 1.0, e1())) == 1.0);
}

TEST_CASE("w norm examples") {
  const Vector c = (Vector(2) << 3.0, 4.0).finished();
  CHECK(w_norm(make_constant_history(2.0, c)) == doctest::Approx(5.0));
  CHECK(w_norm(make_triangle_history(10, 1.0, e1())) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(w_norm(make_triangle_history(1, 1.0, e1())) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w_norm(make_triangle_history(1, 4.0, e1())) == doctest::Approx(1.0).epsilon(1e-12));
  const auto ramp = make_piecewise_linear_history({-1.0, 0.0}, {scalar(-1.0), scalar(0.0)});
  CHECK(w_norm(ramp) == doctest::Approx(1.0));
}

TEST_CASE("triangle family separates the two norms") {
  for (double h : {0.25, 1.0, 4.0}) {
    for (int m = 1; m <= 64; ++m) {
      const auto f = make_triangle_history(m, h, e1(2));
      REQUIRE(uniform_norm(f) == 1.0);
      REQUIRE(std::abs(w_norm(f) - 2.0 * m / std::sqrt(h)) <= 1e-9);
    }
  }
  CHECK_THROWS(make_triangle_history(0, 1.0, e1()));
  CHECK_THROWS(make_triangle_history(1, 1.0, Vector::Constant(1, 2.0)));
}

TEST_CASE("embedding inequality on random piecewise-linear histories") {
  CounterRng rng(3, "embedding");
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double h = rng.uniform(0.05, 5.0);
    const auto dim = static_cast<Eigen::Index>(rng.integer(1, 3));
    const auto count = static_cast<std::size_t>(rng.integer(2, 40));
    std::vector<double> nodes(count);
    std::vector<Vector> values(count);
    for (std::size_t k = 0; k < count; ++k) {
      nodes[k] = -h + h * static_cast<double>(k) / static_cast<double>(count - 1);
      values[k] = Vector(dim);
      for (Eigen::Index i = 0; i < dim; ++i) values[k](i) = rng.uniform(-3.0, 3.0);
    }
    nodes.back() = 0.0;
    const auto phi = make_piecewise_linear_history(nodes, values);

    double sup = 0.0;
    double energy = values.back().squaredNorm();
    for (std::size_t k = 0; k < count; ++k) sup = std::max(sup, values[k].norm());
    for (std::size_t k = 1; k < count; ++k)
      energy += (values[k] - values[k - 1]).squaredNorm() / (nodes[k] - nodes[k - 1]);
    REQUIRE(uniform_norm(phi) == doctest::Approx(sup).epsilon(1e-12));
    REQUIRE(w_norm(phi) == doctest::Approx(std::sqrt(energy)).epsilon(1e-10));
    if (uniform_norm(phi) > (1.0 + std::sqrt(h)) * w_norm(phi)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("rough histories") {
  const auto kink = make_rough_history(RoughKind::SqrtKink, 1.0, e1());
  CHECK(kink(-1.0)(0) == doctest::Approx(1.0));
  CHECK(kink(0.0)(0) == doctest::Approx(0.0));
  CHECK_FALSE(kink.in_w());
  CHECK_THROWS_WITH(w_norm(make_rough_history(RoughKind::CantorApprox, 1.0, e1())), "not in W");
  CHECK_THROWS(kink.derivative(-0.5));

  // continuity sampled on a fine grid
  double jump = 0.0;
  for (int k = 1; k <= 4000; ++k) {
    const double a = -1.0 + (k - 1) / 4000.0, b = -1.0 + k / 4000.0;
    jump = std::max(jump, (kink(b) - kink(a)).norm());
  }
  CHECK(jump < 0.05);

  // the derivative energy of the kink diverges logarithmically
  const double first = w_norm(sample_piecewise_linear(kink, 17));
  double previous = first;
  for (std::size_t n = 32; n <= 4096; n *= 2) {
    const double w = w_norm(sample_piecewise_linear(kink, n + 1));
    CHECK(w > previous);
    previous = w;
  }
  CHECK(previous * previous - first * first > 1.0);
  CHECK(parse_rough_kind("cantor-approx") == RoughKind::CantorApprox);
  CHECK_THROWS(parse_rough_kind("weierstrass"));
}

TEST_CASE("sampled, hermite, sine and analytic histories") {
  const auto lin = make_sampled_history(1.0, {scalar(0.0), scalar(1.0), scalar(0.0)}, Interpolation::Linear);
  CHECK(lin(-0.5)(0) == doctest::Approx(1.0));
  CHECK(lin(-0.25)(0) == doctest::Approx(0.5));
  CHECK(lin.in_w());

  const auto sine = make_sine_history(2.0, scalar(1.0), 3.0, 0.0);
  CHECK(sine(-1.0)(0) == doctest::Approx(std::sin(-3.0)));
  CHECK(sine.derivative(-1.0)(0) == doctest::Approx(3.0 * std::cos(-3.0)));
  // ‖sin 3τ‖_W² = 0 + ∫₋₂⁰ 9cos²3τ dτ
  const double energy = 9.0 * (1.0 + std::sin(12.0) / 12.0);
  CHECK(w_norm(sine) == doctest::Approx(std::sqrt(energy)).epsilon(1e-8));

  const auto exp_hist = make_analytic_history(
      1.0, 1, "exp", [](double t) { return scalar(std::exp(t)); }, [](double t) { return scalar(std::exp(t)); });
  CHECK(exp_hist.in_w());
  CHECK(w_norm(exp_hist) == doctest::Approx(std::sqrt(1.0 + 0.5 * (1.0 - std::exp(-2.0)))).epsilon(1e-8));
  const auto no_derivative = make_analytic_history(1.0, 1, "abs", [](double t) { return scalar(std::abs(t + 0.5)); });
  CHECK_FALSE(no_derivative.in_w());
  CHECK(uniform_norm(no_derivative) == doctest::Approx(0.5).epsilon(1e-6));

  CHECK_THROWS(lin(0.1));
  CHECK_THROWS(lin(-1.1));
}

TEST_CASE("sinusoid shift updates the phase") {
  const DelaySignal zeta(1.0, {SinusoidDelay{0.5, 0.3, 2.0, 0.0}});
  const DelaySignal shifted = shift_delay(zeta, M_PI);
  CHECK(std::get<SinusoidDelay>(shifted.components()[0]).phase == doctest::Approx(2.0 * M_PI));
  for (int k = 0; k < 100; ++k) {
    const double t = 0.37 * k;
    REQUIRE(std::abs(shifted(0, t) - zeta(0, t + M_PI)) < 1e-12);
  }
}

TEST_CASE("constant and periodic delays under shifts") {
  const DelaySignal c = DelaySignal::constant(1.0, 0.7, 2);
  const DelaySignal cs = shift_delay(c, 12.5);
  CHECK(cs(1, 3.0) == 0.7);

  const DelaySignal saw(1.0, {SawtoothDelay{0.1, 0.9, 1.5, 0.3, 0.0}});
  const DelaySignal saw_shift = shift_delay(saw, 1.5);
  for (int k = 0; k < 200; ++k) {
    const double t = 0.0173 * k;
    REQUIRE(std::abs(saw_shift(0, t) - saw(0, t)) < 1e-12);
  }
  // continuity of the sawtooth across the period boundary
  CHECK(std::abs(saw(0, 1.5 - 1e-9) - saw(0, 1.5 + 1e-9)) < 1e-6);

  const DelaySignal table(1.0, {TableDelay{2.0, {0.1, 0.5, 0.9}, 0.0}});
  CHECK(table(0, 0.0) == doctest::Approx(0.1));
  CHECK(table(0, 2.0 / 3.0) == doctest::Approx(0.5));
  CHECK(shift_delay(table, 2.0)(0, 0.3) == doctest::Approx(table(0, 0.3)).epsilon(1e-12));
  CHECK_THROWS(shift_delay(table, -1.0));
}

TEST_CASE("delay range invariant construction") {
  CHECK_THROWS(DelaySignal(0.5, {SinusoidDelay{0.3, 0.4, 1.0, 0.0}}));
  CHECK_THROWS(DelaySignal(1.0, {ConstantDelay{-0.1}}));
  CHECK_NOTHROW(DelaySignal(0.5, {SinusoidDelay{0.25, 0.25, 1.0, 0.0}}));
  CHECK(delay_range(SawtoothDelay{0.2, 0.6, 1.0, 0.5, 0.0}) == std::pair<double, double>{0.2, 0.6});
}

TEST_CASE("random delay signals stay in range and shifts compose") {
  CounterRng rng(19, "delay-range");
  int samples = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double h = rng.uniform(0.1, 3.0);
    const DelaySignal zeta = random_delay_signal(rng, h);
    for (int k = 0; k < 100; ++k) {
      const double t = rng.uniform(0.0, 100.0);
      for (const auto& c : zeta.components()) {
        const double value = evaluate_delay(c, t);
        REQUIRE(value >= 0.0);
        REQUIRE(value <= h);
        ++samples;
      }
    }
    const double a = rng.uniform(0.0, 10.0), b = rng.uniform(0.0, 10.0);
    const DelaySignal ab = shift_delay(shift_delay(zeta, a), b);
    const DelaySignal sum = shift_delay(zeta, a + b);
    for (int k = 0; k < 20; ++k) {
      const double t = rng.uniform(0.0, 20.0);
      for (std::size_t i = 0; i < zeta.arity(); ++i) REQUIRE(std::abs(ab(i, t) - sum(i, t)) < 1e-12);
    }
  }
  CHECK(samples >= 10000);
}

TEST_CASE("comparison functions") {
  const auto p = ComparisonFunction::power(2.0, 2.0);
  CHECK(p(3.0) == doctest::Approx(18.0));
  CHECK_FALSE(p.is_kl());
  const auto kl = ComparisonFunction::exponential_kl(3.0, 0.5);
  CHECK(kl.is_kl());
  CHECK(kl(2.0, 4.0) == doctest::Approx(6.0 * std::exp(-2.0)));
  CHECK_THROWS(ComparisonFunction::power(-1.0, 2.0));
}
