#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "prbt/model.hpp"
#include "prbt/simulate.hpp"
#include "testing.hpp"

using namespace prbt;
using prbt::testing::vec;

namespace {

const double kPi = std::numbers::pi;

VectorField circle() {
  return [](const Eigen::VectorXd& x) { return vec({-x(1), x(0)}); };
}

VectorField constant_field(const Eigen::VectorXd& v) {
  return [v](const Eigen::VectorXd&) { return v; };
}

}  // namespace

TEST_CASE("rk4 is exact on constant fields") {
  const auto tr = integrate(constant_field(vec({1})), vec({0}), 0.1, 10);
  REQUIRE(tr.size() == 11);
  CHECK(tr.back().x(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tr.back().t == doctest::Approx(1.0));
  for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.points[k].t > tr.points[k - 1].t);
}

TEST_CASE("rk4 full circle endpoint error") {
  const double h = 1e-3;
  const auto steps = static_cast<std::size_t>(std::llround(2 * kPi / h));
  // Integrate exactly to 2 pi with a final partial step.
  auto tr = integrate(circle(), vec({1, 0}), h, steps - 1);
  const double rest = 2 * kPi - tr.back().t;
  const Eigen::VectorXd end = rk4_step(circle(), tr.back().x, rest);
  CHECK((end - vec({1, 0})).norm() <= 1e-8);
  // Derivative samples match the field at the stored states.
  for (std::size_t k = 0; k < tr.size(); k += 997)
    CHECK((tr.points[k].dx - circle()(tr.points[k].x)).norm() == 0.0);
}

TEST_CASE("finite-time blow-up is reported with the partial trace") {
  const auto blow = [](const Eigen::VectorXd& x) { return vec({x(0) * x(0)}); };
  try {
    integrate(blow, vec({1}), 0.01, 1000);
    FAIL("expected divergence");
  } catch (const SimulationError& e) {
    CHECK(e.kind() == SimulationFailure::Diverged);
    CHECK(e.partial().size() > 10);
    CHECK(e.partial().back().t < 1.2);
  }
  CHECK_THROWS_AS(integrate(blow, vec({1}), 0.0, 3), std::invalid_argument);
}

TEST_CASE("twisting of simple traces") {
  CHECK(twisting(integrate(constant_field(vec({1, 0})), vec({0, 0}), 0.1, 50)) == 0.0);

  const double h = 1e-3;
  const auto quarter = integrate(circle(), vec({1, 0}), h,
                                 static_cast<std::size_t>(std::llround(kPi / 2 / h)));
  CHECK(std::abs(twisting(quarter) - kPi / 2) <= 1e-3);

  const auto half =
      integrate(circle(), vec({1, 0}), h, static_cast<std::size_t>(std::llround(kPi / h)));
  CHECK(std::abs(twisting(half) - kPi) <= 1e-3);

  Trace rest;
  rest.points = {{0, vec({0, 0}), vec({1, 0})}, {1, vec({1, 0}), vec({0, 0})}};
  CHECK_THROWS_AS(twisting(rest), SimulationError);
}

TEST_CASE("twisting is monotone under extension and scale invariant") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    Trace tr;
    for (int k = 0; k < 40; ++k) tr.points.push_back({double(k), vec({0, 0}), vec({n01(rng), n01(rng)})});
    Trace prefix;
    prefix.points.assign(tr.points.begin(), tr.points.begin() + 20);
    CHECK(twisting(prefix) <= twisting(tr));
    Trace scaled = tr;
    for (auto& p : scaled.points) p.dx *= 3.7;
    CHECK(twisting(scaled) == doctest::Approx(twisting(tr)).epsilon(1e-12));
  }
}

TEST_CASE("theta-d simulation stop reasons") {
  const auto flat = theta_d_simulation(constant_field(vec({1, 0})), vec({0, 0}), 0.3, 1.0);
  CHECK(flat.reason == StopReason::Dist);
  CHECK(flat.endpoint.norm() == doctest::Approx(1.0).epsilon(1e-9));

  const auto turn = theta_d_simulation(circle(), vec({1, 0}), kPi / 4, 100.0);
  CHECK(turn.reason == StopReason::Twist);
  // Unit speed: the direction turns at rate 1, so the trigger fires within
  // one step after t = pi/4.
  const double h = theta_d_step(circle(), vec({1, 0}), 100.0);
  CHECK(turn.trace.back().t >= kPi / 4 - 1e-9);
  CHECK(turn.trace.back().t < kPi / 4 + h);

  const auto shortd = theta_d_simulation(circle(), vec({1, 0}), kPi, 0.01);
  CHECK(shortd.reason == StopReason::Dist);
  CHECK(shortd.trace.size() <= 502);

  CHECK_THROWS_AS(theta_d_simulation(circle(), vec({0, 0}), 0.3, 1.0), SimulationError);
  CHECK_THROWS_AS(theta_d_simulation(circle(), vec({1, 0}), 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("theta-d trigger is not reached before the endpoint") {
  const auto f = [](const Eigen::VectorXd& x) { return vec({1.0, x(0)}); };
  for (double theta : {0.2, 0.6, 1.0}) {
    for (double d : {0.5, 2.0}) {
      const auto r = theta_d_simulation(f, vec({0, 0}), theta, d);
      const auto& pts = r.trace.points;
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) CHECK((pts[k].x - pts[0].x).norm() < d);
      if (r.reason == StopReason::Dist) {
        CHECK((r.endpoint - pts[0].x).norm() >= d * (1 - 1e-9));
      } else {
        // Monotone field direction: twisting is the angle to the initial direction.
        CHECK(angle_between(pts.front().dx, pts.back().dx) >= theta);
        CHECK(angle_between(pts.front().dx, pts[pts.size() - 2].dx) < theta);
      }
    }
  }
}

TEST_CASE("fixed-input field evaluates model dynamics") {
  const auto lv = load_model(testing::model_path("lotka_volterra.json")).continuous();
  const auto f = fixed_input_field(lv.dynamics, lv.uncertainty.center());
  const Eigen::VectorXd x = lv.init.center();
  Eigen::VectorXd z(4);
  z << x, lv.uncertainty.center();
  CHECK(f(x)(0) == doctest::Approx(lv.dynamics[0].eval(z)));
  CHECK(f(x)(1) == doctest::Approx(lv.dynamics[1].eval(z)));
  const auto tr = integrate(f, x, 0.01, 3);
  const std::vector<std::string> names{"x", "y"};
  const auto csv = trace_csv(tr, names);
  CHECK(csv.rfind("t,x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
