#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "prbt/enclosure.hpp"
#include "testing.hpp"

using namespace prbt;
using prbt::testing::vec;

namespace {

ContinuousModel planar(const std::vector<std::string>& field, const Box& invariant, const Box& init) {
  ContinuousModel m;
  m.name = "planar";
  m.mode = "m";
  m.state_vars = {"x1", "x2"};
  for (const auto& e : field) m.dynamics.push_back(parse_expression(e, m.state_vars));
  m.invariant = invariant;
  m.uncertainty = Box(Eigen::VectorXd(0), Eigen::VectorXd(0));
  m.init = init;
  return m;
}

void check_facets_certified(const EnclosureBox& enc, const ContinuousModel& m) {
  CHECK(enc.facets.size() == 2 * m.state_dim() - 1);
  for (const auto& fc : enc.facets) {
    CHECK_FALSE((fc.dim == enc.exit.dim && fc.side == enc.exit.side));
    if (!fc.certificate) continue;
    const auto& c = *fc.certificate;
    CHECK(c.target == enc.E.facet(fc.dim, fc.side));
    CHECK(c.domain == enc.E);
    CHECK(verify_certificate(c, m.dynamics, 5).pass);
    CHECK(certificate_residual(c, m.dynamics) <= kResidualTolerance);
    CHECK(min_lambda(c) >= kLambdaTolerance);
  }
}

}  // namespace

TEST_CASE("sample_initial point counts") {
  CHECK(sample_initial(Box{{0, 1}, {0, 1}}).size() == 9);
  // Zero width in x1: the x2 facet centers coincide with the two vertices and
  // the x1 facet centers with the center.
  CHECK(sample_initial(Box{{2, 2}, {0, 1}}).size() == 3);
  CHECK(sample_initial(Box{{0, 1}, {0, 1}, {0, 1}}).size() == 15);
  std::vector<std::pair<double, double>> wide(13, {0.0, 1.0});
  const auto many = sample_initial(Box(wide));
  CHECK(many.size() == 4096 + 1 + 26);
}

TEST_CASE("translation flow: exit plane, E and G") {
  const Box x0{{0, 0.1}, {0, 0.1}};
  const auto m = planar({"1", "0"}, Box{{-1, 3}, {-1, 1}}, x0);
  const auto enc = construct_enclosure(m, x0, {.theta = 0.3, .dist = 1.0});
  CHECK(enc.exit.dim == 0);
  CHECK(enc.exit.side == Side::High);
  CHECK(enc.exit.value == doctest::Approx(1.05).epsilon(1e-6));
  CHECK(enc.center_stop == StopReason::Dist);
  CHECK(enc.E.contains(x0));
  CHECK(m.invariant.contains(enc.E));
  CHECK(enc.E.hi(0) == enc.exit.value);
  CHECK(enc.E.lo(1) == doctest::Approx(-0.01));
  CHECK(enc.E.hi(1) == doctest::Approx(0.11));
  CHECK(enc.G.is_degenerate(0));
  CHECK(enc.G.lo(0) == enc.exit.value);
  CHECK(enc.exit_facet().contains(enc.G));
  CHECK(enc.G.lo(1) == doctest::Approx(-0.005));
  CHECK(enc.G.hi(1) == doctest::Approx(0.105));
}

TEST_CASE("translation flow: three facets certified at degree 1") {
  const Box x0{{0, 0.1}, {0, 0.1}};
  const auto m = planar({"1", "0"}, Box{{-1, 3}, {-1, 1}}, x0);
  const EnclosureOptions eo{.theta = 0.3, .dist = 1.0};
  const auto enc = certify_facets(m, x0, construct_enclosure(m, x0, eo), eo, {.degrees = {1}});
  CHECK(enc.bloat_rounds == 0);
  check_facets_certified(enc, m);
  for (const auto& fc : enc.facets) {
    REQUIRE(fc.certificate);
    CHECK(fc.certificate->degree == 1);
    // Affine B: vertex oracle on X0, facet and the (constant) Lie derivative.
    const auto b = fc.certificate->global();
    for (const auto& v : vertices(x0)) CHECK(b.eval(v) > 0.0);
    for (const auto& v : vertices(enc.E.facet(fc.dim, fc.side))) CHECK(b.eval(v) < 0.0);
    const auto lie = lie_derivative(b, m.dynamics);
    for (const auto& v : vertices(enc.E)) CHECK(lie.eval(v) > 0.0);
  }
}

TEST_CASE("rotation: exit plane from the twisting trigger") {
  const Box x0{{0.9995, 1.0005}, {-0.0005, 0.0005}};
  const auto m = planar({"-x2", "x1"}, Box{{-2, 2}, {-2, 2}}, x0);
  const auto enc = construct_enclosure(m, x0, {.theta = 0.1, .dist = 10.0});
  CHECK(enc.center_stop == StopReason::Twist);
  CHECK(enc.exit.dim == 1);
  CHECK(enc.exit.side == Side::High);
  CHECK(enc.exit.value == doctest::Approx(std::sin(0.1)).epsilon(0.05));
}

TEST_CASE("saddle: samples leave the invariant before the plane") {
  const Box x0{{-0.1, 0.1}, {0.95, 1.05}};
  const auto m = planar({"x1", "-x2"}, Box{{-0.3, 0.3}, {0, 2}}, x0);
  try {
    construct_enclosure(m, x0, {.theta = 0.3, .dist = 0.8});
    FAIL("expected NO-EXIT-PLANE");
  } catch (const ReachError& e) {
    CHECK(e.kind() == ReachFailure::NoExitPlane);
  }
}

TEST_CASE("a facet touching X0 fails and bloating repairs it") {
  const Box x0{{0, 0.1}, {0, 0.1}};
  const auto m = planar({"1", "0"}, Box{{-1, 3}, {-1, 1}}, x0);
  EnclosureBox enc;
  enc.E = Box{{0, 1.05}, {0, 0.1}};
  enc.exit = {0, Side::High, 1.05};
  enc.G = Box{{1.05, 1.05}, {0, 0.1}};
  const EnclosureOptions eo;
  // Three facets touch X0; each round repairs one.
  const auto done = certify_facets(m, x0, enc, eo, {.degrees = {1}});
  CHECK(done.bloat_rounds == 3);
  CHECK(done.E.lo(0) < 0.0);
  CHECK(done.E.lo(1) < 0.0);
  CHECK(done.E.hi(1) > 0.1);
  check_facets_certified(done, m);

  EnclosureOptions fewer;
  fewer.max_bloat_rounds = 2;
  CHECK_THROWS_AS(certify_facets(m, x0, enc, fewer, {.degrees = {1}}), ReachError);
}

TEST_CASE("a facet the flow reaches is never certified") {
  const Box x0{{0, 0.1}, {0, 0.1}};
  const auto m = planar({"1", "0"}, Box{{-10, 10}, {-10, 10}}, x0);
  EnclosureBox enc;
  enc.E = Box{{-0.1, 1.0}, {-0.1, 1.0}};
  enc.exit = {1, Side::High, 1.0};  // wrong exit: the flow leaves through x1-high
  enc.G = Box{{-0.1, 1.0}, {1.0, 1.0}};
  try {
    certify_facets(m, x0, enc, {}, {.degrees = {1, 2}});
    FAIL("expected FACET-FAIL");
  } catch (const ReachError& e) {
    CHECK(e.kind() == ReachFailure::FacetFail);
    CHECK(std::string(e.what()).find("x1-high") != std::string::npos);
  }
}

TEST_CASE("facets on the invariant boundary are exempt when uncertifiable") {
  const Box x0{{0, 0.1}, {0, 0.1}};
  const auto m = planar({"1", "0"}, Box{{0, 3}, {0, 0.1}}, x0);
  const EnclosureOptions eo{.theta = 0.3, .dist = 1.0};
  const auto enc = certify_facets(m, x0, construct_enclosure(m, x0, eo), eo, {.degrees = {1}});
  CHECK(enc.E == Box{{0, enc.exit.value}, {0, 0.1}});
  check_facets_certified(enc, m);
  for (const auto& fc : enc.facets) CHECK_FALSE(fc.certificate.has_value());
}

TEST_CASE("sample trajectories stay inside the enclosure up to the crossing") {
  const auto lv = load_model(testing::model_path("lotka_volterra.json")).continuous();
  const EnclosureOptions eo{.theta = 0.3, .dist = 0.5};
  const auto enc = construct_enclosure(lv, lv.init, eo);
  CHECK(enc.E.contains(lv.init));
  CHECK(lv.invariant.contains(enc.E));
  CHECK(enc.exit_facet().contains(enc.G));
  const auto f = fixed_input_field(lv.dynamics, lv.uncertainty.center());
  const double h = theta_d_step(f, lv.init.center(), eo.dist);
  const auto ex = static_cast<Eigen::Index>(enc.exit.dim);
  for (const auto& s : sample_initial(lv.init)) {
    Eigen::VectorXd x = s;
    for (int k = 0; k < 100000; ++k) {
      const bool past = enc.exit.side == Side::High ? x(ex) >= enc.exit.value
                                                    : x(ex) <= enc.exit.value;
      if (past) break;
      CHECK(enc.E.contains(x));
      x = rk4_step(f, x, h);
    }
  }
}
