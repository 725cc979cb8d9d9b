#include "doctest.h"

#include <random>
#include <set>
#include <string>
#include <vector>

#include "prbt/box.hpp"
#include "prbt/model.hpp"
#include "testing.hpp"

using namespace prbt;
using prbt::testing::vec;

TEST_CASE("parse linear dynamics over states and uncertainties") {
  const std::vector<std::string> names{"x", "y", "u1", "u2"};
  const Polynomial p = parse_expression("-4*x + 2*y + u2", names);
  CHECK(p.coefficient(Monomial{0, 0, 0, 0}) == 0.0);
  CHECK(p.coefficient(Monomial{1, 0, 0, 0}) == -4.0);
  CHECK(p.coefficient(Monomial{0, 1, 0, 0}) == 2.0);
  CHECK(p.coefficient(Monomial{0, 0, 1, 0}) == 0.0);
  CHECK(p.coefficient(Monomial{0, 0, 0, 1}) == 1.0);
  CHECK(p.term_count() == 3);
}

TEST_CASE("parse products, powers and negation") {
  const std::vector<std::string> xy{"x", "y"};
  const Polynomial p = parse_expression("x*(1.5 - y)", xy);
  CHECK(p.term_count() == 2);
  CHECK(p.coefficient(Monomial{1, 0}) == 1.5);
  CHECK(p.coefficient(Monomial{1, 1}) == -1.0);

  const std::vector<std::string> x{"x"};
  const Polynomial c = parse_expression("x^3", x);
  CHECK(c.term_count() == 1);
  CHECK(c.coefficient(Monomial{3}) == 1.0);

  CHECK(parse_expression("-(x - 2)*-x", x) == parse_expression("x^2 - 2*x", x));
  CHECK(parse_expression("  1e-3 *  x ", x).coefficient(Monomial{1}) == 1e-3);
}

TEST_CASE("parse errors carry position and identifier") {
  const std::vector<std::string> xy{"x", "y"};
  try {
    parse_expression("x + z", xy);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("'z'") != std::string::npos);
    CHECK(e.position() == 4);
  }
  CHECK_THROWS_AS(parse_expression("2x", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("x y", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("(x + y", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("x^", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("", xy), ParseError);
}

TEST_CASE("print then parse round-trips") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> names{"x", "y", "z"};
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = testing::random_polynomial(rng, 3, 4, 7);
    const auto q = parse_expression(to_string(p, names), names);
    CHECK((p - q).max_abs_coefficient() <= 1e-12);
    CHECK(p.term_count() == q.term_count());
  }
}

TEST_CASE("box halfspaces") {
  const auto h1 = box_to_halfspaces(Box{{0, 1}});
  REQUIRE(h1.size() == 2);
  CHECK(h1[0].constant == 0.0);
  CHECK(h1[0].gradient(0) == 1.0);
  CHECK(h1[1].constant == 1.0);
  CHECK(h1[1].gradient(0) == -1.0);

  const auto h = box_to_halfspaces(Box{{-100, -90}, {-45, -40}});
  REQUIRE(h.size() == 4);
  CHECK(h[0].to_polynomial() == Polynomial::variable(2, 0) + Polynomial::constant(2, 100));
  CHECK(h[1].to_polynomial() == Polynomial::constant(2, -90) - Polynomial::variable(2, 0));
  CHECK(h[2].to_polynomial() == Polynomial::variable(2, 1) + Polynomial::constant(2, 45));
  CHECK(h[3].to_polynomial() == Polynomial::constant(2, -40) - Polynomial::variable(2, 1));

  const auto d = box_to_halfspaces(Box{{2, 2}});
  CHECK(d[0].constant == -2.0);
  CHECK(d[1].constant == 2.0);
}

TEST_CASE("halfspaces are nonnegative exactly on the box") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd a = testing::random_point(rng, 3, -5, 5);
    const Eigen::VectorXd w = testing::random_point(rng, 3, 0, 2);
    const Box b(a, a + w);
    const auto hs = box_to_halfspaces(b);
    const Eigen::VectorXd in = testing::random_point_in(rng, b);
    for (const auto& g : hs) CHECK(g.eval(in) >= -1e-12);
    const Eigen::VectorXd out = testing::random_point(rng, 3, -8, 8);
    if (!b.contains(out)) {
      bool negative = false;
      for (const auto& g : hs) negative = negative || g.eval(out) < 0;
      CHECK(negative);
    }
  }
}

TEST_CASE("shipped benchmark corpus loads") {
  for (const char* f : {"example1.json", "lotka_volterra.json", "van_der_pol.json",
                        "buckling_column.json", "jet_engine.json", "controller_2d.json",
                        "controller_3d.json", "tdo.json"}) {
    CAPTURE(f);
    CHECK_NOTHROW(load_model(testing::model_path(f)));
  }
  const auto lv = load_model(testing::model_path("lotka_volterra.json"));
  CHECK(lv.is_continuous());
  CHECK(lv.state_dim() == 2);
  CHECK(lv.uncertain_dim() == 2);
  CHECK(lv.init == Box{{4.6, 5.5}, {1.6, 1.7}});

  const auto tdo = load_model(testing::model_path("tdo.json"));
  CHECK(tdo.modes.size() == 3);
  std::set<double> bounds;
  for (const auto& t : tdo.transitions) bounds.insert(t.guard.bound);
  CHECK(bounds == std::set<double>{0.0691, 0.3});
}

TEST_CASE("model validation reports the field path") {
  const std::string bad_init = R"({
    "name": "bad", "state_vars": ["x"],
    "modes": [{"id": "m", "dynamics": ["1"], "invariant": [[0, 1]]}],
    "init": {"mode": "m", "box": [[0.5, 2]]}
  })";
  try {
    parse_model(bad_init);
    FAIL("expected a model error");
  } catch (const ModelError& e) {
    CHECK(e.path() == "$.init.box");
  }

  const std::string bad_expr = R"({
    "name": "bad", "state_vars": ["x"],
    "modes": [{"id": "m", "dynamics": ["x*q"], "invariant": [[0, 1]]}],
    "init": {"mode": "m", "box": [[0, 1]]}
  })";
  CHECK_THROWS_WITH_AS(parse_model(bad_expr), doctest::Contains("$.modes[0].dynamics[0]"),
                       ModelError);

  const std::string bad_reset = R"({
    "name": "bad", "state_vars": ["x", "y"],
    "modes": [{"id": "m", "dynamics": ["1", "0"], "invariant": [[0, 1], [0, 1]]}],
    "transitions": [{"from": "m", "to": "m", "guard": {"var": "x", "op": ">=", "bound": 1},
                     "reset": [[1, 0]]}],
    "init": {"mode": "m", "box": [[0, 1], [0, 1]]}
  })";
  CHECK_THROWS_WITH_AS(parse_model(bad_reset), doctest::Contains("$.transitions[0].reset"),
                       ModelError);

  const std::string bad_guard = R"({
    "name": "bad", "state_vars": ["x"],
    "modes": [{"id": "m", "dynamics": ["1"], "invariant": [[0, 1]]}],
    "transitions": [{"from": "m", "to": "n", "guard": {"var": "x", "op": ">=", "bound": 1},
                     "reset": [[1]]}],
    "init": {"mode": "m", "box": [[0, 1]]}
  })";
  CHECK_THROWS_WITH_AS(parse_model(bad_guard), doctest::Contains("$.transitions[0].to"),
                       ModelError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ModelError);
  CHECK_THROWS_AS(parse_model("{ not json"), ModelError);
}

TEST_CASE("continuous view of a mode") {
  const auto tdo = load_model(testing::model_path("tdo.json"));
  const auto c = tdo.continuous();
  CHECK(c.mode == tdo.init_mode);
  CHECK(c.init == tdo.init);
  const auto& other = tdo.modes.front().id == tdo.init_mode ? tdo.modes.back() : tdo.modes.front();
  CHECK(tdo.continuous(other.id).init == other.invariant);
  CHECK_THROWS(tdo.mode("nope"));
}

TEST_CASE("box algebra") {
  const Box a{{0, 2}, {0, 1}}, b{{1, 3}, {0.5, 4}};
  CHECK(*intersect(a, b) == Box{{1, 2}, {0.5, 1}});
  CHECK(hull(a, b) == Box{{0, 3}, {0, 4}});
  CHECK(disjoint(a, Box{{2.5, 3}, {0, 1}}));
  CHECK(!disjoint(a, Box{{2, 3}, {1, 2}}));  // closed boxes touching
  CHECK(vertices(a).size() == 4);
  CHECK(vertices(Box{{1, 1}, {0, 1}}).size() == 2);
  CHECK(a.facet(0, Side::High) == Box{{2, 2}, {0, 1}});
  CHECK_THROWS(Box(vec({1}), vec({0})));
  CHECK(cartesian(a, Box{{5, 6}}).dim() == 3);
}
