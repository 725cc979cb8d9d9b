#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "prbt/box.hpp"
#include "prbt/poly.hpp"
#include "testing.hpp"

using namespace prbt;
using prbt::testing::vec;

namespace {

Polynomial var(std::size_t n, std::size_t i) { return Polynomial::variable(n, i); }
Polynomial cst(std::size_t n, double c) { return Polynomial::constant(n, c); }

// Example 1 dynamics over (x, y, u1, u2).
std::vector<Polynomial> example1_field() {
  const auto x = var(4, 0), y = var(4, 1), u1 = var(4, 2), u2 = var(4, 3);
  return {2.0 * x + 3.0 * y + u1, -4.0 * x + 2.0 * y + u2};
}

}  // namespace

TEST_CASE("eval expands terms") {
  const auto x = var(2, 0), y = var(2, 1);
  CHECK(eval(x * x + y, std::vector<double>{2, 3}) == doctest::Approx(7.0));
  CHECK(eval(Polynomial(2), std::vector<double>{5, -1}) == 0.0);
  const Polynomial b = cst(2, -1263.5) - 11.5 * x - 5.85 * y;
  CHECK(b.eval(vec({-90, -40})) == doctest::Approx(5.5).epsilon(1e-12));
  CHECK_THROWS_AS(b.eval(vec({1, 2, 3})), DimensionError);
}

TEST_CASE("mul distributes and normalizes") {
  const auto x = var(2, 0), y = var(2, 1);
  CHECK(mul(x + cst(2, 1), x - cst(2, 1)) == x * x - cst(2, 1));
  const Polynomial p = 3.0 * x * y + cst(2, 2);
  CHECK(mul(p, cst(2, 1)) == p);
  CHECK(mul(x + y, x + y) == x * x + 2.0 * x * y + y * y);
  CHECK_THROWS_AS(mul(x, var(3, 0)), DimensionError);
  // near-cancelling terms vanish
  Polynomial q = x + cst(2, 1e-15) * x;
  q -= x;
  CHECK(q.is_zero());
}

TEST_CASE("mul agrees with pointwise product on random inputs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = testing::random_polynomial(rng, 3, 3, 6);
    const auto b = testing::random_polynomial(rng, 3, 3, 6);
    const auto pt = testing::random_point(rng, 3, -1.5, 1.5);
    const double expected = a.eval(pt) * b.eval(pt);
    CHECK(mul(a, b).eval(pt) == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("lie derivative single and Example 1 fields") {
  const auto x1 = var(2, 0), x2 = var(2, 1);
  const std::vector<Polynomial> rot{x2, -x1};
  CHECK(lie_derivative(x1 * x1, rot) == 2.0 * x1 * x2);

  const auto f = example1_field();
  const auto x = var(4, 0), y = var(4, 1), u1 = var(4, 2), u2 = var(4, 3);
  CHECK(lie_derivative(var(2, 0), f) == 2.0 * x + 3.0 * y + u1);

  const Polynomial b = cst(2, -1263.5) - 11.5 * var(2, 0) - 5.85 * var(2, 1);
  const Polynomial lie = lie_derivative(b, f);
  const Polynomial expected = 0.4 * x - 46.2 * y - 11.5 * u1 - 5.85 * u2;
  CHECK((lie - expected).max_abs_coefficient() < 1e-12);

  CHECK_THROWS_AS(lie_derivative(u1.restricted(4), f), DimensionError);
  CHECK_THROWS_AS(lie_derivative(var(3, 0), f), DimensionError);
}

TEST_CASE("lie derivative is linear") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Polynomial> f;
    for (int i = 0; i < 2; ++i) f.push_back(testing::random_polynomial(rng, 3, 2, 4));
    const auto p = testing::random_polynomial(rng, 2, 3, 5);
    const auto q = testing::random_polynomial(rng, 2, 3, 5);
    const double a = 1.7, b = -0.3;
    const Polynomial lhs = lie_derivative(a * p + b * q, f);
    const Polynomial rhs = a * lie_derivative(p, f) + b * lie_derivative(q, f);
    CHECK((lhs - rhs).max_abs_coefficient() <= 1e-12);
  }
}

TEST_CASE("lie derivative matches finite differences along the flow") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Polynomial> f;
    for (int i = 0; i < 2; ++i) f.push_back(testing::random_polynomial(rng, 2, 2, 4));
    const auto p = testing::random_polynomial(rng, 2, 3, 5);
    const Eigen::VectorXd x0 = testing::random_point(rng, 2, -0.5, 0.5);
    const double exact = lie_derivative(p, f).eval(x0);
    auto field = [&](const Eigen::VectorXd& x) {
      return vec({f[0].eval(x), f[1].eval(x)});
    };
    // One RK4 step; error of the quotient is O(h).
    double prev_err = 0;
    for (double h : {1e-2, 1e-3}) {
      const Eigen::VectorXd k1 = field(x0), k2 = field(x0 + 0.5 * h * k1),
                            k3 = field(x0 + 0.5 * h * k2), k4 = field(x0 + h * k3);
      const Eigen::VectorXd x1 = x0 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      const double err = std::abs((p.eval(x1) - p.eval(x0)) / h - exact);
      if (prev_err > 1e-9) CHECK(err < 0.2 * prev_err);
      prev_err = err;
    }
    CHECK(prev_err < 1e-2 * (1.0 + std::abs(exact)));
  }
}

TEST_CASE("handelman products") {
  const Box unit{{0, 1}, {0, 1}};
  const auto hs = box_to_halfspaces(unit);
  const std::vector<LinearPolynomial> g2(hs.begin(), hs.begin() + 2);
  const auto prods = handelman_products(g2, 2);
  REQUIRE(prods.size() == 6);
  const Polynomial a = g2[0].to_polynomial(), b = g2[1].to_polynomial();
  CHECK(prods[0] == cst(2, 1));
  CHECK(prods[1] == a);
  CHECK(prods[2] == b);
  CHECK(prods[3] == a * a);
  CHECK(prods[4] == a * b);
  CHECK(prods[5] == b * b);

  const auto zero = handelman_products(hs, 0);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0] == cst(2, 1));
  CHECK(handelman_products(hs, 1).size() == 5);
}

TEST_CASE("handelman product count is C(m+M, M)") {
  for (std::size_t m = 1; m <= 8; ++m) {
    std::vector<LinearPolynomial> gens;
    for (std::size_t i = 0; i < m; ++i) {
      LinearPolynomial g{0.5, Eigen::VectorXd::Zero(8)};
      g.gradient(static_cast<Eigen::Index>(i)) = 1.0;
      gens.push_back(g);
    }
    for (unsigned M = 0; M <= 4; ++M) {
      // Independent count: number of multisets of size <= M from m items.
      std::size_t count = 0;
      std::vector<unsigned> a(m, 0);
      while (true) {
        unsigned s = 0;
        for (unsigned e : a) s += e;
        if (s <= M) ++count;
        std::size_t j = 0;
        while (j < m && a[j] == M) a[j++] = 0;
        if (j == m) break;
        ++a[j];
      }
      CHECK(handelman_products(gens, M).size() == count);
      CHECK(handelman_exponents(m, M).size() == binomial(m + M, M));
    }
  }
}

TEST_CASE("templates hold every monomial once") {
  const auto t1 = make_template(2, 1);
  REQUIRE(t1.size() == 3);
  CHECK(t1.monomials[0] == Monomial{0, 0});
  CHECK(t1.monomials[1] == Monomial{1, 0});
  CHECK(t1.monomials[2] == Monomial{0, 1});
  CHECK(make_template(2, 3).size() == 10);
  CHECK(make_template(3, 2).size() == 10);
  const auto t = make_template(3, 4);
  std::set<Monomial> seen(t.monomials.begin(), t.monomials.end());
  CHECK(seen.size() == t.size());
  CHECK(t.size() == binomial(7, 4));
  CHECK_THROWS(make_template(2, 0));
}

TEST_CASE("compose_affine substitutes coordinates") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = testing::random_polynomial(rng, 3, 4, 8);
    const Eigen::VectorXd off = testing::random_point(rng, 3, -2, 2);
    const Eigen::VectorXd scale = testing::random_point(rng, 3, 0.1, 3);
    const Eigen::VectorXd z = testing::random_point(rng, 3, -1, 1);
    const Eigen::VectorXd x = off + scale.cwiseProduct(z);
    CHECK(compose_affine(p, off, scale).eval(z) ==
          doctest::Approx(p.eval(x)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("printing round-trips through the term map") {
  const std::vector<std::string> names{"x", "y"};
  const auto x = var(2, 0), y = var(2, 1);
  const Polynomial p = 1.5 * x - x * y + cst(2, -0.25) + 3.0 * y * y * y;
  const std::string s = to_string(p, names);
  CHECK(s.find("x*y") != std::string::npos);
  CHECK(to_string(Polynomial(2), names) == "0");
}
