#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "prbt/pipeline.hpp"
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

ContinuousModel translation() {
  return planar({"1", "0"}, Box{{-1, 5}, {-1, 1}}, Box{{0, 0.1}, {0, 0.1}});
}

ReachParams translation_params(std::size_t n) {
  ReachParams p;
  p.tubes = n;
  p.dist0 = 1.0;
  p.certify.degrees = {1};
  return p;
}

void check_chain(const PiecewiseTube& prbt) {
  for (std::size_t k = 0; k + 1 < prbt.tubes.size(); ++k)
    CHECK(prbt.tubes[k + 1].init == prbt.tubes[k].exit_region);
}

void check_identities(const PiecewiseTube& prbt, const std::vector<Polynomial>& f) {
  for (const auto& t : prbt.tubes) {
    for (const BarrierCertificate* c : tube_certificates(t)) {
      CHECK(certificate_residual(*c, f) <= kResidualTolerance);
      CHECK(min_lambda(*c) >= kLambdaTolerance);
    }
  }
}

}  // namespace

TEST_CASE("translation flow: three collinear tubes of equal length") {
  const auto m = translation();
  const auto prbt = compute_prbt(m, translation_params(3));
  CHECK(prbt.termination == Termination::CountReached);
  REQUIRE(prbt.tubes.size() == 3);
  check_chain(prbt);
  check_identities(prbt, m.dynamics);
  double start = m.init.center()(0);
  for (const auto& t : prbt.tubes) {
    CHECK(t.enclosure.exit.dim == 0);
    CHECK(t.enclosure.exit.side == Side::High);
    CHECK(t.enclosure.exit.value - start == doctest::Approx(1.0).epsilon(1e-6));
    start = t.enclosure.exit.value;
    CHECK(t.slabs.size() == 2);
  }
  CHECK(prbt.tubes.back().exit_region.lo(1) <= 0.0);
  CHECK(prbt.tubes.back().exit_region.hi(1) >= 0.1);
}

TEST_CASE("theta floor stops after the first failed attempt") {
  const Box x0{{-0.1, 0.1}, {0.95, 1.05}};
  const auto m = planar({"x1", "-x2"}, Box{{-0.3, 0.3}, {0, 2}}, x0);
  ReachParams p;
  p.tubes = 2;
  p.dist0 = 0.8;
  p.theta_min = p.theta0;
  const auto prbt = compute_prbt(m, p);
  CHECK(prbt.tubes.empty());
  CHECK(prbt.termination == Termination::ThetaFloor);
  CHECK(prbt.message.find("NO-EXIT-PLANE") != std::string::npos);
}

TEST_CASE("parameter defaults") {
  ReachParams p;
  CHECK(p.theta0 == 0.3);
  CHECK(p.resolved_theta_min() == doctest::Approx(0.3 / 16));
  CHECK(p.resolved_dist0(Box{{0, 3}, {0, 4}}) == doctest::Approx(1.0));
  CHECK(p.eps_rel == 0.01);
  CHECK(p.queue_budget == 64);
}

TEST_CASE("safety by disjointness, by positivity, and unknown on the flowpipe") {
  const auto m = translation();
  const auto prbt = compute_prbt(m, translation_params(3));
  REQUIRE(prbt.tubes.size() == 3);

  const std::vector<UnsafeSet> far{{"m", Box{{0.2, 0.3}, {5, 6}}}};
  auto v = check_safety(prbt, far, 2);
  CHECK(v.safe);
  CHECK(v.positivity_proofs == 0);

  // Touches the first tube only along its certified x2-high facet.
  const double top = prbt.tubes[0].enclosure.E.hi(1);
  std::vector<UnsafeSet> touching{{"m", Box{{0.2, 0.6}, {top, top + 0.5}}}};
  v = check_safety(prbt, touching, 2);
  CHECK(v.safe);
  CHECK(v.positivity_proofs >= 1);

  touching.push_back(far.front());
  touching.push_back({"other", Box{{0, 1}, {0, 1}}});
  CHECK(check_safety(prbt, touching, 2).safe);

  // A box around a point of the simulated flow.
  const std::vector<UnsafeSet> on_flow{{"m", Box{{1.5, 1.6}, {0.04, 0.06}}}};
  v = check_safety(prbt, on_flow, 2);
  CHECK_FALSE(v.safe);
  REQUIRE(v.failing_tube.has_value());
  CHECK(*v.failing_tube == 1);
}

TEST_CASE("Monte-Carlo validation of a correct chain and of a mutated one") {
  const auto m = translation();
  const auto prbt = compute_prbt(m, translation_params(3));
  const auto h = as_hybrid(m);
  const auto rep = monte_carlo_validate(h, prbt, 100, 1, 1.0);
  CHECK(rep.trajectories == 100);
  CHECK(rep.violations() == 0);
  CHECK(rep.completed == 100);

  auto bad = prbt;
  auto& slab = bad.tubes[1].slabs.front();
  REQUIRE(slab.certificate);
  slab.certificate = slab.certificate->negated();
  CHECK(monte_carlo_validate(h, bad, 100, 1, 1.0).violations() >= 1);

  CHECK_THROWS(monte_carlo_validate(h, prbt, 0, 1, 1.0));
}

TEST_CASE("Lotka-Volterra chain with uncertainty passes Monte-Carlo") {
  const auto model = load_model(testing::model_path("lotka_volterra.json"));
  const auto lv = model.continuous();
  ReachParams p;
  p.tubes = 3;
  p.certify.degrees = {3, 4};
  const auto prbt = compute_prbt(lv, p);
  CHECK(prbt.termination == Termination::CountReached);
  CHECK(prbt.tubes.size() == 3);
  check_chain(prbt);
  check_identities(prbt, lv.dynamics);
  const auto rep = monte_carlo_validate(model, prbt, 50, 7, p.resolved_dist0(lv.invariant));
  CHECK(rep.violations() == 0);
  for (const auto& d : rep.details) MESSAGE(d);
}
