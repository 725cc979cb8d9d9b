#include "prbt/enclosure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>

namespace prbt {

const char* to_string(ReachFailure f) {
  switch (f) {
    case ReachFailure::NoExitPlane: return "NO-EXIT-PLANE";
    case ReachFailure::FacetFail: return "FACET-FAIL";
    case ReachFailure::RbtFail: return "RBT-FAIL";
    case ReachFailure::HybridFail: return "HYBRID-FAIL";
    case ReachFailure::Unsupported: return "UNSUPPORTED";
  }
  return "?";
}

std::string facet_name(std::size_t dim, Side side) {
  return "x" + std::to_string(dim + 1) + (side == Side::Low ? "-low" : "-high");
}

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void push_unique(std::vector<Eigen::VectorXd>& pts, const Eigen::VectorXd& p) {
  for (const auto& q : pts)
    if (q == p) return;
  pts.push_back(p);
}

struct Candidate {
  std::size_t dim;
  Side side;
  double value;
};

// One sample trajectory followed until it has crossed every candidate plane
// or left the invariant.
struct SampleRun {
  std::vector<Eigen::VectorXd> points;
  std::vector<std::optional<std::size_t>> cross_index;  // first point past the plane
  std::vector<Eigen::VectorXd> cross_point;
};

SampleRun run_sample(const VectorField& f, const Eigen::VectorXd& x0, double h,
                     std::size_t max_steps, const std::vector<Candidate>& planes,
                     const Box& invariant) {
  SampleRun run;
  run.points.push_back(x0);
  run.cross_index.assign(planes.size(), std::nullopt);
  run.cross_point.assign(planes.size(), Eigen::VectorXd());
  std::vector<bool> done(planes.size(), false);
  std::size_t open = planes.size();
  for (std::size_t k = 1; k <= max_steps && open > 0; ++k) {
    const Eigen::VectorXd& prev = run.points.back();
    Eigen::VectorXd next = rk4_step(f, prev, h);
    if (!next.allFinite()) {
      Trace partial;
      for (const auto& p : run.points) partial.points.push_back({0.0, p, f(p)});
      throw SimulationError(SimulationFailure::Diverged, "sample trajectory diverged",
                            std::move(partial));
    }
    for (std::size_t c = 0; c < planes.size(); ++c) {
      if (done[c]) continue;
      const auto i = static_cast<Eigen::Index>(planes[c].dim);
      const double a = prev(i) - planes[c].value, b = next(i) - planes[c].value;
      const bool crossed = planes[c].side == Side::High ? b >= 0.0 : b <= 0.0;
      if (!crossed) continue;
      done[c] = true;
      --open;
      const double t = a == b ? 1.0 : a / (a - b);
      Eigen::VectorXd xc = prev + t * (next - prev);
      xc(i) = planes[c].value;
      // A crossing outside the invariant does not count.
      if (invariant.contains(xc)) {
        run.cross_index[c] = k;
        run.cross_point[c] = xc;
      }
    }
    run.points.push_back(std::move(next));
    if (!invariant.contains(run.points.back())) break;
  }
  return run;
}

Box bounding_box(const std::vector<Eigen::VectorXd>& pts) {
  Eigen::VectorXd lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return Box(lo, hi);
}

Box clip(const Box& b, const Box& to) {
  return Box(b.lo().cwiseMax(to.lo()).cwiseMin(to.hi()), b.hi().cwiseMin(to.hi()).cwiseMax(to.lo()));
}

}  // namespace

std::vector<Eigen::VectorXd> sample_initial(const Box& x0) {
  const std::size_t n = x0.dim();
  std::vector<Eigen::VectorXd> pts;
  if (n <= 12) {
    for (const auto& v : vertices(x0)) push_unique(pts, v);
  } else {
    // Distinct corners drawn from a fixed-seed bit stream.
    std::uint64_t seed = 0x5eed;
    std::set<std::vector<bool>> seen;
    while (seen.size() < 4096) {
      std::vector<bool> bits(n);
      std::uint64_t word = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = splitmix(seed);
        bits[i] = ((word >> (i % 64)) & 1U) != 0;
      }
      if (!seen.insert(bits).second) continue;
      Eigen::VectorXd v = x0.lo();
      for (std::size_t i = 0; i < n; ++i)
        if (bits[i]) v(static_cast<Eigen::Index>(i)) = x0.hi(i);
      push_unique(pts, v);
    }
  }
  push_unique(pts, x0.center());
  for (std::size_t i = 0; i < n; ++i) {
    for (Side s : {Side::Low, Side::High}) {
      Eigen::VectorXd c = x0.center();
      c(static_cast<Eigen::Index>(i)) = x0.bound(i, s);
      push_unique(pts, c);
    }
  }
  return pts;
}

EnclosureBox construct_enclosure(const ContinuousModel& model, const Box& x0,
                                 const EnclosureOptions& options) {
  const std::size_t n = model.state_dim();
  const VectorField f = fixed_input_field(model.dynamics, model.uncertainty.center());
  const Eigen::VectorXd c0 = x0.center();
  const ThetaDResult center = theta_d_simulation(f, c0, options.theta, options.dist,
                                                 options.simulation);
  const double h = theta_d_step(f, c0, options.dist, options.simulation);
  const Eigen::VectorXd& xe = center.endpoint;

  // A plane through the endpoint, or, when the endpoint still lies within
  // X0's extent, the same displacement measured from X0's far face.
  std::vector<Candidate> planes;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = xe(static_cast<Eigen::Index>(i));
    const double shift = v - c0(static_cast<Eigen::Index>(i));
    if (v > x0.hi(i)) planes.push_back({i, Side::High, v});
    else if (v < x0.lo(i)) planes.push_back({i, Side::Low, v});
    else if (shift > 0.0) planes.push_back({i, Side::High, x0.hi(i) + shift});
    else if (shift < 0.0) planes.push_back({i, Side::Low, x0.lo(i) + shift});
  }
  if (planes.empty())
    throw ReachError(ReachFailure::NoExitPlane, "center endpoint lies inside X0 in every dimension");

  const std::size_t max_steps = std::max<std::size_t>(4 * center.trace.size(), 2000);
  const auto samples = sample_initial(x0);
  std::vector<SampleRun> runs;
  runs.reserve(samples.size());
  for (const auto& s : samples) runs.push_back(run_sample(f, s, h, max_steps, planes, model.invariant));

  // Among planes crossed by every sample, prefer the fastest center motion.
  const Eigen::VectorXd speed0 = f(c0).cwiseAbs();
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < planes.size(); ++c) {
    const bool all = std::all_of(runs.begin(), runs.end(),
                                 [&](const SampleRun& r) { return r.cross_index[c].has_value(); });
    if (!all) continue;
    const auto d = static_cast<Eigen::Index>(planes[c].dim);
    if (!best || speed0(d) > speed0(static_cast<Eigen::Index>(planes[*best].dim))) best = c;
  }
  if (!best)
    throw ReachError(ReachFailure::NoExitPlane,
                     "no candidate plane is crossed by all " + std::to_string(samples.size()) +
                         " sample trajectories inside the invariant");

  const Candidate& plane = planes[*best];
  std::vector<Eigen::VectorXd> inside, crossings;
  for (const auto& r : runs) {
    const std::size_t k = *r.cross_index[*best];
    inside.insert(inside.end(), r.points.begin(), r.points.begin() + static_cast<std::ptrdiff_t>(k));
    inside.push_back(r.cross_point[*best]);
    crossings.push_back(r.cross_point[*best]);
  }
  Box traced = bounding_box(inside);
  traced = hull(traced, x0);
  traced.set_bound(plane.dim, plane.side, plane.value);

  Box e = traced;
  const double floor = 1e-3 * std::max(traced.diameter(), 1e-12);
  for (std::size_t j = 0; j < n; ++j) {
    const double push = std::max(options.facet_bloat * traced.width(j), floor);
    for (Side s : {Side::Low, Side::High}) {
      if (j == plane.dim && s == plane.side) continue;
      e.set_bound(j, s, traced.bound(j, s) + (s == Side::High ? push : -push));
    }
  }
  e = clip(e, model.invariant);

  EnclosureBox enc;
  enc.E = e;
  enc.exit = {plane.dim, plane.side, plane.value};
  enc.center_stop = center.reason;

  Box g = bounding_box(crossings);
  const Box facet = enc.exit_facet();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == plane.dim) continue;
    const double push = std::max(options.crossing_bloat * g.width(j), 1e-3 * facet.width(j));
    g.set_lo(j, g.lo(j) - push);
    g.set_hi(j, g.hi(j) + push);
  }
  enc.G = clip(g, facet);
  return enc;
}

EnclosureBox certify_facets(const ContinuousModel& model, const Box& x0, EnclosureBox enc,
                            const EnclosureOptions& options, const CertifyOptions& certify) {
  const std::size_t n = model.state_dim();
  for (std::size_t round = 0;; ++round) {
    enc.facets.clear();
    std::optional<std::pair<std::size_t, Side>> failed;
    std::string message;
    for (std::size_t i = 0; i < n && !failed; ++i) {
      for (Side s : {Side::Low, Side::High}) {
        if (i == enc.exit.dim && s == enc.exit.side) continue;
        const auto r = find_robust_barrier(x0, enc.E, model.uncertainty, enc.E.facet(i, s),
                                           model.dynamics, certify);
        if (r) {
          enc.facets.push_back({i, s, r.certificate});
        } else if (enc.E.bound(i, s) == model.invariant.bound(i, s)) {
          enc.facets.push_back({i, s, std::nullopt});
        } else {
          failed = {i, s};
          message = r.message;
          break;
        }
      }
    }
    if (!failed) {
      enc.bloat_rounds = round;
      return enc;
    }
    const auto [k, t] = *failed;
    if (round >= options.max_bloat_rounds) {
      throw ReachError(ReachFailure::FacetFail,
                       "facet " + facet_name(k, t) + " not certified after " +
                           std::to_string(round) + " bloat rounds" +
                           (message.empty() ? "" : ": " + message));
    }
    const double push = options.retry_bloat * enc.E.width(k);
    const double moved = enc.E.bound(k, t) + (t == Side::High ? push : -push);
    enc.E.set_bound(k, t, t == Side::High ? std::min(moved, model.invariant.hi(k))
                                          : std::max(moved, model.invariant.lo(k)));
  }
}

}  // namespace prbt
