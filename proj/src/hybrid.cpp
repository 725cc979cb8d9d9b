#include "prbt/hybrid.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace prbt {

Box box_linear_image(const Eigen::MatrixXd& a, const Eigen::VectorXd& offset, const Box& b) {
  if (a.cols() != static_cast<Eigen::Index>(b.dim()) || a.rows() != offset.size())
    throw std::invalid_argument("box_linear_image: dimension mismatch");
  Eigen::VectorXd lo = a * b.lo() + offset, hi = lo;
  for (const auto& v : vertices(b)) {
    const Eigen::VectorXd y = a * v + offset;
    lo = lo.cwiseMin(y);
    hi = hi.cwiseMax(y);
  }
  return Box(lo, hi);
}

bool guard_meets(const Guard& g, const Box& b) {
  return g.op == Guard::Op::LessEq ? b.lo(g.var) <= g.bound : b.hi(g.var) >= g.bound;
}

namespace {

bool same_guard(const Guard& a, const Guard& b) {
  return a.var == b.var && a.op == b.op && a.bound == b.bound;
}

Side guard_side(const Guard& g) { return g.op == Guard::Op::GreaterEq ? Side::High : Side::Low; }

std::string guard_text(const HybridModel& model, const Guard& g) {
  return model.state_vars[g.var] + (g.op == Guard::Op::LessEq ? " <= " : " >= ") +
         std::to_string(g.bound);
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

enum class Reach { All, None, Partial };

struct GuardReach {
  Reach kind = Reach::None;
  std::vector<Eigen::VectorXd> traced;     // points up to the crossing, reaching runs only
  std::vector<Eigen::VectorXd> crossings;  // on the guard plane
};

// Follows every sample of x0 for a path of about 2d and records which reach
// the guard plane before leaving the cut invariant.
GuardReach classify_reach(const ContinuousModel& cm, const Box& x0, const Guard& g, double dist,
                          const ThetaDOptions& sim) {
  const VectorField f = fixed_input_field(cm.dynamics, cm.uncertainty.center());
  const double h = theta_d_step(f, x0.center(), dist, sim);
  const std::size_t max_steps = 2 * sim.steps_per_distance;
  const auto i = static_cast<Eigen::Index>(g.var);
  const double tol = 1e-12 * (1.0 + cm.invariant.diameter());
  GuardReach out;
  std::size_t reached = 0, missed = 0;
  const auto samples = sample_initial(x0);
  for (const auto& s : samples) {
    std::vector<Eigen::VectorXd> pts{s};
    std::optional<Eigen::VectorXd> hit;
    if (s(i) == g.bound && g.direction() * f(s)(i) > 0.0) hit = s;
    for (std::size_t k = 0; k < max_steps && !hit; ++k) {
      const Eigen::VectorXd& prev = pts.back();
      Eigen::VectorXd next = rk4_step(f, prev, h);
      if (!next.allFinite()) break;
      if (g.satisfied(next)) {
        const double a = prev(i) - g.bound, b = next(i) - g.bound;
        Eigen::VectorXd xc = prev + (a == b ? 1.0 : a / (a - b)) * (next - prev);
        xc(i) = g.bound;
        if (cm.invariant.contains(xc, tol)) hit = xc;
        break;
      }
      if (!cm.invariant.contains(next, tol)) break;
      pts.push_back(std::move(next));
    }
    if (hit) {
      ++reached;
      out.traced.insert(out.traced.end(), pts.begin(), pts.end());
      out.traced.push_back(*hit);
      out.crossings.push_back(*hit);
    } else {
      ++missed;
    }
  }
  out.kind = missed == 0 ? Reach::All : reached == 0 ? Reach::None : Reach::Partial;
  return out;
}

// Enclosure whose exit facet lies on the guard plane.
EnclosureBox guard_enclosure(const ContinuousModel& cm, const Box& x0, const Guard& g,
                             const GuardReach& reach, const EnclosureOptions& options) {
  const std::size_t n = cm.state_dim();
  const Side side = guard_side(g);
  Box traced = hull(bounding_box(reach.traced), x0);
  traced.set_bound(g.var, side, g.bound);
  Box e = traced;
  const double floor = 1e-3 * std::max(traced.diameter(), 1e-12);
  for (std::size_t j = 0; j < n; ++j) {
    const double push = std::max(options.facet_bloat * traced.width(j), floor);
    for (Side s : {Side::Low, Side::High}) {
      if (j == g.var && s == side) continue;
      e.set_bound(j, s, traced.bound(j, s) + (s == Side::High ? push : -push));
    }
  }
  EnclosureBox enc;
  enc.E = clip(e, cm.invariant);
  enc.exit = {g.var, side, g.bound};
  enc.center_stop = StopReason::Dist;

  Box gb = bounding_box(reach.crossings);
  const Box facet = enc.exit_facet();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == g.var) continue;
    const double push = std::max(options.crossing_bloat * gb.width(j), 1e-3 * facet.width(j));
    gb.set_lo(j, gb.lo(j) - push);
    gb.set_hi(j, gb.hi(j) + push);
  }
  enc.G = clip(gb, facet);
  return enc;
}

[[noreturn]] void hybrid_fail(const std::string& what) {
  throw ReachError(ReachFailure::HybridFail, what);
}

}  // namespace

std::optional<std::size_t> detect_guard(const Box& e, const HybridModel& model,
                                        std::span<const std::size_t> candidates) {
  std::optional<std::size_t> hit;
  for (std::size_t t : candidates) {
    const Guard& g = model.transitions.at(t).guard;
    if (!guard_meets(g, e)) continue;
    if (!hit) {
      hit = t;
    } else if (!same_guard(model.transitions[*hit].guard, g)) {
      throw ReachError(ReachFailure::Unsupported,
                       "enclosure meets two guards: " + guard_text(model, model.transitions[*hit].guard) +
                           " and " + guard_text(model, g));
    }
  }
  return hit;
}

std::optional<std::size_t> detect_guard(const Box& e, const HybridModel& model,
                                        std::string_view mode) {
  const auto ts = model.transitions_from(mode);
  return detect_guard(e, model, std::span<const std::size_t>(ts));
}

ContinuousModel mode_view(const HybridModel& model, std::string_view mode, const Box& x0) {
  ContinuousModel cm = model.continuous(mode);
  cm.init = x0;
  Box inv = cm.invariant;
  for (std::size_t t : model.transitions_from(mode)) {
    const Guard& g = model.transitions[t].guard;
    if (g.op == Guard::Op::LessEq) {
      if (g.bound >= inv.lo(g.var) && g.bound <= inv.hi(g.var)) inv.set_lo(g.var, g.bound);
    } else {
      if (g.bound >= inv.lo(g.var) && g.bound <= inv.hi(g.var)) inv.set_hi(g.var, g.bound);
    }
  }
  cm.invariant = inv;
  return cm;
}

bool moves_away_from_guard(const HybridModel& model, const Transition& t, const Box& x0) {
  const Mode& m = model.mode(t.from);
  const std::size_t n = model.state_dim();
  const auto us = model.uncertain_dim() > 0 ? vertices(model.uncertainty)
                                            : std::vector<Eigen::VectorXd>{Eigen::VectorXd(0)};
  Eigen::VectorXd z(static_cast<Eigen::Index>(n + model.uncertain_dim()));
  for (const auto& v : vertices(x0)) {
    z.head(static_cast<Eigen::Index>(n)) = v;
    for (const auto& u : us) {
      z.tail(u.size()) = u;
      if (t.guard.direction() * m.dynamics[t.guard.var].eval(z) >= 0.0) return false;
    }
  }
  return true;
}

TransitionResult handle_transition(const HybridModel& model, const Box& x0,
                                   std::size_t transition, const ReachParams& params) {
  const Transition& tr = model.transitions.at(transition);
  const Guard& g = tr.guard;
  const ContinuousModel cm = mode_view(model, tr.from, x0);
  const double theta_min = params.resolved_theta_min();
  const TubeOptions tube_options{.eps_rel = params.eps_rel};
  TransitionResult out;
  std::deque<Box> queue{x0};
  while (!queue.empty()) {
    const Box x = queue.front();
    queue.pop_front();
    if (++out.queue_pops > params.queue_budget)
      hybrid_fail("queue budget of " + std::to_string(params.queue_budget) +
                  " exhausted before reaching " + guard_text(model, g));
    double theta = params.theta0;
    double dist = params.resolved_dist0(cm.invariant);
    std::string last;
    bool advanced = false;
    while (!advanced && theta >= theta_min * (1.0 - 1e-12)) {
      EnclosureOptions eo = params.enclosure;
      eo.theta = theta;
      eo.dist = dist;
      try {
        const GuardReach reach = classify_reach(cm, x, g, dist, eo.simulation);
        if (reach.kind == Reach::All) {
          EnclosureBox enc = guard_enclosure(cm, x, g, reach, eo);
          enc = certify_facets(cm, x, std::move(enc), eo, params.certify);
          RobustBarrierTube tube = compute_rbt(cm, x, enc, tube_options, params.certify);
          out.crossing = tube.exit_region;
          out.image = box_linear_image(tr.reset, tr.offset, *out.crossing);
          out.tubes.push_back(std::move(tube));
          return out;
        }
        if (reach.kind == Reach::None) {
          if (moves_away_from_guard(model, tr, x)) {
            out.handed_back = true;
            return out;
          }
          TubeAttempt a = build_tube(cm, x, params);
          if (!a.tube) hybrid_fail("no tube toward " + guard_text(model, g) + ": " + a.message);
          queue.push_back(a.tube->exit_region);
          out.tubes.push_back(std::move(*a.tube));
          advanced = true;
          continue;
        }
        last = "flowpipe splits at " + guard_text(model, g);
      } catch (const ReachError& e) {
        if (e.kind() == ReachFailure::HybridFail || e.kind() == ReachFailure::Unsupported) throw;
        last = std::string(to_string(e.kind())) + ": " + e.what();
      } catch (const SimulationError& e) {
        last = std::string("simulation: ") + e.what();
      }
      theta *= 0.5;
      dist *= 0.5;
    }
    if (!advanced) hybrid_fail("guard " + guard_text(model, g) + " not handled: " + last);
  }
  hybrid_fail("queue emptied without a guard crossing");
}

PiecewiseTube compute_hybrid_prbt(const HybridModel& model, const ReachParams& params) {
  if (params.tubes < 1) throw std::invalid_argument("compute_hybrid_prbt: need at least one tube");
  PiecewiseTube out;
  out.model = model.name;
  std::string mode = model.init_mode;
  Box x0 = model.init;
  bool skip_guards = false;
  while (out.tubes.size() < params.tubes) {
    // Guards the set already lies on while leaving them are not pending.
    std::vector<std::size_t> active;
    for (std::size_t t : model.transitions_from(mode)) {
      const Transition& tr = model.transitions[t];
      if (guard_meets(tr.guard, x0) && moves_away_from_guard(model, tr, x0)) continue;
      active.push_back(t);
    }
    const ContinuousModel cm = mode_view(model, mode, x0);
    std::optional<std::size_t> hit;
    EnclosureIntercept intercept;
    if (!skip_guards && !active.empty()) {
      intercept = [&](const EnclosureBox& enc) {
        hit = detect_guard(enc.E, model, std::span<const std::size_t>(active));
        return hit.has_value();
      };
    }
    skip_guards = false;
    TubeAttempt a;
    try {
      a = build_tube(cm, x0, params, intercept);
    } catch (const ReachError& e) {
      out.termination = Termination::HybridFail;
      out.message = std::string(to_string(e.kind())) + ": " + e.what();
      return out;
    }
    // Near a guard the ordinary enclosure can fail because samples leave the
    // cut invariant through the guard plane; hand such sets to the guard.
    if (!a.tube && !a.intercepted) {
      for (std::size_t t : active) {
        if (!moves_away_from_guard(model, model.transitions[t], x0)) {
          hit = t;
          break;
        }
      }
    }
    if ((a.intercepted || !a.tube) && hit) {
      TransitionResult r;
      try {
        r = handle_transition(model, x0, *hit, params);
      } catch (const ReachError& e) {
        out.termination = Termination::HybridFail;
        out.message = std::string(to_string(e.kind())) + ": " + e.what();
        return out;
      }
      for (auto& t : r.tubes) out.tubes.push_back(std::move(t));
      if (!r.tubes.empty()) x0 = out.tubes.back().exit_region;
      if (r.handed_back) {
        if (r.tubes.empty() && !a.intercepted) {
          out.termination = a.last_failure == ReachFailure::RbtFail ? Termination::RbtFail
                                                                     : Termination::ThetaFloor;
          out.message = a.message;
          return out;
        }
        skip_guards = true;
        continue;
      }
      const Transition& tr = model.transitions[*hit];
      GuardEventRecord ev;
      ev.transition = *hit;
      ev.from = tr.from;
      ev.to = tr.to;
      ev.before_tube = out.tubes.size();
      ev.crossing = *r.crossing;
      ev.image = *r.image;
      ev.queue_pops = r.queue_pops;
      out.events.push_back(ev);
      mode = tr.to;
      x0 = *r.image;
      continue;
    }
    if (!a.tube) {
      out.termination = a.last_failure == ReachFailure::RbtFail ? Termination::RbtFail
                                                                 : Termination::ThetaFloor;
      out.message = a.message;
      return out;
    }
    x0 = a.tube->exit_region;
    out.tubes.push_back(std::move(*a.tube));
  }
  out.termination = Termination::CountReached;
  return out;
}

}  // namespace prbt
