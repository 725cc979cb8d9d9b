#include "prbt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace prbt {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::CountReached: return "COUNT-REACHED";
    case Termination::ThetaFloor: return "THETA-FLOOR";
    case Termination::RbtFail: return "RBT-FAIL";
    case Termination::GuardEvent: return "GUARD-EVENT";
    case Termination::HybridFail: return "HYBRID-FAIL";
  }
  return "?";
}

TubeAttempt build_tube(const ContinuousModel& model, const Box& x0, const ReachParams& params,
                       const EnclosureIntercept& intercept) {
  const double theta_min = params.resolved_theta_min();
  if (!(params.theta0 > 0.0) || !(theta_min > 0.0))
    throw std::invalid_argument("build_tube: theta0 and theta_min must be positive");
  double theta = params.theta0;
  double dist = params.resolved_dist0(model.invariant);
  const TubeOptions tube_options{.eps_rel = params.eps_rel};
  TubeAttempt out;
  while (theta >= theta_min * (1.0 - 1e-12)) {
    EnclosureOptions eo = params.enclosure;
    eo.theta = theta;
    eo.dist = dist;
    try {
      EnclosureBox enc = construct_enclosure(model, x0, eo);
      if (intercept && intercept(enc)) {
        out.intercepted = std::move(enc);
        return out;
      }
      enc = certify_facets(model, x0, std::move(enc), eo, params.certify);
      out.tube = compute_rbt(model, x0, enc, tube_options, params.certify);
      return out;
    } catch (const ReachError& e) {
      out.last_failure = e.kind();
      out.message = std::string(to_string(e.kind())) + " at theta " + std::to_string(theta) +
                    ": " + e.what();
    } catch (const SimulationError& e) {
      out.last_failure.reset();
      out.message = "simulation at theta " + std::to_string(theta) + ": " + e.what();
    }
    theta *= 0.5;
    dist *= 0.5;
  }
  return out;
}

PiecewiseTube compute_prbt(const ContinuousModel& model, const ReachParams& params) {
  if (params.tubes < 1) throw std::invalid_argument("compute_prbt: need at least one tube");
  PiecewiseTube out;
  out.model = model.name;
  Box x0 = model.init;
  while (out.tubes.size() < params.tubes) {
    TubeAttempt a = build_tube(model, x0, params);
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

std::vector<const BarrierCertificate*> tube_certificates(const RobustBarrierTube& tube) {
  std::vector<const BarrierCertificate*> out;
  for (const auto& f : tube.enclosure.facets)
    if (f.certificate) out.push_back(&*f.certificate);
  for (const auto& s : tube.slabs)
    if (s.certificate) out.push_back(&*s.certificate);
  return out;
}

SafetyVerdict check_safety(const PiecewiseTube& prbt, const std::vector<UnsafeSet>& unsafe,
                           unsigned order) {
  SafetyVerdict v;
  for (std::size_t k = 0; k < prbt.tubes.size(); ++k) {
    const auto& tube = prbt.tubes[k];
    for (const auto& u : unsafe) {
      if (u.mode != tube.mode) continue;
      const auto inter = intersect(tube.enclosure.E, u.box);
      if (!inter) continue;
      bool settled = false;
      for (const BarrierCertificate* c : tube_certificates(tube)) {
        if (negativity_certificate(*c, *inter, order)) {
          settled = true;
          ++v.positivity_proofs;
          break;
        }
      }
      if (!settled) {
        v.safe = false;
        v.failing_tube = k;
        return v;
      }
    }
  }
  return v;
}

HybridModel as_hybrid(const ContinuousModel& model) {
  HybridModel h;
  h.name = model.name;
  h.state_vars = model.state_vars;
  h.uncertain_vars = model.uncertain_vars;
  h.uncertainty = model.uncertainty;
  h.modes.push_back({model.mode, model.dynamics, model.invariant});
  h.init_mode = model.mode;
  h.init = model.init;
  for (const auto& b : model.unsafe) h.unsafe.push_back({model.mode, b});
  return h;
}

namespace {

struct ModeField {
  const std::vector<Polynomial>* dynamics;
  Eigen::VectorXd z;  // scratch (x, u)

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) {
    z.head(x.size()) = x;
    Eigen::VectorXd out(static_cast<Eigen::Index>(dynamics->size()));
    for (std::size_t i = 0; i < dynamics->size(); ++i)
      out(static_cast<Eigen::Index>(i)) = (*dynamics)[i].eval(z);
    return out;
  }
};

Eigen::VectorXd uniform_in(std::mt19937_64& rng, const Box& b) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(b.dim()));
  for (std::size_t i = 0; i < b.dim(); ++i) {
    std::uniform_real_distribution<double> d(b.lo(i), b.hi(i));
    x(static_cast<Eigen::Index>(i)) = b.is_degenerate(i) ? b.lo(i) : d(rng);
  }
  return x;
}

std::string fmt_point(const Eigen::VectorXd& x) {
  std::ostringstream o;
  o << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) o << (i ? ", " : "") << x(i);
  o << ')';
  return o.str();
}

}  // namespace

ViolationReport monte_carlo_validate(const HybridModel& model, const PiecewiseTube& prbt,
                                     std::size_t K, std::uint64_t seed, double dist0) {
  if (K < 1) throw std::invalid_argument("monte_carlo_validate: K must be at least 1");
  if (!(dist0 > 0.0)) throw std::invalid_argument("monte_carlo_validate: dist0 must be positive");
  ViolationReport rep;
  if (prbt.tubes.empty()) return rep;

  std::map<std::size_t, const GuardEventRecord*> event_before;
  for (const auto& e : prbt.events) event_before[e.before_tube] = &e;

  const std::size_t n = model.state_dim();
  const double dwell = dist0 / 50.0;
  const double step_len = dist0 / 1000.0;
  constexpr std::size_t kMaxSteps = 2000000;
  constexpr std::size_t kMaxDetails = 8;
  std::mt19937_64 rng(seed);

  auto note = [&](const std::string& s) {
    if (rep.details.size() < kMaxDetails) rep.details.push_back(s);
  };

  for (std::size_t traj = 0; traj < K; ++traj) {
    ++rep.trajectories;
    Eigen::VectorXd x = uniform_in(rng, prbt.tubes.front().init);
    std::size_t k = 0;
    const Mode* mode = &model.mode(prbt.tubes.front().mode);
    ModeField field{&mode->dynamics, Eigen::VectorXd(static_cast<Eigen::Index>(n + model.uncertain_dim()))};
    auto resample = [&] {
      if (model.uncertain_dim() > 0) field.z.tail(static_cast<Eigen::Index>(model.uncertain_dim())) = uniform_in(rng, model.uncertainty);
    };
    resample();
    double since = 0.0;
    for (std::size_t step = 0; step < kMaxSteps; ++step) {
      const RobustBarrierTube& tube = prbt.tubes[k];
      const Box& e = tube.enclosure.E;
      const double tol = 1e-9 * (1.0 + e.diameter());
      bool bad = false;
      if (e.contains(x, tol)) {
        for (const BarrierCertificate* c : tube_certificates(tube)) {
          if (c->eval(x) <= 0.0) {
            ++rep.negative_barrier;
            note("tube " + std::to_string(k) + ": barrier <= 0 at " + fmt_point(x));
            bad = true;
            break;
          }
        }
      }
      if (bad) break;

      const Eigen::VectorXd fx = field(x);
      const double speed = fx.norm();
      if (!(speed > 0.0) || !std::isfinite(speed)) break;
      const double h = std::min(dwell - since, step_len / speed);
      const Eigen::VectorXd next = rk4_step(std::ref(field), x, h);
      since += h;
      if (since >= dwell * (1.0 - 1e-12)) {
        resample();
        since = 0.0;
      }

      const auto ed = static_cast<Eigen::Index>(tube.enclosure.exit.dim);
      const double plane = tube.enclosure.exit.value;
      const bool crossed = tube.enclosure.exit.side == Side::High ? next(ed) >= plane : next(ed) <= plane;
      if (crossed) {
        const double a = x(ed) - plane, b = next(ed) - plane;
        Eigen::VectorXd xc = x + (a == b ? 1.0 : a / (a - b)) * (next - x);
        xc(ed) = plane;
        const Box& region = tube.exit_region;
        if (!region.contains(xc, 1e-9 * (1.0 + region.diameter()))) {
          // A step that also left E sideways is a facet escape, not an exit.
          if (!e.contains(xc, tol)) {
            ++rep.facet_escape;
            note("tube " + std::to_string(k) + ": left E before the exit plane near " + fmt_point(xc));
          } else {
            ++rep.exit_outside;
            note("tube " + std::to_string(k) + ": exit crossing outside X0' at " + fmt_point(xc));
          }
          break;
        }
        ++k;
        auto ev = event_before.find(k);
        if (ev != event_before.end()) {
          const Transition& tr = model.transitions[ev->second->transition];
          Eigen::VectorXd img = tr.reset * xc + tr.offset;
          if (!ev->second->image.contains(img, 1e-9 * (1.0 + ev->second->image.diameter()))) {
            ++rep.image_outside;
            note("event " + ev->second->from + "->" + ev->second->to + ": image outside at " + fmt_point(img));
            break;
          }
          ++rep.guard_crossings;
          mode = &model.mode(ev->second->to);
          field.dynamics = &mode->dynamics;
          xc = img;
        }
        if (k == prbt.tubes.size()) {
          ++rep.completed;
          break;
        }
        x = xc;
        continue;
      }
      if (!e.contains(next, tol)) {
        // Identify the facet that was left.
        std::optional<FacetCertificate> left;
        for (const auto& f : tube.enclosure.facets) {
          const auto j = static_cast<Eigen::Index>(f.dim);
          const bool out = f.side == Side::High ? next(j) > e.hi(f.dim) + tol : next(j) < e.lo(f.dim) - tol;
          if (out) {
            left = f;
            if (f.certificate) break;
          }
        }
        if (left && !left->certificate) {
          ++rep.left_invariant;
        } else {
          ++rep.facet_escape;
          note("tube " + std::to_string(k) + ": left E through a certified facet at " + fmt_point(next));
        }
        break;
      }
      x = next;
    }
  }
  return rep;
}

}  // namespace prbt
