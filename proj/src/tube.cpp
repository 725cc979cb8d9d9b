#include "prbt/tube.hpp"

#include <cmath>

namespace prbt {

Box AuxiliarySet::slab(double edge) const {
  Box b = facet;
  if (side == Side::Low) {
    b.set_lo(dim, outer);
    b.set_hi(dim, edge);
  } else {
    b.set_hi(dim, outer);
    b.set_lo(dim, edge);
  }
  return b;
}

std::vector<AuxiliarySet> create_aux_sets(const Box& g, const Box& exit_facet, std::size_t exit_dim) {
  if (!exit_facet.contains(g)) throw std::invalid_argument("create_aux_sets: G outside the exit facet");
  std::vector<AuxiliarySet> out;
  for (std::size_t j = 0; j < exit_facet.dim(); ++j) {
    if (j == exit_dim) continue;
    for (Side s : {Side::Low, Side::High}) {
      AuxiliarySet a;
      a.dim = j;
      a.side = s;
      a.facet = exit_facet;
      a.outer = exit_facet.bound(j, s);
      a.inner = g.bound(j, s);
      out.push_back(a);
    }
  }
  return out;
}

RobustBarrierTube compute_rbt(const ContinuousModel& model, const Box& x0, const EnclosureBox& enc,
                              const TubeOptions& options, const CertifyOptions& certify) {
  if (!(options.eps_rel > 0.0 && options.eps_rel < 1.0))
    throw std::invalid_argument("compute_rbt: eps_rel must lie in (0, 1)");
  RobustBarrierTube tube;
  tube.mode = model.mode;
  tube.init = x0;
  tube.enclosure = enc;
  const Box facet = enc.exit_facet();

  auto probe = [&](const AuxiliarySet& a, double edge) {
    return find_robust_barrier(x0, enc.E, model.uncertainty, a.slab(edge), model.dynamics, certify);
  };

  for (AuxiliarySet a : create_aux_sets(enc.G, facet, enc.exit.dim)) {
    SlabCertificate sc;
    if (a.degenerate()) {
      sc.aux = a;
      tube.slabs.push_back(std::move(sc));
      continue;
    }
    const double tol = options.eps_rel * facet.width(a.dim);
    // `good` is the tightest certified edge so far, `bad` the loosest refuted
    // one (initially G's bound, which is never probed unless bisection reaches
    // it within tolerance).
    double good = a.outer, bad = a.inner;
    auto r = probe(a, good);
    ++sc.probes;
    if (!r) {
      throw ReachError(ReachFailure::RbtFail,
                       "loosest slab " + facet_name(a.dim, a.side) + " admits no certificate" +
                           (r.message.empty() ? "" : ": " + r.message));
    }
    sc.certificate = r.certificate;
    while (std::abs(good - bad) >= tol && sc.probes < options.max_probes) {
      const double mid = 0.5 * (good + bad);
      auto m = probe(a, mid);
      ++sc.probes;
      if (m) {
        good = mid;
        sc.certificate = m.certificate;
      } else {
        bad = mid;
      }
    }
    a.inner = good;
    sc.aux = a;
    tube.slabs.push_back(std::move(sc));
  }
  tube.exit_region = exit_region(facet, tube.slabs);
  return tube;
}

Box exit_region(const Box& exit_facet, const std::vector<SlabCertificate>& slabs) {
  Box out = exit_facet;
  for (const auto& s : slabs) out.set_bound(s.aux.dim, s.aux.side, s.aux.inner);
  return out;
}

Box exit_region(const RobustBarrierTube& tube) {
  return exit_region(tube.enclosure.exit_facet(), tube.slabs);
}

}  // namespace prbt
