#ifndef PRBT_TUBE_HPP
#define PRBT_TUBE_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "prbt/box.hpp"
#include "prbt/certify.hpp"
#include "prbt/enclosure.hpp"
#include "prbt/model.hpp"

namespace prbt {

/// Region of the exit facet beyond G on one side of one non-exit dimension.
/// The slab spans [facet bound, inner edge] in `dim` and the full facet in the
/// other dimensions.
struct AuxiliarySet {
  std::size_t dim = 0;
  Side side = Side::Low;
  Box facet;
  double outer = 0.0;  // facet boundary in `dim`
  double inner = 0.0;  // adjustable edge, starts at G's bound

  bool degenerate() const { return outer == inner; }
  /// The slab with its inner edge at `edge`.
  Box slab(double edge) const;
  Box slab() const { return slab(inner); }
};

/// Tube certificate for one auxiliary set; empty for degenerate slabs.
struct SlabCertificate {
  AuxiliarySet aux;
  std::optional<BarrierCertificate> certificate;
  std::size_t probes = 0;
};

struct RobustBarrierTube {
  std::string mode;
  Box init;
  EnclosureBox enclosure;
  std::vector<SlabCertificate> slabs;  // 2(n - 1)
  Box exit_region;
};

struct TubeOptions {
  double eps_rel = 0.01;
  std::size_t max_probes = 20;
};

/// 2(n - 1) slabs, Low then High for every non-exit dimension in order.
std::vector<AuxiliarySet> create_aux_sets(const Box& g, const Box& exit_facet, std::size_t exit_dim);

/// Bisects each slab's inner edge between the facet boundary and G. The
/// loosest position is probed first; if it admits no certificate the tube
/// fails with ReachError(RbtFail).
RobustBarrierTube compute_rbt(const ContinuousModel& model, const Box& x0, const EnclosureBox& enc,
                              const TubeOptions& options, const CertifyOptions& certify);

/// The exit facet with every non-exit dimension narrowed to the final inner
/// edges.
Box exit_region(const RobustBarrierTube& tube);
Box exit_region(const Box& exit_facet, const std::vector<SlabCertificate>& slabs);

}  // namespace prbt

#endif  // PRBT_TUBE_HPP
