#ifndef PRBT_HYBRID_HPP
#define PRBT_HYBRID_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prbt/box.hpp"
#include "prbt/model.hpp"
#include "prbt/pipeline.hpp"
#include "prbt/tube.hpp"

namespace prbt {

/// Bounding box of {A v + offset : v vertex of b}; exact for affine maps.
Box box_linear_image(const Eigen::MatrixXd& a, const Eigen::VectorXd& offset, const Box& b);

/// True if the closed guard halfspace meets the box.
bool guard_meets(const Guard& g, const Box& b);

/// First transition among `candidates` whose guard meets E. Two different
/// guards meeting E raise ReachError(Unsupported).
std::optional<std::size_t> detect_guard(const Box& e, const HybridModel& model,
                                        std::span<const std::size_t> candidates);
std::optional<std::size_t> detect_guard(const Box& e, const HybridModel& model,
                                        std::string_view mode);

/// The continuous system of one mode started from x0, with the invariant cut
/// by the closure of every outgoing guard's complement (urgent semantics).
ContinuousModel mode_view(const HybridModel& model, std::string_view mode, const Box& x0);

/// True if the flow at every vertex of x0 (and every uncertainty vertex)
/// points strictly away from the guard.
bool moves_away_from_guard(const HybridModel& model, const Transition& t, const Box& x0);

struct TransitionResult {
  std::vector<RobustBarrierTube> tubes;  // chain ending with the guard-side tube
  std::optional<Box> crossing;           // on the guard plane
  std::optional<Box> image;
  bool handed_back = false;  // the flow turned away; continue in the source mode
  std::size_t queue_pops = 0;
};

/// Drives the flowpipe from x0 onto the guard of `transition`: boxes whose
/// samples all reach the guard get a tube exiting through the guard plane;
/// boxes none of whose samples reach it advance by an ordinary tube and are
/// queued again. Throws ReachError(HybridFail) on a split flowpipe, an
/// exhausted queue budget or a failed tube.
TransitionResult handle_transition(const HybridModel& model, const Box& x0,
                                   std::size_t transition, const ReachParams& params);

/// Piecewise tube over modes: ordinary tubes in a mode, guard handling when an
/// enclosure meets an outgoing guard, then continuation from the reset image.
PiecewiseTube compute_hybrid_prbt(const HybridModel& model, const ReachParams& params);

}  // namespace prbt

#endif  // PRBT_HYBRID_HPP
