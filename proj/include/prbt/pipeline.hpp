#ifndef PRBT_PIPELINE_HPP
#define PRBT_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prbt/box.hpp"
#include "prbt/certify.hpp"
#include "prbt/enclosure.hpp"
#include "prbt/model.hpp"
#include "prbt/tube.hpp"

namespace prbt {

enum class Termination { CountReached, ThetaFloor, RbtFail, GuardEvent, HybridFail };

const char* to_string(Termination t);

struct ReachParams {
  std::size_t tubes = 10;
  double theta0 = 0.3;
  std::optional<double> dist0;      // unset: 0.2 x diameter of the mode invariant
  std::optional<double> theta_min;  // unset: theta0 / 16
  double eps_rel = 0.01;
  CertifyOptions certify;
  EnclosureOptions enclosure;  // theta and dist are set per attempt
  std::size_t queue_budget = 64;

  double resolved_dist0(const Box& invariant) const {
    return dist0 ? *dist0 : 0.2 * invariant.diameter();
  }
  double resolved_theta_min() const { return theta_min ? *theta_min : theta0 / 16.0; }
};

/// A discrete transition taken between two tubes of the chain.
struct GuardEventRecord {
  std::size_t transition = 0;  // index into the model's transitions
  std::string from, to;
  std::size_t before_tube = 0;  // index of the first tube in the target mode
  Box crossing;                 // on the guard plane
  Box image;                    // reset applied to `crossing`
  std::size_t queue_pops = 0;
};

struct PiecewiseTube {
  std::string model;
  std::vector<RobustBarrierTube> tubes;
  std::vector<GuardEventRecord> events;
  Termination termination = Termination::CountReached;
  std::string message;
};

/// Result of building one tube with (theta, d) halving.
struct TubeAttempt {
  std::optional<RobustBarrierTube> tube;
  std::optional<EnclosureBox> intercepted;  // set when `intercept` stopped the attempt
  std::optional<ReachFailure> last_failure;
  std::string message;
};

/// Called after each simulated enclosure and before certification; returning
/// true stops the attempt and hands the enclosure back.
using EnclosureIntercept = std::function<bool(const EnclosureBox&)>;

TubeAttempt build_tube(const ContinuousModel& model, const Box& x0, const ReachParams& params,
                       const EnclosureIntercept& intercept = {});

/// Chains up to params.tubes tubes from model.init.
PiecewiseTube compute_prbt(const ContinuousModel& model, const ReachParams& params);

struct SafetyVerdict {
  bool safe = true;
  std::optional<std::size_t> failing_tube;
  std::size_t positivity_proofs = 0;  // pairs settled by a certificate
};

/// SAFE iff every (tube, unsafe box of the same mode) pair is disjoint or
/// some certificate of the tube is provably negative on E intersect unsafe.
SafetyVerdict check_safety(const PiecewiseTube& prbt, const std::vector<UnsafeSet>& unsafe,
                           unsigned order);

struct ViolationReport {
  std::size_t trajectories = 0;
  std::size_t negative_barrier = 0;  // point in E_k with some B_i <= 0
  std::size_t exit_outside = 0;      // exit-plane crossing outside X0'
  std::size_t facet_escape = 0;      // left E_k away from the exit plane, inside the invariant
  std::size_t image_outside = 0;     // post-reset point outside the recorded image
  std::size_t left_invariant = 0;    // stopped outside the mode (not a violation)
  std::size_t completed = 0;         // passed through every tube
  std::size_t guard_crossings = 0;
  std::vector<std::string> details;  // first few violations

  std::size_t violations() const {
    return negative_barrier + exit_outside + facet_escape + image_outside;
  }
};

/// Integrates K trajectories from uniform points of the first tube's X0 with
/// piecewise-constant uncertainty resampled every dist0 / 50 time units and
/// walks them through the tube chain.
ViolationReport monte_carlo_validate(const HybridModel& model, const PiecewiseTube& prbt,
                                     std::size_t K, std::uint64_t seed, double dist0);

/// A single-mode hybrid view of a continuous model.
HybridModel as_hybrid(const ContinuousModel& model);

/// All certificates of one tube: facets first, then slabs.
std::vector<const BarrierCertificate*> tube_certificates(const RobustBarrierTube& tube);

}  // namespace prbt

#endif  // PRBT_PIPELINE_HPP
