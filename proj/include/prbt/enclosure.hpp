#ifndef PRBT_ENCLOSURE_HPP
#define PRBT_ENCLOSURE_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prbt/box.hpp"
#include "prbt/certify.hpp"
#include "prbt/model.hpp"
#include "prbt/simulate.hpp"

namespace prbt {

enum class ReachFailure { NoExitPlane, FacetFail, RbtFail, HybridFail, Unsupported };

const char* to_string(ReachFailure f);

/// A recoverable failure of one pipeline stage.
class ReachError : public std::runtime_error {
 public:
  ReachError(ReachFailure kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ReachFailure kind() const { return kind_; }

 private:
  ReachFailure kind_;
};

struct ExitFacet {
  std::size_t dim = 0;
  Side side = Side::High;
  double value = 0.0;
};

/// Certificate that the flow from the tube's initial set never reaches one
/// non-exit facet of E. An empty certificate marks a facet lying on the mode
/// invariant boundary that could not be certified; trajectories leave the
/// mode there and are outside the model's semantics.
struct FacetCertificate {
  std::size_t dim = 0;
  Side side = Side::Low;
  std::optional<BarrierCertificate> certificate;
};

struct EnclosureBox {
  Box E;
  ExitFacet exit;
  Box G;  // on the exit plane, inside the exit facet
  std::vector<FacetCertificate> facets;  // 2n - 1 non-exit facets, once certified
  StopReason center_stop = StopReason::Dist;
  std::size_t bloat_rounds = 0;

  Box exit_facet() const { return E.facet(exit.dim, exit.side); }
};

struct EnclosureOptions {
  double theta = 0.3;
  double dist = 1.0;
  ThetaDOptions simulation;
  double facet_bloat = 0.1;  // of the trace extent per dimension
  double crossing_bloat = 0.05;
  double retry_bloat = 0.1;  // of the E width per failed facet
  std::size_t max_bloat_rounds = 3;
};

/// Vertices, center and facet centers of X0 without duplicates; above 12
/// dimensions the vertices are replaced by 4096 pseudo-random corners.
std::vector<Eigen::VectorXd> sample_initial(const Box& x0);

/// Simulation stage: center (theta, d)-simulation, candidate exit planes,
/// sample trajectories, bloated bounding box. Throws ReachError(NoExitPlane)
/// when no candidate plane is crossed by every sample inside the invariant.
EnclosureBox construct_enclosure(const ContinuousModel& model, const Box& x0,
                                 const EnclosureOptions& options);

/// Certifies every non-exit facet of enc.E, bloating failed facets outward
/// and re-certifying. Throws ReachError(FacetFail) naming the facet.
EnclosureBox certify_facets(const ContinuousModel& model, const Box& x0, EnclosureBox enc,
                            const EnclosureOptions& options, const CertifyOptions& certify);

std::string facet_name(std::size_t dim, Side side);

}  // namespace prbt

#endif  // PRBT_ENCLOSURE_HPP
