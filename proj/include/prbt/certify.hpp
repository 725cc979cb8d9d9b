#ifndef PRBT_CERTIFY_HPP
#define PRBT_CERTIFY_HPP

#include <array>
#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prbt/box.hpp"
#include "prbt/lp.hpp"
#include "prbt/poly.hpp"

namespace prbt {

inline constexpr double kResidualTolerance = 1e-6;
inline constexpr double kLambdaTolerance = -1e-9;

/// Coordinate change x = center + radius .* y. Zero-width dimensions get
/// radius 1 so the map stays invertible.
struct AffineFrame {
  Eigen::VectorXd center;
  Eigen::VectorXd radius;

  static AffineFrame of(const Box& b);
  std::size_t dim() const { return static_cast<std::size_t>(center.size()); }

  Eigen::VectorXd to_local(const Eigen::VectorXd& x) const {
    return (x - center).cwiseQuotient(radius);
  }
  Eigen::VectorXd to_global(const Eigen::VectorXd& y) const {
    return center + radius.cwiseProduct(y);
  }
  Box to_local(const Box& b) const;
};

/// The vector field rewritten in the local coordinates of a state frame and an
/// uncertainty frame: f~_i(y, v) = f_i(x(y), u(v)) / radius_i.
std::vector<Polynomial> localize_dynamics(std::span<const Polynomial> dynamics,
                                          const AffineFrame& state, const AffineFrame& uncertainty);

/// How the Lie condition over domain x uncertainty is posed. When every
/// dynamics term has degree <= 1 in each uncertainty variable, L_f B is
/// multi-affine in u and its minimum over the uncertainty box is attained at a
/// vertex, so one identity over the domain per vertex suffices.
enum class LieEncoding { Auto, Joint, Vertices };

struct CertifyOptions {
  std::vector<unsigned> degrees{1, 2, 3, 4};
  LieEncoding lie_encoding = LieEncoding::Auto;
  std::array<double, 3> epsilon{1.0, 1.0, 1.0};
  /// Handelman orders (init, lie, target); unset means (d, deg L_f B, d).
  std::optional<std::array<unsigned, 3>> orders;
  SimplexOptions simplex;
  /// When non-empty every LP is written as `<lp_dump>.<k>.mps`.
  std::string lp_dump;
  std::shared_ptr<std::atomic<std::size_t>> lp_counter = std::make_shared<std::atomic<std::size_t>>(0);
};

/// A robust barrier certificate B with its Handelman witness. B is stored in
/// the local frame of the domain box, B(x) = local(frame.to_local(x)), and all
/// identities are posed in local coordinates.
struct BarrierCertificate {
  AffineFrame frame;              // of `domain`
  AffineFrame uncertainty_frame;  // of `uncertainty`
  Polynomial local;               // over the n local state variables
  unsigned degree = 0;
  std::array<unsigned, 3> orders{};
  std::array<double, 3> epsilon{};
  std::vector<double> coefficients;           // template coefficients, graded lex
  std::array<std::vector<double>, 3> lambdas;  // init, lie, target blocks
  bool lie_at_vertices = false;  // lie multipliers concatenated per uncertainty vertex
  Box init, domain, uncertainty, target;

  std::size_t dim() const { return frame.dim(); }
  double eval(const Eigen::VectorXd& x) const { return local.eval(frame.to_local(x)); }
  /// B in the original coordinates.
  Polynomial global() const;
  /// B expressed in the local coordinates of another frame.
  Polynomial in_frame(const AffineFrame& other) const;
  /// Flips the sign of B and of nothing else (used for mutation tests).
  BarrierCertificate negated() const;
};

enum class CertifyStatus { Found, NotFound, SolverError };

struct CertifyResult {
  CertifyStatus status = CertifyStatus::NotFound;
  std::optional<BarrierCertificate> certificate;
  std::string message;
  std::size_t lps_solved = 0;

  explicit operator bool() const { return status == CertifyStatus::Found; }
};

/// Searches the degree ladder for B with B > 0 on init, L_f B > 0 on
/// domain x uncertainty and B < 0 on target. Returns the first degree whose
/// LP is feasible; SolverError only if no degree succeeded and at least one
/// LP failed numerically.
CertifyResult find_robust_barrier(const Box& init, const Box& domain, const Box& uncertainty,
                                  const Box& target, std::span<const Polynomial> dynamics,
                                  const CertifyOptions& options = {});

/// True if no dynamics term has degree > 1 in any variable past the first n.
bool multi_affine_in_uncertainty(std::span<const Polynomial> dynamics, std::size_t nstate);

/// Rebuilds the three identity blocks from the stored witness and returns the
/// largest coefficient residual (independent of the LP encoding).
double certificate_residual(const BarrierCertificate& cert, std::span<const Polynomial> dynamics);

/// Smallest witness multiplier over all blocks.
double min_lambda(const BarrierCertificate& cert);

struct VerifyReport {
  double min_init = 0.0;
  double min_lie = 0.0;
  double max_target = 0.0;
  double residual = 0.0;
  double min_lambda = 0.0;
  bool pass = false;
};

/// Samples vertices plus a regular grid of each box and evaluates B, L_f B
/// (from the global polynomial and the original dynamics) and B.
VerifyReport verify_certificate(const BarrierCertificate& cert,
                                std::span<const Polynomial> dynamics, std::size_t grid_per_dim = 5);

struct PositivityWitness {
  AffineFrame frame;
  Polynomial local;  // p in local coordinates of the box, scaled to unit max coefficient
  double scale = 1.0;
  unsigned order = 0;
  double epsilon = 0.0;
  std::vector<double> lambdas;
  double residual = 0.0;
};

inline constexpr double kPositivityEpsilon = 1e-6;

/// Proves p > 0 on the box by a Handelman identity over the box halfspaces.
std::optional<PositivityWitness> positivity_certificate(const Polynomial& p, const Box& box,
                                                        unsigned order,
                                                        const SimplexOptions& simplex = {});

/// Proves B < 0 on the box (positivity of -B), composing frames without
/// passing through the original coordinates.
std::optional<PositivityWitness> negativity_certificate(const BarrierCertificate& cert,
                                                        const Box& box, unsigned order,
                                                        const SimplexOptions& simplex = {});

/// Regular grid of `per_dim` points per dimension plus all vertices.
std::vector<Eigen::VectorXd> sample_box(const Box& b, std::size_t per_dim);

}  // namespace prbt

#endif  // PRBT_CERTIFY_HPP
