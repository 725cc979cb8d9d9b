#ifndef PRBT_LP_HPP
#define PRBT_LP_HPP

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "prbt/poly.hpp"

namespace prbt {

enum class VarKind { Free, NonNegative };

struct EqualityRow {
  std::vector<std::pair<std::size_t, double>> coeffs;  // (variable, coefficient)
  double rhs = 0.0;
};

/// Pure feasibility problem: find z with rows(z) = rhs and z_j >= 0 for every
/// NonNegative variable. There is no objective.
struct LinearProgram {
  std::vector<VarKind> kinds;
  std::vector<EqualityRow> rows;

  std::size_t num_vars() const { return kinds.size(); }
  std::size_t num_rows() const { return rows.size(); }
  std::size_t add_variable(VarKind kind) {
    kinds.push_back(kind);
    return kinds.size() - 1;
  }
};

enum class LpStatus { Feasible, Infeasible, SolverError };

struct LpSolution {
  LpStatus status = LpStatus::SolverError;
  Eigen::VectorXd x;          // one value per LinearProgram variable
  double max_residual = 0.0;  // over unit-max-norm scaled rows
  double phase1_objective = 0.0;
  std::size_t pivots = 0;
  std::string message;
};

enum class PivotRule {
  Bland,    // smallest eligible index
  Dantzig,  // most negative reduced cost; Bland after a run of degenerate pivots
};

struct SimplexOptions {
  PivotRule rule = PivotRule::Dantzig;
  std::size_t max_pivots = 50000;
  std::size_t degenerate_switch = 50;  // Dantzig -> Bland after this many stalls
  double pivot_tol = 1e-9;
  double cost_tol = 1e-10;
  double residual_tol = 1e-7;
  double infeasible_tol = 1e-6;
  double min_nonneg = -1e-9;
};

/// Phase-1 simplex on the row-scaled system. Free variables are split into
/// positive and negative parts. The final basis is re-solved with an LU
/// factorization of the original (scaled) columns before residuals are
/// measured.
LpSolution solve_feasible(const LinearProgram& lp, const SimplexOptions& options = {});

/// Fixed-column MPS dump; nonnegative variables use the default bounds and
/// free variables are marked FR.
void write_mps(const LinearProgram& lp, std::ostream& out, const std::string& name = "PRBT");

// ------------------------------------------------------ identity encoding

/// A polynomial whose coefficients are linear forms in LP variables.
struct ParametricPolynomial {
  std::size_t nvars = 0;
  std::map<Monomial, std::map<std::size_t, double>> terms;

  void add(const Monomial& m, std::size_t var, double coefficient);
  /// Adds coefficient * var * p.
  void add_scaled(const Polynomial& p, std::size_t var, double coefficient = 1.0);
  Polynomial instantiate(const Eigen::VectorXd& assignment) const;
};

/// lhs == sum_k lambda_k * products_k + epsilon as polynomial identity,
/// lambda_k >= 0, epsilon > 0.
struct IdentityBlock {
  ParametricPolynomial lhs;
  std::vector<Polynomial> products;
  std::vector<std::size_t> lambda_ids;
  double epsilon = 1.0;
};

/// One row per monomial occurring on either side:
/// lhs_coeff(c) - sum_k lambda_k coeff(products_k) = epsilon * [monomial == 1].
std::vector<EqualityRow> encode_identity(const IdentityBlock& block);

/// max |coefficient| of lhs - sum lambda*products - epsilon over all blocks,
/// computed by polynomial arithmetic (independent of encode_identity).
double residual_check(const Eigen::VectorXd& assignment, std::span<const IdentityBlock> blocks);

}  // namespace prbt

#endif  // PRBT_LP_HPP
