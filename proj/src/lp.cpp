#include "prbt/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace prbt {

namespace {

using Eigen::Index;

struct ColumnMap {
  // For each LP variable: tableau column of its positive part, and of its
  // negative part (or -1 for nonnegative variables).
  std::vector<Index> plus, minus;
  Index count = 0;
};

ColumnMap map_columns(const LinearProgram& lp) {
  ColumnMap cm;
  cm.plus.resize(lp.num_vars());
  cm.minus.assign(lp.num_vars(), -1);
  for (std::size_t j = 0; j < lp.num_vars(); ++j) cm.plus[j] = cm.count++;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    if (lp.kinds[j] == VarKind::Free) cm.minus[j] = cm.count++;
  }
  return cm;
}

}  // namespace

LpSolution solve_feasible(const LinearProgram& lp, const SimplexOptions& opt) {
  LpSolution sol;
  const ColumnMap cm = map_columns(lp);
  const Index ncols = cm.count;

  // Scaled dense system A z = b with b >= 0.
  std::vector<Eigen::VectorXd> dense_rows;
  std::vector<double> rhs;
  for (const auto& row : lp.rows) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(ncols);
    for (const auto& [var, c] : row.coeffs) {
      if (var >= lp.num_vars()) {
        sol.status = LpStatus::SolverError;
        sol.message = "row references unknown variable";
        return sol;
      }
      a(cm.plus[var]) += c;
      if (cm.minus[var] >= 0) a(cm.minus[var]) -= c;
    }
    const double scale = a.cwiseAbs().maxCoeff();
    double b = row.rhs;
    if (!std::isfinite(scale) || !std::isfinite(b)) {
      sol.status = LpStatus::SolverError;
      sol.message = "non-finite coefficient";
      return sol;
    }
    if (scale == 0.0) {
      if (std::abs(b) <= opt.residual_tol) continue;
      sol.status = LpStatus::Infeasible;
      sol.message = "row 0 = " + std::to_string(b);
      sol.phase1_objective = std::abs(b);
      return sol;
    }
    a /= scale;
    b /= scale;
    if (b < 0) {
      a = -a;
      b = -b;
    }
    dense_rows.push_back(std::move(a));
    rhs.push_back(b);
  }
  const Index m = static_cast<Index>(dense_rows.size());
  Eigen::MatrixXd A(m, ncols);
  Eigen::VectorXd b(m);
  for (Index i = 0; i < m; ++i) {
    A.row(i) = dense_rows[static_cast<std::size_t>(i)].transpose();
    b(i) = rhs[static_cast<std::size_t>(i)];
  }

  // Tableau rows 0..m-1 are constraints, row m holds reduced costs of the
  // phase-1 objective (sum of artificials); last column is the rhs.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, ncols + 1);
  // Basis entries >= ncols denote the artificial of that row.
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = ncols + i;

  auto basis_matrix = [&]() {
    Eigen::MatrixXd Bm(m, m);
    for (Index i = 0; i < m; ++i) {
      const Index k = basis[static_cast<std::size_t>(i)];
      if (k < ncols) {
        Bm.col(i) = A.col(k);
      } else {
        Bm.col(i) = Eigen::VectorXd::Unit(m, k - ncols);
      }
    }
    return Bm;
  };
  // Rebuilds the tableau from the original columns to shed rank-1 drift.
  auto refactor = [&]() -> bool {
    if (m == 0) {
      T.setZero();
      return true;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix());
    T.topLeftCorner(m, ncols) = lu.solve(A);
    T.topRightCorner(m, 1) = lu.solve(b).cwiseMax(0.0);
    if (!T.topRows(m).allFinite()) return false;
    T.row(m).setZero();
    for (Index i = 0; i < m; ++i) {
      if (basis[static_cast<std::size_t>(i)] >= ncols) T.row(m) -= T.row(i);
    }
    for (Index i = 0; i < m; ++i) {
      const Index k = basis[static_cast<std::size_t>(i)];
      if (k < ncols) T(m, k) = 0.0;
    }
    return true;
  };
  refactor();

  constexpr std::size_t kRefactorInterval = 64;
  constexpr double kPrimalSlack = 1e-9;
  std::size_t degenerate_run = 0;
  Eigen::VectorXd pivot_col(m + 1);
  Eigen::RowVectorXd pivot_row(ncols + 1);
  std::vector<char> rejected(static_cast<std::size_t>(ncols), 0);
  bool optimal = false;
  while (sol.pivots < opt.max_pivots) {
    const bool use_bland =
        opt.rule == PivotRule::Bland || degenerate_run >= opt.degenerate_switch;
    Index enter = -1;
    double best = -opt.cost_tol;
    for (Index j = 0; j < ncols; ++j) {
      const double d = T(m, j);
      if (d < best && !rejected[static_cast<std::size_t>(j)]) {
        enter = j;
        if (use_bland) break;
        best = d;
      }
    }
    if (enter < 0) {
      optimal = true;
      break;
    }
    // Harris two-pass ratio test: bound the step with a small primal slack,
    // then take the largest pivot among rows within that bound.
    double bound = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      const double a = T(i, enter);
      if (a > opt.pivot_tol) bound = std::min(bound, (T(i, ncols) + kPrimalSlack) / a);
    }
    Index leave = -1;
    double largest = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double a = T(i, enter);
      if (a <= opt.pivot_tol || T(i, ncols) / a > bound) continue;
      const bool better =
          leave < 0 || a > largest * (1.0 + 1e-12) ||
          (a >= largest * (1.0 - 1e-12) &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]);
      if (better) {
        leave = i;
        largest = a;
      }
    }
    if (leave < 0) {
      // A descent column without a usable pivot is numerical noise: the
      // phase-1 objective is bounded below by zero.
      rejected[static_cast<std::size_t>(enter)] = 1;
      continue;
    }
    const double step = std::max(0.0, T(leave, ncols)) / T(leave, enter);
    degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;

    const double p = T(leave, enter);
    pivot_row = T.row(leave) / p;
    pivot_col = T.col(enter);
    pivot_col(leave) = 0.0;
    T.noalias() -= pivot_col * pivot_row;
    T.row(leave) = pivot_row;
    T.col(ncols).head(m) = T.col(ncols).head(m).cwiseMax(0.0);
    basis[static_cast<std::size_t>(leave)] = enter;
    std::fill(rejected.begin(), rejected.end(), 0);
    ++sol.pivots;
    if (sol.pivots % kRefactorInterval == 0 && !refactor()) {
      sol.status = LpStatus::SolverError;
      sol.message = "singular basis during refactorization";
      return sol;
    }
  }
  if (!optimal) {
    sol.status = LpStatus::SolverError;
    sol.message = "pivot limit reached";
    return sol;
  }

  // Re-solve the final basis against the original scaled columns.
  Eigen::VectorXd xb = m > 0 ? Eigen::VectorXd(Eigen::FullPivLU<Eigen::MatrixXd>(basis_matrix()).solve(b))
                             : Eigen::VectorXd();
  if (!xb.allFinite()) {
    sol.status = LpStatus::SolverError;
    sol.message = "singular final basis";
    return sol;
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(ncols);
  double artificial_sum = 0.0;
  for (Index i = 0; i < m; ++i) {
    const Index k = basis[static_cast<std::size_t>(i)];
    if (k < ncols) {
      z(k) = xb(i);
    } else {
      artificial_sum += std::abs(xb(i));
    }
  }
  sol.phase1_objective = std::max(-T(m, ncols), artificial_sum);
  sol.max_residual = m > 0 ? (A * z - b).cwiseAbs().maxCoeff() : 0.0;

  sol.x.resize(static_cast<Index>(lp.num_vars()));
  double min_nonneg = 0.0;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    double v = z(cm.plus[j]);
    if (cm.minus[j] >= 0) {
      v -= z(cm.minus[j]);
    } else {
      min_nonneg = std::min(min_nonneg, v);
    }
    sol.x(static_cast<Index>(j)) = v;
  }
  for (Index k = 0; k < ncols; ++k) min_nonneg = std::min(min_nonneg, z(k));

  if (sol.max_residual <= opt.residual_tol && min_nonneg >= opt.min_nonneg) {
    sol.status = LpStatus::Feasible;
  } else if (sol.phase1_objective > opt.infeasible_tol) {
    sol.status = LpStatus::Infeasible;
  } else {
    sol.status = LpStatus::SolverError;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "ambiguous phase-1 result: objective %.3g, residual %.3g, min %.3g",
                  sol.phase1_objective, sol.max_residual, min_nonneg);
    sol.message = buf;
  }
  return sol;
}

void write_mps(const LinearProgram& lp, std::ostream& out, const std::string& name) {
  char buf[128];
  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << " N  FEAS\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i) out << " E  R" << i << "\n";
  out << "COLUMNS\n";
  std::vector<std::vector<std::pair<std::size_t, double>>> by_col(lp.num_vars());
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    for (const auto& [var, c] : lp.rows[i].coeffs) by_col[var].emplace_back(i, c);
  }
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    const std::string col = "C" + std::to_string(j);
    if (by_col[j].empty()) {
      std::snprintf(buf, sizeof buf, "    %-8s  %-8s  %12.6g\n", col.c_str(), "FEAS", 0.0);
      out << buf;
    }
    for (const auto& [row, c] : by_col[j]) {
      const std::string r = "R" + std::to_string(row);
      std::snprintf(buf, sizeof buf, "    %-8s  %-8s  %12.6g\n", col.c_str(), r.c_str(), c);
      out << buf;
    }
  }
  out << "RHS\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    if (lp.rows[i].rhs == 0.0) continue;
    const std::string r = "R" + std::to_string(i);
    std::snprintf(buf, sizeof buf, "    %-8s  %-8s  %12.6g\n", "RHS", r.c_str(), lp.rows[i].rhs);
    out << buf;
  }
  out << "BOUNDS\n";
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    if (lp.kinds[j] != VarKind::Free) continue;
    const std::string col = "C" + std::to_string(j);
    std::snprintf(buf, sizeof buf, " FR %-8s  %-8s\n", "BND", col.c_str());
    out << buf;
  }
  out << "ENDATA\n";
}

// --------------------------------------------------------------- encoding

void ParametricPolynomial::add(const Monomial& m, std::size_t var, double coefficient) {
  if (m.size() != nvars) throw DimensionError("ParametricPolynomial::add: arity mismatch");
  if (coefficient == 0.0) return;
  auto& form = terms[m];
  form[var] += coefficient;
  if (form[var] == 0.0) form.erase(var);
  if (form.empty()) terms.erase(m);
}

void ParametricPolynomial::add_scaled(const Polynomial& p, std::size_t var, double coefficient) {
  for (const auto& [m, c] : p.terms()) add(m, var, c * coefficient);
}

Polynomial ParametricPolynomial::instantiate(const Eigen::VectorXd& assignment) const {
  Polynomial p(nvars);
  for (const auto& [m, form] : terms) {
    double v = 0.0;
    for (const auto& [var, c] : form) v += c * assignment(static_cast<Index>(var));
    p.add_term(m, v);
  }
  return p;
}

std::vector<EqualityRow> encode_identity(const IdentityBlock& block) {
  if (block.products.size() != block.lambda_ids.size()) {
    throw DimensionError("encode_identity: one lambda id per product required");
  }
  std::map<Monomial, EqualityRow> rows;
  for (const auto& [m, form] : block.lhs.terms) {
    auto& row = rows[m];
    for (const auto& [var, c] : form) row.coeffs.emplace_back(var, c);
  }
  for (std::size_t k = 0; k < block.products.size(); ++k) {
    if (block.products[k].nvars() != block.lhs.nvars) {
      throw DimensionError("encode_identity: product arity differs from lhs");
    }
    for (const auto& [m, c] : block.products[k].terms()) {
      rows[m].coeffs.emplace_back(block.lambda_ids[k], -c);
    }
  }
  const Monomial one(block.lhs.nvars);
  rows[one].rhs = block.epsilon;
  std::vector<EqualityRow> out;
  out.reserve(rows.size());
  for (auto& [m, row] : rows) out.push_back(std::move(row));
  return out;
}

double residual_check(const Eigen::VectorXd& assignment, std::span<const IdentityBlock> blocks) {
  double worst = 0.0;
  for (const auto& block : blocks) {
    Polynomial diff = block.lhs.instantiate(assignment);
    for (std::size_t k = 0; k < block.products.size(); ++k) {
      diff -= block.products[k] * assignment(static_cast<Index>(block.lambda_ids[k]));
    }
    diff.add_term(Monomial(diff.nvars()), -block.epsilon);
    worst = std::max(worst, diff.max_abs_coefficient());
  }
  return worst;
}

}  // namespace prbt
