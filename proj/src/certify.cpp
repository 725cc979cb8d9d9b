#include "prbt/certify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

namespace prbt {

namespace {

using Eigen::Index;

// Handelman products depend only on the (local) generator box and the order;
// the Lie block over [-1,1]^(n+l) recurs in every query.
class ProductCache {
 public:
  std::shared_ptr<const std::vector<Polynomial>> get(const Box& box, unsigned order) {
    std::vector<double> key(box.lo().data(), box.lo().data() + box.lo().size());
    key.insert(key.end(), box.hi().data(), box.hi().data() + box.hi().size());
    key.push_back(order);
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto products = std::make_shared<const std::vector<Polynomial>>(
        handelman_products(box_to_halfspaces(box), order));
    if (cache_.size() > 64) cache_.clear();
    cache_.emplace(std::move(key), products);
    return products;
  }

 private:
  std::mutex mutex_;
  std::map<std::vector<double>, std::shared_ptr<const std::vector<Polynomial>>> cache_;
};

ProductCache& product_cache() {
  static ProductCache cache;
  return cache;
}

struct LocalProblem {
  std::size_t n = 0;
  std::size_t l = 0;
  // One field over n + l variables (joint encoding), or one field over the n
  // state variables per uncertainty vertex.
  std::vector<std::vector<Polynomial>> fields;
  Box init, target, lie_box;
};

// Substitutes fixed values for the trailing variables.
Polynomial fix_tail(const Polynomial& p, std::size_t n, const Eigen::VectorXd& tail) {
  const auto total = static_cast<Index>(p.nvars());
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(total), scale = Eigen::VectorXd::Ones(total);
  offset.tail(tail.size()) = tail;
  scale.tail(tail.size()).setZero();
  return compose_affine(p, offset, scale).restricted(n);
}

LocalProblem localize(const Box& init, const Box& domain, const Box& uncertainty,
                      const Box& target, std::span<const Polynomial> dynamics,
                      const AffineFrame& frame, const AffineFrame& uframe, bool at_vertices) {
  LocalProblem lp;
  lp.n = domain.dim();
  lp.l = uncertainty.dim();
  const auto field = localize_dynamics(dynamics, frame, uframe);
  lp.init = frame.to_local(init);
  lp.target = frame.to_local(target);
  if (!at_vertices) {
    lp.fields.push_back(field);
    lp.lie_box = cartesian(frame.to_local(domain), uframe.to_local(uncertainty));
    return lp;
  }
  lp.lie_box = frame.to_local(domain);
  for (const auto& v : vertices(uframe.to_local(uncertainty))) {
    std::vector<Polynomial> fv;
    for (const auto& fi : field) fv.push_back(fix_tail(fi, lp.n, v));
    lp.fields.push_back(std::move(fv));
  }
  return lp;
}

bool use_vertices(LieEncoding enc, std::span<const Polynomial> dynamics, std::size_t n,
                  std::size_t l) {
  if (l == 0 || enc == LieEncoding::Joint) return false;
  const bool affine = multi_affine_in_uncertainty(dynamics, n);
  if (enc == LieEncoding::Vertices && !affine) {
    throw std::invalid_argument("vertex Lie encoding needs dynamics multi-affine in uncertainty");
  }
  return affine;
}

std::array<unsigned, 3> default_orders(unsigned degree, const LocalProblem& prob) {
  unsigned fd = 0;
  for (const auto& field : prob.fields) {
    for (const auto& f : field) fd = std::max(fd, f.degree());
  }
  const unsigned lie = degree + fd >= 1 ? degree + fd - 1 : 0;
  return {degree, lie, degree};
}

struct Assembled {
  LinearProgram lp;
  std::vector<IdentityBlock> blocks;
  std::size_t num_coefficients = 0;
};

Assembled assemble(const LocalProblem& prob, unsigned degree, const std::array<unsigned, 3>& orders,
                   const std::array<double, 3>& eps) {
  Assembled out;
  const TemplatePolynomial tmpl = make_template(prob.n, degree);
  out.num_coefficients = tmpl.size();
  std::vector<std::size_t> c(tmpl.size());
  for (auto& id : c) id = out.lp.add_variable(VarKind::Free);

  const std::size_t lie_vars = prob.lie_box.dim();
  ParametricPolynomial pos{prob.n, {}}, neg{prob.n, {}};
  std::vector<ParametricPolynomial> lies(prob.fields.size(), ParametricPolynomial{lie_vars, {}});
  for (std::size_t k = 0; k < tmpl.size(); ++k) {
    const Polynomial m = Polynomial::monomial(tmpl.monomials[k]);
    pos.add_scaled(m, c[k]);
    neg.add_scaled(m, c[k], -1.0);
    for (std::size_t v = 0; v < prob.fields.size(); ++v) {
      lies[v].add_scaled(lie_derivative(m, prob.fields[v]), c[k]);
    }
  }
  // Block order: init, one lie block per field, target.
  std::vector<ParametricPolynomial*> lhs{&pos};
  std::vector<const Box*> boxes{&prob.init};
  std::vector<std::size_t> kind{0};
  for (auto& l : lies) {
    lhs.push_back(&l);
    boxes.push_back(&prob.lie_box);
    kind.push_back(1);
  }
  lhs.push_back(&neg);
  boxes.push_back(&prob.target);
  kind.push_back(2);
  for (std::size_t b = 0; b < lhs.size(); ++b) {
    IdentityBlock blk;
    blk.lhs = std::move(*lhs[b]);
    blk.products = *product_cache().get(*boxes[b], orders[kind[b]]);
    blk.epsilon = eps[kind[b]];
    blk.lambda_ids.reserve(blk.products.size());
    for (std::size_t k = 0; k < blk.products.size(); ++k) {
      blk.lambda_ids.push_back(out.lp.add_variable(VarKind::NonNegative));
    }
    auto rows = encode_identity(blk);
    out.lp.rows.insert(out.lp.rows.end(), std::make_move_iterator(rows.begin()),
                       std::make_move_iterator(rows.end()));
    out.blocks.push_back(std::move(blk));
  }
  return out;
}

Eigen::VectorXd witness_vector(const BarrierCertificate& cert) {
  std::size_t total = cert.coefficients.size();
  for (const auto& l : cert.lambdas) total += l.size();
  Eigen::VectorXd z(static_cast<Index>(total));
  Index k = 0;
  for (double v : cert.coefficients) z(k++) = v;
  for (const auto& l : cert.lambdas) {
    for (double v : l) z(k++) = v;
  }
  return z;
}

void dump_lp(const CertifyOptions& options, const LinearProgram& lp) {
  if (options.lp_dump.empty()) return;
  const std::size_t k = options.lp_counter->fetch_add(1);
  std::ofstream out(options.lp_dump + "." + std::to_string(k) + ".mps");
  write_mps(lp, out, "PRBT" + std::to_string(k));
}

}  // namespace

AffineFrame AffineFrame::of(const Box& b) {
  AffineFrame f;
  f.center = b.center();
  f.radius = 0.5 * b.width();
  for (Index i = 0; i < f.radius.size(); ++i) {
    if (!(f.radius(i) > 0.0)) f.radius(i) = 1.0;
  }
  return f;
}

Box AffineFrame::to_local(const Box& b) const {
  if (b.dim() != dim()) throw DimensionError("AffineFrame::to_local: dimension mismatch");
  return Box(to_local(b.lo()), to_local(b.hi()));
}

std::vector<Polynomial> localize_dynamics(std::span<const Polynomial> dynamics,
                                          const AffineFrame& state, const AffineFrame& uncertainty) {
  const std::size_t n = state.dim();
  const std::size_t l = uncertainty.dim();
  if (dynamics.size() != n) throw DimensionError("localize_dynamics: one component per state");
  Eigen::VectorXd offset(static_cast<Index>(n + l)), scale(static_cast<Index>(n + l));
  offset << state.center, uncertainty.center;
  scale << state.radius, uncertainty.radius;
  std::vector<Polynomial> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (dynamics[i].nvars() != n + l) {
      throw DimensionError("localize_dynamics: dynamics must range over states and uncertainties");
    }
    out.push_back(compose_affine(dynamics[i], offset, scale) *
                  (1.0 / state.radius(static_cast<Index>(i))));
  }
  return out;
}

Polynomial BarrierCertificate::global() const {
  const Eigen::VectorXd inv = frame.radius.cwiseInverse();
  return compose_affine(local, -frame.center.cwiseProduct(inv), inv);
}

Polynomial BarrierCertificate::in_frame(const AffineFrame& other) const {
  const Eigen::VectorXd inv = frame.radius.cwiseInverse();
  return compose_affine(local, (other.center - frame.center).cwiseProduct(inv),
                        other.radius.cwiseProduct(inv));
}

BarrierCertificate BarrierCertificate::negated() const {
  BarrierCertificate c = *this;
  c.local = -c.local;
  for (double& v : c.coefficients) v = -v;
  return c;
}

CertifyResult find_robust_barrier(const Box& init, const Box& domain, const Box& uncertainty,
                                  const Box& target, std::span<const Polynomial> dynamics,
                                  const CertifyOptions& options) {
  if (init.dim() != domain.dim() || target.dim() != domain.dim()) {
    throw DimensionError("find_robust_barrier: box dimensions differ");
  }
  if (options.degrees.empty()) throw std::invalid_argument("find_robust_barrier: empty degree ladder");
  for (double e : options.epsilon) {
    if (!(e > 0.0)) throw std::invalid_argument("find_robust_barrier: epsilon must be positive");
  }
  const AffineFrame frame = AffineFrame::of(domain);
  const AffineFrame uframe = AffineFrame::of(uncertainty);
  const bool at_vertices =
      use_vertices(options.lie_encoding, dynamics, domain.dim(), uncertainty.dim());
  const LocalProblem prob =
      localize(init, domain, uncertainty, target, dynamics, frame, uframe, at_vertices);

  CertifyResult result;
  std::string solver_messages;
  for (unsigned degree : options.degrees) {
    const auto orders = options.orders.value_or(default_orders(degree, prob));
    Assembled sys = assemble(prob, degree, orders, options.epsilon);
    dump_lp(options, sys.lp);
    const LpSolution sol = solve_feasible(sys.lp, options.simplex);
    ++result.lps_solved;
    if (sol.status == LpStatus::Infeasible) continue;
    if (sol.status == LpStatus::SolverError) {
      solver_messages += "degree " + std::to_string(degree) + ": " + sol.message + "; ";
      continue;
    }
    const double residual = residual_check(sol.x, sys.blocks);
    double lambda_min = 0.0;
    for (const auto& blk : sys.blocks) {
      for (auto id : blk.lambda_ids) lambda_min = std::min(lambda_min, sol.x(static_cast<Index>(id)));
    }
    if (residual > kResidualTolerance || lambda_min < kLambdaTolerance) {
      solver_messages += "degree " + std::to_string(degree) + ": witness residual " +
                         std::to_string(residual) + "; ";
      continue;
    }
    BarrierCertificate cert;
    cert.frame = frame;
    cert.uncertainty_frame = uframe;
    cert.degree = degree;
    cert.orders = orders;
    cert.epsilon = options.epsilon;
    cert.coefficients.assign(sol.x.data(), sol.x.data() + sys.num_coefficients);
    cert.lie_at_vertices = at_vertices;
    for (std::size_t b = 0; b < sys.blocks.size(); ++b) {
      const std::size_t kind = b == 0 ? 0 : b + 1 == sys.blocks.size() ? 2 : 1;
      for (auto id : sys.blocks[b].lambda_ids) {
        cert.lambdas[kind].push_back(sol.x(static_cast<Index>(id)));
      }
    }
    cert.local = make_template(prob.n, degree).instantiate(cert.coefficients);
    cert.init = init;
    cert.domain = domain;
    cert.uncertainty = uncertainty;
    cert.target = target;
    result.status = CertifyStatus::Found;
    result.certificate = std::move(cert);
    return result;
  }
  if (!solver_messages.empty()) {
    result.status = CertifyStatus::SolverError;
    result.message = solver_messages;
  }
  return result;
}

double certificate_residual(const BarrierCertificate& cert, std::span<const Polynomial> dynamics) {
  if (cert.lie_at_vertices && !multi_affine_in_uncertainty(dynamics, cert.dim())) {
    return std::numeric_limits<double>::infinity();
  }
  const LocalProblem prob = localize(cert.init, cert.domain, cert.uncertainty, cert.target,
                                     dynamics, cert.frame, cert.uncertainty_frame,
                                     cert.lie_at_vertices);
  const Assembled sys = assemble(prob, cert.degree, cert.orders, cert.epsilon);
  const Eigen::VectorXd z = witness_vector(cert);
  if (static_cast<std::size_t>(z.size()) != sys.lp.num_vars()) {
    return std::numeric_limits<double>::infinity();
  }
  // The stored polynomial must match the stored coefficients.
  const Polynomial b = make_template(prob.n, cert.degree).instantiate(cert.coefficients);
  const double mismatch = (b - cert.local).max_abs_coefficient();
  return std::max(mismatch, residual_check(z, sys.blocks));
}

bool multi_affine_in_uncertainty(std::span<const Polynomial> dynamics, std::size_t nstate) {
  for (const auto& f : dynamics) {
    for (const auto& [m, c] : f.terms()) {
      for (std::size_t j = nstate; j < m.size(); ++j) {
        if (m[j] > 1) return false;
      }
    }
  }
  return true;
}

double min_lambda(const BarrierCertificate& cert) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& l : cert.lambdas) {
    for (double v : l) m = std::min(m, v);
  }
  return m;
}

std::vector<Eigen::VectorXd> sample_box(const Box& b, std::size_t per_dim) {
  const std::size_t n = b.dim();
  if (per_dim < 2) throw std::invalid_argument("sample_box: need at least 2 points per dimension");
  // Keep the total bounded for high-dimensional boxes; vertices always stay.
  while (per_dim > 2 && std::pow(static_cast<double>(per_dim), static_cast<double>(n)) > 50000.0) {
    --per_dim;
  }
  std::vector<std::vector<double>> axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (b.is_degenerate(i)) {
      axes[i] = {b.lo(i)};
      continue;
    }
    for (std::size_t k = 0; k < per_dim; ++k) {
      axes[i].push_back(k + 1 == per_dim ? b.hi(i)
                                         : b.lo(i) + b.width(i) * static_cast<double>(k) /
                                                         static_cast<double>(per_dim - 1));
    }
  }
  std::vector<Eigen::VectorXd> out;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    Eigen::VectorXd x(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Index>(i)) = axes[i][idx[i]];
    out.push_back(std::move(x));
    std::size_t j = 0;
    while (j < n && idx[j] + 1 == axes[j].size()) idx[j++] = 0;
    if (j == n) break;
    ++idx[j];
  }
  return out;
}

VerifyReport verify_certificate(const BarrierCertificate& cert,
                                std::span<const Polynomial> dynamics, std::size_t grid_per_dim) {
  VerifyReport r;
  const Polynomial b = cert.global();
  const Polynomial lie = lie_derivative(b, dynamics);
  r.min_init = std::numeric_limits<double>::infinity();
  for (const auto& x : sample_box(cert.init, grid_per_dim)) r.min_init = std::min(r.min_init, b.eval(x));
  r.min_lie = std::numeric_limits<double>::infinity();
  for (const auto& z : sample_box(cartesian(cert.domain, cert.uncertainty), grid_per_dim)) {
    r.min_lie = std::min(r.min_lie, lie.eval(z));
  }
  r.max_target = -std::numeric_limits<double>::infinity();
  for (const auto& x : sample_box(cert.target, grid_per_dim)) {
    r.max_target = std::max(r.max_target, b.eval(x));
  }
  r.residual = certificate_residual(cert, dynamics);
  r.min_lambda = min_lambda(cert);
  r.pass = r.min_init > 0.0 && r.min_lie > 0.0 && r.max_target < 0.0 &&
           r.residual <= kResidualTolerance && r.min_lambda >= kLambdaTolerance;
  return r;
}

namespace {

std::optional<PositivityWitness> positivity_in_frame(Polynomial local, const AffineFrame& frame,
                                                     const Box& box, unsigned order,
                                                     const SimplexOptions& simplex) {
  PositivityWitness w;
  w.frame = frame;
  w.local = std::move(local);
  w.scale = w.local.max_abs_coefficient();
  if (!(w.scale > 0.0)) return std::nullopt;
  w.local *= 1.0 / w.scale;
  w.order = order;
  w.epsilon = kPositivityEpsilon;

  // lhs = t * p with an extra row t = 1 keeps the encoding purely parametric.
  LinearProgram lp;
  const std::size_t t = lp.add_variable(VarKind::Free);
  IdentityBlock blk;
  blk.lhs.nvars = box.dim();
  blk.lhs.add_scaled(w.local, t);
  blk.products = *product_cache().get(w.frame.to_local(box), order);
  blk.epsilon = w.epsilon;
  for (std::size_t k = 0; k < blk.products.size(); ++k) {
    blk.lambda_ids.push_back(lp.add_variable(VarKind::NonNegative));
  }
  lp.rows = encode_identity(blk);
  lp.rows.push_back({{{t, 1.0}}, 1.0});
  const LpSolution sol = solve_feasible(lp, simplex);
  if (sol.status != LpStatus::Feasible) return std::nullopt;
  Eigen::VectorXd z = sol.x;
  z(static_cast<Index>(t)) = 1.0;
  const std::vector<IdentityBlock> blocks{blk};
  w.residual = residual_check(z, blocks);
  double lambda_min = 0.0;
  for (auto id : blk.lambda_ids) {
    w.lambdas.push_back(z(static_cast<Index>(id)));
    lambda_min = std::min(lambda_min, w.lambdas.back());
  }
  // On [-1,1]^n the residual polynomial is bounded by the sum of its
  // coefficients; keep that below half of epsilon.
  const double budget = w.epsilon / static_cast<double>(std::max<std::size_t>(1, lp.num_rows()));
  if (w.residual > std::min(kResidualTolerance, 0.5 * budget) || lambda_min < kLambdaTolerance) {
    return std::nullopt;
  }
  return w;
}

}  // namespace

std::optional<PositivityWitness> positivity_certificate(const Polynomial& p, const Box& box,
                                                        unsigned order,
                                                        const SimplexOptions& simplex) {
  if (p.nvars() != box.dim()) throw DimensionError("positivity_certificate: arity mismatch");
  const AffineFrame frame = AffineFrame::of(box);
  return positivity_in_frame(compose_affine(p, frame.center, frame.radius), frame, box, order,
                             simplex);
}

std::optional<PositivityWitness> negativity_certificate(const BarrierCertificate& cert,
                                                        const Box& box, unsigned order,
                                                        const SimplexOptions& simplex) {
  if (cert.dim() != box.dim()) throw DimensionError("negativity_certificate: arity mismatch");
  const AffineFrame frame = AffineFrame::of(box);
  return positivity_in_frame(-cert.in_frame(frame), frame, box, order, simplex);
}

}  // namespace prbt
