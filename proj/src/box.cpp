#include "prbt/box.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace prbt {

namespace {

void check_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size()) throw DimensionError("Box: lo/hi length mismatch");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(lo(i) <= hi(i))) {
      throw std::invalid_argument("Box: lo > hi in dimension " + std::to_string(i));
    }
  }
}

}  // namespace

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  check_bounds(lo_, hi_);
}

Box::Box(std::initializer_list<std::pair<double, double>> bounds)
    : Box(std::vector<std::pair<double, double>>(bounds)) {}

Box::Box(const std::vector<std::pair<double, double>>& bounds)
    : lo_(static_cast<Eigen::Index>(bounds.size())), hi_(static_cast<Eigen::Index>(bounds.size())) {
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    lo_(static_cast<Eigen::Index>(i)) = bounds[i].first;
    hi_(static_cast<Eigen::Index>(i)) = bounds[i].second;
  }
  check_bounds(lo_, hi_);
}

void Box::set_lo(std::size_t i, double v) {
  if (!(v <= hi(i))) throw std::invalid_argument("Box::set_lo: lo would exceed hi");
  lo_(static_cast<Eigen::Index>(i)) = v;
}

void Box::set_hi(std::size_t i, double v) {
  if (!(v >= lo(i))) throw std::invalid_argument("Box::set_hi: hi would fall below lo");
  hi_(static_cast<Eigen::Index>(i)) = v;
}

bool Box::contains(const Box& other, double tol) const {
  if (other.dim() != dim()) throw DimensionError("Box::contains: dimension mismatch");
  return (other.lo_.array() >= lo_.array() - tol).all() &&
         (other.hi_.array() <= hi_.array() + tol).all();
}

Box Box::facet(std::size_t i, Side s) const {
  Box f = *this;
  const double v = bound(i, s);
  f.lo_(static_cast<Eigen::Index>(i)) = v;
  f.hi_(static_cast<Eigen::Index>(i)) = v;
  return f;
}

bool operator==(const Box& a, const Box& b) {
  return a.dim() == b.dim() && a.lo_ == b.lo_ && a.hi_ == b.hi_;
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw DimensionError("intersect: dimension mismatch");
  Eigen::VectorXd lo = a.lo().cwiseMax(b.lo());
  Eigen::VectorXd hi = a.hi().cwiseMin(b.hi());
  if ((lo.array() > hi.array()).any()) return std::nullopt;
  return Box(std::move(lo), std::move(hi));
}

bool disjoint(const Box& a, const Box& b) { return !intersect(a, b).has_value(); }

Box hull(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw DimensionError("hull: dimension mismatch");
  return Box(a.lo().cwiseMin(b.lo()), a.hi().cwiseMax(b.hi()));
}

Box cartesian(const Box& a, const Box& b) {
  Eigen::VectorXd lo(a.lo().size() + b.lo().size()), hi(lo.size());
  lo << a.lo(), b.lo();
  hi << a.hi(), b.hi();
  return Box(std::move(lo), std::move(hi));
}

std::vector<Eigen::VectorXd> vertices(const Box& b) {
  const std::size_t n = b.dim();
  if (n > 24) throw std::invalid_argument("vertices: dimension too large to enumerate");
  std::set<std::vector<double>> seen;
  std::vector<Eigen::VectorXd> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      v(static_cast<Eigen::Index>(i)) = (mask >> i) & 1U ? b.hi(i) : b.lo(i);
    }
    if (seen.emplace(v.data(), v.data() + v.size()).second) out.push_back(std::move(v));
  }
  return out;
}

std::vector<LinearPolynomial> box_to_halfspaces(const Box& b) {
  return box_to_halfspaces(b, b.dim(), 0);
}

std::vector<LinearPolynomial> box_to_halfspaces(const Box& b, std::size_t nvars,
                                                std::size_t first_var) {
  if (first_var + b.dim() > nvars) throw DimensionError("box_to_halfspaces: variable overflow");
  std::vector<LinearPolynomial> out;
  out.reserve(2 * b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i) {
    const auto v = static_cast<Eigen::Index>(first_var + i);
    LinearPolynomial lower{-b.lo(i), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nvars))};
    lower.gradient(v) = 1.0;
    LinearPolynomial upper{b.hi(i), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nvars))};
    upper.gradient(v) = -1.0;
    out.push_back(std::move(lower));
    out.push_back(std::move(upper));
  }
  return out;
}

}  // namespace prbt
