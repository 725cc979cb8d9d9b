#ifndef PRBT_BOX_HPP
#define PRBT_BOX_HPP

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "prbt/poly.hpp"

namespace prbt {

enum class Side { Low, High };

/// Axis-aligned hyperrectangle [lo_1,hi_1] x ... x [lo_n,hi_n], lo <= hi.
/// Zero-width dimensions are allowed (facets, exit regions).
class Box {
 public:
  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  Box(std::initializer_list<std::pair<double, double>> bounds);
  explicit Box(const std::vector<std::pair<double, double>>& bounds);

  static Box point(const Eigen::VectorXd& x) { return Box(x, x); }

  std::size_t dim() const { return static_cast<std::size_t>(lo_.size()); }
  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }
  double lo(std::size_t i) const { return lo_(static_cast<Eigen::Index>(i)); }
  double hi(std::size_t i) const { return hi_(static_cast<Eigen::Index>(i)); }
  double bound(std::size_t i, Side s) const { return s == Side::Low ? lo(i) : hi(i); }

  void set_lo(std::size_t i, double v);
  void set_hi(std::size_t i, double v);
  void set_bound(std::size_t i, Side s, double v) { s == Side::Low ? set_lo(i, v) : set_hi(i, v); }

  Eigen::VectorXd center() const { return 0.5 * (lo_ + hi_); }
  Eigen::VectorXd width() const { return hi_ - lo_; }
  double width(std::size_t i) const { return hi(i) - lo(i); }
  double diameter() const { return width().norm(); }
  bool is_degenerate(std::size_t i) const { return lo(i) == hi(i); }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& x, double tol = 0.0) const {
    return (x.array() >= lo_.array() - tol).all() && (x.array() <= hi_.array() + tol).all();
  }
  bool contains(const Box& other, double tol = 0.0) const;

  /// The facet {x in box : x_i = bound(i, side)}.
  Box facet(std::size_t i, Side s) const;

  friend bool operator==(const Box& a, const Box& b);

 private:
  Eigen::VectorXd lo_, hi_;
};

std::optional<Box> intersect(const Box& a, const Box& b);
bool disjoint(const Box& a, const Box& b);
Box hull(const Box& a, const Box& b);
/// a x b over the concatenated coordinates.
Box cartesian(const Box& a, const Box& b);
/// All 2^n vertices (duplicates collapse for zero-width dimensions).
std::vector<Eigen::VectorXd> vertices(const Box& b);

/// 2n linear polynomials (x_1 - lo_1, hi_1 - x_1, x_2 - lo_2, ...), each >= 0
/// exactly on the box. `nvars` >= dim embeds them into a larger variable space,
/// offset by `first_var`.
std::vector<LinearPolynomial> box_to_halfspaces(const Box& b);
std::vector<LinearPolynomial> box_to_halfspaces(const Box& b, std::size_t nvars,
                                                std::size_t first_var);

}  // namespace prbt

#endif  // PRBT_BOX_HPP
