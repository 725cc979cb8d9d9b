#ifndef PRBT_POLY_HPP
#define PRBT_POLY_HPP

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace prbt {

/// Terms whose magnitude does not exceed this are dropped on normalization.
inline constexpr double kCoefficientTolerance = 1e-14;
inline constexpr std::size_t kMaxVariables = 16;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exponent vector of a monomial. Ordered graded-lexicographically: lower total
/// degree first, then larger exponents on earlier variables first, so that
/// x^2 < x*y < y^2 and 1 < x < y.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t nvars);
  Monomial(std::initializer_list<unsigned> exponents);
  explicit Monomial(std::span<const unsigned> exponents);

  static Monomial unit(std::size_t nvars, std::size_t var, unsigned power = 1);

  std::size_t size() const { return size_; }
  unsigned operator[](std::size_t i) const { return exps_[i]; }
  void set(std::size_t i, unsigned e);
  unsigned degree() const;
  std::vector<unsigned> exponents() const;

  /// Same exponents in a larger variable space (new variables get exponent 0).
  Monomial extended(std::size_t nvars) const;

  friend Monomial operator*(const Monomial& a, const Monomial& b);
  friend bool operator==(const Monomial& a, const Monomial& b) = default;
  friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b);

 private:
  std::array<std::uint8_t, kMaxVariables> exps_{};
  std::uint8_t size_ = 0;
};

/// Sparse multivariate polynomial with binary64 coefficients.
///
/// Variables are positional; by convention state variables come first and
/// uncertainty variables after them. The term map never holds coefficients
/// with magnitude <= kCoefficientTolerance.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double>;

  Polynomial() = default;
  explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, double value);
  static Polynomial variable(std::size_t nvars, std::size_t index);
  static Polynomial monomial(const Monomial& m, double coefficient = 1.0);

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  unsigned degree() const;
  double coefficient(const Monomial& m) const;
  double max_abs_coefficient() const;

  /// Adds `coefficient` to the term `m`, dropping it if the sum vanishes.
  void add_term(const Monomial& m, double coefficient);

  /// True if no term involves a variable with index >= n.
  bool depends_only_on_first(std::size_t n) const;

  /// The same polynomial viewed over `nvars` >= nvars() variables.
  Polynomial extended(std::size_t nvars) const;

  /// The same polynomial over the first `nvars` variables; throws if a
  /// dropped variable occurs.
  Polynomial restricted(std::size_t nvars) const;

  template <typename Derived>
  double eval(const Eigen::MatrixBase<Derived>& point) const;
  double eval(std::span<const double> point) const;

  Polynomial derivative(std::size_t var) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);

  friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

 private:
  void check_same_space(const Polynomial& other) const;

  std::size_t nvars_ = 0;
  TermMap terms_;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a);
Polynomial operator*(Polynomial a, double s);
Polynomial operator*(double s, Polynomial a);
Polynomial operator*(const Polynomial& a, const Polynomial& b);

double eval(const Polynomial& p, std::span<const double> point);
Polynomial mul(const Polynomial& a, const Polynomial& b);
Polynomial pow(const Polynomial& p, unsigned k);

/// L_f p = sum_i dp/dx_i * f_i. `p` may be given over the n state variables or
/// over the full (state, uncertainty) space of `f`; it must not depend on
/// uncertainty variables.
Polynomial lie_derivative(const Polynomial& p, std::span<const Polynomial> f);

/// p(offset + scale .* z), i.e. an affine change of variables applied
/// coordinatewise.
Polynomial compose_affine(const Polynomial& p, const Eigen::VectorXd& offset,
                          const Eigen::VectorXd& scale);

/// Degree-1 polynomial constant + <gradient, x>.
struct LinearPolynomial {
  double constant = 0.0;
  Eigen::VectorXd gradient;

  std::size_t nvars() const { return static_cast<std::size_t>(gradient.size()); }
  Polynomial to_polynomial() const;
  template <typename Derived>
  double eval(const Eigen::MatrixBase<Derived>& x) const {
    return constant + gradient.dot(x);
  }
};

/// Multi-indices alpha with |alpha| <= order over `count` generators in graded
/// lexicographic order (alpha = 0 first).
std::vector<std::vector<unsigned>> handelman_exponents(std::size_t count, unsigned order);

/// One product prod_i gens_i^alpha_i per multi-index of handelman_exponents.
std::vector<Polynomial> handelman_products(std::span<const LinearPolynomial> gens,
                                           unsigned order);

/// A polynomial template sum_k c_k m_k with one undetermined coefficient per
/// monomial of total degree <= degree.
struct TemplatePolynomial {
  std::size_t nvars = 0;
  unsigned degree = 0;
  std::vector<Monomial> monomials;
  std::vector<std::size_t> coefficient_ids;

  std::size_t size() const { return monomials.size(); }
  Polynomial instantiate(std::span<const double> coefficients) const;
};

TemplatePolynomial make_template(std::size_t nstate, unsigned degree);

/// All monomials over nvars variables with total degree <= degree, graded lex.
std::vector<Monomial> monomials_up_to(std::size_t nvars, unsigned degree);

std::size_t binomial(std::size_t n, std::size_t k);

/// Prints in the model-file expression grammar, e.g. "1.5*x - x*y".
std::string to_string(const Polynomial& p, std::span<const std::string> names);

// ---------------------------------------------------------------------------

template <typename Derived>
double Polynomial::eval(const Eigen::MatrixBase<Derived>& point) const {
  if (static_cast<std::size_t>(point.size()) != nvars_) {
    throw DimensionError("Polynomial::eval: point has " + std::to_string(point.size()) +
                         " coordinates, expected " + std::to_string(nvars_));
  }
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double term = c;
    for (std::size_t j = 0; j < nvars_; ++j) {
      for (unsigned e = 0; e < m[j]; ++e) term *= point(static_cast<Eigen::Index>(j));
    }
    sum += term;
  }
  return sum;
}

}  // namespace prbt

#endif  // PRBT_POLY_HPP
