#include "prbt/poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace prbt {

// ----------------------------------------------------------------- Monomial

Monomial::Monomial(std::size_t nvars) {
  if (nvars > kMaxVariables) {
    throw DimensionError("Monomial: at most " + std::to_string(kMaxVariables) + " variables");
  }
  size_ = static_cast<std::uint8_t>(nvars);
}

Monomial::Monomial(std::initializer_list<unsigned> exponents)
    : Monomial(std::span<const unsigned>(exponents.begin(), exponents.size())) {}

Monomial::Monomial(std::span<const unsigned> exponents) : Monomial(exponents.size()) {
  for (std::size_t i = 0; i < exponents.size(); ++i) set(i, exponents[i]);
}

Monomial Monomial::unit(std::size_t nvars, std::size_t var, unsigned power) {
  Monomial m(nvars);
  m.set(var, power);
  return m;
}

void Monomial::set(std::size_t i, unsigned e) {
  if (i >= size_) throw DimensionError("Monomial::set: variable index out of range");
  if (e > 255) throw std::overflow_error("Monomial::set: exponent exceeds 255");
  exps_[i] = static_cast<std::uint8_t>(e);
}

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (std::size_t i = 0; i < size_; ++i) d += exps_[i];
  return d;
}

std::vector<unsigned> Monomial::exponents() const {
  return std::vector<unsigned>(exps_.begin(), exps_.begin() + size_);
}

Monomial Monomial::extended(std::size_t nvars) const {
  if (nvars < size_) throw DimensionError("Monomial::extended: cannot shrink");
  Monomial m(nvars);
  std::copy(exps_.begin(), exps_.begin() + size_, m.exps_.begin());
  return m;
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  if (a.size_ != b.size_) throw DimensionError("Monomial product: dimension mismatch");
  Monomial m(a.size_);
  for (std::size_t i = 0; i < a.size_; ++i) m.set(i, unsigned{a.exps_[i]} + b.exps_[i]);
  return m;
}

std::strong_ordering operator<=>(const Monomial& a, const Monomial& b) {
  if (a.size_ != b.size_) return a.size_ <=> b.size_;
  if (auto c = a.degree() <=> b.degree(); c != 0) return c;
  for (std::size_t i = 0; i < a.size_; ++i) {
    if (a.exps_[i] != b.exps_[i]) return b.exps_[i] <=> a.exps_[i];
  }
  return std::strong_ordering::equal;
}

// --------------------------------------------------------------- Polynomial

Polynomial Polynomial::constant(std::size_t nvars, double value) {
  Polynomial p(nvars);
  p.add_term(Monomial(nvars), value);
  return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t index) {
  if (index >= nvars) throw DimensionError("Polynomial::variable: index out of range");
  Polynomial p(nvars);
  p.add_term(Monomial::unit(nvars, index), 1.0);
  return p;
}

Polynomial Polynomial::monomial(const Monomial& m, double coefficient) {
  Polynomial p(m.size());
  p.add_term(m, coefficient);
  return p;
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coefficient() const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v = std::max(v, std::abs(c));
  return v;
}

void Polynomial::add_term(const Monomial& m, double coefficient) {
  if (m.size() != nvars_) {
    throw DimensionError("Polynomial::add_term: monomial over " + std::to_string(m.size()) +
                         " variables, polynomial over " + std::to_string(nvars_));
  }
  if (coefficient == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, coefficient);
  if (!inserted) it->second += coefficient;
  if (std::abs(it->second) <= kCoefficientTolerance) terms_.erase(it);
}

bool Polynomial::depends_only_on_first(std::size_t n) const {
  for (const auto& [m, c] : terms_) {
    for (std::size_t j = n; j < nvars_; ++j) {
      if (m[j] != 0) return false;
    }
  }
  return true;
}

Polynomial Polynomial::extended(std::size_t nvars) const {
  if (nvars == nvars_) return *this;
  Polynomial p(nvars);
  for (const auto& [m, c] : terms_) p.terms_.emplace(m.extended(nvars), c);
  return p;
}

Polynomial Polynomial::restricted(std::size_t nvars) const {
  if (nvars == nvars_) return *this;
  if (nvars > nvars_ || !depends_only_on_first(nvars)) {
    throw DimensionError("Polynomial::restricted: polynomial depends on dropped variables");
  }
  Polynomial p(nvars);
  for (const auto& [m, c] : terms_) {
    Monomial r(nvars);
    for (std::size_t j = 0; j < nvars; ++j) r.set(j, m[j]);
    p.terms_.emplace(r, c);
  }
  return p;
}

double Polynomial::eval(std::span<const double> point) const {
  return eval(Eigen::Map<const Eigen::VectorXd>(point.data(),
                                                static_cast<Eigen::Index>(point.size())));
}

Polynomial Polynomial::derivative(std::size_t var) const {
  if (var >= nvars_) throw DimensionError("Polynomial::derivative: variable out of range");
  Polynomial d(nvars_);
  for (const auto& [m, c] : terms_) {
    if (m[var] == 0) continue;
    Monomial r = m;
    r.set(var, m[var] - 1);
    d.add_term(r, c * m[var]);
  }
  return d;
}

void Polynomial::check_same_space(const Polynomial& other) const {
  if (other.nvars_ != nvars_) {
    throw DimensionError("Polynomial: operands over " + std::to_string(nvars_) + " and " +
                         std::to_string(other.nvars_) + " variables");
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  check_same_space(other);
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  check_same_space(other);
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= s;
    if (std::abs(it->second) <= kCoefficientTolerance) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
Polynomial operator-(Polynomial a) { return a *= -1.0; }
Polynomial operator*(Polynomial a, double s) { return a *= s; }
Polynomial operator*(double s, Polynomial a) { return a *= s; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.nvars() != b.nvars()) {
    throw DimensionError("Polynomial product: operands over " + std::to_string(a.nvars()) +
                         " and " + std::to_string(b.nvars()) + " variables");
  }
  // Accumulate unnormalized, then drop near-zero sums once.
  std::map<Monomial, double> acc;
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) acc[ma * mb] += ca * cb;
  }
  Polynomial p(a.nvars());
  for (const auto& [m, c] : acc) p.add_term(m, c);
  return p;
}

double eval(const Polynomial& p, std::span<const double> point) { return p.eval(point); }

Polynomial mul(const Polynomial& a, const Polynomial& b) { return a * b; }

Polynomial pow(const Polynomial& p, unsigned k) {
  Polynomial r = Polynomial::constant(p.nvars(), 1.0);
  for (unsigned i = 0; i < k; ++i) r = r * p;
  return r;
}

Polynomial lie_derivative(const Polynomial& p, std::span<const Polynomial> f) {
  const std::size_t n = f.size();
  if (n == 0) throw DimensionError("lie_derivative: empty vector field");
  const std::size_t nvars = f[0].nvars();
  for (const auto& fi : f) {
    if (fi.nvars() != nvars) throw DimensionError("lie_derivative: inconsistent field arity");
  }
  if (nvars < n) {
    throw DimensionError("lie_derivative: field has " + std::to_string(n) +
                         " components but only " + std::to_string(nvars) + " variables");
  }
  if (p.nvars() != n && p.nvars() != nvars) {
    throw DimensionError("lie_derivative: polynomial over " + std::to_string(p.nvars()) +
                         " variables, state dimension is " + std::to_string(n));
  }
  if (!p.depends_only_on_first(n)) {
    throw DimensionError("lie_derivative: polynomial depends on uncertainty variables");
  }
  const Polynomial q = p.extended(nvars);
  Polynomial out(nvars);
  for (std::size_t i = 0; i < n; ++i) {
    Polynomial d = q.derivative(i);
    if (!d.is_zero()) out += d * f[i];
  }
  return out;
}

Polynomial compose_affine(const Polynomial& p, const Eigen::VectorXd& offset,
                          const Eigen::VectorXd& scale) {
  const std::size_t n = p.nvars();
  if (static_cast<std::size_t>(offset.size()) != n ||
      static_cast<std::size_t>(scale.size()) != n) {
    throw DimensionError("compose_affine: offset/scale length must equal nvars");
  }
  // powers[j][k] = (offset_j + scale_j z_j)^k as coefficient lists in z_j.
  unsigned maxdeg = 0;
  for (const auto& [m, c] : p.terms()) {
    for (std::size_t j = 0; j < n; ++j) maxdeg = std::max(maxdeg, unsigned{m[j]});
  }
  std::vector<std::vector<std::vector<double>>> powers(n);
  for (std::size_t j = 0; j < n; ++j) {
    powers[j].resize(maxdeg + 1);
    powers[j][0] = {1.0};
    for (unsigned k = 1; k <= maxdeg; ++k) {
      const auto& prev = powers[j][k - 1];
      std::vector<double> next(k + 1, 0.0);
      for (std::size_t i = 0; i < prev.size(); ++i) {
        next[i] += prev[i] * offset(static_cast<Eigen::Index>(j));
        next[i + 1] += prev[i] * scale(static_cast<Eigen::Index>(j));
      }
      powers[j][k] = std::move(next);
    }
  }
  std::map<Monomial, double> acc;
  for (const auto& [m, c] : p.terms()) {
    // Expand prod_j powers[j][m_j] by odometer over the per-variable degrees.
    std::vector<unsigned> idx(n, 0);
    while (true) {
      double coef = c;
      Monomial r(n);
      for (std::size_t j = 0; j < n; ++j) {
        coef *= powers[j][m[j]][idx[j]];
        r.set(j, idx[j]);
      }
      if (coef != 0.0) acc[r] += coef;
      std::size_t j = 0;
      while (j < n && idx[j] == m[j]) idx[j++] = 0;
      if (j == n) break;
      ++idx[j];
    }
  }
  Polynomial out(n);
  for (const auto& [m, c] : acc) out.add_term(m, c);
  return out;
}

Polynomial LinearPolynomial::to_polynomial() const {
  const std::size_t n = nvars();
  Polynomial p = Polynomial::constant(n, constant);
  for (std::size_t j = 0; j < n; ++j) {
    p.add_term(Monomial::unit(n, j), gradient(static_cast<Eigen::Index>(j)));
  }
  return p;
}

namespace {

void enumerate_exact(std::size_t count, unsigned total, std::vector<unsigned>& cur,
                     std::size_t pos, std::vector<std::vector<unsigned>>& out) {
  if (pos + 1 == count) {
    cur[pos] = total;
    out.push_back(cur);
    return;
  }
  for (unsigned e = total + 1; e-- > 0;) {
    cur[pos] = e;
    enumerate_exact(count, total - e, cur, pos + 1, out);
  }
  cur[pos] = 0;
}

}  // namespace

std::vector<std::vector<unsigned>> handelman_exponents(std::size_t count, unsigned order) {
  std::vector<std::vector<unsigned>> out;
  if (count == 0) {
    out.emplace_back();
    return out;
  }
  std::vector<unsigned> cur(count, 0);
  for (unsigned total = 0; total <= order; ++total) enumerate_exact(count, total, cur, 0, out);
  return out;
}

std::vector<Polynomial> handelman_products(std::span<const LinearPolynomial> gens,
                                           unsigned order) {
  const std::size_t nvars = gens.empty() ? 0 : gens[0].nvars();
  for (const auto& g : gens) {
    if (g.nvars() != nvars) throw DimensionError("handelman_products: mixed arities");
  }
  std::vector<Polynomial> lin;
  lin.reserve(gens.size());
  for (const auto& g : gens) lin.push_back(g.to_polynomial());

  const auto alphas = handelman_exponents(gens.size(), order);
  std::map<std::vector<unsigned>, std::size_t> index;
  std::vector<Polynomial> out;
  out.reserve(alphas.size());
  for (const auto& alpha : alphas) {
    // Every alpha of degree k > 0 extends an alpha of degree k-1 that was
    // already produced, by one factor of its first non-zero generator.
    auto first = std::find_if(alpha.begin(), alpha.end(), [](unsigned e) { return e != 0; });
    if (first == alpha.end()) {
      out.push_back(Polynomial::constant(nvars, 1.0));
    } else {
      auto parent = alpha;
      const auto k = static_cast<std::size_t>(first - alpha.begin());
      --parent[k];
      out.push_back(out[index.at(parent)] * lin[k]);
    }
    index.emplace(alpha, out.size() - 1);
  }
  return out;
}

std::vector<Monomial> monomials_up_to(std::size_t nvars, unsigned degree) {
  std::vector<Monomial> out;
  for (const auto& e : handelman_exponents(nvars, degree)) out.emplace_back(e);
  if (nvars == 0) out.assign(1, Monomial(0));
  return out;
}

Polynomial TemplatePolynomial::instantiate(std::span<const double> coefficients) const {
  if (coefficients.size() != monomials.size()) {
    throw DimensionError("TemplatePolynomial::instantiate: coefficient count mismatch");
  }
  Polynomial p(nvars);
  for (std::size_t k = 0; k < monomials.size(); ++k) p.add_term(monomials[k], coefficients[k]);
  return p;
}

TemplatePolynomial make_template(std::size_t nstate, unsigned degree) {
  if (degree < 1) throw std::invalid_argument("make_template: degree must be >= 1");
  TemplatePolynomial t;
  t.nvars = nstate;
  t.degree = degree;
  t.monomials = monomials_up_to(nstate, degree);
  t.coefficient_ids.resize(t.monomials.size());
  for (std::size_t k = 0; k < t.monomials.size(); ++k) t.coefficient_ids[k] = k;
  return t;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::string to_string(const Polynomial& p, std::span<const std::string> names) {
  if (names.size() != p.nvars()) throw DimensionError("to_string: name count mismatch");
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  char buf[64];
  for (const auto& [m, c] : p.terms()) {
    const double mag = std::abs(c);
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    const bool is_const = m.degree() == 0;
    bool need_star = false;
    if (is_const || mag != 1.0) {
      std::snprintf(buf, sizeof buf, "%.17g", mag);
      os << buf;
      need_star = true;
    }
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m[j] == 0) continue;
      if (need_star) os << "*";
      os << names[j];
      if (m[j] > 1) os << "^" << unsigned{m[j]};
      need_star = true;
    }
  }
  return os.str();
}

}  // namespace prbt
