#include "prbt/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace prbt {

// ------------------------------------------------------- expression parser

namespace {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, std::span<const std::string> names)
      : text_(text), names_(names) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial acc = term();
    while (true) {
      if (accept('+')) {
        acc += term();
      } else if (accept('-')) {
        acc -= term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = factor();
    while (accept('*')) acc = acc * factor();
    return acc;
  }

  Polynomial factor() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return -factor();
    }
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return Polynomial::constant(names_.size(), number());
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      const std::string name = identifier();
      auto it = std::find(names_.begin(), names_.end(), name);
      if (it == names_.end()) throw ParseError("unknown identifier '" + name + "'", start);
      const auto var = static_cast<std::size_t>(it - names_.begin());
      unsigned power = 1;
      if (accept('^')) power = integer();
      Polynomial p(names_.size());
      if (power == 0) return Polynomial::constant(names_.size(), 1.0);
      p.add_term(Monomial::unit(names_.size(), var, power), 1.0);
      return p;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  double number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t count = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark;
        fail("malformed exponent");
      }
    }
    const std::string tok(text_.substr(start, pos_ - start));
    return std::strtod(tok.c_str(), nullptr);
  }

  unsigned integer() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) fail("expected integer exponent");
    const unsigned long v = std::strtoul(std::string(text_.substr(start, pos_ - start)).c_str(),
                                         nullptr, 10);
    if (v > 255) throw ParseError("exponent too large", start);
    return static_cast<unsigned>(v);
  }

  std::string_view text_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_expression(std::string_view text, std::span<const std::string> var_names) {
  return ExpressionParser(text, var_names).parse();
}

// ------------------------------------------------------------ model loading

const Mode& HybridModel::mode(std::string_view id) const {
  for (const auto& m : modes) {
    if (m.id == id) return m;
  }
  throw std::out_of_range("unknown mode '" + std::string(id) + "'");
}

ContinuousModel HybridModel::continuous(std::string_view id) const {
  const Mode& m = mode(id);
  ContinuousModel c;
  c.name = name;
  c.mode = m.id;
  c.state_vars = state_vars;
  c.uncertain_vars = uncertain_vars;
  c.dynamics = m.dynamics;
  c.invariant = m.invariant;
  c.uncertainty = uncertainty;
  c.init = id == init_mode ? init : m.invariant;
  for (const auto& u : unsafe) {
    if (u.mode == m.id) c.unsafe.push_back(u.box);
  }
  return c;
}

std::vector<std::size_t> HybridModel::transitions_from(std::string_view id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    if (transitions[i].from == id) out.push_back(i);
  }
  return out;
}

namespace {

using nlohmann::json;

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ModelError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ModelError(path + "." + key, "missing field");
  return *it;
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ModelError(path, "expected a string");
  return j.get<std::string>();
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ModelError(path, "expected a number");
  return j.get<double>();
}

std::vector<std::string> as_names(const json& j, const std::string& path) {
  if (!j.is_array()) throw ModelError(path, "expected an array of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_string(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Box as_box(const json& j, std::size_t dim, const std::string& path) {
  if (!j.is_array()) throw ModelError(path, "expected an array of [lo,hi] pairs");
  if (j.size() != dim) {
    throw ModelError(path, "expected " + std::to_string(dim) + " intervals, got " +
                               std::to_string(j.size()));
  }
  std::vector<std::pair<double, double>> bounds;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2) throw ModelError(p, "expected [lo, hi]");
    const double lo = as_number(j[i][0], p + "[0]");
    const double hi = as_number(j[i][1], p + "[1]");
    if (!(lo <= hi)) throw ModelError(p, "lo > hi");
    bounds.emplace_back(lo, hi);
  }
  return Box(bounds);
}

}  // namespace

HybridModel parse_model(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ModelError("$", std::string("malformed document: ") + e.what());
  }
  HybridModel m;
  m.name = as_string(field(doc, "name", "$"), "$.name");
  m.state_vars = as_names(field(doc, "state_vars", "$"), "$.state_vars");
  if (m.state_vars.empty()) throw ModelError("$.state_vars", "at least one state variable");
  m.uncertain_vars = doc.contains("uncertain_vars")
                         ? as_names(doc["uncertain_vars"], "$.uncertain_vars")
                         : std::vector<std::string>{};
  std::vector<std::string> all = m.state_vars;
  all.insert(all.end(), m.uncertain_vars.begin(), m.uncertain_vars.end());
  if (all.size() > kMaxVariables) throw ModelError("$", "too many variables");
  if (std::set<std::string>(all.begin(), all.end()).size() != all.size()) {
    throw ModelError("$", "duplicate variable names");
  }
  const std::size_t n = m.state_dim();
  const std::size_t l = m.uncertain_dim();
  m.uncertainty = doc.contains("uncertainty") ? as_box(doc["uncertainty"], l, "$.uncertainty")
                                              : Box(Eigen::VectorXd(0), Eigen::VectorXd(0));

  const json& modes = field(doc, "modes", "$");
  if (!modes.is_array() || modes.empty()) throw ModelError("$.modes", "expected non-empty array");
  std::set<std::string> ids;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const std::string p = "$.modes[" + std::to_string(k) + "]";
    Mode mode;
    mode.id = as_string(field(modes[k], "id", p), p + ".id");
    if (!ids.insert(mode.id).second) throw ModelError(p + ".id", "duplicate mode id");
    const json& dyn = field(modes[k], "dynamics", p);
    if (!dyn.is_array() || dyn.size() != n) {
      throw ModelError(p + ".dynamics", "expected " + std::to_string(n) + " expressions");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::string dp = p + ".dynamics[" + std::to_string(i) + "]";
      try {
        mode.dynamics.push_back(parse_expression(as_string(dyn[i], dp), all));
      } catch (const ParseError& e) {
        throw ModelError(dp, e.what());
      }
    }
    mode.invariant = as_box(field(modes[k], "invariant", p), n, p + ".invariant");
    m.modes.push_back(std::move(mode));
  }

  if (doc.contains("transitions")) {
    const json& ts = doc["transitions"];
    if (!ts.is_array()) throw ModelError("$.transitions", "expected an array");
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const std::string p = "$.transitions[" + std::to_string(k) + "]";
      Transition t;
      t.from = as_string(field(ts[k], "from", p), p + ".from");
      t.to = as_string(field(ts[k], "to", p), p + ".to");
      if (!ids.count(t.from)) throw ModelError(p + ".from", "unknown mode '" + t.from + "'");
      if (!ids.count(t.to)) throw ModelError(p + ".to", "unknown mode '" + t.to + "'");
      const json& g = field(ts[k], "guard", p);
      const std::string var = as_string(field(g, "var", p + ".guard"), p + ".guard.var");
      auto it = std::find(m.state_vars.begin(), m.state_vars.end(), var);
      if (it == m.state_vars.end()) {
        throw ModelError(p + ".guard.var", "guard must name a state variable, got '" + var + "'");
      }
      t.guard.var = static_cast<std::size_t>(it - m.state_vars.begin());
      const std::string op = as_string(field(g, "op", p + ".guard"), p + ".guard.op");
      if (op == "<=") {
        t.guard.op = Guard::Op::LessEq;
      } else if (op == ">=") {
        t.guard.op = Guard::Op::GreaterEq;
      } else {
        throw ModelError(p + ".guard.op", "only axis-aligned '<=' or '>=' guards are supported");
      }
      t.guard.bound = as_number(field(g, "bound", p + ".guard"), p + ".guard.bound");
      const json& r = field(ts[k], "reset", p);
      if (!r.is_array() || r.size() != n) {
        throw ModelError(p + ".reset", "expected a " + std::to_string(n) + "x" +
                                           std::to_string(n) + " matrix");
      }
      t.reset.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const std::string rp = p + ".reset[" + std::to_string(i) + "]";
        if (!r[i].is_array() || r[i].size() != n) throw ModelError(rp, "row length mismatch");
        for (std::size_t j = 0; j < n; ++j) {
          t.reset(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              as_number(r[i][j], rp + "[" + std::to_string(j) + "]");
        }
      }
      t.offset = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      if (ts[k].contains("offset")) {
        const json& o = ts[k]["offset"];
        if (!o.is_array() || o.size() != n) throw ModelError(p + ".offset", "length mismatch");
        for (std::size_t i = 0; i < n; ++i) {
          t.offset(static_cast<Eigen::Index>(i)) =
              as_number(o[i], p + ".offset[" + std::to_string(i) + "]");
        }
      }
      m.transitions.push_back(std::move(t));
    }
  }

  const json& init = field(doc, "init", "$");
  m.init_mode = as_string(field(init, "mode", "$.init"), "$.init.mode");
  if (!ids.count(m.init_mode)) throw ModelError("$.init.mode", "unknown mode '" + m.init_mode + "'");
  m.init = as_box(field(init, "box", "$.init"), n, "$.init.box");
  if (!m.mode(m.init_mode).invariant.contains(m.init)) {
    throw ModelError("$.init.box", "initial box is not contained in the invariant of mode '" +
                                       m.init_mode + "'");
  }

  if (doc.contains("unsafe")) {
    const json& us = doc["unsafe"];
    if (!us.is_array()) throw ModelError("$.unsafe", "expected an array");
    for (std::size_t k = 0; k < us.size(); ++k) {
      const std::string p = "$.unsafe[" + std::to_string(k) + "]";
      UnsafeSet u;
      u.mode = as_string(field(us[k], "mode", p), p + ".mode");
      if (!ids.count(u.mode)) throw ModelError(p + ".mode", "unknown mode '" + u.mode + "'");
      u.box = as_box(field(us[k], "box", p), n, p + ".box");
      m.unsafe.push_back(std::move(u));
    }
  }
  return m;
}

HybridModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError(path.string(), "cannot open model file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace prbt
