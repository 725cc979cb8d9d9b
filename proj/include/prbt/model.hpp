#ifndef PRBT_MODEL_HPP
#define PRBT_MODEL_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prbt/box.hpp"
#include "prbt/poly.hpp"

namespace prbt {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Raised by load_model; the message starts with the offending field path.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Parses expr := term (('+'|'-') term)*; term := factor ('*' factor)*;
/// factor := number | ident | ident '^' integer | '(' expr ')' | '-' factor.
Polynomial parse_expression(std::string_view text, std::span<const std::string> var_names);

/// Axis-aligned guard x_var <= bound or x_var >= bound.
struct Guard {
  enum class Op { LessEq, GreaterEq };
  std::size_t var = 0;
  Op op = Op::LessEq;
  double bound = 0.0;

  template <typename Derived>
  bool satisfied(const Eigen::MatrixBase<Derived>& x) const {
    const double v = x(static_cast<Eigen::Index>(var));
    return op == Op::LessEq ? v <= bound : v >= bound;
  }
  /// +1 if the guard lies on the increasing side of the plane, -1 otherwise.
  int direction() const { return op == Op::GreaterEq ? 1 : -1; }
};

struct Transition {
  std::string from;
  std::string to;
  Guard guard;
  Eigen::MatrixXd reset;
  Eigen::VectorXd offset;
};

struct Mode {
  std::string id;
  std::vector<Polynomial> dynamics;  // over (states, uncertainties)
  Box invariant;
};

struct UnsafeSet {
  std::string mode;
  Box box;
};

/// One location of a hybrid model viewed as a continuous system with its
/// initial set: M = <X, f, X0, I, U>.
struct ContinuousModel {
  std::string name;
  std::string mode;
  std::vector<std::string> state_vars;
  std::vector<std::string> uncertain_vars;
  std::vector<Polynomial> dynamics;
  Box invariant;
  Box uncertainty;
  Box init;
  std::vector<Box> unsafe;

  std::size_t state_dim() const { return state_vars.size(); }
  std::size_t uncertain_dim() const { return uncertain_vars.size(); }
};

struct HybridModel {
  std::string name;
  std::vector<std::string> state_vars;
  std::vector<std::string> uncertain_vars;
  Box uncertainty;
  std::vector<Mode> modes;
  std::vector<Transition> transitions;
  std::string init_mode;
  Box init;
  std::vector<UnsafeSet> unsafe;

  std::size_t state_dim() const { return state_vars.size(); }
  std::size_t uncertain_dim() const { return uncertain_vars.size(); }
  bool is_continuous() const { return modes.size() == 1 && transitions.empty(); }

  const Mode& mode(std::string_view id) const;
  /// The continuous system of one location; `init` is the model's initial box
  /// when `id` is the initial mode and the mode invariant otherwise.
  ContinuousModel continuous(std::string_view id) const;
  ContinuousModel continuous() const { return continuous(init_mode); }
  std::vector<std::size_t> transitions_from(std::string_view id) const;
};

HybridModel load_model(const std::filesystem::path& path);
HybridModel parse_model(std::string_view json_text);

}  // namespace prbt

#endif  // PRBT_MODEL_HPP
