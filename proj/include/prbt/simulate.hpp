#ifndef PRBT_SIMULATE_HPP
#define PRBT_SIMULATE_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prbt/poly.hpp"

namespace prbt {

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// x -> f(x, u) for a fixed uncertainty value (empty u for plain fields).
VectorField fixed_input_field(std::span<const Polynomial> dynamics, const Eigen::VectorXd& u);

struct TracePoint {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd dx;  // f(x) at this sample
};

struct Trace {
  std::vector<TracePoint> points;

  std::size_t size() const { return points.size(); }
  const TracePoint& back() const { return points.back(); }
};

enum class SimulationFailure { Diverged, Equilibrium, Stalled };

class SimulationError : public std::runtime_error {
 public:
  SimulationError(SimulationFailure kind, const std::string& what, Trace partial)
      : std::runtime_error(what), kind_(kind), partial_(std::move(partial)) {}
  SimulationFailure kind() const { return kind_; }
  const Trace& partial() const { return partial_; }

 private:
  SimulationFailure kind_;
  Trace partial_;
};

/// One classical RK4 step.
Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& x, double h);

/// `steps` fixed RK4 steps of size h from x0; the trace has steps + 1 points.
Trace integrate(const VectorField& f, const Eigen::VectorXd& x0, double h, std::size_t steps);

inline constexpr std::size_t kTwistSamples = 256;

/// Largest angle between any two stored derivative directions, computed over
/// at most kTwistSamples uniformly thinned samples.
double twisting(const Trace& trace);

/// Angle between two nonzero vectors, with the cosine clamped to [-1, 1].
double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class StopReason { Twist, Dist };

struct ThetaDResult {
  Trace trace;
  Eigen::VectorXd endpoint;
  StopReason reason = StopReason::Dist;
};

struct ThetaDOptions {
  /// The step is the time needed to cover d / steps_per_distance at the
  /// initial speed.
  std::size_t steps_per_distance = 500;
  /// Stalled if neither trigger fires within this many steps.
  std::size_t max_steps = 200000;
};

/// Integrates until the twisting reaches theta or ||x - x0|| reaches d.
ThetaDResult theta_d_simulation(const VectorField& f, const Eigen::VectorXd& x0, double theta,
                                double d, const ThetaDOptions& options = {});

/// Step size used by theta_d_simulation from x0.
double theta_d_step(const VectorField& f, const Eigen::VectorXd& x0, double d,
                    const ThetaDOptions& options = {});

/// Comma-separated t, x1..xn rows with a header line.
std::string trace_csv(const Trace& trace, std::span<const std::string> names);

}  // namespace prbt

#endif  // PRBT_SIMULATE_HPP
