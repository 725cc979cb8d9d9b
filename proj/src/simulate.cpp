#include "prbt/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace prbt {

namespace {

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

TracePoint sample(const VectorField& f, double t, const Eigen::VectorXd& x) {
  return {t, x, f(x)};
}

}  // namespace

VectorField fixed_input_field(std::span<const Polynomial> dynamics, const Eigen::VectorXd& u) {
  std::vector<Polynomial> fs(dynamics.begin(), dynamics.end());
  return [fs = std::move(fs), u](const Eigen::VectorXd& x) {
    Eigen::VectorXd z(x.size() + u.size());
    z << x, u;
    Eigen::VectorXd out(static_cast<Eigen::Index>(fs.size()));
    for (std::size_t i = 0; i < fs.size(); ++i) out(static_cast<Eigen::Index>(i)) = fs[i].eval(z);
    return out;
  };
}

Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd k1 = f(x);
  const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trace integrate(const VectorField& f, const Eigen::VectorXd& x0, double h, std::size_t steps) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate: step must be positive");
  Trace tr;
  tr.points.reserve(steps + 1);
  tr.points.push_back(sample(f, 0.0, x0));
  for (std::size_t k = 1; k <= steps; ++k) {
    const Eigen::VectorXd x = rk4_step(f, tr.back().x, h);
    TracePoint p = sample(f, static_cast<double>(k) * h, x);
    if (!finite(p.x) || !finite(p.dx)) {
      throw SimulationError(SimulationFailure::Diverged,
                            "state diverged at t = " + std::to_string(p.t), std::move(tr));
    }
    tr.points.push_back(std::move(p));
  }
  return tr;
}

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double twisting(const Trace& trace) {
  if (trace.size() < 2) throw std::invalid_argument("twisting: need at least two samples");
  const std::size_t n = trace.size();
  const std::size_t m = std::min(n, kTwistSamples);
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    // Uniform thinning that keeps both ends.
    const std::size_t idx = m == 1 ? 0 : (k * (n - 1)) / (m - 1);
    const Eigen::VectorXd& dx = trace.points[idx].dx;
    const double norm = dx.norm();
    if (norm == 0.0) {
      throw SimulationError(SimulationFailure::Equilibrium,
                            "zero derivative at t = " + std::to_string(trace.points[idx].t), trace);
    }
    dirs.push_back(dx / norm);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = i + 1; j < dirs.size(); ++j)
      best = std::max(best, std::acos(std::clamp(dirs[i].dot(dirs[j]), -1.0, 1.0)));
  return best;
}

double theta_d_step(const VectorField& f, const Eigen::VectorXd& x0, double d,
                    const ThetaDOptions& options) {
  const double speed = f(x0).norm();
  if (!std::isfinite(speed)) {
    throw SimulationError(SimulationFailure::Diverged, "non-finite derivative at start", {});
  }
  if (speed == 0.0) {
    Trace tr;
    tr.points.push_back({0.0, x0, f(x0)});
    throw SimulationError(SimulationFailure::Equilibrium, "start point is an equilibrium", tr);
  }
  return d / (static_cast<double>(options.steps_per_distance) * speed);
}

ThetaDResult theta_d_simulation(const VectorField& f, const Eigen::VectorXd& x0, double theta,
                                double d, const ThetaDOptions& options) {
  if (!(theta > 0.0) || !(d > 0.0))
    throw std::invalid_argument("theta_d_simulation: theta and d must be positive");
  const double h = theta_d_step(f, x0, d, options);
  constexpr double kDistSlack = 1e-9;

  ThetaDResult res;
  res.trace.points.push_back(sample(f, 0.0, x0));
  const double speed0 = res.trace.back().dx.norm();

  // Thinned reference directions for incremental twisting; the stride doubles
  // whenever the set outgrows kTwistSamples.
  std::vector<Eigen::VectorXd> refs{res.trace.back().dx / speed0};
  std::size_t stride = 1;
  double twist = 0.0;

  for (std::size_t k = 1; k <= options.max_steps; ++k) {
    const Eigen::VectorXd x = rk4_step(f, res.trace.back().x, h);
    TracePoint p = sample(f, static_cast<double>(k) * h, x);
    if (!finite(p.x) || !finite(p.dx)) {
      throw SimulationError(SimulationFailure::Diverged,
                            "state diverged at t = " + std::to_string(p.t), std::move(res.trace));
    }
    const double speed = p.dx.norm();
    if (speed <= 1e-12 * speed0) {
      res.trace.points.push_back(std::move(p));
      throw SimulationError(SimulationFailure::Equilibrium, "trajectory came to rest",
                            std::move(res.trace));
    }
    const Eigen::VectorXd dir = p.dx / speed;
    for (const auto& r : refs) twist = std::max(twist, std::acos(std::clamp(r.dot(dir), -1.0, 1.0)));
    const double dist = (p.x - x0).norm();
    res.trace.points.push_back(std::move(p));

    if (twist >= theta) {
      res.reason = StopReason::Twist;
      res.endpoint = res.trace.back().x;
      return res;
    }
    if (dist >= d * (1.0 - kDistSlack)) {
      res.reason = StopReason::Dist;
      res.endpoint = res.trace.back().x;
      return res;
    }
    if (k % stride == 0) {
      refs.push_back(dir);
      if (refs.size() > kTwistSamples) {
        std::vector<Eigen::VectorXd> kept;
        for (std::size_t i = 0; i < refs.size(); i += 2) kept.push_back(refs[i]);
        refs = std::move(kept);
        stride *= 2;
      }
    }
  }
  throw SimulationError(SimulationFailure::Stalled,
                        "neither twisting nor distance reached within " +
                            std::to_string(options.max_steps) + " steps",
                        std::move(res.trace));
}

std::string trace_csv(const Trace& trace, std::span<const std::string> names) {
  std::ostringstream out;
  out << 't';
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (const auto& p : trace.points) {
    std::snprintf(buf, sizeof buf, "%.17g", p.t);
    out << buf;
    for (Eigen::Index i = 0; i < p.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p.x(i));
      out << ',' << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace prbt
