#include "prbt/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "prbt/dump.hpp"
#include "prbt/hybrid.hpp"
#include "prbt/plot.hpp"

namespace prbt {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model, out, svg, dump, lp_dump;
  std::string dist0 = "auto", theta_min = "auto", orders = "auto";
  std::vector<std::size_t> dims{0, 1};
  std::vector<unsigned> degrees{1, 2, 3, 4};
  std::vector<double> epsilon{1.0, 1.0, 1.0};
  std::size_t tubes = 10, grid = 5, mc = 0, check_mc = 100;
  std::uint64_t seed = 1;
  double theta0 = 0.3, eps_rel = 0.01;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(const Box& b) {
  std::string s;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i) s += "x";
    s += "[" + fmt(b.lo(i)) + "," + fmt(b.hi(i)) + "]";
  }
  return s;
}

std::optional<double> auto_or_number(const std::string& s, const char* flag) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !(v > 0.0)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string(flag) + " must be a positive number or \"auto\", got \"" + s + "\"");
  }
}

std::optional<std::array<unsigned, 3>> parse_orders(const std::string& s) {
  if (s == "auto") return std::nullopt;
  std::array<unsigned, 3> o{};
  std::istringstream in(s);
  std::string part;
  std::size_t k = 0;
  while (std::getline(in, part, ',')) {
    if (k >= 3) throw UsageError("--orders takes three values");
    try {
      const int v = std::stoi(part);
      if (v < 1) throw std::invalid_argument(part);
      o[k++] = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      throw UsageError("--orders: bad value \"" + part + "\"");
    }
  }
  if (k != 3) throw UsageError("--orders takes three values or \"auto\"");
  return o;
}

ReachParams reach_params(const Options& o) {
  if (o.degrees.empty() || !std::is_sorted(o.degrees.begin(), o.degrees.end()) ||
      std::adjacent_find(o.degrees.begin(), o.degrees.end()) != o.degrees.end() || o.degrees.front() < 1)
    throw UsageError("--degrees must be a non-empty strictly ascending list of positive integers");
  if (o.epsilon.size() != 3 || std::any_of(o.epsilon.begin(), o.epsilon.end(), [](double e) { return !(e > 0.0); }))
    throw UsageError("--epsilon takes three positive values");
  if (!(o.theta0 > 0.0) || !(o.eps_rel > 0.0) || !(o.eps_rel < 1.0))
    throw UsageError("--theta0 must be positive and --eps-rel in (0, 1)");
  if (o.tubes < 1) throw UsageError("--tubes must be at least 1");
  ReachParams p;
  p.tubes = o.tubes;
  p.theta0 = o.theta0;
  p.dist0 = auto_or_number(o.dist0, "--dist0");
  p.theta_min = auto_or_number(o.theta_min, "--theta-min");
  if (p.theta_min && *p.theta_min > p.theta0) throw UsageError("--theta-min exceeds --theta0");
  p.eps_rel = o.eps_rel;
  p.certify.degrees = o.degrees;
  std::copy(o.epsilon.begin(), o.epsilon.end(), p.certify.epsilon.begin());
  p.certify.orders = parse_orders(o.orders);
  p.certify.lp_dump = o.lp_dump;
  return p;
}

std::vector<Box> unsafe_boxes(const HybridModel& m) {
  std::vector<Box> out;
  for (const auto& u : m.unsafe) out.push_back(u.box);
  return out;
}

double mc_dist0(const HybridModel& model, const ReachParams& p) {
  return p.resolved_dist0(model.mode(model.init_mode).invariant);
}

void check_dims(const Options& o, std::size_t n) {
  if (o.dims.size() != 2 || o.dims[0] == o.dims[1] || o.dims[0] >= n || o.dims[1] >= n)
    throw UsageError("--dims needs two different indices below " + std::to_string(n));
}

void print_tubes(const PiecewiseTube& prbt, std::ostream& out) {
  std::size_t next_event = 0;
  for (std::size_t k = 0; k < prbt.tubes.size(); ++k) {
    while (next_event < prbt.events.size() && prbt.events[next_event].before_tube == k) {
      const auto& ev = prbt.events[next_event++];
      out << "event " << ev.from << " -> " << ev.to << " crossing " << fmt(ev.crossing) << " image "
          << fmt(ev.image) << " pops " << ev.queue_pops << "\n";
    }
    const auto& t = prbt.tubes[k];
    const auto& e = t.enclosure;
    out << "tube " << k << " mode " << t.mode << " E " << fmt(e.E) << " exit "
        << facet_name(e.exit.dim, e.exit.side) << " = " << fmt(e.exit.value) << " X0' " << fmt(t.exit_region)
        << " certificates " << tube_certificates(t).size() << "\n";
  }
  out << "termination " << to_string(prbt.termination);
  if (!prbt.message.empty()) out << ": " << prbt.message;
  out << "\n";
}

int report_mc(const ViolationReport& r, std::uint64_t seed, std::ostream& out) {
  out << "monte-carlo seed " << seed << ": " << r.trajectories << " trajectories, " << r.violations()
      << " violations (barrier " << r.negative_barrier << ", exit " << r.exit_outside << ", facet "
      << r.facet_escape << ", image " << r.image_outside << "), completed " << r.completed
      << ", left invariant " << r.left_invariant << ", guard crossings " << r.guard_crossings << "\n";
  for (const auto& d : r.details) out << "  " << d << "\n";
  return r.violations() == 0 ? kExitOk : kExitFailure;
}

unsigned safety_order(const ReachParams& p) { return std::max(2U, p.certify.degrees.back()); }

int report_safety(const PiecewiseTube& prbt, const HybridModel& model, unsigned order, std::ostream& out) {
  if (model.unsafe.empty()) return kExitOk;
  const auto v = check_safety(prbt, model.unsafe, order);
  if (v.safe) {
    out << "safety SAFE (" << v.positivity_proofs << " positivity proofs)\n";
    return kExitOk;
  }
  out << "safety UNKNOWN at tube " << *v.failing_tube << "\n";
  return kExitUnknown;
}

int cmd_reach(const Options& o, std::ostream& out) {
  const ReachParams p = reach_params(o);
  const HybridModel model = load_model(o.model);
  if (!o.svg.empty()) check_dims(o, model.state_dim());
  const PiecewiseTube prbt =
      model.is_continuous() ? compute_prbt(model.continuous(), p) : compute_hybrid_prbt(model, p);
  print_tubes(prbt, out);
  if (!o.out.empty()) write_text(o.out, dump_json(prbt, p));
  if (!o.svg.empty()) write_text(o.svg, plot_svg(prbt, unsafe_boxes(model), o.dims[0], o.dims[1]));
  int code = prbt.termination == Termination::CountReached ? kExitOk : kExitFailure;
  if (o.mc > 0 && !prbt.tubes.empty())
    code = std::max(code, report_mc(monte_carlo_validate(model, prbt, o.mc, o.seed, mc_dist0(model, p)), o.seed, out));
  if (code == kExitOk) code = report_safety(prbt, model, safety_order(p), out);
  return code;
}

int cmd_certify(const Options& o, std::ostream& out) {
  const ReachParams p = reach_params(o);
  const HybridModel model = load_model(o.model);
  const ContinuousModel cm = model.continuous();
  if (cm.unsafe.empty()) throw UsageError("certify needs an unsafe set in the initial mode");
  const CertifyResult r = find_robust_barrier(cm.init, cm.invariant, cm.uncertainty, cm.unsafe.front(),
                                              cm.dynamics, p.certify);
  if (!r) {
    out << "no certificate found";
    if (!r.message.empty()) out << ": " << r.message;
    out << "\n";
    return kExitFailure;
  }
  const BarrierCertificate& c = *r.certificate;
  const VerifyReport v = verify_certificate(c, cm.dynamics, o.grid);
  out << "degree " << c.degree << " orders " << c.orders[0] << "," << c.orders[1] << "," << c.orders[2] << "\n";
  out << "B = " << to_string(c.global(), cm.state_vars) << "\n";
  out << "residual " << fmt(v.residual) << " min lambda " << fmt(v.min_lambda) << "\n";
  out << "grid " << o.grid << ": min B on X0 " << fmt(v.min_init) << ", min Lie " << fmt(v.min_lie)
      << ", max B on unsafe " << fmt(v.max_target) << ": " << (v.pass ? "PASS" : "FAIL") << "\n";
  return v.pass ? kExitOk : kExitFailure;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const ReachParams p = reach_params(o);
  const HybridModel model = load_model(o.model);
  const ContinuousModel cm = model.continuous();
  const VectorField f = fixed_input_field(cm.dynamics, cm.uncertainty.center());
  Trace trace;
  int code = kExitOk;
  try {
    trace = theta_d_simulation(f, cm.init.center(), p.theta0, p.resolved_dist0(cm.invariant)).trace;
  } catch (const SimulationError& e) {
    out << "simulation stopped: " << e.what() << "\n";
    trace = e.partial();
    code = kExitFailure;
  }
  const std::string csv = trace_csv(trace, cm.state_vars);
  if (o.out.empty()) out << csv;
  else write_text(o.out, csv);
  return code;
}

int cmd_check(const Options& o, std::ostream& out) {
  const HybridModel model = load_model(o.model);
  const TubeDump d = load_dump(o.dump);
  const PiecewiseTube& prbt = d.prbt;
  int code = kExitOk;
  std::size_t certs = 0, failed = 0;
  for (std::size_t k = 0; k < prbt.tubes.size(); ++k) {
    const auto& t = prbt.tubes[k];
    const auto& dyn = model.mode(t.mode).dynamics;
    for (const BarrierCertificate* c : tube_certificates(t)) {
      ++certs;
      const double res = certificate_residual(*c, dyn);
      const double lam = min_lambda(*c);
      const VerifyReport v = verify_certificate(*c, dyn, o.grid);
      if (res <= kResidualTolerance && lam >= kLambdaTolerance && v.pass) continue;
      ++failed;
      out << "tube " << k << ": certificate fails (residual " << fmt(res) << ", min lambda " << fmt(lam)
          << ", grid " << (v.pass ? "PASS" : "FAIL") << ")\n";
    }
    if (k + 1 < prbt.tubes.size()) {
      const auto ev = std::find_if(prbt.events.begin(), prbt.events.end(),
                                   [&](const GuardEventRecord& e) { return e.before_tube == k + 1; });
      const Box& expected = ev != prbt.events.end() ? ev->image : t.exit_region;
      if (!(prbt.tubes[k + 1].init == expected)) {
        ++failed;
        out << "tube " << k + 1 << ": initial set does not match the previous exit region\n";
      }
    }
  }
  out << "certificates " << certs << ", failures " << failed << "\n";
  if (failed > 0) code = kExitFailure;
  if (o.check_mc > 0 && !prbt.tubes.empty())
    code = std::max(code, report_mc(monte_carlo_validate(model, prbt, o.check_mc, o.seed, mc_dist0(model, d.params)),
                                    o.seed, out));
  if (code == kExitOk) code = report_safety(prbt, model, safety_order(d.params), out);
  out << (code == kExitOk ? "check PASS" : code == kExitUnknown ? "check PASS, safety UNKNOWN" : "check FAIL") << "\n";
  return code;
}

int cmd_plot(const Options& o, std::ostream& out) {
  const TubeDump d = load_dump(o.dump);
  std::vector<Box> unsafe;
  std::size_t n = d.prbt.tubes.empty() ? 0 : d.prbt.tubes.front().enclosure.E.dim();
  if (!o.model.empty()) {
    const HybridModel model = load_model(o.model);
    unsafe = unsafe_boxes(model);
    n = model.state_dim();
  }
  if (n > 0) check_dims(o, n);
  else if (o.dims.size() != 2 || o.dims[0] == o.dims[1]) throw UsageError("--dims needs two different indices");
  const std::string svg = plot_svg(d.prbt, unsafe, o.dims[0], o.dims[1]);
  if (o.svg.empty()) out << svg;
  else write_text(o.svg, svg);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Piecewise robust barrier tube reachability"};
  app.require_subcommand(1);
  Options o;

  auto model_flag = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--model", o.model, "Model JSON file");
    if (required) opt->required();
  };
  auto certify_flags = [&](CLI::App* c) {
    c->add_option("--degrees", o.degrees, "Candidate degrees, ascending")->delimiter(',');
    c->add_option("--epsilon", o.epsilon, "Strictness margins e1,e2,e3")->delimiter(',');
    c->add_option("--orders", o.orders, "Handelman orders m1,m2,m3 or auto");
    c->add_option("--lp-dump", o.lp_dump, "Write every LP as PATH.<k>.mps");
  };
  auto sim_flags = [&](CLI::App* c) {
    c->add_option("--theta0", o.theta0, "Initial twisting bound");
    c->add_option("--dist0", o.dist0, "Initial distance bound or auto");
  };

  auto* reach = app.add_subcommand("reach", "Compute a piecewise robust barrier tube");
  model_flag(reach, true);
  certify_flags(reach);
  sim_flags(reach);
  reach->add_option("--tubes", o.tubes, "Number of tubes");
  reach->add_option("--theta-min", o.theta_min, "Smallest twisting bound or auto");
  reach->add_option("--eps-rel", o.eps_rel, "Relative bisection tolerance");
  reach->add_option("--out", o.out, "Tube dump path");
  reach->add_option("--svg", o.svg, "SVG plot path");
  reach->add_option("--dims", o.dims, "Plot dimensions i,j (0-based)")->delimiter(',');
  reach->add_option("--mc", o.mc, "Monte-Carlo trajectories (0 = off)");
  reach->add_option("--seed", o.seed, "Monte-Carlo seed");

  auto* certify = app.add_subcommand("certify", "Search one robust barrier certificate for X0, I, U and the first unsafe set");
  model_flag(certify, true);
  certify_flags(certify);
  certify->add_option("--grid", o.grid, "Verification grid points per dimension");

  auto* simulate = app.add_subcommand("simulate", "Export a (theta, d)-simulation trace as CSV");
  model_flag(simulate, true);
  sim_flags(simulate);
  simulate->add_option("--out", o.out, "CSV path (default: standard output)");

  auto* check = app.add_subcommand("check", "Re-verify a tube dump");
  model_flag(check, true);
  check->add_option("--dump", o.dump, "Tube dump to check")->required();
  check->add_option("--grid", o.grid, "Sign-check grid points per dimension");
  check->add_option("--mc", o.check_mc, "Monte-Carlo trajectories (0 = off)");
  check->add_option("--seed", o.seed, "Monte-Carlo seed");

  auto* plot = app.add_subcommand("plot", "Draw a tube dump as SVG");
  model_flag(plot, false);
  plot->add_option("--dump", o.dump, "Tube dump to draw")->required();
  plot->add_option("--svg", o.svg, "SVG path (default: standard output)");
  plot->add_option("--dims", o.dims, "Plot dimensions i,j (0-based)")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (reach->parsed()) return cmd_reach(o, out);
    if (certify->parsed()) return cmd_certify(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (check->parsed()) return cmd_check(o, out);
    if (plot->parsed()) return cmd_plot(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DumpError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, out, err);
}

}  // namespace prbt
