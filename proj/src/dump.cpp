#include "prbt/dump.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace prbt {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
  return v;
}

json box_json(const Box& b) {
  json a = json::array();
  for (std::size_t i = 0; i < b.dim(); ++i) a.push_back({b.lo(i), b.hi(i)});
  return a;
}

Box box_from(const json& a) {
  Eigen::VectorXd lo(static_cast<Eigen::Index>(a.size())), hi(lo.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo(static_cast<Eigen::Index>(i)) = a.at(i).at(0).get<double>();
    hi(static_cast<Eigen::Index>(i)) = a.at(i).at(1).get<double>();
  }
  return Box(lo, hi);
}

const char* side_name(Side s) { return s == Side::Low ? "low" : "high"; }

Side side_from(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "low") return Side::Low;
  if (s == "high") return Side::High;
  throw DumpError("side must be \"low\" or \"high\", got \"" + s + "\"");
}

json frame_json(const AffineFrame& f) {
  return {{"center", vector_json(f.center)}, {"radius", vector_json(f.radius)}};
}

AffineFrame frame_from(const json& j) {
  return {vector_from(j.at("center")), vector_from(j.at("radius"))};
}

json cert_json(const BarrierCertificate& c) {
  json terms = json::array();
  for (const auto& [m, coef] : c.local.terms()) terms.push_back({{"exp", m.exponents()}, {"coef", coef}});
  return {
      {"degree", c.degree},
      {"terms", terms},
      {"frame", frame_json(c.frame)},
      {"uncertainty_frame", frame_json(c.uncertainty_frame)},
      {"coefficients", c.coefficients},
      {"lambdas", {{"init", c.lambdas[0]}, {"lie", c.lambdas[1]}, {"target", c.lambdas[2]}}},
      {"lie_at_vertices", c.lie_at_vertices},
      {"orders", c.orders},
      {"eps", c.epsilon},
      {"init", box_json(c.init)},
      {"domain", box_json(c.domain)},
      {"uncertainty", box_json(c.uncertainty)},
      {"target", box_json(c.target)},
  };
}

BarrierCertificate cert_from(const json& j) {
  BarrierCertificate c;
  c.degree = j.at("degree").get<unsigned>();
  c.frame = frame_from(j.at("frame"));
  c.uncertainty_frame = frame_from(j.at("uncertainty_frame"));
  c.local = Polynomial(c.frame.dim());
  for (const auto& t : j.at("terms")) {
    const auto e = t.at("exp").get<std::vector<unsigned>>();
    if (e.size() != c.frame.dim()) throw DumpError("term exponent length mismatch");
    c.local.add_term(Monomial(std::span<const unsigned>(e)), t.at("coef").get<double>());
  }
  c.coefficients = j.at("coefficients").get<std::vector<double>>();
  const json& l = j.at("lambdas");
  c.lambdas = {l.at("init").get<std::vector<double>>(), l.at("lie").get<std::vector<double>>(),
               l.at("target").get<std::vector<double>>()};
  c.lie_at_vertices = j.at("lie_at_vertices").get<bool>();
  c.orders = j.at("orders").get<std::array<unsigned, 3>>();
  c.epsilon = j.at("eps").get<std::array<double, 3>>();
  c.init = box_from(j.at("init"));
  c.domain = box_from(j.at("domain"));
  c.uncertainty = box_from(j.at("uncertainty"));
  c.target = box_from(j.at("target"));
  return c;
}

json params_json(const ReachParams& p) {
  json j = {
      {"tubes", p.tubes},
      {"theta0", p.theta0},
      {"eps_rel", p.eps_rel},
      {"degrees", p.certify.degrees},
      {"epsilon", p.certify.epsilon},
      {"queue_budget", p.queue_budget},
  };
  j["dist0"] = p.dist0 ? json(*p.dist0) : json("auto");
  j["theta_min"] = p.theta_min ? json(*p.theta_min) : json("auto");
  j["orders"] = p.certify.orders ? json(*p.certify.orders) : json("auto");
  return j;
}

ReachParams params_from(const json& j) {
  ReachParams p;
  p.tubes = j.at("tubes").get<std::size_t>();
  p.theta0 = j.at("theta0").get<double>();
  p.eps_rel = j.at("eps_rel").get<double>();
  p.certify.degrees = j.at("degrees").get<std::vector<unsigned>>();
  p.certify.epsilon = j.at("epsilon").get<std::array<double, 3>>();
  p.queue_budget = j.at("queue_budget").get<std::size_t>();
  if (!j.at("dist0").is_string()) p.dist0 = j.at("dist0").get<double>();
  if (!j.at("theta_min").is_string()) p.theta_min = j.at("theta_min").get<double>();
  if (!j.at("orders").is_string()) p.certify.orders = j.at("orders").get<std::array<unsigned, 3>>();
  return p;
}

json cert_ref(std::optional<std::size_t> k) { return k ? json(*k) : json(nullptr); }

}  // namespace

std::string dump_json(const PiecewiseTube& prbt, const ReachParams& params) {
  json tubes = json::array();
  for (const auto& t : prbt.tubes) {
    json certs = json::array();
    auto add = [&](const std::optional<BarrierCertificate>& c) -> std::optional<std::size_t> {
      if (!c) return std::nullopt;
      certs.push_back(cert_json(*c));
      return certs.size() - 1;
    };
    json facets = json::array();
    for (const auto& f : t.enclosure.facets)
      facets.push_back({{"dim", f.dim}, {"side", side_name(f.side)}, {"cert", cert_ref(add(f.certificate))}});
    json slabs = json::array();
    for (const auto& s : t.slabs) {
      slabs.push_back({{"dim", s.aux.dim},
                       {"side", side_name(s.aux.side)},
                       {"facet", box_json(s.aux.facet)},
                       {"outer", s.aux.outer},
                       {"inner", s.aux.inner},
                       {"probes", s.probes},
                       {"cert", cert_ref(add(s.certificate))}});
    }
    const auto& e = t.enclosure;
    tubes.push_back({
        {"mode", t.mode},
        {"E", box_json(e.E)},
        {"exit", {{"dim", e.exit.dim}, {"side", side_name(e.exit.side)}, {"value", e.exit.value}}},
        {"G", box_json(e.G)},
        {"X0", box_json(t.init)},
        {"X0_prime", box_json(t.exit_region)},
        {"center_stop", e.center_stop == StopReason::Twist ? "twist" : "dist"},
        {"bloat_rounds", e.bloat_rounds},
        {"facets", facets},
        {"slabs", slabs},
        {"certs", certs},
    });
  }
  json events = json::array();
  for (const auto& ev : prbt.events) {
    events.push_back({{"transition", ev.transition},
                      {"from", ev.from},
                      {"to", ev.to},
                      {"before_tube", ev.before_tube},
                      {"crossing", box_json(ev.crossing)},
                      {"image", box_json(ev.image)},
                      {"queue_pops", ev.queue_pops}});
  }
  const json doc = {
      {"model", prbt.model},
      {"params", params_json(params)},
      {"termination", to_string(prbt.termination)},
      {"message", prbt.message},
      {"tubes", tubes},
      {"events", events},
  };
  return doc.dump(1) + "\n";
}

TubeDump parse_dump(std::string_view text) {
  try {
    const json doc = json::parse(text);
    TubeDump out;
    out.prbt.model = doc.at("model").get<std::string>();
    out.params = params_from(doc.at("params"));
    out.prbt.message = doc.at("message").get<std::string>();
    const auto term = doc.at("termination").get<std::string>();
    bool known = false;
    for (Termination t : {Termination::CountReached, Termination::ThetaFloor, Termination::RbtFail,
                          Termination::GuardEvent, Termination::HybridFail}) {
      if (term == to_string(t)) {
        out.prbt.termination = t;
        known = true;
      }
    }
    if (!known) throw DumpError("unknown termination \"" + term + "\"");
    for (const auto& jt : doc.at("tubes")) {
      std::vector<BarrierCertificate> certs;
      for (const auto& c : jt.at("certs")) certs.push_back(cert_from(c));
      auto cert_at = [&](const json& ref) -> std::optional<BarrierCertificate> {
        if (ref.is_null()) return std::nullopt;
        return certs.at(ref.get<std::size_t>());
      };
      RobustBarrierTube t;
      t.mode = jt.at("mode").get<std::string>();
      t.init = box_from(jt.at("X0"));
      t.exit_region = box_from(jt.at("X0_prime"));
      EnclosureBox& e = t.enclosure;
      e.E = box_from(jt.at("E"));
      e.G = box_from(jt.at("G"));
      const json& ex = jt.at("exit");
      e.exit = {ex.at("dim").get<std::size_t>(), side_from(ex.at("side")), ex.at("value").get<double>()};
      e.center_stop = jt.at("center_stop").get<std::string>() == "twist" ? StopReason::Twist : StopReason::Dist;
      e.bloat_rounds = jt.at("bloat_rounds").get<std::size_t>();
      for (const auto& f : jt.at("facets"))
        e.facets.push_back({f.at("dim").get<std::size_t>(), side_from(f.at("side")), cert_at(f.at("cert"))});
      for (const auto& s : jt.at("slabs")) {
        SlabCertificate sc;
        sc.aux.dim = s.at("dim").get<std::size_t>();
        sc.aux.side = side_from(s.at("side"));
        sc.aux.facet = box_from(s.at("facet"));
        sc.aux.outer = s.at("outer").get<double>();
        sc.aux.inner = s.at("inner").get<double>();
        sc.probes = s.at("probes").get<std::size_t>();
        sc.certificate = cert_at(s.at("cert"));
        t.slabs.push_back(std::move(sc));
      }
      out.prbt.tubes.push_back(std::move(t));
    }
    for (const auto& je : doc.at("events")) {
      GuardEventRecord ev;
      ev.transition = je.at("transition").get<std::size_t>();
      ev.from = je.at("from").get<std::string>();
      ev.to = je.at("to").get<std::string>();
      ev.before_tube = je.at("before_tube").get<std::size_t>();
      ev.crossing = box_from(je.at("crossing"));
      ev.image = box_from(je.at("image"));
      ev.queue_pops = je.at("queue_pops").get<std::size_t>();
      out.prbt.events.push_back(std::move(ev));
    }
    return out;
  } catch (const json::exception& e) {
    throw DumpError(std::string("tube dump: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DumpError(std::string("tube dump: ") + e.what());
  }
}

TubeDump load_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DumpError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_dump(s.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace prbt
