#include "prbt/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace prbt {

std::vector<Segment> zero_contour(const std::function<double(double, double)>& f, double x0,
                                  double x1, double y0, double y1, std::size_t nx, std::size_t ny) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("zero_contour: need at least 2 nodes per axis");
  std::vector<double> xs(nx), ys(ny), v(nx * ny);
  for (std::size_t a = 0; a < nx; ++a) xs[a] = x0 + (x1 - x0) * static_cast<double>(a) / static_cast<double>(nx - 1);
  for (std::size_t b = 0; b < ny; ++b) ys[b] = y0 + (y1 - y0) * static_cast<double>(b) / static_cast<double>(ny - 1);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) v[a * ny + b] = f(xs[a], ys[b]);

  std::vector<Segment> out;
  for (std::size_t a = 0; a + 1 < nx; ++a) {
    for (std::size_t b = 0; b + 1 < ny; ++b) {
      // Corners counter-clockwise from the lower left.
      const std::array<std::array<double, 2>, 4> p{{{xs[a], ys[b]}, {xs[a + 1], ys[b]},
                                                    {xs[a + 1], ys[b + 1]}, {xs[a], ys[b + 1]}}};
      const std::array<double, 4> val{v[a * ny + b], v[(a + 1) * ny + b], v[(a + 1) * ny + b + 1],
                                      v[a * ny + b + 1]};
      std::array<bool, 4> pos{};
      for (int k = 0; k < 4; ++k) pos[k] = val[k] > 0.0;
      // Edge k joins corner k and corner k + 1.
      std::array<std::array<double, 2>, 4> cut{};
      std::array<bool, 4> has{};
      int count = 0;
      for (int k = 0; k < 4; ++k) {
        const int m = (k + 1) % 4;
        if (pos[k] == pos[m]) continue;
        const double t = val[k] / (val[k] - val[m]);
        cut[k] = {p[k][0] + t * (p[m][0] - p[k][0]), p[k][1] + t * (p[m][1] - p[k][1])};
        has[k] = true;
        ++count;
      }
      if (count == 2) {
        int e[2], n = 0;
        for (int k = 0; k < 4; ++k)
          if (has[k]) e[n++] = k;
        out.push_back({cut[e[0]], cut[e[1]]});
      } else if (count == 4) {
        const bool center = (val[0] + val[1] + val[2] + val[3]) > 0.0;
        if (center == pos[0]) {
          out.push_back({cut[0], cut[1]});
          out.push_back({cut[2], cut[3]});
        } else {
          out.push_back({cut[3], cut[0]});
          out.push_back({cut[1], cut[2]});
        }
      }
    }
  }
  return out;
}

namespace {

constexpr double kWidth = 640, kHeight = 480, kMargin = 56;

struct View {
  double x0, x1, y0, y1;
  double sx(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double sy(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string rect(const View& w, const Box& b, std::size_t i, std::size_t j, const char* style) {
  const double x = w.sx(b.lo(i)), y = w.sy(b.hi(j));
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w.sx(b.hi(i)) - x) +
         "\" height=\"" + num(w.sy(b.lo(j)) - y) + "\" " + style + "/>\n";
}

}  // namespace

std::string plot_svg(const PiecewiseTube& prbt, const std::vector<Box>& unsafe, std::size_t i,
                     std::size_t j, std::size_t grid) {
  if (i == j) throw std::invalid_argument("plot: the two dimensions must differ");
  std::size_t dim = 0;
  if (!prbt.tubes.empty()) dim = prbt.tubes.front().enclosure.E.dim();
  else if (!unsafe.empty()) dim = unsafe.front().dim();
  if (dim > 0 && (i >= dim || j >= dim))
    throw std::invalid_argument("plot: dimensions out of range for a " + std::to_string(dim) + "-D model");

  std::vector<Box> all;
  for (const auto& t : prbt.tubes) {
    all.push_back(t.enclosure.E);
    all.push_back(t.init);
  }
  all.insert(all.end(), unsafe.begin(), unsafe.end());
  View w{0, 1, 0, 1};
  if (!all.empty()) {
    w = {all[0].lo(i), all[0].hi(i), all[0].lo(j), all[0].hi(j)};
    for (const auto& b : all) {
      w.x0 = std::min(w.x0, b.lo(i));
      w.x1 = std::max(w.x1, b.hi(i));
      w.y0 = std::min(w.y0, b.lo(j));
      w.y1 = std::max(w.y1, b.hi(j));
    }
    const double px = 0.05 * std::max(w.x1 - w.x0, 1e-9), py = 0.05 * std::max(w.y1 - w.y0, 1e-9);
    w = {w.x0 - px, w.x1 + px, w.y0 - py, w.y1 + py};
  }

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
       num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  s += "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kHeight - kMargin) + "\" x2=\"" + num(kWidth - kMargin) +
       "\" y2=\"" + num(kHeight - kMargin) + "\"/>\n";
  s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin) + "\" x2=\"" + num(kMargin) + "\" y2=\"" +
       num(kHeight - kMargin) + "\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = w.x0 + (w.x1 - w.x0) * k / 4.0, yv = w.y0 + (w.y1 - w.y0) * k / 4.0;
    s += "<text x=\"" + num(w.sx(xv)) + "\" y=\"" + num(kHeight - kMargin + 16) +
         "\" stroke=\"none\" text-anchor=\"middle\">" + label(xv) + "</text>\n";
    s += "<text x=\"" + num(kMargin - 6) + "\" y=\"" + num(w.sy(yv) + 4) +
         "\" stroke=\"none\" text-anchor=\"end\">" + label(yv) + "</text>\n";
  }
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight - 12) + "\" stroke=\"none\" text-anchor=\"middle\">x" +
       std::to_string(i + 1) + "</text>\n";
  s += "<text x=\"14\" y=\"" + num(kHeight / 2) + "\" stroke=\"none\" text-anchor=\"middle\">x" +
       std::to_string(j + 1) + "</text>\n";
  s += "</g>\n";

  for (const auto& u : unsafe)
    s += rect(w, u, i, j, "class=\"unsafe\" fill=\"#e34a33\" fill-opacity=\"0.35\" stroke=\"#b30000\"");

  for (std::size_t k = 0; k < prbt.tubes.size(); ++k) {
    const auto& t = prbt.tubes[k];
    const Box& e = t.enclosure.E;
    s += "<g class=\"tube\" id=\"tube-" + std::to_string(k) + "\">\n";
    s += rect(w, e, i, j, "class=\"enclosure\" fill=\"none\" stroke=\"#636363\" stroke-width=\"1\"");
    s += rect(w, t.init, i, j, "class=\"init\" fill=\"#3182bd\" fill-opacity=\"0.4\" stroke=\"#08519c\"");
    if (e.width(i) > 0.0 && e.width(j) > 0.0) {
      const Eigen::VectorXd c = e.center();
      std::size_t facet_certs = 0;
      for (const auto& f : t.enclosure.facets)
        if (f.certificate) ++facet_certs;
      std::size_t index = 0;
      for (const BarrierCertificate* cert : tube_certificates(t)) {
        const bool slab = index++ >= facet_certs;
        Eigen::VectorXd x = c;
        const auto segs = zero_contour(
            [&](double a, double b) {
              x(static_cast<Eigen::Index>(i)) = a;
              x(static_cast<Eigen::Index>(j)) = b;
              return cert->eval(x);
            },
            e.lo(i), e.hi(i), e.lo(j), e.hi(j), grid, grid);
        if (segs.empty()) continue;
        std::string d;
        for (const auto& sg : segs)
          d += "M" + num(w.sx(sg.a[0])) + " " + num(w.sy(sg.a[1])) + "L" + num(w.sx(sg.b[0])) + " " +
               num(w.sy(sg.b[1]));
        s += std::string("<path class=\"") + (slab ? "slab" : "facet") + "\" fill=\"none\" stroke=\"" +
             (slab ? "#e6550d" : "#31a354") + "\" stroke-width=\"1\" d=\"" + d + "\"/>\n";
      }
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace prbt
