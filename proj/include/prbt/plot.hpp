#ifndef PRBT_PLOT_HPP
#define PRBT_PLOT_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "prbt/box.hpp"
#include "prbt/pipeline.hpp"

namespace prbt {

struct Segment {
  std::array<double, 2> a, b;
};

/// Zero level set of f on an nx x ny node grid over [x0,x1] x [y0,y1] by
/// marching squares; saddle cells are resolved by the cell-center average.
std::vector<Segment> zero_contour(const std::function<double(double, double)>& f, double x0,
                                  double x1, double y0, double y1, std::size_t nx, std::size_t ny);

/// SVG projection onto state dimensions (i, j): every tube's E, the zero
/// curves of its certificates with the remaining coordinates at E's center,
/// every X0 and the given unsafe boxes. Output bytes depend only on inputs.
std::string plot_svg(const PiecewiseTube& prbt, const std::vector<Box>& unsafe, std::size_t i,
                     std::size_t j, std::size_t grid = 200);

}  // namespace prbt

#endif  // PRBT_PLOT_HPP
