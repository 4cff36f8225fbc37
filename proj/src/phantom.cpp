#include "tni/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tni {

namespace {

double bump(double x, double y, double cx, double cy, double width) {
  const double dx = x - cx, dy = y - cy;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
}

Vec two_bumps_re(const GridSpec& grid) {
  const double s = grid.extent / 10.0;  // phantom geometry is drawn on [0,10]^2
  Vec v(grid.node_count());
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i) {
      const double x = grid.x(i), y = grid.y(j);
      v(grid.node_id(i, j)) = 1.0 + bump(x, y, 3.5 * s, 6.5 * s, 1.2 * s) -
                              (2.0 / 3.0) * bump(x, y, 6.5 * s, 3.5 * s, 1.2 * s);
    }
  return v;
}

}  // namespace

ConductivityField phantom(const std::string& name, const GridSpec& grid) {
  grid.validate();
  ConductivityField f;
  if (name.rfind("constant:", 0) == 0) {
    const std::string spec = name.substr(9);
    const auto colon = spec.find(':');
    const double re = std::stod(spec.substr(0, colon));
    const double im = colon == std::string::npos ? 0.0 : std::stod(spec.substr(colon + 1));
    f.re = Vec::Constant(grid.node_count(), re);
    f.im = Vec::Constant(grid.node_count(), im);
  } else if (name == "two-bumps") {
    f.re = two_bumps_re(grid);
    f.im = Vec::Zero(grid.node_count());
  } else if (name == "complex-default") {
    const double s = grid.extent / 10.0;
    f.re = two_bumps_re(grid);
    f.im.resize(grid.node_count());
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i)
        f.im(grid.node_id(i, j)) =
            0.5 + 0.5 * bump(grid.x(i), grid.y(j), 5.0 * s, 5.0 * s, 1.5 * s);
  } else {
    throw std::invalid_argument("unknown phantom: " + name);
  }
  f.validate();
  return f;
}

Vec restrict_to_coarse(const Vec& fine_field, const GridSpec& fine, const GridSpec& coarse) {
  if (fine_field.size() != fine.node_count())
    throw std::invalid_argument("restrict_to_coarse: field/grid size mismatch");
  Vec out(coarse.node_count());
  const double half = 0.5 * coarse.dx();
  for (int cj = 0; cj < coarse.n; ++cj)
    for (int ci = 0; ci < coarse.n; ++ci) {
      const double cx = coarse.x(ci), cy = coarse.y(cj);
      // keep the box symmetric about the coarse node near the boundary so
      // the average stays unbiased for smooth fields
      const double hx = std::min({half, cx, coarse.extent - cx}) + 1e-12;
      const double hy = std::min({half, cy, coarse.extent - cy}) + 1e-12;
      const int ilo = std::max(0, static_cast<int>(std::ceil((cx - hx) / fine.dx())));
      const int ihi = std::min(fine.n - 1, static_cast<int>(std::floor((cx + hx) / fine.dx())));
      const int jlo = std::max(0, static_cast<int>(std::ceil((cy - hy) / fine.dy())));
      const int jhi = std::min(fine.n - 1, static_cast<int>(std::floor((cy + hy) / fine.dy())));
      double acc = 0.0;
      int count = 0;
      for (int j = jlo; j <= jhi; ++j)
        for (int i = ilo; i <= ihi; ++i) {
          acc += fine_field(fine.node_id(i, j));
          ++count;
        }
      if (count == 0) {  // no fine node in the box; take the nearest one
        const int i = std::clamp(static_cast<int>(std::lround(cx / fine.dx())), 0, fine.n - 1);
        const int j = std::clamp(static_cast<int>(std::lround(cy / fine.dy())), 0, fine.n - 1);
        acc = fine_field(fine.node_id(i, j));
        count = 1;
      }
      out(coarse.node_id(ci, cj)) = acc / count;
    }
  return out;
}

}  // namespace tni
