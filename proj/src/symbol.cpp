#include "tni/symbol.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace tni {

namespace {

constexpr Complex kI{0.0, 1.0};

Complex dot_ixi(const CVec2& f, const Vec2& xi) { return kI * (f.x() * xi.x() + f.y() * xi.y()); }

double abs2(const CVec2& f) { return std::norm(f.x()) + std::norm(f.y()); }

double dot_abs2(const CVec2& f, const Vec2& xi) {
  return std::norm(f.x() * xi.x() + f.y() * xi.y());
}

double condition_of(const CMat& m, double cap) {
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > smax * 1e-15) || !std::isfinite(smax)) return cap;
  return std::min(smax / smin, cap);
}

ConditionMap condition_map_impl(const std::vector<GradientField>& fields,
                                const ConductivityField& sigma, SymbolKind kind,
                                int num_directions, double cap, bool parallel) {
  if (fields.empty()) throw std::invalid_argument("condition_map: need at least one field");
  if (num_directions < 4) throw std::invalid_argument("condition_map: need at least 4 directions");
  const int nn = static_cast<int>(fields[0].fx.size());
  const int nexp = static_cast<int>(fields.size());
  const std::vector<Vec2> xis = unit_directions(num_directions);

  ConditionMap map;
  map.directions = num_directions;
  map.cap = cap;
  map.values.resize(nn);

#pragma omp parallel for schedule(static) if (parallel)
  for (int p = 0; p < nn; ++p) {
    double worst = 1.0;
    if (kind == SymbolKind::Real) {
      std::vector<Vec2> f(nexp);
      for (int i = 0; i < nexp; ++i)
        f[i] = Vec2(fields[i].fx(p).real(), fields[i].fy(p).real());
      for (const auto& xi : xis)
        worst = std::max(worst, condition_of(real_symbol(f, sigma.re(p), xi), cap));
    } else {
      std::vector<CVec2> f(nexp);
      for (int i = 0; i < nexp; ++i) f[i] = CVec2(fields[i].fx(p), fields[i].fy(p));
      const double sp = sigma.re(p);
      const double spp = sigma.im.size() != 0 ? sigma.im(p) : 0.0;
      for (const auto& xi : xis)
        worst = std::max(worst, condition_of(complex_symbol(f, sp, spp, xi), cap));
    }
    map.values(p) = worst;
  }
  return map;
}

}  // namespace

std::vector<GradientField> field_gradients(const std::vector<PotentialField>& us,
                                           const GridOps& ops) {
  std::vector<GradientField> out;
  out.reserve(us.size());
  for (const auto& u : us) {
    if (u.n != ops.grid.n) throw std::invalid_argument("field_gradients: grid mismatch");
    GradientField g;
    g.fx = ops.interp.n1.cast<Complex>() * (ops.diff.d1.cast<Complex>() * u.u);
    g.fy = ops.interp.n2.cast<Complex>() * (ops.diff.d2.cast<Complex>() * u.u);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Vec2> unit_directions(int count) {
  if (count < 1) throw std::invalid_argument("unit_directions: count must be positive");
  std::vector<Vec2> xs;
  xs.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double t = 2.0 * 3.14159265358979323846 * k / count;
    xs.emplace_back(std::cos(t), std::sin(t));
  }
  return xs;
}

CMat real_symbol(const std::vector<Vec2>& F, double sigma, const Vec2& xi) {
  const int n = static_cast<int>(F.size());
  if (n < 1) throw std::invalid_argument("real_symbol: need at least one experiment");
  if (!(xi.norm() > 0.0)) throw std::invalid_argument("real_symbol: xi must be nonzero");
  const double xi2 = xi.squaredNorm();
  CMat a = CMat::Zero(2 * n, n + 1);
  for (int i = 0; i < n; ++i) {
    const Complex f_ixi = kI * F[i].dot(xi);
    a(2 * i, 0) = F[i].squaredNorm();
    a(2 * i, 1 + i) = 2.0 * sigma * f_ixi;
    a(2 * i + 1, 0) = f_ixi;
    a(2 * i + 1, 1 + i) = -sigma * xi2;
  }
  return a;
}

CMat complex_symbol(const std::vector<CVec2>& F, double sigma_re, double sigma_im,
                    const Vec2& xi) {
  const int n = static_cast<int>(F.size());
  if (n < 1) throw std::invalid_argument("complex_symbol: need at least one experiment");
  if (!(xi.norm() > 0.0)) throw std::invalid_argument("complex_symbol: xi must be nonzero");
  const double xi2 = xi.squaredNorm();
  CMat a = CMat::Zero(3 * n, 2 + 2 * n);
  for (int j = 0; j < n; ++j) {
    const CVec2 fp(F[j].x().real(), F[j].y().real());
    const CVec2 fpp(F[j].x().imag(), F[j].y().imag());
    const Complex fp_ixi = dot_ixi(fp, xi);
    const Complex fpp_ixi = dot_ixi(fpp, xi);
    const int mrow = 3 * j, prow = 3 * j + 1, qrow = 3 * j + 2;
    const int cup = 2 + 2 * j, cupp = 3 + 2 * j;
    a(mrow, 0) = abs2(F[j]);
    a(mrow, cup) = 2.0 * sigma_re * fp_ixi;
    a(mrow, cupp) = 2.0 * sigma_re * fpp_ixi;
    a(prow, 0) = fp_ixi;
    a(prow, 1) = -fpp_ixi;
    a(prow, cup) = -sigma_re * xi2;
    a(prow, cupp) = sigma_im * xi2;
    a(qrow, 0) = fpp_ixi;
    a(qrow, 1) = fp_ixi;
    a(qrow, cup) = -sigma_im * xi2;
    a(qrow, cupp) = -sigma_re * xi2;
  }
  return a;
}

CMat complex_symbol_square_submatrix(const std::vector<CVec2>& F, double sigma_re,
                                     double sigma_im, const Vec2& xi) {
  const int n = static_cast<int>(F.size());
  if (n < 2) throw std::invalid_argument("square sub-matrix: need n >= 2 experiments");
  const CMat full = complex_symbol(F, sigma_re, sigma_im, xi);
  CMat sq = CMat::Zero(2 + 2 * n, 2 + 2 * n);
  sq.row(0) = full.row(0);  // measurement row, experiment 1
  sq.row(1) = full.row(3);  // measurement row, experiment 2
  for (int j = 0; j < n; ++j) {
    sq.row(2 + 2 * j) = full.row(3 * j + 1);
    sq.row(3 + 2 * j) = full.row(3 * j + 2);
  }
  return sq;
}

double schur_determinant(const CVec2& F1, const CVec2& F2, double sigma_re, double sigma_im,
                         const Vec2& xi) {
  const double xi2 = xi.squaredNorm();
  const double s2 = sigma_re * sigma_re + sigma_im * sigma_im;
  if (!(s2 > 0.0)) throw std::invalid_argument("schur_determinant: |sigma| must be nonzero");
  if (!(xi2 > 0.0)) throw std::invalid_argument("schur_determinant: xi must be nonzero");
  auto bracket = [&](const CVec2& f) {
    // (F'.i xi)^2 + (F''.i xi)^2 = -|F.xi|^2 for F = F' + iF''
    const CVec2 fp(f.x().real(), f.y().real());
    const CVec2 fpp(f.x().imag(), f.y().imag());
    const Complex b = dot_ixi(fp, xi) * dot_ixi(fp, xi) + dot_ixi(fpp, xi) * dot_ixi(fpp, xi);
    return b.real();
  };
  return 2.0 * sigma_im * sigma_re / s2 *
         (abs2(F1) / xi2 * bracket(F2) - abs2(F2) / xi2 * bracket(F1));
}

double full_subdeterminant(const CVec2& F1, const CVec2& F2, double sigma_re, double sigma_im,
                           const Vec2& xi, int n) {
  if (n < 2) throw std::invalid_argument("full_subdeterminant: need n >= 2");
  const double xi2 = xi.squaredNorm();
  if (!(xi2 > 0.0)) throw std::invalid_argument("full_subdeterminant: xi must be nonzero");
  const double s2 = sigma_re * sigma_re + sigma_im * sigma_im;
  const double bracket = abs2(F2) * dot_abs2(F1, xi) - abs2(F1) * dot_abs2(F2, xi);
  return 2.0 * sigma_im * sigma_re * std::pow(xi2, 2 * n - 1) * std::pow(s2, n - 1) * bracket;
}

std::vector<bool> injectivity_condition(const CVec2& Fi, const CVec2& Fj,
                                        const std::vector<Vec2>& directions, double rel_tol) {
  std::vector<bool> out;
  out.reserve(directions.size());
  for (const auto& xi : directions) {
    const double lhs = abs2(Fi) * dot_abs2(Fj, xi);
    const double rhs = abs2(Fj) * dot_abs2(Fi, xi);
    out.push_back(std::abs(lhs - rhs) > rel_tol * (lhs + rhs));
  }
  return out;
}

ConditionMap condition_map(const std::vector<GradientField>& fields,
                           const ConductivityField& sigma, SymbolKind kind, int num_directions,
                           double cap) {
  return condition_map_impl(fields, sigma, kind, num_directions, cap, true);
}

ConditionMap condition_map_reference(const std::vector<GradientField>& fields,
                                     const ConductivityField& sigma, SymbolKind kind,
                                     int num_directions, double cap) {
  return condition_map_impl(fields, sigma, kind, num_directions, cap, false);
}

}  // namespace tni
