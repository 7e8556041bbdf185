#include "cklemap/gpr.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "cklemap/error.hpp"

namespace cklemap {

void KernelParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("kernel: sigma must be positive");
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("kernel: length must be positive");
  if (!(nugget >= 0.0) || !std::isfinite(nugget)) throw InvalidArgument("kernel: nugget must be >= 0");
}

double matern52(double r, const KernelParams& params, bool same_point) {
  const double s = std::sqrt(5.0) * r / params.length;
  const double k = params.sigma * params.sigma * (1.0 + s + s * s / 3.0) * std::exp(-s);
  return same_point ? k + params.nugget : k;
}

Matrix covariance(std::span<const Point> a, std::span<const Point> b, const KernelParams& params,
                  bool same_points) {
  const auto na = static_cast<Index>(a.size());
  const auto nb = static_cast<Index>(b.size());
  Matrix c(na, nb);
  for (Index j = 0; j < nb; ++j) {
    for (Index i = 0; i < na; ++i) {
      const double r = std::hypot(a[i].x - b[j].x, a[i].y - b[j].y);
      c(i, j) = matern52(r, params, same_points && i == j);
    }
  }
  return c;
}

double neg_log_marginal_likelihood(const KernelParams& params, std::span<const Point> x,
                                   const Vector& y) {
  if (x.empty()) throw InvalidArgument("nlml: no training points");
  if (static_cast<Index>(x.size()) != y.size()) throw InvalidArgument("nlml: size mismatch");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Matrix c = covariance(x, x, params, true);
  const Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) return kInf;
  const auto l = llt.matrixL();
  double log_det_half = 0.0;
  for (Index i = 0; i < c.rows(); ++i) {
    const double d = llt.matrixLLT()(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return kInf;
    log_det_half += std::log(d);
  }
  const Vector alpha = l.solve(y);
  const double n = static_cast<double>(y.size());
  const double value = 0.5 * alpha.squaredNorm() + log_det_half + 0.5 * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(value) ? value : kInf;
}

namespace {

using Point2 = std::array<double, 2>;

struct Box {
  Point2 lo, hi;
  Point2 clamp(Point2 p) const {
    return {std::clamp(p[0], lo[0], hi[0]), std::clamp(p[1], lo[1], hi[1])};
  }
};

// Nelder-Mead on a 2-D box; points leaving the box are projected back.
template <class F>
std::pair<Point2, double> nelder_mead(F&& f, Point2 start, const Box& box, int max_evals, double tol) {
  std::array<Point2, 3> simplex;
  std::array<double, 3> values;
  simplex[0] = box.clamp(start);
  const Point2 step{0.1 * (box.hi[0] - box.lo[0]), 0.1 * (box.hi[1] - box.lo[1])};
  for (int k = 0; k < 2; ++k) {
    Point2 p = simplex[0];
    p[k] += (p[k] + step[k] <= box.hi[k]) ? step[k] : -step[k];
    simplex[k + 1] = box.clamp(p);
  }
  int evals = 0;
  auto eval = [&](const Point2& p) {
    ++evals;
    return f(p);
  };
  for (int k = 0; k < 3; ++k) values[k] = eval(simplex[k]);

  auto lerp = [&](const Point2& a, const Point2& b, double t) {
    return box.clamp(Point2{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
  };

  while (evals < max_evals) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    const auto s = simplex;
    const auto v = values;
    for (int k = 0; k < 3; ++k) {
      simplex[k] = s[order[k]];
      values[k] = v[order[k]];
    }
    double spread = 0.0;
    for (int k = 1; k < 3; ++k) {
      spread = std::max({spread, std::abs(simplex[k][0] - simplex[0][0]), std::abs(simplex[k][1] - simplex[0][1])});
    }
    if (spread < tol) break;

    const Point2 centroid{0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])};
    const Point2 reflected = lerp(centroid, simplex[2], -1.0);
    const double fr = eval(reflected);
    if (fr < values[0]) {
      const Point2 expanded = lerp(centroid, simplex[2], -2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[2] = expanded;
        values[2] = fe;
      } else {
        simplex[2] = reflected;
        values[2] = fr;
      }
    } else if (fr < values[1]) {
      simplex[2] = reflected;
      values[2] = fr;
    } else {
      const bool outside = fr < values[2];
      const Point2 contracted = outside ? lerp(centroid, reflected, 0.5) : lerp(centroid, simplex[2], 0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, values[2])) {
        simplex[2] = contracted;
        values[2] = fc;
      } else {
        for (int k = 1; k < 3; ++k) {
          simplex[k] = lerp(simplex[0], simplex[k], 0.5);
          values[k] = eval(simplex[k]);
        }
      }
    }
  }
  const auto best = std::min_element(values.begin(), values.end()) - values.begin();
  return {simplex[best], values[best]};
}

}  // namespace

FitResult fit_hyperparameters(std::span<const Point> x, const Vector& y, const FitOptions& opts) {
  const auto n = static_cast<Index>(x.size());
  if (n != y.size()) throw InvalidArgument("fit_hyperparameters: size mismatch");
  if (n < 2) throw InvalidArgument("fit_hyperparameters: at least two training points are required");
  if (opts.grid_size < 1) throw InvalidArgument("fit_hyperparameters: grid_size must be positive");

  double d_min = std::numeric_limits<double>::infinity();
  double d_max = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = std::hypot(x[i].x - x[j].x, x[i].y - x[j].y);
      if (d > 0.0) d_min = std::min(d_min, d);
      d_max = std::max(d_max, d);
    }
  }
  if (!(d_max > 0.0)) throw InvalidArgument("fit_hyperparameters: training points are all identical");

  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  const double max_abs = y.cwiseAbs().maxCoeff();
  const double rms = std::sqrt(y.squaredNorm() / static_cast<double>(n));
  const double scale = rms > 0.0 ? rms : 1.0;

  FitResult result;
  result.sigma_min = 1e-2 * scale;
  result.sigma_max = 1e1 * scale;
  result.length_min = 0.1 * d_min;
  result.length_max = 10.0 * d_max;
  const double nugget = opts.nugget_absolute >= 0.0 ? opts.nugget_absolute : opts.nugget_relative * var;

  const auto nlml_at = [&](const Point2& p) {
    const KernelParams k{std::exp(p[0]), std::exp(p[1]), nugget};
    return neg_log_marginal_likelihood(k, x, y);
  };

  if (var <= std::pow(1e-12 * max_abs, 2)) {
    result.status = FitStatus::Degenerate;
    result.params = {result.sigma_min, result.length_max, nugget};
    result.nlml = neg_log_marginal_likelihood(result.params, x, y);
    return result;
  }

  const Box box{{std::log(result.sigma_min), std::log(result.length_min)},
                {std::log(result.sigma_max), std::log(result.length_max)}};
  const int g = opts.grid_size;
  const auto grid = [g](double lo, double hi, int k) {
    return g == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (g - 1);
  };
  const double s_lo = std::log(0.25 * scale), s_hi = std::log(4.0 * scale);
  const double l_lo = std::log(d_min), l_hi = std::log(d_max);

  Point2 best{};
  double best_value = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      const Point2 start = box.clamp({grid(s_lo, s_hi, a), grid(l_lo, l_hi, b)});
      const double f0 = nlml_at(start);
      result.start_nlml.push_back(f0);
      if (!have_best || f0 < best_value) {
        best = start;
        best_value = f0;
        have_best = true;
      }
      const auto [p, v] = nelder_mead(nlml_at, start, box, opts.max_evaluations, opts.tolerance);
      if (v < best_value) {
        best = p;
        best_value = v;
      }
    }
  }
  result.params = {std::exp(best[0]), std::exp(best[1]), nugget};
  result.nlml = best_value;
  return result;
}

std::vector<Point> gather_points(const Mesh& mesh, std::span<const Index> indices) {
  std::vector<Point> pts;
  pts.reserve(indices.size());
  const auto centers = mesh.centers();
  for (const Index i : indices) {
    if (i < 0 || i >= mesh.num_cells()) throw InvalidArgument("gather_points: index out of range");
    pts.push_back(centers[i]);
  }
  return pts;
}

GpPosterior condition(const KernelParams& params, const ObservationSet& train, const Mesh& mesh) {
  params.validate();
  if (train.empty()) throw InvalidArgument("condition: at least one observation is required");
  train.check_bounds(mesh.num_cells());

  const auto xs = gather_points(mesh, train.indices());
  const auto centers = mesh.centers();
  const Matrix cs = covariance(xs, xs, params, true);
  const Eigen::LLT<Matrix> llt(cs);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("condition: training covariance is singular (duplicate points with zero nugget?)", -1);
  }

  Matrix v = covariance(xs, centers, params, false);  // n_s x N
  llt.matrixL().solveInPlace(v);
  const Vector alpha = llt.matrixL().solve(train.values());

  GpPosterior post;
  post.params = params;
  post.train = train;
  post.mean = v.transpose() * alpha;
  post.cov = covariance(centers, centers, params, true);
  post.cov.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose(), -1.0);
  post.cov.triangularView<Eigen::StrictlyUpper>() = post.cov.transpose();
  return post;
}

}  // namespace cklemap
