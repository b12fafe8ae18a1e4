#include "leap/landscapes.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "leap/error.hpp"

namespace leap {

void Landscape::hessian_diag(std::span<const double> x, std::span<double> out) const {
  const Eigen::MatrixXd h = hessian(x);
  for (std::size_t i = 0; i < dim(); ++i) out[i] = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
}

std::vector<double> Landscape::gradient(std::span<const double> x) const {
  std::vector<double> g(dim());
  gradient(x, g);
  return g;
}

bool MinimaCatalogEntry::in_basin(std::span<const double> x) const {
  const double side = location_a[escape_axis] - location_b[escape_axis];
  const double offset = x[escape_axis] - location_b[escape_axis];
  return side > 0.0 ? offset > 0.0 : offset < 0.0;
}

void validate_entry(const Landscape& landscape, const MinimaCatalogEntry& entry) {
  const auto fail = [&](const std::string& what) {
    throw CatalogError(entry.label + ": " + what);
  };
  const std::size_t n = landscape.dim();
  if (entry.location_a.size() != n || entry.location_b.size() != n || entry.escape_direction_e.size() != n)
    fail("dimension mismatch");

  const auto ga = landscape.gradient(entry.location_a);
  const auto gb = landscape.gradient(entry.location_b);
  const auto norm = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).norm();
  };
  if (!(norm(ga) < 1e-10)) fail("gradient at minimum is not below 1e-10");
  if (!(norm(gb) < 1e-10)) fail("gradient at saddle is not below 1e-10");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> at_a(landscape.hessian(entry.location_a));
  if (!(at_a.eigenvalues().minCoeff() > 0.0)) fail("Hessian at minimum is not positive definite");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> at_b(landscape.hessian(entry.location_b));
  const auto& lam = at_b.eigenvalues();
  Eigen::Index negatives = 0, neg_idx = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < 0.0) {
      ++negatives;
      neg_idx = i;
    }
  }
  if (negatives != 1) fail("Hessian at saddle must have exactly one negative eigenvalue");
  const Eigen::Map<const Eigen::VectorXd> e(entry.escape_direction_e.data(), static_cast<Eigen::Index>(n));
  if (std::abs(e.norm() - 1.0) > 1e-12) fail("escape direction is not a unit vector");
  const double cosine = std::abs(at_b.eigenvectors().col(neg_idx).dot(e));
  if (!(cosine > 1.0 - 1e-8)) fail("negative eigenvector at saddle is not aligned with e");

  if (!(entry.delta_L > 0.0)) fail("delta_L must be > 0");
  if (!(entry.A_ae > 0.0)) fail("A_ae must be > 0");
  if (!(entry.A_be < 0.0)) fail("A_be must be < 0");
  if (!(entry.H_be < 0.0)) fail("H_be must be < 0");
  if (!entry.in_basin(entry.location_a)) fail("minimum is outside its own basin");
}

namespace {

// ---------------------------------------------------------------- quartic ---

class QuarticWell final : public Landscape {
 public:
  QuarticWell(const QuarticParams& p)
      : kappa_(p.kappa_transverse.value_or(0.0)),
        two_d_(p.kappa_transverse.has_value()),
        tilt_(p.tilt),
        c_(p.barrier_scale),
        lambda_(std::sqrt(p.barrier_scale)) {}

  std::size_t dim() const override { return two_d_ ? 2 : 1; }
  std::string name() const override { return "quartic_double_well"; }

  double f(double x) const {
    const double u = x / lambda_;
    return c_ * (u * u * u * u - 2.0 * u * u) + tilt_ * x;
  }
  double df(double x) const {
    const double u = x / lambda_;
    return (c_ / lambda_) * (4.0 * u * u * u - 4.0 * u) + tilt_;
  }
  double d2f(double x) const {
    const double u = x / lambda_;
    return (c_ / (lambda_ * lambda_)) * (12.0 * u * u - 4.0);
  }

  double value(std::span<const double> x) const override {
    double v = f(x[0]);
    if (two_d_) v += 0.5 * kappa_ * x[1] * x[1];
    return v;
  }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    out[0] = df(x[0]);
    if (two_d_) out[1] = kappa_ * x[1];
  }
  void hessian_diag(std::span<const double> x, std::span<double> out) const override {
    out[0] = d2f(x[0]);
    if (two_d_) out[1] = kappa_;
  }
  Eigen::MatrixXd hessian(std::span<const double> x) const override {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
    h(0, 0) = d2f(x[0]);
    if (two_d_) h(1, 1) = kappa_;
    return h;
  }
  double smoothness_beta() const override {
    // |f''| over |x| <= 1.5 lambda.
    return std::max(std::abs(d2f(1.5 * lambda_)), kappa_);
  }

  double lambda() const { return lambda_; }
  double tilt() const { return tilt_; }

 private:
  double kappa_;
  bool two_d_;
  double tilt_;
  double c_;
  double lambda_;
};

// Safeguarded root of a function with a sign change on [lo, hi]: bisection
// down to 1e-12, then a few Newton polish steps that must stay inside the bracket.
template <class F, class DF>
double bracketed_root(F&& f, DF&& df, double lo, double hi) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int k = 0; k < 4; ++k) {
    const double d = df(x);
    if (d == 0.0) break;
    const double next = x - f(x) / d;
    if (!(next >= lo - 1e-9 && next <= hi + 1e-9)) break;
    x = next;
  }
  return x;
}

// ---------------------------------------------------------- two basins ---

class TwoBasin final : public Landscape {
 public:
  struct Side {
    double a3 = 0.0, a4 = 0.0, width = 0.0;
  };

  TwoBasin(double a2, Side left, Side right) : a2_(a2), left_(left), right_(right) {}

  std::size_t dim() const override { return 1; }
  std::string name() const override { return "curvature_family"; }

  double f(double x) const {
    const auto& s = x < 0.0 ? left_ : right_;
    const double u = std::abs(x);
    return u * u * (a2_ + u * (s.a3 + u * s.a4));
  }
  double df(double x) const {
    const auto& s = x < 0.0 ? left_ : right_;
    const double u = std::abs(x);
    const double dg = u * (2.0 * a2_ + u * (3.0 * s.a3 + u * 4.0 * s.a4));
    return x < 0.0 ? -dg : dg;
  }
  double d2f(double x) const {
    const auto& s = x < 0.0 ? left_ : right_;
    const double u = std::abs(x);
    return 2.0 * a2_ + u * (6.0 * s.a3 + u * 12.0 * s.a4);
  }

  double value(std::span<const double> x) const override { return f(x[0]); }
  void gradient(std::span<const double> x, std::span<double> out) const override { out[0] = df(x[0]); }
  void hessian_diag(std::span<const double> x, std::span<double> out) const override { out[0] = d2f(x[0]); }
  Eigen::MatrixXd hessian(std::span<const double> x) const override {
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = d2f(x[0]);
    return h;
  }
  double smoothness_beta() const override {
    // g'' is quadratic in u on each side, so its extremes over the region
    // [-1.5 w_left, 1.5 w_right] sit at the ends or at u = 0.
    return std::max({std::abs(d2f(0.0)), std::abs(d2f(-1.5 * left_.width)),
                     std::abs(d2f(1.5 * right_.width))});
  }

  const Side& left() const { return left_; }
  const Side& right() const { return right_; }

 private:
  double a2_;
  Side left_;
  Side right_;
};

class QuadraticBowl final : public Landscape {
 public:
  explicit QuadraticBowl(std::vector<double> d) : d_(std::move(d)) {}

  std::size_t dim() const override { return d_.size(); }
  std::string name() const override { return "quadratic_bowl"; }
  double value(std::span<const double> x) const override {
    double v = 0.0;
    for (std::size_t i = 0; i < d_.size(); ++i) v += 0.5 * d_[i] * x[i] * x[i];
    return v;
  }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < d_.size(); ++i) out[i] = d_[i] * x[i];
  }
  void hessian_diag(std::span<const double>, std::span<double> out) const override {
    std::copy(d_.begin(), d_.end(), out.begin());
  }
  Eigen::MatrixXd hessian(std::span<const double>) const override {
    return Eigen::Map<const Eigen::VectorXd>(d_.data(), static_cast<Eigen::Index>(d_.size())).asDiagonal();
  }
  double smoothness_beta() const override { return *std::max_element(d_.begin(), d_.end()); }

 private:
  std::vector<double> d_;
};

ParamVector point(double x, std::size_t dim) {
  ParamVector p(dim, 0.0);
  p[0] = x;
  return p;
}

MinimaCatalogEntry make_entry(const Landscape& l, std::string label, double xa, double xb, double fa,
                              double fb, double curv_a, double curv_b) {
  MinimaCatalogEntry e;
  e.label = std::move(label);
  e.location_a = point(xa, l.dim());
  e.location_b = point(xb, l.dim());
  e.escape_direction_e = point(xb > xa ? 1.0 : -1.0, l.dim());
  e.delta_L = fb - fa;
  e.A_ae = curv_a;
  e.A_be = curv_b;
  e.H_be = curv_b;
  e.escape_axis = 0;
  return e;
}

}  // namespace

CatalogedLandscape quartic_double_well(const QuarticParams& params) {
  if (params.kappa_transverse && !(*params.kappa_transverse >= 0.0))
    throw ConfigError("landscape.kappa_transverse", "must be >= 0");
  if (!(params.barrier_scale > 0.0)) throw ConfigError("landscape.barrier_scale", "must be > 0");
  if (!std::isfinite(params.tilt)) throw ConfigError("landscape.tilt", "must be finite");

  auto well = std::make_shared<QuarticWell>(params);
  const double lam = well->lambda();

  double left, mid, right;
  if (params.tilt == 0.0) {
    left = -lam;
    mid = 0.0;
    right = lam;
  } else {
    // f' = 4u^3 - 4u + tilt (scaled) has its local extrema at u = -+1/sqrt(3);
    // three roots exist only while f' changes sign around both.
    const double xc = lam / std::sqrt(3.0);
    const auto fp = [&](double x) { return well->df(x); };
    const auto fpp = [&](double x) { return well->d2f(x); };
    if (!(fp(-xc) > 0.0 && fp(xc) < 0.0))
      throw CatalogError("basin vanished: tilt " + std::to_string(params.tilt) + " leaves a single minimum");
    const double outer = 3.0 * lam + std::abs(params.tilt);
    left = bracketed_root(fp, fpp, -outer, -xc);
    mid = bracketed_root(fp, fpp, -xc, xc);
    right = bracketed_root(fp, fpp, xc, outer);
  }

  CatalogedLandscape out;
  out.landscape = well;
  out.catalog.push_back(make_entry(*well, "quartic_right", right, mid, well->f(right), well->f(mid),
                                   well->d2f(right), well->d2f(mid)));
  out.catalog.push_back(make_entry(*well, "quartic_left", left, mid, well->f(left), well->f(mid),
                                   well->d2f(left), well->d2f(mid)));
  for (const auto& e : out.catalog) validate_entry(*well, e);
  return out;
}

CatalogedLandscape curvature_family(double k_flat, double k_sharp, double delta_L,
                                    std::optional<double> saddle_curvature) {
  if (!(k_flat > 0.0)) throw ConfigError("landscape.k_flat", "must be > 0");
  if (!(k_sharp >= k_flat)) throw ConfigError("landscape.k_sharp", "must be >= k_flat");
  if (!(delta_L > 0.0)) throw ConfigError("landscape.delta_L", "must be > 0");
  const double kb = saddle_curvature.value_or(0.5 * k_flat);
  if (!(kb > 0.0)) throw ConfigError("landscape.saddle_curvature", "must be > 0");
  if (!(kb < k_flat))
    throw CatalogError("join condition violated: saddle curvature " + std::to_string(kb) +
                       " must be below the flat curvature " + std::to_string(k_flat) +
                       " so the quartic coefficient stays positive");

  const double a2 = -0.5 * kb;
  const auto side = [&](double k) {
    TwoBasin::Side s;
    s.width = std::sqrt(12.0 * delta_L / (kb + k));
    s.a3 = -(k + 4.0 * a2) / 3.0 / s.width;
    s.a4 = (k + 2.0 * a2) / 4.0 / (s.width * s.width);
    return s;
  };
  auto land = std::make_shared<TwoBasin>(a2, side(k_flat), side(k_sharp));

  const double xf = -land->left().width;
  const double xs = land->right().width;
  CatalogedLandscape out;
  out.landscape = land;
  // Barrier heights and curvatures are the construction targets, not re-measured values.
  out.catalog.push_back(make_entry(*land, "flat", xf, 0.0, -delta_L, 0.0, k_flat, -kb));
  out.catalog.push_back(make_entry(*land, "sharp", xs, 0.0, -delta_L, 0.0, k_sharp, -kb));
  for (const auto& e : out.catalog) validate_entry(*land, e);
  return out;
}

std::shared_ptr<const Landscape> quadratic_bowl(std::vector<double> diag_d) {
  if (diag_d.empty()) throw ConfigError("landscape.diag", "needs at least one entry");
  for (double d : diag_d)
    if (!(d > 0.0)) throw ConfigError("landscape.diag", "every entry must be > 0");
  return std::make_shared<QuadraticBowl>(std::move(diag_d));
}

}  // namespace leap
