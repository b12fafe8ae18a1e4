#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leap/tensor.hpp"

namespace leap {

/// Analytic C2 loss with closed-form derivatives.
class Landscape {
 public:
  virtual ~Landscape() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;
  virtual Eigen::MatrixXd hessian(std::span<const double> x) const = 0;
  /// Diagonal of the Hessian; overridden where cheaper than the full matrix.
  virtual void hessian_diag(std::span<const double> x, std::span<double> out) const;
  /// Bound on the Hessian spectral norm over the experiment region.
  virtual double smoothness_beta() const = 0;

  std::vector<double> gradient(std::span<const double> x) const;
};

/// A verified minimum with the saddle on its escape path.
///
/// All test landscapes are separable with the escape along coordinate
/// `escape_axis`, so eigenvalues of diag(H) and H coincide along e.
struct MinimaCatalogEntry {
  std::string label;
  ParamVector location_a;  ///< minimum
  ParamVector location_b;  ///< saddle
  std::vector<double> escape_direction_e;
  double delta_L = 0.0;
  double A_ae = 0.0;  ///< diag(H) eigenvalue at a along e
  double A_be = 0.0;  ///< diag(H) eigenvalue at b along e
  double H_be = 0.0;  ///< Hessian eigenvalue at b along e
  std::size_t escape_axis = 0;

  /// True while x is on the minimum's side of the saddle along escape_axis.
  bool in_basin(std::span<const double> x) const;
};

struct CatalogedLandscape {
  std::shared_ptr<const Landscape> landscape;
  std::vector<MinimaCatalogEntry> catalog;
};

/// Throws CatalogError listing the first violated invariant.
void validate_entry(const Landscape& landscape, const MinimaCatalogEntry& entry);

struct QuarticParams {
  std::optional<double> kappa_transverse;  ///< absent -> 1D
  double tilt = 0.0;
  /// c in f(x) = c q(x / sqrt(c)) + tilt x with q(u) = u^4 - 2u^2. Multiplies
  /// the barrier height by c while keeping curvature at the critical points.
  double barrier_scale = 1.0;
};

/// f(x, y) = c q(x / sqrt(c)) + tilt x + (kappa/2) y^2.
/// Catalog: [right minimum, left minimum], both escaping over the middle saddle.
CatalogedLandscape quartic_double_well(const QuarticParams& params);

/// Two-basin 1D landscape: flat minimum (curvature k_flat) left of a saddle at
/// x = 0, sharp minimum (curvature k_sharp) to the right, both delta_L below
/// the saddle. Each side is g(u) = a2 u^2 + a3 u^3 + a4 u^4 in u = |x| with a
/// shared a2 = -saddle_curvature / 2, which makes the join at 0 C2. The
/// saddle curvature defaults to k_flat / 2 and must stay below both minimum
/// curvatures. Catalog: [flat, sharp].
CatalogedLandscape curvature_family(double k_flat, double k_sharp, double delta_L,
                                    std::optional<double> saddle_curvature = std::nullopt);

/// L(theta) = 0.5 * sum d_i theta_i^2; unique minimum at 0, no catalog.
std::shared_ptr<const Landscape> quadratic_bowl(std::vector<double> diag_d);

}  // namespace leap
