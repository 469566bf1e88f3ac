#pragma once

#include <array>
#include <iosfwd>
#include <string_view>

#include "kfl/collision.hpp"
#include "kfl/velocity_grid.hpp"

namespace kfl {

/// The moment fields driving the first- and second-order closures: the
/// traceless stress tensor fields a[i][j], the heat-flux vector fields b[i],
/// and the scalar contracted field c, all on the full velocity grid and all
/// orthogonal to the conserved fields.
struct BurnettFields {
    std::array<std::array<Vec, 3>, 3> a;
    std::array<Vec, 3> b;
    Vec c;
};

BurnettFields burnett_fields(const VelocityGrid& grid);

/// A scalar profile of the speed |v|, stored as sorted samples and evaluated
/// by monotone linear interpolation (clamped at the ends).
class RadialProfile {
  public:
    RadialProfile() = default;
    RadialProfile(Vec speeds, Vec values);

    double operator()(double speed) const;
    const Vec& speeds() const { return speeds_; }
    const Vec& values() const { return values_; }

  private:
    Vec speeds_, values_;
};

/// Solutions of L(hat) = moment field, with the radial profiles alpha, beta
/// extracted from the known tensor structure hat_a = alpha(|v|) a,
/// hat_b = beta(|v|) b by least squares over the tensor components at each
/// node whose structural factor clears a floor.
struct HatFields {
    std::array<std::array<Vec, 3>, 3> a_hat;
    std::array<Vec, 3> b_hat;
    RadialProfile alpha;
    RadialProfile beta;
    Eigen::Index alpha_excluded = 0;  // nodes under the structural floor
    Eigen::Index beta_excluded = 0;
    double alpha_residual = 0.0;  // weighted rel. error of the profile model
    double beta_residual = 0.0;
};

HatFields hat_fields(const CollisionOperator& op, const VelocityGrid& grid);

struct Transport {
    double kappa1 = 0.0;  // shear response <a12, L^{-1} a12>
    double kappa2 = 0.0;  // heat response  <b3,  L^{-1} b3>
};

Transport transport_coefficients(const CollisionOperator& op, const VelocityGrid& grid);

/// Radial parts of the third-order closure solutions on the full grid:
///   L[(v_i d_jk + v_j d_ik + v_k d_ij) D1 + v_i v_j v_k D2] (sqrt(mu) terms)
///       = v_i v_j v_k alpha - kappa1 (v_i d_jk + ...),
///   L[v_i v_3 F1] = v_i hat_b3 (null-projected right-hand side).
struct IsotropicProfiles {
    RadialProfile d1, d2, f1;
    // Defining-equation residuals of the grid solves themselves.
    double d_solve_residual = 0.0;
    double f1_solve_residual = 0.0;
    // Quality of the radial model: the profiles re-assembled against the
    // defining equations, weighted relative.
    double d_fit_residual = 0.0;
    double f1_fit_residual = 0.0;
    // Norm fraction of the printed F1 right-hand side that lies in the
    // conserved space and is removed before the solve.
    double f1_null_deficiency = 0.0;
};

IsotropicProfiles isotropic_profiles(const CollisionOperator& op, const VelocityGrid& grid,
                                     const HatFields& hat);

/// The axial closure solution on a mode-0 reduced grid:
///   L f2_micro = v3 hat_b3 - kappa2 (|v|^2 - 3)/3 sqrt(mu),
/// returned as the micro field f2_micro = F2(|v|, v3) sqrt(mu) together with
/// the reduced heat-flux solve it is built from.
struct AxialClosure {
    Vec f2_micro;     // mode-0 field, includes the sqrt(mu) factor
    Vec b_hat;        // reduced heat-flux solution on the same grid
    double kappa2 = 0.0;
    double residual = 0.0;  // defining-equation residual, weighted rel.
};

AxialClosure axial_closure(const CollisionOperator& op_mode0, const AxisymGrid& grid);

/// Writes a profile as a labeled two-column text table ("# label" header,
/// then one "speed value" row per sample) for external plotting.
void write_profile_table(std::ostream& os, std::string_view label, const RadialProfile& profile);

}  // namespace kfl
