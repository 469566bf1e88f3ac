#pragma once

/// Slip and jump coefficients of the kinetic boundary layer: the far-field
/// constants of the fundamental half-space solutions.  Order 1 produces the
/// velocity-slip coefficient b1 and the temperature-jump coefficient c1; the
/// order-2 family adds the curvature and density couplings (b2, b3) and
/// (c2, c3, c4).  Every coefficient is extracted by the same two-trial linear
/// tuning of the wall datum, so each solve also certifies the zero-flux law
/// and tail decay of its solution.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kfl/burnett.hpp"
#include "kfl/knudsen.hpp"

namespace kfl {

struct SlipCoefficients {
    double accommodation = 1.0;
    double b1 = 0.0;  ///< tangential velocity slip
    double c1 = 0.0;  ///< temperature jump
    // Second-order couplings: second derivatives (b2, c2), the normal-gradient
    // response (c3), and the density-gradient responses (b3, c4).
    std::optional<double> b2, b3, c2, c3, c4;
    std::string model;             ///< "bgk" or "hard-sphere"
    std::string grid_fingerprint;  ///< hash of the discretization settings
    double est_error = 0.0;        ///< refinement-based error estimate (0 = not measured)
};

/// Discretization bundle for one accommodation value: the shared xi grid, the
/// two reduced velocity grids, and their collision operators.
struct SlipGrids {
    const LayerGrid* xi = nullptr;
    const AxisymGrid* tangential = nullptr;  // mode 1
    const AxisymGrid* scalar = nullptr;      // mode 0
    std::shared_ptr<const CollisionOperator> op_tangential;
    std::shared_ptr<const CollisionOperator> op_scalar;
};

/// Wall data of the order-1 fundamental problems, sampled on the reduced
/// grids: the tangential shear response v3 alpha_hat(|v|) sqrt(mu) and the
/// scalar heat response (the reduced heat-flux solution, which is discretely
/// orthogonal to the conserved fields and therefore carries no mass flux).
struct SlipOrder1Data {
    Vec tangential;  ///< mode-1 nodes
    Vec scalar;      ///< mode-0 nodes
};

SlipOrder1Data slip_order1_data(const AxisymGrid& tangential, const AxisymGrid& scalar,
                                const HatFields& hats, const AxialClosure& axial);

/// Fundamental solutions kept for the order-2 stage and the field assembly.
struct SlipArtifacts {
    KnudsenSolution phi_tangential;
    KnudsenSolution phi_scalar;
};

SlipCoefficients slip_coefficients_order1(const SlipGrids& grids, double accommodation,
                                          const SlipOrder1Data& data,
                                          SlipArtifacts* artifacts = nullptr,
                                          HalfspaceOptions options = {});

/// Wall data of the order-2 fundamental problems.
struct SlipOrder2Data {
    Vec curvature_tangential;  ///< mode-1: -(D1 + v3^2 D2) sqrt(mu)
    Vec curvature_scalar;      ///< mode-0: -F2 (the axial closure field)
    Vec normal_stress_scalar;  ///< mode-0: -(v3^2 - |v|^2/3) alpha_hat sqrt(mu)
};

SlipOrder2Data slip_order2_data(const AxisymGrid& tangential, const AxisymGrid& scalar,
                                const IsotropicProfiles& iso, const AxialClosure& axial,
                                const HatFields& hats);

/// Adds (b2, b3, c2, c3, c4) to `io`.  The density couplings b3 and c4 are
/// driven by the interior sources -L phi of the order-1 solutions, so the
/// artifacts of slip_coefficients_order1 are required.
void slip_coefficients_order2(const SlipGrids& grids, double accommodation,
                              const SlipOrder2Data& data, const SlipArtifacts& artifacts,
                              SlipCoefficients& io, HalfspaceOptions options = {});

/// Independent coarse cross-check of the tangential slip coefficient for the
/// relaxation model: damped source-iteration sweeps with exact exponential
/// upwinding on a uniform xi grid, sharing nothing with the block solver but
/// the velocity quadrature.
double tangential_slip_source_iteration(const AxisymGrid& tangential, double nu0,
                                        double accommodation, const Vec& wall_datum,
                                        double xi_max, Eigen::Index n_xi,
                                        Eigen::Index max_sweeps = 40000, double tol = 1e-12);

/// Dirichlet data of the order-2 viscous layer implied by the slip relations:
/// u2 = -interior_u2 + b1 * grad, theta2 = -interior_theta2 + c1 * grad.
LayerDirichlet slip_dirichlet_order2(const SlipCoefficients& slip, const LayerWallGradients& g,
                                     const std::array<double, 3>& interior_u2,
                                     double interior_theta2);

/// Fingerprint of the discretization a coefficient set was computed on.
std::string slip_grid_fingerprint(const LayerGrid& xi, const AxisymGrid& tangential,
                                  const AxisymGrid& scalar, const CollisionModel& model,
                                  double accommodation);

/// One row per coefficient set:
/// "alpha,model,b1,c1,b2,b3,c2,c3,c4,grid_fingerprint,est_error" with empty
/// fields for absent order-2 entries.
void write_slip_csv(std::ostream& os, const std::vector<SlipCoefficients>& rows);

}  // namespace kfl
