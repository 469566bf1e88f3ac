#pragma once

/// Hard-sphere linearized operator assembled by direct quadrature of the
/// collision integral in a total-degree polynomial basis (Galerkin form),
/// split as nu - K with the multiplication part exact on grid nodes.

#include <memory>

#include "kfl/collision.hpp"

namespace kfl {

std::shared_ptr<const CollisionOperator> build_hard_sphere_full(const VelocityGrid& grid,
                                                                const CollisionModel& model);
std::shared_ptr<const CollisionOperator> build_hard_sphere_reduced(const AxisymGrid& grid,
                                                                   const GridSpec& parent,
                                                                   const CollisionModel& model);

/// Assembly health numbers recorded when a hard-sphere operator is built.
struct HardSphereDiagnostics {
    double asymmetry_defect = 0.0;   // worst |L - L^T| entry before symmetrizing
    double null_defect = 0.0;        // worst |L c_chi| entry before projection
    double spectral_floor = 0.0;     // smallest eigenvalue of L on span ∩ N-perp
    int basis_count = 0;
};

/// Fetch diagnostics from an operator built by the factories above.
/// Throws if the operator is not a hard-sphere assembly.
HardSphereDiagnostics hard_sphere_diagnostics(const CollisionOperator& op);

}  // namespace kfl
