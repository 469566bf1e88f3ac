#pragma once

/// Linearized collision operators on velocity grids: the BGK relaxation
/// surrogate and the hard-sphere Galerkin operator in nu - K form, together
/// with the hydrodynamic null-space projection and the bilinear form Gamma.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kfl/numerics.hpp"
#include "kfl/velocity_grid.hpp"

namespace kfl {

enum class CollisionKind { Bgk, HardSphere };

struct CollisionModel {
    CollisionKind kind = CollisionKind::Bgk;
    double nu0 = 1.0;          // BGK relaxation rate
    // Accepted assembly asymmetry / quadrature slack.  The default quadrature
    // below measures an asymmetry defect of 3.5e-3, so the gate has ~3x
    // headroom; coarser rules need a looser gate.
    double kernel_tol = 1e-2;
    std::string matrix_cache;  // optional directory for assembled matrices
    bool cache_only = false;   // refuse to assemble if the cache misses

    // Hard-sphere Galerkin assembly controls.
    int basis_degree = 6;       // total polynomial degree of the operator basis
    int gamma_degree = 4;       // degree cap for the trilinear form tensor
    int quad_points_axis = 10;  // Gauss-Hermite points per velocity axis
    int quad_points_angle = 8;  // points per spherical coordinate
};

/// Orthogonal projection onto the span of a set of fields under a grid's
/// quadrature inner product.
class NullProjection {
  public:
    NullProjection() = default;
    static NullProjection build(std::vector<Vec> basis, Vec weights);

    Eigen::Index dim() const { return static_cast<Eigen::Index>(basis_.size()); }
    const std::vector<Vec>& basis() const { return basis_; }
    const Mat& gram_inverse() const { return gram_inv_; }

    /// Coefficients of the projection in the (non-normalized) basis.
    Vec coefficients(const Vec& f) const;
    Vec apply(const Vec& f) const;
    Vec complement(const Vec& f) const { return f - apply(f); }

  private:
    std::vector<Vec> basis_;
    Vec weights_;
    Mat gram_inv_;
};

/// Macroscopic projection P onto span{chi_0..chi_4} with named moments.
class HydroProjection {
  public:
    struct Moments {
        double rho = 0.0;
        std::array<double, 3> u = {0.0, 0.0, 0.0};
        double theta = 0.0;
    };

    static HydroProjection build(const VelocityGrid& grid);

    const NullProjection& projection() const { return proj_; }
    Vec apply(const Vec& f) const { return proj_.apply(f); }
    Vec complement(const Vec& f) const { return proj_.complement(f); }
    Moments moments(const Vec& f) const;
    /// (rho + u.v + theta (|v|^2 - 3)/2) sqrt(mu) on the grid.
    Vec from_moments(const Moments& m) const;

  private:
    const VelocityGrid* grid_ = nullptr;
    NullProjection proj_;
};

/// Linearized collision operator interface shared by the BGK surrogate and
/// the assembled hard-sphere operator, on either a full or a reduced grid.
class CollisionOperator {
  public:
    virtual ~CollisionOperator() = default;

    /// Full-grid operator.
    static std::shared_ptr<const CollisionOperator> build(const VelocityGrid& grid,
                                                          const CollisionModel& model);
    /// Operator restricted to an axisymmetric mode space. The parent spec
    /// must match the one the reduced grid was built from.
    static std::shared_ptr<const CollisionOperator> build_reduced(const AxisymGrid& grid,
                                                                  const GridSpec& parent,
                                                                  const CollisionModel& model);

    virtual Vec apply_L(const Vec& f) const = 0;
    Vec apply_K(const Vec& f) const;  // nu f - L f, exact by construction
    /// Solve L f = g on the orthogonal complement of the null space.
    /// Requires <g, n_i> = 0 within tolerance for every null basis field.
    virtual Vec invert_L(const Vec& g) const = 0;
    virtual Vec apply_Gamma(const Vec& f, const Vec& g) const = 0;

    const Vec& collision_frequency() const { return nu_; }
    bool constant_frequency() const { return constant_nu_; }
    /// Fitted constants for nu_lo (1+|v|) <= nu(v) <= nu_hi (1+|v|).
    double nu_bound_lower() const { return nu_lo_; }
    double nu_bound_upper() const { return nu_hi_; }

    const NullProjection& null_projection() const { return null_; }
    const Vec& quad_weights() const { return weights_; }
    double inner(const Vec& f, const Vec& g) const { return pairwise_dot3(weights_, f, g); }
    /// Weighted norm^2 <nu f, f> used by coercivity statements.
    double nu_norm2(const Vec& f) const;

    /// Orthogonality tolerance for invert_L preconditions.
    double ortho_tol() const { return ortho_tol_; }

  protected:
    void check_orthogonal(const Vec& g) const;  // throws with offending moment

    Vec nu_, weights_;
    NullProjection null_;
    bool constant_nu_ = false;
    double nu_lo_ = 0.0, nu_hi_ = 0.0;
    double ortho_tol_ = 1e-8;
};

struct KernelSample {
    double distance;  // |v - v'|
    double value;     // kernel magnitude k(v, v')
    double envelope;  // comparison envelope at the pair
};

/// Sample the (finite-rank) scattering kernel of an assembled hard-sphere
/// operator at random node pairs; used for the envelope diagnostic.
std::vector<KernelSample> sample_scattering_kernel(const CollisionOperator& op,
                                                   const VelocityGrid& grid, int count,
                                                   unsigned seed);

}  // namespace kfl
