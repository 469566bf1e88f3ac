#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "kfl/burnett.hpp"
#include "kfl/collision.hpp"
#include "kfl/numerics.hpp"
#include "kfl/velocity_grid.hpp"

namespace kfl {

// ---------------------------------------------------------------------------
// Stretched half-line grid for the viscous boundary layer.
//
// Nodes run from zeta = 0 (the wall) to zeta = zeta_max, which truncates the
// half-line; all layer fields are required to decay there.  A graded grid
// clusters nodes near the wall where the layer profiles vary fastest.
// ---------------------------------------------------------------------------

enum class LayerStretch { Uniform, Graded };

class LayerGrid {
  public:
    LayerGrid(Vec nodes, LayerStretch stretch);

    /// Equispaced nodes on [0, zeta_max].
    static LayerGrid uniform(double zeta_max, Eigen::Index n_nodes);

    /// Exponentially graded nodes, zeta_j = zeta_max * (e^{s x_j} - 1) / (e^s - 1)
    /// with x_j = j/(n-1); larger strength packs more nodes near the wall.
    static LayerGrid graded(double zeta_max, Eigen::Index n_nodes, double strength = 4.0);

    Eigen::Index size() const { return nodes_.size(); }
    const Vec& nodes() const { return nodes_; }
    double zeta_max() const { return nodes_[nodes_.size() - 1]; }
    LayerStretch stretch() const { return stretch_; }

    /// Second-order first derivative along zeta (one-sided at the ends).
    Vec derivative(const Vec& f) const;

    /// Three-point Laplacian along zeta; exact on quadratics, and the same
    /// stencil the diffusion solver uses.
    Vec second_derivative(const Vec& f) const;

    /// Trapezoid tail integrals: out[i] = integral of f over [zeta_i, zeta_max].
    Vec tail_integral(const Vec& f) const;

    /// Trapezoid integral of f over the whole grid.
    double integral(const Vec& f) const;

    /// Fraction of the (1+zeta)^l - weighted squared mass of f that sits beyond
    /// zeta_max / 2.  Small values certify that the truncation point is far
    /// enough out for this profile.
    double weighted_tail_fraction(const Vec& f, double l = 2.0) const;

  private:
    Vec nodes_;
    LayerStretch stretch_;
};

// ---------------------------------------------------------------------------
// One-dimensional diffusion solves on the layer grid.
//
// The tangential velocity components of the first-order layer obey
//   d_t u - kappa1 * d_zeta^2 u = source,
// and the temperature obeys
//   d_t theta - (2/5) kappa2 * d_zeta^2 theta = source,
// with Dirichlet data at the wall and decay at infinity.  Higher orders obey
// the same equations with coupling sources.
// ---------------------------------------------------------------------------

enum class HeatKind { Momentum, Temperature };

/// Diffusivity used by solve_heat: kappa1 for Momentum, (2/5) kappa2 for
/// Temperature.
double heat_diffusivity(HeatKind kind, const Transport& transport);

struct HeatOptions {
    double dt = 1e-2;              ///< requested step; rounded down to divide T evenly
    Eigen::Index record_every = 1; ///< keep every k-th step (the final step is always kept)
    bool allow_corner_jump = false; ///< accept wall data that disagrees with the
                                    ///< initial profile at zeta = 0 (the first steps
                                    ///< are then damped to absorb the jump)
    double corner_tol = 1e-10;     ///< mismatch tolerance when jumps are not allowed
    double far_tol = 1e-8;         ///< |init| at zeta_max must not exceed this
    Eigen::Index smoothing_steps = 2; ///< leading steps split into implicit half-steps
};

struct HeatTrajectory {
    std::vector<double> times;
    std::vector<Vec> values;

    const Vec& back() const { return values.back(); }
};

using TimeScalar = std::function<double(double)>;
using TimeField = std::function<Vec(double)>;

/// Crank-Nicolson solve of the layer diffusion equation up to time T.
/// `dirichlet` supplies the wall value; the far end is held at zero.  An empty
/// `source` means zero forcing.  Throws Error{ErrorKind::Config} for corner
/// mismatches (unless allowed) and for initial data that do not decay.
HeatTrajectory solve_heat(HeatKind kind, const Transport& transport, const TimeField& source,
                          const TimeScalar& dirichlet, const Vec& init, const LayerGrid& grid,
                          double T, const HeatOptions& opt = {});

// ---------------------------------------------------------------------------
// Layer hydrodynamic states.
// ---------------------------------------------------------------------------

/// Hydrodynamic content of the order-k layer corrector: tangential velocity,
/// temperature, and density profiles, plus the two fields this order
/// determines for the next one (the normal velocity and the pressure, which
/// close the order-(k+1) equations).  The first order carries no normal
/// velocity and no pressure of its own: u3 enters at order 2 via u3_next, and
/// rho_b = -theta_b keeps the layer pressure zero.
struct ViscousLayerState {
    int order = 1;
    double time = 0.0;
    std::array<Vec, 2> u_bar; ///< tangential velocity components
    Vec theta_b;
    Vec rho_b;
    Vec u3_next; ///< normal velocity of the next order (empty until computed)
    Vec p_next;  ///< pressure of the next order (empty until computed)
};

struct ViscousTrajectory {
    std::vector<ViscousLayerState> states;

    const ViscousLayerState& back() const { return states.back(); }
};

/// Interior hydrodynamic values evaluated at the wall.
struct WallTrace {
    std::array<double, 3> u{0.0, 0.0, 0.0};
    double theta = 0.0;
    double rho = 0.0;
};

using WallTraceSeries = std::function<WallTrace(double)>;

/// Wall values the first-order layer must take so that the composite
/// tangential velocity and temperature vanish on the boundary: the negation
/// of the interior trace.
struct LayerDirichlet {
    double u1 = 0.0;
    double u2 = 0.0;
    double theta = 0.0;
};

LayerDirichlet layer_bc_k1(double u1_trace, double u2_trace, double theta_trace);

/// Solve the three first-order layer equations (two tangential velocities and
/// the temperature) with wall data from layer_bc_k1 applied to `trace`, then
/// derive rho_b = -theta_b and, when at least three time levels are recorded,
/// the next-order normal velocity and pressure for every recorded state.
ViscousTrajectory solve_layer_order1(const WallTraceSeries& trace, const std::array<Vec, 2>& init_u,
                                     const Vec& init_theta, const Transport& transport,
                                     const LayerGrid& grid, double T, const HeatOptions& opt = {});

/// Normal velocity of order k+1 from mass conservation across the layer:
///   u3_next(zeta) = integral over [zeta, zeta_max] of d_t rho_b(s) ds
/// (planar setting: no tangential divergence).  The time derivative is taken
/// by second-order differencing of the recorded density profiles, so at least
/// three states are required.  The result vanishes at zeta_max identically.
Vec normal_velocity_next(const ViscousTrajectory& traj, std::size_t index, const LayerGrid& grid);

/// Pressure of order k+1 for a first-order state, integrated inward from the
/// decay condition at zeta_max:
///   d_zeta p_next = (2/3) * sum_i d_zeta[(u_bar_i + u0_i) u_bar_i]
/// where u0 is the interior wall trace.  All other contributions vanish at
/// this order because the first-order layer has no normal velocity and the
/// order-0 coupling correction is zero.
Vec pressure_next(const ViscousLayerState& state, const WallTrace& trace, const LayerGrid& grid);

// ---------------------------------------------------------------------------
// Kinetic content of the layer correctors.
// ---------------------------------------------------------------------------

/// Layer kinetic fields reuse KineticField with space_shape = {grid.size()}:
/// row i of `values` is the velocity vector at zeta_i.

/// Ingredients, frozen at one time, for the inverse-collision coupling
/// correction J_{k-1} that feeds order k+1.  Index conventions: fb[j-1] and
/// fb_micro[j-1] hold the order-j layer field and its hydrodynamic-complement
/// part (the order-1 entry of fb_micro is zero and may be left empty);
/// interior[i-1] holds the interior order-i kinetic trace at the wall; and
/// taylor[{i, l}] holds the l-th wall derivative of the interior order-i
/// field, consumed with the Taylor weight zeta^l / l!.
struct LayerCoupling {
    std::vector<KineticField> fb;
    std::vector<KineticField> fb_micro;
    KineticField fb_prev_dt; ///< d_t f^b_{k-1}; empty means zero
    std::vector<Vec> interior;
    std::map<std::pair<int, int>, Vec> taylor;
};

/// The coupling correction J_{k-1} (k >= 2):
///   J_{k-1} = Linv[ -(I-P) v3 d_zeta (I-P)f^b_k  -  (I-P) d_t f^b_{k-1}
///                   + sum_{i+j=k+1, i>=2} {G(f0_i, f^b_j) + G(f^b_j, f0_i)}
///                   + sum_{i+j=k+1, i,j>=2} G(f^b_i, f^b_j)
///                   + sum_{i+j+l=k+1, l>=1} (zeta^l/l!) {G(f_i^{(l)}, f^b_j) + sym}
///                   + G(f0_1 + f^b_1, (I-P)f^b_k) + G((I-P)f^b_k, f0_1 + f^b_1) ]
/// where G is the bilinear collision form and Linv the pseudo-inverse of the
/// linearized operator.  Rows of the result are orthogonal to the collision
/// invariants at every node.
KineticField layer_coupling_correction(int k, const LayerCoupling& data,
                                       const CollisionOperator& op, const LayerGrid& grid,
                                       const VelocityGrid& vgrid);

/// Microscopic (hydrodynamic-complement) part of the order-(k+1) layer
/// corrector, k in {1, 2}:
///   (I-P) f^b_{k+1} = -(sum_j Ahat_{3j} d_zeta u^b_{k,j} + Bhat_3 d_zeta theta^b_k)
///                     + c_k * [A : u^b_1 (x) u^b_k + B . (u^b_1 theta^b_k + u^b_k theta^b_1)
///                              + C theta^b_1 theta^b_k]
///                     + [A : u0_1 (x) u^b_k + B . (u0_1 theta^b_k + u^b_k theta0_1)
///                        + C theta0_1 theta^b_k]
///                     + J_{k-1}
/// with c_1 = 1/2 (the self-pair enters once) and c_2 = 1.  For k = 1 the
/// coupling correction is identically zero and J_prev must be null; for k = 2
/// it must be supplied.  `states` holds the layer states of orders 1..k at the
/// chosen time; `trace` is the interior order-1 wall trace at the same time.
KineticField layer_microscopic(int k, const std::vector<ViscousLayerState>& states,
                               const WallTrace& trace, const HatFields& hats,
                               const BurnettFields& fields, const KineticField* J_prev,
                               const LayerGrid& grid, const VelocityGrid& vgrid);

/// Full first-order layer corrector: a pure infinitesimal-Maxwellian profile
/// built from the state's tangential velocity, temperature, and density.
/// Requires rho_b = -theta_b (zero layer pressure) within tolerance.
KineticField assemble_fb1(const ViscousLayerState& state, const VelocityGrid& vgrid);

/// Full second-order layer corrector: the hydrodynamic part of the order-2
/// state (whose normal velocity is the order-1 state's u3_next) plus the
/// microscopic part produced by layer_microscopic with k = 1.
KineticField assemble_fb2(const std::vector<ViscousLayerState>& states, const WallTrace& trace,
                          const HatFields& hats, const BurnettFields& fields,
                          const LayerGrid& grid, const VelocityGrid& vgrid);

/// Write a recorded trajectory as CSV with columns
/// t,zeta,u1b,u2b,thetab,rhob,u3_next,p_next (empty next-order fields print as
/// zero).
void write_layer_csv(std::ostream& os, const ViscousTrajectory& traj, const LayerGrid& grid);

} // namespace kfl
