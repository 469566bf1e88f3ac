#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "kfl/burnett.hpp"
#include "kfl/collision.hpp"
#include "kfl/velocity_grid.hpp"

namespace kfl {

/// Finite-volume grid on the half-line segment [0, L]: cell edges with the
/// first edge on the boundary, states stored at cell centers.
class InteriorGrid {
  public:
    explicit InteriorGrid(Vec edges);
    static InteriorGrid uniform(double domain_length, Eigen::Index n_cells);

    Eigen::Index cells() const { return centers_.size(); }
    const Vec& edges() const { return edges_; }
    const Vec& centers() const { return centers_; }
    double dx(Eigen::Index i) const { return edges_[i + 1] - edges_[i]; }
    double domain_length() const { return edges_[edges_.size() - 1]; }

  private:
    Vec edges_, centers_;
};

/// Macroscopic fields of one expansion order on the interior grid.
struct FluidState {
    int order = 1;
    double time = 0.0;
    Vec rho;
    std::array<Vec, 3> u;
    Vec theta;

    static FluidState zero(int order, const InteriorGrid& grid);
};

/// Per-cell source samples for the sourced hierarchy: the divergence terms
/// entering the velocity and temperature equations (density is conservative
/// and never sourced).
struct FluidSourceSample {
    std::array<Vec, 3> u;
    Vec theta;
};
using FluidSources = std::function<FluidSourceSample(double t)>;

/// Normal-velocity boundary datum at the wall, as a time series.
using WallNormalVelocity = std::function<double(double t)>;

struct FluidSolveOptions {
    double cfl = 0.5;          // Courant number against the sound speed
    double compat_tol = 1e-6;  // admissible wall-trace mismatch of the data
    Eigen::Index record_every = 1;
};

struct Trajectory {
    std::vector<FluidState> states;  // first entry is the initial state
    double wall_mass_influx = 0.0;   // time-integrated mass flux through x3 = 0
    double outflow_mass = 0.0;       // time-integrated mass flux through x3 = L

    const FluidState& back() const { return states.back(); }
};

/// Sound speed of the linearized system, sqrt(5/3).
double acoustic_speed();

/// Evolves (rho, u, theta) under the planar linear acoustic system with the
/// reflecting wall u3 = 0 and characteristic outflow at the far edge.
Trajectory solve_acoustic(const FluidState& init, double T, const InteriorGrid& grid,
                          const FluidSolveOptions& opt = {});

/// Same scheme with divergence sources on the velocity/temperature equations
/// and an inhomogeneous normal-velocity wall datum.
Trajectory solve_fluid_k(const FluidState& init, const FluidSources& sources,
                         const WallNormalVelocity& wall_u3, double T, const InteriorGrid& grid,
                         const FluidSolveOptions& opt = {});

/// The infinitesimal Maxwellian of a first-order state: rows are interior
/// cells, columns velocity nodes.
KineticField assemble_f1(const FluidState& state, const VelocityGrid& vgrid);

/// The same field evaluated at an arbitrary velocity.
double infinitesimal_maxwellian_at(const FluidState& state, Eigen::Index cell, double v1,
                                   double v2, double v3);

/// Second-order interior coefficient: hydrodynamic part of state2 plus the
/// quadratic moment-field closure in the first-order state.
KineticField assemble_f2(const FluidState& state1, const FluidState& state2,
                         const BurnettFields& fields, const VelocityGrid& vgrid);

/// The microscopic (conserved-orthogonal) part of the order-k coefficient,
/// solved cell by cell from the bilinear form of the lower-order fields minus
/// the transport of the order-(k-2) field.  f_lower holds f_1, ..., f_{k-1}.
KineticField microscopic_part_k(const CollisionOperator& op, const VelocityGrid& vgrid,
                                const InteriorGrid& grid,
                                const std::vector<KineticField>& f_lower, int k);

/// Comma-separated trajectory table: t, x3, rho, u1, u2, u3, theta.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const InteriorGrid& grid);

}  // namespace kfl
