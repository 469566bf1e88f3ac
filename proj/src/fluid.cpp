#include "kfl/fluid.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "kfl/error.hpp"

namespace kfl {

namespace {

// Planar flux of (rho, u1, u2, u3, theta): F = (u3, 0, 0, rho + theta, 2/3 u3).
struct CellRhs {
    Vec rho;
    std::array<Vec, 3> u;
    Vec theta;
};

struct WallState {
    double rho, u1, u2, u3, theta;
};

// Characteristic outflow ghost: the outgoing wave (speed +c) and the
// stationary entropy wave are extrapolated from the last cell, while the
// incoming wave (speed -c) keeps the far-field value it had initially, so a
// constant state is an exact fixed point and outgoing pulses leave cleanly.
// Right eigenvectors on (rho, u3, theta): r_pm = (1, pm c, 2/3),
// r_0 = (1, 0, -1); left duals l_pm = 3(1, pm c, 1)/10, l_0 = (2, 0, -3)/5.
WallState outflow_ghost(const FluidState& s, double w_minus_far) {
    const Eigen::Index n = s.rho.size();
    const double c = acoustic_speed();
    const double rho = s.rho[n - 1], u3 = s.u[2][n - 1], theta = s.theta[n - 1];
    // Replace only the incoming component: ghost = state - (w_m - w_m,far) r_-.
    // Written this way the ghost equals the last cell exactly (to the bit)
    // whenever the incoming characteristic still carries its far-field value.
    const double dm = (rho - c * u3 + theta) * 3.0 / 10.0 - w_minus_far;
    WallState g;
    g.rho = rho - dm;
    g.u3 = u3 + dm * c;
    g.theta = theta - dm * 2.0 / 3.0;
    g.u1 = s.u[0][n - 1];
    g.u2 = s.u[1][n - 1];
    return g;
}

double incoming_characteristic(const FluidState& s) {
    const Eigen::Index n = s.rho.size();
    return (s.rho[n - 1] - acoustic_speed() * s.u[2][n - 1] + s.theta[n - 1]) * 3.0 / 10.0;
}

}  // namespace

double acoustic_speed() { return std::sqrt(5.0 / 3.0); }

InteriorGrid::InteriorGrid(Vec edges) : edges_(std::move(edges)) {
    require(edges_.size() >= 2, ErrorKind::Config, "interior grid needs at least one cell");
    require(edges_[0] == 0.0, ErrorKind::Config, "interior grid must start on the boundary");
    for (Eigen::Index i = 1; i < edges_.size(); ++i)
        require(edges_[i] > edges_[i - 1], ErrorKind::Config,
                "interior grid edges must increase strictly");
    centers_ = 0.5 * (edges_.head(edges_.size() - 1) + edges_.tail(edges_.size() - 1));
}

InteriorGrid InteriorGrid::uniform(double domain_length, Eigen::Index n_cells) {
    require(domain_length > 0.0 && n_cells >= 1, ErrorKind::Config,
            "interior grid needs positive length and cell count");
    Vec edges = Vec::LinSpaced(n_cells + 1, 0.0, domain_length);
    edges[0] = 0.0;
    return InteriorGrid(std::move(edges));
}

FluidState FluidState::zero(int order, const InteriorGrid& grid) {
    FluidState s;
    s.order = order;
    s.rho = Vec::Zero(grid.cells());
    for (auto& ui : s.u) ui = Vec::Zero(grid.cells());
    s.theta = Vec::Zero(grid.cells());
    return s;
}

namespace {

// Second-order centered-flux semi-discretization.  Skew symmetry under the
// (rho, u, 3/2 theta) weights makes the interior exactly energy conserving;
// the wall interface closes with the prescribed normal velocity and the far
// interface with the characteristic ghost.
CellRhs spatial_rhs(const FluidState& s, const InteriorGrid& grid, double wall_u3,
                    double w_minus_far, const FluidSources* sources, const FluidSourceSample* src,
                    double* mass_in, double* mass_out) {
    const Eigen::Index n = grid.cells();
    CellRhs rhs;
    rhs.rho.resize(n);
    rhs.u[0] = Vec::Zero(n);
    rhs.u[1] = Vec::Zero(n);
    rhs.u[2].resize(n);
    rhs.theta.resize(n);

    // Interface fluxes for the (rho, u3, theta) block.  The per-cell pressure
    // is formed once so that averaging across an interface between equal
    // states reproduces the cell value to the bit (constant states must be
    // exact fixed points).
    const Vec p = s.rho + s.theta;
    Vec f_rho(n + 1), f_u3(n + 1), f_theta(n + 1);
    for (Eigen::Index e = 1; e < n; ++e) {
        const double u3 = 0.5 * (s.u[2][e - 1] + s.u[2][e]);
        f_rho[e] = u3;
        f_u3[e] = 0.5 * (p[e - 1] + p[e]);
        f_theta[e] = 2.0 / 3.0 * u3;
    }
    // Wall: normal velocity prescribed, pressure mirrored evenly.
    f_rho[0] = wall_u3;
    f_u3[0] = p[0];
    f_theta[0] = 2.0 / 3.0 * wall_u3;
    // Far edge: average against the characteristic ghost.
    const WallState g = outflow_ghost(s, w_minus_far);
    f_rho[n] = 0.5 * (s.u[2][n - 1] + g.u3);
    f_u3[n] = 0.5 * (p[n - 1] + (g.rho + g.theta));
    f_theta[n] = 2.0 / 3.0 * f_rho[n];

    if (mass_in) *mass_in = f_rho[0];
    if (mass_out) *mass_out = f_rho[n];

    for (Eigen::Index i = 0; i < n; ++i) {
        const double inv_dx = 1.0 / grid.dx(i);
        rhs.rho[i] = -(f_rho[i + 1] - f_rho[i]) * inv_dx;
        rhs.u[2][i] = -(f_u3[i + 1] - f_u3[i]) * inv_dx;
        rhs.theta[i] = -(f_theta[i + 1] - f_theta[i]) * inv_dx;
    }
    if (sources && *sources) {
        for (int c = 0; c < 3; ++c) rhs.u[c] += src->u[c];
        rhs.theta += src->theta;
    }
    return rhs;
}

Trajectory evolve(const FluidState& init, const FluidSources& sources,
                  const WallNormalVelocity& wall_u3, double T, const InteriorGrid& grid,
                  const FluidSolveOptions& opt) {
    require(opt.cfl > 0.0 && opt.cfl <= 1.0, ErrorKind::Config,
            "Courant number must lie in (0, 1]");
    require(T >= 0.0, ErrorKind::Config, "target time must be nonnegative");
    require(init.rho.size() == grid.cells(), ErrorKind::Config,
            "initial state does not match the interior grid");
    require(opt.record_every >= 1, ErrorKind::Config, "record_every must be positive");

    auto wall = [&wall_u3](double t) { return wall_u3 ? wall_u3(t) : 0.0; };

    // First-order compatibility of the wall trace with the boundary datum.
    {
        double trace = init.u[2][0];
        if (grid.cells() >= 2) trace = 1.5 * init.u[2][0] - 0.5 * init.u[2][1];
        require(std::abs(trace - wall(0.0)) <= opt.compat_tol, ErrorKind::Config,
                "initial normal velocity is incompatible with the wall datum");
    }

    double dx_min = grid.dx(0);
    for (Eigen::Index i = 1; i < grid.cells(); ++i) dx_min = std::min(dx_min, grid.dx(i));
    const double dt_max = opt.cfl * dx_min / acoustic_speed();
    const long n_steps = T > 0.0 ? static_cast<long>(std::ceil(T / dt_max - 1e-12)) : 0;
    const double dt = n_steps > 0 ? T / static_cast<double>(n_steps) : 0.0;

    const double wm_far = incoming_characteristic(init);

    Trajectory traj;
    traj.states.push_back(init);
    traj.states.front().time = 0.0;

    FluidState cur = init;
    cur.time = 0.0;
    FluidSourceSample s0, s1;
    auto check_sample = [&grid](const FluidSourceSample& ss) {
        bool ok = ss.theta.size() == grid.cells();
        for (const Vec& c : ss.u) ok = ok && c.size() == grid.cells();
        require(ok, ErrorKind::Config, "source sample does not match the interior grid");
    };
    for (long step = 0; step < n_steps; ++step) {
        const double t = dt * static_cast<double>(step);
        if (sources) { s0 = sources(t); check_sample(s0); }
        double in0 = 0.0, out0 = 0.0, in1 = 0.0, out1 = 0.0;
        const CellRhs k1 = spatial_rhs(cur, grid, wall(t), wm_far, &sources, &s0, &in0, &out0);

        FluidState mid = cur;
        mid.rho += dt * k1.rho;
        for (int c = 0; c < 3; ++c) mid.u[c] += dt * k1.u[c];
        mid.theta += dt * k1.theta;

        const double t1 = t + dt;
        if (sources) { s1 = sources(t1); check_sample(s1); }
        const CellRhs k2 = spatial_rhs(mid, grid, wall(t1), wm_far, &sources, &s1, &in1, &out1);

        cur.rho += 0.5 * dt * (k1.rho + k2.rho);
        for (int c = 0; c < 3; ++c) cur.u[c] += 0.5 * dt * (k1.u[c] + k2.u[c]);
        cur.theta += 0.5 * dt * (k1.theta + k2.theta);
        cur.time = dt * static_cast<double>(step + 1);
        traj.wall_mass_influx += 0.5 * dt * (in0 + in1);
        traj.outflow_mass += 0.5 * dt * (out0 + out1);

        if ((step + 1) % opt.record_every == 0 || step + 1 == n_steps) {
            if (traj.states.back().time != cur.time) traj.states.push_back(cur);
        }
    }
    return traj;
}

}  // namespace

Trajectory solve_acoustic(const FluidState& init, double T, const InteriorGrid& grid,
                          const FluidSolveOptions& opt) {
    return evolve(init, FluidSources(), WallNormalVelocity(), T, grid, opt);
}

Trajectory solve_fluid_k(const FluidState& init, const FluidSources& sources,
                         const WallNormalVelocity& wall_u3, double T, const InteriorGrid& grid,
                         const FluidSolveOptions& opt) {
    return evolve(init, sources, wall_u3, T, grid, opt);
}

double infinitesimal_maxwellian_at(const FluidState& state, Eigen::Index cell, double v1,
                                   double v2, double v3) {
    const double s2 = v1 * v1 + v2 * v2 + v3 * v3;
    return (state.rho[cell] + state.u[0][cell] * v1 + state.u[1][cell] * v2 +
            state.u[2][cell] * v3 + state.theta[cell] * 0.5 * (s2 - 3.0)) *
           std::sqrt(maxwellian(v1, v2, v3));
}

KineticField assemble_f1(const FluidState& state, const VelocityGrid& vgrid) {
    KineticField f;
    f.space_shape = {state.rho.size()};
    f.values.resize(state.rho.size(), vgrid.size());
    const auto& chi = vgrid.chi();
    for (Eigen::Index i = 0; i < state.rho.size(); ++i) {
        f.values.row(i) = (state.rho[i] * chi[0] + state.u[0][i] * chi[1] +
                           state.u[1][i] * chi[2] + state.u[2][i] * chi[3] +
                           state.theta[i] * chi[4])
                              .transpose();
    }
    return f;
}

KineticField assemble_f2(const FluidState& state1, const FluidState& state2,
                         const BurnettFields& fields, const VelocityGrid& vgrid) {
    require(state1.rho.size() == state2.rho.size(), ErrorKind::Config,
            "first- and second-order states must share the interior grid");
    KineticField f = assemble_f1(state2, vgrid);
    for (Eigen::Index i = 0; i < state1.rho.size(); ++i) {
        Vec quad = Vec::Zero(vgrid.size());
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b)
                quad += state1.u[a][i] * state1.u[b][i] * fields.a[a][b];
            quad += 2.0 * state1.theta[i] * state1.u[a][i] * fields.b[a];
        }
        quad += state1.theta[i] * state1.theta[i] * fields.c;
        f.values.row(i) += 0.5 * quad.transpose();
    }
    return f;
}

KineticField microscopic_part_k(const CollisionOperator& op, const VelocityGrid& vgrid,
                                const InteriorGrid& grid,
                                const std::vector<KineticField>& f_lower, int k) {
    require(k == 2 || k == 3, ErrorKind::Config, "microscopic part implemented for orders 2, 3");
    require(static_cast<int>(f_lower.size()) >= k - 1, ErrorKind::Config,
            "microscopic part needs all lower-order coefficients");
    const Eigen::Index n = grid.cells();
    require(k == 2 || n >= 2, ErrorKind::Config,
            "transport terms need at least two interior cells");
    for (const auto& fl : f_lower)
        require(fl.values.rows() == n && fl.values.cols() == vgrid.size(), ErrorKind::Config,
                "coefficient fields must live on the interior x velocity grid");

    KineticField out;
    out.space_shape = {n};
    out.values.resize(n, vgrid.size());

    for (Eigen::Index i = 0; i < n; ++i) {
        Vec rhs = Vec::Zero(vgrid.size());
        if (k == 2) {
            const Vec f1 = f_lower[0].values.row(i).transpose();
            rhs = op.apply_Gamma(f1, f1);
        } else {
            const Vec f1 = f_lower[0].values.row(i).transpose();
            const Vec f2 = f_lower[1].values.row(i).transpose();
            rhs = op.apply_Gamma(f1, f2) + op.apply_Gamma(f2, f1);

            // Transport of the first-order coefficient.  Its time derivative
            // follows from the conservation-law system applied to the spatial
            // derivatives of its own moments, so the bracket stays orthogonal
            // to the conserved fields whenever the moments solve that system.
            double drho, du1, du2, du3, dtheta;
            auto deriv = [&](auto moment) {
                const double dx = grid.centers()[std::min(i + 1, n - 1)] -
                                  grid.centers()[std::max<Eigen::Index>(i - 1, 0)];
                return (moment(std::min(i + 1, n - 1)) - moment(std::max<Eigen::Index>(i - 1, 0))) /
                       dx;
            };
            const auto& chi = vgrid.chi();
            auto row_moment = [&](const Vec& c) {
                return [&, c](Eigen::Index j) {
                    return vgrid.inner(f_lower[0].values.row(j).transpose(), c);
                };
            };
            drho = deriv(row_moment(chi[0]));
            du1 = deriv(row_moment(chi[1]));
            du2 = deriv(row_moment(chi[2]));
            du3 = deriv(row_moment(chi[3]));
            dtheta = 2.0 / 3.0 * deriv(row_moment(chi[4]));

            // d_t f1 from the conservation-law system, v3 d_3 f1 directly.
            const Vec dt_f1 = -du3 * chi[0] - (drho + dtheta) * chi[3] - (2.0 / 3.0) * du3 * chi[4];
            const Vec d3_f1 =
                drho * chi[0] + du1 * chi[1] + du2 * chi[2] + du3 * chi[3] + dtheta * chi[4];
            rhs -= dt_f1 + vgrid.v3().cwiseProduct(d3_f1);
        }
        out.values.row(i) = op.invert_L(rhs).transpose();
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const InteriorGrid& grid) {
    os << "t,x3,rho,u1,u2,u3,theta\n";
    char row[192];
    for (const FluidState& s : traj.states) {
        for (Eigen::Index i = 0; i < grid.cells(); ++i) {
            std::snprintf(row, sizeof row, "%.10g,%.10g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.time,
                          grid.centers()[i], s.rho[i], s.u[0][i], s.u[1][i], s.u[2][i], s.theta[i]);
            os << row;
        }
    }
    os << std::flush;
}

}  // namespace kfl
