#include "kfl/viscous.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <utility>

#include "kfl/error.hpp"

namespace kfl {

namespace {

std::span<const double> as_span(const Vec& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Derivative weights of the quadratic through (ta, tb, tc), evaluated at te.
std::array<double, 3> lagrange3_derivative(double ta, double tb, double tc, double te) {
    return {(2.0 * te - tb - tc) / ((ta - tb) * (ta - tc)),
            (2.0 * te - ta - tc) / ((tb - ta) * (tb - tc)),
            (2.0 * te - ta - tb) / ((tc - ta) * (tc - tb))};
}

}  // namespace

// ---------------------------------------------------------------------------
// LayerGrid
// ---------------------------------------------------------------------------

LayerGrid::LayerGrid(Vec nodes, LayerStretch stretch) : nodes_(std::move(nodes)), stretch_(stretch) {
    require(nodes_.size() >= 3, ErrorKind::Config, "layer grid needs at least three nodes");
    require(nodes_[0] == 0.0, ErrorKind::Config, "layer grid must start at the wall (zeta = 0)");
    for (Eigen::Index i = 1; i < nodes_.size(); ++i) {
        require(nodes_[i] > nodes_[i - 1], ErrorKind::Config,
                "layer grid nodes must be strictly increasing");
    }
}

LayerGrid LayerGrid::uniform(double zeta_max, Eigen::Index n_nodes) {
    require(zeta_max > 0.0, ErrorKind::Config, "layer grid extent must be positive");
    require(n_nodes >= 3, ErrorKind::Config, "layer grid needs at least three nodes");
    return LayerGrid(Vec::LinSpaced(n_nodes, 0.0, zeta_max), LayerStretch::Uniform);
}

LayerGrid LayerGrid::graded(double zeta_max, Eigen::Index n_nodes, double strength) {
    require(zeta_max > 0.0, ErrorKind::Config, "layer grid extent must be positive");
    require(n_nodes >= 3, ErrorKind::Config, "layer grid needs at least three nodes");
    require(strength > 0.0, ErrorKind::Config, "grading strength must be positive");
    Vec nodes(n_nodes);
    const double denom = std::expm1(strength);
    for (Eigen::Index j = 0; j < n_nodes; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(n_nodes - 1);
        nodes[j] = zeta_max * std::expm1(strength * x) / denom;
    }
    nodes[0] = 0.0;
    nodes[n_nodes - 1] = zeta_max;
    return LayerGrid(std::move(nodes), LayerStretch::Graded);
}

Vec LayerGrid::derivative(const Vec& f) const {
    require(f.size() == nodes_.size(), ErrorKind::Config, "profile size does not match the grid");
    return to_vec(derivative_nonuniform(as_span(nodes_), as_span(f)));
}

Vec LayerGrid::second_derivative(const Vec& f) const {
    require(f.size() == nodes_.size(), ErrorKind::Config, "profile size does not match the grid");
    const Eigen::Index n = nodes_.size();
    Vec out(n);
    auto stencil = [&](Eigen::Index c, Eigen::Index row) {
        // Second derivative of the quadratic through nodes c-1, c, c+1 (it is
        // constant, so the evaluation row only picks where it is stored).
        const double hm = nodes_[c] - nodes_[c - 1];
        const double hp = nodes_[c + 1] - nodes_[c];
        out[row] = 2.0 * (f[c - 1] * hp - f[c] * (hm + hp) + f[c + 1] * hm) /
                   (hm * hp * (hm + hp));
    };
    for (Eigen::Index i = 1; i + 1 < n; ++i) stencil(i, i);
    stencil(1, 0);
    stencil(n - 2, n - 1);
    return out;
}

Vec LayerGrid::tail_integral(const Vec& f) const {
    require(f.size() == nodes_.size(), ErrorKind::Config, "profile size does not match the grid");
    return to_vec(tail_integral_trapezoid(as_span(nodes_), as_span(f)));
}

double LayerGrid::integral(const Vec& f) const { return tail_integral(f)[0]; }

double LayerGrid::weighted_tail_fraction(const Vec& f, double l) const {
    require(f.size() == nodes_.size(), ErrorKind::Config, "profile size does not match the grid");
    const Eigen::Index n = nodes_.size();
    Vec g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = std::pow(1.0 + nodes_[i], l) * f[i] * f[i];
    const Vec tails = tail_integral(g);
    const double total = tails[0];
    if (total <= 0.0) return 0.0;
    const double mid = 0.5 * zeta_max();
    Eigen::Index i = 0;
    while (nodes_[i] < mid) ++i;  // nodes_[n-1] = zeta_max >= mid, so this stops
    double tail = tails[i];
    if (i > 0 && nodes_[i] > mid) {
        // Add the sliver between mid and the first node past it.
        const double frac = (nodes_[i] - mid) / (nodes_[i] - nodes_[i - 1]);
        const double g_mid = g[i] + frac * (g[i - 1] - g[i]);
        tail += 0.5 * (g_mid + g[i]) * (nodes_[i] - mid);
    }
    return tail / total;
}

// ---------------------------------------------------------------------------
// Diffusion solves
// ---------------------------------------------------------------------------

double heat_diffusivity(HeatKind kind, const Transport& transport) {
    if (kind == HeatKind::Momentum) {
        require(transport.kappa1 > 0.0, ErrorKind::Config, "shear response must be positive");
        return transport.kappa1;
    }
    require(transport.kappa2 > 0.0, ErrorKind::Config, "heat response must be positive");
    return 0.4 * transport.kappa2;
}

namespace {

/// One implicit layer-diffusion step: solves (I - h D L) w_new = rhs with
/// w_new[0] = bc and w_new[n-1] = 0, where L is the three-point Laplacian on
/// the grid nodes.  The Thomas elimination is unconditionally stable here
/// because the matrix is strictly diagonally dominant.
void implicit_step(const LayerGrid& grid, double h, double D, double bc, const Vec& rhs, Vec& w) {
    const Eigen::Index n = grid.size();
    const Vec& z = grid.nodes();
    const Eigen::Index m = n - 2;  // interior unknowns
    Vec lower(m), diag(m), upper(m), r(m);
    for (Eigen::Index i = 1; i <= m; ++i) {
        const double hm = z[i] - z[i - 1];
        const double hp = z[i + 1] - z[i];
        const double clo = 2.0 / (hm * (hm + hp));
        const double chi = 2.0 / (hp * (hm + hp));
        lower[i - 1] = -h * D * clo;
        diag[i - 1] = 1.0 + h * D * (clo + chi);
        upper[i - 1] = -h * D * chi;
        r[i - 1] = rhs[i];
    }
    r[0] += h * D * (2.0 / ((z[1] - z[0]) * (z[2] - z[0]))) * bc;
    // Far-end value is zero, so no contribution at i = m.
    for (Eigen::Index i = 1; i < m; ++i) {
        const double f = lower[i] / diag[i - 1];
        diag[i] -= f * upper[i - 1];
        r[i] -= f * r[i - 1];
    }
    w[n - 2] = r[m - 1] / diag[m - 1];
    for (Eigen::Index i = m - 2; i >= 0; --i) {
        w[i + 1] = (r[i] - upper[i] * w[i + 2]) / diag[i];
    }
    w[0] = bc;
    w[n - 1] = 0.0;
}

Vec sample_source(const TimeField& source, double t, Eigen::Index n) {
    if (!source) return Vec::Zero(n);
    Vec s = source(t);
    require(s.size() == n, ErrorKind::Config, "source sample size does not match the grid");
    return s;
}

}  // namespace

HeatTrajectory solve_heat(HeatKind kind, const Transport& transport, const TimeField& source,
                          const TimeScalar& dirichlet, const Vec& init, const LayerGrid& grid,
                          double T, const HeatOptions& opt) {
    const Eigen::Index n = grid.size();
    require(static_cast<bool>(dirichlet), ErrorKind::Config, "wall data callable is required");
    require(init.size() == n, ErrorKind::Config, "initial profile size does not match the grid");
    require(T >= 0.0, ErrorKind::Config, "final time must be nonnegative");
    require(opt.dt > 0.0, ErrorKind::Config, "time step must be positive");
    require(opt.record_every >= 1, ErrorKind::Config, "record_every must be at least 1");
    require(opt.smoothing_steps >= 0, ErrorKind::Config, "smoothing_steps must be nonnegative");
    require(std::abs(init[n - 1]) <= opt.far_tol, ErrorKind::Config,
            "initial profile does not decay at the far end of the layer grid");
    if (!opt.allow_corner_jump) {
        require(std::abs(init[0] - dirichlet(0.0)) <= opt.corner_tol, ErrorKind::Config,
                "wall data disagree with the initial profile at the corner; smooth the data or "
                "opt into allow_corner_jump");
    }

    const double D = heat_diffusivity(kind, transport);

    HeatTrajectory traj;
    traj.times.push_back(0.0);
    traj.values.push_back(init);
    if (T == 0.0) return traj;

    const auto steps = static_cast<Eigen::Index>(std::ceil(T / opt.dt - 1e-12));
    const double dt = T / static_cast<double>(steps);

    Vec w = init;
    w[n - 1] = 0.0;  // the far node is pinned to zero (init is within far_tol of it)
    const Vec& z = grid.nodes();
    Vec rhs(n), lw(n);
    for (Eigen::Index m = 0; m < steps; ++m) {
        const double t0 = static_cast<double>(m) * dt;
        // The step's end time is the value recorded below; the wall data are
        // evaluated at exactly this time so recorded states match it to the bit.
        const double t1 = static_cast<double>(m + 1) * dt;
        if (m < opt.smoothing_steps) {
            // Damped start: two implicit half-steps absorb rough corner data
            // without the undamped oscillations a trapezoidal step would keep.
            const double tmid = t0 + 0.5 * dt;
            for (const double te : {tmid, t1}) {
                rhs = w + 0.5 * dt * sample_source(source, te, n);
                implicit_step(grid, 0.5 * dt, D, dirichlet(te), rhs, w);
            }
        } else {
            // Trapezoidal step: explicit half uses the three-point Laplacian
            // of the current profile (boundary values included).
            for (Eigen::Index i = 1; i + 1 < n; ++i) {
                const double hm = z[i] - z[i - 1];
                const double hp = z[i + 1] - z[i];
                lw[i] = 2.0 * (w[i - 1] * hp - w[i] * (hm + hp) + w[i + 1] * hm) /
                        (hm * hp * (hm + hp));
            }
            rhs = w + dt * sample_source(source, t0 + 0.5 * dt, n);
            for (Eigen::Index i = 1; i + 1 < n; ++i) rhs[i] += 0.5 * dt * D * lw[i];
            implicit_step(grid, 0.5 * dt, D, dirichlet(t1), rhs, w);
        }
        require(w.allFinite(), ErrorKind::Solver, "diffusion solve produced a non-finite value");
        if ((m + 1) % opt.record_every == 0 || m + 1 == steps) {
            traj.times.push_back(t1);
            traj.values.push_back(w);
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Order-1 layer pipeline
// ---------------------------------------------------------------------------

LayerDirichlet layer_bc_k1(double u1_trace, double u2_trace, double theta_trace) {
    return {-u1_trace, -u2_trace, -theta_trace};
}

Vec normal_velocity_next(const ViscousTrajectory& traj, std::size_t index, const LayerGrid& grid) {
    const auto& states = traj.states;
    require(states.size() >= 3, ErrorKind::Config,
            "the time derivative of the layer density needs at least three recorded states");
    require(index < states.size(), ErrorKind::Config, "state index out of range");
    std::size_t lo = index >= 2 ? index - 2 : 0;
    if (index == 1) lo = 0;  // centered stencil
    const std::size_t a = lo, b = lo + 1, c = lo + 2;
    for (std::size_t s : {a, b, c}) {
        require(states[s].rho_b.size() == grid.size(), ErrorKind::Config,
                "recorded density profile size does not match the grid");
    }
    const auto w = lagrange3_derivative(states[a].time, states[b].time, states[c].time,
                                        states[index].time);
    const Vec drho_dt = w[0] * states[a].rho_b + w[1] * states[b].rho_b + w[2] * states[c].rho_b;
    return grid.tail_integral(drho_dt);
}

Vec pressure_next(const ViscousLayerState& state, const WallTrace& trace, const LayerGrid& grid) {
    require(state.order == 1, ErrorKind::Config,
            "the pressure closure is available for order-1 states only; higher orders need "
            "coupling-correction sources");
    const Eigen::Index n = grid.size();
    for (const Vec* f : {&state.u_bar[0], &state.u_bar[1]}) {
        require(f->size() == n, ErrorKind::Config, "profile size does not match the grid");
    }
    Vec advect = Vec::Zero(n);
    for (int i = 0; i < 2; ++i) {
        const Vec prod =
            (state.u_bar[i].array() + trace.u[static_cast<std::size_t>(i)]).matrix().cwiseProduct(
                state.u_bar[i]);
        advect += grid.derivative(prod);
    }
    // d_zeta p = (2/3) * advect with p(zeta_max) = 0, integrated inward.
    return -(2.0 / 3.0) * grid.tail_integral(advect);
}

ViscousTrajectory solve_layer_order1(const WallTraceSeries& trace, const std::array<Vec, 2>& init_u,
                                     const Vec& init_theta, const Transport& transport,
                                     const LayerGrid& grid, double T, const HeatOptions& opt) {
    require(static_cast<bool>(trace), ErrorKind::Config, "wall trace callable is required");

    auto bc = [&](double t) {
        const WallTrace w = trace(t);
        return layer_bc_k1(w.u[0], w.u[1], w.theta);
    };
    const auto u1 = solve_heat(HeatKind::Momentum, transport, {},
                               [&](double t) { return bc(t).u1; }, init_u[0], grid, T, opt);
    const auto u2 = solve_heat(HeatKind::Momentum, transport, {},
                               [&](double t) { return bc(t).u2; }, init_u[1], grid, T, opt);
    const auto th = solve_heat(HeatKind::Temperature, transport, {},
                               [&](double t) { return bc(t).theta; }, init_theta, grid, T, opt);

    ViscousTrajectory traj;
    traj.states.resize(u1.times.size());
    for (std::size_t m = 0; m < u1.times.size(); ++m) {
        ViscousLayerState& s = traj.states[m];
        s.order = 1;
        s.time = u1.times[m];
        s.u_bar = {u1.values[m], u2.values[m]};
        s.theta_b = th.values[m];
        s.rho_b = -s.theta_b;
    }
    if (traj.states.size() >= 3) {
        for (std::size_t m = 0; m < traj.states.size(); ++m) {
            traj.states[m].u3_next = normal_velocity_next(traj, m, grid);
            traj.states[m].p_next = pressure_next(traj.states[m], trace(traj.states[m].time), grid);
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Kinetic content
// ---------------------------------------------------------------------------

namespace {

/// d/dzeta of a layer kinetic field, column by column (each velocity node's
/// profile is differentiated with the same stencils scalar profiles use).
Mat field_zeta_derivative(const LayerGrid& grid, const Mat& values) {
    Mat out(values.rows(), values.cols());
    Vec col(values.rows());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        col = values.col(j);
        out.col(j) = grid.derivative(col);
    }
    return out;
}

/// The quadratic closure bracket of two infinitesimal-Maxwellian states:
///   A : u_a (x) u_b + B . (u_a th_b + u_b th_a) + C th_a th_b.
Vec closure_bracket(const BurnettFields& fields, const std::array<double, 3>& ua, double tha,
                    const std::array<double, 3>& ub, double thb) {
    Vec out = fields.c * (tha * thb);
    for (int i = 0; i < 3; ++i) {
        const auto si = static_cast<std::size_t>(i);
        out += fields.b[si] * (ua[si] * thb + ub[si] * tha);
        for (int j = 0; j < 3; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            out += fields.a[si][sj] * (ua[si] * ub[sj]);
        }
    }
    return out;
}

void check_field_shape(const KineticField& f, Eigen::Index n_space, Eigen::Index n_vel,
                       const char* what) {
    require(f.values.rows() == n_space && f.values.cols() == n_vel, ErrorKind::Config,
            std::string(what) + ": field shape does not match the grids");
}

}  // namespace

KineticField layer_coupling_correction(int k, const LayerCoupling& data,
                                       const CollisionOperator& op, const LayerGrid& grid,
                                       const VelocityGrid& vgrid) {
    require(k >= 2, ErrorKind::Config, "coupling corrections start at order 2");
    const Eigen::Index n = grid.size();
    const Eigen::Index nv = vgrid.size();
    require(static_cast<int>(data.fb.size()) >= k, ErrorKind::Config,
            "coupling data must hold the layer fields of orders 1..k");
    require(static_cast<int>(data.fb_micro.size()) >= k, ErrorKind::Config,
            "coupling data must hold the microscopic parts of orders 1..k");
    require(!data.interior.empty(), ErrorKind::Config,
            "coupling data must hold the interior wall traces");
    for (int j = 1; j <= k; ++j) {
        check_field_shape(data.fb[static_cast<std::size_t>(j - 1)], n, nv, "layer field");
    }
    const KineticField& micro_k = data.fb_micro[static_cast<std::size_t>(k - 1)];
    check_field_shape(micro_k, n, nv, "microscopic part");
    for (const Vec& f0 : data.interior) {
        require(f0.size() == nv, ErrorKind::Config, "interior trace size does not match the grid");
    }
    const bool has_dt = data.fb_prev_dt.values.size() > 0;
    if (has_dt) check_field_shape(data.fb_prev_dt, n, nv, "time derivative");

    const HydroProjection hydro = HydroProjection::build(vgrid);
    const Mat dmicro = field_zeta_derivative(grid, micro_k.values);
    const Vec& v3 = vgrid.v3();

    KineticField out;
    out.space_shape = {n};
    out.values.resize(n, nv);
    Vec rhs(nv), g(nv), h(nv);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Free streaming of the microscopic part, projected off the invariants.
        rhs = -hydro.complement(v3.cwiseProduct(dmicro.row(i).transpose()));
        if (has_dt) rhs -= hydro.complement(data.fb_prev_dt.values.row(i).transpose());

        // Interior x layer pairs with interior order >= 2.
        for (int i2 = 2; i2 <= k; ++i2) {
            const int j = k + 1 - i2;
            require(static_cast<int>(data.interior.size()) >= i2, ErrorKind::Config,
                    "coupling data is missing an interior trace");
            g = data.interior[static_cast<std::size_t>(i2 - 1)];
            h = data.fb[static_cast<std::size_t>(j - 1)].values.row(i).transpose();
            rhs += op.apply_Gamma(g, h) + op.apply_Gamma(h, g);
        }
        // Layer x layer pairs with both orders >= 2 (ordered pairs).
        for (int i2 = 2; i2 <= k - 1; ++i2) {
            const int j = k + 1 - i2;
            if (j < 2) continue;
            g = data.fb[static_cast<std::size_t>(i2 - 1)].values.row(i).transpose();
            h = data.fb[static_cast<std::size_t>(j - 1)].values.row(i).transpose();
            rhs += op.apply_Gamma(g, h);
        }
        // Taylor tail of the interior fields about the wall.
        for (const auto& [key, field] : data.taylor) {
            const auto [i2, l] = key;
            const int j = k + 1 - i2 - l;
            if (j < 1 || l < 1) continue;
            require(field.size() == nv, ErrorKind::Config,
                    "interior derivative size does not match the grid");
            double weight = 1.0;
            for (int q = 1; q <= l; ++q) weight *= grid.nodes()[i] / static_cast<double>(q);
            h = data.fb[static_cast<std::size_t>(j - 1)].values.row(i).transpose();
            rhs += weight * (op.apply_Gamma(field, h) + op.apply_Gamma(h, field));
        }
        // First-order fields against the microscopic part of order k.
        g = data.interior[0] + data.fb[0].values.row(i).transpose();
        h = micro_k.values.row(i).transpose();
        rhs += op.apply_Gamma(g, h) + op.apply_Gamma(h, g);

        out.values.row(i) = op.invert_L(hydro.complement(rhs)).transpose();
    }
    return out;
}

KineticField layer_microscopic(int k, const std::vector<ViscousLayerState>& states,
                               const WallTrace& trace, const HatFields& hats,
                               const BurnettFields& fields, const KineticField* J_prev,
                               const LayerGrid& grid, const VelocityGrid& vgrid) {
    require(k == 1 || k == 2, ErrorKind::Config, "microscopic parts are built for orders 2 and 3");
    require(static_cast<int>(states.size()) >= k, ErrorKind::Config,
            "layer states of orders 1..k are required");
    const Eigen::Index n = grid.size();
    const Eigen::Index nv = vgrid.size();
    for (int j = 0; j < k; ++j) {
        const ViscousLayerState& s = states[static_cast<std::size_t>(j)];
        require(s.order == j + 1, ErrorKind::Config, "layer states must be ordered 1..k");
        require(s.u_bar[0].size() == n && s.u_bar[1].size() == n && s.theta_b.size() == n,
                ErrorKind::Config, "layer profile size does not match the grid");
    }
    for (int j = 0; j < 3; ++j) {
        require(hats.a_hat[2][static_cast<std::size_t>(j)].size() == nv, ErrorKind::Config,
                "kinetic coefficient fields do not match the velocity grid");
    }
    require(hats.b_hat[2].size() == nv && fields.c.size() == nv, ErrorKind::Config,
            "kinetic coefficient fields do not match the velocity grid");
    if (k == 1) {
        require(J_prev == nullptr, ErrorKind::Config,
                "the order-0 coupling correction is identically zero; pass none");
    } else {
        require(J_prev != nullptr, ErrorKind::Config,
                "the order-2 microscopic part needs the order-1 coupling correction");
        check_field_shape(*J_prev, n, nv, "coupling correction");
    }

    const ViscousLayerState& s1 = states[0];
    const ViscousLayerState& sk = states[static_cast<std::size_t>(k - 1)];
    Vec u3_k;
    if (k == 1) {
        u3_k = Vec::Zero(n);
    } else {
        require(s1.u3_next.size() == n, ErrorKind::Config,
                "the order-2 microscopic part needs the order-1 normal velocity (u3_next)");
        u3_k = s1.u3_next;
    }

    const std::array<Vec, 4> grads = {grid.derivative(sk.u_bar[0]), grid.derivative(sk.u_bar[1]),
                                      grid.derivative(u3_k), grid.derivative(sk.theta_b)};
    const double self_pair = k == 1 ? 0.5 : 1.0;

    KineticField out;
    out.space_shape = {n};
    out.values.resize(n, nv);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vec row = -(hats.a_hat[2][0] * grads[0][i] + hats.a_hat[2][1] * grads[1][i] +
                    hats.a_hat[2][2] * grads[2][i] + hats.b_hat[2] * grads[3][i]);
        const std::array<double, 3> u1_i = {s1.u_bar[0][i], s1.u_bar[1][i], 0.0};
        const std::array<double, 3> uk_i = {sk.u_bar[0][i], sk.u_bar[1][i], u3_k[i]};
        row += self_pair * closure_bracket(fields, u1_i, s1.theta_b[i], uk_i, sk.theta_b[i]);
        row += closure_bracket(fields, trace.u, trace.theta, uk_i, sk.theta_b[i]);
        if (J_prev) row += J_prev->values.row(i).transpose();
        out.values.row(i) = row.transpose();
    }
    return out;
}

KineticField assemble_fb1(const ViscousLayerState& state, const VelocityGrid& vgrid) {
    require(state.order == 1, ErrorKind::Config, "expected an order-1 layer state");
    const Eigen::Index n = state.theta_b.size();
    require(state.u_bar[0].size() == n && state.u_bar[1].size() == n && state.rho_b.size() == n,
            ErrorKind::Config, "layer profile sizes disagree");
    require((state.rho_b + state.theta_b).cwiseAbs().maxCoeff() <= 1e-10, ErrorKind::Config,
            "constraint violation: the first-order layer must carry zero pressure "
            "(rho_b = -theta_b)");
    const auto& chi = vgrid.chi();
    KineticField f;
    f.space_shape = {n};
    f.values.resize(n, vgrid.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        f.values.row(i) = (state.rho_b[i] * chi[0] + state.u_bar[0][i] * chi[1] +
                           state.u_bar[1][i] * chi[2] + state.theta_b[i] * chi[4])
                              .transpose();
    }
    return f;
}

KineticField assemble_fb2(const std::vector<ViscousLayerState>& states, const WallTrace& trace,
                          const HatFields& hats, const BurnettFields& fields,
                          const LayerGrid& grid, const VelocityGrid& vgrid) {
    require(states.size() >= 2, ErrorKind::Config,
            "the second-order corrector needs the order-1 and order-2 layer states");
    const ViscousLayerState& s1 = states[0];
    const ViscousLayerState& s2 = states[1];
    require(s1.order == 1 && s2.order == 2, ErrorKind::Config,
            "layer states must be ordered 1..2");
    const Eigen::Index n = grid.size();
    require(s1.u3_next.size() == n, ErrorKind::Config,
            "the second-order corrector needs the order-1 normal velocity (u3_next)");
    require(s2.u_bar[0].size() == n && s2.u_bar[1].size() == n && s2.theta_b.size() == n &&
                s2.rho_b.size() == n,
            ErrorKind::Config, "layer profile size does not match the grid");

    KineticField f = layer_microscopic(1, states, trace, hats, fields, nullptr, grid, vgrid);
    const auto& chi = vgrid.chi();
    for (Eigen::Index i = 0; i < n; ++i) {
        f.values.row(i) += (s2.rho_b[i] * chi[0] + s2.u_bar[0][i] * chi[1] +
                            s2.u_bar[1][i] * chi[2] + s1.u3_next[i] * chi[3] +
                            s2.theta_b[i] * chi[4])
                               .transpose();
    }
    return f;
}

void write_layer_csv(std::ostream& os, const ViscousTrajectory& traj, const LayerGrid& grid) {
    os << "t,zeta,u1b,u2b,thetab,rhob,u3_next,p_next\n";
    char row[224];
    for (const ViscousLayerState& s : traj.states) {
        const bool next = s.u3_next.size() == grid.size() && s.p_next.size() == grid.size();
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            std::snprintf(row, sizeof row, "%.10g,%.10g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          s.time, grid.nodes()[i], s.u_bar[0][i], s.u_bar[1][i], s.theta_b[i],
                          s.rho_b[i], next ? s.u3_next[i] : 0.0, next ? s.p_next[i] : 0.0);
            os << row;
        }
    }
    os << std::flush;
}

}  // namespace kfl
