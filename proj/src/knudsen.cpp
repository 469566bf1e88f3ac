#include "kfl/knudsen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "kfl/error.hpp"
#include "kfl/numerics.hpp"

namespace kfl {
namespace {

void check_accommodation(double alpha) {
    require(alpha > 0.0 && alpha <= 1.0, ErrorKind::Config,
            "accommodation coefficient must lie in (0, 1]; the specular limit 0 leaves the "
            "boundary iteration without a contraction");
}

/// Shared discrete reflection: specular part through the node permutation,
/// diffuse part through the flux-normalized emission field.
struct Reflection {
    const Vec* v3 = nullptr;
    const Vec* weights = nullptr;
    const Vec* sqrt_mu = nullptr;
    const std::vector<Eigen::Index>* specular = nullptr;
    bool diffuse = true;
    double alpha = 1.0;
    Vec emission;  // outgoing flux exactly one; empty when diffuse is off

    Vec apply(const Vec& trace) const {
        const Vec& u = *v3;
        Vec out = Vec::Zero(u.size());
        double influx = 0.0;
        if (diffuse) {
            for (Eigen::Index n = 0; n < u.size(); ++n)
                if (u[n] < 0.0)
                    influx += (*weights)[n] * (-u[n]) * (*sqrt_mu)[n] * trace[n];
        }
        for (Eigen::Index n = 0; n < u.size(); ++n) {
            if (u[n] <= 0.0) continue;
            double r = (1.0 - alpha) * trace[(*specular)[static_cast<std::size_t>(n)]];
            if (diffuse) r += alpha * emission[n] * influx;
            out[n] = r;
        }
        return out;
    }
};

Reflection make_reflection(const Vec& v3, const Vec& weights, const Vec& sqrt_mu,
                           const std::vector<Eigen::Index>& specular, bool diffuse, double alpha) {
    check_accommodation(alpha);
    Reflection r;
    r.v3 = &v3;
    r.weights = &weights;
    r.sqrt_mu = &sqrt_mu;
    r.specular = &specular;
    r.diffuse = diffuse;
    r.alpha = alpha;
    if (diffuse) {
        double outflux = 0.0;
        for (Eigen::Index n = 0; n < v3.size(); ++n)
            if (v3[n] > 0.0) outflux += weights[n] * v3[n] * sqrt_mu[n] * sqrt_mu[n];
        require(outflux > 0.0, ErrorKind::Config,
                "wall emission has no outgoing flux on this velocity grid");
        r.emission = sqrt_mu / outflux;
    }
    return r;
}

void check_no_grazing(const Vec& v3) {
    require(v3.cwiseAbs().minCoeff() > 0.0, ErrorKind::Config,
            "half-space transport needs a velocity grid without v3 = 0 nodes");
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

Vec maxwell_boundary(const VelocityGrid& grid, const Vec& trace, double accommodation) {
    require(trace.size() == grid.size(), ErrorKind::Config,
            "boundary trace does not match the velocity grid");
    return make_reflection(grid.v3(), grid.weights(), grid.sqrt_mu(), grid.specular_map(),
                           /*diffuse=*/true, accommodation)
        .apply(trace);
}

Vec maxwell_boundary(const AxisymGrid& grid, const Vec& trace, double accommodation) {
    require(trace.size() == grid.size(), ErrorKind::Config,
            "boundary trace does not match the velocity grid");
    return make_reflection(grid.v3(), grid.weights(), grid.sqrt_mu(), grid.specular_map(),
                           /*diffuse=*/grid.mode() == 0, accommodation)
        .apply(trace);
}

// ---------------------------------------------------------------------------
// HalfspaceSolver
// ---------------------------------------------------------------------------

HalfspaceSolver::HalfspaceSolver(const LayerGrid& xi, const AxisymGrid& vgrid,
                                 std::shared_ptr<const CollisionOperator> op,
                                 double accommodation, HalfspaceOptions options)
    : xi_(xi), mode_(vgrid.mode()), accommodation_(accommodation), options_(options) {
    check_accommodation(accommodation);
    v3_ = vgrid.v3();
    weights_ = vgrid.weights();
    sqrt_mu_ = vgrid.sqrt_mu();
    specular_ = vgrid.specular_map();
    diffuse_active_ = vgrid.mode() == 0;
    null_basis_ = vgrid.null_profiles();
    if (mode_ == 0) {
        farfield_basis_ = (0.5 * (vgrid.speed2().array() - 3.0) * sqrt_mu_.array()).matrix();
    } else {
        farfield_basis_ = sqrt_mu_;
    }
    initialize(std::move(op));
}

HalfspaceSolver::HalfspaceSolver(const LayerGrid& xi, const VelocityGrid& vgrid,
                                 std::shared_ptr<const CollisionOperator> op,
                                 double accommodation, HalfspaceOptions options)
    : xi_(xi), mode_(2), accommodation_(accommodation), options_(options) {
    check_accommodation(accommodation);
    v3_ = vgrid.v3();
    weights_ = vgrid.weights();
    sqrt_mu_ = vgrid.sqrt_mu();
    specular_ = vgrid.specular_map();
    diffuse_active_ = true;
    null_basis_.assign(vgrid.chi().begin(), vgrid.chi().end());
    // Full-grid solves serve the tangential cross-check, so the far-field
    // constant is read against the first tangential conserved field.
    farfield_basis_ = vgrid.chi()[1];
    initialize(std::move(op));
}

void HalfspaceSolver::initialize(std::shared_ptr<const CollisionOperator> op) {
    check_no_grazing(v3_);
    require(xi_.size() >= 4, ErrorKind::Config, "half-space transport needs at least 4 xi nodes");
    op_ = std::move(op);
    require(op_ != nullptr, ErrorKind::Config, "half-space transport needs a collision operator");
    require(op_->quad_weights().size() == weights_.size(), ErrorKind::Config,
            "collision operator and velocity grid disagree on the node count");
    ortho_tol_ = op_->ortho_tol();

    const Eigen::Index n = v3_.size();
    negative_.clear();
    for (Eigen::Index k = 0; k < n; ++k)
        if (v3_[k] < 0.0) negative_.push_back(k);

    emission_ = make_reflection(v3_, weights_, sqrt_mu_, specular_, diffuse_active_,
                                accommodation_)
                    .emission;

    collision_.resize(n, n);
    Vec unit = Vec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        unit[j] = 1.0;
        collision_.col(j) = op_->apply_L(unit);
        unit[j] = 0.0;
    }
    factor();
}

void HalfspaceSolver::factor() {
    const Eigen::Index m = xi_.size();
    const Eigen::Index n = v3_.size();
    const Vec& z = xi_.nodes();

    // Finite-volume cells: the wall face sits exactly at xi = 0 and the far
    // face at xi_max; interior faces halve the node gaps.
    widths_.resize(m);
    double left = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double right = i + 1 < m ? 0.5 * (z[i] + z[i + 1]) : z[m - 1];
        widths_[i] = right - left;
        left = right;
    }
    require(widths_.minCoeff() > 0.0, ErrorKind::Config, "degenerate half-space cell widths");

    const Eigen::Index nneg = static_cast<Eigen::Index>(negative_.size());
    block_lu_.assign(static_cast<std::size_t>(m), Eigen::PartialPivLU<Mat>{});
    coupling_.assign(static_cast<std::size_t>(m), Mat{});

    Mat u_block(n, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        u_block = collision_;
        u_block.diagonal() += (v3_.cwiseAbs() / widths_[i]);
        if (i > 0) {
            // Eliminate the upwind coupling to the previous cell.
            const Mat& gprev = coupling_[static_cast<std::size_t>(i - 1)];
            for (Eigen::Index r = 0; r < n; ++r) {
                if (v3_[r] <= 0.0) continue;
                const double s = v3_[r] / widths_[i];
                for (Eigen::Index k = 0; k < nneg; ++k)
                    u_block(r, negative_[static_cast<std::size_t>(k)]) += s * gprev(r, k);
            }
        }
        auto& lu = block_lu_[static_cast<std::size_t>(i)];
        lu.compute(u_block);
        if (i + 1 < m) {
            Mat crhs = Mat::Zero(n, nneg);
            for (Eigen::Index k = 0; k < nneg; ++k) {
                const Eigen::Index node = negative_[static_cast<std::size_t>(k)];
                crhs(node, k) = v3_[node] / widths_[i];
            }
            coupling_[static_cast<std::size_t>(i)] = lu.solve(crhs);
        }
    }
}

Vec HalfspaceSolver::reflect(const Vec& trace) const {
    require(trace.size() == v3_.size(), ErrorKind::Config,
            "boundary trace does not match the velocity grid");
    Reflection r;
    r.v3 = &v3_;
    r.weights = &weights_;
    r.sqrt_mu = &sqrt_mu_;
    r.specular = &specular_;
    r.diffuse = diffuse_active_;
    r.alpha = accommodation_;
    r.emission = emission_;
    return r.apply(trace);
}

Vec HalfspaceSolver::boundary_complement(const Vec& q) const {
    Vec out = reflect(q);
    for (Eigen::Index n = 0; n < v3_.size(); ++n) out[n] = v3_[n] > 0.0 ? q[n] - out[n] : 0.0;
    return out;
}

double HalfspaceSolver::face_flux(const Vec& upwind_pos, const Vec& upwind_neg,
                                  const Vec& moment) const {
    double f = 0.0;
    for (Eigen::Index n = 0; n < v3_.size(); ++n) {
        const double value = v3_[n] > 0.0 ? upwind_pos[n] : upwind_neg[n];
        f += weights_[n] * v3_[n] * moment[n] * value;
    }
    return f;
}

KnudsenSolution HalfspaceSolver::solve(const Mat& source, const Vec& wall_datum) const {
    return solve(source, wall_datum, options_.require_decay);
}

KnudsenSolution HalfspaceSolver::solve(const Mat& source, const Vec& wall_datum,
                                       bool require_decay) const {
    const Eigen::Index m = xi_.size();
    const Eigen::Index n = v3_.size();
    const bool has_source = source.size() != 0;
    if (has_source) {
        require(source.rows() == m && source.cols() == n, ErrorKind::Config,
                "half-space source does not match the (xi, velocity) grid");
        // The source must be free of conserved components in every slab.
        for (Eigen::Index i = 0; i < m; ++i) {
            const Vec row = source.row(i);
            const double scale = std::sqrt(pairwise_dot3(weights_, row, row));
            if (scale <= 1e-300) continue;
            for (std::size_t j = 0; j < null_basis_.size(); ++j) {
                const Vec& chi = null_basis_[j];
                const double coef = pairwise_dot3(weights_, chi, row);
                const double nrm = std::sqrt(pairwise_dot3(weights_, chi, chi));
                require(std::abs(coef) <= 10.0 * ortho_tol_ * nrm * scale, ErrorKind::Config,
                        "half-space source keeps a conserved component; cancel it first");
            }
        }
    }
    require(wall_datum.size() == n, ErrorKind::Config,
            "wall datum does not match the velocity grid");

    // Mass-conserving modes can only decay when the datum drives no net flux.
    if (mode_ != 1) {
        double influx = 0.0, scale = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (v3_[k] <= 0.0) continue;
            influx += weights_[k] * v3_[k] * sqrt_mu_[k] * wall_datum[k];
            scale += weights_[k] * v3_[k] * sqrt_mu_[k] * std::abs(wall_datum[k]);
        }
        require(std::abs(influx) <= 1e-8 * (scale + 1e-30), ErrorKind::Config,
                "wall datum carries net mass flux; the decaying problem is not solvable");
    }

    // Damped fixed-point iteration on the wall inflow.
    Vec datum_pos = Vec::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k)
        if (v3_[k] > 0.0) datum_pos[k] = wall_datum[k];
    Vec g = datum_pos;

    Mat phi(m, n);
    std::vector<Vec> y(static_cast<std::size_t>(m));
    std::vector<double> deltas;
    double wall_residual = 0.0;
    Eigen::Index iterations = 0;
    bool converged = false;
    const Eigen::Index nneg = static_cast<Eigen::Index>(negative_.size());

    for (Eigen::Index it = 0; it < options_.max_iterations; ++it) {
        ++iterations;
        // Forward elimination.
        for (Eigen::Index i = 0; i < m; ++i) {
            Vec rhs = has_source ? Vec(source.row(i)) : Vec(Vec::Zero(n));
            if (i == 0) {
                for (Eigen::Index k = 0; k < n; ++k)
                    if (v3_[k] > 0.0) rhs[k] += v3_[k] / widths_[0] * g[k];
            } else {
                const Vec& prev = y[static_cast<std::size_t>(i - 1)];
                for (Eigen::Index k = 0; k < n; ++k)
                    if (v3_[k] > 0.0) rhs[k] += v3_[k] / widths_[i] * prev[k];
            }
            y[static_cast<std::size_t>(i)] = block_lu_[static_cast<std::size_t>(i)].solve(rhs);
        }
        // Back substitution.
        phi.row(m - 1) = y[static_cast<std::size_t>(m - 1)];
        for (Eigen::Index i = m - 2; i >= 0; --i) {
            Vec next_neg(nneg);
            for (Eigen::Index k = 0; k < nneg; ++k)
                next_neg[k] = phi(i + 1, negative_[static_cast<std::size_t>(k)]);
            phi.row(i) =
                y[static_cast<std::size_t>(i)] - coupling_[static_cast<std::size_t>(i)] * next_neg;
        }

        const Vec target = reflect(phi.row(0)) + datum_pos;
        double delta = 0.0, gscale = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (v3_[k] <= 0.0) continue;
            delta = std::max(delta, std::abs(target[k] - g[k]));
            gscale = std::max(gscale, std::abs(target[k]));
        }
        deltas.push_back(delta);
        wall_residual = delta / std::max(gscale, 1e-300);
        if (wall_residual <= options_.tol || delta == 0.0) {
            converged = true;
            break;
        }
        g += options_.damping * (target - g);
    }
    require(converged, ErrorKind::Solver,
            "boundary iteration stalled before reaching the wall tolerance");

    KnudsenSolution sol;
    sol.mode = mode_;
    sol.phi.space_shape = {m};
    sol.phi.values = phi;
    sol.phi.grid_ref = mode_ == 0   ? "axisym-mode0"
                       : mode_ == 1 ? "axisym-mode1"
                                    : "full";
    sol.boundary_iterations = iterations;
    sol.wall_residual = wall_residual;

    if (deltas.size() >= 4) {
        std::vector<double> ratios;
        const std::size_t take = std::min<std::size_t>(deltas.size() - 1, 30);
        for (std::size_t k = deltas.size() - take; k < deltas.size(); ++k)
            if (deltas[k - 1] > 0.0) ratios.push_back(deltas[k] / deltas[k - 1]);
        sol.contraction_estimate = median_of(std::move(ratios));
    }

    // Conserved flux at every cell face (upwind face values; far inflow zero).
    sol.flux_profile.resize(m + 1);
    sol.flux_profile[0] = face_flux(g, phi.row(0), sqrt_mu_);
    for (Eigen::Index i = 1; i < m; ++i)
        sol.flux_profile[i] = face_flux(phi.row(i - 1), phi.row(i), sqrt_mu_);
    sol.flux_profile[m] = face_flux(phi.row(m - 1), Vec::Zero(n), sqrt_mu_);
    sol.flux_spread = sol.flux_profile.maxCoeff() - sol.flux_profile.minCoeff();

    // Tail decay fit on the slab norms over the window.
    Vec norms(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vec row = phi.row(i);
        norms[i] = std::sqrt(pairwise_dot3(weights_, row, row));
    }
    if (norms.maxCoeff() == 0.0) {
        sol.decay_rate = 0.0;
        sol.decay_fit_residual = 0.0;
        return sol;
    }
    const double lo = options_.fit_lo * xi_.zeta_max();
    const double hi = options_.fit_hi * xi_.zeta_max();
    // Nodes whose amplitude has fallen to the roundoff floor of the peak carry
    // no slope information and are excluded from the fit.
    const double floor = 1e-12 * norms.maxCoeff();
    std::vector<double> xs, ys;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (xi_.nodes()[i] < lo || xi_.nodes()[i] > hi) continue;
        if (norms[i] <= floor) continue;
        xs.push_back(xi_.nodes()[i]);
        ys.push_back(std::log(norms[i]));
    }
    require(xs.size() >= 3, ErrorKind::Solver,
            "tail fit window holds fewer than three usable xi nodes");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    const double nn = static_cast<double>(xs.size());
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const double icept = (sy - slope * sx) / nn;
    double ss_res = 0.0, ss_tot = 0.0;
    const double mean = sy / nn;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double fit = icept + slope * xs[k];
        ss_res += (ys[k] - fit) * (ys[k] - fit);
        ss_tot += (ys[k] - mean) * (ys[k] - mean);
    }
    sol.decay_rate = -slope;
    sol.decay_fit_residual = std::sqrt(ss_res / std::max(ss_tot, 1e-300));
    if (require_decay)
        require(sol.decay_rate > 0.0, ErrorKind::Solver,
                "half-space solution does not decay: the far-field constant is off");
    return sol;
}

SlipExtraction tune_farfield_constant(const HalfspaceSolver& solver, const Mat& source,
                                      const Vec& fixed_datum) {
    const Vec unit = solver.boundary_complement(solver.farfield_basis());
    const Eigen::Index m = solver.xi().size();
    const Eigen::Index n = solver.velocity_count();

    auto defect = [&](const KnudsenSolution& s) {
        return solver.face_flux(s.phi.values.row(m - 1), Vec::Zero(n), solver.farfield_basis());
    };

    const KnudsenSolution trial0 = solver.solve(source, fixed_datum, /*require_decay=*/false);
    const KnudsenSolution trial1 =
        solver.solve(source, fixed_datum - unit, /*require_decay=*/false);
    const double d0 = defect(trial0);
    const double d1 = defect(trial1);
    require(std::abs(d1 - d0) > 1e-300, ErrorKind::Solver,
            "far-field constant does not move the conserved flux; cannot tune");

    SlipExtraction out;
    out.defect_zero = d0;
    out.defect_unit = d1;
    out.coefficient = d0 / (d0 - d1);
    out.solution = solver.solve(source, fixed_datum - out.coefficient * unit);
    switch (solver.mode()) {
        case 0: out.solution.q_inf.c = out.coefficient; break;
        default: out.solution.q_inf.b1 = out.coefficient; break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Macroscopic cancellation
// ---------------------------------------------------------------------------

MacroMoments macro_from_hydro(const Vec& rho, const Mat& u, const Vec& theta) {
    require(u.rows() == rho.size() && u.cols() == 3 && theta.size() == rho.size(),
            ErrorKind::Config, "hydrodynamic moment arrays disagree in length");
    MacroMoments m;
    m.a = rho - 1.5 * theta;
    m.b = u;
    m.c = 0.5 * theta;
    return m;
}

MacroCancellation cancel_macroscopic_source(const LayerGrid& xi, const VelocityGrid& grid,
                                            const CollisionOperator& op, const MacroMoments& m) {
    const Eigen::Index nx = xi.size();
    require(m.a.size() == nx && m.c.size() == nx && m.b.rows() == nx && m.b.cols() == 3,
            ErrorKind::Config, "macroscopic moment arrays do not match the xi grid");
    require(op.quad_weights().size() == grid.size(), ErrorKind::Config,
            "collision operator does not match the velocity grid");

    MacroCancellation out;
    out.Psi = -xi.tail_integral(2.0 * m.a + 3.0 * m.c);
    out.Phi1 = -xi.tail_integral(m.b.col(0));
    out.Phi2 = -xi.tail_integral(m.b.col(1));
    out.Phi3 = -xi.tail_integral(m.b.col(2));
    out.Theta = 0.2 * xi.tail_integral(m.a);

    const Eigen::Index nv = grid.size();
    const Vec& v1 = grid.v1();
    const Vec& v2 = grid.v2();
    const Vec& v3 = grid.v3();
    const Vec& smu = grid.sqrt_mu();
    Vec s2(nv);
    for (Eigen::Index p = 0; p < nv; ++p)
        s2[p] = v1[p] * v1[p] + v2[p] * v2[p] + v3[p] * v3[p];

    out.corrector.space_shape = {nx};
    out.corrector.grid_ref = "full";
    out.corrector.values.resize(nx, nv);
    out.residual = out.corrector;
    out.source_shift = out.corrector;

    // Tail integral of the moment magnitude, for the pointwise envelope.
    Vec mag(nx);
    for (Eigen::Index i = 0; i < nx; ++i)
        mag[i] = std::sqrt(m.a[i] * m.a[i] + m.b.row(i).squaredNorm() + m.c[i] * m.c[i]);
    const Vec tail = xi.tail_integral(mag);

    double bound = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index p = 0; p < nv; ++p) {
            const double corr = (out.Psi[i] * v3[p] + out.Phi1[i] * v3[p] * v1[p] +
                                 out.Phi2[i] * v3[p] * v2[p] + out.Phi3[i] +
                                 out.Theta[i] * v3[p] * s2[p]) *
                                smu[p];
            out.corrector.values(i, p) = corr;
            // v3 d_xi of the corrector, taken through the exact profile
            // derivatives, minus the macroscopic source itself.
            const double transport =
                ((2.0 * m.a[i] + 3.0 * m.c[i]) * v3[p] * v3[p] +
                 m.b(i, 0) * v3[p] * v3[p] * v1[p] + m.b(i, 1) * v3[p] * v3[p] * v2[p] +
                 m.b(i, 2) * v3[p] - 0.2 * m.a[i] * v3[p] * v3[p] * s2[p]) *
                smu[p];
            const double src = (m.a[i] + m.b(i, 0) * v1[p] + m.b(i, 1) * v2[p] +
                                m.b(i, 2) * v3[p] + m.c[i] * s2[p]) *
                               smu[p];
            out.residual.values(i, p) = transport - src;
            if (tail[i] > 1e-300) {
                const double envelope = std::pow(1.0 + s2[p], 1.5) * smu[p] * tail[i];
                if (envelope > 1e-300)
                    bound = std::max(bound, std::abs(corr) / envelope);
            }
        }
        out.source_shift.values.row(i) =
            out.residual.values.row(i) + op.apply_L(out.corrector.values.row(i)).transpose();
    }
    out.bound_constant = bound;

    double defect = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i) {
        const Vec row = out.residual.values.row(i);
        const double scale = std::sqrt(grid.inner(row, row));
        if (scale <= 1e-300) continue;
        for (const Vec& chi : grid.chi()) {
            const double nrm = std::sqrt(grid.inner(chi, chi));
            defect = std::max(defect, std::abs(grid.inner(chi, row)) / (nrm * scale));
        }
    }
    out.ortho_defect = defect;
    return out;
}

// ---------------------------------------------------------------------------
// Second-order assembly
// ---------------------------------------------------------------------------

KineticField assemble_fbb2(const VelocityGrid& full, const AxisymGrid& tangential,
                           const AxisymGrid& scalar, const KnudsenSolution& phi_tangential,
                           const KnudsenSolution& phi_scalar, const LayerWallGradients& g) {
    require(phi_tangential.mode == 1 && phi_scalar.mode == 0, ErrorKind::Config,
            "second-order assembly needs a tangential (mode-1) and a scalar (mode-0) solution");
    require(tangential.mode() == 1 && scalar.mode() == 0, ErrorKind::Config,
            "reduced grids passed in the wrong order");
    const Eigen::Index m = phi_tangential.phi.values.rows();
    require(phi_scalar.phi.values.rows() == m, ErrorKind::Config,
            "fundamental solutions live on different xi grids");
    require(phi_tangential.phi.values.cols() == tangential.size() &&
                phi_scalar.phi.values.cols() == scalar.size(),
            ErrorKind::Config, "fundamental solutions do not match their reduced grids");

    KineticField out;
    out.space_shape = {m};
    out.grid_ref = "full";
    out.values = Mat::Zero(m, full.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        Vec row = Vec::Zero(full.size());
        if (g.du1 != 0.0)
            row += g.du1 * tangential.lift_data(full, phi_tangential.phi.values.row(i), 1);
        if (g.du2 != 0.0)
            row += g.du2 * tangential.lift_data(full, phi_tangential.phi.values.row(i), 2);
        if (g.dtheta != 0.0) row += g.dtheta * scalar.lift_data(full, phi_scalar.phi.values.row(i));
        out.values.row(i) = row;
    }
    return out;
}

void write_knudsen_profile_csv(std::ostream& os, const LayerGrid& xi, const AxisymGrid& vgrid,
                               const KineticField& phi) {
    require(phi.values.rows() == xi.size() && phi.values.cols() == vgrid.size(),
            ErrorKind::Config, "profile field does not match the (xi, velocity) grid");
    os << "xi,v3,speed,phi\n";
    char line[160];
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        for (Eigen::Index p = 0; p < vgrid.size(); ++p) {
            std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.17g\n", xi.nodes()[i],
                          vgrid.v3()[p], std::sqrt(vgrid.speed2()[p]), phi.values(i, p));
            os << line;
        }
    }
}

}  // namespace kfl
