#include "kfl/slip.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "kfl/error.hpp"
#include "kfl/numerics.hpp"

namespace kfl {
namespace {

void check_grids(const SlipGrids& g) {
    require(g.xi != nullptr && g.tangential != nullptr && g.scalar != nullptr &&
                g.op_tangential != nullptr && g.op_scalar != nullptr,
            ErrorKind::Config, "slip grid bundle is incomplete");
    require(g.tangential->mode() == 1 && g.scalar->mode() == 0, ErrorKind::Config,
            "slip grids must pair a tangential (mode-1) and a scalar (mode-0) grid");
}

/// Interior source -L phi per slab, with the conserved quadrature residue of
/// the discrete operator image removed so the half-space precondition holds.
Mat scrubbed_interior_source(const CollisionOperator& op, const Mat& phi) {
    Mat s(phi.rows(), phi.cols());
    const NullProjection& proj = op.null_projection();
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
        const Vec row = -op.apply_L(phi.row(i));
        s.row(i) = proj.complement(row).transpose();
    }
    return s;
}

}  // namespace

SlipOrder1Data slip_order1_data(const AxisymGrid& tangential, const AxisymGrid& scalar,
                                const HatFields& hats, const AxialClosure& axial) {
    require(tangential.mode() == 1 && scalar.mode() == 0, ErrorKind::Config,
            "order-1 wall data need a tangential (mode-1) and a scalar (mode-0) grid");
    require(axial.b_hat.size() == scalar.size(), ErrorKind::Config,
            "axial closure does not match the scalar grid");
    SlipOrder1Data d;
    d.tangential.resize(tangential.size());
    for (Eigen::Index n = 0; n < tangential.size(); ++n)
        d.tangential[n] = tangential.v3()[n] * hats.alpha(std::sqrt(tangential.speed2()[n])) *
                          tangential.sqrt_mu()[n];
    d.scalar = axial.b_hat;
    return d;
}

SlipCoefficients slip_coefficients_order1(const SlipGrids& grids, double accommodation,
                                          const SlipOrder1Data& data, SlipArtifacts* artifacts,
                                          HalfspaceOptions options) {
    check_grids(grids);
    require(data.tangential.size() == grids.tangential->size() &&
                data.scalar.size() == grids.scalar->size(),
            ErrorKind::Config, "order-1 wall data do not match the reduced grids");

    const HalfspaceSolver tang(*grids.xi, *grids.tangential, grids.op_tangential, accommodation,
                               options);
    const HalfspaceSolver scal(*grids.xi, *grids.scalar, grids.op_scalar, accommodation, options);

    const SlipExtraction shear =
        tune_farfield_constant(tang, Mat{}, tang.boundary_complement(data.tangential));
    const SlipExtraction heat =
        tune_farfield_constant(scal, Mat{}, scal.boundary_complement(data.scalar));

    SlipCoefficients out;
    out.accommodation = accommodation;
    out.b1 = shear.coefficient;
    out.c1 = heat.coefficient;
    if (artifacts != nullptr) {
        artifacts->phi_tangential = shear.solution;
        artifacts->phi_scalar = heat.solution;
    }
    return out;
}

SlipOrder2Data slip_order2_data(const AxisymGrid& tangential, const AxisymGrid& scalar,
                                const IsotropicProfiles& iso, const AxialClosure& axial,
                                const HatFields& hats) {
    require(tangential.mode() == 1 && scalar.mode() == 0, ErrorKind::Config,
            "order-2 wall data need a tangential (mode-1) and a scalar (mode-0) grid");
    require(axial.f2_micro.size() == scalar.size(), ErrorKind::Config,
            "axial closure does not match the scalar grid");
    SlipOrder2Data d;
    d.curvature_tangential.resize(tangential.size());
    for (Eigen::Index n = 0; n < tangential.size(); ++n) {
        const double s = std::sqrt(tangential.speed2()[n]);
        const double v3 = tangential.v3()[n];
        d.curvature_tangential[n] =
            -(iso.d1(s) + v3 * v3 * iso.d2(s)) * tangential.sqrt_mu()[n];
    }
    d.curvature_scalar = -axial.f2_micro;
    d.normal_stress_scalar.resize(scalar.size());
    for (Eigen::Index n = 0; n < scalar.size(); ++n) {
        const double s2 = scalar.speed2()[n];
        const double v3 = scalar.v3()[n];
        d.normal_stress_scalar[n] =
            -(v3 * v3 - s2 / 3.0) * hats.alpha(std::sqrt(s2)) * scalar.sqrt_mu()[n];
    }
    return d;
}

void slip_coefficients_order2(const SlipGrids& grids, double accommodation,
                              const SlipOrder2Data& data, const SlipArtifacts& artifacts,
                              SlipCoefficients& io, HalfspaceOptions options) {
    check_grids(grids);
    require(data.curvature_tangential.size() == grids.tangential->size() &&
                data.curvature_scalar.size() == grids.scalar->size() &&
                data.normal_stress_scalar.size() == grids.scalar->size(),
            ErrorKind::Config, "order-2 wall data do not match the reduced grids");
    require(artifacts.phi_tangential.phi.values.rows() == grids.xi->size() &&
                artifacts.phi_tangential.phi.values.cols() == grids.tangential->size() &&
                artifacts.phi_scalar.phi.values.rows() == grids.xi->size() &&
                artifacts.phi_scalar.phi.values.cols() == grids.scalar->size(),
            ErrorKind::Config, "order-1 fundamental solutions do not match the grids");

    const HalfspaceSolver tang(*grids.xi, *grids.tangential, grids.op_tangential, accommodation,
                               options);
    const HalfspaceSolver scal(*grids.xi, *grids.scalar, grids.op_scalar, accommodation, options);

    const Vec zero_t = Vec::Zero(grids.tangential->size());
    const Vec zero_s = Vec::Zero(grids.scalar->size());

    io.b2 = tune_farfield_constant(tang, Mat{},
                                   tang.boundary_complement(data.curvature_tangential))
                .coefficient;
    io.b3 = tune_farfield_constant(
                tang,
                scrubbed_interior_source(*grids.op_tangential,
                                         artifacts.phi_tangential.phi.values),
                zero_t)
                .coefficient;
    io.c2 = tune_farfield_constant(scal, Mat{}, scal.boundary_complement(data.curvature_scalar))
                .coefficient;
    io.c3 = tune_farfield_constant(scal, Mat{},
                                   scal.boundary_complement(data.normal_stress_scalar))
                .coefficient;
    io.c4 = tune_farfield_constant(
                scal,
                scrubbed_interior_source(*grids.op_scalar, artifacts.phi_scalar.phi.values),
                zero_s)
                .coefficient;
}

double tangential_slip_source_iteration(const AxisymGrid& tangential, double nu0,
                                        double accommodation, const Vec& wall_datum,
                                        double xi_max, Eigen::Index n_xi,
                                        Eigen::Index max_sweeps, double tol) {
    require(tangential.mode() == 1, ErrorKind::Config,
            "the source-iteration cross-check runs on the tangential (mode-1) grid");
    require(accommodation > 0.0 && accommodation <= 1.0, ErrorKind::Config,
            "accommodation coefficient must lie in (0, 1]");
    require(nu0 > 0.0 && xi_max > 0.0 && n_xi >= 8, ErrorKind::Config,
            "source-iteration needs nu0 > 0, xi_max > 0 and at least 8 xi nodes");
    require(wall_datum.size() == tangential.size(), ErrorKind::Config,
            "wall datum does not match the velocity grid");

    const Eigen::Index nv = tangential.size();
    const Vec& v3 = tangential.v3();
    const Vec& w = tangential.weights();
    const Vec& smu = tangential.sqrt_mu();
    const auto& spec = tangential.specular_map();
    require(v3.cwiseAbs().minCoeff() > 0.0, ErrorKind::Config,
            "source-iteration needs a velocity grid without v3 = 0 nodes");

    const double mass = pairwise_dot3(w, smu, smu);
    const double dz = xi_max / static_cast<double>(n_xi - 1);
    Vec decay(nv), gain(nv);
    for (Eigen::Index n = 0; n < nv; ++n) {
        const double a = nu0 * dz / std::abs(v3[n]);
        decay[n] = std::exp(-a);
        gain[n] = 1.0 - decay[n];
    }

    // (I - K)[q] on the outgoing nodes; the tangential reflection is purely
    // specular with weight (1 - alpha).
    const auto complement = [&](const Vec& q) {
        Vec out = Vec::Zero(nv);
        for (Eigen::Index n = 0; n < nv; ++n)
            if (v3[n] > 0.0)
                out[n] = q[n] - (1.0 - accommodation) * q[spec[static_cast<std::size_t>(n)]];
        return out;
    };

    // One damped-wall source-iteration solve; returns the far-face momentum
    // flux (the tuning defect).
    const auto solve_defect = [&](const Vec& datum) {
        Mat phi = Mat::Zero(n_xi, nv);
        Mat next = phi;
        Vec g = datum;
        Vec proj(n_xi);
        double err = 1.0;
        Eigen::Index sweep = 0;
        for (; sweep < max_sweeps; ++sweep) {
            for (Eigen::Index i = 0; i < n_xi; ++i)
                proj[i] = pairwise_dot3(w, smu, phi.row(i)) / mass;
            for (Eigen::Index n = 0; n < nv; ++n) {
                if (v3[n] > 0.0) {
                    next(0, n) = g[n];
                    for (Eigen::Index i = 1; i < n_xi; ++i)
                        next(i, n) = decay[n] * next(i - 1, n) +
                                     gain[n] * 0.5 * (proj[i - 1] + proj[i]) * smu[n];
                } else {
                    next(n_xi - 1, n) = 0.0;
                    for (Eigen::Index i = n_xi - 2; i >= 0; --i)
                        next(i, n) = decay[n] * next(i + 1, n) +
                                     gain[n] * 0.5 * (proj[i] + proj[i + 1]) * smu[n];
                }
            }
            Vec target = datum;
            for (Eigen::Index n = 0; n < nv; ++n)
                if (v3[n] > 0.0)
                    target[n] += (1.0 - accommodation) * next(0, spec[static_cast<std::size_t>(n)]);
            const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
            err = (next - phi).cwiseAbs().maxCoeff() / scale;
            for (Eigen::Index n = 0; n < nv; ++n)
                if (v3[n] > 0.0) err = std::max(err, std::abs(target[n] - g[n]) / scale);
            phi.swap(next);
            g = target;
            if (err <= tol) break;
        }
        require(err <= tol, ErrorKind::Solver, "source-iteration cross-check stalled");
        double defect = 0.0;
        for (Eigen::Index n = 0; n < nv; ++n)
            if (v3[n] > 0.0) defect += w[n] * v3[n] * smu[n] * phi(n_xi - 1, n);
        return defect;
    };

    const Vec fixed = complement(wall_datum);
    const Vec unit = complement(smu);
    const double d0 = solve_defect(fixed);
    const double d1 = solve_defect(fixed - unit);
    require(std::abs(d1 - d0) > 1e-300, ErrorKind::Solver,
            "source-iteration defect does not respond to the far-field constant");
    return d0 / (d0 - d1);
}

LayerDirichlet slip_dirichlet_order2(const SlipCoefficients& slip, const LayerWallGradients& g,
                                     const std::array<double, 3>& interior_u2,
                                     double interior_theta2) {
    LayerDirichlet bc;
    bc.u1 = -interior_u2[0] + slip.b1 * g.du1;
    bc.u2 = -interior_u2[1] + slip.b1 * g.du2;
    bc.theta = -interior_theta2 + slip.c1 * g.dtheta;
    return bc;
}

std::string slip_grid_fingerprint(const LayerGrid& xi, const AxisymGrid& tangential,
                                  const AxisymGrid& scalar, const CollisionModel& model,
                                  double accommodation) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "xi:n=%ld,max=%.17g,graded=%d;vt:n3=%ld,np=%ld;vs:n3=%ld,np=%ld;"
                  "model:kind=%d,nu0=%.17g,deg=%d,gdeg=%d,qa=%d,qang=%d;alpha=%.17g",
                  static_cast<long>(xi.size()), xi.zeta_max(),
                  xi.stretch() == LayerStretch::Graded ? 1 : 0,
                  static_cast<long>(tangential.n_v3()), static_cast<long>(tangential.n_perp()),
                  static_cast<long>(scalar.n_v3()), static_cast<long>(scalar.n_perp()),
                  static_cast<int>(model.kind), model.nu0, model.basis_degree, model.gamma_degree,
                  model.quad_points_axis, model.quad_points_angle, accommodation);
    return fnv1a64_hex(buf);
}

void write_slip_csv(std::ostream& os, const std::vector<SlipCoefficients>& rows) {
    os << "alpha,model,b1,c1,b2,b3,c2,c3,c4,grid_fingerprint,est_error\n";
    char num[64];
    const auto put = [&](double x) {
        std::snprintf(num, sizeof(num), "%.17g", x);
        os << num;
    };
    const auto put_opt = [&](const std::optional<double>& x) {
        if (x.has_value()) put(*x);
    };
    for (const SlipCoefficients& r : rows) {
        put(r.accommodation);
        os << ',' << r.model << ',';
        put(r.b1);
        os << ',';
        put(r.c1);
        os << ',';
        put_opt(r.b2);
        os << ',';
        put_opt(r.b3);
        os << ',';
        put_opt(r.c2);
        os << ',';
        put_opt(r.c3);
        os << ',';
        put_opt(r.c4);
        os << ',' << r.grid_fingerprint << ',';
        put(r.est_error);
        os << '\n';
    }
}

}  // namespace kfl
