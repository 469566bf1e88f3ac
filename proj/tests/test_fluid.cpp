#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "kfl/burnett.hpp"
#include "kfl/collision.hpp"
#include "kfl/error.hpp"
#include "kfl/fluid.hpp"
#include "kfl/velocity_grid.hpp"

using namespace kfl;

namespace {

const VelocityGrid& vgrid16() {
    static VelocityGrid g = VelocityGrid::build({GridScheme::TensorGauss, 16, 6.0});
    return g;
}

std::shared_ptr<const CollisionOperator> bgk(double nu0) {
    CollisionModel model;
    model.kind = CollisionKind::Bgk;
    model.nu0 = nu0;
    return CollisionOperator::build(vgrid16(), model);
}

std::shared_ptr<const CollisionOperator> hs_gamma() {
    CollisionModel model;
    model.kind = CollisionKind::HardSphere;
    model.kernel_tol = 0.1;
    model.basis_degree = 4;
    model.gamma_degree = 4;
    model.quad_points_axis = 6;
    model.quad_points_angle = 8;
    model.matrix_cache = "hs-matrix-cache";
    static auto op = CollisionOperator::build(vgrid16(), model);
    return op;
}

double energy(const FluidState& s, const InteriorGrid& g) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < g.cells(); ++i)
        e += 0.5 *
             (s.rho[i] * s.rho[i] + s.u[0][i] * s.u[0][i] + s.u[1][i] * s.u[1][i] +
              s.u[2][i] * s.u[2][i] + 1.5 * s.theta[i] * s.theta[i]) *
             g.dx(i);
    return e;
}

FluidState gaussian_state(const InteriorGrid& g, double center, double r, double t, double ux) {
    FluidState s = FluidState::zero(1, g);
    for (Eigen::Index i = 0; i < g.cells(); ++i) {
        const double x = g.centers()[i];
        const double a = std::exp(-(x - center) * (x - center));
        s.rho[i] = r * a;
        s.theta[i] = t * a;
        s.u[0][i] = ux * a;
    }
    return s;
}

double rel_w(const VelocityGrid& g, const Vec& got, const Vec& want) {
    return std::sqrt(g.inner(got - want, got - want) / g.inner(want, want));
}

}  // namespace

TEST_CASE("interior grid validates edges and exposes cell geometry") {
    InteriorGrid g = InteriorGrid::uniform(10.0, 5);
    CHECK(g.cells() == 5);
    CHECK(g.edges()[0] == 0.0);
    CHECK(g.domain_length() == doctest::Approx(10.0));
    CHECK(g.dx(2) == doctest::Approx(2.0));
    CHECK(g.centers()[0] == doctest::Approx(1.0));

    Vec one(1);
    one << 0.0;
    CHECK_THROWS_AS((void)InteriorGrid{one}, Error);
    Vec shifted(3);
    shifted << 0.5, 1.0, 2.0;
    CHECK_THROWS_AS((void)InteriorGrid{shifted}, Error);
    Vec repeat(3);
    repeat << 0.0, 1.0, 1.0;
    CHECK_THROWS_AS((void)InteriorGrid{repeat}, Error);
}

TEST_CASE("constant state is a fixed point of the acoustic solver") {
    InteriorGrid g = InteriorGrid::uniform(8.0, 64);
    FluidState s = FluidState::zero(1, g);
    s.rho.setConstant(0.7);
    s.theta.setConstant(-0.2);
    Trajectory tr = solve_acoustic(s, 0.5, g);
    CHECK((tr.back().rho.array() - 0.7).abs().maxCoeff() == 0.0);
    CHECK((tr.back().theta.array() + 0.2).abs().maxCoeff() == 0.0);
    CHECK(tr.back().u[2].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("acoustic pulse travels at the sound speed") {
    InteriorGrid g = InteriorGrid::uniform(20.0, 4000);
    FluidState s = FluidState::zero(1, g);
    const double c = acoustic_speed();
    CHECK(c == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
    for (Eigen::Index i = 0; i < g.cells(); ++i) {
        const double x = g.centers()[i];
        const double a = std::exp(-4.0 * (x - 6.0) * (x - 6.0));
        s.rho[i] = a;           // right-moving simple wave (1, c, 2/3)
        s.u[2][i] = c * a;
        s.theta[i] = 2.0 / 3.0 * a;
    }
    Trajectory tr = solve_acoustic(s, 2.0, g, {.record_every = 1 << 30});
    Eigen::Index imax = 0;
    tr.back().rho.maxCoeff(&imax);
    CHECK(std::abs((g.centers()[imax] - 6.0) / 2.0 - c) < 5e-3);
}

TEST_CASE("reflected pulse conserves the symmetrizer energy") {
    InteriorGrid g = InteriorGrid::uniform(20.0, 2000);
    const FluidState s = gaussian_state(g, 10.0, 1.0, 0.4, 0.3);
    const double e0 = energy(s, g);
    Trajectory tr = solve_acoustic(s, 1.0, g, {.cfl = 0.5, .record_every = 1 << 30});
    CHECK(std::abs(energy(tr.back(), g) - e0) / e0 < 1e-6);
}

TEST_CASE("solver output is additive in its initial data") {
    InteriorGrid g = InteriorGrid::uniform(20.0, 200);
    const FluidState sa = gaussian_state(g, 8.0, 1.0, 0.2, 0.0);
    const FluidState sb = gaussian_state(g, 12.0, -0.5, 0.7, 0.4);
    FluidState sc = FluidState::zero(1, g);
    const double a = 0.7, b = -1.3;
    sc.rho = a * sa.rho + b * sb.rho;
    sc.theta = a * sa.theta + b * sb.theta;
    for (int c = 0; c < 3; ++c) sc.u[c] = a * sa.u[c] + b * sb.u[c];

    const FluidSolveOptions opt{.record_every = 1 << 30};
    const FluidState fa = solve_acoustic(sa, 0.3, g, opt).back();
    const FluidState fb = solve_acoustic(sb, 0.3, g, opt).back();
    const FluidState fc = solve_acoustic(sc, 0.3, g, opt).back();
    CHECK((fc.rho - a * fa.rho - b * fb.rho).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fc.theta - a * fa.theta - b * fb.theta).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fc.u[2] - a * fa.u[2] - b * fb.u[2]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero sources and zero wall datum reproduce the acoustic solver bit for bit") {
    InteriorGrid g = InteriorGrid::uniform(20.0, 300);
    const FluidState s = gaussian_state(g, 10.0, 0.8, -0.3, 0.2);
    Trajectory plain = solve_acoustic(s, 0.4, g);
    FluidSources zero_src = [&g](double) {
        FluidSourceSample ss;
        for (auto& c : ss.u) c = Vec::Zero(g.cells());
        ss.theta = Vec::Zero(g.cells());
        return ss;
    };
    Trajectory sourced = solve_fluid_k(s, zero_src, [](double) { return 0.0; }, 0.4, g);
    REQUIRE(plain.states.size() == sourced.states.size());
    for (std::size_t k = 0; k < plain.states.size(); ++k) {
        CHECK((plain.states[k].rho - sourced.states[k].rho).cwiseAbs().maxCoeff() == 0.0);
        CHECK((plain.states[k].theta - sourced.states[k].theta).cwiseAbs().maxCoeff() == 0.0);
        for (int c = 0; c < 3; ++c)
            CHECK((plain.states[k].u[c] - sourced.states[k].u[c]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("manufactured solution converges at second order") {
    const double w = 1.5, om = 2.0, T = 0.8;
    auto phi = [&](double x) { return std::exp(-(x - 10.0) * (x - 10.0) / (w * w)); };
    auto dphi = [&](double x) { return -2.0 * (x - 10.0) / (w * w) * phi(x); };
    auto d2phi = [&](double x) {
        return (-2.0 / (w * w) + 4.0 * (x - 10.0) * (x - 10.0) / (w * w * w * w)) * phi(x);
    };

    double prev = 0.0;
    for (int n : {128, 256, 512}) {
        InteriorGrid g = InteriorGrid::uniform(20.0, n);
        FluidState init = FluidState::zero(2, g);
        for (Eigen::Index i = 0; i < g.cells(); ++i) init.theta[i] = phi(g.centers()[i]);
        FluidSources src = [&](double t) {
            FluidSourceSample ss;
            ss.u[0] = Vec::Zero(g.cells());
            ss.u[1] = Vec::Zero(g.cells());
            ss.u[2].resize(g.cells());
            ss.theta.resize(g.cells());
            for (Eigen::Index i = 0; i < g.cells(); ++i) {
                const double x = g.centers()[i];
                ss.u[2][i] = phi(x) * om * std::cos(om * t) +
                             d2phi(x) * (std::cos(om * t) - 1.0) / om + dphi(x) * std::cos(om * t);
                ss.theta[i] =
                    -phi(x) * om * std::sin(om * t) + 2.0 / 3.0 * dphi(x) * std::sin(om * t);
            }
            return ss;
        };
        const FluidState f =
            solve_fluid_k(init, src, [](double) { return 0.0; }, T, g, {.record_every = 1 << 30})
                .back();
        double err2 = 0.0;
        for (Eigen::Index i = 0; i < g.cells(); ++i) {
            const double x = g.centers()[i];
            const double r = f.rho[i] - dphi(x) * (std::cos(om * T) - 1.0) / om;
            const double u = f.u[2][i] - phi(x) * std::sin(om * T);
            const double th = f.theta[i] - phi(x) * std::cos(om * T);
            err2 += (r * r + u * u + th * th) * g.dx(i);
        }
        const double err = std::sqrt(err2);
        if (prev > 0.0) CHECK(std::log2(prev / err) > 1.9);
        prev = err;
    }
}

TEST_CASE("total mass changes exactly by the wall flux") {
    InteriorGrid g = InteriorGrid::uniform(20.0, 400);
    const double b = 0.05;
    Trajectory tr = solve_fluid_k(
        FluidState::zero(2, g), FluidSources(), [&](double t) { return b * t; }, 1.0, g,
        {.record_every = 1 << 30});
    double mass = 0.0;
    for (Eigen::Index i = 0; i < g.cells(); ++i) mass += tr.back().rho[i] * g.dx(i);
    CHECK(mass == doctest::Approx(0.5 * b).epsilon(1e-12));
    CHECK(tr.wall_mass_influx == doctest::Approx(0.5 * b).epsilon(1e-14));
    CHECK(tr.outflow_mass == 0.0);
}

TEST_CASE("option and data validation rejects bad solves") {
    InteriorGrid g = InteriorGrid::uniform(10.0, 32);
    const FluidState s = FluidState::zero(1, g);
    CHECK_THROWS_AS((void)solve_acoustic(s, 1.0, g, {.cfl = 0.0}), Error);
    CHECK_THROWS_AS((void)solve_acoustic(s, 1.0, g, {.cfl = 1.5}), Error);
    CHECK_THROWS_AS((void)solve_acoustic(s, -1.0, g), Error);

    FluidState bad = s;
    bad.u[2].setConstant(0.1);  // nonzero wall trace against a zero datum
    CHECK_THROWS_AS((void)solve_acoustic(bad, 1.0, g), Error);

    InteriorGrid g2 = InteriorGrid::uniform(10.0, 16);
    CHECK_THROWS_AS((void)solve_acoustic(s, 1.0, g2), Error);

    // Source samples must match the grid.
    FluidSources bad_src = [](double) {
        FluidSourceSample ss;
        for (auto& c : ss.u) c = Vec::Zero(3);
        ss.theta = Vec::Zero(3);
        return ss;
    };
    CHECK_THROWS_AS(
        (void)solve_fluid_k(s, bad_src, [](double) { return 0.0; }, 0.1, g), Error);
}

TEST_CASE("chi moments of the trajectory satisfy the conservation system at scheme order") {
    auto residual = [](int n) {
        InteriorGrid g = InteriorGrid::uniform(20.0, n);
        const FluidState s = gaussian_state(g, 10.0, 1.0, 0.5, 0.0);
        Trajectory tr = solve_acoustic(s, 0.2, g);
        const std::size_t m = tr.states.size() / 2;
        const FluidState& a = tr.states[m - 1];
        const FluidState& bst = tr.states[m + 1];
        const FluidState& mid = tr.states[m];
        const double dt2 = bst.time - a.time;
        double worst = 0.0;
        for (Eigen::Index i = 2; i < g.cells() - 2; ++i) {
            const double dx2 = g.centers()[i + 1] - g.centers()[i - 1];
            const double r1 = (bst.rho[i] - a.rho[i]) / dt2 +
                              (mid.u[2][i + 1] - mid.u[2][i - 1]) / dx2;
            const double r2 = (bst.u[2][i] - a.u[2][i]) / dt2 +
                              (mid.rho[i + 1] + mid.theta[i + 1] - mid.rho[i - 1] -
                               mid.theta[i - 1]) /
                                  dx2;
            const double r3 = (bst.theta[i] - a.theta[i]) / dt2 +
                              2.0 / 3.0 * (mid.u[2][i + 1] - mid.u[2][i - 1]) / dx2;
            worst = std::max({worst, std::abs(r1), std::abs(r2), std::abs(r3)});
        }
        return worst;
    };
    const double r256 = residual(256);
    const double r512 = residual(512);
    CHECK(r256 < 1e-2);
    CHECK(r512 < r256 * 0.35);  // second-order decay leaves factor ~4
}

TEST_CASE("first-order coefficient is an infinitesimal equilibrium") {
    const auto& vg = vgrid16();
    InteriorGrid ig = InteriorGrid::uniform(4.0, 3);
    FluidState s = FluidState::zero(1, ig);
    s.rho << 0.3, -0.1, 0.9;
    s.u[0] << 0.2, 0.4, -0.7;
    s.u[1] << -0.5, 0.1, 0.3;
    s.u[2] << 0.7, -0.3, 0.0;
    s.theta << 0.6, 0.2, -0.4;

    const KineticField f1 = assemble_f1(s, vg);
    HydroProjection P = HydroProjection::build(vg);
    for (Eigen::Index i = 0; i < ig.cells(); ++i) {
        const Vec row = f1.values.row(i).transpose();
        CHECK(std::sqrt(vg.inner(P.complement(row), P.complement(row))) < 1e-12);
        CHECK(vg.inner(row, vg.chi()[0]) == doctest::Approx(s.rho[i]).epsilon(1e-10));
        CHECK(vg.inner(row, vg.chi()[1]) == doctest::Approx(s.u[0][i]).epsilon(1e-10));
        CHECK(vg.inner(row, vg.chi()[3]) == doctest::Approx(s.u[2][i]).epsilon(1e-10));
        CHECK(2.0 / 3.0 * vg.inner(row, vg.chi()[4]) ==
              doctest::Approx(s.theta[i]).epsilon(1e-10));
        // Value at v = 0: the odd terms drop and mu(0)^{1/2} = (2 pi)^{-3/4}.
        const double want = (s.rho[i] - 1.5 * s.theta[i]) * std::pow(2.0 * M_PI, -0.75);
        CHECK(infinitesimal_maxwellian_at(s, i, 0.0, 0.0, 0.0) ==
              doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("second-order coefficient closes the bilinear identity") {
    const auto& vg = vgrid16();
    InteriorGrid ig = InteriorGrid::uniform(4.0, 2);
    FluidState s1 = FluidState::zero(1, ig);
    s1.rho << 0.3, -0.1;
    s1.u[0] << 0.2, 0.4;
    s1.u[1] << -0.5, 0.1;
    s1.u[2] << 0.7, -0.3;
    s1.theta << 0.6, 0.2;
    FluidState s2 = FluidState::zero(2, ig);
    s2.rho << -0.2, 0.5;
    s2.u[2] << 0.1, 0.3;
    s2.theta << 0.4, -0.6;

    const BurnettFields bf = burnett_fields(vg);
    const KineticField f1 = assemble_f1(s1, vg);
    const KineticField f2 = assemble_f2(s1, s2, bf, vg);
    const KineticField h2 = assemble_f1(s2, vg);

    auto op = bgk(1.7);
    for (Eigen::Index i = 0; i < ig.cells(); ++i) {
        const Vec micro = (f2.values.row(i) - h2.values.row(i)).transpose();
        // Microscopic part orthogonal to every conserved field.
        for (const Vec& chi : vg.chi()) CHECK(std::abs(vg.inner(micro, chi)) < 1e-10);
        // L (I-P) f2 equals the symmetrized bilinear form of f1 with itself.
        const Vec rhs =
            op->apply_Gamma(f1.values.row(i).transpose(), f1.values.row(i).transpose());
        CHECK(rel_w(vg, op->apply_L(micro), rhs) < 1e-8);
    }

    // Hard-sphere: the identity holds to the bilinear-form reconstruction
    // quality (measured 2.6e-3).
    auto hs = hs_gamma();
    for (Eigen::Index i = 0; i < ig.cells(); ++i) {
        const Vec micro = (f2.values.row(i) - h2.values.row(i)).transpose();
        const Vec rhs =
            hs->apply_Gamma(f1.values.row(i).transpose(), f1.values.row(i).transpose());
        CHECK(rel_w(vg, hs->apply_L(micro), rhs) < 1e-2);
    }

    // With a quiescent first-order state the coefficient is purely
    // hydrodynamic.
    FluidState still = FluidState::zero(1, ig);
    still.rho << 0.4, -0.8;
    const KineticField quiet = assemble_f2(still, s2, bf, vg);
    CHECK((quiet.values - h2.values).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("microscopic part at order two matches the quadratic closure") {
    const auto& vg = vgrid16();
    InteriorGrid ig = InteriorGrid::uniform(4.0, 2);
    FluidState s1 = FluidState::zero(1, ig);
    s1.rho << 0.3, -0.1;
    s1.u[0] << 0.2, 0.4;
    s1.u[1] << -0.5, 0.1;
    s1.u[2] << 0.7, -0.3;
    s1.theta << 0.6, 0.2;
    FluidState s2 = FluidState::zero(2, ig);
    s2.rho << -0.2, 0.5;

    const BurnettFields bf = burnett_fields(vg);
    const KineticField f1 = assemble_f1(s1, vg);
    const KineticField f2 = assemble_f2(s1, s2, bf, vg);
    const KineticField h2 = assemble_f1(s2, vg);

    auto op = bgk(1.7);
    const KineticField mp = microscopic_part_k(*op, vg, ig, {f1}, 2);
    for (Eigen::Index i = 0; i < ig.cells(); ++i) {
        const Vec micro = (f2.values.row(i) - h2.values.row(i)).transpose();
        CHECK(rel_w(vg, mp.values.row(i).transpose(), micro) < 1e-8);
    }

    auto hs = hs_gamma();
    const KineticField mph = microscopic_part_k(*hs, vg, ig, {f1}, 2);
    for (Eigen::Index i = 0; i < ig.cells(); ++i) {
        const Vec micro = (f2.values.row(i) - h2.values.row(i)).transpose();
        // Measured metric-reconstruction quality: 1.2e-3.
        CHECK(rel_w(vg, mph.values.row(i).transpose(), micro) < 5e-3);
    }
}

TEST_CASE("microscopic part at order three transports the linear profile exactly") {
    const auto& vg = vgrid16();
    auto op = bgk(1.7);
    InteriorGrid ig = InteriorGrid::uniform(2.0, 4);
    FluidState st = FluidState::zero(1, ig);
    const double drho = 0.3, du1 = 0.5, du2 = -0.25, du3 = 0.1, dth = -0.2;
    for (Eigen::Index i = 0; i < ig.cells(); ++i) {
        const double x = ig.centers()[i];
        st.rho[i] = 2.0 + drho * x;
        st.u[0][i] = du1 * x;
        st.u[1][i] = du2 * x;
        st.u[2][i] = du3 * x;
        st.theta[i] = dth * x;
    }
    const KineticField f1 = assemble_f1(st, vg);
    const KineticField f2z = assemble_f1(FluidState::zero(2, ig), vg);
    const KineticField mp3 = microscopic_part_k(*op, vg, ig, {f1, f2z}, 3);

    for (Eigen::Index i = 0; i < ig.cells(); ++i) {
        const Vec bracket = vg.sample([&](double v1, double v2, double v3) {
            const double s2 = v1 * v1 + v2 * v2 + v3 * v3;
            const double sq = std::sqrt(maxwellian(v1, v2, v3));
            const double dt_part =
                (-du3 - (drho + dth) * v3 - (2.0 / 3.0) * du3 * 0.5 * (s2 - 3.0)) * sq;
            const double d3 =
                (drho + du1 * v1 + du2 * v2 + du3 * v3 + dth * 0.5 * (s2 - 3.0)) * sq;
            return dt_part + v3 * d3;
        });
        const Vec want = op->invert_L(-bracket);  // zero second order: pure transport
        CHECK((mp3.values.row(i).transpose() - want).cwiseAbs().maxCoeff() < 1e-12);
        for (const Vec& chi : vg.chi())
            CHECK(std::abs(vg.inner(mp3.values.row(i).transpose(), chi)) < 1e-10);
    }

    // All-zero inputs give zero.
    const KineticField z1 = assemble_f1(FluidState::zero(1, ig), vg);
    const KineticField mz = microscopic_part_k(*op, vg, ig, {z1}, 2);
    CHECK(mz.values.cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS((void)microscopic_part_k(*op, vg, ig, {f1}, 4), Error);
    CHECK_THROWS_AS((void)microscopic_part_k(*op, vg, ig, {f1}, 3), Error);
}

TEST_CASE("trajectories export as comma-separated tables") {
    InteriorGrid g = InteriorGrid::uniform(2.0, 2);
    FluidState s = FluidState::zero(1, g);
    s.rho << 0.25, -0.5;
    Trajectory tr;
    tr.states.push_back(s);

    std::ostringstream os;
    write_trajectory_csv(os, tr, g);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,x3,rho,u1,u2,u3,theta");
    double t, x, rho, u1, u2, u3, theta;
    char comma;
    is >> t >> comma >> x >> comma >> rho >> comma >> u1 >> comma >> u2 >> comma >> u3 >>
        comma >> theta;
    CHECK(t == 0.0);
    CHECK(x == doctest::Approx(0.5));
    CHECK(rho == doctest::Approx(0.25));
    int lines = 1;
    std::string rest;
    while (std::getline(is, rest))
        if (!rest.empty()) ++lines;
    CHECK(lines == 2);
}
