#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "kfl/collision.hpp"
#include "kfl/error.hpp"
#include "kfl/velocity_grid.hpp"

using namespace kfl;

namespace {

const VelocityGrid& grid16() {
    static VelocityGrid g = VelocityGrid::build({GridScheme::TensorGauss, 16, 6.0});
    return g;
}

std::shared_ptr<const CollisionOperator> bgk(double nu0) {
    CollisionModel model;
    model.kind = CollisionKind::Bgk;
    model.nu0 = nu0;
    return CollisionOperator::build(grid16(), model);
}

Vec random_field(unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> pick(0.0, 1.0);
    Vec f(grid16().size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = pick(rng) * grid16().sqrt_mu()[i];
    return f;
}

double norm_w(const VelocityGrid& g, const Vec& f) { return std::sqrt(g.inner(f, f)); }

}  // namespace

TEST_CASE("macroscopic projection reproduces its range and kills odd fields") {
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);

    for (const Vec& chi : g.chi()) {
        CHECK(norm_w(g, P.apply(chi) - chi) < 1e-12);
    }

    // v1 v2 sqrt(mu) is odd in two axes: orthogonal to every conserved field.
    const Vec f = g.sample([](double v1, double v2, double v3) {
        return v1 * v2 * std::sqrt(maxwellian(v1, v2, v3));
    });
    CHECK(norm_w(g, P.apply(f)) < 1e-12);

    // |v|^2 sqrt(mu) = 3 chi_0 + 2 chi_4 lies in the range.
    const Vec h = g.sample([](double v1, double v2, double v3) {
        const double s2 = v1 * v1 + v2 * v2 + v3 * v3;
        return s2 * std::sqrt(maxwellian(v1, v2, v3));
    });
    CHECK(norm_w(g, P.apply(h) - h) < 1e-12);
    const auto m = P.moments(h);
    CHECK(m.rho == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(m.theta == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(std::abs(m.u[0]) < 1e-12);
    CHECK(std::abs(m.u[1]) < 1e-12);
    CHECK(std::abs(m.u[2]) < 1e-12);
}

TEST_CASE("conserved-field Gram matrix has the closed-form diagonal") {
    const auto& g = grid16();
    const auto& chi = g.chi();
    const double expected[5] = {1.0, 1.0, 1.0, 1.0, 1.5};
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double target = i == j ? expected[i] : 0.0;
            CHECK(g.inner(chi[i], chi[j]) == doctest::Approx(target).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("macroscopic projection is idempotent and self-adjoint") {
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const Vec f = random_field(seed);
        const Vec Pf = P.apply(f);
        CHECK(norm_w(g, P.apply(Pf) - Pf) < 1e-12 * std::max(1.0, norm_w(g, f)));
        // complement is orthogonal to every conserved field
        const Vec r = P.complement(f);
        for (const Vec& chi : g.chi()) CHECK(std::abs(g.inner(r, chi)) < 1e-10);
    }
}

TEST_CASE("moment round trip through hydrodynamic fields") {
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);
    HydroProjection::Moments m;
    m.rho = 0.3;
    m.u = {0.1, -0.2, 0.4};
    m.theta = 0.25;
    const Vec f = P.from_moments(m);
    const auto back = P.moments(f);
    CHECK(back.rho == doctest::Approx(m.rho).epsilon(1e-12));
    CHECK(back.theta == doctest::Approx(m.theta).epsilon(1e-12));
    for (int d = 0; d < 3; ++d) CHECK(back.u[d] == doctest::Approx(m.u[d]).epsilon(1e-12));
    CHECK(norm_w(g, P.apply(f) - f) < 1e-12);
}

TEST_CASE("relaxation operator annihilates the conserved fields") {
    auto op = bgk(1.7);
    const auto& g = grid16();
    for (const Vec& chi : g.chi()) CHECK(norm_w(g, op->apply_L(chi)) < 1e-12);
    CHECK(op->constant_frequency());
    CHECK(op->collision_frequency().minCoeff() == doctest::Approx(1.7));
    CHECK(op->collision_frequency().maxCoeff() == doctest::Approx(1.7));
}

TEST_CASE("relaxation operator is the rate on the orthogonal complement") {
    const double nu0 = 1.7;
    auto op = bgk(nu0);
    const auto& g = grid16();
    const Vec f = g.sample([](double v1, double v2, double v3) {
        return v1 * v2 * std::sqrt(maxwellian(v1, v2, v3));
    });
    CHECK(norm_w(g, op->apply_L(f) - nu0 * f) < 1e-12 * norm_w(g, f));
}

TEST_CASE("coercivity holds with unit constant for the relaxation model") {
    auto op = bgk(0.9);
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);
    for (unsigned seed = 100; seed < 200; ++seed) {
        const Vec f = random_field(seed);
        const double lhs = g.inner(op->apply_L(f), f);
        const Vec r = P.complement(f);
        const double rhs = op->nu_norm2(r);
        CHECK(lhs >= 0.999999 * rhs);
        CHECK(lhs <= 1.000001 * rhs + 1e-14);
    }
}

TEST_CASE("operator is self-adjoint on random pairs") {
    auto op = bgk(1.3);
    const auto& g = grid16();
    for (unsigned seed = 7; seed < 27; ++seed) {
        const Vec f = random_field(seed);
        const Vec h = random_field(seed + 1000);
        const double defect = std::abs(g.inner(op->apply_L(f), h) - g.inner(f, op->apply_L(h)));
        CHECK(defect <= 1e-8 * norm_w(g, f) * norm_w(g, h));
    }
}

TEST_CASE("scattering part is the frequency minus the operator by definition") {
    auto op = bgk(1.3);
    const Vec f = random_field(42);
    const Vec lhs = op->apply_K(f);
    const Vec rhs = op->collision_frequency().cwiseProduct(f) - op->apply_L(f);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() == 0.0);  // identical expression, bitwise
}

TEST_CASE("inversion is division by the rate on the orthogonal complement") {
    const double nu0 = 2.1;
    auto op = bgk(nu0);
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);
    for (unsigned seed = 300; seed < 310; ++seed) {
        const Vec gfield = P.complement(random_field(seed));
        const Vec x = op->invert_L(gfield);
        CHECK(norm_w(g, x - gfield / nu0) < 1e-12 * norm_w(g, gfield));
        CHECK(norm_w(g, op->apply_L(x) - gfield) < 1e-10 * norm_w(g, gfield));
    }
}

TEST_CASE("inversion rejects fields with conserved components") {
    auto op = bgk(1.0);
    const auto& g = grid16();
    const Vec bad = g.chi()[1] + 0.3 * g.chi()[4];
    CHECK_THROWS_WITH_AS(static_cast<void>(op->invert_L(bad)),
                         doctest::Contains("not orthogonal"), Error);
}

TEST_CASE("bilinear form vanishes on the equilibrium pair and conserves moments") {
    auto op = bgk(1.0);
    const auto& g = grid16();
    CHECK(norm_w(g, op->apply_Gamma(g.chi()[0], g.chi()[0])) < 1e-12);
    for (unsigned seed = 500; seed < 520; ++seed) {
        const Vec f = random_field(seed);
        const Vec h = random_field(seed + 31);
        const Vec gamma = op->apply_Gamma(f, h);
        for (const Vec& chi : g.chi())
            CHECK(std::abs(g.inner(gamma, chi)) <=
                  1e-10 * std::max(1.0, norm_w(g, f) * norm_w(g, h)));
    }
}

TEST_CASE("inverted symmetric bilinear form of hydrodynamic fields is the product rule") {
    const double nu0 = 1.6;
    auto op = bgk(nu0);
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);

    HydroProjection::Moments mf, mg;
    mf.rho = 0.2;
    mf.u = {0.3, -0.1, 0.5};
    mf.theta = -0.4;
    mg.rho = -0.7;
    mg.u = {0.05, 0.2, -0.3};
    mg.theta = 0.6;
    const Vec f = P.from_moments(mf);
    const Vec h = P.from_moments(mg);

    const Vec sym = op->apply_Gamma(f, h) + op->apply_Gamma(h, f);
    const Vec lhs = op->invert_L(sym);
    Vec prod(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) prod[i] = f[i] * h[i] / g.sqrt_mu()[i];
    const Vec rhs = P.complement(prod);
    CHECK(norm_w(g, lhs - rhs) < 1e-12 * std::max(1.0, norm_w(g, rhs)));
}

TEST_CASE("reduced operators act mode by mode") {
    const GridSpec spec{GridScheme::TensorGauss, 16, 6.0};
    CollisionModel model;
    model.nu0 = 1.4;

    AxisymGrid g0 = AxisymGrid::build(spec, 0);
    auto op0 = CollisionOperator::build_reduced(g0, spec, model);
    for (const Vec& chi : g0.null_profiles())
        CHECK(std::sqrt(g0.inner(op0->apply_L(chi), op0->apply_L(chi))) < 1e-12);

    // A non-conserved profile relaxes at the rate.
    const Vec h = g0.sample([](double v3, double rho) {
        const double s2 = v3 * v3 + rho * rho;
        return v3 * s2 * std::sqrt(maxwellian_speed(s2));
    });
    // subtract the conserved part first
    Vec r = op0->null_projection().complement(h);
    CHECK(std::sqrt(g0.inner(op0->apply_L(r) - model.nu0 * r, op0->apply_L(r) - model.nu0 * r)) <
          1e-12);
    const Vec x = op0->invert_L(r);
    CHECK(std::sqrt(g0.inner(x - r / model.nu0, x - r / model.nu0)) < 1e-12);

    AxisymGrid g1 = AxisymGrid::build(spec, 1);
    auto op1 = CollisionOperator::build_reduced(g1, spec, model);
    CHECK(std::sqrt(g1.inner(op1->apply_L(g1.null_profiles()[0]),
                             op1->apply_L(g1.null_profiles()[0]))) < 1e-12);
    const Vec t = g1.sample([](double v3, double rho) {
        return v3 * std::sqrt(maxwellian_speed(v3 * v3 + rho * rho));
    });
    CHECK(std::sqrt(g1.inner(op1->apply_L(t) - model.nu0 * t, op1->apply_L(t) - model.nu0 * t)) <
          1e-12);

    // The quadratic form is not closed on the tangential mode space.
    CHECK_THROWS_AS(static_cast<void>(op1->apply_Gamma(t, t)), Error);
}

TEST_CASE("tangential-mode consistency with the full-grid operator") {
    const GridSpec spec{GridScheme::TensorGauss, 16, 6.0};
    CollisionModel model;
    model.nu0 = 1.4;
    const auto& g = grid16();
    auto op_full = CollisionOperator::build(g, model);

    AxisymGrid g1 = AxisymGrid::build(spec, 1);
    auto op1 = CollisionOperator::build_reduced(g1, spec, model);

    auto profile = [](double v3, double rho) {
        const double s2 = v3 * v3 + rho * rho;
        return (v3 + 0.2 * s2) * std::sqrt(maxwellian_speed(s2));
    };
    const Vec h = g1.sample(profile);
    const Vec lifted = g1.lift(g, profile);

    const Vec lhs = g1.lift_data(g, op1->apply_L(h));
    const Vec rhs = op_full->apply_L(lifted);
    // The full tensor grid has corner nodes beyond the last radial node of
    // the reduced rule; lifted data is clamped there under a Maxwellian tail
    // of size ~1e-7, which bounds the achievable agreement.
    CHECK(norm_w(g, lhs - rhs) < 2e-6 * std::max(1.0, norm_w(g, rhs)));
}

TEST_CASE("model validation rejects a non-positive rate") {
    CollisionModel model;
    model.nu0 = 0.0;
    CHECK_THROWS_AS(static_cast<void>(CollisionOperator::build(grid16(), model)), Error);
}
