#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "kfl/collision.hpp"
#include "kfl/error.hpp"
#include "kfl/hard_sphere.hpp"
#include "kfl/numerics.hpp"
#include "kfl/velocity_grid.hpp"

using namespace kfl;

namespace {

constexpr double kPi = 3.14159265358979323846;

const VelocityGrid& grid16() {
    static VelocityGrid g = VelocityGrid::build({GridScheme::TensorGauss, 16, 6.0});
    return g;
}

// Settings used by every assembled-model case in this file.  Degree-4 span
// and a 6-point axis rule keep assembly around a second; the measured
// raw-assembly asymmetry at these settings is 4.9e-2, so the quadrature gate
// is set to 0.1.  The matrix cache lives under the test working directory so
// the pair-loop runs once per build tree.
CollisionModel hs_model() {
    CollisionModel m;
    m.kind = CollisionKind::HardSphere;
    m.kernel_tol = 0.1;
    m.basis_degree = 4;
    m.gamma_degree = 4;
    m.quad_points_axis = 6;
    m.quad_points_angle = 8;
    m.matrix_cache = "hs-matrix-cache";
    return m;
}

std::shared_ptr<const CollisionOperator> hs16() {
    static std::shared_ptr<const CollisionOperator> op =
        CollisionOperator::build(grid16(), hs_model());
    return op;
}

Vec random_field(unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> pick(0.0, 1.0);
    Vec f(grid16().size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = pick(rng) * grid16().sqrt_mu()[i];
    return f;
}

double norm_w(const VelocityGrid& g, const Vec& f) { return std::sqrt(g.inner(f, f)); }

// Closed form of the collision frequency for the unit hard-sphere kernel:
//   nu(v) = integral of mu(v_*) 2*pi*|v - v_*| dv_*,
// a function of the speed s = |v| alone.
double nu_closed(double s) {
    const double rt2opi = std::sqrt(2.0 / kPi);
    if (s < 1e-12) return 4.0 * kPi * rt2opi;
    return 2.0 * kPi *
           (rt2opi * std::exp(-0.5 * s * s) + (s + 1.0 / s) * std::erf(s / std::sqrt(2.0)));
}

// Independent radial-quadrature computation of the same integral.  The
// spherical average of |v - v_*| over directions of v_* at radius r has the
// piecewise form below (no cancellation for small arguments).
double nu_radial(double s) {
    auto mean_distance = [s](double r) {
        if (r >= s) return r + s * s / (3.0 * r);
        return s + r * r / (3.0 * s);
    };
    auto segment = [&](double a, double b) {
        const QuadRule1D gl = gauss_legendre(80, a, b);
        double acc = 0.0;
        for (Eigen::Index k = 0; k < gl.nodes.size(); ++k) {
            const double r = gl.nodes[k];
            const double radial_mu = 4.0 * kPi * r * r * std::pow(2.0 * kPi, -1.5) *
                                     std::exp(-0.5 * r * r);
            acc += gl.weights[k] * radial_mu * mean_distance(r);
        }
        return acc;
    };
    const double cut = std::min(std::max(s, 1e-3), 13.0);
    return 2.0 * kPi * (segment(0.0, cut) + segment(cut, 14.0));
}

Vec sample_poly_field(double (*poly)(double, double, double)) {
    return grid16().sample([poly](double v1, double v2, double v3) {
        return poly(v1, v2, v3) * std::sqrt(maxwellian(v1, v2, v3));
    });
}

double poly_a12(double v1, double v2, double) { return v1 * v2; }
double poly_a13(double v1, double, double v3) { return v1 * v3; }
double poly_a11(double v1, double v2, double v3) {
    return v1 * v1 - (v1 * v1 + v2 * v2 + v3 * v3) / 3.0;
}
double poly_a22(double v1, double v2, double v3) {
    return v2 * v2 - (v1 * v1 + v2 * v2 + v3 * v3) / 3.0;
}
double poly_b3(double v1, double v2, double v3) {
    return v3 * (v1 * v1 + v2 * v2 + v3 * v3 - 5.0) / 2.0;
}

// Smallest generalized Rayleigh quotient <L f, f> / <nu f, f> over the
// orthogonal complement of the conserved fields, by inverse power iteration.
template <class G>
double rayleigh_min(const CollisionOperator& op, const G& g, Vec x, int iters) {
    const auto& null = op.null_projection();
    x = null.complement(x);
    x /= std::sqrt(op.nu_norm2(x));
    for (int it = 0; it < iters; ++it) {
        x = op.invert_L(null.complement(op.collision_frequency().cwiseProduct(x)));
        x /= std::sqrt(op.nu_norm2(x));
    }
    return g.inner(op.apply_L(x), x) / op.nu_norm2(x);
}

}  // namespace

TEST_CASE("collision frequency closed form agrees with a radial quadrature oracle") {
    // Two independent computations of the defining integral: the erf-based
    // closed form and a piecewise Gauss-Legendre radial quadrature.
    for (const double s : {0.0, 0.3, 1.0, 2.5, 5.0, 6.5}) {
        CHECK(nu_radial(s) == doctest::Approx(nu_closed(s)).epsilon(1e-12));
    }
    // Value at the origin.
    CHECK(nu_closed(0.0) == doctest::Approx(4.0 * kPi * std::sqrt(2.0 / kPi)).epsilon(1e-15));
    // The frequency grows monotonically with speed.
    for (double s = 0.0; s < 6.0; s += 0.05) {
        CHECK(nu_closed(s + 0.05) >= nu_closed(s) - 1e-12);
    }
}

TEST_CASE("assembled collision frequency matches the oracle and its growth envelope") {
    auto op = hs16();
    const auto& g = grid16();
    CHECK_FALSE(op->constant_frequency());

    const Vec nu = op->collision_frequency();
    const Vec speed = (g.v1().cwiseAbs2() + g.v2().cwiseAbs2() + g.v3().cwiseAbs2()).cwiseSqrt();
    const double lo = op->nu_bound_lower();
    const double hi = op->nu_bound_upper();
    CHECK(lo > 0.0);
    // Frozen brackets for this grid (the constants are grid-fitted).
    CHECK(lo > 4.8);
    CHECK(lo < 5.5);
    CHECK(hi > 6.0);
    CHECK(hi < 7.0);

    double worst_rel = 0.0;
    for (Eigen::Index p = 0; p < nu.size(); ++p) {
        // Linear growth envelope at every node.
        CHECK(nu[p] >= lo * (1.0 + speed[p]) - 1e-12);
        CHECK(nu[p] <= hi * (1.0 + speed[p]) + 1e-12);
        worst_rel = std::max(worst_rel, std::abs(nu[p] - nu_closed(speed[p])) / nu[p]);
    }
    // The assembled values come from the operator's own 3-D quadrature; the
    // measured deviation from the closed form at these settings is 5e-4.
    CHECK(worst_rel < 1e-3);

    // Monotone along a grid ray: fix the transverse components, walk v3 up.
    std::vector<std::pair<double, double>> ray;
    for (Eigen::Index p = 0; p < nu.size(); ++p) {
        if (g.v1()[p] == g.v1()[0] && g.v2()[p] == g.v2()[0] && g.v3()[p] > 0)
            ray.emplace_back(g.v3()[p], nu[p]);
    }
    CHECK(ray.size() == 8);
    std::sort(ray.begin(), ray.end());
    for (std::size_t k = 1; k < ray.size(); ++k) {
        CHECK(ray[k].second >= ray[k - 1].second - 1e-3 * ray[k].second);
    }
}

TEST_CASE("assembly diagnostics sit inside the quadrature gate") {
    auto op = hs16();
    const HardSphereDiagnostics d = hard_sphere_diagnostics(*op);
    CHECK(d.basis_count == 35);
    CHECK(d.asymmetry_defect > 0.0);
    CHECK(d.asymmetry_defect < 0.1);
    CHECK(d.null_defect < 0.1);
    // Spectral gap of the span operator away from the conserved directions
    // (measured 7.55 at these settings).
    CHECK(d.spectral_floor > 5.0);

    // The gate actually fires: a tight tolerance at coarse quadrature throws.
    CollisionModel bad = hs_model();
    bad.kernel_tol = 1e-4;
    bad.quad_points_axis = 4;
    bad.matrix_cache.clear();
    CHECK_THROWS_AS(static_cast<void>(CollisionOperator::build(grid16(), bad)), Error);
}

TEST_CASE("assembled operator annihilates conserved fields and is self-adjoint") {
    auto op = hs16();
    const auto& g = grid16();
    for (const Vec& chi : g.chi()) CHECK(norm_w(g, op->apply_L(chi)) < 1e-12);
    for (unsigned seed = 7; seed < 27; ++seed) {
        const Vec f = random_field(seed);
        const Vec h = random_field(seed + 1000);
        const double defect = std::abs(g.inner(op->apply_L(f), h) - g.inner(f, op->apply_L(h)));
        CHECK(defect <= 1e-8 * norm_w(g, f) * norm_w(g, h));
        // Output orthogonal to every conserved field.
        for (const Vec& chi : g.chi()) CHECK(std::abs(g.inner(op->apply_L(f), chi)) < 1e-10);
    }
}

TEST_CASE("scattering part equals frequency minus operator bitwise") {
    auto op = hs16();
    const Vec f = random_field(42);
    const Vec lhs = op->apply_K(f);
    const Vec rhs = op->collision_frequency().cwiseProduct(f) - op->apply_L(f);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coercivity constant is positive and stable under grid refinement") {
    auto op = hs16();
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);
    for (unsigned seed = 100; seed < 200; ++seed) {
        const Vec f = random_field(seed);
        const double lhs = g.inner(op->apply_L(f), f);
        const double rhs = op->nu_norm2(P.complement(f));
        CHECK(lhs >= 0.25 * rhs);
    }
    // Rayleigh minimum of <L f, f> / <nu f, f>: measured 0.3025 here.
    const double c16 = rayleigh_min(*op, g, random_field(11), 40);
    CHECK(c16 > 0.25);
    CHECK(c16 < 0.40);

    VelocityGrid g20 = VelocityGrid::build({GridScheme::TensorGauss, 20, 6.5});
    auto op20 = CollisionOperator::build(g20, hs_model());
    std::mt19937 rng(12);
    std::normal_distribution<double> pick(0.0, 1.0);
    Vec f20(g20.size());
    for (Eigen::Index i = 0; i < f20.size(); ++i) f20[i] = pick(rng) * g20.sqrt_mu()[i];
    const double c20 = rayleigh_min(*op20, g20, f20, 40);
    CHECK(std::abs(c16 / c20 - 1.0) < 0.10);
}

TEST_CASE("resolvent solves to tolerance and yields positive transport coefficients") {
    auto op = hs16();
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);
    for (unsigned seed = 300; seed < 310; ++seed) {
        const Vec gf = P.complement(random_field(seed));
        const Vec x = op->invert_L(gf);
        CHECK(norm_w(g, op->apply_L(x) - gf) < 1e-10 * norm_w(g, gf));
    }

    const Vec A12 = sample_poly_field(poly_a12);
    const Vec B3 = sample_poly_field(poly_b3);
    const double k1 = g.inner(op->invert_L(A12), A12);
    const double k2 = g.inner(op->invert_L(B3), B3);
    CHECK(k1 > 0.0);
    CHECK(k2 > 0.0);
    // Variational lower bounds <f, chi>^2 / <f, L f> with f the moment field
    // itself, evaluated in closed form below; the solve can only improve on
    // them.  Frozen upper brackets come from the measured values 0.0899 and
    // 0.3944 (the discrete resolvent includes off-span response, so the
    // shear/heat coefficients here are properties of this discretization).
    CHECK(k1 >= 0.999 * 5.0 / (32.0 * std::sqrt(kPi)));
    CHECK(k2 >= 0.999 * 6.25 * 3.0 / (32.0 * std::sqrt(kPi)));
    CHECK(k1 > 0.088);
    CHECK(k1 < 0.092);
    CHECK(k2 > 0.33);
    CHECK(k2 < 0.45);

    // Coefficients are grid-converged: rebuild on a finer grid.
    VelocityGrid g20 = VelocityGrid::build({GridScheme::TensorGauss, 20, 6.5});
    auto op20 = CollisionOperator::build(g20, hs_model());
    const Vec A12f = g20.sample([](double v1, double v2, double v3) {
        return v1 * v2 * std::sqrt(maxwellian(v1, v2, v3));
    });
    const double k1f = g20.inner(op20->invert_L(A12f), A12f);
    CHECK(std::abs(k1 / k1f - 1.0) < 1e-3);
}

TEST_CASE("quadratic-form values of the moment fields match closed-form constants") {
    // For the unit hard-sphere kernel the Dirichlet values of the stress and
    // heat-flux moment fields are exact rational multiples of sqrt(pi); they
    // pin both the kernel normalization and the assembly in one number each.
    // The 6-point axis rule carries ~1e-3 relative quadrature error on the
    // degree-3 field.
    auto op = hs16();
    const auto& g = grid16();
    const Vec A12 = sample_poly_field(poly_a12);
    const Vec B3 = sample_poly_field(poly_b3);
    const double aa = g.inner(op->apply_L(A12), A12);
    const double bb = g.inner(op->apply_L(B3), B3);
    CHECK(aa == doctest::Approx(32.0 * std::sqrt(kPi) / 5.0).epsilon(1e-3));
    CHECK(bb == doctest::Approx(32.0 * std::sqrt(kPi) / 3.0).epsilon(5e-3));
}

TEST_CASE("inverted stress fields have isotropic structure") {
    auto op = hs16();
    const auto& g = grid16();
    const Vec A12 = sample_poly_field(poly_a12);
    const Vec A13 = sample_poly_field(poly_a13);
    const Vec A11 = sample_poly_field(poly_a11);
    const Vec A22 = sample_poly_field(poly_a22);
    const Vec hA12 = op->invert_L(A12);
    const Vec hA11 = op->invert_L(A11);
    const double k1 = g.inner(hA12, A12);
    // Isotropy ties every component pairing to the single coefficient k1.
    CHECK(g.inner(hA11, A11) == doctest::Approx(4.0 / 3.0 * k1).epsilon(5e-3));
    CHECK(g.inner(hA11, A22) == doctest::Approx(-2.0 / 3.0 * k1).epsilon(5e-3));
    // Distinct off-diagonal components decouple exactly (grid parity).
    CHECK(std::abs(g.inner(hA12, A13)) < 1e-12);
}

TEST_CASE("bilinear form conserves moments and vanishes on equilibrium") {
    auto op = hs16();
    const auto& g = grid16();
    CHECK(norm_w(g, op->apply_Gamma(g.chi()[0], g.chi()[0])) < 1e-12);
    for (unsigned seed = 500; seed < 510; ++seed) {
        const Vec f = random_field(seed);
        const Vec h = random_field(seed + 31);
        const Vec gamma = op->apply_Gamma(f, h);
        // The output is reconstructed inside the operator range, so the
        // conserved moments vanish to rounding, not just to quadrature.
        for (const Vec& chi : g.chi())
            CHECK(std::abs(g.inner(gamma, chi)) <=
                  1e-12 * std::max(1.0, norm_w(g, f) * norm_w(g, h)));
    }
}

TEST_CASE("inverted symmetric bilinear form reproduces the product rule") {
    auto op = hs16();
    const auto& g = grid16();
    HydroProjection P = HydroProjection::build(g);
    std::mt19937 rng(902);
    std::uniform_real_distribution<double> pick(-0.5, 0.5);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        HydroProjection::Moments mf, mg;
        mf.rho = pick(rng);
        mg.rho = pick(rng);
        mf.theta = pick(rng);
        mg.theta = pick(rng);
        for (int d = 0; d < 3; ++d) {
            mf.u[d] = pick(rng);
            mg.u[d] = pick(rng);
        }
        const Vec f = P.from_moments(mf);
        const Vec h = P.from_moments(mg);
        const Vec sym = op->apply_Gamma(f, h) + op->apply_Gamma(h, f);
        const Vec lhs = op->invert_L(sym);
        Vec prod(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) prod[i] = f[i] * h[i] / g.sqrt_mu()[i];
        const Vec rhs = P.complement(prod);
        worst = std::max(worst, norm_w(g, lhs - rhs) / std::max(1.0, norm_w(g, rhs)));
    }
    // Limited by the raw-assembly asymmetry at these settings; measured 2e-3.
    CHECK(worst < 5e-3);
}

TEST_CASE("sampled scattering kernel sits under the decay envelope") {
    auto op = hs16();
    const auto samples = sample_scattering_kernel(*op, grid16(), 4000, 99);
    CHECK(samples.size() >= 3000);
    double fitted_c = 0.0;
    for (const auto& s : samples) {
        CHECK(s.envelope > 0.0);
        CHECK(std::isfinite(s.value));
        fitted_c = std::max(fitted_c, s.value / s.envelope);
    }
    // The finite-rank kernel obeys the envelope with a finite constant; the
    // fitted value at these settings is 4.7e4.  Regression bound only.
    CHECK(fitted_c > 1.0);
    CHECK(fitted_c < 1e5);
}

TEST_CASE("operator matrices round-trip through the text-table cache") {
    auto op = hs16();  // guarantees the cache files exist
    CollisionModel cached = hs_model();
    cached.cache_only = true;
    auto op2 = CollisionOperator::build(grid16(), cached);
    const Vec f = random_field(777);
    CHECK((op->apply_L(f) - op2->apply_L(f)).cwiseAbs().maxCoeff() == 0.0);
    const Vec h = random_field(778);
    CHECK((op->apply_Gamma(f, h) - op2->apply_Gamma(f, h)).cwiseAbs().maxCoeff() == 0.0);

    CollisionModel missing = hs_model();
    missing.cache_only = true;
    missing.matrix_cache = "hs-matrix-cache-empty";
    CHECK_THROWS_WITH_AS(static_cast<void>(CollisionOperator::build(grid16(), missing)),
                         doctest::Contains("cache miss"), Error);
}

TEST_CASE("full assembly requires a tensor-product quadrature grid") {
    VelocityGrid g = VelocityGrid::build({GridScheme::UniformTruncated, 16, 6.0});
    CHECK_THROWS_AS(static_cast<void>(CollisionOperator::build(g, hs_model())), Error);
}

TEST_CASE("reduced operators keep the assembled-model structure") {
    const GridSpec spec{GridScheme::TensorGauss, 16, 6.0};
    for (int mode = 0; mode <= 1; ++mode) {
        AxisymGrid ga = AxisymGrid::build(spec, mode);
        auto op = CollisionOperator::build_reduced(ga, spec, hs_model());
        // Growth-envelope constants are fitted after the node speeds are
        // known (measured 5.20 / 6.50 for both modes on this rule).
        CHECK(op->nu_bound_lower() > 4.8);
        CHECK(op->nu_bound_lower() < 5.5);
        CHECK(op->nu_bound_upper() > 6.0);
        CHECK(op->nu_bound_upper() < 7.0);
        for (const Vec& chi : ga.null_profiles())
            CHECK(std::sqrt(ga.inner(op->apply_L(chi), op->apply_L(chi))) < 1e-12);

        std::mt19937 rng(40 + static_cast<unsigned>(mode));
        std::normal_distribution<double> pick(0.0, 1.0);
        for (int trial = 0; trial < 5; ++trial) {
            Vec f(ga.size()), h(ga.size());
            for (Eigen::Index i = 0; i < f.size(); ++i) {
                f[i] = pick(rng);
                h[i] = pick(rng);
            }
            const double defect =
                std::abs(ga.inner(op->apply_L(f), h) - ga.inner(f, op->apply_L(h)));
            CHECK(defect <= 1e-8 * std::sqrt(ga.inner(f, f) * ga.inner(h, h)));
            const Vec r = op->null_projection().complement(f);
            const Vec x = op->invert_L(r);
            const Vec res = op->apply_L(x) - r;
            CHECK(std::sqrt(ga.inner(res, res)) < 1e-10 * std::sqrt(ga.inner(r, r)));
        }
    }
}
