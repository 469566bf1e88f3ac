#include "kfl/velocity_grid.hpp"

#include <cmath>
#include <cstdio>

#include "kfl/error.hpp"

namespace kfl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Midpoint rule on [-cutoff, cutoff]: symmetric, no node at v = 0, and
// spectrally accurate for Gaussian-weighted integrands (Poisson summation).
std::pair<std::vector<double>, std::vector<double>> uniform_axis(int n, double cutoff) {
    std::vector<double> x(n), w(n);
    const double h = 2.0 * cutoff / n;
    for (int i = 0; i < n; ++i) {
        x[i] = -cutoff + (i + 0.5) * h;
        w[i] = h;
    }
    // Symmetrize exactly against rounding in the node formula.
    for (int i = 0; i < n / 2; ++i) {
        const double a = 0.5 * (x[n - 1 - i] - x[i]);
        x[i] = -a;
        x[n - 1 - i] = a;
    }
    return {x, w};
}

std::pair<std::vector<double>, std::vector<double>> axis_rule(const GridSpec& spec) {
    require(spec.points_per_axis >= 4, ErrorKind::Config,
            "velocity grid needs at least 4 points per axis");
    if (spec.scheme == GridScheme::TensorGauss) {
        QuadRule1D r = gauss_hermite_prob(spec.points_per_axis);
        return {r.nodes, r.weights};
    }
    require(spec.cutoff > 0.0, ErrorKind::Config, "uniform velocity grid needs cutoff > 0");
    return uniform_axis(spec.points_per_axis, spec.cutoff);
}

}  // namespace

double maxwellian(double v1, double v2, double v3) {
    return maxwellian_speed(v1 * v1 + v2 * v2 + v3 * v3);
}

double maxwellian_speed(double speed2) {
    constexpr double kNorm = 0.063493635934240969785;  // (2 pi)^{-3/2}
    return kNorm * std::exp(-0.5 * speed2);
}

VelocityGrid VelocityGrid::build(const GridSpec& spec) {
    VelocityGrid g;
    g.spec_ = spec;
    auto [x, wx] = axis_rule(spec);
    g.axis_nodes_ = x;
    const int n = static_cast<int>(x.size());
    const Eigen::Index total = static_cast<Eigen::Index>(n) * n * n;
    for (auto& comp : g.v_) comp.resize(total);
    g.weights_.resize(total);
    g.mu_.resize(total);
    g.sqrt_mu_.resize(total);
    g.specular_.resize(static_cast<std::size_t>(total));

    Eigen::Index idx = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k, ++idx) {
                g.v_[0][idx] = x[i];
                g.v_[1][idx] = x[j];
                g.v_[2][idx] = x[k];
                g.weights_[idx] = wx[i] * wx[j] * wx[k];
                const double m = maxwellian(x[i], x[j], x[k]);
                g.mu_[idx] = m;
                g.sqrt_mu_[idx] = std::sqrt(m);
                const Eigen::Index kf = n - 1 - k;  // v3 -> -v3
                g.specular_[static_cast<std::size_t>(idx)] =
                    (static_cast<Eigen::Index>(i) * n + j) * n + kf;
            }
        }
    }

    for (int c = 0; c < 5; ++c) g.chi_[c].resize(total);
    for (Eigen::Index p = 0; p < total; ++p) {
        const double s2 =
            g.v_[0][p] * g.v_[0][p] + g.v_[1][p] * g.v_[1][p] + g.v_[2][p] * g.v_[2][p];
        g.chi_[0][p] = g.sqrt_mu_[p];
        g.chi_[1][p] = g.v_[0][p] * g.sqrt_mu_[p];
        g.chi_[2][p] = g.v_[1][p] * g.sqrt_mu_[p];
        g.chi_[3][p] = g.v_[2][p] * g.sqrt_mu_[p];
        g.chi_[4][p] = 0.5 * (s2 - 3.0) * g.sqrt_mu_[p];
    }

    const double defect = std::abs(g.integrate(g.mu_) - 1.0);
    g.mu_tol_ = std::max(10.0 * defect, 1e-12);
    return g;
}

double VelocityGrid::integrate(const Vec& f) const {
    require(f.size() == weights_.size(), ErrorKind::Solver,
            "field length does not match velocity grid size");
    return pairwise_dot(weights_, f);
}

double VelocityGrid::inner(const Vec& f, const Vec& g) const {
    require(f.size() == weights_.size() && g.size() == weights_.size(), ErrorKind::Solver,
            "field length does not match velocity grid size");
    return pairwise_dot3(weights_, f, g);
}

double VelocityGrid::inner3(const Vec& f, const Vec& g, const Vec& h) const {
    Vec fg = f.cwiseProduct(g);
    return pairwise_dot3(weights_, fg, h);
}

Vec VelocityGrid::sample(const std::function<double(double, double, double)>& fn) const {
    Vec out(size());
    for (Eigen::Index p = 0; p < size(); ++p) out[p] = fn(v_[0][p], v_[1][p], v_[2][p]);
    return out;
}

std::string VelocityGrid::to_table() const {
    std::string out;
    out.reserve(static_cast<std::size_t>(size()) * 80);
    char line[160];
    for (Eigen::Index p = 0; p < size(); ++p) {
        std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g\n", v_[0][p], v_[1][p],
                      v_[2][p], weights_[p]);
        out += line;
    }
    return out;
}

AxisymGrid AxisymGrid::build(const GridSpec& parent_spec, int mode, int n_perp) {
    require(mode == 0 || mode == 1, ErrorKind::Config, "axisymmetric mode must be 0 or 1");
    AxisymGrid g;
    g.mode_ = mode;
    auto [x3, w3] = axis_rule(parent_spec);
    g.v3_nodes_ = x3;
    if (n_perp <= 0) n_perp = std::max(6, (2 * parent_spec.points_per_axis) / 3);

    // Radial rule in t = v_perp^2 / 2:  int_0^inf f(v_perp) 2 pi v_perp dv_perp
    //                                 = 2 pi int_0^inf f(sqrt(2 t)) dt.
    QuadRule1D lag = gauss_laguerre(n_perp, 0.0);
    g.vperp_nodes_.resize(static_cast<std::size_t>(n_perp));
    for (int p = 0; p < n_perp; ++p) g.vperp_nodes_[p] = std::sqrt(2.0 * lag.nodes[p]);

    const int n3 = static_cast<int>(x3.size());
    const Eigen::Index total = static_cast<Eigen::Index>(n3) * n_perp;
    g.v3_.resize(total);
    g.vperp_.resize(total);
    g.speed2_.resize(total);
    g.weights_.resize(total);
    g.sqrt_mu_.resize(total);
    g.specular_.resize(static_cast<std::size_t>(total));

    for (int i = 0; i < n3; ++i) {
        for (int p = 0; p < n_perp; ++p) {
            const Eigen::Index q = g.index(i, p);
            g.v3_[q] = x3[i];
            g.vperp_[q] = g.vperp_nodes_[static_cast<std::size_t>(p)];
            g.speed2_[q] = x3[i] * x3[i] + 2.0 * lag.nodes[p];
            // Mode 0 carries the plain axisymmetric measure; mode 1 folds the
            // angular average of v1^2, namely v_perp^2 / 2 = t.
            double w = w3[i] * kTwoPi * lag.weights[p];
            if (mode == 1) w *= lag.nodes[p];
            g.weights_[q] = w;
            g.sqrt_mu_[q] = std::sqrt(maxwellian_speed(g.speed2_[q]));
            g.specular_[static_cast<std::size_t>(q)] = g.index(n3 - 1 - i, p);
        }
    }

    if (mode == 0) {
        Vec c0 = g.sqrt_mu_;
        Vec c3 = g.v3_.cwiseProduct(g.sqrt_mu_);
        Vec c4 = (0.5 * (g.speed2_.array() - 3.0) * g.sqrt_mu_.array()).matrix();
        g.null_profiles_ = {c0, c3, c4};
    } else {
        g.null_profiles_ = {g.sqrt_mu_};
    }
    g.perp_interp_ = BarycentricInterp(lag.nodes);  // radial interpolation in t
    return g;
}

double AxisymGrid::integrate(const Vec& f) const {
    require(f.size() == weights_.size(), ErrorKind::Solver,
            "field length does not match axisymmetric grid size");
    return pairwise_dot(weights_, f);
}

double AxisymGrid::inner(const Vec& f, const Vec& g) const {
    require(f.size() == weights_.size() && g.size() == weights_.size(), ErrorKind::Solver,
            "field length does not match axisymmetric grid size");
    return pairwise_dot3(weights_, f, g);
}

Vec AxisymGrid::sample(const std::function<double(double, double)>& fn) const {
    Vec out(size());
    for (Eigen::Index q = 0; q < size(); ++q) out[q] = fn(v3_[q], vperp_[q]);
    return out;
}

Vec AxisymGrid::lift(const VelocityGrid& full, const std::function<double(double, double)>& fn,
                     int tangential_axis) const {
    require(tangential_axis == 1 || tangential_axis == 2, ErrorKind::Config,
            "tangential axis must be 1 or 2");
    Vec out(full.size());
    const Vec& vt = tangential_axis == 1 ? full.v1() : full.v2();
    for (Eigen::Index p = 0; p < full.size(); ++p) {
        const double rho = std::hypot(full.v1()[p], full.v2()[p]);
        double val = fn(full.v3()[p], rho);
        if (mode_ == 1) val *= vt[p];
        out[p] = val;
    }
    return out;
}

Vec AxisymGrid::lift_data(const VelocityGrid& full, const Vec& data, int tangential_axis) const {
    require(data.size() == weights_.size(), ErrorKind::Solver,
            "field length does not match axisymmetric grid size");
    require(tangential_axis == 1 || tangential_axis == 2, ErrorKind::Config,
            "tangential axis must be 1 or 2");
    const int n3 = n_v3();
    const int np = n_perp();
    // Kinetic fields live in the sqrt(mu)-weighted space, so interpolate the
    // polynomial-like coefficient data / sqrt(mu) in t = v_perp^2 / 2 and
    // restore the exact Maxwellian factor on the target node. A coefficient
    // polynomial in t of degree < n_perp lifts exactly.
    Vec out(full.size());
    const Vec& vt = tangential_axis == 1 ? full.v1() : full.v2();
    Vec slice(np);
    // Extrapolating below the first radial node (toward the axis) is exact
    // for polynomial coefficients and mild otherwise; above the last node the
    // interpolant is untrustworthy, but the restored Maxwellian factor damps
    // anything clamped there to negligible size.
    const double t_max = 0.5 * vperp_nodes_.back() * vperp_nodes_.back();
    for (Eigen::Index p = 0; p < full.size(); ++p) {
        const double v3p = full.v3()[p];
        // Match the full-grid v3 to a reduced-axis node (the axis rules
        // coincide when both grids come from the same parent spec).
        int best = 0;
        double bestd = std::abs(v3_nodes_[0] - v3p);
        for (int i = 1; i < n3; ++i) {
            const double d = std::abs(v3_nodes_[static_cast<std::size_t>(i)] - v3p);
            if (d < bestd) {
                bestd = d;
                best = i;
            }
        }
        require(bestd < 1e-9, ErrorKind::Solver,
                "full grid was not built from the same axis rule as the reduced grid");
        for (int ip = 0; ip < np; ++ip) {
            const Eigen::Index q = index(best, ip);
            slice[ip] = data[q] / sqrt_mu_[q];
        }
        double t = 0.5 * (full.v1()[p] * full.v1()[p] + full.v2()[p] * full.v2()[p]);
        t = std::min(t, t_max);
        double val = perp_interp_.eval(slice, t) *
                     std::sqrt(maxwellian(full.v1()[p], full.v2()[p], v3p));
        if (mode_ == 1) val *= vt[p];
        out[p] = val;
    }
    return out;
}

}  // namespace kfl
