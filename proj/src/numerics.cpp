#include "kfl/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kfl/error.hpp"

namespace kfl {

namespace {

constexpr std::size_t kPairwiseBase = 32;

double pairwise_sum_impl(const double* x, std::size_t n) {
    if (n <= kPairwiseBase) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(x, half) + pairwise_sum_impl(x + half, n - half);
}

/// Golub-Welsch: nodes are eigenvalues of the symmetric Jacobi matrix of the
/// three-term recurrence, weights are mu0 * (first eigenvector component)^2.
QuadRule1D golub_welsch(const std::vector<double>& diag, const std::vector<double>& offdiag,
                        double mu0) {
    const int n = static_cast<int>(diag.size());
    Mat J = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) J(i, i) = diag[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < n; ++i) {
        J(i, i + 1) = offdiag[static_cast<std::size_t>(i)];
        J(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    require(es.info() == Eigen::Success, ErrorKind::Solver, "quadrature eigensolve failed");
    QuadRule1D rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    return rule;
}

double lgamma_pos(double x) { return std::lgamma(x); }

}  // namespace

double pairwise_sum(std::span<const double> x) { return pairwise_sum_impl(x.data(), x.size()); }

double pairwise_dot(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), ErrorKind::Solver, "pairwise_dot: size mismatch");
    std::vector<double> prod(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) prod[static_cast<std::size_t>(i)] = a(i) * b(i);
    return pairwise_sum(prod);
}

double pairwise_dot3(const Vec& a, const Vec& b, const Vec& c) {
    require(a.size() == b.size() && b.size() == c.size(), ErrorKind::Solver,
            "pairwise_dot3: size mismatch");
    std::vector<double> prod(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i)
        prod[static_cast<std::size_t>(i)] = a(i) * b(i) * c(i);
    return pairwise_sum(prod);
}

QuadRule1D gauss_hermite_prob(int n) {
    require(n >= 1, ErrorKind::Config, "gauss_hermite_prob: n >= 1 required");
    std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
    std::vector<double> off(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k) off[static_cast<std::size_t>(k - 1)] = std::sqrt(double(k));
    const double mu0 = std::sqrt(2.0 * M_PI);  // int exp(-x^2/2) dx
    QuadRule1D rule = golub_welsch(diag, off, mu0);
    // Fold the Gaussian density back in so weights integrate plain dx.
    for (std::size_t i = 0; i < rule.size(); ++i)
        rule.weights[i] *= std::exp(0.5 * rule.nodes[i] * rule.nodes[i]);
    // Exact symmetrization: eigenvalue solvers return +-x pairs only to
    // roundoff; average the pairs so downstream reflection maps are exact.
    std::vector<std::size_t> idx(rule.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return rule.nodes[a] < rule.nodes[b]; });
    QuadRule1D sorted;
    sorted.nodes.resize(rule.size());
    sorted.weights.resize(rule.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        sorted.nodes[i] = rule.nodes[idx[i]];
        sorted.weights[i] = rule.weights[idx[i]];
    }
    const std::size_t m = sorted.size();
    for (std::size_t i = 0; i < m / 2; ++i) {
        const std::size_t j = m - 1 - i;
        const double x = 0.5 * (sorted.nodes[j] - sorted.nodes[i]);
        const double w = 0.5 * (sorted.weights[i] + sorted.weights[j]);
        sorted.nodes[i] = -x;
        sorted.nodes[j] = x;
        sorted.weights[i] = w;
        sorted.weights[j] = w;
    }
    if (m % 2 == 1) sorted.nodes[m / 2] = 0.0;
    return sorted;
}

QuadRule1D gauss_legendre(int n, double a, double b) {
    require(n >= 1, ErrorKind::Config, "gauss_legendre: n >= 1 required");
    require(b > a, ErrorKind::Config, "gauss_legendre: empty interval");
    std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
    std::vector<double> off(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k)
        off[static_cast<std::size_t>(k - 1)] = double(k) / std::sqrt(4.0 * k * k - 1.0);
    QuadRule1D rule = golub_welsch(diag, off, 2.0);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        rule.nodes[i] = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i];
        rule.weights[i] *= 0.5 * (b - a);
    }
    return rule;
}

QuadRule1D gauss_laguerre(int n, double alpha) {
    require(n >= 1, ErrorKind::Config, "gauss_laguerre: n >= 1 required");
    require(alpha > -1.0, ErrorKind::Config, "gauss_laguerre: alpha > -1 required");
    std::vector<double> diag(static_cast<std::size_t>(n));
    std::vector<double> off(static_cast<std::size_t>(n - 1));
    for (int k = 0; k < n; ++k) diag[static_cast<std::size_t>(k)] = 2.0 * k + alpha + 1.0;
    for (int k = 1; k < n; ++k)
        off[static_cast<std::size_t>(k - 1)] = std::sqrt(double(k) * (double(k) + alpha));
    const double mu0 = std::exp(lgamma_pos(alpha + 1.0));
    QuadRule1D rule = golub_welsch(diag, off, mu0);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double t = rule.nodes[i];
        rule.weights[i] *= std::exp(t - alpha * std::log(t));
    }
    return rule;
}

void hermite_normalized(double x, int degree, std::span<double> out) {
    // He_0 = 1, He_1 = x, He_{k+1} = x He_k - k He_{k-1}; normalize by sqrt(k!).
    // Computed directly in normalized form to avoid overflow at high degree:
    // h_k = He_k/sqrt(k!):  h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1).
    out[0] = 1.0;
    if (degree >= 1) out[1] = x;
    for (int k = 1; k < degree; ++k) {
        out[static_cast<std::size_t>(k + 1)] =
            (x * out[static_cast<std::size_t>(k)] -
             std::sqrt(double(k)) * out[static_cast<std::size_t>(k - 1)]) /
            std::sqrt(double(k + 1));
    }
}

void laguerre_normalized(double t, double alpha, int degree, std::span<double> out) {
    // L^{(a)}_0 = 1, L^{(a)}_1 = 1 + a - t,
    // (k+1) L_{k+1} = (2k + a + 1 - t) L_k - (k + a) L_{k-1}.
    // Norm^2 of L^{(a)}_k against t^a e^-t / Gamma(a+1) is C(k+a, k).
    std::vector<double> raw(static_cast<std::size_t>(degree + 1));
    raw[0] = 1.0;
    if (degree >= 1) raw[1] = 1.0 + alpha - t;
    for (int k = 1; k < degree; ++k) {
        raw[static_cast<std::size_t>(k + 1)] =
            ((2.0 * k + alpha + 1.0 - t) * raw[static_cast<std::size_t>(k)] -
             (double(k) + alpha) * raw[static_cast<std::size_t>(k - 1)]) /
            double(k + 1);
    }
    for (int k = 0; k <= degree; ++k) {
        const double log_norm2 = lgamma_pos(double(k) + alpha + 1.0) - lgamma_pos(double(k) + 1.0) -
                                 lgamma_pos(alpha + 1.0);
        out[static_cast<std::size_t>(k)] =
            raw[static_cast<std::size_t>(k)] * std::exp(-0.5 * log_norm2);
    }
}

BarycentricInterp::BarycentricInterp(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    const std::size_t n = nodes_.size();
    require(n >= 2, ErrorKind::Config, "BarycentricInterp: need >= 2 nodes");
    w_.assign(n, 1.0);
    // Rescale differences by the node-set capacity to avoid under/overflow.
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        scale = std::max(scale, std::abs(nodes_[i] - nodes_[n - 1 - i]));
    if (scale == 0.0) scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            w *= (nodes_[i] - nodes_[j]) / scale;
        }
        w_[i] = 1.0 / w;
    }
}

double BarycentricInterp::eval(std::span<const double> values, double x) const {
    require(values.size() == nodes_.size(), ErrorKind::Solver,
            "BarycentricInterp: value count mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const double d = x - nodes_[i];
        if (std::abs(d) < 1e-14) return values[i];
        const double q = w_[i] / d;
        num += q * values[i];
        den += q;
    }
    return num / den;
}

double interp_cubic(std::span<const double> x, std::span<const double> y, double xq) {
    const std::size_t n = x.size();
    if (xq <= x[0]) return y[0];
    if (xq >= x[n - 1]) return y[n - 1];
    const auto it = std::upper_bound(x.begin(), x.end(), xq);
    std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    if (i >= n - 1) i = n - 2;
    // Hermite cubic on [x_i, x_{i+1}] with slopes from centered differences.
    const double h = x[i + 1] - x[i];
    const double t = (xq - x[i]) / h;
    auto slope = [&](std::size_t k) {
        if (k == 0) return (y[1] - y[0]) / (x[1] - x[0]);
        if (k == n - 1) return (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
        return (y[k + 1] - y[k - 1]) / (x[k + 1] - x[k - 1]);
    };
    const double m0 = slope(i) * h, m1 = slope(i + 1) * h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y[i + 1] +
           (t3 - t2) * m1;
}

std::vector<double> derivative_nonuniform(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    require(n >= 3 && y.size() == n, ErrorKind::Solver, "derivative_nonuniform: bad sizes");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = x[i] - x[i - 1];
        const double hr = x[i + 1] - x[i];
        d[i] = (-hr / (hl * (hl + hr))) * y[i - 1] + ((hr - hl) / (hl * hr)) * y[i] +
               (hl / (hr * (hl + hr))) * y[i + 1];
    }
    {
        const double h0 = x[1] - x[0], h1 = x[2] - x[1];
        d[0] = (-(2 * h0 + h1) / (h0 * (h0 + h1))) * y[0] + ((h0 + h1) / (h0 * h1)) * y[1] +
               (-h0 / (h1 * (h0 + h1))) * y[2];
        const double g1 = x[n - 2] - x[n - 3], g0 = x[n - 1] - x[n - 2];
        d[n - 1] = (g0 / (g1 * (g0 + g1))) * y[n - 3] + (-(g0 + g1) / (g0 * g1)) * y[n - 2] +
                   ((2 * g0 + g1) / (g0 * (g0 + g1))) * y[n - 1];
    }
    return d;
}

std::vector<double> tail_integral_trapezoid(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    require(n >= 2 && y.size() == n, ErrorKind::Solver, "tail_integral: bad sizes");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;)
        out[i] = out[i + 1] + 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    require(n >= 2 && y.size() == n, ErrorKind::Solver, "loglog_slope: bad sizes");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return std::string(buf);
}

}  // namespace kfl
