#pragma once

/// Shared numerical primitives: deterministic summation, Gaussian quadrature
/// rules, orthogonal-polynomial evaluation, and interpolation helpers used by
/// every solver in the toolkit.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace kfl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Deterministic pairwise summation. The reduction tree depends only on the
/// element count, never on threading or chunk boundaries, so repeated runs
/// produce bit-identical results.
double pairwise_sum(std::span<const double> x);

/// Pairwise-summed dot product of two equal-length vectors.
double pairwise_dot(const Vec& a, const Vec& b);

/// Pairwise-summed triple product sum_i a_i b_i c_i (weighted inner product).
double pairwise_dot3(const Vec& a, const Vec& b, const Vec& c);

/// One-dimensional quadrature rule: sum_i w_i f(x_i) approximates an integral
/// of f against plain Lebesgue measure on the rule's native interval.
struct QuadRule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

/// Gauss rule for integrals of the form int f(x) dx over the whole line where
/// f decays like a polynomial times exp(-x^2/2). Exact when
/// f = p(x) exp(-x^2/2) with deg p <= 2n-1. Weights already contain the
/// exp(+x^2/2) fold, so they are plain-dx weights. Nodes are symmetric about
/// zero and never contain zero when n is even.
QuadRule1D gauss_hermite_prob(int n);

/// Gauss-Legendre rule on [a, b]; exact for polynomials of degree <= 2n-1.
QuadRule1D gauss_legendre(int n, double a, double b);

/// Generalized Gauss-Laguerre rule for int_0^inf f(t) dt with f decaying like
/// t^alpha p(t) exp(-t). Weights contain the exp(+t) t^{-alpha} fold
/// (plain-dt weights for integrands of that shape).
QuadRule1D gauss_laguerre(int n, double alpha);

/// Probabilists' Hermite polynomials He_0..He_degree at x, normalized so that
/// int He_m He_n exp(-x^2/2)/sqrt(2 pi) dx = delta_mn (i.e. He_n/sqrt(n!)).
void hermite_normalized(double x, int degree, std::span<double> out);

/// Generalized Laguerre polynomials L^{(alpha)}_0..L^{(alpha)}_degree at t,
/// normalized against the weight t^alpha e^{-t} / Gamma(alpha+1):
/// int Lm Ln t^alpha e^-t dt / Gamma(alpha+1) = delta_mn.
void laguerre_normalized(double t, double alpha, int degree, std::span<double> out);

/// Barycentric Lagrange interpolation on a fixed set of nodes. Stable on
/// Gauss-type point sets; used to lift reduced-grid profiles onto other grids.
class BarycentricInterp {
  public:
    BarycentricInterp() = default;
    explicit BarycentricInterp(std::vector<double> nodes);
    double eval(std::span<const double> values, double x) const;
    double eval(const Vec& values, double x) const {
        return eval(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())),
                    x);
    }
    const std::vector<double>& nodes() const { return nodes_; }

  private:
    std::vector<double> nodes_;
    std::vector<double> w_;
};

/// Piecewise-cubic (Catmull-Rom) interpolation of a sampled profile on a
/// strictly increasing abscissa. Evaluation outside the range clamps to the
/// end values; the layer profiles this is used on decay to zero at the far
/// end, so clamping is the physically correct extension.
double interp_cubic(std::span<const double> x, std::span<const double> y, double xq);

/// Second-order finite-difference derivative of samples on a (possibly
/// nonuniform) strictly increasing grid. One-sided second-order stencils at
/// the ends.
std::vector<double> derivative_nonuniform(std::span<const double> x, std::span<const double> y);

/// Trapezoid tail integrals on a nonuniform grid: out[i] = int_{x_i}^{x_end} y dx.
std::vector<double> tail_integral_trapezoid(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of log(y) against log(x). Used for every empirical
/// convergence-order fit in the test suites.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// FNV-1a 64-bit hash, printed as 16 hex digits. Used for output checksums
/// and config hashes in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace kfl
