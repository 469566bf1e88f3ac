#include "kfl/collision.hpp"

#include <cmath>

#include "kfl/error.hpp"
#include "kfl/hard_sphere.hpp"

namespace kfl {

NullProjection NullProjection::build(std::vector<Vec> basis, Vec weights) {
    NullProjection p;
    p.basis_ = std::move(basis);
    p.weights_ = std::move(weights);
    const Eigen::Index n = p.dim();
    require(n > 0, ErrorKind::Solver, "null projection needs at least one basis field");
    Mat gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        require(p.basis_[static_cast<std::size_t>(i)].size() == p.weights_.size(),
                ErrorKind::Solver, "null basis field does not match the grid size");
        for (Eigen::Index j = 0; j <= i; ++j) {
            gram(i, j) = gram(j, i) = pairwise_dot3(p.weights_, p.basis_[static_cast<std::size_t>(i)],
                                                    p.basis_[static_cast<std::size_t>(j)]);
        }
    }
    Eigen::LDLT<Mat> ldlt(gram);
    require(ldlt.info() == Eigen::Success, ErrorKind::Solver,
            "null basis gram matrix is singular");
    p.gram_inv_ = ldlt.solve(Mat::Identity(n, n));
    return p;
}

Vec NullProjection::coefficients(const Vec& f) const {
    const Eigen::Index n = dim();
    Vec m(n);
    for (Eigen::Index i = 0; i < n; ++i)
        m[i] = pairwise_dot3(weights_, basis_[static_cast<std::size_t>(i)], f);
    return gram_inv_ * m;
}

Vec NullProjection::apply(const Vec& f) const {
    Vec c = coefficients(f);
    Vec out = Vec::Zero(f.size());
    for (Eigen::Index i = 0; i < dim(); ++i) out += c[i] * basis_[static_cast<std::size_t>(i)];
    return out;
}

HydroProjection HydroProjection::build(const VelocityGrid& grid) {
    HydroProjection h;
    h.grid_ = &grid;
    std::vector<Vec> basis(grid.chi().begin(), grid.chi().end());
    h.proj_ = NullProjection::build(std::move(basis), grid.weights());
    return h;
}

HydroProjection::Moments HydroProjection::moments(const Vec& f) const {
    Vec c = proj_.coefficients(f);
    Moments m;
    m.rho = c[0];
    m.u = {c[1], c[2], c[3]};
    m.theta = c[4];  // the chi_4 coefficient of a hydro field is theta
    return m;
}

Vec HydroProjection::from_moments(const Moments& m) const {
    const VelocityGrid& g = *grid_;
    Vec out(g.size());
    for (Eigen::Index p = 0; p < g.size(); ++p) {
        const double s2 = g.v1()[p] * g.v1()[p] + g.v2()[p] * g.v2()[p] + g.v3()[p] * g.v3()[p];
        const double h = m.rho + m.u[0] * g.v1()[p] + m.u[1] * g.v2()[p] + m.u[2] * g.v3()[p] +
                         m.theta * 0.5 * (s2 - 3.0);
        out[p] = h * g.sqrt_mu()[p];
    }
    return out;
}

Vec CollisionOperator::apply_K(const Vec& f) const {
    return nu_.cwiseProduct(f) - apply_L(f);
}

double CollisionOperator::nu_norm2(const Vec& f) const {
    Vec nf = nu_.cwiseProduct(f);
    return pairwise_dot3(weights_, nf, f);
}

void CollisionOperator::check_orthogonal(const Vec& g) const {
    const double gnorm = std::sqrt(pairwise_dot3(weights_, g, g));
    for (Eigen::Index i = 0; i < null_.dim(); ++i) {
        const Vec& n = null_.basis()[static_cast<std::size_t>(i)];
        const double nnorm = std::sqrt(pairwise_dot3(weights_, n, n));
        const double m = pairwise_dot3(weights_, g, n);
        if (std::abs(m) > ortho_tol_ * std::max(1.0, gnorm * nnorm)) {
            throw Error(ErrorKind::Solver,
                        "right-hand side is not orthogonal to the null space: moment " +
                            std::to_string(i) + " = " + std::to_string(m));
        }
    }
}

namespace {

/// BGK relaxation surrogate: L = nu0 (I - P) with the quadratic form chosen
/// so that L^{-1}{Gamma(f,g) + Gamma(g,f)} = (I - P){Pf Pg / sqrt(mu)} holds
/// exactly for hydrodynamic inputs.
class BgkOperator final : public CollisionOperator {
  public:
    BgkOperator(std::vector<Vec> null_basis, Vec weights, Vec sqrt_mu, int mode,
                const CollisionModel& model)
        : mode_(mode), nu0_(model.nu0) {
        require(nu0_ > 0.0, ErrorKind::Config, "relaxation rate must be positive");
        weights_ = std::move(weights);
        null_ = NullProjection::build(std::move(null_basis), weights_);
        sqrt_mu_ = std::move(sqrt_mu);
        nu_ = Vec::Constant(weights_.size(), nu0_);
        constant_nu_ = true;
        nu_lo_ = 0.0;  // fitted below
        nu_hi_ = nu0_;
        ortho_tol_ = 1e-8;
    }

    void fit_nu_bounds(const Vec& speed) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (Eigen::Index p = 0; p < speed.size(); ++p) {
            const double r = nu0_ / (1.0 + speed[p]);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        nu_lo_ = lo;
        nu_hi_ = hi;
    }

    Vec apply_L(const Vec& f) const override { return nu0_ * null_.complement(f); }

    Vec invert_L(const Vec& g) const override {
        check_orthogonal(g);
        return null_.complement(g) / nu0_;
    }

    Vec apply_Gamma(const Vec& f, const Vec& g) const override {
        require(mode_ != 1, ErrorKind::Solver,
                "bilinear form is not closed on the tangential mode space");
        Vec pf = null_.apply(f);
        Vec pg = null_.apply(g);
        Vec prod(pf.size());
        for (Eigen::Index p = 0; p < pf.size(); ++p) prod[p] = pf[p] * pg[p] / sqrt_mu_[p];
        return 0.5 * nu0_ * null_.complement(prod);
    }

  private:
    Vec sqrt_mu_;
    int mode_;  // -1 full grid, 0/1 reduced
    double nu0_;
};

}  // namespace

std::shared_ptr<const CollisionOperator> CollisionOperator::build(const VelocityGrid& grid,
                                                                  const CollisionModel& model) {
    if (model.kind == CollisionKind::HardSphere) return build_hard_sphere_full(grid, model);
    std::vector<Vec> basis(grid.chi().begin(), grid.chi().end());
    auto op = std::make_shared<BgkOperator>(std::move(basis), grid.weights(), grid.sqrt_mu(), -1,
                                            model);
    Vec speed(grid.size());
    for (Eigen::Index p = 0; p < grid.size(); ++p)
        speed[p] = std::sqrt(grid.v1()[p] * grid.v1()[p] + grid.v2()[p] * grid.v2()[p] +
                             grid.v3()[p] * grid.v3()[p]);
    op->fit_nu_bounds(speed);
    return op;
}

std::shared_ptr<const CollisionOperator> CollisionOperator::build_reduced(
    const AxisymGrid& grid, const GridSpec& parent, const CollisionModel& model) {
    if (model.kind == CollisionKind::HardSphere)
        return build_hard_sphere_reduced(grid, parent, model);
    auto op = std::make_shared<BgkOperator>(grid.null_profiles(), grid.weights(), grid.sqrt_mu(),
                                            grid.mode(), model);
    Vec speed = grid.speed2().cwiseSqrt();
    op->fit_nu_bounds(speed);
    return op;
}

}  // namespace kfl
