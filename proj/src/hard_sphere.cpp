#include "kfl/hard_sphere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kfl/error.hpp"

namespace kfl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Polynomial bases evaluated as functions on velocity space. The operator is
// assembled in one of these spans; fields on grids are coupled to it through
// the basis values at grid nodes.
// ---------------------------------------------------------------------------

class PolyBasis {
  public:
    enum class Kind { Tensor, Mode0, Mode1 };

    PolyBasis(Kind kind, int degree) : kind_(kind), degree_(degree) {
        require(degree >= 2, ErrorKind::Config, "operator basis degree must be at least 2");
        if (kind_ == Kind::Tensor) {
            for (int a = 0; a <= degree; ++a)
                for (int b = 0; a + b <= degree; ++b)
                    for (int c = 0; a + b + c <= degree; ++c) idx_.push_back({a, b, c});
        } else if (kind_ == Kind::Mode0) {
            for (int a = 0; a <= degree; ++a)
                for (int b = 0; a + 2 * b <= degree; ++b) idx_.push_back({a, b, 0});
        } else {
            for (int a = 0; a + 1 <= degree; ++a)
                for (int b = 0; a + 2 * b + 1 <= degree; ++b) idx_.push_back({a, b, 0});
        }
    }

    Kind kind() const { return kind_; }
    int degree() const { return degree_; }
    int count() const { return static_cast<int>(idx_.size()); }
    const std::vector<std::array<int, 3>>& triples() const { return idx_; }

    /// Values of every basis polynomial at a 3-D velocity point.
    void eval(double v1, double v2, double v3, double* out) const {
        if (kind_ == Kind::Tensor) {
            const int n = degree_ + 1;
            double h1[16], h2[16], h3[16];
            hermite_normalized(v1, degree_, std::span<double>(h1, static_cast<std::size_t>(n)));
            hermite_normalized(v2, degree_, std::span<double>(h2, static_cast<std::size_t>(n)));
            hermite_normalized(v3, degree_, std::span<double>(h3, static_cast<std::size_t>(n)));
            for (std::size_t k = 0; k < idx_.size(); ++k)
                out[k] = h1[idx_[k][0]] * h2[idx_[k][1]] * h3[idx_[k][2]];
            return;
        }
        const double t = 0.5 * (v1 * v1 + v2 * v2);
        eval_profile_impl(v3, t, kind_ == Kind::Mode1 ? v1 : 1.0, out);
    }

    /// Profile values for reduced grids: mode-0 value g(v3, rho); mode-1 the
    /// profile h with represented field v_i h.
    void eval_profile(double v3, double rho, double* out) const {
        require(kind_ != Kind::Tensor, ErrorKind::Solver,
                "profile evaluation is only defined for mode bases");
        eval_profile_impl(v3, 0.5 * rho * rho, 1.0, out);
    }

    /// Exact coefficient vectors of the null-space fields in this basis.
    std::vector<Vec> null_coefficients() const {
        const double r2h = std::sqrt(0.5);  // sqrt(2)/2
        std::vector<Vec> out;
        auto at = [&](int a, int b, int c) {
            for (std::size_t k = 0; k < idx_.size(); ++k)
                if (idx_[k][0] == a && idx_[k][1] == b && idx_[k][2] == c)
                    return static_cast<Eigen::Index>(k);
            throw Error(ErrorKind::Solver, "null coefficient outside the basis span");
        };
        auto unit = [&](std::initializer_list<std::pair<Eigen::Index, double>> entries) {
            Vec v = Vec::Zero(count());
            for (auto& [k, c] : entries) v[k] = c;
            return v;
        };
        if (kind_ == Kind::Tensor) {
            out.push_back(unit({{at(0, 0, 0), 1.0}}));
            out.push_back(unit({{at(1, 0, 0), 1.0}}));
            out.push_back(unit({{at(0, 1, 0), 1.0}}));
            out.push_back(unit({{at(0, 0, 1), 1.0}}));
            out.push_back(unit({{at(2, 0, 0), r2h}, {at(0, 2, 0), r2h}, {at(0, 0, 2), r2h}}));
        } else if (kind_ == Kind::Mode0) {
            out.push_back(unit({{at(0, 0, 0), 1.0}}));                       // chi_0
            out.push_back(unit({{at(1, 0, 0), 1.0}}));                       // chi_3
            out.push_back(unit({{at(2, 0, 0), r2h}, {at(0, 1, 0), -1.0}}));  // chi_4
        } else {
            out.push_back(unit({{at(0, 0, 0), 1.0}}));  // tangential chi
        }
        return out;
    }

  private:
    void eval_profile_impl(double v3, double t, double factor, double* out) const {
        const int n = degree_ + 1;
        double h3[16], lg[10];
        hermite_normalized(v3, degree_, std::span<double>(h3, static_cast<std::size_t>(n)));
        const int lmax = degree_ / 2;
        laguerre_normalized(t, kind_ == Kind::Mode1 ? 1.0 : 0.0, lmax,
                            std::span<double>(lg, static_cast<std::size_t>(lmax + 1)));
        for (std::size_t k = 0; k < idx_.size(); ++k)
            out[k] = factor * h3[idx_[k][0]] * lg[idx_[k][1]];
    }

    Kind kind_;
    int degree_;
    std::vector<std::array<int, 3>> idx_;
};

// ---------------------------------------------------------------------------
// Quadrature for the collision integral: tensor Gauss-Hermite in v and v_*,
// and a sphere rule with polar angle measured from the relative velocity so
// the |u . omega| kernel stays smooth (Gauss-Legendre in the polar angle,
// uniform in azimuth).
// ---------------------------------------------------------------------------

struct SphereRule {
    std::vector<double> cos_t, sin_t, wt;  // polar, on [0, pi/2], x2 symmetry
    std::vector<double> cos_p, sin_p;      // azimuth
    double wp = 0.0;
};

SphereRule make_sphere_rule(int n_polar, int n_azimuth) {
    SphereRule r;
    QuadRule1D gl = gauss_legendre(n_polar, 0.0, 1.5707963267948966);
    for (std::size_t i = 0; i < gl.size(); ++i) {
        r.cos_t.push_back(std::cos(gl.nodes[i]));
        r.sin_t.push_back(std::sin(gl.nodes[i]));
        // Surface element sin(theta); the omega -> -omega symmetry of the
        // integrand doubles the [0, pi/2] polar range.
        r.wt.push_back(2.0 * gl.weights[i] * r.sin_t.back());
    }
    for (int j = 0; j < n_azimuth; ++j) {
        const double psi = kTwoPi * j / n_azimuth;
        r.cos_p.push_back(std::cos(psi));
        r.sin_p.push_back(std::sin(psi));
    }
    r.wp = kTwoPi / n_azimuth;
    return r;
}

void orthonormal_frame(const double u[3], double e1[3], double e2[3]) {
    // Pick the axis least aligned with u to seed the frame.
    double a[3] = {0.0, 0.0, 0.0};
    const double ax = std::abs(u[0]), ay = std::abs(u[1]), az = std::abs(u[2]);
    if (ax <= ay && ax <= az)
        a[0] = 1.0;
    else if (ay <= az)
        a[1] = 1.0;
    else
        a[2] = 1.0;
    e1[0] = u[1] * a[2] - u[2] * a[1];
    e1[1] = u[2] * a[0] - u[0] * a[2];
    e1[2] = u[0] * a[1] - u[1] * a[0];
    const double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
    for (int i = 0; i < 3; ++i) e1[i] /= n1;
    e2[0] = u[1] * e1[2] - u[2] * e1[1];
    e2[1] = u[2] * e1[0] - u[0] * e1[2];
    e2[2] = u[0] * e1[1] - u[1] * e1[0];
    const double n2 = std::sqrt(e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]);
    for (int i = 0; i < 3; ++i) e2[i] /= n2;
}

struct AsmGrid {
    std::vector<std::array<double, 3>> node;
    std::vector<double> weight;  // Gauss-Hermite plain-dx triple product
    std::vector<double> mu;
};

AsmGrid make_asm_grid(int points_per_axis) {
    QuadRule1D gh = gauss_hermite_prob(points_per_axis);
    AsmGrid g;
    const int n = points_per_axis;
    g.node.reserve(static_cast<std::size_t>(n) * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                g.node.push_back({gh.nodes[static_cast<std::size_t>(i)],
                                  gh.nodes[static_cast<std::size_t>(j)],
                                  gh.nodes[static_cast<std::size_t>(k)]});
                g.weight.push_back(gh.weights[static_cast<std::size_t>(i)] *
                                   gh.weights[static_cast<std::size_t>(j)] *
                                   gh.weights[static_cast<std::size_t>(k)]);
                auto& v = g.node.back();
                g.mu.push_back(maxwellian(v[0], v[1], v[2]));
            }
    return g;
}

// ---------------------------------------------------------------------------
// Matrix cache (plain text, parameter-keyed). The Galerkin matrices are
// grid-independent, so the key only involves basis and quadrature settings.
// ---------------------------------------------------------------------------

std::string cache_file(const CollisionModel& model, const char* what, int degree, int mode) {
    char name[160];
    std::snprintf(name, sizeof(name), "hs_%s_deg%d_quad%d_ang%d_mode%d.txt", what, degree,
                  model.quad_points_axis, model.quad_points_angle, mode);
    return (std::filesystem::path(model.matrix_cache) / name).string();
}

bool load_matrix_table(const std::string& path, std::vector<Mat>& mats, Eigen::Index rows,
                       Eigen::Index cols, Eigen::Index count) {
    std::ifstream in(path);
    if (!in) return false;
    std::string magic;
    std::getline(in, magic);
    if (magic != "galerkin-table 1") return false;
    Eigen::Index r = 0, c = 0, n = 0;
    in >> n >> r >> c;
    if (n != count || r != rows || c != cols) return false;
    mats.assign(static_cast<std::size_t>(count), Mat(rows, cols));
    for (Eigen::Index m = 0; m < count; ++m)
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                if (!(in >> mats[static_cast<std::size_t>(m)](i, j))) return false;
    return true;
}

void store_matrix_table(const std::string& path, const std::vector<Mat>& mats) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Config,
            "cannot write operator cache file: " + path);
    out << "galerkin-table 1\n";
    out << mats.size() << ' ' << mats.front().rows() << ' ' << mats.front().cols() << '\n';
    char buf[32];
    for (const Mat& m : mats)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
                out << buf << (j + 1 == m.cols() ? '\n' : ' ');
            }
        }
}

// ---------------------------------------------------------------------------
// Galerkin assembly of  L_bc = -<Gamma(sqrt_mu, phi_b) + Gamma(phi_b, sqrt_mu), phi_c>
//                            =  integral  b(omega, u) mu mu_* x
//                               [P_b(v) + P_b(v_*) - P_b(v') - P_b(v_*')] P_c(v)
// over v, v_*, omega (the sign makes L positive semi-definite).
// ---------------------------------------------------------------------------

Mat assemble_L(const PolyBasis& basis, const CollisionModel& model) {
    const int nb = basis.count();
    const AsmGrid grid = make_asm_grid(model.quad_points_axis);
    const SphereRule sph = make_sphere_rule(model.quad_points_angle, model.quad_points_angle);
    const std::size_t nv = grid.node.size();

    // Basis values at every assembly node, reused across the pair loop.
    Mat pv(nb, static_cast<Eigen::Index>(nv));
    for (std::size_t i = 0; i < nv; ++i)
        basis.eval(grid.node[i][0], grid.node[i][1], grid.node[i][2],
                   pv.col(static_cast<Eigen::Index>(i)).data());

    Mat L = Mat::Zero(nb, nb);
    std::vector<double> acc(static_cast<std::size_t>(nb));
    std::vector<double> work(static_cast<std::size_t>(nb));
    Vec accv(nb);

    for (std::size_t i = 0; i < nv; ++i) {
        const auto& v = grid.node[i];
        const double wi = grid.weight[i] * grid.mu[i];
        for (std::size_t j = 0; j < nv; ++j) {
            const auto& vs = grid.node[j];
            const double u[3] = {vs[0] - v[0], vs[1] - v[1], vs[2] - v[2]};
            const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            if (r2 < 1e-24) continue;  // post-collision = pre-collision: no contribution
            const double r = std::sqrt(r2);
            double e1[3], e2[3];
            orthonormal_frame(u, e1, e2);

            // acc_b = int b(omega) [P_b(v) + P_b(v_*) - P_b(v') - P_b(v_*')] domega
            std::fill(acc.begin(), acc.end(), 0.0);
            double kernel_mass = 0.0;  // int b domega = 2 pi r
            for (std::size_t it = 0; it < sph.cos_t.size(); ++it) {
                const double c = sph.cos_t[it];
                const double s = sph.sin_t[it];
                const double wb_t = sph.wt[it] * r * c;  // kernel |u.omega| = r cos(theta)
                for (std::size_t ip = 0; ip < sph.cos_p.size(); ++ip) {
                    const double w = wb_t * sph.wp;
                    kernel_mass += w;
                    // q = (u . omega) omega
                    double om[3];
                    for (int d = 0; d < 3; ++d)
                        om[d] = c * u[d] / r + s * (sph.cos_p[ip] * e1[d] + sph.sin_p[ip] * e2[d]);
                    const double pr1 = v[0] + r * c * om[0];
                    const double pr2 = v[1] + r * c * om[1];
                    const double pr3 = v[2] + r * c * om[2];
                    basis.eval(pr1, pr2, pr3, work.data());
                    for (int b = 0; b < nb; ++b) acc[static_cast<std::size_t>(b)] -= w * work[static_cast<std::size_t>(b)];
                    basis.eval(vs[0] - r * c * om[0], vs[1] - r * c * om[1], vs[2] - r * c * om[2],
                               work.data());
                    for (int b = 0; b < nb; ++b) acc[static_cast<std::size_t>(b)] -= w * work[static_cast<std::size_t>(b)];
                }
            }
            for (int b = 0; b < nb; ++b)
                accv[b] = acc[static_cast<std::size_t>(b)] +
                          kernel_mass * (pv(b, static_cast<Eigen::Index>(i)) +
                                         pv(b, static_cast<Eigen::Index>(j)));

            const double scale = wi * grid.weight[j] * grid.mu[j];
            L.noalias() += (scale * accv) * pv.col(static_cast<Eigen::Index>(i)).transpose();
        }
    }
    return L;
}

/// Trilinear form tensor T[c](a,b) = <Gamma(phi_a, phi_b), phi_c>.
std::vector<Mat> assemble_Gamma(const PolyBasis& basis, const CollisionModel& model) {
    const int nb = basis.count();
    const AsmGrid grid = make_asm_grid(model.quad_points_axis);
    const SphereRule sph = make_sphere_rule(model.quad_points_angle, model.quad_points_angle);
    const std::size_t nv = grid.node.size();

    Mat pv(nb, static_cast<Eigen::Index>(nv));
    for (std::size_t i = 0; i < nv; ++i)
        basis.eval(grid.node[i][0], grid.node[i][1], grid.node[i][2],
                   pv.col(static_cast<Eigen::Index>(i)).data());

    std::vector<Mat> T(static_cast<std::size_t>(nb), Mat::Zero(nb, nb));
    Vec pa(nb), pb(nb);
    Mat gain(nb, nb);

    for (std::size_t i = 0; i < nv; ++i) {
        const auto& v = grid.node[i];
        const double wi = grid.weight[i] * grid.mu[i];
        for (std::size_t j = 0; j < nv; ++j) {
            const auto& vs = grid.node[j];
            const double u[3] = {vs[0] - v[0], vs[1] - v[1], vs[2] - v[2]};
            const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            if (r2 < 1e-24) continue;
            const double r = std::sqrt(r2);
            double e1[3], e2[3];
            orthonormal_frame(u, e1, e2);

            gain.setZero();
            double kernel_mass = 0.0;
            for (std::size_t it = 0; it < sph.cos_t.size(); ++it) {
                const double c = sph.cos_t[it];
                const double s = sph.sin_t[it];
                const double wb_t = sph.wt[it] * r * c;
                for (std::size_t ip = 0; ip < sph.cos_p.size(); ++ip) {
                    const double w = wb_t * sph.wp;
                    kernel_mass += w;
                    double om[3];
                    for (int d = 0; d < 3; ++d)
                        om[d] = c * u[d] / r + s * (sph.cos_p[ip] * e1[d] + sph.sin_p[ip] * e2[d]);
                    basis.eval(vs[0] - r * c * om[0], vs[1] - r * c * om[1], vs[2] - r * c * om[2],
                               pa.data());  // P_a(v_*')
                    basis.eval(v[0] + r * c * om[0], v[1] + r * c * om[1], v[2] + r * c * om[2],
                               pb.data());  // P_b(v')
                    gain.noalias() += (w * pa) * pb.transpose();
                }
            }
            // Loss: P_a(v_*) P_b(v) times the kernel mass.
            gain.noalias() -=
                (kernel_mass * pv.col(static_cast<Eigen::Index>(j))) *
                pv.col(static_cast<Eigen::Index>(i)).transpose();

            const double scale = wi * grid.weight[j] * grid.mu[j];
            for (int cidx = 0; cidx < nb; ++cidx)
                T[static_cast<std::size_t>(cidx)].noalias() +=
                    (scale * pv(cidx, static_cast<Eigen::Index>(i))) * gain;
        }
    }
    return T;
}

// ---------------------------------------------------------------------------
// Collision frequency by quadrature of its defining integral. The angular
// part of the kernel integrates exactly to 2 pi |v_* - v|, leaving a 3-D
// Maxwellian-weighted quadrature over v_*.
// ---------------------------------------------------------------------------

Vec collision_frequency_at(const std::vector<std::array<double, 3>>& points,
                           const CollisionModel& model) {
    const AsmGrid grid = make_asm_grid(model.quad_points_axis);
    Vec nu(static_cast<Eigen::Index>(points.size()));
    for (std::size_t p = 0; p < points.size(); ++p) {
        std::vector<double> terms(grid.node.size());
        for (std::size_t j = 0; j < grid.node.size(); ++j) {
            const auto& vs = grid.node[j];
            const double dx = vs[0] - points[p][0];
            const double dy = vs[1] - points[p][1];
            const double dz = vs[2] - points[p][2];
            terms[j] = grid.weight[j] * grid.mu[j] *
                       std::sqrt(dx * dx + dy * dy + dz * dz);
        }
        nu[static_cast<Eigen::Index>(p)] =
            kTwoPi * pairwise_sum(std::span<const double>(terms));
    }
    return nu;
}

// ---------------------------------------------------------------------------
// The operator
// ---------------------------------------------------------------------------

class HardSphereOperator final : public CollisionOperator {
  public:
    HardSphereOperator(const PolyBasis& basis, Mat phi, Vec weights, Vec nu, Vec sqrt_mu,
                       std::vector<Vec> null_basis, const CollisionModel& model, int mode)
        : basis_(basis), phi_(std::move(phi)), model_(model), mode_(mode) {
        weights_ = std::move(weights);
        nu_ = std::move(nu);
        sqrt_mu_ = std::move(sqrt_mu);
        constant_nu_ = false;
        null_ = NullProjection::build(std::move(null_basis), weights_);
        ortho_tol_ = 1e-8;
    }

    // Also fits the bounds nu(v)/(1+|v|) ∈ [lo, hi], so it must run before the
    // bounds are queried.
    void set_node_speeds(Vec s) {
        speed_ = std::move(s);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (Eigen::Index p = 0; p < nu_.size(); ++p) {
            const double ratio = nu_[p] / (1.0 + speed_at(p));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        nu_lo_ = lo;
        nu_hi_ = hi;
    }
    double speed_at(Eigen::Index p) const { return speed_.size() ? speed_[p] : 0.0; }

    void finish_assembly(Mat L_raw, HardSphereDiagnostics* diag) {
        const Eigen::Index nb = phi_.cols();
        // Symmetry defect is quadrature error; record it, then symmetrize.
        diag_.asymmetry_defect = (L_raw - L_raw.transpose()).cwiseAbs().maxCoeff();
        require(diag_.asymmetry_defect <= model_.kernel_tol, ErrorKind::Solver,
                "assembled operator asymmetry exceeds the kernel tolerance");
        Mat L = 0.5 * (L_raw + L_raw.transpose());

        // Exact null space: project out the conserved directions (their
        // coefficient vectors are orthonormalized under the identity Gram,
        // which is the basis inner product).
        std::vector<Vec> nc = basis_.null_coefficients();
        Mat N(nb, static_cast<Eigen::Index>(nc.size()));
        for (std::size_t k = 0; k < nc.size(); ++k) {
            Vec q = nc[k];
            for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(k); ++l)
                q -= N.col(l).dot(nc[k]) * N.col(l);
            N.col(static_cast<Eigen::Index>(k)) = q / q.norm();
        }
        double nd = 0.0;
        for (std::size_t k = 0; k < nc.size(); ++k)
            nd = std::max(nd, (L * nc[k]).cwiseAbs().maxCoeff());
        diag_.null_defect = nd;
        require(nd <= model_.kernel_tol, ErrorKind::Solver,
                "assembled operator does not annihilate the conserved moments");
        Mat P = Mat::Identity(nb, nb) - N * N.transpose();
        L = P * L * P;
        L_span_ = L;

        // Multiplication part on the target grid; K = N_nu - L reproduces the
        // Galerkin matrix exactly for in-span fields.
        Mat Nnu(nb, nb);
        {
            Mat wphi = phi_;  // w_i nu_i phi_i
            for (Eigen::Index i = 0; i < phi_.rows(); ++i)
                wphi.row(i) *= weights_[i] * nu_[i];
            Nnu = phi_.transpose() * wphi;
            Nnu = 0.5 * (Nnu + Nnu.transpose()).eval();
        }
        K_ = Nnu - L;

        // Spectral floor of L on span ∩ null-complement: coercivity evidence.
        Eigen::SelfAdjointEigenSolver<Mat> es(L);
        double floor = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < nb; ++k) {
            // Skip the null directions (eigenvalues pinned at zero).
            if (std::abs(es.eigenvalues()[k]) < 1e-12) continue;
            floor = std::min(floor, es.eigenvalues()[k]);
        }
        diag_.spectral_floor = floor;
        require(floor > 0.0, ErrorKind::Solver,
                "assembled operator is not coercive on the non-conserved span");
        diag_.basis_count = static_cast<int>(nb);
        if (diag) *diag = diag_;
    }

    void set_gamma(std::shared_ptr<const std::vector<Mat>> T, Mat phi_gamma,
                   std::shared_ptr<const PolyBasis> gbasis) {
        gamma_T_ = std::move(T);
        phi_gamma_ = std::move(phi_gamma);
        gamma_basis_ = std::move(gbasis);

        // The bilinear-form basis indices form a subset (not a prefix) of the
        // operator basis indices; build the embedding map.
        const auto& gt = gamma_basis_->triples();
        const auto& ot = basis_.triples();
        gamma_embed_.resize(gt.size());
        for (std::size_t k = 0; k < gt.size(); ++k) {
            const auto it = std::find(ot.begin(), ot.end(), gt[k]);
            require(it != ot.end(), ErrorKind::Config,
                    "bilinear-form basis is not contained in the operator basis");
            gamma_embed_[k] = static_cast<Eigen::Index>(it - ot.begin());
        }

        // Pseudo-inverse of the principal sub-block of the span operator on
        // the embedded subset.  Its kernel is exactly the conserved
        // directions: eigenvalue interlacing keeps every other eigenvalue at
        // or above the spectral floor of the full span operator.
        const Eigen::Index m = static_cast<Eigen::Index>(gt.size());
        Mat B(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                B(i, j) = L_span_(gamma_embed_[i], gamma_embed_[j]);
        Eigen::SelfAdjointEigenSolver<Mat> es(B);
        const double lam_max = es.eigenvalues().cwiseAbs().maxCoeff();
        Vec inv = Vec::Zero(m);
        for (Eigen::Index k = 0; k < m; ++k)
            if (es.eigenvalues()[k] > 1e-10 * lam_max) inv[k] = 1.0 / es.eigenvalues()[k];
        gamma_pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    }

    Vec apply_L(const Vec& f) const override {
        Vec g = null_.complement(f);
        Vec c = phi_.transpose() * weights_.cwiseProduct(g);
        Vec out = nu_.cwiseProduct(g) - phi_ * (K_ * c);
        return null_.complement(out);
    }

    Vec invert_L(const Vec& g) const override {
        check_orthogonal(g);
        Vec b = null_.complement(g);
        // Conjugate gradients on the self-adjoint positive operator, with the
        // pointwise collision frequency as preconditioner.
        Vec x = Vec::Zero(b.size());
        Vec r = b;
        Vec z = precond(r);
        Vec p = z;
        double rz = inner(r, z);
        const double bnorm = std::sqrt(inner(b, b));
        require(bnorm > 0.0, ErrorKind::Solver, "cannot invert the operator on a zero field");
        for (int it = 0; it < 400; ++it) {
            Vec Ap = apply_L(p);
            const double alpha = rz / inner(p, Ap);
            x += alpha * p;
            r -= alpha * Ap;
            if (std::sqrt(inner(r, r)) <= 1e-12 * bnorm) {
                return null_.complement(x);
            }
            z = precond(r);
            const double rz_new = inner(r, z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        throw Error(ErrorKind::Solver, "collision operator solve did not converge");
    }

    Vec apply_Gamma(const Vec& f, const Vec& g) const override {
        require(mode_ < 0, ErrorKind::Solver,
                "bilinear form of the assembled model is only available on the full grid");
        require(gamma_T_ != nullptr, ErrorKind::Solver,
                "bilinear form tensor was not assembled (set gamma_degree > 0)");
        const Vec a = phi_gamma_.transpose() * weights_.cwiseProduct(f);
        const Vec b = phi_gamma_.transpose() * weights_.cwiseProduct(g);
        const auto& T = *gamma_T_;
        Vec out_c(static_cast<Eigen::Index>(T.size()));
        for (std::size_t cidx = 0; cidx < T.size(); ++cidx)
            out_c[static_cast<Eigen::Index>(cidx)] = a.dot(T[cidx] * b);
        // Range-consistent reconstruction: solve in coefficient space for the
        // span field whose image under the operator has these projections,
        // then return that image.  The output lands exactly in the operator
        // range, so the conserved moments vanish identically and downstream
        // solves against it are self-consistent.
        const Vec h = gamma_pinv_ * out_c;
        Vec hc = Vec::Zero(phi_.cols());
        for (Eigen::Index k = 0; k < h.size(); ++k) hc[gamma_embed_[k]] = h[k];
        return apply_L(phi_ * hc);
    }

    const HardSphereDiagnostics& diagnostics() const { return diag_; }
    const Mat& scattering_matrix() const { return K_; }
    const Mat& basis_values() const { return phi_; }
    const PolyBasis& basis() const { return basis_; }

  private:
    Vec precond(const Vec& r) const { return null_.complement(r.cwiseQuotient(nu_)); }

    PolyBasis basis_;
    Mat phi_;  // basis values at target grid nodes (rows: nodes)
    Mat K_;
    Mat L_span_;  // processed span operator (symmetrized, conserved-sandwiched)
    CollisionModel model_;
    int mode_;
    Vec sqrt_mu_, speed_;
    HardSphereDiagnostics diag_;
    std::shared_ptr<const std::vector<Mat>> gamma_T_;
    Mat phi_gamma_;
    Mat gamma_pinv_;
    std::vector<Eigen::Index> gamma_embed_;
    std::shared_ptr<const PolyBasis> gamma_basis_;
};

Mat load_or_assemble_L(const PolyBasis& basis, const CollisionModel& model, int mode) {
    std::vector<Mat> mats;
    const bool caching = !model.matrix_cache.empty();
    const std::string path =
        caching ? cache_file(model, "L", basis.degree(), mode) : std::string();
    if (caching && load_matrix_table(path, mats, basis.count(), basis.count(), 1))
        return mats.front();
    require(!model.cache_only, ErrorKind::Config,
            "operator cache miss with assembly disabled: " +
                (caching ? path : std::string("(no cache directory)")));
    Mat L = assemble_L(basis, model);
    if (caching) store_matrix_table(path, {L});
    return L;
}

std::vector<Mat> load_or_assemble_Gamma(const PolyBasis& basis, const CollisionModel& model) {
    std::vector<Mat> mats;
    const bool caching = !model.matrix_cache.empty();
    const std::string path =
        caching ? cache_file(model, "T", basis.degree(), -1) : std::string();
    if (caching &&
        load_matrix_table(path, mats, basis.count(), basis.count(), basis.count()))
        return mats;
    require(!model.cache_only, ErrorKind::Config,
            "bilinear tensor cache miss with assembly disabled");
    mats = assemble_Gamma(basis, model);
    if (caching) store_matrix_table(path, mats);
    return mats;
}

}  // namespace

std::shared_ptr<const CollisionOperator> build_hard_sphere_full(const VelocityGrid& grid,
                                                                const CollisionModel& model) {
    require(grid.scheme() == GridScheme::TensorGauss, ErrorKind::Config,
            "the assembled collision model requires a Gauss velocity grid");
    PolyBasis basis(PolyBasis::Kind::Tensor, model.basis_degree);

    Mat phi(grid.size(), basis.count());
    std::vector<double> row(static_cast<std::size_t>(basis.count()));
    for (Eigen::Index p = 0; p < grid.size(); ++p) {
        basis.eval(grid.v1()[p], grid.v2()[p], grid.v3()[p], row.data());
        for (int b = 0; b < basis.count(); ++b) phi(p, b) = row[static_cast<std::size_t>(b)] * grid.sqrt_mu()[p];
    }

    std::vector<std::array<double, 3>> pts(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index p = 0; p < grid.size(); ++p)
        pts[static_cast<std::size_t>(p)] = {grid.v1()[p], grid.v2()[p], grid.v3()[p]};
    Vec nu = collision_frequency_at(pts, model);

    std::vector<Vec> null_basis(grid.chi().begin(), grid.chi().end());
    auto op = std::make_shared<HardSphereOperator>(basis, std::move(phi), grid.weights(),
                                                   std::move(nu), grid.sqrt_mu(),
                                                   std::move(null_basis), model, -1);
    Vec speed(grid.size());
    for (Eigen::Index p = 0; p < grid.size(); ++p)
        speed[p] = std::sqrt(grid.v1()[p] * grid.v1()[p] + grid.v2()[p] * grid.v2()[p] +
                             grid.v3()[p] * grid.v3()[p]);
    op->set_node_speeds(std::move(speed));
    op->finish_assembly(load_or_assemble_L(basis, model, -1), nullptr);

    if (model.gamma_degree > 0) {
        auto gbasis = std::make_shared<PolyBasis>(PolyBasis::Kind::Tensor, model.gamma_degree);
        Mat phig(grid.size(), gbasis->count());
        std::vector<double> grow(static_cast<std::size_t>(gbasis->count()));
        for (Eigen::Index p = 0; p < grid.size(); ++p) {
            gbasis->eval(grid.v1()[p], grid.v2()[p], grid.v3()[p], grow.data());
            for (int b = 0; b < gbasis->count(); ++b)
                phig(p, b) = grow[static_cast<std::size_t>(b)] * grid.sqrt_mu()[p];
        }
        auto T = std::make_shared<std::vector<Mat>>(load_or_assemble_Gamma(*gbasis, model));
        op->set_gamma(std::move(T), std::move(phig), std::move(gbasis));
    }
    return op;
}

std::shared_ptr<const CollisionOperator> build_hard_sphere_reduced(const AxisymGrid& grid,
                                                                   const GridSpec& parent,
                                                                   const CollisionModel& model) {
    require(parent.scheme == GridScheme::TensorGauss, ErrorKind::Config,
            "the assembled collision model requires a Gauss velocity grid");
    PolyBasis basis(grid.mode() == 0 ? PolyBasis::Kind::Mode0 : PolyBasis::Kind::Mode1,
                    model.basis_degree);

    Mat phi(grid.size(), basis.count());
    std::vector<double> row(static_cast<std::size_t>(basis.count()));
    for (Eigen::Index q = 0; q < grid.size(); ++q) {
        basis.eval_profile(grid.v3()[q], grid.vperp()[q], row.data());
        for (int b = 0; b < basis.count(); ++b)
            phi(q, b) = row[static_cast<std::size_t>(b)] * grid.sqrt_mu()[q];
    }

    std::vector<std::array<double, 3>> pts(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index q = 0; q < grid.size(); ++q)
        pts[static_cast<std::size_t>(q)] = {grid.vperp()[q], 0.0, grid.v3()[q]};
    Vec nu = collision_frequency_at(pts, model);

    auto op = std::make_shared<HardSphereOperator>(basis, std::move(phi), grid.weights(),
                                                   std::move(nu), grid.sqrt_mu(),
                                                   grid.null_profiles(), model, grid.mode());
    op->set_node_speeds(grid.speed2().cwiseSqrt());
    op->finish_assembly(load_or_assemble_L(basis, model, grid.mode()), nullptr);
    return op;
}

HardSphereDiagnostics hard_sphere_diagnostics(const CollisionOperator& op) {
    const auto* hs = dynamic_cast<const HardSphereOperator*>(&op);
    require(hs != nullptr, ErrorKind::Solver,
            "diagnostics are only recorded for the assembled model");
    return hs->diagnostics();
}

std::vector<KernelSample> sample_scattering_kernel(const CollisionOperator& op,
                                                   const VelocityGrid& grid, int count,
                                                   unsigned seed) {
    const auto* hs = dynamic_cast<const HardSphereOperator*>(&op);
    require(hs != nullptr, ErrorKind::Solver,
            "the scattering kernel is only defined for the assembled model");
    std::mt19937 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, grid.size() - 1);
    const Mat& K = hs->scattering_matrix();
    const Mat& phi = hs->basis_values();
    std::vector<KernelSample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const Eigen::Index i = pick(rng);
        const Eigen::Index j = pick(rng);
        const double dx = grid.v1()[i] - grid.v1()[j];
        const double dy = grid.v2()[i] - grid.v2()[j];
        const double dz = grid.v3()[i] - grid.v3()[j];
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (r < 1e-12) continue;
        const double s2i = grid.v1()[i] * grid.v1()[i] + grid.v2()[i] * grid.v2()[i] +
                           grid.v3()[i] * grid.v3()[i];
        const double s2j = grid.v1()[j] * grid.v1()[j] + grid.v2()[j] * grid.v2()[j] +
                           grid.v3()[j] * grid.v3()[j];
        KernelSample s;
        s.distance = r;
        s.value = std::abs(phi.row(i) * K * phi.row(j).transpose());
        const double d2 = (s2i - s2j) * (s2i - s2j) / (r * r);
        s.envelope = (r + 1.0 / r) * std::exp(-0.125 * r * r - 0.125 * d2);
        out.push_back(s);
    }
    return out;
}

}  // namespace kfl
