#pragma once

/// Velocity-space discretization: full 3-D quadrature grids, the axisymmetric
/// (v3, v_perp) reduction used by the half-space solvers, and the global
/// Maxwellian / null-space fields everything else is built from.

#include <functional>
#include <string>
#include <vector>

#include "kfl/numerics.hpp"

namespace kfl {

/// Global Maxwellian mu(v) = (2 pi)^{-3/2} exp(-|v|^2/2).
double maxwellian(double v1, double v2, double v3);
double maxwellian_speed(double speed2);  // same, as a function of |v|^2

enum class GridScheme { TensorGauss, UniformTruncated };

struct GridSpec {
    GridScheme scheme = GridScheme::TensorGauss;
    int points_per_axis = 24;
    double cutoff = 6.0;  // used by the uniform scheme (per-axis bound)
};

/// Full 3-D velocity grid. Nodes are a tensor product of one symmetric axis
/// rule; weights are plain-dv weights (density folds already applied), so
/// integrate(f) approximates int f(v) dv.
class VelocityGrid {
  public:
    static VelocityGrid build(const GridSpec& spec);

    GridScheme scheme() const { return spec_.scheme; }
    const GridSpec& spec() const { return spec_; }
    int axis_count() const { return static_cast<int>(axis_nodes_.size()); }
    Eigen::Index size() const { return weights_.size(); }

    const std::vector<double>& axis_nodes() const { return axis_nodes_; }
    // Node components, each a velocity-length vector.
    const Vec& v1() const { return v_[0]; }
    const Vec& v2() const { return v_[1]; }
    const Vec& v3() const { return v_[2]; }
    const Vec& weights() const { return weights_; }
    const Vec& mu() const { return mu_; }
    const Vec& sqrt_mu() const { return sqrt_mu_; }

    /// |e_quad(mu) - 1| based declared quadrature tolerance.
    double mu_quadrature_tol() const { return mu_tol_; }

    /// Deterministic quadrature of a velocity field.
    double integrate(const Vec& f) const;
    /// <f, g> = int f g dv with deterministic summation.
    double inner(const Vec& f, const Vec& g) const;
    /// int f g h dv (used for weighted moments).
    double inner3(const Vec& f, const Vec& g, const Vec& h) const;

    /// Evaluate a callable on all nodes.
    Vec sample(const std::function<double(double, double, double)>& fn) const;

    /// Index of the node with v3 negated (exact; the axis rule is symmetric).
    const std::vector<Eigen::Index>& specular_map() const { return specular_; }

    /// Null-space fields chi_0..chi_4 = {1, v1, v2, v3, (|v|^2-3)/2} sqrt(mu).
    const std::array<Vec, 5>& chi() const { return chi_; }

    /// One node per line: v1 v2 v3 weight.
    std::string to_table() const;

  private:
    GridSpec spec_;
    std::vector<double> axis_nodes_;
    std::array<Vec, 3> v_;
    Vec weights_, mu_, sqrt_mu_;
    std::array<Vec, 5> chi_;
    std::vector<Eigen::Index> specular_;
    double mu_tol_ = 0.0;
};

/// Axisymmetric reduction. A mode-0 field is a function g(v3, v_perp)
/// standing for itself on the full space; a mode-1 field h stands for
/// v1 * h(v3, v_perp) (equivalently v2 * h). Weights integrate the full 3-D
/// measure for the mode:
///   mode 0:  sum w g   ~ int g dv
///   mode 1:  sum w h^2-type moments carry the v1^2 angular factor.
class AxisymGrid {
  public:
    static AxisymGrid build(const GridSpec& parent_spec, int mode, int n_perp = 0);

    int mode() const { return mode_; }
    Eigen::Index size() const { return weights_.size(); }
    int n_v3() const { return static_cast<int>(v3_nodes_.size()); }
    int n_perp() const { return static_cast<int>(vperp_nodes_.size()); }
    Eigen::Index index(int i3, int ip) const {
        return static_cast<Eigen::Index>(i3) * n_perp() + ip;
    }

    const std::vector<double>& v3_nodes() const { return v3_nodes_; }
    const std::vector<double>& vperp_nodes() const { return vperp_nodes_; }
    const Vec& v3() const { return v3_; }            // per node
    const Vec& vperp() const { return vperp_; }      // per node
    const Vec& speed2() const { return speed2_; }    // |v|^2 per node
    const Vec& weights() const { return weights_; }  // mode measure
    const Vec& sqrt_mu() const { return sqrt_mu_; }

    double integrate(const Vec& f) const;
    double inner(const Vec& f, const Vec& g) const;

    Vec sample(const std::function<double(double, double)>& fn_v3_vperp) const;

    /// Index with v3 negated.
    const std::vector<Eigen::Index>& specular_map() const { return specular_; }

    /// Lift a callable g(v3, v_perp) onto a full grid (mode-0 meaning), or
    /// v_i * g for mode 1 with tangential axis i in {1,2}.
    Vec lift(const VelocityGrid& full, const std::function<double(double, double)>& fn,
             int tangential_axis = 1) const;

    /// Lift sampled node data onto a full grid by barycentric interpolation
    /// in v_perp (the v3 axis nodes match the parent's by construction).
    Vec lift_data(const VelocityGrid& full, const Vec& data, int tangential_axis = 1) const;

    /// Null-space profiles present in this mode:
    /// mode 0: {chi0, chi3, chi4} reduced profiles; mode 1: {sqrt_mu}.
    const std::vector<Vec>& null_profiles() const { return null_profiles_; }

  private:
    int mode_ = 0;
    std::vector<double> v3_nodes_, vperp_nodes_;
    Vec v3_, vperp_, speed2_, weights_, sqrt_mu_;
    std::vector<Eigen::Index> specular_;
    std::vector<Vec> null_profiles_;
    BarycentricInterp perp_interp_;
};

/// A field sampled on (space node, velocity node), tagged with the grid that
/// gives the velocity axis its meaning.
struct KineticField {
    std::vector<Eigen::Index> space_shape;
    Mat values;  // rows: space nodes, cols: velocity nodes
    std::string grid_ref;
};

}  // namespace kfl
