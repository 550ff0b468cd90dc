#ifndef BPL_PROPAGATION_HPP
#define BPL_PROPAGATION_HPP

#include "bpl/forward.hpp"

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <vector>

namespace bpl::propagation {

using cplx = std::complex<double>;
using bpl::forward::Vec;

/// Wavenumber branch of the layer kernels: kappa = k or kappa = ik.
enum class Branch { Helmholtz, Modified };

/// Quadrature grid on the auxiliary curve/surface: circle of radius R0
/// (equispaced nodes, trapezoid weights) or sphere (Gauss-Legendre rings
/// in the polar angle; nodes are ring representatives at azimuth 0 and
/// the azimuthal integral is folded into the kernels analytically).
struct BoundaryGrid {
    int m = 2;
    double R0 = 1.5;
    std::vector<Vec> nodes;
    std::vector<Vec> normals;
    std::vector<double> weights;      // sum = |dOmega|
    std::vector<double> polar_cos;    // 3D only: cos(theta_q) of each ring

    static BoundaryGrid circle(double R0, int count);
    static BoundaryGrid sphere(double R0, int polar_count);
};

/// Observation directions, optionally with an exclusion.
struct ApertureSet {
    int m = 2;
    std::vector<Vec> dirs;

    enum class Exclusion { None, CapAroundD, BandPerpD };
    /// 2D: count equispaced directions on the circle. 3D: Gauss-Legendre
    /// nodes in the polar angle relative to d.
    static ApertureSet make(int m, int count, const Vec& d,
                            Exclusion excl = Exclusion::None, double delta = 0.0);
};

/// Complex density on the grid with its kernel branch and coupling.
struct BoundaryDensity {
    std::shared_ptr<const BoundaryGrid> grid;
    Eigen::VectorXcd phi;
    Branch branch = Branch::Helmholtz;
    double k = 1.0;
    double eta = 1.0;
};

/// Far-field operator of the combined layer (K - i eta S):
/// A_pq = gamma_m(kappa) [ d/dnu(y_q) e^{-i kappa x_p.y} - i eta e^{-i kappa x_p.y_q} ] w_q.
Eigen::MatrixXcd farfield_matrix(Branch branch, double k, const BoundaryGrid& grid,
                                 double eta, const ApertureSet& aperture);

/// Tikhonov-regularized solve of A phi = b: (alpha I + A^H A) phi = A^H b.
Eigen::VectorXcd tikhonov_solve(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b,
                                double alpha);

/// Morozov-style discrepancy choice on the geometric grid 1e-2..1e-12:
/// walking from the largest alpha, the first with
/// ||A phi - b|| <= max(1.1 eps ||b||, 1e-12) is returned.
struct AlphaChoice {
    double alpha = 1e-8;
    double residual = 0.0;
    bool fallback = false;
};
AlphaChoice choose_alpha(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b, double eps);

/// Combined-layer potential of the density at an exterior point |x| > R0.
cplx eval_potential(const BoundaryDensity& density, const Vec& x);

/// Far-field pattern of the density's potential in direction xhat
/// (one row of the far-field operator applied to phi).
cplx potential_far_field(const BoundaryDensity& density, const Vec& xhat);

/// Full reconstruction: far-field samples on an aperture -> exterior field.
struct Reconstruction {
    BoundaryDensity density;
    AlphaChoice alpha;

    cplx operator()(const Vec& x) const { return eval_potential(density, x); }
};

Reconstruction reconstruct_field(Branch branch, double k, const ApertureSet& aperture,
                                 const std::vector<cplx>& farfield_values,
                                 const BoundaryGrid& grid, double eta, double eps);

}  // namespace bpl::propagation

#endif
