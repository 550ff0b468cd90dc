#include "bpl/propagation.hpp"

#include "bpl/errors.hpp"
#include "bpl/specfun.hpp"

#include <cmath>

namespace bpl::propagation {

namespace sf = bpl::specfun;
using bpl::forward::dot;
using bpl::forward::norm;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

cplx kappa_of(Branch b, double k) {
    return (b == Branch::Helmholtz) ? cplx(k, 0.0) : cplx(0.0, k);
}

cplx gamma_m(int m, Branch b, double k) {
    if (m == 3) return cplx(1.0 / (4.0 * kPi), 0.0);
    double s = 1.0 / std::sqrt(8.0 * k * kPi);
    if (b == Branch::Helmholtz) return std::exp(cplx(0.0, kPi / 4.0)) * s;
    return cplx(s, 0.0);
}

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

// J_0, J_1 at kappa*xi where xi >= 0 real: real argument on the Helmholtz
// branch, J(i xi) = (I_0, i I_1) on the modified branch.
void bessel_j01_branch(Branch b, double arg, cplx& j0, cplx& j1) {
    if (arg < 1e-14) {
        j0 = 1.0;
        j1 = arg / 2.0 * ((b == Branch::Modified) ? cplx(0.0, 1.0) : cplx(1.0, 0.0));
        return;
    }
    if (b == Branch::Helmholtz) {
        j0 = sf::cylinder_jy(0, arg).j;
        j1 = sf::cylinder_jy(1, arg).j;
    } else {
        auto ik0 = sf::cylinder_ik(0, arg);
        auto ik1 = sf::cylinder_ik(1, arg);
        j0 = ik0.i;
        j1 = cplx(0.0, ik1.i);
    }
}

// one far-field row entry for a 2D node
cplx ff_entry_2d(Branch b, double k, double eta, const Vec& xhat, const Vec& y,
                 const Vec& nu, double w) {
    cplx kap = kappa_of(b, k);
    cplx g = gamma_m(2, b, k);
    cplx e = std::exp(-cplx(0.0, 1.0) * kap * dot(2, xhat, y));
    double xn = dot(2, xhat, nu);
    return g * (-cplx(0.0, 1.0) * kap * xn - cplx(0.0, eta)) * e * w;
}

// one far-field row entry for a 3D ring (azimuthal integral analytic)
cplx ff_entry_3d(Branch b, double k, double eta, double cbeta, double R0,
                 double cth, double w) {
    cplx kap = kappa_of(b, k);
    cplx g = gamma_m(3, b, k);
    double sbeta = std::sqrt(std::max(0.0, 1.0 - cbeta * cbeta));
    double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
    // e^{-i kap xhat.y} = e^{-iA} e^{-i zeta cos phi}, A = kap R0 cbeta cth,
    // zeta = kap R0 sbeta sth; ring means give J_0(zeta) and -i J_1(zeta).
    double xi = k * R0 * sbeta * sth;  // |zeta| along the branch axis
    cplx j0, j1;
    bessel_j01_branch(b, xi, j0, j1);
    cplx eA = std::exp(-cplx(0.0, 1.0) * kap * R0 * cbeta * cth);
    cplx spart = eA * j0;
    cplx kpart = -cplx(0.0, 1.0) * kap * eA *
                 (cbeta * cth * j0 - cplx(0.0, 1.0) * sbeta * sth * j1);
    return g * (kpart - cplx(0.0, eta) * spart) * w;
}

// fundamental solution and its nu(y)-derivative at distance r, direction
// factor c = ((y-x).nu)/r
void kernel_pair(int m, Branch b, double k, double r, cplx& phi, cplx& dphi_dr) {
    if (m == 2) {
        if (b == Branch::Helmholtz) {
            auto h0 = sf::cylinder_h1(0, k * r);
            auto h1 = sf::cylinder_h1(1, k * r);
            phi = cplx(0.0, 0.25) * h0.value;
            dphi_dr = -cplx(0.0, 0.25) * k * h1.value;
        } else {
            auto h0 = sf::cylinder_h1_imag(0, k * r);
            auto h1 = sf::cylinder_h1_imag(1, k * r);
            phi = cplx(0.0, 0.25) * h0.value;
            dphi_dr = -cplx(0.0, 0.25) * cplx(0.0, k) * h1.value;
        }
    } else {
        cplx kap = kappa_of(b, k);
        cplx e = std::exp(cplx(0.0, 1.0) * kap * r);
        phi = e / (4.0 * kPi * r);
        dphi_dr = e * (cplx(0.0, 1.0) * kap * r - 1.0) / (4.0 * kPi * r * r);
    }
}

}  // namespace

BoundaryGrid BoundaryGrid::circle(double R0, int count) {
    if (!(R0 > 0.0) || count < 4) throw DomainError("BoundaryGrid::circle: bad parameters");
    BoundaryGrid g;
    g.m = 2;
    g.R0 = R0;
    double w = 2.0 * kPi * R0 / count;
    for (int q = 0; q < count; ++q) {
        double th = 2.0 * kPi * q / count;
        g.nodes.push_back({R0 * std::cos(th), R0 * std::sin(th), 0.0});
        g.normals.push_back({std::cos(th), std::sin(th), 0.0});
        g.weights.push_back(w);
    }
    return g;
}

BoundaryGrid BoundaryGrid::sphere(double R0, int polar_count) {
    if (!(R0 > 0.0) || polar_count < 4) throw DomainError("BoundaryGrid::sphere: bad parameters");
    BoundaryGrid g;
    g.m = 3;
    g.R0 = R0;
    std::vector<double> x, w;
    gauss_legendre(polar_count, x, w);
    for (int q = 0; q < polar_count; ++q) {
        double cth = x[q];
        double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
        g.nodes.push_back({R0 * sth, 0.0, R0 * cth});
        g.normals.push_back({sth, 0.0, cth});
        g.weights.push_back(2.0 * kPi * R0 * R0 * w[q]);
        g.polar_cos.push_back(cth);
    }
    return g;
}

ApertureSet ApertureSet::make(int m, int count, const Vec& d, Exclusion excl, double delta) {
    ApertureSet ap;
    ap.m = m;
    if (m == 2) {
        double d0 = std::atan2(d[1], d[0]);
        for (int p = 0; p < count; ++p) {
            double th = d0 + 2.0 * kPi * p / count;
            Vec x = {std::cos(th), std::sin(th), 0.0};
            double c = dot(2, x, d);
            if (excl == Exclusion::CapAroundD && std::sqrt(std::max(0.0, 2.0 - 2.0 * c)) <= delta) continue;
            if (excl == Exclusion::BandPerpD && std::abs(c) <= delta) continue;
            ap.dirs.push_back(x);
        }
    } else {
        std::vector<double> x, w;
        gauss_legendre(count, x, w);
        // directions in the plane spanned by d and a unit vector orthogonal to d
        Vec e1;
        if (std::abs(d[0]) < 0.9) {
            e1 = {0.0, 0.0, 0.0};
            e1[0] = 1.0;
        } else {
            e1 = {0.0, 1.0, 0.0};
        }
        double pr = dot(3, e1, d);
        for (int i = 0; i < 3; ++i) e1[i] -= pr * d[i];
        e1 = bpl::forward::normalized(3, e1);
        for (int p = 0; p < count; ++p) {
            double c = x[p];
            double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            Vec xh = {c * d[0] + s * e1[0], c * d[1] + s * e1[1], c * d[2] + s * e1[2]};
            if (excl == Exclusion::CapAroundD && std::sqrt(std::max(0.0, 2.0 - 2.0 * c)) <= delta) continue;
            if (excl == Exclusion::BandPerpD && std::abs(c) <= delta) continue;
            ap.dirs.push_back(xh);
        }
    }
    return ap;
}

Eigen::MatrixXcd farfield_matrix(Branch branch, double k, const BoundaryGrid& grid,
                                 double eta, const ApertureSet& aperture) {
    if (eta == 0.0) throw DomainError("farfield_matrix: eta must be nonzero");
    if (aperture.m != grid.m) throw DomainError("farfield_matrix: dimension mismatch");
    const int P = (int)aperture.dirs.size();
    const int Q = (int)grid.nodes.size();
    Eigen::MatrixXcd A(P, Q);
    for (int p = 0; p < P; ++p) {
        for (int q = 0; q < Q; ++q) {
            if (grid.m == 2) {
                A(p, q) = ff_entry_2d(branch, k, eta, aperture.dirs[p], grid.nodes[q],
                                      grid.normals[q], grid.weights[q]);
            } else {
                // ring axis is z; direction enters through its polar cosine
                double cbeta = aperture.dirs[p][2];
                A(p, q) = ff_entry_3d(branch, k, eta, cbeta, grid.R0,
                                      grid.polar_cos[q], grid.weights[q]);
            }
        }
    }
    return A;
}

Eigen::VectorXcd tikhonov_solve(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b,
                                double alpha) {
    if (!(alpha > 0.0)) throw DomainError("tikhonov_solve: alpha must be positive");
    const int Q = (int)A.cols();
    Eigen::MatrixXcd N = A.adjoint() * A;
    N.diagonal().array() += alpha;
    Eigen::VectorXcd rhs = A.adjoint() * b;
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(N);
    if (ldlt.info() != Eigen::Success) {
        throw IllConditioned("tikhonov normal equations failed to factor");
    }
    Eigen::VectorXcd phi = ldlt.solve(rhs);
    if (!phi.allFinite()) throw IllConditioned("tikhonov solution is not finite");
    (void)Q;
    return phi;
}

AlphaChoice choose_alpha(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b, double eps) {
    if (eps < 0.0) throw DomainError("choose_alpha: eps must be nonnegative");
    double nb = b.norm();
    double tol = std::max(1.1 * eps * nb, 1e-12);
    double last_res = 0.0;
    for (double alpha = 1e-2; alpha > 0.99e-12; alpha *= 0.1) {
        Eigen::VectorXcd phi = tikhonov_solve(A, b, alpha);
        last_res = (A * phi - b).norm();
        if (last_res <= tol) return {alpha, last_res, false};
    }
    // no grid point met the tolerance; data consistent to numerical
    // precision settles at the deep end, anything else is flagged
    if (last_res <= 1e-6 * nb) return {1e-12, last_res, false};
    Eigen::VectorXcd phi = tikhonov_solve(A, b, 1e-8);
    return {1e-8, (A * phi - b).norm(), true};
}

cplx eval_potential(const BoundaryDensity& density, const Vec& x) {
    const BoundaryGrid& g = *density.grid;
    double r = norm(g.m, x);
    if (!(r > g.R0)) throw DomainError("eval_potential: point must lie outside the grid surface");
    cplx total = 0.0;
    if (g.m == 2) {
        for (int q = 0; q < (int)g.nodes.size(); ++q) {
            Vec diff = {x[0] - g.nodes[q][0], x[1] - g.nodes[q][1], 0.0};
            double rr = norm(2, diff);
            cplx phi, dphidr;
            kernel_pair(2, density.branch, density.k, rr, phi, dphidr);
            double c = (-diff[0] * g.normals[q][0] - diff[1] * g.normals[q][1]) / rr;
            total += (dphidr * c - cplx(0.0, density.eta) * phi) * density.phi[q] * g.weights[q];
        }
    } else {
        const int ntrap = 64;
        for (int q = 0; q < (int)g.nodes.size(); ++q) {
            double cth = g.polar_cos[q];
            double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
            cplx ring = 0.0;
            for (int i = 0; i < ntrap; ++i) {
                double phi_az = 2.0 * kPi * i / ntrap;
                Vec y = {g.R0 * sth * std::cos(phi_az), g.R0 * sth * std::sin(phi_az), g.R0 * cth};
                Vec nu = {sth * std::cos(phi_az), sth * std::sin(phi_az), cth};
                Vec diff = {x[0] - y[0], x[1] - y[1], x[2] - y[2]};
                double rr = norm(3, diff);
                cplx phi, dphidr;
                kernel_pair(3, density.branch, density.k, rr, phi, dphidr);
                double c = (-diff[0] * nu[0] - diff[1] * nu[1] - diff[2] * nu[2]) / rr;
                ring += dphidr * c - cplx(0.0, density.eta) * phi;
            }
            total += ring / (double)ntrap * density.phi[q] * g.weights[q];
        }
    }
    return total;
}

cplx potential_far_field(const BoundaryDensity& density, const Vec& xhat) {
    const BoundaryGrid& g = *density.grid;
    cplx total = 0.0;
    for (int q = 0; q < (int)g.nodes.size(); ++q) {
        if (g.m == 2) {
            total += ff_entry_2d(density.branch, density.k, density.eta, xhat,
                                 g.nodes[q], g.normals[q], g.weights[q]) * density.phi[q];
        } else {
            total += ff_entry_3d(density.branch, density.k, density.eta, xhat[2],
                                 g.R0, g.polar_cos[q], g.weights[q]) * density.phi[q];
        }
    }
    return total;
}

Reconstruction reconstruct_field(Branch branch, double k, const ApertureSet& aperture,
                                 const std::vector<cplx>& farfield_values,
                                 const BoundaryGrid& grid, double eta, double eps) {
    if (farfield_values.size() != aperture.dirs.size()) {
        throw DomainError("reconstruct_field: values/directions size mismatch");
    }
    Eigen::MatrixXcd A = farfield_matrix(branch, k, grid, eta, aperture);
    Eigen::VectorXcd b(farfield_values.size());
    for (int i = 0; i < (int)farfield_values.size(); ++i) b[i] = farfield_values[i];
    AlphaChoice ac = choose_alpha(A, b, eps);
    Reconstruction rec;
    rec.alpha = ac;
    rec.density.grid = std::make_shared<BoundaryGrid>(grid);
    rec.density.phi = tikhonov_solve(A, b, ac.alpha);
    rec.density.branch = branch;
    rec.density.k = k;
    rec.density.eta = eta;
    return rec;
}

}  // namespace bpl::propagation
