#ifndef BPL_SPECFUN_HPP
#define BPL_SPECFUN_HPP

#include <complex>
#include <vector>

namespace bpl::specfun {

using cplx = std::complex<double>;

/// Largest order accepted by any routine in this kernel.
inline constexpr int kMaxOrder = 128;

/// Value/derivative pair of a special function at one argument.
/// The derivative is taken with respect to the function's own argument z,
/// also for the imaginary-axis variants (d/dz at z = i x).
struct FunPair {
    cplx value;
    cplx derivative;
};

/// J_n, Y_n and their derivatives at real x > 0.
struct CylJY {
    double j;
    double y;
    double jp;
    double yp;
};

/// I_n, K_n and their derivatives at real x > 0.
struct CylIK {
    double i;
    double k;
    double ip;
    double kp;
};

/// Cylindrical Bessel functions of the first and second kind.
/// Negative orders use J_{-n} = (-1)^n J_n, Y_{-n} = (-1)^n Y_n.
CylJY cylinder_jy(int n, double x);

/// Modified cylindrical Bessel functions I_n, K_n.
CylIK cylinder_ik(int n, double x);

/// Hankel function of the first kind H_n^{(1)}(x) = J_n(x) + i Y_n(x).
FunPair cylinder_h1(int n, double x);

/// H_n^{(1)} evaluated on the positive imaginary axis: value H_n^{(1)}(ix)
/// and derivative d/dz H_n^{(1)}(z) at z = ix, both through K_n via
/// H_n^{(1)}(ix) = (2/pi) (-i)^{n+1} K_n(x).
FunPair cylinder_h1_imag(int n, double x);

/// Spherical Bessel function j_n(x) with derivative.
FunPair spherical_jn(int n, double x);

/// Spherical Hankel function h_n^{(1)}(x) = j_n(x) + i y_n(x) with derivative.
FunPair spherical_h1(int n, double x);

/// h_n^{(1)}(ix) and d/dz h_n^{(1)}(z) at z = ix. Uses the terminating
/// closed form h_n^{(1)}(ix) = -(-i)^n sqrt(2/(pi x)) K_{n+1/2}(x).
FunPair spherical_h1_imag(int n, double x);

/// Coefficients a_{nu,0..J} of the large-argument expansion
///   H_nu^{(1)}(z) ~ sqrt(2/(pi z)) e^{i(z - nu pi/2 - pi/4)} sum_j a_{nu,j} z^{-j},
/// a_{nu,0} = 1, a_{nu,j} = a_{nu,j-1} * (i/8) (4 nu^2 - (2j-1)^2) / j.
/// Half-integer nu gives the terminating spherical expansions.
std::vector<cplx> hankel_asymptotic_coeffs(double nu, int J);
std::vector<cplx> hankel_asymptotic_coeffs(int n, int J);

/// Legendre polynomials P_0..P_N at t in [-1, 1].
std::vector<double> legendre_all(int N, double t);

}  // namespace bpl::specfun

#endif
