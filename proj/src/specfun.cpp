#include "bpl/specfun.hpp"

#include "bpl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bpl::specfun {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kEulerGamma = 0.577215664901532860606512090082402431;

void check_args(int n, double x) {
    if (!(x > 0.0)) {
        throw DomainError("specfun: argument must be positive, got x=" + std::to_string(x));
    }
    if (std::abs(n) > kMaxOrder) {
        throw DomainError("specfun: order |n| exceeds " + std::to_string(kMaxOrder));
    }
}

struct Seed01 {
    double f0 = 0.0;  // order-0 value
    double f1 = 0.0;  // order-1 value
};

// Power series seeds on long double. The alternating J/Y series lose
// ~log10(I_0(x)) digits to cancellation; extended precision keeps the
// result below 1e-14 relative up to the x=17 switchover.
void jy01_series(double xd, Seed01& J, Seed01& Y) {
    const long double g = (long double)kEulerGamma;
    long double x = xd, q = x * x / 4.0L;
    // order 0: term = (-q)^m/(m!)^2, Y0 companion sum is -h_m * term
    long double j0 = 1.0L, y0s = 0.0L, term = 1.0L, h = 0.0L;
    for (int m = 1; m < 200; ++m) {
        term *= -q / ((long double)m * m);
        h += 1.0L / m;
        j0 += term;
        y0s -= h * term;
        if (std::abs((double)term) < 1e-25) break;
    }
    // order 1: term = (-q)^m/(m!(m+1)!), companion weight h_m + h_{m+1} - 2g
    long double s1 = 1.0L, s1y = 1.0L - 2.0L * g;
    term = 1.0L;
    h = 0.0L;
    for (int m = 1; m < 200; ++m) {
        term *= -q / ((long double)m * (m + 1));
        h += 1.0L / m;
        s1 += term;
        s1y += term * (2.0L * h + 1.0L / (m + 1) - 2.0L * g);
        if (std::abs((double)term) < 1e-25) break;
    }
    long double lg = std::log(x / 2.0L);
    J.f0 = (double)j0;
    J.f1 = (double)(x / 2.0L * s1);
    Y.f0 = (double)(2.0L / kPi * ((lg + g) * j0 + y0s));
    Y.f1 = (double)(-2.0L / (kPi * x) + 2.0L / kPi * lg * (x / 2.0L * s1) - x / (2.0L * kPi) * s1y);
}

// Large-argument Hankel expansion, summed to the smallest term.
// Good to ~1e-15 for nu <= 1 once x >= 17.
void jy01_asymptotic(double x, Seed01& J, Seed01& Y) {
    for (int nu = 0; nu <= 1; ++nu) {
        cplx s = 1.0, a = 1.0;
        double last = 1.0;
        for (int j = 1; j < 80; ++j) {
            a *= cplx(0.0, 1.0 / 8.0) * (4.0 * nu * nu - (2.0 * j - 1.0) * (2.0 * j - 1.0)) / (double)j;
            double mag = std::abs(a) / std::pow(x, j);
            if (mag >= last) break;
            s += a / std::pow(x, j);
            last = mag;
        }
        double omega = x - nu * kPi / 2.0 - kPi / 4.0;
        cplx h = std::sqrt(2.0 / (kPi * x)) * std::exp(cplx(0.0, omega)) * s;
        if (nu == 0) {
            J.f0 = h.real();
            Y.f0 = h.imag();
        } else {
            J.f1 = h.real();
            Y.f1 = h.imag();
        }
    }
}

void jy01(double x, Seed01& J, Seed01& Y) {
    if (x < 17.0) {
        jy01_series(x, J, Y);
    } else {
        jy01_asymptotic(x, J, Y);
    }
}

void ik01_series(double xd, Seed01& I, Seed01& K) {
    long double x = xd, q = x * x / 4.0L;
    long double i0 = 1.0L, i1s = 1.0L, k0s = 0.0L, k1s = 1.0L - 2.0L * (long double)kEulerGamma;
    long double t0 = 1.0L, t1 = 1.0L, h = 0.0L;
    for (int m = 1; m < 200; ++m) {
        t0 *= q / ((long double)m * m);
        t1 *= q / ((long double)m * (m + 1));
        h += 1.0L / m;
        i0 += t0;
        i1s += t1;
        k0s += h * t0;
        k1s += t1 * (2.0L * h + 1.0L / (m + 1) - 2.0L * (long double)kEulerGamma);
        if ((double)t0 < 1e-20 * (double)i0) break;
    }
    long double lg = std::log(x / 2.0L);
    I.f0 = (double)i0;
    I.f1 = (double)(x / 2.0L * i1s);
    K.f0 = (double)(-(lg + (long double)kEulerGamma) * i0 + k0s);
    K.f1 = (double)(1.0L / x + lg * (x / 2.0L * i1s) - x / 4.0L * k1s);
}

// Steed continued fraction for K_0, K_1 at x > 2 (Thompson-Barnett).
void k01_cf2(double x, double& k0, double& k1) {
    const double eps = 1e-17;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= 30000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (a * d + b);
        delh = (b * d - 1.0) * delh;
        h += delh;
        double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) break;
    }
    h = a1 * h;
    k0 = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
    k1 = k0 * (x + 0.5 - h) / x;
}

void i01_asymptotic(double x, Seed01& I) {
    for (int nu = 0; nu <= 1; ++nu) {
        double s = 1.0, a = 1.0, last = 1.0;
        for (int j = 1; j < 80; ++j) {
            a *= -(4.0 * nu * nu - (2.0 * j - 1.0) * (2.0 * j - 1.0)) / (8.0 * j);
            double mag = std::abs(a) / std::pow(x, j);
            if (mag >= last) break;
            s += a / std::pow(x, j);
            last = mag;
        }
        double v = std::exp(x) / std::sqrt(2.0 * kPi * x) * s;
        (nu == 0 ? I.f0 : I.f1) = v;
    }
}

// I series has positive terms only, usable at any x below overflow; the K
// log-series cancels catastrophically past x ~ 2, so K switches to CF2 there.
void i01_series(double x, Seed01& I) {
    double q = x * x / 4.0;
    double i0 = 1.0, i1s = 1.0, t0 = 1.0, t1 = 1.0;
    for (int m = 1; m < 400; ++m) {
        t0 *= q / ((double)m * m);
        t1 *= q / ((double)m * (m + 1));
        i0 += t0;
        i1s += t1;
        if (t0 < 1e-18 * i0) break;
    }
    I.f0 = i0;
    I.f1 = x / 2.0 * i1s;
}

void ik01(double x, Seed01& I, Seed01& K) {
    if (x <= 2.0) {
        ik01_series(x, I, K);
    } else {
        k01_cf2(x, K.f0, K.f1);
        if (x <= 20.0) {
            i01_series(x, I);
        } else {
            i01_asymptotic(x, I);
        }
    }
}

// I_m/I_{m-1} by downward continued-fraction ratios; the start order must
// exceed both the target order and x so the seed error has decayed below
// machine precision by order n.
std::vector<double> bessel_i_ratios(int top, double x) {
    int M = top + 16 + (int)(2.0 * std::sqrt((double)std::max(top, 1)));
    if ((double)M < x + 16.0) M = (int)(x + 16.0);
    std::vector<double> s(M + 2, 0.0);
    for (int m = M; m >= 1; --m) {
        s[m] = 1.0 / (2.0 * m / x + s[m + 1]);
    }
    s.resize(top + 2);
    return s;
}

}  // namespace

CylJY cylinder_jy(int n, double x) {
    check_args(n, x);
    int na = std::abs(n);
    double sgn = (n < 0 && (na % 2 == 1)) ? -1.0 : 1.0;

    Seed01 J, Y;
    jy01(x, J, Y);

    // need orders na-1, na, na+1 for value + derivative
    int top = na + 1;
    std::vector<double> jv(top + 1), yv(top + 1);
    jv[0] = J.f0;
    yv[0] = Y.f0;
    if (top >= 1) {
        jv[1] = J.f1;
        yv[1] = Y.f1;
    }
    for (int m = 2; m <= top; ++m) {
        yv[m] = 2.0 * (m - 1) / x * yv[m - 1] - yv[m - 2];
    }
    // upward recurrence for J holds full accuracy only below the turning
    // region n ~ x; switch to Miller a safe margin earlier
    if ((double)top <= x - 6.0 * std::cbrt(x) || top <= 1) {
        for (int m = 2; m <= top; ++m) {
            jv[m] = 2.0 * (m - 1) / x * jv[m - 1] - jv[m - 2];
        }
    } else {
        // Miller downward recurrence with sum normalization; the start must
        // clear the Airy transition zone above the turning point m ~ x
        int M = top + 16 + (int)(2.0 * std::sqrt((double)top));
        int Mx = (int)(x + 14.0 * std::cbrt(x) + 16.0);
        M = std::max(M, Mx);
        std::vector<double> u(M + 2, 0.0);
        u[M + 1] = 0.0;
        u[M] = 1e-300;
        long double norm = 0.0L;
        for (int m = M; m >= 1; --m) {
            u[m - 1] = 2.0 * m / x * u[m] - u[m + 1];
            if (std::abs(u[m - 1]) > 1e280) {
                for (int i = m - 1; i <= M + 1; ++i) u[i] *= 1e-280;
            }
        }
        norm = u[0];
        for (int m = 2; m <= M; m += 2) norm += 2.0L * (long double)u[m];
        for (int m = 0; m <= top; ++m) jv[m] = (double)((long double)u[m] / norm);
    }

    CylJY out;
    out.j = sgn * jv[na];
    out.y = sgn * yv[na];
    if (na == 0) {
        out.jp = -jv[1];
        out.yp = -yv[1];
    } else {
        out.jp = sgn * (jv[na - 1] - (double)na / x * jv[na]);
        out.yp = sgn * (yv[na - 1] - (double)na / x * yv[na]);
    }
    return out;
}

CylIK cylinder_ik(int n, double x) {
    check_args(n, x);
    int na = std::abs(n);  // I_{-n} = I_n, K_{-n} = K_n

    Seed01 I, K;
    ik01(x, I, K);

    int top = na + 1;
    std::vector<double> kv(top + 1), iv(top + 1);
    kv[0] = K.f0;
    if (top >= 1) kv[1] = K.f1;
    for (int m = 2; m <= top; ++m) {
        kv[m] = 2.0 * (m - 1) / x * kv[m - 1] + kv[m - 2];
    }
    auto s = bessel_i_ratios(top, x);
    iv[0] = I.f0;
    for (int m = 1; m <= top; ++m) iv[m] = iv[m - 1] * s[m];

    CylIK out;
    out.i = iv[na];
    out.k = kv[na];
    if (na == 0) {
        out.ip = iv[1];
        out.kp = -kv[1];
    } else {
        out.ip = iv[na - 1] - (double)na / x * iv[na];
        out.kp = -(kv[na - 1] + (double)na / x * kv[na]);
    }
    return out;
}

FunPair cylinder_h1(int n, double x) {
    CylJY jy = cylinder_jy(n, x);
    return {cplx(jy.j, jy.y), cplx(jy.jp, jy.yp)};
}

FunPair cylinder_h1_imag(int n, double x) {
    check_args(n, x);
    int na = std::abs(n);  // H_{-n}^{(1)} = e^{n pi i} H_n^{(1)} = (-1)^n H_n^{(1)}
    double sgn = (n < 0 && (na % 2 == 1)) ? -1.0 : 1.0;
    CylIK ik = cylinder_ik(na, x);
    const cplx mi(0.0, -1.0);
    cplx pw = std::pow(mi, (double)na);
    // H_n^{(1)}(ix) = (2/pi)(-i)^{n+1} K_n(x)
    cplx value = 2.0 / kPi * pw * mi * ik.k;
    // d/dz H_n^{(1)}(z) |_{z=ix} = -(2/pi)(-i)^n K_n'(x)
    cplx deriv = -2.0 / kPi * pw * ik.kp;
    return {sgn * value, sgn * deriv};
}

FunPair spherical_jn(int n, double x) {
    check_args(n, x);
    if (n < 0) throw DomainError("spherical_jn: order must be nonnegative");
    double j0 = std::sin(x) / x;
    double j1 = j0 / x - std::cos(x) / x;
    if (n == 0) return {j0, std::cos(x) / x - j0 / x};
    if ((double)n <= x - 6.0 * std::cbrt(x)) {
        // upward recurrence, stable below the turning region
        double jm1 = j0, jm = j1;
        for (int m = 1; m < n; ++m) {
            double next = (2.0 * m + 1.0) / x * jm - jm1;
            jm1 = jm;
            jm = next;
        }
        return {jm, jm1 - (n + 1.0) / x * jm};
    }
    // Miller downward on raw values (ratios have poles below the turning
    // point), rescaled on overflow, anchored at whichever of j0, j1 sits
    // away from a zero.
    int M = n + 16 + (int)(2.0 * std::sqrt((double)n));
    M = std::max(M, (int)(x + 14.0 * std::cbrt(x) + 16.0));
    std::vector<double> u(M + 2, 0.0);
    u[M + 1] = 0.0;
    u[M] = 1e-300;
    for (int m = M; m >= 1; --m) {
        u[m - 1] = (2.0 * m + 1.0) / x * u[m] - u[m + 1];
        if (std::abs(u[m - 1]) > 1e280) {
            for (int i = m - 1; i <= M + 1; ++i) u[i] *= 1e-280;
        }
    }
    double scale = (std::abs(u[0]) >= std::abs(u[1])) ? j0 / u[0] : j1 / u[1];
    double jn = u[n] * scale;
    double jnm1 = u[n - 1] * scale;
    return {jn, jnm1 - (n + 1.0) / x * jn};
}

FunPair spherical_h1(int n, double x) {
    check_args(n, x);
    if (n < 0) throw DomainError("spherical_h1: order must be nonnegative");
    FunPair j = spherical_jn(n, x);
    std::vector<double> yv(n + 2);
    yv[0] = -std::cos(x) / x;
    if (n >= 1) yv[1] = yv[0] / x - std::sin(x) / x;
    for (int m = 2; m <= n; ++m) {
        yv[m] = (2.0 * m - 1.0) / x * yv[m - 1] - yv[m - 2];
    }
    double y = yv[n];
    double yp = (n == 0) ? (std::sin(x) / x + std::cos(x) / (x * x))
                         : (yv[n - 1] - (n + 1.0) / x * yv[n]);
    return {cplx(j.value.real(), y), cplx(j.derivative.real(), yp)};
}

FunPair spherical_h1_imag(int n, double x) {
    check_args(n, x);
    if (n < 0) throw DomainError("spherical_h1_imag: order must be nonnegative");
    const cplx mi(0.0, -1.0);
    // h_n^{(1)}(ix) = -(-i)^n e^{-x} S_n(x) / x,
    // S_n(x) = sum_{j=0}^n (n+j)! / (j! (n-j)! (2x)^j)
    auto hval = [&](int m) -> cplx {
        double S = 1.0, T = 1.0;
        for (int j = 1; j <= m; ++j) {
            T *= (double)(m + j) * (m - j + 1) / (2.0 * x * j);
            S += T;
        }
        return -std::pow(mi, (double)m) * std::exp(-x) * S / x;
    };
    cplx h = hval(n);
    cplx deriv;
    if (n == 0) {
        deriv = -hval(1);
    } else {
        deriv = hval(n - 1) - (n + 1.0) / cplx(0.0, x) * h;
    }
    return {h, deriv};
}

std::vector<cplx> hankel_asymptotic_coeffs(double nu, int J) {
    if (J < 0 || J > 64) throw DomainError("hankel_asymptotic_coeffs: bad truncation");
    std::vector<cplx> a(J + 1);
    a[0] = 1.0;
    for (int j = 1; j <= J; ++j) {
        a[j] = a[j - 1] * cplx(0.0, 1.0 / 8.0) *
               (4.0 * nu * nu - (2.0 * j - 1.0) * (2.0 * j - 1.0)) / (double)j;
    }
    return a;
}

std::vector<cplx> hankel_asymptotic_coeffs(int n, int J) {
    if (std::abs(n) > kMaxOrder) throw DomainError("hankel_asymptotic_coeffs: order too large");
    if (J > 8) throw DomainError("hankel_asymptotic_coeffs: J must be <= 8");
    return hankel_asymptotic_coeffs((double)std::abs(n), J);
}

std::vector<double> legendre_all(int N, double t) {
    std::vector<double> p(N + 1);
    p[0] = 1.0;
    if (N >= 1) p[1] = t;
    for (int n = 2; n <= N; ++n) {
        p[n] = ((2.0 * n - 1.0) * t * p[n - 1] - (n - 1.0) * p[n - 2]) / n;
    }
    return p;
}

}  // namespace bpl::specfun
