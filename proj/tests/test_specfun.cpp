#include "bpl/specfun.hpp"

#include "bpl/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace bpl::specfun;
using oracles::Rng;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("cylinder_jy small-argument limit and series oracle") {
    CHECK(cylinder_jy(0, 1e-8).j == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cylinder_jy(0, 1.0).j == doctest::Approx(oracles::j0_series(1.0)).epsilon(1e-14));
    CHECK(cylinder_jy(0, 7.3).j == doctest::Approx(oracles::j0_series(7.3)).epsilon(1e-12));
}

TEST_CASE("cylinder_jy Wronskian at the spec point") {
    auto r = cylinder_jy(3, 2.7);
    double w = r.j * r.yp - r.jp * r.y;
    CHECK(std::abs(w - 2.0 / (kPi * 2.7)) < 1e-12 * std::abs(w));
}

TEST_CASE("Wronskian property over random orders and arguments") {
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        int n = rng.integer(0, 30);
        double x = rng.uniform(0.1, 100.0);
        auto r = cylinder_jy(n, x);
        double w = r.j * r.yp - r.jp * r.y;
        double expect = 2.0 / (kPi * x);
        CHECK(std::abs(w - expect) < 1e-12 * std::abs(expect));

        auto ik = cylinder_ik(n, x);
        double wik = ik.i * ik.kp - ik.ip * ik.k;
        CHECK(std::abs(wik + 1.0 / x) < 1e-12 / x);
    }
}

TEST_CASE("modified Wronskian at the spec point") {
    auto r = cylinder_ik(1, 1.3);
    double w = r.i * r.kp - r.ip * r.k;
    CHECK(std::abs(w + 1.0 / 1.3) < 1e-12 / 1.3);
}

TEST_CASE("negative orders") {
    auto p = cylinder_jy(5, 3.3);
    auto m = cylinder_jy(-5, 3.3);
    CHECK(m.j == doctest::Approx(-p.j).epsilon(1e-15));
    CHECK(m.y == doctest::Approx(-p.y).epsilon(1e-15));
    auto p4 = cylinder_jy(4, 3.3);
    auto m4 = cylinder_jy(-4, 3.3);
    CHECK(m4.j == doctest::Approx(p4.j).epsilon(1e-15));
}

TEST_CASE("cylinder_h1 equals J + iY") {
    auto jy = cylinder_jy(0, 2.0);
    auto h = cylinder_h1(0, 2.0);
    CHECK(h.value.real() == doctest::Approx(jy.j).epsilon(1e-15));
    CHECK(h.value.imag() == doctest::Approx(jy.y).epsilon(1e-15));
}

TEST_CASE("cylinder_h1 large-argument asymptotic limit") {
    // H_n(x) sqrt(pi x/2) e^{-i(x - n pi/2 - pi/4)} -> 1, first correction a_1/x
    double x = 1e4;
    for (int n = 0; n <= 5; ++n) {
        auto h = cylinder_h1(n, x);
        std::complex<double> ratio = h.value * std::sqrt(kPi * x / 2.0) *
                                     std::exp(std::complex<double>(0.0, -(x - n * kPi / 2.0 - kPi / 4.0)));
        double bound = std::max(2e-4, 1.3 * (4.0 * n * n - 1.0) / (8.0 * x));
        CHECK(std::abs(ratio - 1.0) < bound);
    }
}

TEST_CASE("derivative consistency against central differences") {
    auto h = cylinder_h1(2, 3.0);
    auto num = oracles::fdiff([](double x) { return cylinder_h1(2, x).value; }, 3.0, 1e-5);
    CHECK(std::abs(h.derivative - num) < 1e-7);

    Rng rng(7);
    for (int i = 0; i < 40; ++i) {
        int n = rng.integer(0, 20);
        double x = rng.uniform(0.5, 40.0);
        auto r = cylinder_jy(n, x);
        auto numj = oracles::fdiff([n](double t) { return cylinder_jy(n, t).j; }, x, 1e-6);
        CHECK(std::abs(r.jp - numj) < 1e-7);
        auto ik = cylinder_ik(n, x);
        auto numk = oracles::fdiff([n](double t) { return cylinder_ik(n, t).k; }, x, 1e-6);
        CHECK(std::abs(ik.kp - numk) < 1e-7 * std::max(1.0, std::abs(ik.k)));
        auto sj = spherical_jn(n, x);
        auto nums = oracles::fdiff([n](double t) { return spherical_jn(n, t).value.real(); }, x, 1e-6);
        CHECK(std::abs(sj.derivative.real() - nums) < 1e-7);
    }
}

TEST_CASE("cylinder_h1_imag matches the K-series oracle at the spec point") {
    // H_0^{(1)}(i x) = (2/pi)(-i) K_0(x)
    double x = 5.0;
    auto h = cylinder_h1_imag(0, x);
    std::complex<double> expect = std::complex<double>(0.0, -2.0 / kPi) * oracles::k0_series(x);
    CHECK(std::abs(h.value - expect) < 1e-12 * std::abs(expect));
}

TEST_CASE("cylinder_h1_imag decay rate") {
    double v = std::abs(cylinder_h1_imag(0, 20.0).value);
    double scale = std::exp(-20.0) / std::sqrt(20.0);
    CHECK(v / scale > 0.5);
    CHECK(v / scale < 1.5);
}

TEST_CASE("monotone exponential decay of |H_n(ix)| in x") {
    for (int n : {0, 2, 7}) {
        double prev = 1e300;
        for (double x = n + 1.0; x <= 100.0; x *= 1.3) {
            double v = std::abs(cylinder_h1_imag(n, x).value);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("cylinder_h1_imag derivative against central differences of the connection") {
    // d/dz H_n(z) at z = ix equals the analytically continued derivative;
    // check via H' = H_{n-1} - (n/z) H_n with the K-backed values
    for (int n : {0, 1, 4}) {
        double x = 2.2;
        auto h = cylinder_h1_imag(n, x);
        std::complex<double> hm1 = (n == 0) ? -cylinder_h1_imag(1, x).value
                                            : cylinder_h1_imag(n - 1, x).value;
        std::complex<double> expect = hm1 - (double)n / std::complex<double>(0.0, x) * h.value;
        CHECK(std::abs(h.derivative - expect) < 1e-12 * std::max(1.0, std::abs(expect)));
    }
}

TEST_CASE("spherical closed forms") {
    double x = 1.0;
    auto h0 = spherical_h1(0, x);
    std::complex<double> expect = std::complex<double>(0.0, -1.0) * std::exp(std::complex<double>(0.0, x)) / x;
    CHECK(std::abs(h0.value - expect) < 1e-14);

    auto h0i = spherical_h1_imag(0, 2.0);
    CHECK(std::abs(h0i.value - (-std::exp(-2.0) / 2.0)) < 1e-15);
}

TEST_CASE("spherical j recurrence identity") {
    int n = 4;
    double x = 3.0;
    double lhs = spherical_jn(n - 1, x).value.real() + spherical_jn(n + 1, x).value.real();
    double rhs = (2.0 * n + 1.0) * spherical_jn(n, x).value.real() / x;
    CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("hankel asymptotic coefficients") {
    auto a = hankel_asymptotic_coeffs(0, 4);
    CHECK(a[0] == std::complex<double>(1.0, 0.0));
    auto a5 = hankel_asymptotic_coeffs(5, 4);
    CHECK(a5[0] == std::complex<double>(1.0, 0.0));

    // a_{0,1} against a numerical fit of (H_0 sqrt(pi z/2) e^{-i(z-pi/4)} - 1) z
    std::vector<double> xs = {1e2, 3.16e2, 1e3, 3.16e3, 1e4};
    std::vector<std::complex<double>> vals;
    for (double z : xs) {
        auto h = cylinder_h1(0, z);
        std::complex<double> r = h.value * std::sqrt(kPi * z / 2.0) *
                                 std::exp(std::complex<double>(0.0, -(z - kPi / 4.0)));
        vals.push_back((r - 1.0) * z);
    }
    auto c = oracles::fit_inverse_poly(xs, vals);
    CHECK(std::abs(c[0] - a[1]) < 1e-6 * std::abs(a[1]));

    // truncated series at J=4 reproduces cylinder_h1 at z=100, n=2
    auto a2 = hankel_asymptotic_coeffs(2, 4);
    double z = 100.0;
    std::complex<double> s = 0.0;
    for (int j = 0; j <= 4; ++j) s += a2[j] / std::pow(z, j);
    std::complex<double> approx = std::sqrt(2.0 / (kPi * z)) *
                                  std::exp(std::complex<double>(0.0, z - 2.0 * kPi / 2.0 - kPi / 4.0)) * s;
    auto exact = cylinder_h1(2, z).value;
    CHECK(std::abs(approx - exact) < 1e-9 * std::abs(exact));
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(cylinder_jy(0, 0.0), bpl::DomainError);
    CHECK_THROWS_AS(cylinder_jy(0, -1.0), bpl::DomainError);
    CHECK_THROWS_AS(cylinder_jy(129, 1.0), bpl::DomainError);
    CHECK_THROWS_AS(cylinder_h1_imag(0, -0.5), bpl::DomainError);
    CHECK_THROWS_AS(spherical_h1(2, 0.0), bpl::DomainError);
    CHECK_THROWS_AS(hankel_asymptotic_coeffs(2, 9), bpl::DomainError);
}

TEST_CASE("legendre recurrence endpoints") {
    auto p = legendre_all(6, 1.0);
    for (double v : p) CHECK(v == doctest::Approx(1.0));
    auto pm = legendre_all(5, -1.0);
    CHECK(pm[3] == doctest::Approx(-1.0));
    CHECK(pm[4] == doctest::Approx(1.0));
}
