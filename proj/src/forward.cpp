#include "bpl/forward.hpp"

#include "bpl/errors.hpp"
#include "bpl/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bpl::forward {

namespace sf = bpl::specfun;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Boundary traces of one angular mode, as (value, radial derivative) pairs.
// lap_sign carries the Laplacian eigenvalue: -k^2 on the Helmholtz branch
// and for the incident wave, +k^2 on the modified branch.
struct ModeTrace {
    cplx val;
    cplx der;
    double lap_sign;  // +-k^2
};

cplx apply_trace(int which, const ModeTrace& t) {
    switch (which) {
        case 0: return t.val;                // u
        case 1: return t.der;                // d_nu u
        case 2: return t.lap_sign * t.val;   // Lap u
        default: return t.lap_sign * t.der;  // d_nu Lap u
    }
}

void bc_components(BoundaryCondition bc, int& b1, int& b2) {
    switch (bc) {
        case BoundaryCondition::DirichletPair: b1 = 0; b2 = 1; break;
        case BoundaryCondition::NavierPair:    b1 = 0; b2 = 2; break;
        case BoundaryCondition::NeumannPair:   b1 = 2; b2 = 3; break;
        case BoundaryCondition::MixedA:        b1 = 0; b2 = 3; break;
        case BoundaryCondition::MixedB:        b1 = 1; b2 = 2; break;
        case BoundaryCondition::MixedC:        b1 = 1; b2 = 3; break;
        default: throw DomainError("unknown boundary condition");
    }
}

cplx ipow(int n) {
    switch (((n % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

// e^{-i(n pi/2 + pi/4)} and e^{-i(n pi/2 + pi/2)} prefactors
cplx phase_quarter(int n) {
    return std::exp(cplx(0.0, -(n * kPi / 2.0 + kPi / 4.0)));
}
cplx phase_half(int n) {
    return ipow(-(n + 1));  // e^{-i(n+1)pi/2}
}

}  // namespace

double dot(int m, const Vec& a, const Vec& b) {
    double s = a[0] * b[0] + a[1] * b[1];
    if (m == 3) s += a[2] * b[2];
    return s;
}

double norm(int m, const Vec& v) { return std::sqrt(dot(m, v, v)); }

Vec normalized(int m, const Vec& v) {
    double n = norm(m, v);
    if (n == 0.0) throw DomainError("cannot normalize zero vector");
    Vec out = v;
    for (int i = 0; i < 3; ++i) out[i] = (i < m) ? v[i] / n : 0.0;
    return out;
}

std::string to_string(BoundaryCondition bc) {
    switch (bc) {
        case BoundaryCondition::DirichletPair: return "dirichlet_pair";
        case BoundaryCondition::NavierPair:    return "navier_pair";
        case BoundaryCondition::NeumannPair:   return "neumann_pair";
        case BoundaryCondition::MixedA:        return "mixed_a";
        case BoundaryCondition::MixedB:        return "mixed_b";
        case BoundaryCondition::MixedC:        return "mixed_c";
    }
    return "?";
}

BoundaryCondition bc_from_string(const std::string& s) {
    if (s == "dirichlet_pair") return BoundaryCondition::DirichletPair;
    if (s == "navier_pair") return BoundaryCondition::NavierPair;
    if (s == "neumann_pair") return BoundaryCondition::NeumannPair;
    if (s == "mixed_a") return BoundaryCondition::MixedA;
    if (s == "mixed_b") return BoundaryCondition::MixedB;
    if (s == "mixed_c") return BoundaryCondition::MixedC;
    throw DomainError("unknown boundary condition tag: " + s);
}

void Scene::validate() const {
    if (m != 2 && m != 3) throw DomainError("Scene: m must be 2 or 3");
    if (!(k > 0.0)) throw DomainError("Scene: k must be positive");
    if (!(a > 0.0)) throw DomainError("Scene: a must be positive");
    if (k * a > 40.0) throw DomainError("Scene: k*a exceeds the series regime bound 40");
    if (std::abs(norm(m, d) - 1.0) > 1e-14) throw DomainError("Scene: |d| must be 1");
}

ModeSystem assemble_mode_system(int n, const Scene& scene) {
    scene.validate();
    if (std::abs(n) > sf::kMaxOrder) throw DomainError("mode order exceeds maximum");
    const double k = scene.k, a = scene.a, ka = k * a;
    const double k2 = k * k;

    ModeTrace trH, trM, trI;
    if (scene.m == 2) {
        sf::FunPair H = sf::cylinder_h1(n, ka);
        sf::FunPair Hi = sf::cylinder_h1_imag(n, ka);
        sf::CylJY jy = sf::cylinder_jy(n, ka);
        cplx cn = ipow(n);
        trH = {H.value, k * H.derivative, -k2};
        trM = {Hi.value, cplx(0.0, k) * Hi.derivative, +k2};
        trI = {cn * jy.j, cn * k * jy.jp, -k2};
    } else {
        sf::FunPair h = sf::spherical_h1(n, ka);
        sf::FunPair hi = sf::spherical_h1_imag(n, ka);
        sf::FunPair j = sf::spherical_jn(n, ka);
        cplx cn = ipow(n) * (2.0 * n + 1.0);
        trH = {h.value, k * h.derivative, -k2};
        trM = {hi.value, cplx(0.0, k) * hi.derivative, +k2};
        trI = {cn * j.value, cn * k * j.derivative, -k2};
    }

    int b1, b2;
    bc_components(scene.bc, b1, b2);
    ModeSystem sys;
    sys.M[0][0] = apply_trace(b1, trH);
    sys.M[0][1] = apply_trace(b1, trM);
    sys.M[1][0] = apply_trace(b2, trH);
    sys.M[1][1] = apply_trace(b2, trM);
    sys.rhs[0] = -apply_trace(b1, trI);
    sys.rhs[1] = -apply_trace(b2, trI);

    double fro2 = std::norm(sys.M[0][0]) + std::norm(sys.M[0][1]) +
                  std::norm(sys.M[1][0]) + std::norm(sys.M[1][1]);
    cplx det = sys.M[0][0] * sys.M[1][1] - sys.M[0][1] * sys.M[1][0];
    if (std::abs(det) < 1e-13 * fro2) {
        throw SingularMode("mode " + std::to_string(n) + " system is singular for bc=" +
                           to_string(scene.bc));
    }
    return sys;
}

ModalSolution solve_modes(const Scene& scene) {
    scene.validate();
    ModalSolution sol;
    sol.scene = scene;
    int nmin = (int)std::ceil(scene.k * scene.a) + 10;

    std::vector<cplx> aH, aM;
    double scale = 0.0;
    int N = -1;
    for (int n = 0; n <= sf::kMaxOrder; ++n) {
        ModeSystem s = assemble_mode_system(n, scene);
        cplx det = s.M[0][0] * s.M[1][1] - s.M[0][1] * s.M[1][0];
        cplx h = (s.rhs[0] * s.M[1][1] - s.rhs[1] * s.M[0][1]) / det;
        cplx m = (s.M[0][0] * s.rhs[1] - s.M[1][0] * s.rhs[0]) / det;
        aH.push_back(h);
        aM.push_back(m);
        scale = std::max(scale, std::abs(h) + std::abs(m));
        // the boundary residual is dominated by the uncancelled incident
        // modes above N, so the incident trace tail gates the cut as well
        double inc_tail = std::abs(s.rhs[0]) + std::abs(s.rhs[1]);
        if (n >= nmin && std::abs(h) + std::abs(m) < 1e-14 * scale && inc_tail < 1e-12) {
            N = n;
            break;
        }
    }
    if (N < 0) throw NoConvergence("mode tail bound unmet at order 128");
    sol.truncation = N;
    sol.alphaH = std::move(aH);
    sol.alphaM = std::move(aM);
    return sol;
}

double ModalSolution::coeff_scale() const {
    double s = 0.0;
    for (std::size_t i = 0; i < alphaH.size(); ++i) {
        s = std::max(s, std::abs(alphaH[i]) + std::abs(alphaM[i]));
    }
    return s;
}

RayValue eval_ray(const ModalSolution& sol, double r, double cth) {
    const Scene& sc = sol.scene;
    if (!(r > sc.a)) throw DomainError("eval point must lie outside the obstacle");
    const double k = sc.k;
    cth = std::clamp(cth, -1.0, 1.0);
    RayValue out{0.0, 0.0, std::exp(cplx(0.0, k * r * cth))};
    if (sc.m == 2) {
        double th = std::acos(cth);
        for (int n = 0; n <= sol.truncation; ++n) {
            double w = (n == 0) ? 1.0 : 2.0 * std::cos(n * th);
            out.uH += sol.alphaH[n] * sf::cylinder_h1(n, k * r).value * w;
            out.uM += sol.alphaM[n] * sf::cylinder_h1_imag(n, k * r).value * w;
        }
    } else {
        auto P = sf::legendre_all(sol.truncation, cth);
        for (int n = 0; n <= sol.truncation; ++n) {
            out.uH += sol.alphaH[n] * sf::spherical_h1(n, k * r).value * P[n];
            out.uM += sol.alphaM[n] * sf::spherical_h1_imag(n, k * r).value * P[n];
        }
    }
    return out;
}

FieldValue eval_field(const ModalSolution& sol, const Vec& x) {
    const Scene& sc = sol.scene;
    double r = norm(sc.m, x);
    if (!(r > sc.a)) throw DomainError("eval point must lie outside the obstacle");
    double cth = dot(sc.m, x, sc.d) / r;
    RayValue rv = eval_ray(sol, r, cth);
    FieldValue fv;
    fv.x = x;
    fv.uH = rv.uH;
    fv.uM = rv.uM;
    fv.uInc = rv.uInc;
    fv.uTotal = rv.uInc + rv.uH + rv.uM;
    return fv;
}

BoundaryTrace boundary_trace(const ModalSolution& sol, double cth) {
    const Scene& sc = sol.scene;
    const double k = sc.k, a = sc.a;
    cth = std::clamp(cth, -1.0, 1.0);
    BoundaryTrace t{};
    t.uInc = std::exp(cplx(0.0, k * a * cth));
    t.duInc = cplx(0.0, k * cth) * t.uInc;
    if (sc.m == 2) {
        double th = std::acos(cth);
        for (int n = 0; n <= sol.truncation; ++n) {
            double w = (n == 0) ? 1.0 : 2.0 * std::cos(n * th);
            auto H = sf::cylinder_h1(n, k * a);
            auto Hi = sf::cylinder_h1_imag(n, k * a);
            t.uH += sol.alphaH[n] * H.value * w;
            t.duH += sol.alphaH[n] * k * H.derivative * w;
            t.uM += sol.alphaM[n] * Hi.value * w;
            t.duM += sol.alphaM[n] * cplx(0.0, k) * Hi.derivative * w;
        }
    } else {
        auto P = sf::legendre_all(sol.truncation, cth);
        for (int n = 0; n <= sol.truncation; ++n) {
            auto h = sf::spherical_h1(n, k * a);
            auto hi = sf::spherical_h1_imag(n, k * a);
            t.uH += sol.alphaH[n] * h.value * P[n];
            t.duH += sol.alphaH[n] * k * h.derivative * P[n];
            t.uM += sol.alphaM[n] * hi.value * P[n];
            t.duM += sol.alphaM[n] * cplx(0.0, k) * hi.derivative * P[n];
        }
    }
    return t;
}

FarField far_field_cth(const ModalSolution& sol, double cth) {
    const Scene& sc = sol.scene;
    const double k = sc.k;
    cth = std::clamp(cth, -1.0, 1.0);
    FarField ff{0.0, 0.0};
    if (sc.m == 2) {
        double th = std::acos(cth);
        for (int n = 0; n <= sol.truncation; ++n) {
            double w = (n == 0) ? 1.0 : 2.0 * std::cos(n * th);
            ff.H += sol.alphaH[n] * phase_quarter(n) * w;
            ff.M += sol.alphaM[n] * phase_half(n) * w;
        }
        double s = std::sqrt(2.0 / (k * kPi));
        ff.H *= s;
        ff.M *= s;
    } else {
        auto P = sf::legendre_all(sol.truncation, cth);
        for (int n = 0; n <= sol.truncation; ++n) {
            ff.H += sol.alphaH[n] * phase_half(n) * P[n];
            ff.M += sol.alphaM[n] * phase_half(n) * P[n];
        }
        ff.H /= k;
        ff.M /= cplx(0.0, k);
    }
    return ff;
}

FarField far_field(const ModalSolution& sol, const Vec& xhat) {
    double cth = dot(sol.scene.m, normalized(sol.scene.m, xhat), sol.scene.d);
    return far_field_cth(sol, cth);
}

AtkinsonCoeffs atkinson_ground_truth_cth(const ModalSolution& sol, double cth, int J) {
    if (J < 1 || J > 6) throw DomainError("atkinson_ground_truth: J must be in [1,6]");
    const Scene& sc = sol.scene;
    const double k = sc.k;
    cth = std::clamp(cth, -1.0, 1.0);
    AtkinsonCoeffs out;
    out.f.assign(J, 0.0);
    out.g.assign(J, 0.0);
    // H_n^{(1)}(kr)   = sqrt(2/(pi k r)) e^{i(kr - n pi/2 - pi/4)} sum_j a_{n,j} (kr)^{-j}
    // H_n^{(1)}(ikr)  = sqrt(2/(pi k r)) e^{-kr} e^{-i(n pi/2 + pi/2)} sum_j a_{n,j} (ikr)^{-j}
    // and the spherical analogues with nu = n + 1/2 (terminating).
    if (sc.m == 2) {
        double th = std::acos(cth);
        double s = std::sqrt(2.0 / (k * kPi));
        for (int n = 0; n <= sol.truncation; ++n) {
            auto a = sf::hankel_asymptotic_coeffs((double)n, J - 1);
            double w = (n == 0) ? 1.0 : 2.0 * std::cos(n * th);
            for (int j = 0; j < J; ++j) {
                out.f[j] += sol.alphaH[n] * phase_quarter(n) * a[j] * w;
                out.g[j] += sol.alphaM[n] * phase_half(n) * a[j] * w;
            }
        }
        for (int j = 0; j < J; ++j) {
            out.f[j] *= s / std::pow(k, j);
            out.g[j] *= s / std::pow(cplx(0.0, k), (double)j);
        }
    } else {
        auto P = sf::legendre_all(sol.truncation, cth);
        for (int n = 0; n <= sol.truncation; ++n) {
            auto a = sf::hankel_asymptotic_coeffs(n + 0.5, J - 1);
            for (int j = 0; j < J; ++j) {
                out.f[j] += sol.alphaH[n] * phase_half(n) * a[j] * P[n];
                out.g[j] += sol.alphaM[n] * phase_half(n) * a[j] * P[n];
            }
        }
        for (int j = 0; j < J; ++j) {
            out.f[j] /= std::pow(k, j + 1);
            out.g[j] /= std::pow(cplx(0.0, k), (double)(j + 1));
        }
    }
    return out;
}

AtkinsonCoeffs atkinson_ground_truth(const ModalSolution& sol, const Vec& xhat, int J) {
    double cth = dot(sol.scene.m, normalized(sol.scene.m, xhat), sol.scene.d);
    return atkinson_ground_truth_cth(sol, cth, J);
}

std::vector<double> sample_phaseless(const ModalSolution& sol,
                                     const std::vector<Vec>& points,
                                     double noise,
                                     std::uint64_t seed) {
    if (noise < 0.0) throw DomainError("noise level must be nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> out;
    out.reserve(points.size());
    for (const Vec& p : points) {
        double mod = std::abs(eval_field(sol, p).uTotal);
        double xi = uni(rng);
        out.push_back(noise == 0.0 ? mod : mod * (1.0 + noise * xi));
    }
    return out;
}

}  // namespace bpl::forward
