#include "bpl/retrieval.hpp"

#include "bpl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bpl::retrieval {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kAmpThreshold = 23.025850929940457;  // e^{-kt} = 1e-10

double weight_pow(int m, double r) {
    return (m == 2) ? std::sqrt(r) : r;  // |x|^{(m-1)/2}
}

void check_direction_helmholtz(double xd) {
    if (std::abs(1.0 - xd) <= 1e-6) {
        throw DirectionTooClose("observation direction coincides with the incident direction");
    }
}

void check_direction_modified(double xd) {
    if (std::abs(xd) <= 1e-6) {
        throw DirectionTooClose("xhat.d vanishes; modified-part formulas degenerate");
    }
}

}  // namespace

void RetrievalPlan::validate() const {
    if (order < 1) throw DomainError("RetrievalPlan: order must be >= 1");
    if (m != 2 && m != 3) throw DomainError("RetrievalPlan: m must be 2 or 3");
    if (!sigma.empty()) {
        if ((int)sigma.size() != order) throw DomainError("RetrievalPlan: sigma size != order");
        for (int i = 0; i < (int)sigma.size(); ++i) {
            if (!(sigma[i] > 0.0)) throw DomainError("RetrievalPlan: sigma must be positive");
            for (int j = 0; j < i; ++j) {
                if (sigma[i] == sigma[j]) throw DomainError("RetrievalPlan: sigma must be distinct");
            }
        }
    }
    if (!(delta > 0.0)) throw DomainError("RetrievalPlan: delta must be positive");
}

void RaySampleSet::validate(double obstacle_radius) const {
    if (radii.size() != moduli.size()) throw DomainError("RaySampleSet: size mismatch");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > obstacle_radius)) {
            throw DomainError("RaySampleSet: radius inside the obstacle");
        }
        if (i > 0 && !(radii[i] > radii[i - 1])) {
            throw DomainError("RaySampleSet: radii must be strictly increasing");
        }
    }
}

std::vector<double> RetrievalPlan::sigmas() const {
    if (!sigma.empty()) return sigma;
    std::vector<double> s(order);
    for (int j = 0; j < order; ++j) s[j] = j + 1.0;
    return s;
}

std::vector<cplx> vandermonde_solve(const std::vector<double>& nodes,
                                    const std::vector<cplx>& values) {
    const int n = (int)nodes.size();
    if (n == 0 || (int)values.size() != n) {
        throw DomainError("vandermonde_solve: size mismatch");
    }
    double tmax = 0.0;
    for (double t : nodes) tmax = std::max(tmax, std::abs(t));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            if (std::abs(nodes[i] - nodes[j]) <= 1e-9 * tmax) {
                throw DegenerateNodes("vandermonde nodes closer than 1e-9 * max node");
            }
        }
    }
    // Bjorck-Pereyra on the interpolation nodes y = 1/t
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = 1.0 / nodes[i];
    std::vector<cplx> c = values;
    for (int k = 0; k < n - 1; ++k) {
        for (int j = n - 1; j > k; --j) {
            c[j] = (c[j] - c[j - 1]) / (y[j] - y[j - 1 - k]);
        }
    }
    for (int k = n - 2; k >= 0; --k) {
        for (int j = k; j < n - 1; ++j) {
            c[j] -= y[k] * c[j + 1];
        }
    }
    return c;
}

PairSolve phase_pair_solve(double th1, double th2, cplx W1, cplx W2) {
    double s = std::sin(th1 - th2);
    if (std::abs(s) <= 1e-6) {
        throw DegenerateTau("phase gap sin(th1-th2) below 1e-6; tau on the excluded lattice");
    }
    cplx det(0.0, 2.0 * s);
    cplx e1 = std::exp(cplx(0.0, th1));
    cplx e2 = std::exp(cplx(0.0, th2));
    cplx f = (W1 * std::conj(e2) - W2 * std::conj(e1)) / det;
    cplx g = (e1 * W2 - e2 * W1) / det;
    return {f, std::abs(g - std::conj(f))};
}

HelmholtzGrid grid_helmholtz(const RetrievalPlan& plan, double xhat_dot_d, double k, int level) {
    plan.validate();
    check_direction_helmholtz(xhat_dot_d);
    if (level < 1) throw DomainError("grid level must be >= 1");
    auto sig = plan.sigmas();
    for (double s : sig) {
        if (std::abs(s - std::round(s)) > 1e-12) {
            throw DomainError("grid_helmholtz requires integer scale factors for the exact congruence");
        }
    }
    double beta = k * (1.0 - xhat_dot_d);
    double Delta = 2.0 * kPi / beta;
    HelmholtzGrid g;
    g.spacing = Delta;
    g.tau = (plan.tau != 0.0) ? plan.tau : Delta / 4.0;
    if (std::abs(std::sin(beta * g.tau)) <= 1e-6) {
        throw DegenerateTau("tau lies on the excluded lattice ell*pi/(k(1-xhat.d))");
    }
    for (double s : sig) {
        g.t.push_back(s * level * Delta);
        g.ttilde.push_back(s * level * Delta + g.tau);
    }
    return g;
}

FarFieldEstimate retrieve_f_3d(const RetrievalPlan& plan, double xhat_dot_d, double k,
                               int level, const ModulusFn& modulus) {
    if (plan.m != 3) throw DomainError("retrieve_f_3d: plan.m must be 3");
    HelmholtzGrid g = grid_helmholtz(plan, xhat_dot_d, k, level);
    const int n = plan.order;
    const double beta = k * (1.0 - xhat_dot_d);

    std::vector<cplx> v(n), vt(n);
    for (int j = 0; j < n; ++j) {
        double ma = modulus(g.t[j]);
        double mb = modulus(g.ttilde[j]);
        v[j] = g.t[j] * (ma * ma - 1.0);
        vt[j] = g.ttilde[j] * (mb * mb - 1.0);
    }
    std::vector<cplx> F = vandermonde_solve(g.t, v);
    std::vector<cplx> Ft = vandermonde_solve(g.ttilde, vt);

    FarFieldEstimate est;
    est.plan = plan;
    est.radii = g.t;
    est.radii.insert(est.radii.end(), g.ttilde.begin(), g.ttilde.end());
    double th1 = beta * g.t[0];
    double th2 = beta * g.ttilde[0];
    for (int j = 0; j < n; ++j) {
        cplx corr = 0.0;
        for (int l = 0; l < j; ++l) corr += est.coeff[l] * std::conj(est.coeff[j - 1 - l]);
        PairSolve ps = phase_pair_solve(th1, th2, F[j] - corr, Ft[j] - corr);
        est.coeff.push_back(ps.f);
        est.residual.push_back(ps.residual);
    }
    return est;
}

FarFieldEstimate retrieve_f_2d_twopoint(double xhat_dot_d, double k, double t, double tau,
                                        const ModulusFn& modulus) {
    check_direction_helmholtz(xhat_dot_d);
    const double beta = k * (1.0 - xhat_dot_d);
    double ma = modulus(t);
    double mb = modulus(t + tau);
    cplx v1 = std::sqrt(t) * (ma * ma - 1.0);
    cplx v2 = std::sqrt(t + tau) * (mb * mb - 1.0);
    PairSolve ps = phase_pair_solve(beta * t, beta * (t + tau), v1, v2);
    FarFieldEstimate est;
    est.coeff = {ps.f};
    est.residual = {ps.residual};
    est.radii = {t, t + tau};
    return est;
}

FarFieldEstimate retrieve_f_2d_revised(double xhat_dot_d, double k, double t, double tau,
                                       const ModulusFn& modulus) {
    check_direction_helmholtz(xhat_dot_d);
    const double beta = k * (1.0 - xhat_dot_d);
    double ma = modulus(t);
    double mb = modulus(t + tau);
    cplx v1 = std::sqrt(t) * (ma * ma - 1.0);
    cplx v2 = std::sqrt(t + tau) * (mb * mb - 1.0);
    cplx f1 = phase_pair_solve(beta * t, beta * (t + tau), v1, v2).f;
    double q = std::norm(f1);
    PairSolve ps = phase_pair_solve(beta * t, beta * (t + tau),
                                    v1 - q / std::sqrt(t), v2 - q / std::sqrt(t + tau));
    FarFieldEstimate est;
    est.coeff = {ps.f};
    est.residual = {ps.residual};
    est.radii = {t, t + tau};
    return est;
}

FarFieldEstimate retrieve_f_2d_recursive(const RetrievalPlan& plan, double xhat_dot_d,
                                         double k, int level, const ModulusFn& modulus) {
    if (plan.m != 2) throw DomainError("retrieve_f_2d_recursive: plan.m must be 2");
    if (plan.order < 2) throw DomainError("retrieve_f_2d_recursive: order must be >= 2");
    HelmholtzGrid g = grid_helmholtz(plan, xhat_dot_d, k, level);
    const double beta = k * (1.0 - xhat_dot_d);
    const double th1 = beta * g.t[0];
    const double th2 = beta * g.ttilde[0];

    std::vector<double> mod_t(plan.order), mod_tt(plan.order);
    for (int j = 0; j < plan.order; ++j) {
        mod_t[j] = modulus(g.t[j]);
        mod_tt[j] = modulus(g.ttilde[j]);
    }
    auto v0 = [](double t, double mod) { return std::sqrt(t) * (mod * mod - 1.0); };

    // v^{(s)}(t) subtracts the |u_H|^2 half-power ladder built from the
    // current coefficient estimates fs.
    auto vfun = [&](double t, double mod, const std::vector<cplx>& fs) {
        cplx tot = v0(t, mod);
        for (int j = 1; j <= (int)fs.size(); ++j) {
            cplx h = 0.0;
            for (int l = 1; l <= j; ++l) h += fs[l - 1] * std::conj(fs[j - l]);
            tot -= h / std::pow(t, j - 0.5);
        }
        return tot;
    };
    auto solve_stage = [&](int mopts, const std::vector<cplx>& fs) {
        std::vector<double> nt(g.t.begin(), g.t.begin() + mopts);
        std::vector<double> ntt(g.ttilde.begin(), g.ttilde.begin() + mopts);
        std::vector<cplx> val(mopts), valt(mopts);
        for (int j = 0; j < mopts; ++j) {
            val[j] = vfun(nt[j], mod_t[j], fs);
            valt[j] = vfun(ntt[j], mod_tt[j], fs);
        }
        std::vector<cplx> F = vandermonde_solve(nt, val);
        std::vector<cplx> Ft = vandermonde_solve(ntt, valt);
        std::vector<cplx> out(mopts);
        std::vector<double> res(mopts);
        for (int j = 0; j < mopts; ++j) {
            PairSolve ps = phase_pair_solve(th1, th2, F[j], Ft[j]);
            out[j] = ps.f;
            res[j] = ps.residual;
        }
        return std::pair(out, res);
    };

    // bootstrap: revised two-point at (t_1, ttilde_1)
    cplx f1t = phase_pair_solve(th1, th2, v0(g.t[0], mod_t[0]), v0(g.ttilde[0], mod_tt[0])).f;
    double q = std::norm(f1t);
    cplx f1 = phase_pair_solve(th1, th2,
                               v0(g.t[0], mod_t[0]) - q / std::sqrt(g.t[0]),
                               v0(g.ttilde[0], mod_tt[0]) - q / std::sqrt(g.ttilde[0])).f;
    std::vector<cplx> fprev = {f1};
    std::vector<double> resid = {0.0};
    for (int stage = 2; stage <= plan.order; ++stage) {
        auto [ftil, res1] = solve_stage(stage, fprev);
        auto [fnew, res2] = solve_stage(stage, ftil);
        fprev = fnew;
        resid = res2;
    }
    FarFieldEstimate est;
    est.plan = plan;
    est.coeff = fprev;
    est.residual = resid;
    est.radii = g.t;
    est.radii.insert(est.radii.end(), g.ttilde.begin(), g.ttilde.end());
    return est;
}

VValue v_function_M(int m, double k, double r, double xhat_dot_d,
                    double modulus, cplx uH_value) {
    cplx ref = std::exp(cplx(0.0, k * r * xhat_dot_d)) + uH_value;
    double diff = modulus * modulus - std::norm(ref);
    double w = weight_pow(m, r) * std::exp(k * r) * diff;
    return {w, k * r > kAmpThreshold};
}

double arg_match_radii(double xhat_dot_d, double k, const FieldFn& uH,
                       double theta, double center, double lo_limit, double delta) {
    check_direction_modified(xhat_dot_d);
    const double gamma = k * xhat_dot_d;
    const double period = 2.0 * kPi / std::abs(gamma);
    // window reaches one full period above the center, so at least one root
    // survives any clip from below (argument continuity supplies one per period)
    const double lo = std::max(lo_limit, center - period / 2.0 - delta);
    const double hi = center + period + delta;
    if (!(hi > lo)) throw NoRootInWindow("argument-matching window is empty");
    const double dt = std::min(0.1, kPi / (4.0 * k));

    auto phase_raw = [&](double t) {
        cplx ref = std::exp(cplx(0.0, gamma * t)) + uH(t);
        return std::arg(ref);
    };
    // continuous tracking: unwrap against the previous sample
    int nstep = std::max(8, (int)std::ceil((hi - lo) / dt));
    std::vector<double> ts(nstep + 1), ph(nstep + 1);
    double offset = 0.0;
    for (int i = 0; i <= nstep; ++i) {
        ts[i] = lo + (hi - lo) * i / nstep;
        double raw = phase_raw(ts[i]);
        if (i > 0) {
            while (raw + offset - ph[i - 1] > kPi) offset -= 2.0 * kPi;
            while (raw + offset - ph[i - 1] < -kPi) offset += 2.0 * kPi;
        }
        ph[i] = raw + offset;
    }
    double best = 0.0;
    bool found = false;
    for (int i = 0; i < nstep; ++i) {
        double qa = (ph[i] - theta) / (2.0 * kPi);
        double qb = (ph[i + 1] - theta) / (2.0 * kPi);
        int e0 = (int)std::floor(std::min(qa, qb));
        int e1 = (int)std::ceil(std::max(qa, qb));
        for (int e = e0; e <= e1; ++e) {
            double target = theta + 2.0 * kPi * e;
            double fa = ph[i] - target, fb = ph[i + 1] - target;
            if (fa == 0.0) fb = fa;  // endpoint root handled by bisection below
            if (fa * fb > 0.0) continue;
            // bisect inside the cell; phase variation within a cell is < pi/2,
            // so unwrapping against the cell start is safe
            double a = ts[i], b = ts[i + 1];
            double pa = ph[i];
            for (int it = 0; it < 100 && (b - a) > 1e-13 * std::max(1.0, b); ++it) {
                double mid = 0.5 * (a + b);
                double raw = phase_raw(mid);
                double pm = raw + 2.0 * kPi * std::round((pa - raw) / (2.0 * kPi));
                if ((pa - target) * (pm - target) <= 0.0) {
                    b = mid;
                } else {
                    a = mid;
                    pa = pm;
                }
            }
            double root = 0.5 * (a + b);
            if (!found || std::abs(root - center) < std::abs(best - center)) {
                best = root;
                found = true;
            }
        }
    }
    if (!found) {
        throw NoRootInWindow("no argument-matched radius in the guaranteed window");
    }
    return best;
}

FarFieldEstimate retrieve_g_twopoint(int m, double xhat_dot_d, double k, double t, double tau,
                                     const ModulusFn& modulus, const FieldFn& uH,
                                     const DiffFn& diff) {
    check_direction_modified(xhat_dot_d);
    const double gamma = k * xhat_dot_d;
    if (tau == 0.0) tau = kPi / (2.0 * k * std::abs(xhat_dot_d));
    if (std::abs(std::sin(gamma * tau)) <= 1e-6) {
        throw DegenerateTau("tau lies on the excluded lattice ell*pi/(k xhat.d)");
    }
    auto vval = [&](double r) {
        if (diff) {
            double w = weight_pow(m, r) * std::exp(k * r) * diff(r);
            return VValue{w, k * r > kAmpThreshold};
        }
        return v_function_M(m, k, r, xhat_dot_d, modulus(r), uH(r));
    };
    VValue v1 = vval(t);
    VValue v2 = vval(t + tau);
    PairSolve ps = phase_pair_solve(-gamma * t, -gamma * (t + tau), v1.value, v2.value);
    FarFieldEstimate est;
    est.coeff = {ps.f};
    est.residual = {ps.residual};
    est.radii = {t, t + tau};
    est.amplified = v1.amplified || v2.amplified;
    return est;
}

FarFieldEstimate retrieve_g_multipoint(const RetrievalPlan& plan, double xhat_dot_d,
                                       double k, double t, const ModulusFn& modulus,
                                       const FieldFn& uH, const FieldFn& uM_sub,
                                       const DiffFn& diff) {
    plan.validate();
    check_direction_modified(xhat_dot_d);
    const int n = plan.order;
    const double gamma = k * xhat_dot_d;
    double tau = (plan.tau != 0.0) ? plan.tau : kPi / (2.0 * k * std::abs(xhat_dot_d));
    if (std::abs(std::sin(gamma * tau)) <= 1e-6) {
        throw DegenerateTau("tau lies on the excluded lattice ell*pi/(k xhat.d)");
    }
    auto sig = plan.sigmas();

    // argument-matched radii: t_j near sigma_j t with arg = gamma sigma_1 t,
    // ttilde_j near sigma_j t (+tau for j=1) with arg = gamma (sigma_1 t + tau)
    std::vector<double> tj(n), ttj(n);
    for (int j = 0; j < n; ++j) {
        double center = sig[j] * t;
        tj[j] = arg_match_radii(xhat_dot_d, k, uH, gamma * sig[0] * t, center,
                                (j == 0) ? plan.min_radius : tj[j - 1] + 1.0, plan.delta);
    }
    for (int j = 0; j < n; ++j) {
        double center = sig[j] * t + ((j == 0) ? tau : 0.0);
        ttj[j] = arg_match_radii(xhat_dot_d, k, uH, gamma * (sig[0] * t + tau), center,
                                 (j == 0) ? plan.min_radius : ttj[j - 1] + 1.0, plan.delta);
    }

    bool amplified = false;
    auto wfun = [&](double r) {
        cplx uh = uH(r);
        cplx ref = std::exp(cplx(0.0, gamma * r)) + uh;
        double d;
        if (diff) {
            d = diff(r);
        } else {
            cplx refm = uM_sub ? (ref + uM_sub(r)) : ref;
            double mod = modulus(r);
            d = mod * mod - std::norm(refm);
        }
        if (k * r > kAmpThreshold) amplified = true;
        return cplx(weight_pow(plan.m, r) * std::exp(k * r) * d / std::abs(ref));
    };
    std::vector<cplx> wv(n), wvt(n);
    for (int j = 0; j < n; ++j) {
        wv[j] = wfun(tj[j]);
        wvt[j] = wfun(ttj[j]);
    }
    std::vector<cplx> G = vandermonde_solve(tj, wv);
    std::vector<cplx> Gt = vandermonde_solve(ttj, wvt);

    FarFieldEstimate est;
    est.plan = plan;
    est.radii = tj;
    est.radii.insert(est.radii.end(), ttj.begin(), ttj.end());
    est.amplified = amplified;
    for (int j = 0; j < n; ++j) {
        PairSolve ps = phase_pair_solve(-gamma * sig[0] * t, -gamma * (sig[0] * t + tau),
                                        G[j], Gt[j]);
        est.coeff.push_back(ps.f);
        est.residual.push_back(ps.residual);
    }
    return est;
}

}  // namespace bpl::retrieval
