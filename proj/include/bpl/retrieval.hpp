#ifndef BPL_RETRIEVAL_HPP
#define BPL_RETRIEVAL_HPP

#include <complex>
#include <functional>
#include <vector>

namespace bpl::retrieval {

using cplx = std::complex<double>;

/// |u| along a ray, as a function of the radius.
using ModulusFn = std::function<double(double)>;
/// u_H along a ray (ground truth or reconstructed), as a function of radius.
using FieldFn = std::function<cplx(double)>;
/// |u(r)|^2 - |e^{ikr xhat.d} + u_H(r)|^2 computed externally. Oracle tests
/// synthesize this from phased references, bypassing the catastrophic
/// cancellation of the modulus-squared subtraction.
using DiffFn = std::function<double(double)>;

/// Free parameters of the multipoint formulas.
struct RetrievalPlan {
    int order = 1;                 // n >= 1
    int m = 2;                     // dimension
    double tau = 0.0;              // phase-shift radius offset; 0 = pick default
    double delta = 0.5;            // search half-width slack for argument matching
    double min_radius = 1.5;       // argument-matching windows are clipped below this
    std::vector<double> sigma;     // empty = integers 1..n

    void validate() const;
    std::vector<double> sigmas() const;  // resolved scale factors
};

/// Phaseless measurements along one observation direction.
struct RaySampleSet {
    double xhat_dot_d = 0.0;
    std::vector<double> radii;
    std::vector<double> moduli;

    /// radii strictly increasing and above the obstacle radius
    void validate(double obstacle_radius) const;
};

/// Recovered expansion coefficients along one direction.
struct FarFieldEstimate {
    std::vector<cplx> coeff;        // f_1..f_n or g_1..g_n
    std::vector<double> residual;   // conjugate-pair residual per j
    std::vector<double> radii;      // radii actually sampled
    bool amplified = false;         // e^{-k t} dropped below 1e-10 somewhere
    RetrievalPlan plan;             // echo of the plan that produced this
};

/// Solve sum_l c_l / t_j^{l-1} = v_j for c (Bjorck-Pereyra dual elimination
/// on the nodes 1/t_j). Nodes must be separated by > 1e-9 * max node.
std::vector<cplx> vandermonde_solve(const std::vector<double>& nodes,
                                    const std::vector<cplx>& values);

/// Solve f e^{i th_l} + conj(f) e^{-i th_l} = W_l for l = 1,2.
/// residual = |second unknown - conj(first)| from the unconstrained solve;
/// nonzero only when the data are inconsistent (noise).
struct PairSolve {
    cplx f;
    double residual;
};
PairSolve phase_pair_solve(double th1, double th2, cplx W1, cplx W2);

/// Radii lattice for the Helmholtz-part formulas. With
/// Delta = 2 pi / (k (1 - xhat.d)) and integer scale factors sigma_j = j,
/// t_j = sigma_j * L * Delta satisfies the congruence t_j - t_1 in
/// 2 pi Z / (k(1 - xhat.d)) exactly at every level L.
struct HelmholtzGrid {
    std::vector<double> t;       // t_1..t_n
    std::vector<double> ttilde;  // t_j + tau
    double spacing = 0.0;        // Delta
    double tau = 0.0;
};
HelmholtzGrid grid_helmholtz(const RetrievalPlan& plan, double xhat_dot_d, double k, int level);

/// Retrieval formulas. All take the modulus accessor for the ray.
FarFieldEstimate retrieve_f_3d(const RetrievalPlan& plan, double xhat_dot_d, double k,
                               int level, const ModulusFn& modulus);

FarFieldEstimate retrieve_f_2d_twopoint(double xhat_dot_d, double k, double t, double tau,
                                        const ModulusFn& modulus);

FarFieldEstimate retrieve_f_2d_revised(double xhat_dot_d, double k, double t, double tau,
                                       const ModulusFn& modulus);

FarFieldEstimate retrieve_f_2d_recursive(const RetrievalPlan& plan, double xhat_dot_d,
                                         double k, int level, const ModulusFn& modulus);

/// Weighted phaseless difference
///   v = |x|^{(m-1)/2} e^{k|x|} (|u|^2 - |e^{ik x.d} + u_H|^2).
/// Sets the amplified flag once e^{-k|x|} < 1e-10 (round-off regime).
struct VValue {
    double value;
    bool amplified;
};
VValue v_function_M(int m, double k, double r, double xhat_dot_d,
                    double modulus, cplx uH_value);

/// Find t near `center` with arg{e^{ikt xhat.d} + u_H(t)} = theta (mod 2pi).
/// Scans with 2pi-jump tracking at step min(0.1, pi/(4k)) and bisects over
/// [max(lo_limit, center - period/2 - delta), center + period + delta],
/// period = 2 pi/(k |xhat.d|). Among the roots in the window the one
/// closest to `center` is returned.
double arg_match_radii(double xhat_dot_d, double k, const FieldFn& uH,
                       double theta, double center, double lo_limit, double delta);

FarFieldEstimate retrieve_g_twopoint(int m, double xhat_dot_d, double k, double t, double tau,
                                     const ModulusFn& modulus, const FieldFn& uH,
                                     const DiffFn& diff = nullptr);

/// Multipoint modified-part retrieval with argument-matched radii
/// t_j ~ sigma_j t. uM_sub, when set, is subtracted from the reference
/// inside the data weight, so the retrieval targets the far field of
/// (u_M - uM_sub); used by the pipeline's defect-correction stage.
FarFieldEstimate retrieve_g_multipoint(const RetrievalPlan& plan, double xhat_dot_d,
                                       double k, double t, const ModulusFn& modulus,
                                       const FieldFn& uH,
                                       const FieldFn& uM_sub = nullptr,
                                       const DiffFn& diff = nullptr);

}  // namespace bpl::retrieval

#endif
