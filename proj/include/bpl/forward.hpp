#ifndef BPL_FORWARD_HPP
#define BPL_FORWARD_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace bpl::forward {

using cplx = std::complex<double>;

/// Point in R^2 or R^3; 2D scenes use the first two components.
using Vec = std::array<double, 3>;

double dot(int m, const Vec& a, const Vec& b);
double norm(int m, const Vec& v);
Vec normalized(int m, const Vec& v);

/// The six admissible boundary-operator pairs. Each trace is one of
/// u, d_nu u, Lap u, d_nu Lap u evaluated on the obstacle boundary.
enum class BoundaryCondition {
    DirichletPair,  // (u, d_nu u)
    NavierPair,     // (u, Lap u)
    NeumannPair,    // (Lap u, d_nu Lap u)
    MixedA,         // (u, d_nu Lap u)
    MixedB,         // (d_nu u, Lap u)
    MixedC,         // (d_nu u, d_nu Lap u)
};

std::string to_string(BoundaryCondition bc);
BoundaryCondition bc_from_string(const std::string& s);

/// Disk (m=2) or sphere (m=3) of radius a centered at the origin,
/// illuminated by the plane wave e^{ik x.d}.
struct Scene {
    int m = 2;
    double k = 1.0;
    double a = 1.0;
    BoundaryCondition bc = BoundaryCondition::DirichletPair;
    Vec d = {1.0, 0.0, 0.0};

    void validate() const;  // throws DomainError on violation
};

/// One 2x2 mode system: columns are the boundary traces of the Helmholtz
/// and modified-Helmholtz radiating modes, rhs is minus the incident trace.
struct ModeSystem {
    cplx M[2][2];
    cplx rhs[2];
};

ModeSystem assemble_mode_system(int n, const Scene& scene);

/// Per-mode coefficients of the scattered field. 2D stores n = 0..N with
/// the symmetric convention alpha_{-n} = alpha_n (incident direction rotated
/// onto the polar axis); 3D stores the axisymmetric Legendre ladder.
class ModalSolution {
public:
    Scene scene;
    int truncation = 0;
    std::vector<cplx> alphaH;  // index n in [0, truncation]
    std::vector<cplx> alphaM;

    /// max_n (|alphaH_n| + |alphaM_n|)
    double coeff_scale() const;
};

ModalSolution solve_modes(const Scene& scene);

struct FieldValue {
    Vec x;
    cplx uH;
    cplx uM;
    cplx uInc;
    cplx uTotal;
};

FieldValue eval_field(const ModalSolution& sol, const Vec& x);

/// Convenience: field parts at radius r along a ray with cos(angle to d)
/// equal to cth. Faster than eval_field in per-ray sweeps.
struct RayValue {
    cplx uH;
    cplx uM;
    cplx uInc;
};
RayValue eval_ray(const ModalSolution& sol, double r, double cth);

/// Boundary traces (value, radial derivative) of each field part at r = a,
/// used by the boundary-residual checks.
struct BoundaryTrace {
    cplx uH, duH;
    cplx uM, duM;
    cplx uInc, duInc;
};
BoundaryTrace boundary_trace(const ModalSolution& sol, double cth);

struct FarField {
    cplx H;
    cplx M;
};

FarField far_field(const ModalSolution& sol, const Vec& xhat);
FarField far_field_cth(const ModalSolution& sol, double cth);

/// Atkinson coefficients f_1..f_J (Helmholtz part) and g_1..g_J (modified
/// part) of the scattered-field expansion along the direction xhat.
/// f_1 and g_1 coincide with the far-field pattern.
struct AtkinsonCoeffs {
    std::vector<cplx> f;
    std::vector<cplx> g;
};

AtkinsonCoeffs atkinson_ground_truth(const ModalSolution& sol, const Vec& xhat, int J);
AtkinsonCoeffs atkinson_ground_truth_cth(const ModalSolution& sol, double cth, int J);

/// Phaseless samples |u|(1 + noise*xi), xi ~ U[-1,1], deterministic in seed.
std::vector<double> sample_phaseless(const ModalSolution& sol,
                                     const std::vector<Vec>& points,
                                     double noise,
                                     std::uint64_t seed);

}  // namespace bpl::forward

#endif
