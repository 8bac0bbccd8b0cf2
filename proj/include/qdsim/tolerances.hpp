#ifndef QDSIM_TOLERANCES_HPP
#define QDSIM_TOLERANCES_HPP

namespace qdsim {

/// Central numerical tolerances. Every identity check, solver cross-check and
/// output validation in the library pins its threshold here.
struct Tolerances {
    double hermiticity = 1e-12;         // max |H - H^dag| entry
    double commutator_identity = 1e-12; // ladder/number commutator identities
    double conserved_commutator = 1e-10; // [M,H] on the truncation-safe sub-block
    double heisenberg_identity = 1e-10; // equation-of-motion residual
    double norm_drift = 1e-9;           // |norm - 1| along a trajectory
    double expectation_drift = 1e-8;    // <M>, <H> drift along a trajectory
    double solver_equivalence = 1e-8;   // block vs reference, max amplitude deviation
    double density_hermiticity = 1e-12; // reduced density matrix
    double density_trace = 1e-10;       // |tr(rho) - 1|
    double density_negativity = 1e-10;  // tolerated negative eigenvalue magnitude
    double population_symmetry = 1e-10; // P_eg vs P_ge for swap-symmetric inputs
    double initial_observable = 1e-10;  // purity/fidelity at t = 0
    double state_normalization = 1e-12; // sum |a_i|^2 for atomic amplitudes
    double truncation_warn = 1e-9;      // coherent-tail deficit considered clean
    double truncation_fail = 1e-6;      // coherent-tail deficit that aborts a run
    double output_clamp = 1e-12;        // FP guard when clamping observables to [0,1]
    // Calibrated against the block solver with cutoff >= 60 at mean photon
    // number 10; the corrected closed form is exact, so only the coherent
    // tail beyond the cutoff contributes.
    double analytic_corrected = 1e-8;
    double structural_default = 0.02;   // population-pattern classifier, figure scale
};

inline const Tolerances& tol() {
    static const Tolerances t{};
    return t;
}

} // namespace qdsim

#endif
