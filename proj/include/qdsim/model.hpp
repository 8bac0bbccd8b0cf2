#ifndef QDSIM_MODEL_HPP
#define QDSIM_MODEL_HPP

#include <array>
#include <string>

#include "qdsim/algebra.hpp"

namespace qdsim {

/// Two-qubit basis in the order ee, eg, ge, gg (atom 1 first).
enum class QubitPair : int { EE = 0, EG = 1, GE = 2, GG = 3 };

inline constexpr std::array<QubitPair, 4> kQubitPairs = {QubitPair::EE, QubitPair::EG,
                                                         QubitPair::GE, QubitPair::GG};

inline int excited_atoms(QubitPair qp) {
    switch (qp) {
        case QubitPair::EE: return 2;
        case QubitPair::EG:
        case QubitPair::GE: return 1;
        case QubitPair::GG: return 0;
    }
    return 0;
}

const char* qubit_pair_name(QubitPair qp);

/// Flat indexing of the product basis |qubit pair> x |n photons>:
/// index = pair * (n_max + 1) + n.
struct BasisLayout {
    int n_max = 0;

    int fock_dim() const { return n_max + 1; }
    int dim() const { return 4 * fock_dim(); }
    int index(QubitPair qp, int n) const { return static_cast<int>(qp) * fock_dim() + n; }
    QubitPair pair_of(int flat) const { return static_cast<QubitPair>(flat / fock_dim()); }
    int photons_of(int flat) const { return flat % fock_dim(); }
};

/// Physical parameters of the two-atom multiphoton cavity model.
///
/// The interaction couples each atomic flip to an exchange of `multiplicity`
/// photons through the deformed ladder operators. All frequencies share one
/// unit; with coupling = 1 (the default) that unit is the coupling itself and
/// the natural time axis is the scaled time lambda*t.
///
/// The default omega = atom_freq = 0 works in the frame rotating with the
/// conserved excitation operator; on resonance this removes only per-block
/// global phases, so purity and populations are unchanged by it.
struct SystemConfig {
    double omega = 0.0;                   // cavity mode frequency
    std::array<double, 2> atom_freq = {0.0, 0.0}; // atomic transition frequencies
    double coupling = 1.0;                // lambda, atom-field coupling > 0
    int multiplicity = 1;                 // photons exchanged per flip (m >= 1)
    DeformationProfile profile = DeformationProfile::identity(0);
    int n_max = 0;                        // Fock cutoff, inclusive
    Complex alpha = 0.0;                  // coherent amplitude of the field
    // Diagnostic knob: per-atom scale on the interaction term. {1,1} is the
    // physical model; {1,0} decouples atom 2 for spectrum checks.
    std::array<double, 2> coupling_scale = {1.0, 1.0};

    BasisLayout layout() const { return BasisLayout{n_max}; }
    double detuning(int atom) const { return atom_freq[static_cast<size_t>(atom)] - multiplicity * omega; }
    bool resonant(double tol = 0.0) const {
        return std::abs(detuning(0)) <= tol && std::abs(detuning(1)) <= tol;
    }

    /// Throws std::invalid_argument on structural problems (bad m, cutoff,
    /// coupling, or a profile table shorter than the cutoff).
    void validate() const;
};

/// Fock cutoff covering the coherent tail (to ~1e-12 in probability) plus
/// the m-photon exchange headroom.
int default_cutoff(double alpha_sq, int multiplicity);

/// State of the full system, amplitudes over the flat product basis.
struct FullState {
    ComplexVector amplitudes;
    double time = 0.0; // scaled time lambda*t

    double norm() const { return amplitudes.norm(); }
};

/// Atomic part of the initial state; the field part is always the coherent
/// state of SystemConfig::alpha.
struct InitialStateSpec {
    enum class Atomic { BellPsi, BellPhi, Custom };

    Atomic atomic = Atomic::BellPsi;
    std::array<Complex, 4> custom = {1.0, 0.0, 0.0, 0.0}; // used when atomic == Custom

    static InitialStateSpec bell_psi() { return {Atomic::BellPsi, {}}; }
    static InitialStateSpec bell_phi() { return {Atomic::BellPhi, {}}; }
    static InitialStateSpec custom_state(const std::array<Complex, 4>& a) {
        return {Atomic::Custom, a};
    }

    /// Amplitudes (a_ee, a_eg, a_ge, a_gg); validates normalization for Custom.
    std::array<Complex, 4> atomic_amplitudes() const;
};

/// Raised when the Fock cutoff cannot hold the coherent tail.
class CutoffError : public std::runtime_error {
public:
    CutoffError(double deficit, int required)
        : std::runtime_error("Fock cutoff too small: truncation deficit " +
                             std::to_string(deficit) + "; need n_max >= " +
                             std::to_string(required)),
          deficit_(deficit), required_n_max_(required) {}
    double deficit() const { return deficit_; }
    int required_n_max() const { return required_n_max_; }

private:
    double deficit_;
    int required_n_max_;
};

/// Coherent-state expansion coefficients Q_0..Q_n_max for amplitude alpha,
/// computed by the stable recurrence Q_n = Q_{n-1} alpha / sqrt(n).
ComplexVector coherent_weights(Complex alpha, int n_max);

struct InitialState {
    FullState state;
    double truncation_deficit = 0.0; // probability mass lost to the cutoff
};

/// Atomic state tensor coherent field on the truncated basis, renormalized.
/// Throws CutoffError when the truncation deficit exceeds the fail threshold.
InitialState build_initial_state(const InitialStateSpec& spec, const SystemConfig& cfg);

/// 4x4 two-qubit operators in the ee, eg, ge, gg basis. The inversion
/// operators have eigenvalues +-1, so the atomic energy term is freq/2 * s_z.
ComplexMatrix qubit_sz(int atom);
ComplexMatrix qubit_raise(int atom);
ComplexMatrix qubit_lower(int atom);

/// Full Hamiltonian on the product basis:
///   omega A^dag A  +  sum_i freq_i/2 s_z(i)
///   + coupling * sum_i (s_+(i) A^m + s_-(i) A^dag^m).
/// Hermitian by construction (the lowering term is the exact adjoint of the
/// raising term).
ComplexMatrix build_hamiltonian(const SystemConfig& cfg);

/// Conserved excitation operator n + (m/2) (s_z(1) + s_z(2)); diagonal in
/// the product basis and commuting with the Hamiltonian for every profile.
/// (The variant with the deformed photon number n f^2(n) in place of n is
/// conserved only in the undeformed limit.)
ComplexMatrix constant_of_motion(const SystemConfig& cfg);

/// Diagnostic: max entry of | i[H, s_z(1)] - 2 i coupling (s_-(1) A^dag^m -
/// s_+(1) A^m) | over the truncation-safe sub-block (photon index
/// <= n_max - 2m). Zero up to rounding when the assembly is correct.
double heisenberg_residual(const SystemConfig& cfg);

} // namespace qdsim

#endif
