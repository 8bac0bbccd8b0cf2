#ifndef QDSIM_SOLVERS_HPP
#define QDSIM_SOLVERS_HPP

#include <vector>

#include "qdsim/model.hpp"

namespace qdsim {

/// A nonzero Hamiltonian entry connecting two conserved-excitation sectors;
/// always indicates an assembly bug, never a physical configuration.
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One invariant sector of the Hamiltonian: the basis states sharing an
/// excitation label (photons + m * excited atoms) and the induced Hermitian
/// sub-matrix. Bulk sectors are the 4-state ladders
/// {|ee,n>, |eg,n+m>, |ge,n+m>, |gg,n+2m>}; near the vacuum and the cutoff
/// the ladders lose rungs and shrink to size 1-3.
struct HamiltonianBlock {
    long excitation = 0;
    std::vector<int> indices;  // flat basis indices, ascending
    ComplexMatrix matrix;      // Hermitian, indices.size() square
};

struct BlockDecomposition {
    std::vector<HamiltonianBlock> blocks; // ascending excitation label
    int dim = 0;
};

/// Partition the basis by the conserved excitation label and carve the
/// Hamiltonian into the induced sub-matrices. The label is computed from the
/// integer basis data (photon count, excited atoms), never from floating
/// point eigenvalues of the conserved operator. Throws StructuralError if a
/// nonzero entry of H crosses two sectors.
BlockDecomposition decompose_blocks(const ComplexMatrix& h, const BasisLayout& layout,
                                    int multiplicity);

/// Reference propagator: |psi(t)> = exp(-i H t) |psi(0)> through one full
/// Hermitian eigendecomposition, then per-time phase rotation of the
/// eigencomponents. `times` must be ascending and start at >= 0.
std::vector<FullState> evolve_reference(const ComplexMatrix& h, const FullState& psi0,
                                        const std::vector<double>& times);

/// Same contract as evolve_reference, but each invariant sector is
/// diagonalized independently (4x4 at most), so the cost per time sample is
/// linear in the number of sectors.
std::vector<FullState> evolve_block(const BlockDecomposition& blocks, const FullState& psi0,
                                    const std::vector<double>& times);

/// Which transcription of the closed-form amplitudes to use. AsPrinted keeps
/// the known defects verbatim (photon offsets fixed at +2/+4, the
/// time-carrying denominators, the coefficient asymmetries); Corrected uses
/// the exact propagator of each invariant sector. TYPO_NOTES.md maps one to
/// the other term by term.
enum class TypoPolicy { AsPrinted, Corrected };

struct AnalyticResult {
    std::vector<FullState> states;       // renormalized
    std::vector<double> norm_defects;    // 1 - |psi|^2 before renormalization
};

/// Closed-form propagation on the resonant model (both detunings zero;
/// throws std::invalid_argument otherwise). Takes the scaled time grid
/// lambda*t. States are renormalized; the pre-normalization norm defect is
/// reported per sample.
AnalyticResult evolve_analytic(const SystemConfig& cfg, const InitialStateSpec& spec,
                               const std::vector<double>& scaled_times, TypoPolicy policy);

/// Coupling of an m-photon hop out of level n:
///   coupling * sqrt((n+m)!/n!) * f(n+1)...f(n+m) = coupling * <n|A^m|n+m>.
/// This is the upper-rung coupling of the ladder starting at |ee,n>; the
/// lower rung is the same function at n+m.
double ladder_coupling(const DeformationProfile& profile, double coupling, int n, int m);

double real_expectation(const FullState& state, const ComplexMatrix& op);

} // namespace qdsim

#endif
