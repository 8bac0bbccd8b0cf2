#ifndef QDSIM_OBSERVABLES_HPP
#define QDSIM_OBSERVABLES_HPP

#include <array>
#include <string>
#include <vector>

#include "qdsim/model.hpp"

namespace qdsim {

/// Reduced state of the qubit pair (basis order ee, eg, ge, gg):
/// Hermitian, unit trace, positive semidefinite.
using QubitPairDensity = Eigen::Matrix4cd;

/// Partial trace over the field: rho[qp, qp'] = sum_n psi(qp,n) psi*(qp',n).
QubitPairDensity reduce_to_qubits(const FullState& state, const BasisLayout& layout);

/// |a><a| of the atomic amplitudes; the transmitted state of the fidelity.
QubitPairDensity pure_density(const std::array<Complex, 4>& amplitudes);

/// Tr(rho^2), in [1/4, 1] for a unit-trace 4x4 density.
double purity(const QubitPairDensity& rho);

/// Tr(rho_trans rho_out); equals <trans|rho_out|trans> for pure rho_trans.
double fidelity(const QubitPairDensity& rho_trans, const QubitPairDensity& rho_out);

/// The diagonal (P_ee, P_eg, P_ge, P_gg); sums to the trace.
std::array<double, 4> populations(const QubitPairDensity& rho);

/// Population patterns of the entangled atomic families the dynamics
/// revisits. Tested in priority order Str0, Str02, Str01 so that the
/// stronger patterns claim the overlaps:
///   Str0  -- P_eg = P_ge and P_ee = P_gg     (within tol)
///   Str02 -- P_eg = P_ge = P_ee              (within tol)
///   Str01 -- P_eg = P_ge only
/// A population-level diagnostic: relative phases are not inspected.
enum class StructuralClass { Str0, Str01, Str02, Other };

StructuralClass structural_classifier(const QubitPairDensity& rho, double tol);

std::string structural_class_name(StructuralClass c);

enum class ObservableKind { Purity, Fidelity, PopEE, PopEG, PopGE, PopGG };

/// Short stable name used in CSV headers and CLI flags.
std::string observable_name(ObservableKind kind);

/// One observable sampled on the scaled time axis lambda*t.
struct ObservableSeries {
    ObservableKind kind = ObservableKind::Purity;
    std::vector<double> times;
    std::vector<double> values;
};

} // namespace qdsim

#endif
