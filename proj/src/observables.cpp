#include "qdsim/observables.hpp"

#include <cmath>
#include <stdexcept>

namespace qdsim {

QubitPairDensity reduce_to_qubits(const FullState& state, const BasisLayout& layout) {
    if (state.amplitudes.size() != layout.dim())
        throw std::invalid_argument("reduce_to_qubits: state does not match the basis layout");
    // Columns of the map are the four qubit-pair chunks of the flat state.
    Eigen::Map<const ComplexMatrix> chunks(state.amplitudes.data(), layout.fock_dim(),
                                           static_cast<Eigen::Index>(kQubitPairs.size()));
    QubitPairDensity rho = chunks.transpose() * chunks.conjugate();
    return rho;
}

QubitPairDensity pure_density(const std::array<Complex, 4>& amplitudes) {
    Eigen::Vector4cd a;
    for (int i = 0; i < 4; ++i) a(i) = amplitudes[static_cast<size_t>(i)];
    return a * a.adjoint();
}

double purity(const QubitPairDensity& rho) {
    // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
    return rho.squaredNorm();
}

double fidelity(const QubitPairDensity& rho_trans, const QubitPairDensity& rho_out) {
    return (rho_trans * rho_out).trace().real();
}

std::array<double, 4> populations(const QubitPairDensity& rho) {
    std::array<double, 4> p;
    for (int i = 0; i < 4; ++i) p[static_cast<size_t>(i)] = rho(i, i).real();
    return p;
}

StructuralClass structural_classifier(const QubitPairDensity& rho, double tol) {
    const auto p = populations(rho);
    const double ee = p[0], eg = p[1], ge = p[2], gg = p[3];
    const bool cross_balanced = std::abs(eg - ge) <= tol;
    if (cross_balanced && std::abs(ee - gg) <= tol) return StructuralClass::Str0;
    if (cross_balanced && std::abs(eg - ee) <= tol && std::abs(ge - ee) <= tol)
        return StructuralClass::Str02;
    if (cross_balanced) return StructuralClass::Str01;
    return StructuralClass::Other;
}

std::string structural_class_name(StructuralClass c) {
    switch (c) {
        case StructuralClass::Str0: return "Str0";
        case StructuralClass::Str01: return "Str01";
        case StructuralClass::Str02: return "Str02";
        case StructuralClass::Other: return "Other";
    }
    return "Other";
}

std::string observable_name(ObservableKind kind) {
    switch (kind) {
        case ObservableKind::Purity: return "purity";
        case ObservableKind::Fidelity: return "fidelity";
        case ObservableKind::PopEE: return "pop_ee";
        case ObservableKind::PopEG: return "pop_eg";
        case ObservableKind::PopGE: return "pop_ge";
        case ObservableKind::PopGG: return "pop_gg";
    }
    return "purity";
}

} // namespace qdsim
