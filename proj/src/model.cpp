#include "qdsim/model.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "qdsim/tolerances.hpp"

namespace qdsim {

const char* qubit_pair_name(QubitPair qp) {
    switch (qp) {
        case QubitPair::EE: return "ee";
        case QubitPair::EG: return "eg";
        case QubitPair::GE: return "ge";
        case QubitPair::GG: return "gg";
    }
    return "?";
}

void SystemConfig::validate() const {
    if (multiplicity < 1) throw std::invalid_argument("config: multiplicity m must be >= 1");
    if (n_max < 1) throw std::invalid_argument("config: n_max must be >= 1");
    if (coupling < 0.0) throw std::invalid_argument("config: coupling must be >= 0");
    if (profile.n_max() < n_max)
        throw std::invalid_argument("config: deformation table shorter than the Fock cutoff");
    if (coupling_scale[0] < 0.0 || coupling_scale[1] < 0.0)
        throw std::invalid_argument("config: coupling_scale must be >= 0");
}

int default_cutoff(double alpha_sq, int multiplicity) {
    if (alpha_sq < 0.0) throw std::invalid_argument("default_cutoff: negative |alpha|^2");
    const double bound = alpha_sq + 8.0 * std::sqrt(alpha_sq) + 2.0 * multiplicity;
    return std::max(1, static_cast<int>(std::ceil(bound)));
}

std::array<Complex, 4> InitialStateSpec::atomic_amplitudes() const {
    const double s = 1.0 / std::sqrt(2.0);
    switch (atomic) {
        case Atomic::BellPsi: return {0.0, s, s, 0.0};
        case Atomic::BellPhi: return {s, 0.0, 0.0, s};
        case Atomic::Custom: {
            double norm_sq = 0.0;
            for (const auto& a : custom) norm_sq += std::norm(a);
            if (std::abs(norm_sq - 1.0) > tol().state_normalization)
                throw std::invalid_argument("initial state: custom amplitudes not normalized");
            return custom;
        }
    }
    return {1.0, 0.0, 0.0, 0.0};
}

ComplexVector coherent_weights(Complex alpha, int n_max) {
    if (n_max < 0) throw std::invalid_argument("coherent_weights: n_max must be >= 0");
    ComplexVector q(n_max + 1);
    q(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= n_max; ++n) q(n) = q(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return q;
}

InitialState build_initial_state(const InitialStateSpec& spec, const SystemConfig& cfg) {
    cfg.validate();
    const auto atomic = spec.atomic_amplitudes();
    const BasisLayout layout = cfg.layout();
    const ComplexVector weights = coherent_weights(cfg.alpha, cfg.n_max);

    FullState state;
    state.amplitudes = ComplexVector::Zero(layout.dim());
    state.time = 0.0;
    for (QubitPair qp : kQubitPairs)
        for (int n = 0; n <= cfg.n_max; ++n)
            state.amplitudes(layout.index(qp, n)) = atomic[static_cast<size_t>(qp)] * weights(n);

    const double captured = state.amplitudes.squaredNorm();
    const double deficit = 1.0 - captured;
    if (deficit > tol().truncation_fail)
        throw CutoffError(deficit, default_cutoff(std::norm(cfg.alpha), cfg.multiplicity));
    state.amplitudes /= std::sqrt(captured);
    return {std::move(state), deficit};
}

ComplexMatrix qubit_sz(int atom) {
    Eigen::Vector4cd d;
    d << 1.0, (atom == 0 ? 1.0 : -1.0), (atom == 0 ? -1.0 : 1.0), -1.0;
    return d.asDiagonal();
}

ComplexMatrix qubit_raise(int atom) {
    ComplexMatrix s = ComplexMatrix::Zero(4, 4);
    if (atom == 0) {
        s(static_cast<int>(QubitPair::EE), static_cast<int>(QubitPair::GE)) = 1.0;
        s(static_cast<int>(QubitPair::EG), static_cast<int>(QubitPair::GG)) = 1.0;
    } else {
        s(static_cast<int>(QubitPair::EE), static_cast<int>(QubitPair::EG)) = 1.0;
        s(static_cast<int>(QubitPair::GE), static_cast<int>(QubitPair::GG)) = 1.0;
    }
    return s;
}

ComplexMatrix qubit_lower(int atom) { return qubit_raise(atom).adjoint(); }

namespace {

ComplexMatrix ladder_power(const ComplexMatrix& a, int m) {
    ComplexMatrix p = ComplexMatrix::Identity(a.rows(), a.cols());
    for (int k = 0; k < m; ++k) p = p * a;
    return p;
}

} // namespace

ComplexMatrix build_hamiltonian(const SystemConfig& cfg) {
    cfg.validate();
    const int fock = cfg.n_max + 1;
    const ComplexMatrix eye4 = ComplexMatrix::Identity(4, 4);
    const ComplexMatrix eye_f = ComplexMatrix::Identity(fock, fock);

    const ComplexMatrix a_m = ladder_power(deformed_annihilator(cfg.profile, fock), cfg.multiplicity);
    const ComplexMatrix a_dag_m = a_m.adjoint();

    ComplexMatrix h = Eigen::kroneckerProduct(eye4, deformed_number_operator(cfg.profile, fock)).eval() * cfg.omega;
    for (int atom = 0; atom < 2; ++atom) {
        h += 0.5 * cfg.atom_freq[static_cast<size_t>(atom)] *
             Eigen::kroneckerProduct(qubit_sz(atom), eye_f);
        const double g = cfg.coupling * cfg.coupling_scale[static_cast<size_t>(atom)];
        h += g * Eigen::kroneckerProduct(qubit_raise(atom), a_m);
        h += g * Eigen::kroneckerProduct(qubit_lower(atom), a_dag_m);
    }
    return h;
}

ComplexMatrix constant_of_motion(const SystemConfig& cfg) {
    cfg.validate();
    const int fock = cfg.n_max + 1;
    // The bare photon number enters here, not A^dag A: the interaction shifts
    // n by exactly m per flip whatever the deformation, so n + (m/2)(Sz1+Sz2)
    // commutes with H for every profile. The deformed A^dag A = n f^2(n)
    // commutes with the m-photon exchange only in the undeformed limit.
    ComplexMatrix m = Eigen::kroneckerProduct(ComplexMatrix::Identity(4, 4),
                                              number_operator(fock))
                          .eval();
    const ComplexMatrix sz_sum = qubit_sz(0) + qubit_sz(1);
    m += 0.5 * cfg.multiplicity * Eigen::kroneckerProduct(sz_sum, ComplexMatrix::Identity(fock, fock));
    return m;
}

double heisenberg_residual(const SystemConfig& cfg) {
    const ComplexMatrix h = build_hamiltonian(cfg);
    const BasisLayout layout = cfg.layout();
    const int fock = layout.fock_dim();
    const ComplexMatrix eye_f = ComplexMatrix::Identity(fock, fock);
    const ComplexMatrix a_m = ladder_power(deformed_annihilator(cfg.profile, fock), cfg.multiplicity);

    const ComplexMatrix sz1 = Eigen::kroneckerProduct(qubit_sz(0), eye_f);
    const ComplexMatrix raise1 = Eigen::kroneckerProduct(qubit_raise(0), a_m);
    const ComplexMatrix lower1 = Eigen::kroneckerProduct(qubit_lower(0), a_m.adjoint());

    const Complex i_unit(0.0, 1.0);
    const double g = cfg.coupling * cfg.coupling_scale[0];
    const ComplexMatrix lhs = i_unit * (h * sz1 - sz1 * h);
    const ComplexMatrix rhs = 2.0 * i_unit * g * (lower1 - raise1);
    const ComplexMatrix diff = lhs - rhs;

    const int safe_photons = cfg.n_max - 2 * cfg.multiplicity;
    double worst = 0.0;
    for (int i = 0; i < layout.dim(); ++i) {
        if (layout.photons_of(i) > safe_photons) continue;
        for (int j = 0; j < layout.dim(); ++j) {
            if (layout.photons_of(j) > safe_photons) continue;
            worst = std::max(worst, std::abs(diff(i, j)));
        }
    }
    return worst;
}

} // namespace qdsim
