#include <doctest.h>

#include "qdsim/observables.hpp"
#include "qdsim/solvers.hpp"
#include "qdsim/tolerances.hpp"

#include <cmath>

using namespace qdsim;

namespace {

SystemConfig make_config(double q, int m, double alpha_sq, int n_max) {
    SystemConfig cfg;
    cfg.multiplicity = m;
    cfg.n_max = n_max;
    cfg.alpha = std::sqrt(alpha_sq);
    cfg.profile = q < 0.0 ? DeformationProfile::identity(n_max + 2 * m)
                          : DeformationProfile::q_box(q, n_max + 2 * m);
    return cfg;
}

FullState evolved_state(const SystemConfig& cfg, const InitialStateSpec& spec, double t) {
    const ComplexMatrix h = build_hamiltonian(cfg);
    const auto psi0 = build_initial_state(spec, cfg).state;
    const auto dec = decompose_blocks(h, cfg.layout(), cfg.multiplicity);
    return evolve_block(dec, psi0, {t}).front();
}

QubitPairDensity diag_density(double ee, double eg, double ge, double gg) {
    QubitPairDensity rho = QubitPairDensity::Zero();
    rho(0, 0) = ee;
    rho(1, 1) = eg;
    rho(2, 2) = ge;
    rho(3, 3) = gg;
    return rho;
}

} // namespace

TEST_CASE("reduction of a product state is the pure atomic projector") {
    auto cfg = make_config(-1.0, 1, 10.0, 38);
    const auto init = build_initial_state(InitialStateSpec::bell_psi(), cfg);
    const QubitPairDensity rho = reduce_to_qubits(init.state, cfg.layout());

    const QubitPairDensity expected =
        pure_density(InitialStateSpec::bell_psi().atomic_amplitudes());
    CHECK((rho - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(rho.trace().real() - 1.0) < tol().density_trace);
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < tol().density_hermiticity);

    // a bare basis state reduces to a diagonal projector
    FullState basis;
    basis.amplitudes = ComplexVector::Zero(cfg.layout().dim());
    basis.amplitudes(cfg.layout().index(QubitPair::EE, 0)) = 1.0;
    const QubitPairDensity pe = reduce_to_qubits(basis, cfg.layout());
    CHECK((pe - diag_density(1, 0, 0, 0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("reduced density stays physical along a trajectory") {
    auto cfg = make_config(0.5, 2, 10.0, 40);
    for (double t : {0.7, 3.0, 11.0}) {
        const auto state = evolved_state(cfg, InitialStateSpec::bell_phi(), t);
        const QubitPairDensity rho = reduce_to_qubits(state, cfg.layout());
        CHECK(std::abs(rho.trace().real() - 1.0) < tol().density_trace);
        CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < tol().density_hermiticity);
        Eigen::SelfAdjointEigenSolver<QubitPairDensity> es(rho);
        CHECK(es.eigenvalues().minCoeff() > -tol().density_negativity);

        // purity equals the eigenvalue sum of squares (independent route)
        const double from_eigs = es.eigenvalues().array().square().sum();
        CHECK(purity(rho) == doctest::Approx(from_eigs).epsilon(1e-10));
        CHECK(purity(rho) > 0.25 - 1e-12);
        CHECK(purity(rho) < 1.0 + 1e-12);
        CHECK(purity(rho) >=
              es.eigenvalues().maxCoeff() * es.eigenvalues().maxCoeff() - 1e-12);
    }
}

TEST_CASE("purity endpoints") {
    CHECK(purity(pure_density(InitialStateSpec::bell_psi().atomic_amplitudes())) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(purity(diag_density(0.25, 0.25, 0.25, 0.25)) ==
          doctest::Approx(0.25).epsilon(1e-14));
    CHECK(purity(diag_density(0.5, 0.5, 0.0, 0.0)) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("fidelity against the transmitted state") {
    const auto psi = pure_density(InitialStateSpec::bell_psi().atomic_amplitudes());
    const auto phi = pure_density(InitialStateSpec::bell_phi().atomic_amplitudes());
    CHECK(fidelity(psi, psi) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fidelity(psi, phi) == doctest::Approx(0.0).scale(1).epsilon(1e-14));
    CHECK(fidelity(psi, diag_density(0.25, 0.25, 0.25, 0.25)) ==
          doctest::Approx(0.25).epsilon(1e-14));

    // for a pure transmitted state, Tr(rho_t rho) = <t|rho|t>
    auto cfg = make_config(0.9, 1, 10.0, 38);
    const auto state = evolved_state(cfg, InitialStateSpec::bell_psi(), 4.2);
    const QubitPairDensity rho = reduce_to_qubits(state, cfg.layout());
    const auto amps = InitialStateSpec::bell_psi().atomic_amplitudes();
    Eigen::Vector4cd t;
    t << amps[0], amps[1], amps[2], amps[3];
    const double direct = (t.adjoint() * rho * t)(0).real();
    CHECK(fidelity(psi, rho) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(std::abs((psi * rho).trace().imag()) < 1e-12);
}

TEST_CASE("populations are the diagonal in ee, eg, ge, gg order") {
    const auto psi_pop =
        populations(pure_density(InitialStateSpec::bell_psi().atomic_amplitudes()));
    CHECK(psi_pop[0] == doctest::Approx(0.0).scale(1));
    CHECK(psi_pop[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(psi_pop[2] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(psi_pop[3] == doctest::Approx(0.0).scale(1));

    const auto phi_pop =
        populations(pure_density(InitialStateSpec::bell_phi().atomic_amplitudes()));
    CHECK(phi_pop[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(phi_pop[3] == doctest::Approx(0.5).epsilon(1e-14));

    auto cfg = make_config(0.5, 1, 10.0, 38);
    const auto state = evolved_state(cfg, InitialStateSpec::bell_phi(), 6.0);
    const auto pop = populations(reduce_to_qubits(state, cfg.layout()));
    CHECK(pop[0] + pop[1] + pop[2] + pop[3] == doctest::Approx(1.0).epsilon(1e-10));
    for (double p : pop) CHECK(p > -1e-12);
}

TEST_CASE("symmetric dynamics keeps the eg/ge populations locked") {
    // swap matrix exchanging the two atoms: ee<->ee, eg<->ge, gg<->gg
    QubitPairDensity swap = QubitPairDensity::Zero();
    swap(0, 0) = 1.0;
    swap(1, 2) = 1.0;
    swap(2, 1) = 1.0;
    swap(3, 3) = 1.0;

    for (auto spec : {InitialStateSpec::bell_psi(), InitialStateSpec::bell_phi()}) {
        auto cfg = make_config(0.9, 2, 10.0, 40);
        for (double t : {1.3, 7.7}) {
            const auto state = evolved_state(cfg, spec, t);
            const QubitPairDensity rho = reduce_to_qubits(state, cfg.layout());
            CHECK((rho - QubitPairDensity(swap * rho * swap)).cwiseAbs().maxCoeff() <
                  tol().population_symmetry);
            const auto pop = populations(rho);
            CHECK(std::abs(pop[1] - pop[2]) < tol().population_symmetry);
        }
    }
}

TEST_CASE("structural classifier patterns and priority") {
    const double eps = 1e-6;
    CHECK(structural_classifier(diag_density(0.2, 0.3, 0.3, 0.2), eps) ==
          StructuralClass::Str0);
    CHECK(structural_classifier(diag_density(0.25, 0.25, 0.25, 0.25), eps) ==
          StructuralClass::Str0); // Str0 wins over Str02 on full ties
    CHECK(structural_classifier(diag_density(0.2, 0.2, 0.2, 0.4), eps) ==
          StructuralClass::Str02);
    CHECK(structural_classifier(diag_density(0.1, 0.3, 0.3, 0.3), eps) ==
          StructuralClass::Str01);
    CHECK(structural_classifier(diag_density(0.1, 0.2, 0.5, 0.2), eps) ==
          StructuralClass::Other);
    // tolerance widens the match
    CHECK(structural_classifier(diag_density(0.2, 0.3, 0.31, 0.19), 0.02) ==
          StructuralClass::Str0);
    CHECK(structural_classifier(diag_density(0.2, 0.3, 0.31, 0.19), 1e-6) ==
          StructuralClass::Other);

    CHECK(structural_class_name(StructuralClass::Str0) == "Str0");
    CHECK(structural_class_name(StructuralClass::Str01) == "Str01");
    CHECK(structural_class_name(StructuralClass::Str02) == "Str02");
    CHECK(structural_class_name(StructuralClass::Other) == "Other");
}

TEST_CASE("observable names are stable") {
    CHECK(observable_name(ObservableKind::Purity) == "purity");
    CHECK(observable_name(ObservableKind::Fidelity) == "fidelity");
    CHECK(observable_name(ObservableKind::PopEE) == "pop_ee");
    CHECK(observable_name(ObservableKind::PopEG) == "pop_eg");
    CHECK(observable_name(ObservableKind::PopGE) == "pop_ge");
    CHECK(observable_name(ObservableKind::PopGG) == "pop_gg");
}
