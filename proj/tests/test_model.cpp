#include <doctest.h>

#include "qdsim/model.hpp"
#include "qdsim/tolerances.hpp"

#include <cmath>
#include <complex>

using namespace qdsim;

namespace {

SystemConfig make_config(double q, int m, double alpha_sq, int n_max,
                         double omega = 0.0, double freq1 = 0.0, double freq2 = 0.0,
                         double coupling = 1.0) {
    SystemConfig cfg;
    cfg.omega = omega;
    cfg.atom_freq = {freq1, freq2};
    cfg.coupling = coupling;
    cfg.multiplicity = m;
    cfg.n_max = n_max;
    cfg.alpha = std::sqrt(alpha_sq);
    cfg.profile = q < 0.0 ? DeformationProfile::identity(n_max + 2 * m)
                          : DeformationProfile::q_box(q, n_max + 2 * m);
    return cfg;
}

// Element-by-element Hamiltonian written from scratch: diagonal field and
// atomic energies, plus the m-photon exchange entries placed by hand.
ComplexMatrix oracle_hamiltonian(const SystemConfig& cfg) {
    const BasisLayout layout = cfg.layout();
    const int m = cfg.multiplicity;
    ComplexMatrix h = ComplexMatrix::Zero(layout.dim(), layout.dim());

    auto idx = [&](QubitPair qp, int n) { return layout.index(qp, n); };
    auto sz_sum = [](QubitPair qp) {
        switch (qp) {
            case QubitPair::EE: return std::array<int, 2>{1, 1};
            case QubitPair::EG: return std::array<int, 2>{1, -1};
            case QubitPair::GE: return std::array<int, 2>{-1, 1};
            default: return std::array<int, 2>{-1, -1};
        }
    };
    for (QubitPair qp : kQubitPairs)
        for (int n = 0; n <= cfg.n_max; ++n) {
            const double f = cfg.profile.value(n);
            const auto s = sz_sum(qp);
            h(idx(qp, n), idx(qp, n)) = cfg.omega * n * f * f +
                                        0.5 * cfg.atom_freq[0] * s[0] +
                                        0.5 * cfg.atom_freq[1] * s[1];
        }

    auto hop = [&](int n) { // <n| A^m |n+m>
        double v = 1.0;
        for (int k = 1; k <= m; ++k) v *= std::sqrt(double(n + k)) * cfg.profile.value(n + k);
        return v;
    };
    for (int n = 0; n + m <= cfg.n_max; ++n) {
        const double g1 = cfg.coupling * cfg.coupling_scale[0] * hop(n);
        const double g2 = cfg.coupling * cfg.coupling_scale[1] * hop(n);
        // atom 1 flip: |gg,n+m> <-> |eg,n>, |ge,n+m> <-> |ee,n>
        h(idx(QubitPair::EG, n), idx(QubitPair::GG, n + m)) += g1;
        h(idx(QubitPair::GG, n + m), idx(QubitPair::EG, n)) += g1;
        h(idx(QubitPair::EE, n), idx(QubitPair::GE, n + m)) += g1;
        h(idx(QubitPair::GE, n + m), idx(QubitPair::EE, n)) += g1;
        // atom 2 flip: |eg,n+m> <-> |ee,n>, |gg,n+m> <-> |ge,n>
        h(idx(QubitPair::EE, n), idx(QubitPair::EG, n + m)) += g2;
        h(idx(QubitPair::EG, n + m), idx(QubitPair::EE, n)) += g2;
        h(idx(QubitPair::GE, n), idx(QubitPair::GG, n + m)) += g2;
        h(idx(QubitPair::GG, n + m), idx(QubitPair::GE, n)) += g2;
    }
    return h;
}

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("basis layout round-trips") {
    const BasisLayout layout{7};
    CHECK(layout.fock_dim() == 8);
    CHECK(layout.dim() == 32);
    int seen = 0;
    for (QubitPair qp : kQubitPairs)
        for (int n = 0; n <= 7; ++n) {
            const int flat = layout.index(qp, n);
            CHECK(flat == seen);
            CHECK(layout.pair_of(flat) == qp);
            CHECK(layout.photons_of(flat) == n);
            ++seen;
        }
    CHECK(excited_atoms(QubitPair::EE) == 2);
    CHECK(excited_atoms(QubitPair::EG) == 1);
    CHECK(excited_atoms(QubitPair::GE) == 1);
    CHECK(excited_atoms(QubitPair::GG) == 0);
}

TEST_CASE("config validation") {
    auto cfg = make_config(0.5, 1, 1.0, 10);
    CHECK_NOTHROW(cfg.validate());

    auto bad = cfg;
    bad.multiplicity = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.n_max = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.coupling = -0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.profile = DeformationProfile::q_box(0.5, 4); // table shorter than cutoff
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK(cfg.resonant(0.0));
    cfg.omega = 1.0;
    cfg.atom_freq = {1.0, 1.0};
    CHECK(cfg.detuning(0) == doctest::Approx(0.0));
    CHECK(cfg.resonant(1e-12));
    cfg.atom_freq = {1.3, 1.0};
    CHECK(cfg.detuning(0) == doctest::Approx(0.3));
    CHECK_FALSE(cfg.resonant(1e-12));
    cfg.multiplicity = 2;
    cfg.atom_freq = {2.0, 2.0};
    CHECK(cfg.resonant(1e-12)); // m-photon resonance is freq = m * omega
}

TEST_CASE("default cutoff covers the coherent tail") {
    CHECK(default_cutoff(10.0, 1) == 38);
    CHECK(default_cutoff(10.0, 2) == 40);
    CHECK(default_cutoff(0.0, 1) == 2);
    CHECK(default_cutoff(0.0, 3) == 6);
    CHECK_THROWS_AS(default_cutoff(-1.0, 1), std::invalid_argument);

    // Poisson tail beyond the automatic cutoff, summed independently
    for (double alpha_sq : {1.0, 10.0, 25.0}) {
        const int cut = default_cutoff(alpha_sq, 1);
        double mass = 0.0;
        for (int n = 0; n <= cut; ++n)
            mass += std::exp(n * std::log(alpha_sq) - std::lgamma(n + 1.0) - alpha_sq);
        CHECK(1.0 - mass < tol().truncation_warn);
    }
}

TEST_CASE("coherent weights match the direct formula") {
    const ComplexVector trivial = coherent_weights(0.0, 5);
    CHECK(trivial(0) == Complex(1.0, 0.0));
    CHECK(trivial.tail(5).cwiseAbs().maxCoeff() == 0.0);

    const Complex alpha = std::sqrt(10.0);
    const ComplexVector q = coherent_weights(alpha, 40);
    CHECK(q(0).real() == doctest::Approx(std::exp(-5.0)).epsilon(1e-14));
    CHECK(q(0).real() == doctest::Approx(6.737946999085467e-3).epsilon(1e-13));
    for (int n : {1, 5, 10, 17, 40}) {
        const double direct =
            std::exp(0.5 * (n * std::log(10.0) - std::lgamma(n + 1.0)) - 5.0);
        CHECK(std::abs(q(n)) == doctest::Approx(direct).epsilon(1e-12));
        CHECK(q(n).imag() == 0.0);
    }
    // total weight carries the Poisson tail only beyond the cutoff
    CHECK(q.squaredNorm() == doctest::Approx(1.0).epsilon(1e-9));

    // a complex amplitude rotates the phases linearly in n
    const Complex rot = std::polar(std::sqrt(10.0), 0.7);
    const ComplexVector qr = coherent_weights(rot, 10);
    for (int n = 0; n <= 10; ++n) {
        CHECK(std::abs(qr(n)) == doctest::Approx(std::abs(q(n))).epsilon(1e-13));
        const double phase = std::remainder(std::arg(qr(n)) - n * 0.7, 2 * M_PI);
        CHECK(std::abs(phase) < 1e-12);
    }
    CHECK_THROWS_AS((void)coherent_weights(1.0, -1), std::invalid_argument);
}

TEST_CASE("initial states") {
    const auto psi = InitialStateSpec::bell_psi().atomic_amplitudes();
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(psi[0] == Complex(0.0, 0.0));
    CHECK(psi[1].real() == doctest::Approx(s).epsilon(1e-15));
    CHECK(psi[2].real() == doctest::Approx(s).epsilon(1e-15));
    CHECK(psi[3] == Complex(0.0, 0.0));

    const auto phi = InitialStateSpec::bell_phi().atomic_amplitudes();
    CHECK(phi[0].real() == doctest::Approx(s).epsilon(1e-15));
    CHECK(phi[1] == Complex(0.0, 0.0));
    CHECK(phi[2] == Complex(0.0, 0.0));
    CHECK(phi[3].real() == doctest::Approx(s).epsilon(1e-15));

    const std::array<Complex, 4> custom = {Complex(0.5, 0.0), Complex(0.0, 0.5),
                                           Complex(-0.5, 0.0), Complex(0.0, -0.5)};
    CHECK_NOTHROW((void)InitialStateSpec::custom_state(custom).atomic_amplitudes());
    const std::array<Complex, 4> unnormalized = {Complex(1.0, 0.0), Complex(1.0, 0.0),
                                                 Complex(0.0, 0.0), Complex(0.0, 0.0)};
    CHECK_THROWS_AS((void)InitialStateSpec::custom_state(unnormalized).atomic_amplitudes(),
                    std::invalid_argument);
}

TEST_CASE("initial full state: product of atoms and coherent field") {
    auto cfg = make_config(-1.0, 1, 0.0, 4);
    const auto vac = build_initial_state(InitialStateSpec::bell_psi(), cfg);
    const auto layout = cfg.layout();
    CHECK(vac.truncation_deficit == doctest::Approx(0.0));
    CHECK(vac.state.norm() == doctest::Approx(1.0).epsilon(1e-14));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(vac.state.amplitudes(layout.index(QubitPair::EG, 0)) - Complex(s, 0)) <
          1e-15);
    CHECK(std::abs(vac.state.amplitudes(layout.index(QubitPair::GE, 0)) - Complex(s, 0)) <
          1e-15);
    CHECK(std::abs(vac.state.amplitudes(layout.index(QubitPair::EE, 0))) == 0.0);

    cfg = make_config(0.5, 1, 10.0, 38);
    const auto full = build_initial_state(InitialStateSpec::bell_phi(), cfg);
    CHECK(full.truncation_deficit < tol().truncation_warn);
    CHECK(full.state.norm() == doctest::Approx(1.0).epsilon(1e-13));
    const ComplexVector q = coherent_weights(cfg.alpha, cfg.n_max);
    for (int n = 0; n <= cfg.n_max; ++n) {
        const auto le = full.state.amplitudes(cfg.layout().index(QubitPair::EE, n));
        CHECK(std::abs(le - q(n) * s) < 1e-9);
        // the eg/ge rows are empty for the phi state
        CHECK(std::abs(full.state.amplitudes(cfg.layout().index(QubitPair::EG, n))) == 0.0);
    }

    cfg = make_config(-1.0, 1, 10.0, 5);
    try {
        (void)build_initial_state(InitialStateSpec::bell_psi(), cfg);
        FAIL("expected CutoffError");
    } catch (const CutoffError& e) {
        CHECK(e.required_n_max() == 38);
        CHECK(e.deficit() > 0.5);
        CHECK(std::string(e.what()).find("n_max") != std::string::npos);
    }
}

TEST_CASE("qubit operators") {
    for (int atom : {0, 1}) {
        const ComplexMatrix sz = qubit_sz(atom);
        const ComplexMatrix sp = qubit_raise(atom);
        const ComplexMatrix sm = qubit_lower(atom);
        CHECK(max_abs(sm - ComplexMatrix(sp.adjoint())) == 0.0);
        // [sz, s+] = 2 s+ for eigenvalues +-1
        CHECK(max_abs(sz * sp - sp * sz - 2.0 * sp) == 0.0);
        CHECK(max_abs(sz * sz - ComplexMatrix::Identity(4, 4)) == 0.0);
    }
    // atom 1 raise maps gg -> eg and ge -> ee
    const ComplexMatrix sp1 = qubit_raise(0);
    CHECK(sp1(int(QubitPair::EG), int(QubitPair::GG)) == Complex(1.0, 0.0));
    CHECK(sp1(int(QubitPair::EE), int(QubitPair::GE)) == Complex(1.0, 0.0));
    // atom 2 raise maps gg -> ge and eg -> ee
    const ComplexMatrix sp2 = qubit_raise(1);
    CHECK(sp2(int(QubitPair::GE), int(QubitPair::GG)) == Complex(1.0, 0.0));
    CHECK(sp2(int(QubitPair::EE), int(QubitPair::EG)) == Complex(1.0, 0.0));
}

TEST_CASE("hamiltonian matches the element-level oracle") {
    auto check_against_oracle = [](const SystemConfig& cfg) {
        const ComplexMatrix h = build_hamiltonian(cfg);
        CHECK(max_abs(h - ComplexMatrix(h.adjoint())) <= tol().hermiticity);
        CHECK(max_abs(h - oracle_hamiltonian(cfg)) <= 1e-12);
    };
    check_against_oracle(make_config(-1.0, 1, 0.0, 6, 1.1, 0.9, 1.3, 0.7));
    check_against_oracle(make_config(0.6, 2, 0.0, 8, 0.5, 1.0, 1.0, 1.3));
    auto scaled = make_config(0.9, 3, 0.0, 11, 0.2, 0.6, 0.6, 2.0);
    scaled.coupling_scale = {1.0, 0.5};
    check_against_oracle(scaled);
}

TEST_CASE("coupling-free hamiltonian is diagonal with the deformed field energy") {
    auto cfg = make_config(0.5, 1, 0.0, 6, 0.7, 0.3, 0.4, 0.0);
    const ComplexMatrix h = build_hamiltonian(cfg);
    const auto layout = cfg.layout();
    ComplexMatrix offdiag = h;
    offdiag.diagonal().setZero();
    CHECK(max_abs(offdiag) == 0.0);
    for (int n = 0; n <= 6; ++n) {
        const double f = cfg.profile.value(n);
        const double field = 0.7 * n * f * f;
        CHECK(h(layout.index(QubitPair::EE, n), layout.index(QubitPair::EE, n)).real() ==
              doctest::Approx(field + 0.35).epsilon(1e-14));
        CHECK(h(layout.index(QubitPair::EG, n), layout.index(QubitPair::EG, n)).real() ==
              doctest::Approx(field - 0.05).epsilon(1e-12));
        CHECK(h(layout.index(QubitPair::GG, n), layout.index(QubitPair::GG, n)).real() ==
              doctest::Approx(field - 0.35).epsilon(1e-14));
    }
}

TEST_CASE("single-excitation couplings") {
    auto cfg = make_config(-1.0, 1, 0.0, 4, 1.0, 1.0, 1.0, 0.8);
    const ComplexMatrix h = build_hamiltonian(cfg);
    const auto layout = cfg.layout();
    // <eg,0|H|gg,1> = <ge,0|H|gg,1> = coupling * sqrt(1)
    CHECK(h(layout.index(QubitPair::EG, 0), layout.index(QubitPair::GG, 1)).real() ==
          doctest::Approx(0.8).epsilon(1e-14));
    CHECK(h(layout.index(QubitPair::GE, 0), layout.index(QubitPair::GG, 1)).real() ==
          doctest::Approx(0.8).epsilon(1e-14));
    // no direct eg <-> ge coupling
    CHECK(std::abs(h(layout.index(QubitPair::EG, 0), layout.index(QubitPair::GE, 0))) == 0.0);
    // deformed two-photon hop: <ee,n|H|eg,n+2> = coupling sqrt((n+1)(n+2)) f(n+1) f(n+2)
    auto dcfg = make_config(0.5, 2, 0.0, 8, 0.0, 0.0, 0.0, 1.3);
    const ComplexMatrix hd = build_hamiltonian(dcfg);
    const auto dl = dcfg.layout();
    const double expected = 1.3 * std::sqrt(3.0 * 4.0) * dcfg.profile.value(3) *
                            dcfg.profile.value(4);
    CHECK(hd(dl.index(QubitPair::EE, 2), dl.index(QubitPair::EG, 4)).real() ==
          doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("jaynes-cummings spectrum with one atom decoupled") {
    auto cfg = make_config(-1.0, 1, 0.0, 8, 1.0, 1.0, 0.0, 1.0);
    cfg.coupling_scale = {1.0, 0.0};
    const ComplexMatrix h = build_hamiltonian(cfg);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    const Eigen::VectorXd evals = es.eigenvalues();
    for (int n = 0; n <= 5; ++n) {
        for (double sign : {1.0, -1.0}) {
            const double expected = 1.0 * (n + 0.5) + sign * std::sqrt(double(n + 1));
            double best = 1e300;
            for (int k = 0; k < evals.size(); ++k)
                best = std::min(best, std::abs(evals(k) - expected));
            CHECK(best < 1e-10);
        }
    }
}

TEST_CASE("constant of motion: diagonal, integer-valued, commuting") {
    for (auto [q, m] : std::vector<std::pair<double, int>>{{-1.0, 1}, {0.5, 2}, {0.9, 1}}) {
        auto cfg = make_config(q, m, 0.0, 12, 0.3, 0.3 * m, 0.3 * m, 1.3);
        const ComplexMatrix mop = constant_of_motion(cfg);
        const auto layout = cfg.layout();
        ComplexMatrix offdiag = mop;
        offdiag.diagonal().setZero();
        CHECK(max_abs(offdiag) == 0.0);
        for (int n = 0; n <= cfg.n_max; ++n) {
            CHECK(mop(layout.index(QubitPair::EE, n), layout.index(QubitPair::EE, n)).real() ==
                  doctest::Approx(double(n + m)).epsilon(1e-15));
            CHECK(mop(layout.index(QubitPair::EG, n), layout.index(QubitPair::EG, n)).real() ==
                  doctest::Approx(double(n)).epsilon(1e-15));
            CHECK(mop(layout.index(QubitPair::GG, n), layout.index(QubitPair::GG, n)).real() ==
                  doctest::Approx(double(n - m)).epsilon(1e-15));
        }
        const ComplexMatrix h = build_hamiltonian(cfg);
        CHECK(max_abs(h * mop - mop * h) <= tol().conserved_commutator);
    }
    // identity m = 2: <gg,n|M|gg,n> = n - 2
    auto cfg = make_config(-1.0, 2, 0.0, 6);
    const ComplexMatrix mop = constant_of_motion(cfg);
    CHECK(mop(cfg.layout().index(QubitPair::GG, 3), cfg.layout().index(QubitPair::GG, 3))
              .real() == doctest::Approx(1.0));
}

TEST_CASE("heisenberg equation of motion closes") {
    CHECK(heisenberg_residual(make_config(-1.0, 1, 0.0, 14, 0.9, 0.9, 0.9, 1.0)) <
          tol().heisenberg_identity);
    CHECK(heisenberg_residual(make_config(0.5, 2, 0.0, 16, 0.4, 0.8, 0.8, 1.7)) <
          tol().heisenberg_identity);
    CHECK(heisenberg_residual(make_config(0.9, 1, 0.0, 14, 0.0, 0.0, 0.0, 0.0)) == 0.0);
}
