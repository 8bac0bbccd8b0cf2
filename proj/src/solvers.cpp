#include "qdsim/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

namespace qdsim {

namespace {

long excitation_label(const BasisLayout& layout, int multiplicity, int flat) {
    return layout.photons_of(flat) +
           static_cast<long>(multiplicity) * excited_atoms(layout.pair_of(flat));
}

void check_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("evolve: empty time grid");
    if (times.front() < 0.0) throw std::invalid_argument("evolve: negative start time");
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::invalid_argument("evolve: time grid must be ascending");
}

} // namespace

BlockDecomposition decompose_blocks(const ComplexMatrix& h, const BasisLayout& layout,
                                    int multiplicity) {
    const int dim = layout.dim();
    if (h.rows() != dim || h.cols() != dim)
        throw std::invalid_argument("decompose_blocks: matrix does not match the basis layout");

    std::map<long, std::vector<int>> groups;
    for (int i = 0; i < dim; ++i) groups[excitation_label(layout, multiplicity, i)].push_back(i);

    const double threshold = 1e-12 * (1.0 + h.cwiseAbs().maxCoeff());
    for (int j = 0; j < dim; ++j) {
        const long lj = excitation_label(layout, multiplicity, j);
        for (int i = 0; i < dim; ++i) {
            if (std::abs(h(i, j)) <= threshold) continue;
            if (excitation_label(layout, multiplicity, i) != lj)
                throw StructuralError(
                    "decompose_blocks: H couples different excitation sectors at (" +
                    std::to_string(i) + ", " + std::to_string(j) + ")");
        }
    }

    BlockDecomposition out;
    out.dim = dim;
    out.blocks.reserve(groups.size());
    for (auto& [label, indices] : groups) {
        HamiltonianBlock block;
        block.excitation = label;
        block.indices = std::move(indices);
        const int b = static_cast<int>(block.indices.size());
        block.matrix.resize(b, b);
        for (int c = 0; c < b; ++c)
            for (int r = 0; r < b; ++r) block.matrix(r, c) = h(block.indices[r], block.indices[c]);
        out.blocks.push_back(std::move(block));
    }
    return out;
}

std::vector<FullState> evolve_reference(const ComplexMatrix& h, const FullState& psi0,
                                        const std::vector<double>& times) {
    check_times(times);
    if (psi0.amplitudes.size() != h.rows())
        throw std::invalid_argument("evolve_reference: state does not match the Hamiltonian");

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    if (es.info() != Eigen::Success)
        throw NumericalError("evolve_reference: eigendecomposition failed on dim " +
                             std::to_string(h.rows()));
    const ComplexMatrix& vectors = es.eigenvectors();
    const RealVector& energies = es.eigenvalues();
    const ComplexVector components = vectors.adjoint() * psi0.amplitudes;

    std::vector<FullState> out;
    out.reserve(times.size());
    ComplexVector rotated(components.size());
    for (double t : times) {
        for (Eigen::Index k = 0; k < components.size(); ++k)
            rotated(k) = components(k) * std::polar(1.0, -energies(k) * t);
        out.push_back({vectors * rotated, t});
    }
    return out;
}

std::vector<FullState> evolve_block(const BlockDecomposition& blocks, const FullState& psi0,
                                    const std::vector<double>& times) {
    check_times(times);
    if (psi0.amplitudes.size() != blocks.dim)
        throw std::invalid_argument("evolve_block: state does not match the decomposition");

    struct Prepared {
        const HamiltonianBlock* block;
        ComplexMatrix vectors;
        RealVector energies;
        ComplexVector components; // eigenbasis coordinates of psi0
    };
    std::vector<Prepared> prepared;
    prepared.reserve(blocks.blocks.size());
    for (const auto& block : blocks.blocks) {
        const int b = static_cast<int>(block.indices.size());
        ComplexVector local(b);
        for (int k = 0; k < b; ++k) local(k) = psi0.amplitudes(block.indices[k]);
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(block.matrix);
        if (es.info() != Eigen::Success)
            throw NumericalError("evolve_block: eigendecomposition failed on a sector of dim " +
                                 std::to_string(b));
        prepared.push_back({&block, es.eigenvectors(), es.eigenvalues(),
                            es.eigenvectors().adjoint() * local});
    }

    std::vector<FullState> out;
    out.reserve(times.size());
    for (double t : times) {
        FullState state;
        state.amplitudes = ComplexVector::Zero(blocks.dim);
        state.time = t;
        for (const auto& p : prepared) {
            const int b = static_cast<int>(p.block->indices.size());
            ComplexVector rotated(b);
            for (int k = 0; k < b; ++k)
                rotated(k) = p.components(k) * std::polar(1.0, -p.energies(k) * t);
            const ComplexVector local = p.vectors * rotated;
            for (int k = 0; k < b; ++k) state.amplitudes(p.block->indices[k]) = local(k);
        }
        out.push_back(std::move(state));
    }
    return out;
}

double ladder_coupling(const DeformationProfile& profile, double coupling, int n, int m) {
    double v = coupling;
    for (int k = 1; k <= m; ++k) v *= std::sqrt(static_cast<double>(n + k)) * profile.value(n + k);
    return v;
}

namespace {

DeformationProfile extend_profile(const DeformationProfile& profile, int n_max) {
    if (profile.n_max() >= n_max) return profile;
    return profile.is_identity() ? DeformationProfile::identity(n_max)
                                 : DeformationProfile::q_box(profile.q(), n_max);
}

// Exact propagation of one 4-state ladder {|ee,n>, |eg,n+m>, |ge,n+m>,
// |gg,n+2m>} of the resonant interaction. The antisymmetric combination of
// the middle rungs is dark; the symmetric sector is a 3-level chain with
// couplings sqrt(2)*nu1, sqrt(2)*nu2 and eigenvalues {0, +-2mu}, which is
// where the cos^2/sin^2/sin structure of the amplitudes comes from.
struct LadderPropagator {
    double nu1, nu2, mu;

    LadderPropagator(double upper, double lower)
        : nu1(upper), nu2(lower), mu(std::sqrt(0.5 * (upper * upper + lower * lower))) {}

    // amp0 = (a_ee, a_eg, a_ge, a_gg) initial amplitudes on the four rungs
    std::array<Complex, 4> at(const std::array<Complex, 4>& amp0, double t) const {
        const Complex i_unit(0.0, 1.0);
        const double s = std::sin(mu * t);
        const double sin_sq_over_mu2 = (s / mu) * (s / mu);
        const double sin2_over_2mu = std::sin(2.0 * mu * t) / (2.0 * mu);
        const double cos_sq = std::cos(mu * t) * std::cos(mu * t);
        const double sin_sq = s * s;

        const Complex mix = amp0[0] * nu1 + amp0[3] * nu2;   // drives the middle rungs
        const Complex middle = amp0[1] + amp0[2];            // symmetric middle content

        std::array<Complex, 4> amp;
        amp[0] = amp0[0] - nu1 * mix * sin_sq_over_mu2 - i_unit * nu1 * middle * sin2_over_2mu;
        amp[1] = amp0[1] * cos_sq - amp0[2] * sin_sq - i_unit * mix * sin2_over_2mu;
        amp[2] = amp0[2] * cos_sq - amp0[1] * sin_sq - i_unit * mix * sin2_over_2mu;
        amp[3] = amp0[3] - nu2 * mix * sin_sq_over_mu2 - i_unit * nu2 * middle * sin2_over_2mu;
        return amp;
    }
};

// As-printed form of the ladder couplings: the deformation product runs from
// f(n) and sits under the square root, and the lower rung reuses the upper
// rung's falling factorial. TYPO_NOTES.md has the corrected counterparts.
struct PrintedCouplings {
    double nu1, nu2, mu;
};

PrintedCouplings printed_couplings(const DeformationProfile& profile, double coupling, int n,
                                   int m) {
    double falling = 1.0;
    for (int k = 1; k <= m; ++k) falling *= static_cast<double>(n + k);
    double g_upper = 1.0;
    for (int k = 0; k <= m; ++k) g_upper *= profile.value(n + k);
    double g_lower = 1.0;
    for (int k = 0; k <= 2 * m; ++k) g_lower *= profile.value(n + k);
    PrintedCouplings c;
    c.nu1 = coupling * std::sqrt(falling * g_upper);
    c.nu2 = coupling * std::sqrt(falling * g_lower);
    c.mu = std::sqrt(0.5 * (c.nu1 * c.nu1 + c.nu2 * c.nu2));
    return c;
}

} // namespace

AnalyticResult evolve_analytic(const SystemConfig& cfg, const InitialStateSpec& spec,
                               const std::vector<double>& scaled_times, TypoPolicy policy) {
    cfg.validate();
    check_times(scaled_times);
    if (cfg.coupling <= 0.0)
        throw std::invalid_argument("evolve_analytic: coupling must be > 0 for the scaled time axis");
    if (!cfg.resonant(1e-12))
        throw std::invalid_argument("evolve_analytic: closed form requires both detunings zero");
    if (cfg.coupling_scale[0] != 1.0 || cfg.coupling_scale[1] != 1.0)
        throw std::invalid_argument("evolve_analytic: closed form requires equal unit couplings");
    if (cfg.omega != 0.0 && !cfg.profile.is_identity())
        throw std::invalid_argument(
            "evolve_analytic: with a deformed profile the field energy does not commute with "
            "the exchange term, so the closed form holds only at omega = 0");

    const BasisLayout layout = cfg.layout();
    const int m = cfg.multiplicity;
    const auto atomic = spec.atomic_amplitudes();
    const Complex a1 = atomic[0], a2 = atomic[1], a3 = atomic[2], a4 = atomic[3];

    const int reach = cfg.n_max + 2 * m; // formulas read weights and f past the cutoff
    const DeformationProfile profile = extend_profile(cfg.profile, reach);
    const ComplexVector weights = coherent_weights(cfg.alpha, reach);

    // On resonance H = omega * M + interaction with [M, interaction] = 0, so
    // the free motion factors into per-state phases exp(-i omega M t). They
    // are constant inside each sector and cancel from purity and populations.
    RealVector free_freq(layout.dim());
    for (int flat = 0; flat < layout.dim(); ++flat)
        free_freq(flat) = cfg.omega * (layout.photons_of(flat) +
                                       m * (excited_atoms(layout.pair_of(flat)) - 1));

    const Complex i_unit(0.0, 1.0);
    AnalyticResult result;
    result.states.reserve(scaled_times.size());
    result.norm_defects.reserve(scaled_times.size());

    for (double scaled_t : scaled_times) {
        const double t = scaled_t / cfg.coupling;
        FullState state;
        state.amplitudes = ComplexVector::Zero(layout.dim());
        state.time = scaled_t;

        if (policy == TypoPolicy::Corrected) {
            // Propagate each sector of the *truncated* Hamiltonian exactly:
            // rungs beyond the cutoff are absent, not clipped after the fact,
            // so the result matches the matrix solvers at any cutoff.
            const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
            for (int n = 0; n <= cfg.n_max; ++n) {
                const Complex ee0 = a1 * weights(n);
                if (n + 2 * m <= cfg.n_max) {
                    const LadderPropagator ladder(
                        ladder_coupling(profile, cfg.coupling, n, m),
                        ladder_coupling(profile, cfg.coupling, n + m, m));
                    const auto amp = ladder.at({ee0, a2 * weights(n + m),
                                                a3 * weights(n + m), a4 * weights(n + 2 * m)},
                                               t);
                    state.amplitudes(layout.index(QubitPair::EE, n)) = amp[0];
                    state.amplitudes(layout.index(QubitPair::EG, n + m)) = amp[1];
                    state.amplitudes(layout.index(QubitPair::GE, n + m)) = amp[2];
                    state.amplitudes(layout.index(QubitPair::GG, n + 2 * m)) = amp[3];
                } else if (n + m <= cfg.n_max) {
                    // the cutoff removed the |gg> rung: |ee,n> against the
                    // symmetric middle combination, antisymmetric part dark
                    const double g =
                        std::sqrt(2.0) * ladder_coupling(profile, cfg.coupling, n, m);
                    const Complex sym0 = (a2 + a3) * weights(n + m) * inv_sqrt2;
                    const Complex dark = (a2 - a3) * weights(n + m) * inv_sqrt2;
                    const Complex ee =
                        ee0 * std::cos(g * t) - i_unit * sym0 * std::sin(g * t);
                    const Complex sym =
                        sym0 * std::cos(g * t) - i_unit * ee0 * std::sin(g * t);
                    state.amplitudes(layout.index(QubitPair::EE, n)) = ee;
                    state.amplitudes(layout.index(QubitPair::EG, n + m)) =
                        (sym + dark) * inv_sqrt2;
                    state.amplitudes(layout.index(QubitPair::GE, n + m)) =
                        (sym - dark) * inv_sqrt2;
                } else {
                    state.amplitudes(layout.index(QubitPair::EE, n)) = ee0; // isolated
                }
            }
            // Ladders with fewer than m photons on the middle rungs have no
            // |ee> rung: a two-level chain plus the dark antisymmetric state.
            for (int k = 0; k < m && k <= cfg.n_max; ++k) {
                const Complex sym0 = (a2 + a3) * weights(k) * inv_sqrt2;
                const Complex dark = (a2 - a3) * weights(k) * inv_sqrt2;
                if (k + m <= cfg.n_max) {
                    const double g =
                        std::sqrt(2.0) * ladder_coupling(profile, cfg.coupling, k, m);
                    const Complex ground0 = a4 * weights(k + m);
                    const Complex sym =
                        sym0 * std::cos(g * t) - i_unit * ground0 * std::sin(g * t);
                    const Complex ground =
                        ground0 * std::cos(g * t) - i_unit * sym0 * std::sin(g * t);
                    state.amplitudes(layout.index(QubitPair::EG, k)) = (sym + dark) * inv_sqrt2;
                    state.amplitudes(layout.index(QubitPair::GE, k)) = (sym - dark) * inv_sqrt2;
                    state.amplitudes(layout.index(QubitPair::GG, k + m)) = ground;
                } else {
                    // below the cutoff even the ground rung is gone
                    state.amplitudes(layout.index(QubitPair::EG, k)) = a2 * weights(k);
                    state.amplitudes(layout.index(QubitPair::GE, k)) = a3 * weights(k);
                }
                state.amplitudes(layout.index(QubitPair::GG, k)) = a4 * weights(k);
            }
        } else {
            for (int n = 0; n <= cfg.n_max; ++n) {
                const auto c = printed_couplings(profile, cfg.coupling, n, m);
                const double cos_sq = std::cos(c.mu * t) * std::cos(c.mu * t);
                const double sin_sq = std::sin(c.mu * t) * std::sin(c.mu * t);
                const double sin_sq_over_mu2 = sin_sq / (c.mu * c.mu);
                // The printed denominators carry the bare time; at t = 0 the
                // sine numerators vanish and the terms are taken as zero.
                const double sin2_term = t == 0.0 ? 0.0 : std::sin(2.0 * c.mu * t) / (2.0 * c.mu * t);
                const double sin1_term = t == 0.0 ? 0.0 : std::sin(c.mu * t) / (2.0 * c.mu * t);

                const Complex mix = a1 * c.nu1 * weights(n) + a4 * c.nu2 * weights(n + 2);
                state.amplitudes(layout.index(QubitPair::EE, n)) =
                    a1 * weights(n) - c.nu1 * mix * sin_sq_over_mu2 -
                    i_unit * c.nu1 * (a2 + a3) * weights(n + 1) * sin2_term;
                if (n + 2 <= cfg.n_max) {
                    state.amplitudes(layout.index(QubitPair::EG, n + 2)) =
                        weights(n + 1) * (a2 * cos_sq - a3 * sin_sq) - i_unit * mix * sin1_term;
                    state.amplitudes(layout.index(QubitPair::GE, n + 2)) =
                        weights(n + 1) * (a3 * cos_sq - a2 * sin_sq) - i_unit * mix * sin1_term;
                }
                if (n + 4 <= cfg.n_max) {
                    const Complex mix_d = a1 * c.nu2 * weights(n) + a4 * c.nu2 * weights(n + 2);
                    state.amplitudes(layout.index(QubitPair::GG, n + 4)) =
                        a4 * weights(n + 2) - c.nu1 * mix_d * sin_sq_over_mu2 -
                        i_unit * c.nu2 * (a2 + a3) * weights(n + 1) * sin2_term;
                }
            }
        }

        for (int flat = 0; flat < layout.dim(); ++flat)
            state.amplitudes(flat) *= std::polar(1.0, -free_freq(flat) * t);

        const double norm_sq = state.amplitudes.squaredNorm();
        if (norm_sq <= 0.0)
            throw NumericalError("evolve_analytic: vanished state norm at scaled time " +
                                 std::to_string(scaled_t));
        result.norm_defects.push_back(1.0 - norm_sq);
        state.amplitudes /= std::sqrt(norm_sq);
        result.states.push_back(std::move(state));
    }
    return result;
}

double real_expectation(const FullState& state, const ComplexMatrix& op) {
    const Complex value = state.amplitudes.dot(op * state.amplitudes);
    return value.real();
}

} // namespace qdsim
