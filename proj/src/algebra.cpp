#include "qdsim/algebra.hpp"

#include <cmath>

namespace qdsim {

DeformationProfile DeformationProfile::identity(int n_max) {
    if (n_max < 0) throw std::invalid_argument("deformation profile: n_max must be >= 0");
    return DeformationProfile(Kind::Identity, 1.0,
                              std::vector<double>(static_cast<size_t>(n_max) + 1, 1.0));
}

DeformationProfile DeformationProfile::q_box(double q, int n_max) {
    if (n_max < 0) throw std::invalid_argument("deformation profile: n_max must be >= 0");
    if (q == 1.0) return identity(n_max); // singular limit of the formula, value 1
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("deformation profile: q must lie in (0, 1]");

    std::vector<double> values(static_cast<size_t>(n_max) + 1);
    values[0] = 1.0; // convention; never enters a matrix element
    if (n_max >= 1) values[1] = 1.0; // algebraic identity, keep it exact
    const double log_q = std::log(q);
    for (int n = 2; n <= n_max; ++n) {
        // 1 - q^n via expm1 keeps precision for q close to 1
        const double one_minus_qn = -std::expm1(static_cast<double>(n) * log_q);
        values[static_cast<size_t>(n)] = std::sqrt(one_minus_qn / (n * (1.0 - q)));
    }
    return DeformationProfile(Kind::QBox, q, std::move(values));
}

double coupling_product(const DeformationProfile& profile, int n, int m) {
    if (n < 0) throw std::out_of_range("coupling_product: negative level");
    if (m < 1) throw std::invalid_argument("coupling_product: m must be >= 1");
    if (n + m > profile.n_max())
        throw std::out_of_range("coupling_product: n + m exceeds profile table");
    double prod = 1.0;
    for (int k = 1; k <= m; ++k) prod *= profile.value(n + k);
    return prod;
}

ComplexMatrix deformed_annihilator(const DeformationProfile& profile, int dim) {
    if (dim < 2) throw std::invalid_argument("deformed_annihilator: dim must be >= 2");
    if (dim - 1 > profile.n_max())
        throw std::out_of_range("deformed_annihilator: dim exceeds profile table");
    ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n)
        a(n - 1, n) = std::sqrt(static_cast<double>(n)) * profile.value(n);
    return a;
}

ComplexMatrix number_operator(int dim) {
    ComplexMatrix n = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

ComplexMatrix deformed_number_operator(const DeformationProfile& profile, int dim) {
    if (dim < 1) throw std::invalid_argument("deformed_number_operator: dim must be >= 1");
    if (dim - 1 > profile.n_max())
        throw std::out_of_range("deformed_number_operator: dim exceeds profile table");
    ComplexMatrix nd = ComplexMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        const double f = profile.value(n);
        nd(n, n) = n * f * f;
    }
    return nd;
}

double commutator_defect(const DeformationProfile& profile, int dim) {
    if (dim < 3) throw std::invalid_argument("commutator_defect: dim must be >= 3");
    const ComplexMatrix a = deformed_annihilator(profile, dim);
    const ComplexMatrix comm = a * a.adjoint() - a.adjoint() * a;
    double worst = 0.0;
    for (int n = 0; n <= dim - 2; ++n) {
        const double fn = profile.value(n);
        const double fn1 = profile.value(n + 1);
        const double expected = (n + 1) * fn1 * fn1 - n * fn * fn;
        worst = std::max(worst, std::abs(comm(n, n).real() - expected) +
                                    std::abs(comm(n, n).imag()));
    }
    return worst;
}

} // namespace qdsim
