#ifndef QDSIM_ALGEBRA_HPP
#define QDSIM_ALGEBRA_HPP

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qdsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Deformation of the bosonic algebra through a function f of the number
/// operator: the deformed ladder operator acts as A|n> = sqrt(n) f(n) |n-1>.
///
/// Two families are supported:
///   Identity -- f(n) = 1, the ordinary oscillator;
///   QBox     -- f(n) = sqrt((1 - q^n) / (n (1 - q))), 0 < q < 1.
///
/// f(0) never enters a matrix element (it always rides along with sqrt(0));
/// the stored entry is fixed to 1 so the table is total. f(1) = 1 exactly for
/// every q, and f -> 1 pointwise as q -> 1.
class DeformationProfile {
public:
    enum class Kind { Identity, QBox };

    static DeformationProfile identity(int n_max);
    /// q = 1 is accepted and maps to the identity profile (the q -> 1 limit).
    static DeformationProfile q_box(double q, int n_max);

    Kind kind() const { return kind_; }
    double q() const { return q_; }
    int n_max() const { return static_cast<int>(values_.size()) - 1; }

    /// f(n). Throws std::out_of_range beyond the precomputed table.
    double value(int n) const {
        if (n < 0 || n >= static_cast<int>(values_.size()))
            throw std::out_of_range("deformation profile: level " + std::to_string(n) +
                                    " outside table [0, " + std::to_string(n_max()) + "]");
        return values_[static_cast<size_t>(n)];
    }

    bool is_identity() const { return kind_ == Kind::Identity; }

private:
    DeformationProfile(Kind kind, double q, std::vector<double> values)
        : kind_(kind), q_(q), values_(std::move(values)) {}

    Kind kind_;
    double q_; // meaningful for QBox only
    std::vector<double> values_;
};

/// Product f(n+1) f(n+2) ... f(n+m) of the deformation values crossed by an
/// m-photon hop out of level n. With the sqrt of the falling factorial this
/// is exactly <n| A^m |n+m>; a test pins that identity.
double coupling_product(const DeformationProfile& profile, int n, int m);

/// Matrix of the deformed annihilator on the truncated Fock space
/// {|0>, ..., |dim-1>}: entries <n-1| A |n> = sqrt(n) f(n).
ComplexMatrix deformed_annihilator(const DeformationProfile& profile, int dim);

/// diag(0, 1, ..., dim-1).
ComplexMatrix number_operator(int dim);

/// A^dag A = diag(n f(n)^2); the deformed photon-number operator.
ComplexMatrix deformed_number_operator(const DeformationProfile& profile, int dim);

/// Max deviation of the diagonal of [A, A^dag] from
/// (n+1) f^2(n+1) - n f^2(n), scanned over n = 0 .. dim-2 from the explicit
/// matrices. The top level is skipped: truncation corrupts it by construction.
double commutator_defect(const DeformationProfile& profile, int dim);

} // namespace qdsim

#endif
