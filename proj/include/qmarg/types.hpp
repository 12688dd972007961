#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmarg {

using Cx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Numerical thresholds used across the library. All defaults are pinned here
/// and recorded verbatim in emitted reports. `rank` and `degen` are relative
/// cutoffs (scaled by the largest eigenvalue / coefficient in play), the rest
/// are absolute.
struct Tolerances {
    double norm = 1e-10;   // state normalization slack
    double herm = 1e-10;   // Hermiticity residual (Frobenius)
    double idem = 1e-10;   // projector idempotency residual
    double psd = 1e-10;    // eigenvalue negativity slack for density operators
    double rank = 1e-8;    // relative eigenvalue / singular value cutoff
    double degen = 1e-8;   // relative gap that merges eigenvalues into one class
    double orth = 1e-9;    // orthogonality residual (Frobenius)
    double recon = 1e-9;   // reconstruction / support-equality residual
    double eig = 1e-9;     // eigenvector residual in verification checks
};

namespace detail {
inline long checked_total_dim(const std::vector<int>& dims) {
    if (dims.size() < 2) throw std::invalid_argument("need at least 2 parties");
    long total = 1;
    for (int d : dims) {
        if (d < 2) throw std::invalid_argument("every local dimension must be >= 2");
        total *= d;
    }
    return total;
}
}  // namespace detail

/// Pure state of an n-party system, n >= 2. Amplitudes are stored flat in
/// row-major order with party 1 slowest-varying: flat index of (i_1,...,i_n)
/// is i_1*d_2*...*d_n + ... + i_n. Construction normalizes; a zero vector is
/// rejected. Unnormalized vectors (projected blocks, intermediate branches)
/// are passed around as raw Vec, never as StateVector.
class StateVector {
public:
    StateVector(std::vector<int> dims, Vec amps) : dims_(std::move(dims)), amps_(std::move(amps)) {
        long total = detail::checked_total_dim(dims_);
        if (amps_.size() != total) throw std::invalid_argument("amplitude count does not match dims");
        double nrm = amps_.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw std::invalid_argument("state vector has zero or non-finite norm");
        amps_ /= nrm;
    }

    int n() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    int dim(int party) const { return dims_.at(party); }
    long total_dim() const { return amps_.size(); }
    const Vec& amps() const { return amps_; }

    /// Stride of `party` in the flat index (product of dims to its right).
    long stride(int party) const {
        long s = 1;
        for (int p = n() - 1; p > party; --p) s *= dims_[p];
        return s;
    }

private:
    std::vector<int> dims_;
    Vec amps_;
};

/// Reduced density operator on an ordered list of kept parties.
/// Hermitian positive semidefinite with unit trace; the constructor
/// symmetrizes and validates Hermiticity and trace.
struct DensityOperator {
    std::vector<int> dims;  // local dimensions of the kept parties, in order
    Mat matrix;

    DensityOperator(std::vector<int> kept_dims, Mat m) : dims(std::move(kept_dims)), matrix(std::move(m)) {
        long d = 1;
        for (int x : dims) d *= x;
        if (matrix.rows() != d || matrix.cols() != d) throw std::invalid_argument("density matrix shape does not match dims");
        Tolerances tol;
        if ((matrix - matrix.adjoint()).norm() > tol.herm * std::max(1.0, matrix.norm()))
            throw std::invalid_argument("density matrix is not Hermitian");
        matrix = 0.5 * (matrix + matrix.adjoint().eval());
        if (std::abs(matrix.trace().real() - 1.0) > 1e-8 || std::abs(matrix.trace().imag()) > 1e-10)
            throw std::invalid_argument("density matrix trace is not 1");
    }

    long dim() const { return matrix.rows(); }

    /// Eigenvalue check, used by validation-heavy tests rather than hot paths.
    bool is_psd(double slack) const {
        Eigen::SelfAdjointEigenSolver<Mat> es(matrix, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() >= -slack;
    }
};

/// Orthogonal projector on a single local space. `rank` is tr(P) rounded to
/// the nearest integer; factories validate Hermiticity, idempotency, and that
/// the trace is integral. The zero projector (rank 0) is allowed.
struct Projector {
    Mat matrix;
    int rank = 0;

    static Projector from_matrix(Mat m, const Tolerances& tol = {}) {
        if (m.rows() != m.cols()) throw std::invalid_argument("projector must be square");
        if ((m - m.adjoint()).norm() > tol.herm * std::max(1.0, m.norm()))
            throw std::invalid_argument("projector is not Hermitian");
        if ((m * m - m).norm() > tol.idem * std::max(1.0, m.norm()))
            throw std::invalid_argument("projector is not idempotent");
        double tr = m.trace().real();
        int r = static_cast<int>(std::lround(tr));
        if (std::abs(tr - r) > 1e-6) throw std::invalid_argument("projector trace is not integral");
        Projector p;
        p.matrix = p_symmetrize(m);
        p.rank = r;
        return p;
    }

    /// Projector onto the span of orthonormal columns B: P = B B^dagger.
    static Projector from_basis(const Mat& basis) {
        Projector p;
        p.matrix = basis * basis.adjoint();
        p.rank = static_cast<int>(basis.cols());
        return p;
    }

    static Projector zero(long dim) {
        Projector p;
        p.matrix = Mat::Zero(dim, dim);
        p.rank = 0;
        return p;
    }

    static Projector identity(long dim) {
        Projector p;
        p.matrix = Mat::Identity(dim, dim);
        p.rank = static_cast<int>(dim);
        return p;
    }

    long dim() const { return matrix.rows(); }

private:
    static Mat p_symmetrize(const Mat& m) { return 0.5 * (m + m.adjoint().eval()); }
};

/// Bipartite Schmidt decomposition of a state across pivot | rest:
///   psi = sum_i sqrt(coeffs[i]) |left_i>_pivot (x) |right_i>_rest.
/// Coefficients are probabilities (squared singular values), sorted
/// descending, truncated at the relative `rank` cutoff. Columns of
/// `left_vectors` live on the pivot space; columns of `right_vectors` live on
/// the complement space with parties `comp_parties` (ascending original
/// order) and dims `comp_dims`. `classes` groups coefficient indices whose
/// values coincide within the relative `degen` gap, transitively closed.
struct SchmidtData {
    int pivot = 0;  // 0-based party index
    RVec coeffs;
    Mat left_vectors;
    Mat right_vectors;
    std::vector<int> comp_parties;
    std::vector<int> comp_dims;
    std::vector<std::vector<int>> classes;

    int rank() const { return static_cast<int>(coeffs.size()); }

    /// Number of classes holding two or more coefficients.
    int degenerate_class_count() const {
        int c = 0;
        for (const auto& cls : classes)
            if (cls.size() >= 2) ++c;
        return c;
    }
};

}  // namespace qmarg
