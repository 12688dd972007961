#include "qmarg/tensor.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace qmarg {

long total_dim(const std::vector<int>& dims) {
    long t = 1;
    for (int d : dims) t *= d;
    return t;
}

std::vector<long> strides(const std::vector<int>& dims) {
    std::vector<long> s(dims.size());
    long acc = 1;
    for (int p = static_cast<int>(dims.size()) - 1; p >= 0; --p) {
        s[p] = acc;
        acc *= dims[p];
    }
    return s;
}

namespace {

void check_party_list(const std::vector<int>& parties, int n, bool allow_empty, bool allow_full) {
    if (!allow_empty && parties.empty()) throw std::invalid_argument("party list must be nonempty");
    if (!allow_full && static_cast<int>(parties.size()) >= n)
        throw std::invalid_argument("party list must be a proper subset");
    int prev = -1;
    for (int p : parties) {
        if (p < 0 || p >= n) throw std::invalid_argument("party index out of range");
        if (p <= prev) throw std::invalid_argument("party list must be strictly ascending");
        prev = p;
    }
}

std::vector<int> complement_of(const std::vector<int>& parties, int n) {
    std::vector<int> comp;
    std::size_t k = 0;
    for (int p = 0; p < n; ++p) {
        if (k < parties.size() && parties[k] == p) {
            ++k;
        } else {
            comp.push_back(p);
        }
    }
    return comp;
}

}  // namespace

Mat matricize(const Vec& amps, const std::vector<int>& dims, const std::vector<int>& kept) {
    const int n = static_cast<int>(dims.size());
    check_party_list(kept, n, false, true);
    const long total = total_dim(dims);
    if (amps.size() != total) throw std::invalid_argument("amplitude count does not match dims");

    std::vector<char> is_kept(n, 0);
    for (int p : kept) is_kept[p] = 1;

    // Row/column strides of each party inside the reshaped matrix.
    std::vector<long> row_stride(n, 0), col_stride(n, 0);
    long rows = 1, cols = 1;
    for (int p = n - 1; p >= 0; --p) {
        if (is_kept[p]) {
            row_stride[p] = rows;
            rows *= dims[p];
        } else {
            col_stride[p] = cols;
            cols *= dims[p];
        }
    }

    const auto st = strides(dims);
    Mat M(rows, cols);
    for (long I = 0; I < total; ++I) {
        long r = 0, c = 0;
        for (int p = 0; p < n; ++p) {
            long digit = (I / st[p]) % dims[p];
            if (is_kept[p])
                r += digit * row_stride[p];
            else
                c += digit * col_stride[p];
        }
        M(r, c) = amps[I];
    }
    return M;
}

Mat reduced_density(const Vec& amps, const std::vector<int>& dims, const std::vector<int>& kept) {
    Mat M = matricize(amps, dims, kept);
    return M * M.adjoint();
}

DensityOperator partial_trace(const StateVector& state, const std::vector<int>& traced) {
    check_party_list(traced, state.n(), false, false);
    std::vector<int> kept = complement_of(traced, state.n());
    std::vector<int> kept_dims;
    kept_dims.reserve(kept.size());
    for (int p : kept) kept_dims.push_back(state.dim(p));
    return DensityOperator(kept_dims, reduced_density(state.amps(), state.dims(), kept));
}

Vec apply_party_operator(const Vec& amps, const std::vector<int>& dims, int party, const Mat& op) {
    const int n = static_cast<int>(dims.size());
    if (party < 0 || party >= n) throw std::invalid_argument("party index out of range");
    if (op.rows() != dims[party] || op.cols() != dims[party])
        throw std::invalid_argument("operator shape does not match party dimension");
    const long total = total_dim(dims);
    if (amps.size() != total) throw std::invalid_argument("amplitude count does not match dims");

    const long d = dims[party];
    long inner = 1;
    for (int p = n - 1; p > party; --p) inner *= dims[p];
    const long block = d * inner;
    const long outer = total / block;

    using RowMat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Vec out(total);
    for (long o = 0; o < outer; ++o) {
        Eigen::Map<const RowMat> src(amps.data() + o * block, d, inner);
        Eigen::Map<RowMat> dst(out.data() + o * block, d, inner);
        dst.noalias() = op * src;
    }
    return out;
}

Vec apply_local_projectors(const StateVector& state, const std::vector<Projector>& projs) {
    if (static_cast<int>(projs.size()) != state.n())
        throw std::invalid_argument("need exactly one projector per party");
    Vec cur = state.amps();
    for (int p = 0; p < state.n(); ++p) {
        if (projs[p].dim() != state.dim(p))
            throw std::invalid_argument("projector dimension does not match party");
        cur = apply_party_operator(cur, state.dims(), p, projs[p].matrix);
    }
    return cur;
}

std::vector<std::vector<int>> degeneracy_classes_of(const RVec& coeffs, double rel_gap) {
    // Coefficients arrive sorted descending; adjacent values closer than
    // rel_gap * max merge, transitively.
    std::vector<std::vector<int>> classes;
    if (coeffs.size() == 0) return classes;
    const double scale = std::max(coeffs[0], 1e-300);
    classes.push_back({0});
    for (int i = 1; i < coeffs.size(); ++i) {
        if (coeffs[i - 1] - coeffs[i] <= rel_gap * scale)
            classes.back().push_back(i);
        else
            classes.push_back({i});
    }
    return classes;
}

SchmidtData schmidt_decompose(const StateVector& state, int pivot, const Tolerances& tol) {
    if (pivot < 0 || pivot >= state.n()) throw std::invalid_argument("pivot out of range");
    Mat M = matricize(state.amps(), state.dims(), {pivot});

    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = tol.rank * std::max(sv.size() ? sv(0) : 0.0, 1e-300);
    int m = 0;
    while (m < sv.size() && sv(m) > cutoff) ++m;
    if (m == 0) throw std::runtime_error("state has numerically zero norm across the pivot cut");

    SchmidtData sd;
    sd.pivot = pivot;
    sd.coeffs = sv.head(m).array().square();
    sd.left_vectors = svd.matrixU().leftCols(m);
    // M = U S V^dagger and psi = sum_rc M(r,c)|r>|c>, so the right Schmidt
    // vectors are the conjugated columns of V.
    sd.right_vectors = svd.matrixV().leftCols(m).conjugate();
    sd.comp_parties = complement_of({pivot}, state.n());
    for (int p : sd.comp_parties) sd.comp_dims.push_back(state.dim(p));
    sd.classes = degeneracy_classes_of(sd.coeffs, tol.degen);
    return sd;
}

Mat support_basis(const Mat& rho, double rel_tol) {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    const RVec& ev = es.eigenvalues();  // ascending
    const double top = std::max(ev(ev.size() - 1), 0.0);
    const double cutoff = rel_tol * std::max(top, 1e-300);
    int keep = 0;
    for (int i = 0; i < ev.size(); ++i)
        if (ev(i) > cutoff) ++keep;
    Mat basis(rho.rows(), keep);
    // Reorder to descending eigenvalue so column 0 is the dominant direction.
    for (int i = 0; i < keep; ++i) basis.col(i) = es.eigenvectors().col(ev.size() - 1 - i);
    return basis;
}

Projector support_projector(const DensityOperator& rho, double tol) {
    return Projector::from_basis(support_basis(rho.matrix, tol));
}

bool orthogonal_supports(const DensityOperator& a, const DensityOperator& b, double tol) {
    if (a.dim() != b.dim()) throw std::invalid_argument("support comparison needs equal dimensions");
    Tolerances t;
    Projector pa = support_projector(a, t.rank);
    Projector pb = support_projector(b, t.rank);
    return (pa.matrix * pb.matrix).norm() <= tol;
}

double fidelity(const StateVector& a, const StateVector& b) {
    if (a.dims() != b.dims()) throw std::invalid_argument("fidelity needs identical dims");
    return std::abs(a.amps().dot(b.amps()));
}

Vec canonical_phase(const Vec& amps) {
    long best = 0;
    double best_mag = -1.0;
    for (long i = 0; i < amps.size(); ++i) {
        double m = std::abs(amps[i]);
        if (m > best_mag + 1e-15) {
            best_mag = m;
            best = i;
        }
    }
    if (best_mag <= 0.0) return amps;
    Cx phase = amps[best] / best_mag;
    return amps / phase;
}

}  // namespace qmarg
