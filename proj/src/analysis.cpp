#include "qmarg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "qmarg/rng.hpp"

namespace qmarg {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }
};

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Rebuild a numerically drifted projector candidate from its eigenvectors
/// with eigenvalue above 1/2. Keeps sums of nearly-orthogonal projectors
/// valid without tightening tolerances.
Projector round_projector(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint().eval()));
    int keep = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 0.5) ++keep;
    Mat basis(m.rows(), keep);
    int c = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 0.5) basis.col(c++) = es.eigenvectors().col(i);
    return Projector::from_basis(basis);
}

void check_scope(const std::vector<int>& scope, int n) {
    if (scope.size() < 2) throw std::invalid_argument("analysis scope needs at least two parties");
    int prev = -1;
    for (int p : scope) {
        if (p < 0 || p >= n) throw std::invalid_argument("scope party index out of range");
        if (p <= prev) throw std::invalid_argument("scope must be strictly ascending");
        prev = p;
    }
}

std::vector<int> full_scope(int n) {
    std::vector<int> s(n);
    std::iota(s.begin(), s.end(), 0);
    return s;
}

/// Canonical block order: members ascending, blocks by smallest member.
std::vector<std::vector<int>> canonical_partition(std::vector<std::vector<int>> part) {
    for (auto& b : part) std::sort(b.begin(), b.end());
    std::sort(part.begin(), part.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return part;
}

// ---------------------------------------------------------------------------
// Commutant machinery
// ---------------------------------------------------------------------------

/// Orthonormal basis (as matrices) of {X : XA = AX and XA^t = A^t X for all
/// ops A}, via the eigen-nullspace of the stacked, squared commutator
/// constraints. Column-major vec convention: vec(XA - AX) = (A^T (x) I - I (x) A) vec(X).
std::vector<Mat> commutant_basis(const std::vector<Mat>& ops, int dim) {
    const long d2 = static_cast<long>(dim) * dim;
    Mat G = Mat::Zero(d2, d2);
    const Mat id = Mat::Identity(dim, dim);
    for (const Mat& a : ops) {
        for (const Mat& b : {a, Mat(a.adjoint())}) {
            Mat K = kron(b.transpose(), id) - kron(id, b);
            G += K.adjoint() * K;
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    const RVec& ev = es.eigenvalues();  // ascending, >= 0 up to noise
    const double top = std::max(ev(ev.size() - 1), 0.0);
    const double cutoff = 1e-14 * std::max(top, 1.0);
    std::vector<Mat> basis;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) > cutoff) continue;
        Mat X(dim, dim);
        for (long c = 0; c < dim; ++c) X.col(c) = es.eigenvectors().col(i).segment(c * dim, dim);
        basis.push_back(std::move(X));
    }
    return basis;
}

std::vector<Mat> eigenprojector_blocks(const Mat& herm, double degen_gap) {
    Eigen::SelfAdjointEigenSolver<Mat> es(herm);
    const RVec& ev = es.eigenvalues();
    const int d = static_cast<int>(ev.size());
    const double spread = ev(d - 1) - ev(0);
    const double gap = degen_gap * std::max(1.0, spread);
    std::vector<Mat> blocks;
    int start = 0;
    for (int i = 1; i <= d; ++i) {
        if (i == d || ev(i) - ev(i - 1) > gap) {
            blocks.push_back(es.eigenvectors().middleCols(start, i - start) *
                             es.eigenvectors().middleCols(start, i - start).adjoint());
            start = i;
        }
    }
    return blocks;
}

bool blocks_diagonalize(const std::vector<Mat>& blocks, const std::vector<Mat>& ops, double orth) {
    for (const Mat& a : ops) {
        const double bound = orth * std::max(1.0, a.norm());
        for (std::size_t l = 0; l < blocks.size(); ++l)
            for (std::size_t t = 0; t < blocks.size(); ++t)
                if (l != t && (blocks[l] * a * blocks[t]).norm() > bound) return false;
    }
    return true;
}

std::vector<int> block_signature(const std::vector<Mat>& blocks) {
    std::vector<int> sizes;
    sizes.reserve(blocks.size());
    for (const Mat& q : blocks) sizes.push_back(static_cast<int>(std::lround(q.trace().real())));
    std::sort(sizes.begin(), sizes.end());
    return sizes;
}

/// Total order for "finest verified result": more blocks first, then
/// lexicographically smaller size signature, then the incumbent.
bool finer_than(const std::vector<Mat>& a, const std::vector<Mat>& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return block_signature(a) < block_signature(b);
}

// ---------------------------------------------------------------------------
// Conditional-marginal helpers
// ---------------------------------------------------------------------------

/// Support projectors of each right Schmidt vector's marginal on each scoped
/// non-pivot party. supp[i][s] is the support for Schmidt index i at scope
/// position s (pivot's own position left empty).
std::vector<std::vector<Projector>> conditional_supports(const SchmidtData& sd, const std::vector<int>& scope,
                                                         const Tolerances& tol) {
    std::vector<int> pos_in_comp(scope.size(), -1);
    for (std::size_t s = 0; s < scope.size(); ++s) {
        if (scope[s] == sd.pivot) continue;
        auto it = std::find(sd.comp_parties.begin(), sd.comp_parties.end(), scope[s]);
        pos_in_comp[s] = static_cast<int>(it - sd.comp_parties.begin());
    }
    std::vector<std::vector<Projector>> supp(sd.rank(), std::vector<Projector>(scope.size()));
    for (int i = 0; i < sd.rank(); ++i) {
        Vec v = sd.right_vectors.col(i);
        for (std::size_t s = 0; s < scope.size(); ++s) {
            if (scope[s] == sd.pivot) continue;
            Mat rho = reduced_density(v, sd.comp_dims, {pos_in_comp[s]});
            supp[i][s] = Projector::from_basis(support_basis(rho, tol.rank));
        }
    }
    return supp;
}

std::vector<std::vector<int>> overlap_components(const SchmidtData& sd, const std::vector<int>& scope,
                                                 const Tolerances& tol) {
    const int m = sd.rank();
    auto supp = conditional_supports(sd, scope, tol);
    UnionFind uf(m);
    for (int r = 0; r < m; ++r) {
        for (int t = r + 1; t < m; ++t) {
            for (std::size_t s = 0; s < scope.size(); ++s) {
                if (scope[s] == sd.pivot) continue;
                if ((supp[r][s].matrix * supp[t][s].matrix).norm() > tol.orth) {
                    uf.unite(r, t);
                    break;
                }
            }
        }
    }
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < m; ++i) groups[uf.find(i)].push_back(i);
    std::vector<std::vector<int>> part;
    for (auto& [root, members] : groups) part.push_back(std::move(members));
    return canonical_partition(std::move(part));
}

// ---------------------------------------------------------------------------
// Adapted decompositions from commutant blocks
// ---------------------------------------------------------------------------

struct Adapted {
    SchmidtData sd;
    std::vector<std::vector<int>> partition;
};

/// Rotate the pivot support basis so each commutant block carries its own
/// group of Schmidt vectors: diagonalize the compressed pivot marginal inside
/// each block, then re-sort all coefficients descending. The result is a
/// valid decomposition of the state whose index partition mirrors the blocks.
Adapted adapt_to_blocks(const StateVector& state, int pivot, const Mat& support_cols,
                        const std::vector<Mat>& blocks, const Tolerances& tol) {
    Mat rho = reduced_density(state.amps(), state.dims(), {pivot});
    Mat rho_c = support_cols.adjoint() * rho * support_cols;
    Mat m_psi = matricize(state.amps(), state.dims(), {pivot});

    struct Item {
        double coeff;
        Vec left;
        int block;
    };
    std::vector<Item> items;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        Eigen::SelfAdjointEigenSolver<Mat> qes(blocks[bi]);
        std::vector<int> cols;
        for (int i = 0; i < qes.eigenvalues().size(); ++i)
            if (qes.eigenvalues()(i) > 0.5) cols.push_back(i);
        if (cols.empty()) continue;
        Mat cb(blocks[bi].rows(), cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) cb.col(c) = qes.eigenvectors().col(cols[c]);

        Mat rho_b = cb.adjoint() * rho_c * cb;
        Eigen::SelfAdjointEigenSolver<Mat> res(rho_b);
        for (int i = static_cast<int>(res.eigenvalues().size()) - 1; i >= 0; --i) {
            Item it;
            it.coeff = std::max(res.eigenvalues()(i), 0.0);
            it.left = support_cols * (cb * res.eigenvectors().col(i));
            it.block = static_cast<int>(bi);
            items.push_back(std::move(it));
        }
    }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.coeff > b.coeff; });

    const int m = static_cast<int>(items.size());
    Adapted out;
    out.sd.pivot = pivot;
    out.sd.coeffs = RVec(m);
    out.sd.left_vectors = Mat(state.dim(pivot), m);
    out.sd.right_vectors = Mat(m_psi.cols(), m);
    std::map<int, std::vector<int>> by_block;
    for (int i = 0; i < m; ++i) {
        out.sd.coeffs(i) = items[i].coeff;
        out.sd.left_vectors.col(i) = items[i].left;
        Vec right = (items[i].left.adjoint() * m_psi).transpose();
        out.sd.right_vectors.col(i) = right / std::sqrt(std::max(items[i].coeff, 1e-300));
        by_block[items[i].block].push_back(i);
    }
    for (int p = 0; p < state.n(); ++p)
        if (p != pivot) {
            out.sd.comp_parties.push_back(p);
            out.sd.comp_dims.push_back(state.dim(p));
        }
    out.sd.classes = degeneracy_classes_of(out.sd.coeffs, tol.degen);
    for (auto& [b, members] : by_block) out.partition.push_back(std::move(members));
    out.partition = canonical_partition(std::move(out.partition));
    return out;
}

/// Transition marginals onto `pivot` between support vectors of the
/// two-party marginal on {pivot, other}: the operators every valid pivot row
/// must block-diagonalize when rows live on exactly these two parties.
std::vector<Mat> pair_transition_ops(const StateVector& state, int pivot, int other, const Mat& support_cols,
                                     const Tolerances& tol) {
    const int lo = std::min(pivot, other), hi = std::max(pivot, other);
    Mat rho_pair = reduced_density(state.amps(), state.dims(), {lo, hi});
    Eigen::SelfAdjointEigenSolver<Mat> es(rho_pair);
    const RVec& ev = es.eigenvalues();
    const double cutoff = tol.rank * std::max(ev(ev.size() - 1), 1e-300);

    const int dlo = state.dim(lo), dhi = state.dim(hi);
    using RowMat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::vector<Mat> t_mats;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) <= cutoff) continue;
        Vec chi = es.eigenvectors().col(i);
        Eigen::Map<const RowMat> grid(chi.data(), dlo, dhi);
        t_mats.push_back(pivot == lo ? Mat(grid) : Mat(grid.transpose()));
    }
    std::vector<Mat> ops;
    Mat rho_pivot = reduced_density(state.amps(), state.dims(), {pivot});
    ops.push_back(support_cols.adjoint() * rho_pivot * support_cols);
    for (std::size_t b = 0; b < t_mats.size(); ++b)
        for (std::size_t g = b; g < t_mats.size(); ++g)
            ops.push_back(support_cols.adjoint() * (t_mats[b] * t_mats[g].adjoint()) * support_cols);
    return ops;
}

// ---------------------------------------------------------------------------
// Construction + certification
// ---------------------------------------------------------------------------

SchmidtProjectorSet construct_from_decomposition(const StateVector& state, const SchmidtData& sd,
                                                 const std::vector<std::vector<int>>& partition,
                                                 const std::vector<int>& scope, const Tolerances& tol) {
    if (partition.size() < 2) throw std::invalid_argument("partition needs at least two blocks");
    std::vector<char> seen(sd.rank(), 0);
    for (const auto& block : partition)
        for (int i : block) {
            if (i < 0 || i >= sd.rank() || seen[i]) throw std::invalid_argument("partition must cover each Schmidt index exactly once");
            seen[i] = 1;
        }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw std::invalid_argument("partition must cover each Schmidt index exactly once");

    std::vector<int> pos_in_comp(scope.size(), -1);
    for (std::size_t s = 0; s < scope.size(); ++s) {
        if (scope[s] == sd.pivot) continue;
        auto it = std::find(sd.comp_parties.begin(), sd.comp_parties.end(), scope[s]);
        if (it == sd.comp_parties.end()) throw std::invalid_argument("scope party missing from decomposition");
        pos_in_comp[s] = static_cast<int>(it - sd.comp_parties.begin());
    }

    SchmidtProjectorSet set;
    set.dims = state.dims();
    set.parties = scope;
    set.pivot = sd.pivot;
    set.tol = tol;
    for (const auto& block : partition) {
        std::vector<Projector> row(scope.size());
        Mat left(state.dim(sd.pivot), block.size());
        for (std::size_t c = 0; c < block.size(); ++c) left.col(c) = sd.left_vectors.col(block[c]);
        for (std::size_t s = 0; s < scope.size(); ++s) {
            if (scope[s] == sd.pivot) {
                row[s] = Projector::from_basis(left);
                continue;
            }
            long dj = state.dim(scope[s]);
            Mat sum = Mat::Zero(dj, dj);
            for (int i : block) sum += reduced_density(sd.right_vectors.col(i), sd.comp_dims, {pos_in_comp[s]});
            row[s] = Projector::from_basis(support_basis(sum, tol.rank));
        }
        set.rows.push_back(std::move(row));
    }
    return set;
}

struct Certified {
    SchmidtProjectorSet set;
    std::vector<std::vector<int>> partition;
    int merges = 0;
};

/// Construct rows from the partition and verify; on failure merge any blocks
/// whose cross-party projectors overlap and retry, to fixpoint. The merge can
/// only coarsen, so the loop terminates in at most L steps.
std::optional<Certified> certify_partition(const StateVector& state, const SchmidtData& sd,
                                           std::vector<std::vector<int>> partition, const std::vector<int>& scope,
                                           const Tolerances& tol) {
    partition = canonical_partition(std::move(partition));
    int merges = 0;
    while (partition.size() >= 2) {
        SchmidtProjectorSet set = construct_from_decomposition(state, sd, partition, scope, tol);
        if (verify_schmidt_projectors(state, set)) return Certified{std::move(set), std::move(partition), merges};

        const int L = static_cast<int>(partition.size());
        UnionFind uf(L);
        bool merged = false;
        for (int l = 0; l < L; ++l)
            for (int t = l + 1; t < L; ++t)
                for (std::size_t s = 0; s < scope.size(); ++s)
                    if ((set.rows[l][s].matrix * set.rows[t][s].matrix).norm() > tol.orth) {
                        merged |= uf.unite(l, t);
                        break;
                    }
        if (!merged) return std::nullopt;
        std::map<int, std::vector<int>> grouped;
        for (int l = 0; l < L; ++l) {
            auto& dst = grouped[uf.find(l)];
            dst.insert(dst.end(), partition[l].begin(), partition[l].end());
        }
        partition.clear();
        for (auto& [root, members] : grouped) partition.push_back(std::move(members));
        partition = canonical_partition(std::move(partition));
        ++merges;
    }
    return std::nullopt;
}

/// Contract one party against a fixed local vector: out over the remaining
/// parties, out[rest] = sum_a conj(u[a]) amps[.., a, ..].
Vec contract_party(const Vec& amps, const std::vector<int>& dims, int party, const Vec& u) {
    const int n = static_cast<int>(dims.size());
    const long d = dims[party];
    long inner = 1;
    for (int p = n - 1; p > party; --p) inner *= dims[p];
    const long block = d * inner;
    const long outer = amps.size() / block;
    Vec out(amps.size() / d);
    for (long o = 0; o < outer; ++o)
        for (long in = 0; in < inner; ++in) {
            Cx acc = 0;
            for (long a = 0; a < d; ++a) acc += std::conj(u[a]) * amps[o * block + a * inner + in];
            out[o * inner + in] = acc;
        }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SchmidtProjectorSet
// ---------------------------------------------------------------------------

bool SchmidtProjectorSet::covers(int party) const {
    return std::find(parties.begin(), parties.end(), party) != parties.end();
}

const Projector& SchmidtProjectorSet::at(int row, int party) const {
    auto it = std::find(parties.begin(), parties.end(), party);
    if (it == parties.end()) throw std::invalid_argument("party not in certificate scope");
    return rows.at(row).at(it - parties.begin());
}

Vec SchmidtProjectorSet::apply_row(const Vec& amps, int j) const {
    Vec cur = amps;
    for (std::size_t s = 0; s < parties.size(); ++s)
        cur = apply_party_operator(cur, dims, parties[s], rows.at(j)[s].matrix);
    return cur;
}

const char* to_string(Verdict v) { return v == Verdict::determined ? "determined" : "undetermined"; }

const char* to_string(AnalysisPath p) {
    switch (p) {
        case AnalysisPath::generic: return "generic";
        case AnalysisPath::degenerate_commutant: return "degenerate-commutant";
        case AnalysisPath::bipartite: return "bipartite";
        case AnalysisPath::qubit_fastpath: return "qubit-fastpath";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

VerifyResult verify_schmidt_projectors(const StateVector& state, const SchmidtProjectorSet& cand) {
    VerifyResult res;
    std::ostringstream detail;
    if (cand.dims != state.dims()) {
        res.detail = "dimension mismatch";
        return res;
    }
    if (cand.L() < 2) {
        res.detail = "fewer than two rows";
        return res;
    }
    const Tolerances& tol = cand.tol;
    for (const auto& row : cand.rows) {
        if (row.size() != cand.parties.size()) {
            res.detail = "row width does not match scope";
            return res;
        }
        for (std::size_t s = 0; s < row.size(); ++s)
            if (row[s].dim() != state.dim(cand.parties[s])) {
                res.detail = "projector dimension mismatch";
                return res;
            }
    }

    bool ok = true;
    for (std::size_t s = 0; s < cand.parties.size(); ++s)
        for (int j = 0; j < cand.L(); ++j)
            for (int t = j + 1; t < cand.L(); ++t)
                res.max_cross_norm =
                    std::max(res.max_cross_norm, (cand.rows[j][s].matrix * cand.rows[t][s].matrix).norm());
    if (res.max_cross_norm > tol.orth) {
        ok = false;
        detail << "row overlap " << res.max_cross_norm << " exceeds " << tol.orth << "; ";
    }

    res.min_row_action = 1.0;
    for (int j = 0; j < cand.L(); ++j)
        for (std::size_t s = 0; s < cand.parties.size(); ++s) {
            double nrm = apply_party_operator(state.amps(), state.dims(), cand.parties[s], cand.rows[j][s].matrix).norm();
            res.min_row_action = std::min(res.min_row_action, nrm);
        }
    if (res.min_row_action <= tol.rank) {
        ok = false;
        detail << "null row action " << res.min_row_action << "; ";
    }

    Vec sum = Vec::Zero(state.total_dim());
    for (int j = 0; j < cand.L(); ++j) sum += cand.apply_row(state.amps(), j);
    res.recon_residual = (state.amps() - sum).norm();
    if (res.recon_residual > tol.recon) {
        ok = false;
        detail << "reconstruction residual " << res.recon_residual << "; ";
    }

    for (std::size_t s = 0; s < cand.parties.size(); ++s) {
        const int party = cand.parties[s];
        Mat rows_sum = Mat::Zero(state.dim(party), state.dim(party));
        for (int j = 0; j < cand.L(); ++j) rows_sum += cand.rows[j][s].matrix;
        Mat rho = reduced_density(state.amps(), state.dims(), {party});
        Mat supp = support_basis(rho, tol.rank);
        res.support_residual = std::max(res.support_residual, (rows_sum - supp * supp.adjoint()).norm());
    }
    if (res.support_residual > tol.recon) {
        ok = false;
        detail << "support-sum residual " << res.support_residual << "; ";
    }

    res.ok = ok;
    res.detail = ok ? "ok" : detail.str();
    return res;
}

// ---------------------------------------------------------------------------
// Public construction entry points
// ---------------------------------------------------------------------------

SchmidtProjectorSet construct_projectors(const StateVector& state, const SchmidtData& sd,
                                         const std::vector<std::vector<int>>& partition,
                                         const std::vector<int>& scope, const Tolerances& tol) {
    check_scope(scope, state.n());
    return construct_from_decomposition(state, sd, canonical_partition(partition), scope, tol);
}

SchmidtProjectorSet construct_projectors(const StateVector& state, int pivot,
                                         const std::vector<std::vector<int>>& partition, const Tolerances& tol) {
    SchmidtData sd = schmidt_decompose(state, pivot, tol);
    return construct_projectors(state, sd, partition, full_scope(state.n()), tol);
}

std::vector<std::vector<int>> generic_partition(const StateVector& state, int pivot, const Tolerances& tol) {
    SchmidtData sd = schmidt_decompose(state, pivot, tol);
    if (sd.degenerate_class_count() > 0)
        throw std::invalid_argument("pivot spectrum is degenerate; the commutant path must be used");
    return overlap_components(sd, full_scope(state.n()), tol);
}

CorrelationOps correlation_operators(const StateVector& state, int pivot, const std::vector<int>& scope,
                                     const Tolerances& tol) {
    check_scope(scope, state.n());
    if (scope.size() < 3)
        throw std::invalid_argument("correlation operators need at least three scoped parties; two-party analysis uses the pair path");
    if (std::find(scope.begin(), scope.end(), pivot) == scope.end())
        throw std::invalid_argument("pivot must belong to the scope");

    Mat rho = reduced_density(state.amps(), state.dims(), {pivot});
    CorrelationOps out;
    out.basis = support_basis(rho, tol.rank);
    out.ops.push_back(out.basis.adjoint() * rho * out.basis);

    Mat m_psi = matricize(state.amps(), state.dims(), {pivot});
    for (int m : scope) {
        if (m == pivot) continue;
        const int dm = state.dim(m);
        for (int a = 0; a < dm; ++a)
            for (int b = 0; b < dm; ++b) {
                Mat unit = Mat::Zero(dm, dm);
                unit(a, b) = 1.0;
                Vec phi = apply_party_operator(state.amps(), state.dims(), m, unit);
                Mat f = matricize(phi, state.dims(), {pivot}) * m_psi.adjoint();
                out.ops.push_back(out.basis.adjoint() * f * out.basis);
            }
    }
    return out;
}

CorrelationOps correlation_operators(const StateVector& state, int pivot, const Tolerances& tol) {
    if (state.n() < 3)
        throw std::invalid_argument("correlation operators need at least three parties; bipartite analysis uses the pair path");
    return correlation_operators(state, pivot, full_scope(state.n()), tol);
}

std::vector<Mat> commutant_partition(const std::vector<Mat>& ops, int dim, const Tolerances& tol,
                                     std::uint64_t seed, int draws) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    for (const Mat& a : ops)
        if (a.rows() != dim || a.cols() != dim) throw std::invalid_argument("ops must be square with the given dimension");
    std::vector<Mat> best{Mat::Identity(dim, dim)};
    if (dim == 1) return best;

    const std::vector<Mat> basis = commutant_basis(ops, dim);
    for (int r = 0; r < draws; ++r) {
        std::mt19937_64 rng = sub_rng(seed, static_cast<std::uint64_t>(r));
        std::normal_distribution<double> gauss;
        Mat x = Mat::Zero(dim, dim);
        for (const Mat& b : basis) x += Cx(gauss(rng), gauss(rng)) * b;
        Mat h = 0.5 * (x + x.adjoint().eval());
        if (h.norm() < 1e-12) continue;
        std::vector<Mat> blocks = eigenprojector_blocks(h, tol.degen);
        if (blocks.size() < 2) continue;
        if (!blocks_diagonalize(blocks, ops, tol.orth)) continue;
        if (finer_than(blocks, best)) best = std::move(blocks);
    }
    return best;
}

std::vector<std::vector<long>> basis_connectivity_partition(const StateVector& state, double rel_tol) {
    const Vec& amps = state.amps();
    double max_mag = 0;
    for (long i = 0; i < amps.size(); ++i) max_mag = std::max(max_mag, std::abs(amps[i]));
    std::vector<long> kept;
    for (long i = 0; i < amps.size(); ++i)
        if (std::abs(amps[i]) > rel_tol * max_mag) kept.push_back(i);

    const auto st = strides(state.dims());
    UnionFind uf(static_cast<int>(kept.size()));
    // Tuples sharing a coordinate value at the same party are adjacent; union
    // everything inside each (party, value) bucket.
    for (int p = 0; p < state.n(); ++p) {
        std::map<long, int> first_in_bucket;
        for (std::size_t k = 0; k < kept.size(); ++k) {
            long digit = (kept[k] / st[p]) % state.dim(p);
            auto [it, fresh] = first_in_bucket.try_emplace(digit, static_cast<int>(k));
            if (!fresh) uf.unite(it->second, static_cast<int>(k));
        }
    }
    std::map<int, std::vector<long>> groups;
    for (std::size_t k = 0; k < kept.size(); ++k) groups[uf.find(static_cast<int>(k))].push_back(kept[k]);
    std::vector<std::vector<long>> components;
    for (auto& [root, members] : groups) components.push_back(std::move(members));
    std::sort(components.begin(), components.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return components;
}

// ---------------------------------------------------------------------------
// The analysis pipeline
// ---------------------------------------------------------------------------

namespace {

AnalysisReport analyze_scope(const StateVector& state, const std::vector<int>& scope, const AnalysisOptions& opts) {
    check_scope(scope, state.n());
    const Tolerances& tol = opts.tol;

    std::map<int, SchmidtData> per_party;
    for (int p : scope) per_party.emplace(p, schmidt_decompose(state, p, tol));

    int pivot;
    if (opts.pivot) {
        pivot = *opts.pivot;
        if (std::find(scope.begin(), scope.end(), pivot) == scope.end())
            throw std::invalid_argument("forced pivot is outside the analysis scope");
    } else {
        pivot = scope[0];
        int best_classes = per_party.at(pivot).degenerate_class_count();
        for (int p : scope) {
            int c = per_party.at(p).degenerate_class_count();
            if (c < best_classes) {
                pivot = p;
                best_classes = c;
            }
        }
    }
    const SchmidtData& sd = per_party.at(pivot);

    int min_rank = sd.rank();
    for (auto& [p, d] : per_party) min_rank = std::min(min_rank, d.rank());

    const bool full = static_cast<int>(scope.size()) == state.n();
    const bool all_qubits = std::all_of(state.dims().begin(), state.dims().end(), [](int d) { return d == 2; });

    AnalysisReport rep;
    rep.subset = scope;
    rep.pivot = pivot;

    std::ostringstream diag;
    diag << "pivot " << pivot + 1 << " rank " << sd.rank() << " with " << sd.degenerate_class_count()
         << " degenerate class(es)";

    std::optional<Certified> cert;
    bool degenerate_core = false;

    if (scope.size() == 2) {
        rep.path = AnalysisPath::bipartite;
        const int other = scope[0] == pivot ? scope[1] : scope[0];
        Mat rho = reduced_density(state.amps(), state.dims(), {pivot});
        Mat support = support_basis(rho, tol.rank);
        if (support.cols() >= 2) {
            auto ops = pair_transition_ops(state, pivot, other, support, tol);
            auto blocks = commutant_partition(ops, static_cast<int>(support.cols()), tol, opts.seed,
                                              opts.commutant_draws);
            if (blocks.size() >= 2) {
                Adapted ad = adapt_to_blocks(state, pivot, support, blocks, tol);
                cert = certify_partition(state, ad.sd, ad.partition, scope, tol);
            }
            diag << "; pair path over " << ops.size() << " transition operator(s)";
        }
    } else {
        rep.path = (full && all_qubits) ? AnalysisPath::qubit_fastpath : AnalysisPath::generic;
        if (sd.degenerate_class_count() == 0) {
            auto partition = overlap_components(sd, scope, tol);
            diag << "; support-overlap components: " << partition.size();
            if (partition.size() >= 2) cert = certify_partition(state, sd, partition, scope, tol);
        } else {
            degenerate_core = true;
            if (!(full && all_qubits)) rep.path = AnalysisPath::degenerate_commutant;
            CorrelationOps cors = correlation_operators(state, pivot, scope, tol);
            auto blocks =
                commutant_partition(cors.ops, static_cast<int>(cors.basis.cols()), tol, opts.seed, opts.commutant_draws);
            diag << "; commutant blocks: " << blocks.size() << " from " << cors.ops.size() << " operator(s)";
            if (blocks.size() >= 2) {
                Adapted ad = adapt_to_blocks(state, pivot, cors.basis, blocks, tol);
                cert = certify_partition(state, ad.sd, ad.partition, scope, tol);
            }
        }
    }

    if (cert) {
        rep.verdict = Verdict::undetermined;
        rep.schmidt_number = cert->set.L();
        if (cert->merges > 0) diag << "; blocks merged in " << cert->merges << " pass(es)";
        rep.partition = cert->partition;
        rep.certificate = std::move(cert->set);
    } else {
        rep.verdict = Verdict::determined;
        rep.schmidt_number = 1;
    }
    rep.schmidt_number_lower_bound = degenerate_core && rep.schmidt_number < min_rank;
    if (rep.schmidt_number_lower_bound) diag << "; search not exhaustive (degenerate spectrum)";
    rep.diagnostics = diag.str();
    return rep;
}

}  // namespace

AnalysisReport analyze(const StateVector& state, const AnalysisOptions& opts) {
    return analyze_scope(state, full_scope(state.n()), opts);
}

AnalysisReport s_local_analyze(const StateVector& state, const std::vector<int>& parties,
                               const AnalysisOptions& opts) {
    return analyze_scope(state, parties, opts);
}

std::optional<SchmidtProjectorSet> two_block_check(const StateVector& state, const AnalysisOptions& opts) {
    AnalysisReport rep = analyze(state, opts);
    if (rep.verdict != Verdict::undetermined) return std::nullopt;
    SchmidtProjectorSet cert = std::move(*rep.certificate);
    if (cert.L() == 2) return cert;

    SchmidtProjectorSet merged;
    merged.dims = cert.dims;
    merged.parties = cert.parties;
    merged.pivot = cert.pivot;
    merged.tol = cert.tol;
    merged.rows.resize(2);
    merged.rows[0] = cert.rows[0];
    for (std::size_t s = 0; s < cert.parties.size(); ++s) {
        Mat sum = Mat::Zero(cert.rows[0][s].dim(), cert.rows[0][s].dim());
        for (int j = 1; j < cert.L(); ++j) sum += cert.rows[j][s].matrix;
        merged.rows[1].push_back(round_projector(sum));
    }
    if (!verify_schmidt_projectors(state, merged)) return std::nullopt;
    return merged;
}

std::optional<GhzForm> qubit_ghz_check(const StateVector& state, const AnalysisOptions& opts) {
    for (int d : state.dims())
        if (d != 2) throw std::invalid_argument("normal-form extraction applies to qubit systems only");
    AnalysisReport rep = analyze(state, opts);
    if (rep.verdict != Verdict::undetermined || !rep.certificate || rep.certificate->L() != 2) return std::nullopt;
    const SchmidtProjectorSet& cert = *rep.certificate;

    const int n = state.n();
    std::vector<Vec> u0(n), u1(n);
    for (int p = 0; p < n; ++p) {
        for (int j = 0; j < 2; ++j) {
            const Mat& pj = cert.at(j, p).matrix;
            if (cert.at(j, p).rank != 1) return std::nullopt;
            // rank-1 projector u u^dagger: normalize its largest column
            int col = pj.col(0).norm() >= pj.col(1).norm() ? 0 : 1;
            Vec u = pj.col(col) / pj.col(col).norm();
            (j == 0 ? u0 : u1)[p] = u;
        }
    }

    Vec cur0 = state.amps(), cur1 = state.amps();
    std::vector<int> dims_left = state.dims();
    for (int p = 0; p < n; ++p) {
        cur0 = contract_party(cur0, dims_left, 0, u0[p]);
        cur1 = contract_party(cur1, dims_left, 0, u1[p]);
        dims_left.erase(dims_left.begin());
    }
    Cx a0 = cur0[0], a1 = cur1[0];
    if (std::abs(a0) <= 0 || std::abs(a1) <= 0) return std::nullopt;

    GhzForm form;
    form.alpha = std::abs(a0);
    form.beta = std::abs(a1);
    u0[0] *= a0 / std::abs(a0);  // absorb relative phases into party 1
    u1[0] *= a1 / std::abs(a1);
    for (int p = 0; p < n; ++p) {
        Mat b(2, 2);
        b.col(0) = u0[p];
        b.col(1) = u1[p];
        form.bases.push_back(std::move(b));
    }

    Vec rebuilt0 = Vec::Ones(1), rebuilt1 = Vec::Ones(1);
    for (int p = 0; p < n; ++p) {
        rebuilt0 = kron(rebuilt0, form.bases[p].col(0));
        rebuilt1 = kron(rebuilt1, form.bases[p].col(1));
    }
    Vec rebuilt = form.alpha * rebuilt0 + form.beta * rebuilt1;
    if ((state.amps() - rebuilt).norm() > opts.tol.recon) return std::nullopt;
    return form;
}

}  // namespace qmarg
