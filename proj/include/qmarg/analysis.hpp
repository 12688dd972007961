#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "qmarg/tensor.hpp"
#include "qmarg/types.hpp"

namespace qmarg {

/// A family of projector rows certifying that a state is undetermined by its
/// single-party-removed marginals. Row j holds one projector per party in
/// `parties` (the scope; all parties for the ordinary analysis, a subset for
/// scoped analysis; parties outside the scope act as identity). Valid sets
/// satisfy, for the certified state psi:
///   - per party, rows are pairwise orthogonal,
///   - every projector acts nonnull on psi,
///   - psi equals the sum of its row-projected blocks,
///   - per party, the rows sum to the support projector of that party's
///     marginal (refined form).
struct SchmidtProjectorSet {
    std::vector<int> dims;                      // full system dims
    std::vector<int> parties;                   // scope, 0-based ascending
    std::vector<std::vector<Projector>> rows;   // rows[j][s] acts on parties[s]
    std::optional<int> pivot;                   // pivot party used to build it
    Tolerances tol;

    int L() const { return static_cast<int>(rows.size()); }
    bool covers(int party) const;
    /// Projector of `row` on original party index `party` (must be in scope).
    const Projector& at(int row, int party) const;
    /// Apply row `j`'s projectors (identity outside the scope). Unnormalized.
    Vec apply_row(const Vec& amps, int j) const;
};

enum class Verdict { determined, undetermined };
enum class AnalysisPath { generic, degenerate_commutant, bipartite, qubit_fastpath };

const char* to_string(Verdict v);
const char* to_string(AnalysisPath p);

struct AnalysisReport {
    Verdict verdict = Verdict::determined;
    int schmidt_number = 1;
    /// True when the search is not known to be exhaustive (degenerate path
    /// with L strictly below the pivot-rank ceiling).
    bool schmidt_number_lower_bound = false;
    std::optional<SchmidtProjectorSet> certificate;
    std::optional<std::vector<std::vector<int>>> partition;  // 0-based Schmidt indices
    AnalysisPath path = AnalysisPath::generic;
    int pivot = 0;             // 0-based
    std::vector<int> subset;   // scope analyzed, 0-based ascending
    std::string diagnostics;
};

struct AnalysisOptions {
    Tolerances tol{};
    std::optional<int> pivot;      // force the pivot party (0-based)
    std::uint64_t seed = 1729;     // seeds the randomized commutant draws
    int commutant_draws = 8;
};

/// Decide whether `state` is determined by its (n-1)-party marginals.
/// Dispatch: n == 2 -> bipartite; all qubits -> qubit fast path; pivot
/// spectrum all distinct -> generic support-overlap partition; otherwise the
/// randomized commutant path. Every emitted certificate is re-verified.
AnalysisReport analyze(const StateVector& state, const AnalysisOptions& opts = {});

/// Same decision with projector rows required only on `parties` (>= 2,
/// 0-based, ascending); identity elsewhere.
AnalysisReport s_local_analyze(const StateVector& state, const std::vector<int>& parties,
                               const AnalysisOptions& opts = {});

/// Connected components of the Schmidt-index graph at `pivot`, where indices
/// r,t are joined iff some non-pivot party's conditional marginals have
/// non-orthogonal supports. Requires an all-distinct pivot spectrum; with two
/// or more components the state is undetermined. 0-based index lists, ordered
/// by smallest member.
std::vector<std::vector<int>> generic_partition(const StateVector& state, int pivot,
                                                const Tolerances& tol = {});

/// Operators on supp(rho_pivot) that every valid pivot row projector must
/// commute with: rho_pivot itself plus, for each other scoped party m and
/// each matrix unit E on H_m, Tr_{pivot-complement}[(E_m (x) I)|psi><psi|],
/// all compressed to the support basis (returned as `basis`). Needs at least
/// three scoped parties; the two-party case is handled by the pair path.
struct CorrelationOps {
    Mat basis;             // d_pivot x M support basis (columns)
    std::vector<Mat> ops;  // M x M, compressed coordinates
};
CorrelationOps correlation_operators(const StateVector& state, int pivot,
                                     const Tolerances& tol = {});
CorrelationOps correlation_operators(const StateVector& state, int pivot,
                                     const std::vector<int>& scope, const Tolerances& tol);

/// Finest family of mutually orthogonal projectors summing to the identity
/// such that every op is block-diagonal (||Q_l A Q_l'||_F <= tol.orth).
/// Computed from the nullspace of the stacked commutator constraints for
/// {A, A^dagger}: random Hermitian commutant elements are drawn `draws`
/// times, their eigenprojectors merged at relative gap tol.degen, and the
/// finest verified family wins (single block is always a valid fallback).
/// Deterministic for a fixed seed.
std::vector<Mat> commutant_partition(const std::vector<Mat>& ops, int dim,
                                     const Tolerances& tol = {}, std::uint64_t seed = 1729,
                                     int draws = 8);

/// Rows from a partition of Schmidt indices at `pivot` (canonical
/// decomposition): the pivot row projector spans its block's Schmidt vectors,
/// and every other party's row projector is the support of that block's
/// summed conditional marginals. Output is NOT certified; callers verify.
SchmidtProjectorSet construct_projectors(const StateVector& state, int pivot,
                                         const std::vector<std::vector<int>>& partition,
                                         const Tolerances& tol = {});

/// Same construction from an explicit (possibly adapted) decomposition and
/// scope; used by the degenerate and pair paths whose decompositions are not
/// the canonical SVD output.
SchmidtProjectorSet construct_projectors(const StateVector& state, const SchmidtData& sd,
                                         const std::vector<std::vector<int>>& partition,
                                         const std::vector<int>& scope, const Tolerances& tol = {});

struct VerifyResult {
    bool ok = false;
    double max_cross_norm = 0;     // per-party pairwise row overlap
    double min_row_action = 0;     // smallest ||P_j^i psi||
    double recon_residual = 0;     // ||psi - sum_j (row j) psi||
    double support_residual = 0;   // refined-form deviation per party (max)
    std::string detail;
    explicit operator bool() const { return ok; }
};

/// Numerical check of all certificate clauses (orthogonality, nonnull
/// action, reconstruction, refined support form) at the set's tolerances.
VerifyResult verify_schmidt_projectors(const StateVector& state, const SchmidtProjectorSet& cand);

/// Components of the nonzero computational index tuples under "share a
/// coordinate value at the same party" adjacency. Amplitudes below
/// rel_tol * max|amp| count as zero. Two or more components soundly certify
/// undetermined in the computational basis; one component proves nothing.
std::vector<std::vector<long>> basis_connectivity_partition(const StateVector& state,
                                                            double rel_tol = 1e-9);

/// Coarsen an undetermined state's certificate to exactly two rows by
/// merging rows 2..L. Empty when the state is determined.
std::optional<SchmidtProjectorSet> two_block_check(const StateVector& state,
                                                   const AnalysisOptions& opts = {});

/// Normal form alpha|0^..0^> + beta|1^..1^> for all-qubit states, when one
/// exists: alpha, beta > 0 and one orthonormal basis per party (columns of
/// bases[i]), relative phases absorbed into party 1's basis vectors.
struct GhzForm {
    double alpha = 0;
    double beta = 0;
    std::vector<Mat> bases;  // 2x2, column j = |j^> for that party
};
std::optional<GhzForm> qubit_ghz_check(const StateVector& state, const AnalysisOptions& opts = {});

}  // namespace qmarg
