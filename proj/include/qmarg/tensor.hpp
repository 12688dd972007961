#pragma once

#include "qmarg/types.hpp"

namespace qmarg {

/// Flat-index helpers for the row-major amplitude layout (party 0 slowest).
long total_dim(const std::vector<int>& dims);
std::vector<long> strides(const std::vector<int>& dims);

/// Reshape a flat amplitude vector into a (kept x complement) matrix. Row
/// index runs row-major over `kept` (ascending party order), column index
/// row-major over the complement parties in ascending order. Every other
/// matricization in the library is derived from this one convention.
Mat matricize(const Vec& amps, const std::vector<int>& dims, const std::vector<int>& kept);

/// Reduced density matrix on `kept` (ascending): M M^dagger with M the
/// matricization above. Raw form; no trace normalization is applied, so the
/// input should be a unit vector when a density operator is expected.
Mat reduced_density(const Vec& amps, const std::vector<int>& dims, const std::vector<int>& kept);

/// Trace out `traced` (nonempty, proper subset); returns the reduced state on
/// the remaining parties in ascending order.
DensityOperator partial_trace(const StateVector& state, const std::vector<int>& traced);

/// Apply a single-party operator (op acts on `party`'s space, identity
/// elsewhere). Returns the unnormalized result.
Vec apply_party_operator(const Vec& amps, const std::vector<int>& dims, int party, const Mat& op);

/// Apply one projector per party (all n in lockstep). Unnormalized result.
Vec apply_local_projectors(const StateVector& state, const std::vector<Projector>& projs);

/// Bipartite Schmidt decomposition across pivot | rest via SVD of the pivot
/// matricization. Coefficients (squared singular values) are sorted
/// descending and truncated at the relative cutoff tol.rank; degeneracy
/// classes are grouped at the relative gap tol.degen.
SchmidtData schmidt_decompose(const StateVector& state, int pivot, const Tolerances& tol = {});

/// Group indices of a descending coefficient list into classes whose values
/// coincide within rel_gap * coeffs[0], transitively closed.
std::vector<std::vector<int>> degeneracy_classes_of(const RVec& coeffs, double rel_gap);

/// Projector onto the span of eigenvectors of `rho` with eigenvalue
/// > tol * lambda_max.
Projector support_projector(const DensityOperator& rho, double tol);

/// Orthonormal basis (columns) of the same support subspace, eigenvalue
/// ordering descending. Deterministic for a fixed input matrix.
Mat support_basis(const Mat& rho, double rel_tol);

/// True iff the supports of a and b are orthogonal: ||P_a P_b||_F <= tol.
bool orthogonal_supports(const DensityOperator& a, const DensityOperator& b, double tol);

/// |<a|b>| for same-shape states.
double fidelity(const StateVector& a, const StateVector& b);

/// Global-phase canonicalization: rotate so the largest-magnitude amplitude
/// is real positive (ties broken by lowest flat index).
Vec canonical_phase(const Vec& amps);

}  // namespace qmarg
