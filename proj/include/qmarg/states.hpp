#pragma once

#include <cstdint>
#include <random>

#include "qmarg/types.hpp"

namespace qmarg {

/// (|0...0> + ... + |d-1...d-1>)/sqrt(d) on n parties of dimension d.
StateVector ghz(int n, int d = 2);

/// alpha|0...0> + beta|1...1> on n qubits (normalized; alpha, beta != 0).
StateVector generalized_ghz(int n, Cx alpha, Cx beta);

/// Single-excitation symmetric state on n qubits.
StateVector w_state(int n);

/// Symmetric n-qubit state with exactly k excitations.
StateVector dicke(int n, int k);

/// sum_i sqrt(lambda[i]) |i i ... i> on the given dims. Requires
/// 1 <= lambda.size() <= min(dims), all entries positive; weights are
/// normalized to sum to 1.
StateVector completely_correlated(const std::vector<int>& dims, const std::vector<double>& lambda);

/// Computational basis product state |b_1 b_2 ... b_n>.
StateVector product_state(const std::vector<int>& dims, const std::vector<int>& basis);

/// Haar-random pure state (complex Gaussian amplitudes, normalized).
StateVector haar_random(const std::vector<int>& dims, std::uint64_t seed);

/// Haar-random d x d unitary.
Mat haar_unitary(int d, std::mt19937_64& rng);

/// One independent Haar unitary per party.
std::vector<Mat> random_local_unitaries(const std::vector<int>& dims, std::uint64_t seed);

/// (U_1 (x) ... (x) U_n) |psi>.
StateVector apply_local_unitaries(const StateVector& state, const std::vector<Mat>& unitaries);

/// Test/bench construction: L blocks with pairwise disjoint computational
/// supports at every party. Each block is a Haar-random state on its support
/// grid; block weights are random with a floor so no block is negligible.
/// The returned state is undetermined with exactly L rows (generically).
StateVector planted_block_state(const std::vector<int>& dims, int blocks, std::uint64_t seed);

}  // namespace qmarg
