#include "qmarg/states.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qmarg/rng.hpp"
#include "qmarg/tensor.hpp"

namespace qmarg {

namespace {

std::vector<int> uniform_dims(int n, int d) { return std::vector<int>(n, d); }

}  // namespace

StateVector ghz(int n, int d) {
    if (n < 2 || d < 2) throw std::invalid_argument("ghz needs n >= 2 parties of dimension >= 2");
    std::vector<int> dims = uniform_dims(n, d);
    Vec amps = Vec::Zero(total_dim(dims));
    const auto st = strides(dims);
    for (int i = 0; i < d; ++i) {
        long idx = 0;
        for (int p = 0; p < n; ++p) idx += i * st[p];
        amps[idx] = 1.0;
    }
    return StateVector(dims, amps);
}

StateVector generalized_ghz(int n, Cx alpha, Cx beta) {
    if (n < 2) throw std::invalid_argument("generalized_ghz needs n >= 2");
    if (std::abs(alpha) == 0 || std::abs(beta) == 0)
        throw std::invalid_argument("generalized_ghz weights must be nonzero");
    std::vector<int> dims = uniform_dims(n, 2);
    Vec amps = Vec::Zero(total_dim(dims));
    amps[0] = alpha;
    amps[total_dim(dims) - 1] = beta;
    return StateVector(dims, amps);
}

StateVector w_state(int n) { return dicke(n, 1); }

StateVector dicke(int n, int k) {
    if (n < 2 || k < 0 || k > n) throw std::invalid_argument("dicke needs n >= 2 and 0 <= k <= n");
    std::vector<int> dims = uniform_dims(n, 2);
    Vec amps = Vec::Zero(total_dim(dims));
    for (long idx = 0; idx < amps.size(); ++idx)
        if (std::popcount(static_cast<unsigned long>(idx)) == k) amps[idx] = 1.0;
    return StateVector(dims, amps);
}

StateVector completely_correlated(const std::vector<int>& dims, const std::vector<double>& lambda) {
    const int min_d = *std::min_element(dims.begin(), dims.end());
    if (lambda.empty() || static_cast<int>(lambda.size()) > min_d)
        throw std::invalid_argument("need 1 <= lambda.size() <= min(dims)");
    for (double w : lambda)
        if (!(w > 0)) throw std::invalid_argument("weights must be positive");
    Vec amps = Vec::Zero(total_dim(dims));
    const auto st = strides(dims);
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        long idx = 0;
        for (std::size_t p = 0; p < dims.size(); ++p) idx += static_cast<long>(i) * st[p];
        amps[idx] = std::sqrt(lambda[i]);
    }
    return StateVector(dims, amps);
}

StateVector product_state(const std::vector<int>& dims, const std::vector<int>& basis) {
    if (basis.size() != dims.size()) throw std::invalid_argument("one basis value per party");
    long idx = 0;
    const auto st = strides(dims);
    for (std::size_t p = 0; p < dims.size(); ++p) {
        if (basis[p] < 0 || basis[p] >= dims[p]) throw std::invalid_argument("basis value out of range");
        idx += basis[p] * st[p];
    }
    Vec amps = Vec::Zero(total_dim(dims));
    amps[idx] = 1.0;
    return StateVector(dims, amps);
}

StateVector haar_random(const std::vector<int>& dims, std::uint64_t seed) {
    std::mt19937_64 rng = sub_rng(seed, 0);
    std::normal_distribution<double> gauss;
    Vec amps(total_dim(dims));
    for (long i = 0; i < amps.size(); ++i) amps[i] = Cx(gauss(rng), gauss(rng));
    return StateVector(dims, amps);
}

Mat haar_unitary(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Mat g(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) g(i, j) = Cx(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(d, d);
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the diagonal phase so the distribution is Haar, not QR-biased.
    for (int j = 0; j < d; ++j) {
        Cx rj = r(j, j);
        q.col(j) *= std::abs(rj) > 0 ? rj / std::abs(rj) : Cx(1, 0);
    }
    return q;
}

std::vector<Mat> random_local_unitaries(const std::vector<int>& dims, std::uint64_t seed) {
    std::vector<Mat> us;
    us.reserve(dims.size());
    for (std::size_t p = 0; p < dims.size(); ++p) {
        std::mt19937_64 rng = sub_rng(seed, p + 1);
        us.push_back(haar_unitary(dims[p], rng));
    }
    return us;
}

StateVector apply_local_unitaries(const StateVector& state, const std::vector<Mat>& unitaries) {
    if (static_cast<int>(unitaries.size()) != state.n()) throw std::invalid_argument("one unitary per party");
    Vec cur = state.amps();
    for (int p = 0; p < state.n(); ++p) cur = apply_party_operator(cur, state.dims(), p, unitaries[p]);
    return StateVector(state.dims(), cur);
}

StateVector planted_block_state(const std::vector<int>& dims, int blocks, std::uint64_t seed) {
    const int n = static_cast<int>(dims.size());
    const int min_d = *std::min_element(dims.begin(), dims.end());
    if (blocks < 1 || blocks > min_d) throw std::invalid_argument("need 1 <= blocks <= min(dims)");

    std::mt19937_64 rng = sub_rng(seed, 0x9e3779b9);
    // Disjoint computational windows per party: party i's levels are split
    // into `blocks` contiguous groups, one per block, sizes as even as
    // possible, then the level labels are shuffled.
    std::vector<std::vector<std::vector<int>>> levels(n);  // [party][block] -> levels
    for (int p = 0; p < n; ++p) {
        std::vector<int> perm(dims[p]);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        levels[p].resize(blocks);
        for (int v = 0; v < dims[p]; ++v) levels[p][v % blocks].push_back(perm[v]);
    }

    std::uniform_real_distribution<double> unif(0.25, 1.0);  // weight floor
    std::normal_distribution<double> gauss;
    Vec amps = Vec::Zero(total_dim(dims));
    const auto st = strides(dims);
    for (int b = 0; b < blocks; ++b) {
        long grid = 1;
        for (int p = 0; p < n; ++p) grid *= static_cast<long>(levels[p][b].size());
        Vec local(grid);
        for (long i = 0; i < grid; ++i) local[i] = Cx(gauss(rng), gauss(rng));
        local *= std::sqrt(unif(rng)) / local.norm();
        // Scatter the local grid into the global amplitudes.
        for (long i = 0; i < grid; ++i) {
            long rem = i, idx = 0;
            for (int p = n - 1; p >= 0; --p) {
                const auto& lv = levels[p][b];
                idx += lv[rem % lv.size()] * st[p];
                rem /= static_cast<long>(lv.size());
            }
            amps[idx] = local[i];
        }
    }
    return StateVector(dims, amps);
}

}  // namespace qmarg
