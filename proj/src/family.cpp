#include "qmarg/family.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qmarg/rng.hpp"
#include "qmarg/states.hpp"
#include "qmarg/tensor.hpp"

namespace qmarg {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool flat_spectrum(const RVec& coeffs, double rel_gap) {
    if (coeffs.size() < 2) return false;
    return coeffs(0) - coeffs(coeffs.size() - 1) <= rel_gap * std::max(1.0, coeffs(0));
}

}  // namespace

ReductionFamily ReductionFamily::from_analysis(const StateVector& state, const AnalysisReport& report) {
    if (report.verdict != Verdict::undetermined || !report.certificate)
        throw std::invalid_argument("determined states have no reduction family");
    const SchmidtProjectorSet& cert = *report.certificate;
    if (static_cast<int>(cert.parties.size()) != state.n())
        throw std::invalid_argument("the reduction family needs a certificate covering all parties");
    ReductionFamily fam{state, cert, false};
    if (state.n() == 2) {
        SchmidtData sd = schmidt_decompose(state, 0, cert.tol);
        fam.special_case = flat_spectrum(sd.coeffs, cert.tol.degen);
    }
    return fam;
}

ReductionFamily ReductionFamily::from_state(const StateVector& state, const AnalysisOptions& opts) {
    return from_analysis(state, analyze(state, opts));
}

StateVector family_member(const ReductionFamily& fam, const std::vector<double>& theta) {
    if (static_cast<int>(theta.size()) != fam.L())
        throw std::invalid_argument("need one phase per certificate row");
    Vec out = Vec::Zero(fam.base.total_dim());
    for (int j = 0; j < fam.L(); ++j)
        out += std::exp(Cx(0, theta[j])) * fam.certificate.apply_row(fam.base.amps(), j);
    return StateVector(fam.base.dims(), out);
}

StateVector sample_member(const ReductionFamily& fam, std::uint64_t seed) {
    std::mt19937_64 rng = sub_rng(seed, 0xfa111e5);
    if (fam.special_case) {
        // Any unitary on the first party's flat-spectrum support preserves
        // both marginals; this reaches members outside the phase family.
        SchmidtData sd = schmidt_decompose(fam.base, 0, fam.certificate.tol);
        const int d = fam.base.dim(0), m = sd.rank();
        Mat b = sd.left_vectors;
        Mat u = Mat::Identity(d, d) - b * b.adjoint() + b * haar_unitary(m, rng) * b.adjoint();
        Vec amps = apply_party_operator(fam.base.amps(), fam.base.dims(), 0, u);
        return StateVector(fam.base.dims(), amps);
    }
    std::uniform_real_distribution<double> unif(0.0, kTwoPi);
    std::vector<double> theta(fam.L());
    for (double& t : theta) t = unif(rng);
    return family_member(fam, theta);
}

ReductionCheck verify_same_reductions(const StateVector& a, const StateVector& b, const Tolerances& tol) {
    if (a.dims() != b.dims()) throw std::invalid_argument("states must share dimensions");
    ReductionCheck check;
    check.ok = true;
    const int n = a.n();
    for (int i = 0; i < n; ++i) {
        std::vector<int> kept;
        for (int p = 0; p < n; ++p)
            if (p != i) kept.push_back(p);
        // ||A A' - B B'||_F with A, B the matricizations keeping all parties
        // but i, without forming either marginal: stack C = [A B], factor
        // C = QR, and evaluate the difference in the 2d_i-dimensional
        // compressed coordinates, A A' - B B' = Q (R S R') Q' with
        // S = diag(I, -I). Summing the three Gram norms instead cancels
        // catastrophically and floors the residual near sqrt(machine eps).
        Mat ma = matricize(a.amps(), a.dims(), kept);
        Mat mb = matricize(b.amps(), b.dims(), kept);
        const long d = ma.cols();
        Mat c(ma.rows(), 2 * d);
        c << ma, mb;
        const long rr = std::min<long>(c.rows(), 2 * d);
        Mat r = Eigen::HouseholderQR<Mat>(c).matrixQR().topRows(rr);
        for (long col = 0; col < r.cols(); ++col)
            for (long row = col + 1; row < rr; ++row) r(row, col) = 0;  // drop the Householder tails
        Mat rs = r;
        rs.rightCols(d) *= -1.0;
        check.residuals.push_back((rs * r.adjoint()).norm());
        if (check.residuals.back() > tol.recon) check.ok = false;
    }
    return check;
}

bool distinctness(const StateVector& a, const StateVector& b, const Tolerances& tol) {
    return fidelity(a, b) < 1.0 - tol.recon;
}

}  // namespace qmarg
