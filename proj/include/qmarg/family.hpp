#pragma once

#include <cstdint>
#include <vector>

#include "qmarg/analysis.hpp"
#include "qmarg/types.hpp"

namespace qmarg {

/// The family of pure states sharing every (n-1)-party reduced state with a
/// base state: phase-twisted sums of the certificate's row projections. For
/// two qubit-or-higher parties that are maximally entangled the family is
/// strictly larger (any local rotation of the flat-spectrum side); that case
/// is flagged and handled by sample_member.
struct ReductionFamily {
    StateVector base;
    SchmidtProjectorSet certificate;
    bool special_case = false;

    int L() const { return certificate.L(); }

    /// Build from a finished analysis. Throws if the verdict is determined
    /// (such states have no family) or the certificate does not cover all
    /// parties.
    static ReductionFamily from_analysis(const StateVector& state, const AnalysisReport& report);

    /// Analyze and build in one step.
    static ReductionFamily from_state(const StateVector& state, const AnalysisOptions& opts = {});
};

/// Normalized sum_j e^{i theta_j} (row j applied to base). theta must have
/// one entry per certificate row; theta = 0 reproduces the base state.
StateVector family_member(const ReductionFamily& fam, const std::vector<double>& theta);

/// Random member: uniform phases per row, or a Haar-rotated state in the
/// two-party maximally-entangled special case.
StateVector sample_member(const ReductionFamily& fam, std::uint64_t seed);

struct ReductionCheck {
    bool ok = false;
    std::vector<double> residuals;  // Frobenius norm per traced-out party
    explicit operator bool() const { return ok; }
};

/// True iff the two states agree on every (n-1)-party reduced state within
/// tol.recon (Frobenius). Residuals are evaluated in QR-compressed
/// coordinates, so no (n-1)-party density matrix is ever formed.
ReductionCheck verify_same_reductions(const StateVector& a, const StateVector& b, const Tolerances& tol = {});

/// True iff the states differ beyond global phase: |<a|b>| < 1 - tol.recon.
bool distinctness(const StateVector& a, const StateVector& b, const Tolerances& tol = {});

}  // namespace qmarg
