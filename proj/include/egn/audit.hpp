#ifndef EGN_AUDIT_HPP
#define EGN_AUDIT_HPP

#include <cstdint>
#include <map>
#include <string>

#include "egn/serialize.hpp"
#include "egn/train.hpp"

namespace egn {

// Declared tolerances of the audit checks.
inline constexpr double kEnTol = 1e-10;       // E(n) relative deviation
inline constexpr double kPermTolExact = 0.0;  // permutation, sum/mean only
inline constexpr double kPermTolMax = 1e-12;  // permutation when max aggregation is present
inline constexpr double kGradTol = 1e-4;      // analytic vs central differences
inline constexpr double kGradFdStep = 1e-5;
inline constexpr double kGradAbsFloor = 1e-8; // differences at this scale pass absolutely

struct CheckResult {
    double max_violation = 0.0;
    double tolerance = 0.0;
    int samples = 0;
    bool pass = false;
};

/// Outcome of one audit run. pass iff every check's violation is within its
/// tolerance. Deterministic per seed, bitwise.
struct AuditReport {
    std::map<std::string, CheckResult> checks;
    std::uint64_t seed = 0;
    int requested_samples = 0;

    bool all_pass() const;
};

/// Numerical execution of the architecture's symmetry arguments on random
/// graphs: E(n) equivariance of each output (checks en_edge, en_node,
/// en_coord, en_global), S_N permutation equivariance, and full gradient
/// agreement with central finite differences.
///
/// E(n) violations are normwise: ||out_transformed - out_reference||_inf
/// divided by max(||out_reference||_inf, 1).
AuditReport audit(const EgnModel& model, int n_samples, std::uint64_t seed);

/// {check_name: {max_violation, tolerance, samples, pass}} plus seed metadata.
Json audit_to_json(const AuditReport& report);

} // namespace egn

#endif // EGN_AUDIT_HPP
