#pragma once

// Local testers: a tester acting on dilations V : C^{d1} -> C^r (x) C^{d2} is averaged over the
// ancilla unitary group and then rewritten as a tester acting on channel Choi operators.
//
// Exact constructions cover n in {1, 2}.  At n = 2 the isotypic split is the symmetric /
// antisymmetric decomposition, so the permutation-module sandwich reduces to a scalar.

#include <vector>

#include "ctl/combs.hpp"

namespace ctl {

struct LocalTestDims {
    Index d1{2};
    Index d2{2};
    Index r{2};
};

struct LocalTestBundle {
    Tester original;   // parallel tester on dilations, slots [anc_j, out_j, in_j]
    Tester averaged;   // ancilla-twirled version of `original`
    Tester localized;  // tester on channels; last outcome is the perp outcome
    int n{1};
    LocalTestDims dims;
};

inline constexpr const char* kPerpOutcome = "perp";

Tester average_tester(const Tester& t, Index r);
Tester localize_tester(const Tester& t_bar, const LocalTestDims& dims);
LocalTestBundle make_local_test_bundle(const Tester& original, const LocalTestDims& dims);

// Probabilities of a dilation tester on the isometry v, p_i = <<V|^{(x)n} T_i^T |V>>^{(x)n}.
std::vector<double> dilation_probabilities(const Tester& t, const ComplexMatrix& v);

struct DilationIdentityReport {
    std::vector<double> localized;        // T~_i * C^{(x)n}
    std::vector<double> fixed_dilation;   // Tbar_i * C_V^{(x)n}
    std::vector<double> monte_carlo;      // mean of T_i * C_W^{(x)n} over random dilations W
    std::vector<double> standard_error;
    std::vector<double> z_scores;
    double perp_probability{0.0};
    double max_exact_gap{0.0};
    double max_abs_z{0.0};
    bool exact_ok{false};
    bool statistical_ok{false};
    bool ok() const { return exact_ok && statistical_ok; }
};

inline constexpr double kIdentityTol = 1e-7;
inline constexpr double kZBand = 5.0;

DilationIdentityReport verify_dilation_identity(const LocalTestBundle& bundle, const Channel& ch,
                                                std::size_t samples, Rng& rng);

}  // namespace ctl
