#pragma once

// Haar moments of the unitary group up to order two, with the Schur-Weyl identities
// used by the local-tester and packing-net constructions.

#include <cstdint>
#include <functional>
#include <vector>

#include "ctl/combs.hpp"

namespace ctl {

// Weingarten function values for n <= 2, indexed by cycle type.
struct WeingartenTable {
    int order{1};
    double identity{0.0};  // Wg((1),d) for n = 1, Wg((1)(2),d) for n = 2
    double swap{0.0};      // Wg((12),d), n = 2 only
};
WeingartenTable weingarten_table(int n, Index d);

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

// Dense permutation operator on (C^d)^{(x) n}: P_pi |i_1 ... i_n> = |i_{pi^-1(1)} ... i_{pi^-1(n)}>,
// i.e. factor k of the input is moved to position pi[k].
ComplexMatrix permutation_operator(std::span<const std::size_t> pi, Index d);
ComplexMatrix swap_operator(Index d);

// E_U[(I (x) U) M (I (x) U)^dagger] on the factor `target`.
LabelledOperator twirl1(const LabelledOperator& m, const Label& target);
// E_U[(U (x) U) M (U (x) U)^dagger] on two factors of equal dimension.
LabelledOperator twirl2(const LabelledOperator& m, const Label& t1, const Label& t2);

// Closed form of E_U tr(U B1 U^dagger A1 U B2 U^dagger A2).
Complex fourth_moment_trace(const ComplexMatrix& a1, const ComplexMatrix& b1, const ComplexMatrix& a2,
                            const ComplexMatrix& b2);

struct MonteCarloEstimate {
    Complex mean{0.0};
    double std_error{0.0};  // of the real and imaginary parts combined in quadrature
    std::size_t samples{0};
};
MonteCarloEstimate fourth_moment_monte_carlo(const ComplexMatrix& a1, const ComplexMatrix& b1,
                                             const ComplexMatrix& a2, const ComplexMatrix& b2,
                                             std::size_t samples, Rng& rng);

// ||P psi - psi|| with P the joint symmetrizer of n copies of a d1*d2 dimensional factor.
double symmetrizer_membership(const ComplexVector& psi, Index d1, Index d2, int n);

using AveragingMap = std::function<ComplexMatrix(const ComplexMatrix&)>;
// tr(pinv(Xbar) X) with Xbar = average(X).
double group_average_trace_bound(const ComplexMatrix& x, const AveragingMap& average);
// Full unitary twirl X -> tr(X) I / dim.
ComplexMatrix full_twirl_average(const ComplexMatrix& x);
// Average of X over the factor swap of (C^d)^{(x) 2}.
ComplexMatrix swap_group_average(const ComplexMatrix& x, Index d);

Index symmetric_sector_dimension(Index dim_pi, Index m, Index n);
// Numeric rank (cutoff 1e-8 sigma_max) of `generators` random vectors
// sum_{|S| = m} psi^{(x) S} (x) |0>^{(x) rest} with psi in a dim_pi dimensional subspace of
// C^{dim_pi + 1} and |0> its orthogonal complement.
Index symmetric_sector_numeric_rank(Index dim_pi, Index m, Index n, int generators, Rng& rng);

}  // namespace ctl
