#include "ctl/moments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace ctl {

namespace {

struct TargetSplit {
    std::vector<Label> rest;
    std::vector<Label> order;  // rest followed by the targets
    Index rest_dim{1};
};

TargetSplit split_targets(const FactorLayout& layout, std::span<const Label> targets) {
    TargetSplit s;
    for (const auto& f : layout.factors())
        if (std::find(targets.begin(), targets.end(), f.label) == targets.end()) {
            s.rest.push_back(f.label);
            s.rest_dim *= f.dim;
        }
    for (const auto& t : targets) (void)layout.position(t);
    s.order = s.rest;
    s.order.insert(s.order.end(), targets.begin(), targets.end());
    return s;
}

// tr over the trailing `inner`-dimensional factor.
ComplexMatrix trace_trailing(const ComplexMatrix& m, Index outer, Index inner) {
    ComplexMatrix r = ComplexMatrix::Zero(outer, outer);
    for (Index a = 0; a < outer; ++a)
        for (Index b = 0; b < outer; ++b)
            r(a, b) = m.block(a * inner, b * inner, inner, inner).trace();
    return r;
}

}  // namespace

WeingartenTable weingarten_table(int n, Index d) {
    const double dd = static_cast<double>(d);
    WeingartenTable t;
    t.order = n;
    if (n == 1) {
        t.identity = 1.0 / dd;
    } else if (n == 2) {
        if (d < 2) throw DimensionError("Weingarten n=2 needs d >= 2");
        t.identity = 1.0 / (dd * dd - 1.0);
        t.swap = -1.0 / (dd * (dd * dd - 1.0));
    } else {
        throw UnsupportedOrderError("Weingarten values are implemented for n <= 2");
    }
    return t;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

ComplexMatrix permutation_operator(std::span<const std::size_t> pi, Index d) {
    const std::size_t n = pi.size();
    // Output factor pi[k] carries input factor k, so output factor j carries input factor pi^-1(j).
    std::vector<std::size_t> inv(n);
    for (std::size_t k = 0; k < n; ++k) inv[pi[k]] = k;
    const std::vector<Index> dims(n, d);
    const Index total = static_cast<Index>(std::pow(static_cast<double>(d), static_cast<double>(n)) + 0.5);
    ComplexMatrix p(total, total);
    for (Index j = 0; j < total; ++j) p.col(j) = permute_factors(basis_vector(total, j), dims, inv);
    return p;
}

ComplexMatrix swap_operator(Index d) {
    const std::size_t pi[] = {1, 0};
    return permutation_operator(pi, d);
}

LabelledOperator twirl1(const LabelledOperator& m, const Label& target) {
    const Label t[] = {target};
    const auto s = split_targets(m.layout(), t);
    const Index d = m.layout().dim_of(target);
    const auto mr = m.reordered(s.order);
    const ComplexMatrix a = trace_trailing(mr.op(), s.rest_dim, d);
    const LabelledOperator out(kron(a, identity(d) / static_cast<double>(d)), mr.layout());
    return out.reordered(m.layout().labels());
}

LabelledOperator twirl2(const LabelledOperator& m, const Label& t1, const Label& t2) {
    const Index d = m.layout().dim_of(t1);
    if (m.layout().dim_of(t2) != d) throw DimensionError("twirl2: target factors differ in dimension");
    if (d == 1) return m;
    const Label t[] = {t1, t2};
    const auto s = split_targets(m.layout(), t);
    const auto mr = m.reordered(s.order);
    const auto wg = weingarten_table(2, d);
    const ComplexMatrix p[2] = {identity(d * d), swap_operator(d)};
    ComplexMatrix a[2];
    for (int k = 0; k < 2; ++k) a[k] = trace_trailing(kron(identity(s.rest_dim), p[k]) * mr.op(), s.rest_dim, d * d);
    ComplexMatrix r = ComplexMatrix::Zero(mr.op().rows(), mr.op().cols());
    for (int sg = 0; sg < 2; ++sg)
        for (int tau = 0; tau < 2; ++tau) {
            const double w = sg == tau ? wg.identity : wg.swap;
            r += w * kron(a[sg], p[tau]);
        }
    return LabelledOperator(std::move(r), mr.layout()).reordered(m.layout().labels());
}

Complex fourth_moment_trace(const ComplexMatrix& a1, const ComplexMatrix& b1, const ComplexMatrix& a2,
                            const ComplexMatrix& b2) {
    const Index d = a1.rows();
    for (const auto* x : {&a1, &b1, &a2, &b2})
        if (x->rows() != d || x->cols() != d) throw DimensionError("fourth_moment_trace: operators must be d x d");
    if (d == 1) return b1(0, 0) * a1(0, 0) * b2(0, 0) * a2(0, 0);
    const double dd = static_cast<double>(d);
    const Complex tb1 = b1.trace();
    const Complex tb2 = b2.trace();
    const Complex ta1 = a1.trace();
    const Complex ta2 = a2.trace();
    const Complex tbb = (b1 * b2).trace();
    const Complex taa = (a1 * a2).trace();
    return (tb1 * tb2 * taa + tbb * ta1 * ta2) / (dd * dd - 1.0) -
           (tbb * taa + tb1 * tb2 * ta1 * ta2) / (dd * (dd * dd - 1.0));
}

MonteCarloEstimate fourth_moment_monte_carlo(const ComplexMatrix& a1, const ComplexMatrix& b1,
                                             const ComplexMatrix& a2, const ComplexMatrix& b2,
                                             std::size_t samples, Rng& rng) {
    const Index d = a1.rows();
    Complex sum = 0.0;
    double sq_re = 0.0;
    double sq_im = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const ComplexMatrix u = haar_unitary(d, rng);
        const ComplexMatrix ud = u.adjoint();
        const Complex v = (u * b1 * ud * a1 * u * b2 * ud * a2).trace();
        sum += v;
        sq_re += v.real() * v.real();
        sq_im += v.imag() * v.imag();
    }
    const double n = static_cast<double>(samples);
    MonteCarloEstimate e;
    e.samples = samples;
    e.mean = sum / n;
    const double var_re = std::max(0.0, sq_re / n - e.mean.real() * e.mean.real());
    const double var_im = std::max(0.0, sq_im / n - e.mean.imag() * e.mean.imag());
    e.std_error = std::sqrt((var_re + var_im) / std::max(1.0, n - 1.0));
    return e;
}

double symmetrizer_membership(const ComplexVector& psi, Index d1, Index d2, int n) {
    const Index local = d1 * d2;
    const std::vector<Index> dims(static_cast<std::size_t>(n), local);
    Index total = 1;
    for (int k = 0; k < n; ++k) total *= local;
    if (psi.size() != total) throw DimensionError("symmetrizer_membership: vector length is not (d1 d2)^n");
    std::vector<std::size_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    ComplexVector acc = ComplexVector::Zero(total);
    std::size_t count = 0;
    do {
        acc += permute_factors(psi, dims, perm);
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    acc /= static_cast<double>(count);
    return (acc - psi).norm();
}

double group_average_trace_bound(const ComplexMatrix& x, const AveragingMap& average) {
    const ComplexMatrix xbar = average(x);
    return (pseudoinverse(xbar) * x).trace().real();
}

ComplexMatrix full_twirl_average(const ComplexMatrix& x) {
    return identity(x.rows()) * (x.trace() / static_cast<double>(x.rows()));
}

ComplexMatrix swap_group_average(const ComplexMatrix& x, Index d) {
    const ComplexMatrix s = swap_operator(d);
    return (x + s * x * s) / 2.0;
}

Index symmetric_sector_dimension(Index dim_pi, Index m, Index n) {
    if (m < 0 || n < m) throw ArgumentError("symmetric_sector_dimension requires n >= m >= 0");
    return static_cast<Index>(binomial(static_cast<std::uint64_t>(dim_pi + m - 1), static_cast<std::uint64_t>(m)));
}

Index symmetric_sector_numeric_rank(Index dim_pi, Index m, Index n, int generators, Rng& rng) {
    if (m < 0 || n < m) throw ArgumentError("symmetric_sector_numeric_rank requires n >= m >= 0");
    const Index d = dim_pi + 1;
    const ComplexVector zero = basis_vector(d, dim_pi);
    Index total = 1;
    for (Index k = 0; k < n; ++k) total *= d;
    ComplexMatrix gens(total, generators);
    for (int g = 0; g < generators; ++g) {
        ComplexVector psi = ComplexVector::Zero(d);
        psi.head(dim_pi) = haar_state(dim_pi, rng);
        ComplexVector sum = ComplexVector::Zero(total);
        // Subsets S of {0..n-1} with |S| = m as bitmasks.
        for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
            if (std::popcount(mask) != m) continue;
            ComplexVector v = ComplexVector::Ones(1);
            for (Index k = 0; k < n; ++k) v = kron(v, ((mask >> k) & 1ULL) ? psi : zero);
            sum += v;
        }
        gens.col(g) = sum;
    }
    return numeric_rank(gens, 1e-8);
}

}  // namespace ctl
