#include <gtest/gtest.h>

#include <cmath>

#include "ctl/linalg.hpp"

using namespace ctl;

namespace {

ComplexMatrix random_matrix(Index r, Index c, Rng& rng) { return complex_gaussian(r, c, rng); }

ComplexMatrix random_psd(Index d, Rng& rng) {
    const ComplexMatrix g = complex_gaussian(d, d, rng);
    return g * g.adjoint();
}

// Brute-force partial trace over the last of three factors.
ComplexMatrix brute_trace_last(const ComplexMatrix& m, Index da, Index db, Index dc) {
    ComplexMatrix out = ComplexMatrix::Zero(da * db, da * db);
    for (Index i = 0; i < da * db; ++i)
        for (Index j = 0; j < da * db; ++j)
            for (Index k = 0; k < dc; ++k) out(i, j) += m(i * dc + k, j * dc + k);
    return out;
}

// Brute-force partial trace over the middle factor.
ComplexMatrix brute_trace_middle(const ComplexMatrix& m, Index da, Index db, Index dc) {
    ComplexMatrix out = ComplexMatrix::Zero(da * dc, da * dc);
    for (Index a = 0; a < da; ++a)
        for (Index c = 0; c < dc; ++c)
            for (Index a2 = 0; a2 < da; ++a2)
                for (Index c2 = 0; c2 < dc; ++c2)
                    for (Index b = 0; b < db; ++b)
                        out(a * dc + c, a2 * dc + c2) += m((a * db + b) * dc + c, (a2 * db + b) * dc + c2);
    return out;
}

}  // namespace

TEST(Linalg, VectorizeOfRankOneIsKetTimesConjugateBra) {
    Rng rng(1);
    const ComplexVector psi = haar_state(3, rng);
    const ComplexVector phi = haar_state(2, rng);
    const ComplexVector v = vectorize(psi * phi.adjoint());
    EXPECT_LT((v - kron(psi, ComplexVector(phi.conjugate()))).norm(), 1e-12);
}

TEST(Linalg, VectorizeIdentity) {
    const ComplexVector v = vectorize(identity(2));
    ComplexVector expected(4);
    expected << 1.0, 0.0, 0.0, 1.0;
    EXPECT_EQ(v, expected);
}

TEST(Linalg, VectorInnerProductIsHilbertSchmidt) {
    Rng rng(2);
    const ComplexMatrix x = random_matrix(3, 2, rng);
    const ComplexMatrix y = random_matrix(3, 2, rng);
    const Complex lhs = vectorize(x).dot(vectorize(y));
    const Complex rhs = (x.adjoint() * y).trace();
    EXPECT_LT(std::abs(lhs - rhs) / std::abs(rhs), 1e-12);
}

TEST(Linalg, VectorizationSandwichIdentity) {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const ComplexMatrix x = random_matrix(2, 3, rng);
        const ComplexMatrix y = random_matrix(3, 4, rng);
        const ComplexMatrix z = random_matrix(4, 2, rng);
        const ComplexVector lhs = vectorize(x * y * z);
        const ComplexVector rhs = kron(x, ComplexMatrix(z.transpose())) * vectorize(y);
        EXPECT_LT((lhs - rhs).norm(), 1e-12 * (1.0 + lhs.norm()));
    }
}

TEST(Linalg, UnvectorizeInvertsVectorize) {
    Rng rng(4);
    const ComplexMatrix x = random_matrix(3, 5, rng);
    EXPECT_LT((unvectorize(vectorize(x), 3, 5) - x).norm(), 1e-15);
    EXPECT_THROW(unvectorize(vectorize(x), 4, 4), DimensionError);
}

TEST(Linalg, KronMatchesIndexFormula) {
    Rng rng(5);
    const ComplexMatrix a = random_matrix(2, 3, rng);
    const ComplexMatrix b = random_matrix(3, 2, rng);
    const ComplexMatrix k = kron(a, b);
    ASSERT_EQ(k.rows(), 6);
    ASSERT_EQ(k.cols(), 6);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            for (Index p = 0; p < 3; ++p)
                for (Index q = 0; q < 2; ++q) EXPECT_EQ(k(i * 3 + p, j * 2 + q), a(i, j) * b(p, q));
}

TEST(Linalg, FactorLayoutRejectsDuplicatesAndUnknownLabels) {
    EXPECT_THROW(FactorLayout({{in(0), 2}, {in(0), 3}}), LabelError);
    EXPECT_THROW(FactorLayout({{in(0), 0}}), DimensionError);
    const FactorLayout l({{in(0), 2}, {out(0), 3}});
    EXPECT_EQ(l.total_dim(), 6);
    EXPECT_EQ(l.position(out(0)), 1u);
    EXPECT_THROW(l.position(anc(0)), LabelError);
}

TEST(Linalg, PartialTraceOfMaximallyEntangledIsIdentity) {
    const ComplexVector w = vectorize(identity(3));
    const FactorLayout l({{out(0), 3}, {in(0), 3}});
    const Label tr[] = {in(0)};
    EXPECT_LT((partial_trace(w * w.adjoint(), l, tr) - identity(3)).norm(), 1e-14);
}

TEST(Linalg, PartialTraceProductRule) {
    Rng rng(6);
    const ComplexMatrix x = random_matrix(2, 2, rng);
    const ComplexMatrix y = random_matrix(3, 3, rng);
    const FactorLayout l({{in(0), 2}, {out(0), 3}});
    const Label tr[] = {out(0)};
    EXPECT_LT((partial_trace(kron(x, y), l, tr) - y.trace() * x).norm(), 1e-13);
}

TEST(Linalg, PartialTraceMatchesBruteForce) {
    Rng rng(7);
    const ComplexMatrix m = random_matrix(24, 24, rng);
    const FactorLayout l({{in(0), 2}, {out(0), 3}, {anc(0), 4}});
    const Label last[] = {anc(0)};
    const Label mid[] = {out(0)};
    EXPECT_LT((partial_trace(m, l, last) - brute_trace_last(m, 2, 3, 4)).norm(), 1e-12);
    EXPECT_LT((partial_trace(m, l, mid) - brute_trace_middle(m, 2, 3, 4)).norm(), 1e-12);
}

TEST(Linalg, SequentialPartialTracesGiveFullTrace) {
    Rng rng(8);
    const ComplexMatrix m = random_psd(6, rng);
    const FactorLayout l({{in(0), 2}, {out(0), 3}});
    const Label b[] = {out(0)};
    const ComplexMatrix ma = partial_trace(m, l, b);
    EXPECT_LT(std::abs(ma.trace() - m.trace()), 1e-12);
    EXPECT_GT(min_eigenvalue(ma), -1e-10);
}

TEST(Linalg, PermuteFactorsSwapsKronFactors) {
    Rng rng(9);
    const ComplexMatrix a = random_matrix(2, 2, rng);
    const ComplexMatrix b = random_matrix(3, 3, rng);
    const Index dims[] = {2, 3};
    const std::size_t perm[] = {1, 0};
    EXPECT_LT((permute_factors(kron(a, b), dims, perm) - kron(b, a)).norm(), 1e-13);
}

TEST(Linalg, ReorderRoundTrip) {
    Rng rng(10);
    const ComplexMatrix m = random_matrix(24, 24, rng);
    const FactorLayout l({{in(0), 2}, {out(0), 3}, {anc(0), 4}});
    const Label order[] = {anc(0), in(0), out(0)};
    const ComplexMatrix r = reorder(m, l, order);
    const FactorLayout l2({{anc(0), 4}, {in(0), 2}, {out(0), 3}});
    const Label back[] = {in(0), out(0), anc(0)};
    EXPECT_LT((reorder(r, l2, back) - m).norm(), 1e-13);
}

TEST(Linalg, PartialTransposeMatchesBruteForce) {
    Rng rng(11);
    const ComplexMatrix m = random_matrix(6, 6, rng);
    const FactorLayout l({{in(0), 2}, {out(0), 3}});
    const Label t[] = {out(0)};
    const ComplexMatrix pt = partial_transpose(m, l, t);
    for (Index a = 0; a < 2; ++a)
        for (Index b = 0; b < 3; ++b)
            for (Index a2 = 0; a2 < 2; ++a2)
                for (Index b2 = 0; b2 < 3; ++b2) EXPECT_EQ(pt(a * 3 + b, a2 * 3 + b2), m(a * 3 + b2, a2 * 3 + b));
}

TEST(Linalg, TraceNormValues) {
    EXPECT_NEAR(trace_norm(identity(5)), 5.0, 1e-12);
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_NEAR(trace_norm(m), 1.0, 1e-12);
    EXPECT_NEAR(trace_norm(m + m.adjoint()), 2.0 * trace_norm(m), 1e-12);
}

TEST(Linalg, TraceNormOfHermitianIsSumOfAbsoluteEigenvalues) {
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
        const ComplexMatrix g = random_matrix(5, 5, rng);
        const ComplexMatrix h = (g + g.adjoint()) / 2.0;
        const double expected = hermitian_eigenvalues(h).cwiseAbs().sum();
        EXPECT_NEAR(trace_norm(h), expected, 1e-10);
    }
}

TEST(Linalg, OperatorAndFrobeniusNorms) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = Complex(0.0, -4.0);
    EXPECT_NEAR(operator_norm(m), 4.0, 1e-12);
    EXPECT_NEAR(frobenius_norm(m), 5.0, 1e-12);
}

TEST(Linalg, SvdReconstruction) {
    Rng rng(13);
    for (Index d : {1, 5, 17, 64}) {
        const ComplexMatrix m = random_matrix(d, d, rng);
        const Svd s = svd(m);
        const ComplexMatrix rec = s.u * s.singular_values.cast<Complex>().asDiagonal() * s.v.adjoint();
        EXPECT_LT((rec - m).norm() / m.norm(), 1e-10);
    }
}

TEST(Linalg, PseudoinverseAndRank) {
    Rng rng(14);
    const ComplexMatrix a = random_matrix(5, 2, rng);
    const ComplexMatrix m = a * a.adjoint();
    EXPECT_EQ(numeric_rank(m), 2);
    const ComplexMatrix p = pseudoinverse(m);
    EXPECT_LT((m * p * m - m).norm(), 1e-10 * m.norm());
}

TEST(Linalg, PsdSqrtSquaresBack) {
    Rng rng(15);
    const ComplexMatrix m = random_psd(4, rng);
    const ComplexMatrix s = psd_sqrt(m);
    EXPECT_LT((s * s - m).norm(), 1e-10 * m.norm());
}

TEST(Linalg, HaarUnitaryIsUnitary) {
    Rng rng(16);
    for (Index d : {1, 2, 5, 9}) {
        const ComplexMatrix u = haar_unitary(d, rng);
        EXPECT_LT((u.adjoint() * u - identity(d)).norm(), 1e-10);
    }
    const ComplexMatrix u1 = haar_unitary(1, rng);
    EXPECT_NEAR(std::abs(u1(0, 0)), 1.0, 1e-14);
}

TEST(Linalg, HaarMeanVanishes) {
    Rng rng(17);
    const int n = 10000;
    ComplexMatrix sum = ComplexMatrix::Zero(4, 4);
    for (int k = 0; k < n; ++k) sum += haar_unitary(4, rng);
    sum /= static_cast<double>(n);
    // |U_ij|^2 has mean 1/4, so each entry mean has standard error 1/(2 sqrt(n)).
    const double se = 0.5 / std::sqrt(static_cast<double>(n));
    EXPECT_LT(sum.cwiseAbs().maxCoeff(), 5.0 * se);
}

TEST(Linalg, HaarTwirlMatchesSchur) {
    Rng rng(18);
    const ComplexMatrix x = random_matrix(3, 3, rng);
    const int n = 20000;
    ComplexMatrix sum = ComplexMatrix::Zero(3, 3);
    ComplexMatrix sq = ComplexMatrix::Zero(3, 3);
    for (int k = 0; k < n; ++k) {
        const ComplexMatrix u = haar_unitary(3, rng);
        const ComplexMatrix y = u * x * u.adjoint();
        sum += y;
        sq += y.cwiseAbs2().cast<Complex>();
    }
    const ComplexMatrix mean = sum / static_cast<double>(n);
    const ComplexMatrix expected = identity(3) * (x.trace() / 3.0);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) {
            const double var = sq(i, j).real() / n - std::norm(mean(i, j));
            const double se = std::sqrt(std::max(var, 0.0) / n);
            EXPECT_LT(std::abs(mean(i, j) - expected(i, j)), 5.0 * se + 1e-12);
        }
}

TEST(Linalg, PsdDominationCheck) {
    Rng rng(19);
    const ComplexVector psi = haar_state(3, rng);
    EXPECT_TRUE(psd_domination_check(identity(3), psi));
    EXPECT_FALSE(psd_domination_check(0.5 * psi * psi.adjoint(), psi));
    EXPECT_THROW(psd_domination_check(basis_projector(3, 0), basis_vector(3, 1)), SupportError);
}

TEST(Linalg, PsdDominationBoundaryAgreesWithEigenvalues) {
    Rng rng(20);
    for (int t = 0; t < 10; ++t) {
        const ComplexMatrix m = random_psd(4, rng) + 0.1 * identity(4);
        const ComplexVector dir = haar_state(4, rng);
        // The largest c with M >= c |dir><dir| is 1 / <dir|M^-1|dir>.
        const double c = 1.0 / dir.dot(m.inverse() * dir).real();
        const ComplexVector inside = std::sqrt(c * (1.0 - 1e-6)) * dir;
        const ComplexVector outside = std::sqrt(c * (1.0 + 1e-6)) * dir;
        EXPECT_TRUE(psd_domination_check(m, inside));
        EXPECT_GT(min_eigenvalue(m - inside * inside.adjoint()), -1e-9);
        EXPECT_FALSE(psd_domination_check(m, outside, 1e-9));
        EXPECT_LT(min_eigenvalue(m - outside * outside.adjoint()), 0.0);
    }
}

TEST(Linalg, CoordinateEmbedding) {
    const ComplexMatrix e = coordinate_embedding(5, 1, 3);
    EXPECT_EQ(e.rows(), 5);
    EXPECT_EQ(e.cols(), 3);
    EXPECT_LT((e.adjoint() * e - identity(3)).norm(), 1e-15);
    EXPECT_EQ(e(1, 0), Complex(1.0));
    EXPECT_THROW(coordinate_embedding(3, 2, 2), DimensionError);
}

TEST(Linalg, FiniteCheck) {
    ComplexMatrix m = identity(2);
    EXPECT_TRUE(is_finite(m));
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(is_finite(m));
}
