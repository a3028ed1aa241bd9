#include <gtest/gtest.h>

#include <cmath>

#include "ctl/localtest.hpp"
#include "ctl/moments.hpp"

using namespace ctl;

namespace {

std::vector<Label> dilation_order(int n) {
    std::vector<Label> order;
    for (int j = 0; j < n; ++j) {
        order.push_back(anc(j));
        order.push_back(out(j));
        order.push_back(in(j));
    }
    return order;
}

std::vector<Label> channel_order(int n) {
    std::vector<Label> order;
    for (int j = 0; j < n; ++j) {
        order.push_back(out(j));
        order.push_back(in(j));
    }
    return order;
}

double sum_of(const std::vector<double>& p) {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
}

}  // namespace

TEST(LocalTest, SingleQueryAverageIsSchurClosedForm) {
    Rng rng(1);
    const Index r = 3;
    const Tester t = random_parallel_tester({1, 2, 2, r, 3}, rng);
    const Tester avg = average_tester(t, r);
    const auto order = dilation_order(1);
    for (std::size_t i = 0; i < t.outcomes().size(); ++i) {
        const ComplexMatrix ti = t.outcomes()[i].op.reordered(order).op();
        ComplexMatrix traced = ComplexMatrix::Zero(4, 4);
        for (Index a = 0; a < r; ++a) traced += ti.block(a * 4, a * 4, 4, 4);
        const ComplexMatrix expected = kron(identity(r) / double(r), traced);
        EXPECT_LT((avg.outcomes()[i].op.reordered(order).op() - expected).norm(), 1e-12);
    }
}

TEST(LocalTest, AncillaInvariantTesterIsFixedPoint) {
    Rng rng(2);
    const Index r = 2;
    const Tester t = random_parallel_tester({1, 2, 2, r, 2}, rng);
    const Tester once = average_tester(t, r);
    const Tester twice = average_tester(once, r);
    const auto order = dilation_order(1);
    for (std::size_t i = 0; i < once.outcomes().size(); ++i)
        EXPECT_LT((once.outcomes()[i].op.reordered(order).op() - twice.outcomes()[i].op.reordered(order).op()).norm(),
                  1e-12);
}

TEST(LocalTest, TwoQueryAverageMatchesMonteCarlo) {
    Rng rng(3);
    const Index r = 2;
    const Tester t = random_parallel_tester({2, 2, 2, r, 2}, rng);
    const Tester avg = average_tester(t, r);
    const auto order = dilation_order(2);
    const ComplexMatrix t0 = t.outcomes()[0].op.reordered(order).op();
    const ComplexMatrix exact = avg.outcomes()[0].op.reordered(order).op();
    const Index blk = 4;  // out (x) in
    const int samples = 10000;
    ComplexMatrix sum = ComplexMatrix::Zero(t0.rows(), t0.cols());
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(t0.rows(), t0.cols());
    for (int s = 0; s < samples; ++s) {
        const ComplexMatrix u = kron(haar_unitary(r, rng), identity(blk));
        const ComplexMatrix w = kron(u, u);
        const ComplexMatrix x = w * t0 * w.adjoint();
        sum += x;
        sq += x.cwiseAbs2();
    }
    const ComplexMatrix mean = sum / double(samples);
    int outside = 0;
    for (Index i = 0; i < mean.rows(); ++i)
        for (Index j = 0; j < mean.cols(); ++j) {
            const double var = std::max(0.0, sq(i, j) / samples - std::norm(mean(i, j)));
            const double se = std::sqrt(var / samples);
            if (std::abs(mean(i, j) - exact(i, j)) > 5.0 * se + 1e-10) ++outside;
        }
    EXPECT_EQ(outside, 0);
}

TEST(LocalTest, AveragedTesterKeepsNormalization) {
    Rng rng(4);
    for (int n = 1; n <= 2; ++n) {
        const Tester t = random_parallel_tester({n, 2, 2, 2, 3}, rng);
        const Tester avg = average_tester(t, 2);
        EXPECT_LT((parallel_input_state(avg) - parallel_input_state(t)).norm(), 1e-9);
    }
}

TEST(LocalTest, LocalizedNormalizationIsSymmetrizedInput) {
    Rng rng(5);
    struct Case {
        int n;
        Index d1, d2, r;
    };
    const Case cases[] = {{1, 2, 2, 2}, {1, 2, 3, 1}, {2, 2, 2, 2}, {2, 2, 1, 2}, {2, 2, 2, 1}};
    for (const auto& c : cases) {
        const Tester t = random_parallel_tester({c.n, c.d1, c.d2, c.r, 3}, rng);
        const auto bundle = make_local_test_bundle(t, {c.d1, c.d2, c.r});
        ASSERT_EQ(bundle.localized.outcomes().back().name, kPerpOutcome);
        ComplexMatrix rho = parallel_input_state(t);
        if (c.n == 2) {
            const ComplexMatrix s = swap_operator(c.d1);
            rho = (rho + s * rho * s) / 2.0;
        }
        EXPECT_LT((parallel_input_state(bundle.localized) - rho).norm(), 1e-8)
            << "n=" << c.n << " d1=" << c.d1 << " d2=" << c.d2 << " r=" << c.r;
        for (const auto& o : bundle.localized.outcomes()) EXPECT_GT(min_eigenvalue(o.op.op()), -1e-9);
    }
}

TEST(LocalTest, SingleOutcomeTesterLocalizesToNormalization) {
    Rng rng(6);
    const Tester t = random_parallel_tester({2, 2, 2, 2, 1}, rng);
    const auto bundle = make_local_test_bundle(t, {2, 2, 2});
    ASSERT_EQ(bundle.localized.outcomes().size(), 2u);
    const LabelledOperator total = bundle.localized.outcomes()[0].op + bundle.localized.outcomes()[1].op;
    const auto order = channel_order(2);
    EXPECT_LT((total.reordered(order).op() - bundle.localized.normalization().reordered(order).op()).norm(), 1e-12);
    const ComplexMatrix s = swap_operator(2);
    const ComplexMatrix rho = parallel_input_state(t);
    EXPECT_LT((parallel_input_state(bundle.localized) - (rho + s * rho * s) / 2.0).norm(), 1e-8);
}

TEST(LocalTest, LocalizedProbabilitiesFormDistribution) {
    Rng rng(7);
    for (int n = 1; n <= 2; ++n)
        for (Index r = 1; r <= 3; ++r) {
            const Tester t = random_parallel_tester({n, 2, 2, r, 3}, rng);
            const auto bundle = make_local_test_bundle(t, {2, 2, r});
            for (int k = 0; k < 5; ++k) {
                const auto p = apply_tester(bundle.localized, random_channel(2, 2, r, rng));
                for (double x : p) EXPECT_GT(x, -1e-10);
                EXPECT_NEAR(sum_of(p), 1.0, 1e-8);
            }
        }
}

TEST(LocalTest, UnitaryChannelSingleAncilla) {
    Rng rng(8);
    for (int n = 1; n <= 2; ++n) {
        const Tester t = random_parallel_tester({n, 2, 2, 1, 3}, rng);
        const auto bundle = make_local_test_bundle(t, {2, 2, 1});
        const ComplexMatrix u = haar_unitary(2, rng);
        const auto rep = verify_dilation_identity(bundle, unitary_channel(u), 50, rng);
        EXPECT_TRUE(rep.ok()) << "n=" << n << " gap=" << rep.max_exact_gap << " z=" << rep.max_abs_z;
        // Dilation probabilities of the original tester equal the localized ones.
        const auto direct = dilation_probabilities(t, u);
        for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(direct[i], rep.localized[i], 1e-9);
        EXPECT_NEAR(rep.perp_probability, 0.0, 1e-9);
    }
}

TEST(LocalTest, RankTwoQubitChannelSingleQuery) {
    Rng rng(9);
    const Tester t = random_parallel_tester({1, 2, 2, 2, 4}, rng);
    const auto bundle = make_local_test_bundle(t, {2, 2, 2});
    const Channel ch = random_channel(2, 2, 2, rng);
    const auto rep = verify_dilation_identity(bundle, ch, 10000, rng);
    EXPECT_TRUE(rep.exact_ok) << rep.max_exact_gap;
    EXPECT_TRUE(rep.statistical_ok) << rep.max_abs_z;
}

TEST(LocalTest, TwoQueriesToOneDimensionalOutput) {
    Rng rng(10);
    const Tester t = random_parallel_tester({2, 2, 1, 2, 3}, rng);
    const auto bundle = make_local_test_bundle(t, {2, 1, 2});
    const Channel ch = random_channel(2, 1, 2, rng);
    const auto rep = verify_dilation_identity(bundle, ch, 10000, rng);
    EXPECT_TRUE(rep.exact_ok) << rep.max_exact_gap;
    EXPECT_TRUE(rep.statistical_ok) << rep.max_abs_z;
}

TEST(LocalTest, TwoQueriesRankTwo) {
    Rng rng(11);
    const Tester t = random_parallel_tester({2, 2, 2, 2, 3}, rng);
    const auto bundle = make_local_test_bundle(t, {2, 2, 2});
    const auto rep = verify_dilation_identity(bundle, random_channel(2, 2, 2, rng), 10000, rng);
    EXPECT_TRUE(rep.ok()) << rep.max_exact_gap << " " << rep.max_abs_z;
}

TEST(LocalTest, DilationChoiSquareIsSectorBlockDiagonal) {
    Rng rng(12);
    const Index d1 = 2, d2 = 2, r = 3, m = d1 * d2;
    const ComplexMatrix v = random_isometry(d1, r * d2, rng);
    const ComplexVector w = vectorize(v);
    const ComplexVector ww = kron(w, w);
    const FactorLayout l({{anc(0), r}, {out(0), d2}, {in(0), d1}, {anc(1), r}, {out(1), d2}, {in(1), d1}});
    const Label traced[] = {anc(0), anc(1)};
    const ComplexMatrix x = partial_trace(ww * ww.adjoint(), l, traced);
    const ComplexMatrix s = swap_operator(m);
    const ComplexMatrix ps = (identity(m * m) + s) / 2.0;
    const ComplexMatrix pa = (identity(m * m) - s) / 2.0;
    EXPECT_LT((ps * x * pa).norm(), 1e-9);
    EXPECT_LT((pa * x * ps).norm(), 1e-9);
}

TEST(LocalTest, RejectsUnsupportedTesters) {
    Rng rng(13);
    EXPECT_THROW(average_tester(random_parallel_tester({3, 2, 1, 2, 2}, rng), 2), UnsupportedOrderError);
    EXPECT_THROW(average_tester(random_parallel_tester({1, 2, 2, 0, 2}, rng), 2), LabelError);
    EXPECT_THROW(average_tester(random_parallel_tester({1, 2, 2, 3, 2}, rng), 2), DimensionError);
}
