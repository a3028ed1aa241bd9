#include <gtest/gtest.h>

#include "ctl/channels.hpp"
#include "ctl/moments.hpp"

using namespace ctl;

namespace {

ComplexMatrix pauli(int k) {
    ComplexMatrix p = ComplexMatrix::Zero(2, 2);
    switch (k) {
        case 0: p = identity(2); break;
        case 1: p(0, 1) = p(1, 0) = 1.0; break;
        case 2: p(0, 1) = Complex(0, -1); p(1, 0) = Complex(0, 1); break;
        default: p(0, 0) = 1.0; p(1, 1) = -1.0; break;
    }
    return p;
}

ComplexMatrix tr_out(const Channel& ch) {
    const FactorLayout l({{out(0), ch.d_out()}, {in(0), ch.d_in()}});
    const Label t[] = {out(0)};
    return partial_trace(ch.choi(), l, t);
}

// Direct sum_i E_i rho E_i^dagger.
ComplexMatrix apply_kraus(const std::vector<ComplexMatrix>& ks, const ComplexMatrix& rho) {
    ComplexMatrix out = ComplexMatrix::Zero(ks.front().rows(), ks.front().rows());
    for (const auto& k : ks) out += k * rho * k.adjoint();
    return out;
}

}  // namespace

TEST(Channels, IdentityChannelChoi) {
    const Channel id = identity_channel(2);
    const ComplexVector w = vectorize(identity(2));
    EXPECT_LT((id.choi() - w * w.adjoint()).norm(), 1e-14);
    EXPECT_NEAR(id.choi().trace().real(), 2.0, 1e-14);
}

TEST(Channels, DepolarizingFromPaulis) {
    std::vector<ComplexMatrix> ks;
    for (int k = 0; k < 4; ++k) ks.push_back(pauli(k) / 2.0);
    const Channel dep = kraus_to_choi(ks);
    EXPECT_LT((dep.choi() - identity(4) / 2.0).norm(), 1e-14);
    EXPECT_LT((depolarizing_channel(2).choi() - dep.choi()).norm(), 1e-14);
}

TEST(Channels, DepolarizingKrausFromChoi) {
    const auto ks = choi_to_kraus(depolarizing_channel(2));
    ASSERT_EQ(ks.size(), 4u);
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const Complex ip = (ks[i].adjoint() * ks[j]).trace();
            EXPECT_NEAR(std::abs(ip), i == j ? 0.5 : 0.0, 1e-12);
        }
}

TEST(Channels, UnitaryChannelHasSingleKraus) {
    Rng rng(1);
    const ComplexMatrix u = haar_unitary(3, rng);
    const auto ks = choi_to_kraus(unitary_channel(u));
    ASSERT_EQ(ks.size(), 1u);
    const Complex phase = (u.adjoint() * ks[0]).trace() / 3.0;
    EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
    EXPECT_LT((ks[0] - phase * u).norm(), 1e-12);
}

TEST(Channels, RandomChannelsSatisfyInvariants) {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        const Index d1 = 1 + t % 3;
        const Index d2 = 1 + (t / 3) % 3;
        const Index rmin = (d1 + d2 - 1) / d2;
        const Index r = std::min<Index>(rmin + t % 3, d1 * d2);
        const Channel ch = random_channel(d1, d2, r, rng);
        EXPECT_GT(min_eigenvalue(ch.choi()), -1e-9);
        EXPECT_LT((tr_out(ch) - identity(d1)).norm(), 1e-9);
        EXPECT_LE(ch.kraus_rank(), d1 * d2);
        EXPECT_GE(ch.kraus_rank() * d2, d1);
    }
}

TEST(Channels, KrausChoiRoundTrip) {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const Channel ch = random_channel(2, 3, 2, rng);
        const auto ks = choi_to_kraus(ch);
        EXPECT_EQ(static_cast<Index>(ks.size()), ch.kraus_rank());
        const Channel back = kraus_to_choi(ks);
        EXPECT_LT((back.choi() - ch.choi()).norm(), 1e-9);
        for (std::size_t i = 0; i < ks.size(); ++i)
            for (std::size_t j = i + 1; j < ks.size(); ++j)
                EXPECT_LT(std::abs((ks[i].adjoint() * ks[j]).trace()), 1e-9);
    }
}

TEST(Channels, ApplyMatchesKrausSum) {
    Rng rng(4);
    const Channel ch = random_channel(3, 2, 3, rng);
    const ComplexVector psi = haar_state(3, rng);
    const ComplexMatrix rho = psi * psi.adjoint();
    EXPECT_LT((ch.apply(rho) - apply_kraus(ch.kraus(), rho)).norm(), 1e-12);
}

TEST(Channels, ChoiRejectsInvalidOperators) {
    EXPECT_THROW(Channel::from_choi(-identity(4), 2, 2), InvalidChannelError);
    EXPECT_THROW(Channel::from_choi(identity(4), 2, 2), InvalidChannelError);  // tr_out I = 2 I
    EXPECT_THROW(Channel::from_choi(identity(3), 2, 2), DimensionError);
    std::vector<ComplexMatrix> bad = {identity(2) * 0.5};
    EXPECT_THROW(Channel::from_kraus(bad), InvalidChannelError);
}

TEST(Channels, DilateUnitaryIsUnitary) {
    Rng rng(5);
    const ComplexMatrix u = haar_unitary(2, rng);
    const Dilation d = dilate(unitary_channel(u), 1);
    const Complex phase = (u.adjoint() * d.isometry().matrix()).trace() / 2.0;
    EXPECT_LT((d.isometry().matrix() - phase * u).norm(), 1e-12);
}

TEST(Channels, DilateDepolarizingRoundTrip) {
    const Channel dep = depolarizing_channel(2);
    const Dilation d = dilate(dep, 4);
    EXPECT_EQ(d.isometry().matrix().rows(), 8);
    EXPECT_EQ(d.isometry().matrix().cols(), 2);
    EXPECT_LT((contract(d).choi() - dep.choi()).norm(), 1e-9);
}

TEST(Channels, DilationZeroPadsExtraAncilla) {
    Rng rng(6);
    const Channel ch = random_channel(2, 2, 2, rng);
    const Dilation d = dilate(ch, 3);
    EXPECT_LT(d.kraus_block(2).norm(), 1e-12);
    EXPECT_LT(d.isometry().defect(), 1e-9);
    EXPECT_THROW(dilate(ch, 1), RankError);
}

TEST(Channels, RandomDilationContractsToChannel) {
    Rng rng(7);
    const Channel ch = random_channel(2, 2, 2, rng);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) worst = std::max(worst, (contract(random_dilation(ch, 3, rng)).choi() - ch.choi()).norm());
    EXPECT_LT(worst, 1e-8);
}

TEST(Channels, RandomDilationRankOneIsGlobalPhase) {
    Rng rng(8);
    const ComplexMatrix u = haar_unitary(3, rng);
    const Channel ch = unitary_channel(u);
    const ComplexMatrix v0 = dilate(ch, 1).isometry().matrix();
    const ComplexMatrix v = random_dilation(ch, 1, rng).isometry().matrix();
    const Complex phase = (v0.adjoint() * v).trace() / 3.0;
    EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
    EXPECT_LT((v - phase * v0).norm(), 1e-12);
}

TEST(Channels, RandomDilationAverageMatchesAncillaTwirl) {
    Rng rng(9);
    const Channel ch = random_channel(2, 2, 2, rng);
    const Index r = 2;
    const ComplexVector w0 = vectorize(dilate(ch, r).isometry().matrix());
    const FactorLayout l({{anc(0), r}, {out(0), 2}, {in(0), 2}});
    const ComplexMatrix exact = twirl1(LabelledOperator(w0 * w0.adjoint(), l), anc(0)).op();
    const int n = 20000;
    ComplexMatrix sum = ComplexMatrix::Zero(8, 8);
    ComplexMatrix sq = ComplexMatrix::Zero(8, 8);
    for (int k = 0; k < n; ++k) {
        const ComplexVector w = vectorize(random_dilation(ch, r, rng).isometry().matrix());
        const ComplexMatrix p = w * w.adjoint();
        sum += p;
        sq += p.cwiseAbs2().cast<Complex>();
    }
    const ComplexMatrix mean = sum / static_cast<double>(n);
    for (Index i = 0; i < 8; ++i)
        for (Index j = 0; j < 8; ++j) {
            const double var = sq(i, j).real() / n - std::norm(mean(i, j));
            const double se = std::sqrt(std::max(var, 0.0) / n);
            EXPECT_LT(std::abs(mean(i, j) - exact(i, j)), 5.0 * se + 1e-10);
        }
}

TEST(Channels, TwoDilationsDifferByAncillaUnitary) {
    Rng rng(10);
    for (int t = 0; t < 20; ++t) {
        const Channel ch = random_channel(2, 3, 3, rng);
        const Index r = 3;
        const ComplexMatrix v1 = random_dilation(ch, r, rng).isometry().matrix();
        const ComplexMatrix v2 = random_dilation(ch, r, rng).isometry().matrix();
        // Procrustes: W = polar part of M with M_ab = tr(V2_a^dagger ... ) in block form.
        ComplexMatrix m(r, r);
        for (Index a = 0; a < r; ++a)
            for (Index b = 0; b < r; ++b) m(a, b) = (v1.block(b * 3, 0, 3, 2).adjoint() * v2.block(a * 3, 0, 3, 2)).trace();
        const Svd s = svd(m);
        const ComplexMatrix w = s.u * s.v.adjoint();
        const ComplexMatrix resid = kron(w, identity(3)) * v1 - v2;
        EXPECT_LT(resid.norm(), 1e-8);
    }
}

TEST(Channels, ContractArbitraryIsometry) {
    Rng rng(11);
    const ComplexMatrix v = random_isometry(2, 6, rng);
    const Channel ch = contract(v, 3);
    EXPECT_EQ(ch.d_out(), 2);
    EXPECT_LE(ch.kraus_rank(), 3);
    EXPECT_THROW(contract(v, 4), DimensionError);
}

TEST(Channels, IsometryRejectsNonIsometry) {
    EXPECT_THROW(Isometry(2.0 * identity(2)), InvalidChannelError);
    EXPECT_THROW(Isometry(ComplexMatrix::Identity(2, 3)), DimensionError);
}

TEST(Channels, ComposeMatchesSequentialApplication) {
    Rng rng(12);
    const Channel a = random_channel(2, 3, 2, rng);
    const Channel b = random_channel(3, 2, 2, rng);
    const Channel ba = compose(b, a);
    const ComplexVector psi = haar_state(2, rng);
    const ComplexMatrix rho = psi * psi.adjoint();
    EXPECT_LT((ba.apply(rho) - b.apply(a.apply(rho))).norm(), 1e-12);
}

TEST(Channels, JsonRoundTrip) {
    Rng rng(13);
    const Channel ch = random_channel(2, 3, 2, rng);
    const Channel back = channel_from_json(channel_to_json(ch));
    EXPECT_EQ(back.d_in(), 2);
    EXPECT_EQ(back.d_out(), 3);
    EXPECT_LT((back.choi() - ch.choi()).norm(), 1e-15);
}
