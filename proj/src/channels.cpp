#include "ctl/channels.hpp"

#include <json.hpp>

#include <cmath>

namespace ctl {

namespace {

void check_trace_preserving(const ComplexMatrix& choi, Index d_in, Index d_out, double tol) {
    if (choi.rows() != d_in * d_out || choi.cols() != d_in * d_out)
        throw DimensionError("Choi operator must be (d_out*d_in) square");
    if (!choi.allFinite()) throw InvalidChannelError("Choi operator has non-finite entries");
    if ((choi - choi.adjoint()).norm() > tol * std::max(1.0, choi.norm()))
        throw InvalidChannelError("Choi operator is not Hermitian");
    const double me = min_eigenvalue(choi);
    if (me < -tol) throw InvalidChannelError("Choi operator is not positive (min eig " + std::to_string(me) + ")");
    const FactorLayout layout({{out(0), d_out}, {in(0), d_in}});
    const Label traced[] = {out(0)};
    const ComplexMatrix marginal = partial_trace(choi, layout, traced);
    if ((marginal - identity(d_in)).norm() > tol * std::sqrt(static_cast<double>(d_in)))
        throw InvalidChannelError("channel is not trace preserving");
}

bool pairwise_orthogonal(const std::vector<ComplexMatrix>& ks, double tol) {
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (std::size_t j = i + 1; j < ks.size(); ++j)
            if (std::abs((ks[i].adjoint() * ks[j]).trace()) > tol) return false;
    return true;
}

}  // namespace

Channel Channel::from_choi(ComplexMatrix choi, Index d_in, Index d_out, double tol) {
    check_trace_preserving(choi, d_in, d_out, tol);
    return Channel(d_in, d_out, std::move(choi), std::nullopt);
}

Channel Channel::from_kraus(std::vector<ComplexMatrix> kraus, double tol) {
    if (kraus.empty()) throw InvalidChannelError("empty Kraus list");
    const Index d_out = kraus.front().rows();
    const Index d_in = kraus.front().cols();
    ComplexMatrix completeness = ComplexMatrix::Zero(d_in, d_in);
    ComplexMatrix choi = ComplexMatrix::Zero(d_in * d_out, d_in * d_out);
    for (const auto& k : kraus) {
        if (k.rows() != d_out || k.cols() != d_in) throw InvalidChannelError("Kraus operators differ in shape");
        completeness += k.adjoint() * k;
        const ComplexVector v = vectorize(k);
        choi += v * v.adjoint();
    }
    if ((completeness - identity(d_in)).norm() > tol * std::sqrt(static_cast<double>(d_in)))
        throw InvalidChannelError("Kraus operators violate completeness");
    check_trace_preserving(choi, d_in, d_out, tol);
    std::optional<std::vector<ComplexMatrix>> stored;
    if (pairwise_orthogonal(kraus, tol)) stored = std::move(kraus);
    return Channel(d_in, d_out, std::move(choi), std::move(stored));
}

std::vector<ComplexMatrix> Channel::kraus() const {
    if (kraus_) return *kraus_;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(choi_));
    const auto& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    std::vector<ComplexMatrix> out_list;
    for (Index k = ev.size(); k-- > 0;) {
        if (ev(k) <= kPinvCutoff * top) break;
        out_list.push_back(std::sqrt(ev(k)) * unvectorize(es.eigenvectors().col(k), d_out_, d_in_));
    }
    return out_list;
}

Index Channel::kraus_rank() const {
    const RealVector ev = hermitian_eigenvalues(choi_);
    const double top = ev.maxCoeff();
    return (ev.array() > kPinvCutoff * top).count();
}

ComplexMatrix Channel::apply(const ComplexMatrix& rho) const {
    if (rho.rows() != d_in_ || rho.cols() != d_in_) throw DimensionError("apply: input state has wrong dimension");
    ComplexMatrix r = ComplexMatrix::Zero(d_out_, d_out_);
    for (const auto& k : kraus()) r += k * rho * k.adjoint();
    return r;
}

Isometry::Isometry(ComplexMatrix matrix, double tol) : matrix_(std::move(matrix)) {
    if (matrix_.rows() < matrix_.cols()) throw DimensionError("isometry must have d_out >= d_in");
    if (defect() > tol) throw InvalidChannelError("matrix is not an isometry (defect " + std::to_string(defect()) + ")");
}

double Isometry::defect() const { return (matrix_.adjoint() * matrix_ - identity(matrix_.cols())).norm(); }

Dilation::Dilation(Isometry iso, Index anc_dim) : iso_(std::move(iso)), anc_dim_(anc_dim) {
    if (anc_dim_ < 1 || iso_.d_out() % anc_dim_ != 0)
        throw DimensionError("dilation output dimension is not divisible by the ancilla dimension");
}

ComplexMatrix Dilation::kraus_block(Index a) const {
    const Index d2 = d_out();
    return iso_.matrix().block(a * d2, 0, d2, d_in());
}

ComplexMatrix choi_of_operator(const ComplexMatrix& e) {
    const ComplexVector v = vectorize(e);
    return v * v.adjoint();
}

Channel kraus_to_choi(const std::vector<ComplexMatrix>& kraus) { return Channel::from_kraus(kraus); }

std::vector<ComplexMatrix> choi_to_kraus(const Channel& ch) {
    if (ch.has_stored_kraus()) {
        // Drop explicit zero padding so the count equals the numeric rank.
        std::vector<ComplexMatrix> nz;
        for (auto& k : ch.kraus())
            if (k.norm() > 1e-12) nz.push_back(k);
        return nz;
    }
    return ch.kraus();
}

Dilation dilate(const Channel& ch, Index r) {
    const auto ks = choi_to_kraus(ch);
    if (static_cast<Index>(ks.size()) > r)
        throw RankError("ancilla dimension " + std::to_string(r) + " below Kraus rank " + std::to_string(ks.size()));
    const Index d1 = ch.d_in();
    const Index d2 = ch.d_out();
    ComplexMatrix v = ComplexMatrix::Zero(r * d2, d1);
    for (std::size_t a = 0; a < ks.size(); ++a) v.block(static_cast<Index>(a) * d2, 0, d2, d1) = ks[a];
    return Dilation(Isometry(std::move(v)), r);
}

Dilation random_dilation(const Channel& ch, Index r, Rng& rng) {
    const Dilation base = dilate(ch, r);
    const ComplexMatrix u = haar_unitary(r, rng);
    ComplexMatrix v = kron(u, identity(ch.d_out())) * base.isometry().matrix();
    return Dilation(Isometry(std::move(v)), r);
}

Channel contract(const ComplexMatrix& v, Index anc_dim) {
    const Index d1 = v.cols();
    if (v.rows() % anc_dim != 0) throw DimensionError("contract: output not divisible by ancilla dimension");
    const Index d2 = v.rows() / anc_dim;
    ComplexMatrix choi = ComplexMatrix::Zero(d1 * d2, d1 * d2);
    std::vector<ComplexMatrix> blocks;
    for (Index a = 0; a < anc_dim; ++a) {
        blocks.push_back(v.block(a * d2, 0, d2, d1));
        const ComplexVector e = vectorize(blocks.back());
        choi += e * e.adjoint();
    }
    return Channel::from_choi(std::move(choi), d1, d2);
}

Channel contract(const Dilation& dil) { return contract(dil.isometry().matrix(), dil.anc_dim()); }

Channel unitary_channel(const ComplexMatrix& u) { return Channel::from_kraus({u}); }

Channel identity_channel(Index d) { return unitary_channel(identity(d)); }

Channel depolarizing_channel(Index d) {
    return Channel::from_choi(identity(d * d) / static_cast<double>(d), d, d);
}

ComplexMatrix random_isometry(Index d_in, Index d_out, Rng& rng) {
    if (d_out < d_in) throw DimensionError("random_isometry: d_out < d_in");
    return haar_unitary(d_out, rng).leftCols(d_in);
}

Channel random_channel(Index d_in, Index d_out, Index rank, Rng& rng) {
    if (rank * d_out < d_in) throw RankError("random_channel: rank * d_out < d_in");
    const ComplexMatrix v = random_isometry(d_in, rank * d_out, rng);
    std::vector<ComplexMatrix> ks;
    for (Index a = 0; a < rank; ++a) ks.push_back(v.block(a * d_out, 0, d_out, d_in));
    return Channel::from_kraus(std::move(ks));
}

Channel compose(const Channel& second, const Channel& first) {
    if (second.d_in() != first.d_out()) throw DimensionError("compose: dimension mismatch");
    std::vector<ComplexMatrix> ks;
    for (const auto& b : second.kraus())
        for (const auto& a : first.kraus()) ks.push_back(b * a);
    const Index d1 = first.d_in();
    const Index d2 = second.d_out();
    ComplexMatrix choi = ComplexMatrix::Zero(d1 * d2, d1 * d2);
    for (const auto& k : ks) choi += choi_of_operator(k);
    return Channel::from_choi(std::move(choi), d1, d2);
}

std::string channel_to_json(const Channel& ch) {
    nlohmann::json j;
    j["d_in"] = ch.d_in();
    j["d_out"] = ch.d_out();
    std::vector<double> re;
    std::vector<double> im;
    const auto& c = ch.choi();
    for (Index i = 0; i < c.rows(); ++i)
        for (Index k = 0; k < c.cols(); ++k) {
            re.push_back(c(i, k).real());
            im.push_back(c(i, k).imag());
        }
    j["choi_re"] = re;
    j["choi_im"] = im;
    return j.dump();
}

Channel channel_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const Index d1 = j.at("d_in").get<Index>();
    const Index d2 = j.at("d_out").get<Index>();
    const auto re = j.at("choi_re").get<std::vector<double>>();
    const auto im = j.at("choi_im").get<std::vector<double>>();
    const Index n = d1 * d2;
    if (static_cast<Index>(re.size()) != n * n || static_cast<Index>(im.size()) != n * n)
        throw DimensionError("channel_from_json: entry count mismatch");
    ComplexMatrix c(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < n; ++k) c(i, k) = Complex(re[static_cast<std::size_t>(i * n + k)], im[static_cast<std::size_t>(i * n + k)]);
    return Channel::from_choi(std::move(c), d1, d2);
}

}  // namespace ctl
