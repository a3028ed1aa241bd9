#include "ctl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace ctl {

namespace {

const char* role_name(Role r) {
    switch (r) {
        case Role::In: return "in";
        case Role::Out: return "out";
        case Role::Anc: return "anc";
        case Role::Ref: return "ref";
        case Role::Mem: return "mem";
        case Role::Start: return "start";
        case Role::End: return "end";
    }
    return "?";
}

std::vector<Index> strides_of(std::span<const Index> dims) {
    std::vector<Index> s(dims.size(), 1);
    for (std::size_t k = dims.size(); k-- > 1;) s[k - 1] = s[k] * dims[k];
    return s;
}

// For each index of the permuted space, the corresponding index of the original.
std::vector<Index> permutation_map(std::span<const Index> dims, std::span<const std::size_t> perm) {
    if (perm.size() != dims.size()) throw DimensionError("permutation size mismatch");
    const auto stride = strides_of(dims);
    std::vector<Index> map{0};
    for (std::size_t k = 0; k < perm.size(); ++k) {
        const Index d = dims[perm[k]];
        const Index s = stride[perm[k]];
        std::vector<Index> next;
        next.reserve(map.size() * static_cast<std::size_t>(d));
        for (Index base : map)
            for (Index n = 0; n < d; ++n) next.push_back(base + n * s);
        map = std::move(next);
    }
    return map;
}

}  // namespace

std::string to_string(const Label& l) { return std::string(role_name(l.role)) + std::to_string(l.index); }

FactorLayout::FactorLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::set<Label> seen;
    for (const auto& f : factors_) {
        if (f.dim < 1) throw DimensionError("factor " + to_string(f.label) + " has dimension < 1");
        if (!seen.insert(f.label).second) throw LabelError("duplicate label " + to_string(f.label));
    }
}

Index FactorLayout::total_dim() const {
    Index d = 1;
    for (const auto& f : factors_) d *= f.dim;
    return d;
}

bool FactorLayout::contains(const Label& l) const {
    return std::any_of(factors_.begin(), factors_.end(), [&](const Factor& f) { return f.label == l; });
}

std::size_t FactorLayout::position(const Label& l) const {
    for (std::size_t k = 0; k < factors_.size(); ++k)
        if (factors_[k].label == l) return k;
    throw LabelError("unknown label " + to_string(l));
}

Index FactorLayout::dim_of(const Label& l) const { return factors_[position(l)].dim; }

std::vector<Label> FactorLayout::labels() const {
    std::vector<Label> out;
    out.reserve(factors_.size());
    for (const auto& f : factors_) out.push_back(f.label);
    return out;
}

std::vector<Index> FactorLayout::dims() const {
    std::vector<Index> out;
    out.reserve(factors_.size());
    for (const auto& f : factors_) out.push_back(f.dim);
    return out;
}

FactorLayout FactorLayout::without(std::span<const Label> removed) const {
    for (const auto& l : removed) (void)position(l);
    std::vector<Factor> kept;
    for (const auto& f : factors_)
        if (std::find(removed.begin(), removed.end(), f.label) == removed.end()) kept.push_back(f);
    return FactorLayout(std::move(kept));
}

FactorLayout FactorLayout::concat(const FactorLayout& other) const {
    auto all = factors_;
    all.insert(all.end(), other.factors_.begin(), other.factors_.end());
    return FactorLayout(std::move(all));
}

bool FactorLayout::operator==(const FactorLayout& o) const {
    if (factors_.size() != o.factors_.size()) return false;
    for (std::size_t k = 0; k < factors_.size(); ++k)
        if (factors_[k].label != o.factors_[k].label || factors_[k].dim != o.factors_[k].dim) return false;
    return true;
}

ComplexMatrix identity(Index d) { return ComplexMatrix::Identity(d, d); }

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
    ComplexVector r(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) r.segment(i * b.size(), b.size()) = a(i) * b;
    return r;
}

ComplexMatrix basis_projector(Index d, Index i) {
    ComplexMatrix p = ComplexMatrix::Zero(d, d);
    p(i, i) = 1.0;
    return p;
}

ComplexVector basis_vector(Index d, Index i) {
    ComplexVector v = ComplexVector::Zero(d);
    v(i) = 1.0;
    return v;
}

ComplexVector vectorize(const ComplexMatrix& x) {
    ComplexVector v(x.size());
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
    return v;
}

ComplexMatrix unvectorize(const ComplexVector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) throw DimensionError("unvectorize: size mismatch");
    ComplexMatrix x(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) x(i, j) = v(i * cols + j);
    return x;
}

ComplexVector permute_factors(const ComplexVector& v, std::span<const Index> dims,
                              std::span<const std::size_t> perm) {
    const auto map = permutation_map(dims, perm);
    if (static_cast<Index>(map.size()) != v.size()) throw DimensionError("permute_factors: size mismatch");
    ComplexVector r(v.size());
    for (std::size_t k = 0; k < map.size(); ++k) r(static_cast<Index>(k)) = v(map[k]);
    return r;
}

ComplexMatrix permute_factors(const ComplexMatrix& m, std::span<const Index> dims,
                              std::span<const std::size_t> perm) {
    const auto map = permutation_map(dims, perm);
    const auto n = static_cast<Index>(map.size());
    if (m.rows() != n || m.cols() != n) throw DimensionError("permute_factors: size mismatch");
    ComplexMatrix r(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) r(i, j) = m(map[i], map[j]);
    return r;
}

ComplexMatrix reorder(const ComplexMatrix& m, const FactorLayout& layout, std::span<const Label> order) {
    if (order.size() != layout.size()) throw LabelError("reorder: label count mismatch");
    std::vector<std::size_t> perm;
    perm.reserve(order.size());
    for (const auto& l : order) perm.push_back(layout.position(l));
    bool trivial = true;
    for (std::size_t k = 0; k < perm.size(); ++k) trivial = trivial && perm[k] == k;
    if (trivial) return m;
    const auto dims = layout.dims();
    return permute_factors(m, dims, perm);
}

ComplexMatrix partial_trace(const ComplexMatrix& m, const FactorLayout& layout,
                            std::span<const Label> traced) {
    const Index n = layout.total_dim();
    if (m.rows() != n || m.cols() != n) throw DimensionError("partial_trace: operator does not match layout");
    const auto kept_layout = layout.without(traced);
    std::vector<Label> order = kept_layout.labels();
    order.insert(order.end(), traced.begin(), traced.end());
    const ComplexMatrix r = reorder(m, layout, order);
    const Index keep = kept_layout.total_dim();
    const Index t = n / keep;
    ComplexMatrix out = ComplexMatrix::Zero(keep, keep);
    for (Index j = 0; j < keep; ++j)
        for (Index i = 0; i < keep; ++i) {
            Complex s = 0.0;
            for (Index k = 0; k < t; ++k) s += r(i * t + k, j * t + k);
            out(i, j) = s;
        }
    return out;
}

ComplexMatrix partial_transpose(const ComplexMatrix& m, const FactorLayout& layout,
                                std::span<const Label> transposed) {
    const Index n = layout.total_dim();
    if (m.rows() != n || m.cols() != n) throw DimensionError("partial_transpose: operator does not match layout");
    const auto dims = layout.dims();
    const auto stride = strides_of(dims);
    std::vector<bool> flip(dims.size(), false);
    for (const auto& l : transposed) flip[layout.position(l)] = true;
    std::vector<Index> tpart(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < n; ++i) {
        Index rem = i;
        Index acc = 0;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const Index digit = rem / stride[k];
            rem %= stride[k];
            if (flip[k]) acc += digit * stride[k];
        }
        tpart[static_cast<std::size_t>(i)] = acc;
    }
    ComplexMatrix out(n, n);
    for (Index j = 0; j < n; ++j) {
        const Index tj = tpart[static_cast<std::size_t>(j)];
        for (Index i = 0; i < n; ++i) {
            const Index ti = tpart[static_cast<std::size_t>(i)];
            out(i - ti + tj, j - tj + ti) = m(i, j);
        }
    }
    return out;
}

double trace_norm(const ComplexMatrix& m) {
    if (m.rows() == m.cols() && (m - m.adjoint()).norm() <= 1e-13 * std::max(1.0, m.norm()))
        return hermitian_eigenvalues(m).cwiseAbs().sum();
    Eigen::BDCSVD<ComplexMatrix> s(m);
    return s.singularValues().sum();
}

double operator_norm(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<ComplexMatrix> s(m);
    return s.singularValues()(0);
}

double frobenius_norm(const ComplexMatrix& m) { return m.norm(); }

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double min_eigenvalue(const ComplexMatrix& m) { return hermitian_eigenvalues(m).minCoeff(); }

bool is_psd(const ComplexMatrix& m, double tol) {
    if ((m - m.adjoint()).norm() > tol * std::max(1.0, m.norm())) return false;
    return min_eigenvalue(m) >= -tol;
}

bool is_finite(const ComplexMatrix& m) { return m.allFinite(); }

Svd svd(const ComplexMatrix& m) {
    Eigen::BDCSVD<ComplexMatrix> s(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return {s.matrixU(), s.singularValues(), s.matrixV()};
}

ComplexMatrix pseudoinverse(const ComplexMatrix& m, double cutoff) {
    Eigen::BDCSVD<ComplexMatrix> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = s.singularValues();
    ComplexMatrix out = ComplexMatrix::Zero(m.cols(), m.rows());
    if (sv.size() == 0 || sv(0) == 0.0) return out;
    const double thresh = cutoff * sv(0);
    for (Index k = 0; k < sv.size(); ++k) {
        if (sv(k) <= thresh) break;
        out += (s.matrixV().col(k) / sv(k)) * s.matrixU().col(k).adjoint();
    }
    return out;
}

Index numeric_rank(const ComplexMatrix& m, double cutoff) {
    Eigen::BDCSVD<ComplexMatrix> s(m);
    const auto& sv = s.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    return (sv.array() > cutoff * sv(0)).count();
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m));
    const RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

ComplexMatrix complex_gaussian(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    ComplexMatrix z(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) {
            const double re = g(rng);
            const double im = g(rng);
            z(i, j) = Complex(re, im);
        }
    return z;
}

ComplexMatrix haar_unitary(Index d, Rng& rng) {
    if (d < 1) throw DimensionError("haar_unitary: d must be >= 1");
    const ComplexMatrix z = complex_gaussian(d, d, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix& r = qr.matrixQR();
    for (Index k = 0; k < d; ++k) {
        const Complex rkk = r(k, k);
        const double a = std::abs(rkk);
        q.col(k) *= (a > 0.0 ? rkk / a : Complex(1.0));
    }
    return q;
}

ComplexVector haar_state(Index d, Rng& rng) {
    ComplexVector v = complex_gaussian(d, 1, rng).col(0);
    return v / v.norm();
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool psd_domination_check(const ComplexMatrix& m, const ComplexVector& psi, double tol) {
    const ComplexMatrix pinv = pseudoinverse(m);
    const ComplexVector outside = psi - m * (pinv * psi);
    if (outside.norm() > 1e-8 * std::max(1.0, psi.norm()))
        throw SupportError("psd_domination_check: vector has weight outside supp(M)");
    const double q = std::real(psi.dot(pinv * psi));
    return q <= 1.0 + tol;
}

ComplexMatrix coordinate_embedding(Index dim, Index offset, Index sub) {
    if (offset + sub > dim) throw DimensionError("coordinate_embedding: out of range");
    ComplexMatrix e = ComplexMatrix::Zero(dim, sub);
    for (Index k = 0; k < sub; ++k) e(offset + k, k) = 1.0;
    return e;
}

}  // namespace ctl
