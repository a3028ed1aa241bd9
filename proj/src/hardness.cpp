#include "ctl/hardness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>

#include <json.hpp>

#include "ctl/moments.hpp"

namespace ctl {

namespace {

Index row_of(Index a, Index b, Index d2) { return a * d2 + b; }

// Column k of C^{d1} goes to (b, a) = (offset + k / r, k % r).
ComplexMatrix g_embedding(Index cols, Index r, Index d2, Index b_offset) {
    ComplexMatrix g = ComplexMatrix::Zero(r * d2, cols);
    for (Index k = 0; k < cols; ++k) g(row_of(k % r, b_offset + k / r, d2), k) = 1.0;
    return g;
}

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

void fail(const std::string& what) { throw RegimeError("regime violation: requires " + what); }

Index near_boundary_eta(const HardDims& d) { return d.d1 - d.r * (d.d1 / d.r); }

Index mid_zeta(const HardDims& d) {
    const Index lo = d.d1 / d.r;
    const Index hi = ceil_div(d.d1, d.r);
    return std::min(lo, d.d2 - hi);
}

}  // namespace

std::string to_string(Regime r) {
    switch (r) {
        case Regime::TypeI: return "type1";
        case Regime::TypeII_nearBoundary: return "type2-near";
        case Regime::TypeII_mid: return "type2-mid";
        case Regime::TypeII_largeRank: return "type2-large";
    }
    return "unknown";
}

Regime regime_from_string(const std::string& s) {
    for (Regime r : {Regime::TypeI, Regime::TypeII_nearBoundary, Regime::TypeII_mid, Regime::TypeII_largeRank})
        if (to_string(r) == s) return r;
    throw ArgumentError("unknown regime '" + s + "' (type1 | type2-near | type2-mid | type2-large)");
}

ComplexMatrix HardFamily::rotated_delta(const ComplexMatrix& u) const {
    if (u.rows() != u_dim || u.cols() != u_dim) throw DimensionError("rotated_delta: unitary has the wrong size");
    if (regime == Regime::TypeI) {
        ComplexMatrix ua = identity(dims.d1);
        ua.topLeftCorner(u_dim, u_dim) = u;
        const ComplexMatrix delta_a = rotation_embedding.adjoint() * delta;
        return rotation_embedding * ua * delta_a * ua.adjoint();
    }
    return rotation_embedding * u * (rotation_embedding.adjoint() * delta);
}

void check_regime(Regime regime, const HardDims& d, double eps) {
    if (!(eps >= 0.0 && eps < 0.5)) fail("0 <= eps < 1/2");
    if (d.d1 < 1 || d.d2 < 1 || d.r < 1) fail("d1, d2, r >= 1");
    const Index d1 = d.d1;
    const Index d2 = d.d2;
    const Index r = d.r;
    if (regime == Regime::TypeI) {
        if (d1 < 2) fail("d1 >= 2");
        if (d1 > r * d2) fail("d1 <= r*d2");
        if (3 * r * d2 > 4 * d1) fail("r*d2 <= (4/3)*d1");
        return;
    }
    if (d2 < 2) fail("d2 > 1");
    if (2 * r > d1 * d2) fail("r <= d1*d2/2");
    switch (regime) {
        case Regime::TypeII_nearBoundary:
            if (d1 >= r * d2) fail("d1 < r*d2");
            if (r * d2 >= d1 + r) fail("r*d2 < d1 + r");
            break;
        case Regime::TypeII_mid:
            if (d1 + r > r * d2) fail("d1 + r <= r*d2");
            if (r > d1) fail("r <= d1");
            break;
        case Regime::TypeII_largeRank:
            if (d1 + r > r * d2) fail("d1 + r <= r*d2");
            if (d1 >= r) fail("d1 < r");
            break;
        default: break;
    }
}

HardFamily make_family(Regime regime, const HardDims& dims, double eps) {
    check_regime(regime, dims, eps);
    const Index d1 = dims.d1;
    const Index d2 = dims.d2;
    const Index r = dims.r;
    const double s = std::sqrt(1.0 - eps * eps);
    HardFamily f;
    f.regime = regime;
    f.eps = eps;
    f.dims = dims;
    f.center = ComplexMatrix::Zero(r * d2, d1);
    f.delta = ComplexMatrix::Zero(r * d2, d1);

    switch (regime) {
        case Regime::TypeI: {
            const Index dp = 2 * (d1 / 2);
            const Index half = d1 / 2;
            ComplexMatrix v0 = ComplexMatrix::Zero(d1, d1);
            ComplexMatrix delta = ComplexMatrix::Zero(d1, d1);
            for (Index i = 0; i < dp; ++i) {
                v0(i, i) = s;
                delta(i, i) = i < half ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
            }
            if (d1 % 2 == 1) v0(d1 - 1, d1 - 1) = 1.0;
            f.rotation_embedding = g_embedding(d1, r, d2, 0);
            f.center = f.rotation_embedding * v0;
            f.delta = f.rotation_embedding * delta;
            f.u_dim = dp;
            break;
        }
        case Regime::TypeII_nearBoundary: {
            const Index q = d1 / r;  // = d2 - 1
            const Index eta = near_boundary_eta(dims);
            const Index m = r - eta;
            for (Index i = 0; i < r * q; ++i) f.center(row_of(i % r, i / r, d2), i) = i < m ? s : 1.0;
            for (Index i = 0; i < eta; ++i) f.center(row_of(i + m, d2 - 1, d2), r * q + i) = 1.0;
            f.rotation_embedding = ComplexMatrix::Zero(r * d2, m);
            for (Index t = 0; t < m; ++t) f.rotation_embedding(row_of(t, d2 - 1, d2), t) = 1.0;
            f.delta.leftCols(m) = f.rotation_embedding;
            f.u_dim = m;
            break;
        }
        case Regime::TypeII_mid: {
            const Index hi = ceil_div(d1, r);
            const Index zeta = mid_zeta(dims);
            for (Index i = 0; i < d1; ++i) f.center(row_of(i % r, i / r, d2), i) = i < r * zeta ? s : 1.0;
            f.rotation_embedding = g_embedding(r * (d2 - hi), r, d2, hi);
            f.delta.leftCols(r * zeta) = f.rotation_embedding.leftCols(r * zeta);
            f.u_dim = r * (d2 - hi);
            break;
        }
        case Regime::TypeII_largeRank: {
            const Index chi = ceil_div(r, d1);
            const auto ks = kraus_partition(d1, chi, r);
            for (Index a = 0; a < r; ++a) f.center.block(a * d2, 0, chi, d1) = s * ks[static_cast<std::size_t>(a)];
            f.rotation_embedding = g_embedding(r * (d2 - chi), r, d2, chi);
            f.delta = f.rotation_embedding.leftCols(d1);
            f.u_dim = r * (d2 - chi);
            break;
        }
    }
    return f;
}

HardInstance make_instance(const HardFamily& family, const ComplexMatrix& u) {
    const ComplexMatrix rotated = family.rotated_delta(u);
    const ComplexMatrix v = family.center + family.eps * rotated;
    return HardInstance{family.regime, family.eps, family.dims, family.center, family.delta, u, rotated, Isometry(v)};
}

HardInstance build_instance(Regime regime, const HardDims& dims, double eps, Rng& rng) {
    const HardFamily f = make_family(regime, dims, eps);
    return make_instance(f, haar_unitary(f.u_dim, rng));
}

HardInstance build_type1(Index d1, Index d2, Index r, double eps, Rng& rng) {
    return build_instance(Regime::TypeI, {d1, d2, r}, eps, rng);
}

HardInstance build_type2(Regime regime, Index d1, Index d2, Index r, double eps, Rng& rng) {
    if (regime == Regime::TypeI) throw ArgumentError("build_type2 needs a Type II regime");
    return build_instance(regime, {d1, d2, r}, eps, rng);
}

std::vector<ComplexMatrix> clock_shift_basis(Index d) {
    const double pi = std::acos(-1.0);
    ComplexMatrix x = ComplexMatrix::Zero(d, d);
    ComplexMatrix z = ComplexMatrix::Zero(d, d);
    for (Index j = 0; j < d; ++j) {
        x((j + 1) % d, j) = 1.0;
        z(j, j) = std::polar(1.0, 2.0 * pi * static_cast<double>(j) / static_cast<double>(d));
    }
    std::vector<ComplexMatrix> out;
    ComplexMatrix xa = identity(d);
    for (Index a = 0; a < d; ++a) {
        ComplexMatrix zb = identity(d);
        for (Index b = 0; b < d; ++b) {
            out.push_back(xa * zb);
            zb = zb * z;
        }
        xa = xa * x;
    }
    return out;
}

std::vector<ComplexMatrix> kraus_partition(Index d1, Index d2, Index r) {
    if (d1 < 1 || d2 < 1 || r < 1) throw ArgumentError("kraus_partition: dimensions must be positive");
    if (d1 > r * d2) throw ArgumentError("kraus_partition: requires d1/d2 <= r");
    if (r > d1 * d2) throw ArgumentError("kraus_partition: requires r <= d1*d2");
    std::vector<ComplexMatrix> ks;
    if (d1 <= d2) {
        const Index blocks = d2 / d1;
        const auto units = clock_shift_basis(d1);
        const Index chosen = ceil_div(r, 2);
        if (chosen > blocks * d1 * d1) throw ArgumentError("kraus_partition: not enough orthogonal unitaries");
        const double w = 1.0 / std::sqrt(static_cast<double>(chosen));
        for (Index j = 0; j < chosen; ++j) {
            ComplexMatrix k = ComplexMatrix::Zero(d2, d1);
            k.block((j % blocks) * d1, 0, d1, d1) = w * units[static_cast<std::size_t>(j / blocks)];
            ks.push_back(std::move(k));
        }
    } else {
        const Index blocks = d1 / d2;
        const Index per = ceil_div(r, 2 * blocks);
        const auto units = clock_shift_basis(d2);
        if (per > d2 * d2) throw ArgumentError("kraus_partition: not enough orthogonal unitaries");
        const double w = 1.0 / std::sqrt(static_cast<double>(per));
        for (Index i = 0; i < blocks; ++i)
            for (Index j = 0; j < per; ++j) {
                ComplexMatrix k = ComplexMatrix::Zero(d2, d1);
                k.block(0, i * d2, d2, d2) = w * units[static_cast<std::size_t>(j)];
                ks.push_back(std::move(k));
            }
        const Index d3 = d1 - blocks * d2;
        if (d3 > 0) {
            const Index rblocks = d2 / d3;
            const Index rest = ceil_div(r * d3, 2 * d1);
            const auto small = clock_shift_basis(d3);
            if (rest > rblocks * d3 * d3) throw ArgumentError("kraus_partition: not enough remainder unitaries");
            const double wr = 1.0 / std::sqrt(static_cast<double>(rest));
            for (Index j = 0; j < rest; ++j) {
                ComplexMatrix k = ComplexMatrix::Zero(d2, d1);
                k.block((j % rblocks) * d3, blocks * d2, d3, d3) = wr * small[static_cast<std::size_t>(j / rblocks)];
                ks.push_back(std::move(k));
            }
        }
    }
    if (static_cast<Index>(ks.size()) > r)
        throw ArgumentError("kraus_partition: construction needs " + std::to_string(ks.size()) +
                            " operators, more than r = " + std::to_string(r));
    while (static_cast<Index>(ks.size()) < r) ks.push_back(ComplexMatrix::Zero(d2, d1));
    return ks;
}

std::vector<ComplexMatrix> center_kraus_blocks(const HardFamily& family) {
    const auto& d = family.dims;
    ComplexMatrix v = family.center;
    // Near the boundary the bound concerns V0 only, without the V0' columns.
    if (family.regime == Regime::TypeII_nearBoundary) {
        const Index q = d.d1 / d.r;
        v.rightCols(d.d1 - d.r * q).setZero();
    }
    std::vector<ComplexMatrix> ks;
    for (Index a = 0; a < d.r; ++a) ks.push_back(v.block(a * d.d2, 0, d.d2, d.d1));
    return ks;
}

KrausBounds center_kraus_bounds(const HardFamily& family) {
    const auto& d = family.dims;
    switch (family.regime) {
        case Regime::TypeII_nearBoundary: {
            const double q = static_cast<double>(d.d2 - 1);
            return {q / 2.0, q};
        }
        case Regime::TypeII_mid:
            return {static_cast<double>(d.d1 / d.r) / 2.0, static_cast<double>(ceil_div(d.d1, d.r))};
        case Regime::TypeII_largeRank:
            return {0.0, 2.0 * static_cast<double>(d.d1) / static_cast<double>(d.r)};
        default:
            throw ArgumentError("center_kraus_bounds: no Kraus bound is stated for Type I");
    }
}

double image_overlap(const HardFamily& family, const ComplexMatrix& u) {
    const ComplexMatrix proj = family.center * pseudoinverse(family.center);
    return (proj * family.rotated_delta(u)).norm();
}

ComplexMatrix anc_traced_outer(const ComplexMatrix& x, const ComplexMatrix& y, Index anc_dim) {
    if (x.rows() != y.rows() || x.cols() != y.cols() || x.rows() % anc_dim != 0)
        throw DimensionError("anc_traced_outer: shape mismatch");
    const Index d2 = x.rows() / anc_dim;
    const Index d1 = x.cols();
    ComplexMatrix mx(d2 * d1, anc_dim);
    ComplexMatrix my(d2 * d1, anc_dim);
    for (Index a = 0; a < anc_dim; ++a) {
        mx.col(a) = vectorize(x.block(a * d2, 0, d2, d1));
        my.col(a) = vectorize(y.block(a * d2, 0, d2, d1));
    }
    return mx * my.adjoint();
}

// ---- gamma vectors ----

GammaFamily generic_type1_family(Index d, Index big_d, double eps, Rng& rng) {
    if (d < 2 || big_d < d) throw ArgumentError("generic_type1_family: requires 2 <= d <= D");
    if (!(eps >= 0.0 && eps < 0.5)) throw ArgumentError("generic_type1_family: requires 0 <= eps < 1/2");
    const Index dp = 2 * (d / 2);
    const double s = std::sqrt(1.0 - eps * eps);
    ComplexMatrix v0 = ComplexMatrix::Zero(big_d, d);
    ComplexMatrix delta = ComplexMatrix::Zero(d, d);
    for (Index i = 0; i < dp; ++i) {
        v0(i, i) = s;
        delta(i, i) = i < d / 2 ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
    }
    if (d % 2 == 1) v0(d - 1, d - 1) = 1.0;
    ComplexMatrix u = identity(d);
    u.topLeftCorner(dp, dp) = haar_unitary(dp, rng);
    ComplexMatrix rotated = ComplexMatrix::Zero(big_d, d);
    rotated.topRows(d) = u * delta * u.adjoint();
    return {GammaKind::TypeI, v0, rotated};
}

GammaFamily generic_type2_family(Index d, Index big_d, Index d_prime, double eps, Rng& rng) {
    if (d < 1 || d_prime < 1 || d_prime > d || big_d - d < d_prime)
        throw ArgumentError("generic_type2_family: requires 1 <= d' <= min(d, D - d)");
    if (!(eps >= 0.0 && eps < 0.5)) throw ArgumentError("generic_type2_family: requires 0 <= eps < 1/2");
    const double s = std::sqrt(1.0 - eps * eps);
    ComplexMatrix v0 = ComplexMatrix::Zero(big_d, d);
    for (Index i = 0; i < d; ++i) v0(i, i) = i < d_prime ? s : 1.0;
    ComplexMatrix delta = ComplexMatrix::Zero(big_d - d, d);
    for (Index i = 0; i < d_prime; ++i) delta(i, i) = 1.0;
    ComplexMatrix rotated = ComplexMatrix::Zero(big_d, d);
    rotated.bottomRows(big_d - d) = haar_unitary(big_d - d, rng) * delta;
    return {GammaKind::TypeII, v0, rotated};
}

GammaFamily gamma_family_from(const HardInstance& inst) {
    return {inst.regime == Regime::TypeI ? GammaKind::TypeI : GammaKind::TypeII, inst.v0, inst.rotated};
}

namespace {

FactorLayout gamma_layout(const GammaFamily& f, int n) {
    std::vector<Factor> fs;
    for (int j = 0; j < n; ++j) {
        fs.push_back({out(j), f.v0.rows()});
        fs.push_back({in(j), f.v0.cols()});
    }
    return FactorLayout(std::move(fs));
}

void check_gamma_budget(const GammaFamily& f, int n) {
    if (n < 1) throw ArgumentError("gamma vectors need n >= 1");
    if (n > 3) throw BudgetError("gamma vectors are limited to n <= 3");
    Index total = 1;
    for (int j = 0; j < n; ++j) total *= f.v0.rows() * f.v0.cols();
    if (total > kGammaDimBudget)
        throw BudgetError("gamma vector dimension " + std::to_string(total) + " exceeds " +
                          std::to_string(kGammaDimBudget));
}

ComplexVector product_vector(const ComplexVector& v0, const ComplexVector& dl, std::uint32_t mask, int n) {
    ComplexVector v = ComplexVector::Ones(1);
    for (int j = 0; j < n; ++j) v = kron(v, ((mask >> j) & 1U) ? dl : v0);
    return v;
}

ComplexVector gamma_state(const GammaFamily& f, std::uint32_t index, int n) {
    const ComplexVector v0 = vectorize(f.v0);
    const ComplexVector dl = vectorize(f.delta);
    if (f.kind == GammaKind::TypeI) {
        if (index >= (1U << n)) throw ArgumentError("gamma_vector: subset mask out of range");
        return product_vector(v0, dl, index, n);
    }
    if (index > static_cast<std::uint32_t>(n)) throw ArgumentError("gamma_vector: count exceeds n");
    ComplexVector sum = ComplexVector::Zero(static_cast<Index>(std::pow(v0.size(), n) + 0.5));
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask)
        if (std::popcount(mask) == static_cast<int>(index)) sum += product_vector(v0, dl, mask, n);
    return sum / std::sqrt(static_cast<double>(binomial(static_cast<std::uint64_t>(n), index)));
}

}  // namespace

LabelledOperator gamma_vector(const GammaFamily& family, std::uint32_t index, int n) {
    check_gamma_budget(family, n);
    const ComplexVector g = gamma_state(family, index, n);
    return LabelledOperator(g * g.adjoint(), gamma_layout(family, n));
}

std::vector<Label> gamma_comb_ordering(int n) {
    std::vector<Label> order;
    for (int j = 0; j < n; ++j) {
        order.push_back(in(j));
        order.push_back(out(j));
    }
    return order;
}

LabelledOperator gamma_certificate(const GammaFamily& family, std::uint32_t index, int n, double scale) {
    const LabelledOperator x = gamma_vector(family, index, n).scaled(scale);
    const int last = n - 1;
    const Index d = family.v0.cols();
    const Index big_d = family.v0.rows();
    const Label b_last[] = {out(last)};
    const LabelledOperator traced = x.traced(b_last);

    LabelledOperator id_in(identity(d), FactorLayout({{in(last), d}}));
    std::optional<LabelledOperator> z;
    if (n == 1) {
        z = id_in;
    } else {
        auto add = [&](std::uint32_t idx, double w) {
            if (w == 0.0) return;
            const auto term = tensor(gamma_certificate(family, idx, n - 1), id_in).scaled(w);
            z = z ? *z + term : term;
        };
        if (family.kind == GammaKind::TypeI) {
            add(index & ((1U << last) - 1U), 1.0);
        } else {
            const auto nn = static_cast<std::uint64_t>(n);
            const double total = static_cast<double>(binomial(nn, index));
            if (index <= static_cast<std::uint32_t>(last)) add(index, static_cast<double>(binomial(nn - 1, index)) / total);
            if (index >= 1) add(index - 1, static_cast<double>(binomial(nn - 1, index - 1)) / total);
        }
    }
    const LabelledOperator slack = *z - traced;
    const LabelledOperator p0(basis_projector(big_d, 0), FactorLayout({{out(last), big_d}}));
    const auto target = x.layout().labels();
    return x + tensor(p0, slack).reordered(target);
}

GammaCertification certify_gamma_comb(const GammaFamily& family, std::uint32_t index, int n, double scale) {
    GammaCertification c;
    const LabelledOperator x = gamma_vector(family, index, n).scaled(scale);
    const LabelledOperator cert = gamma_certificate(family, index, n, scale);
    const auto order = gamma_comb_ordering(n);
    c.certificate_check = check_deterministic_comb(cert, order);
    c.min_gap_eigenvalue = min_eigenvalue(hermitian_part((cert - x).op()));
    c.ok = c.certificate_check.ok && c.min_gap_eigenvalue >= -kCombTol;
    return c;
}

// ---- moments ----

bool has_variant(Regime regime, MomentVariant variant) {
    if (variant == MomentVariant::Choi) return true;
    return regime == Regime::TypeII_nearBoundary || regime == Regime::TypeII_mid;
}

namespace {

void require_variant(const HardFamily& f, MomentVariant v) {
    if (!has_variant(f.regime, v))
        throw ArgumentError("no diamond-variant moment statement for regime " + to_string(f.regime));
}

// W0 and its normalization for the diamond variants.
std::pair<ComplexMatrix, double> diamond_reference(const HardFamily& f) {
    const auto& d = f.dims;
    const double s = std::sqrt(1.0 - f.eps * f.eps);
    ComplexMatrix w = ComplexMatrix::Zero(d.r * d.d2, d.d1);
    Index m = 0;
    if (f.regime == Regime::TypeII_nearBoundary) {
        m = d.r - near_boundary_eta(d);
        for (Index i = 0; i < m; ++i) w(row_of(i, 0, d.d2), i) = s;
    } else {
        m = d.r * mid_zeta(d);
        for (Index i = 0; i < m; ++i) w(row_of(i % d.r, i / d.r, d.d2), i) = s;
    }
    return {w, static_cast<double>(m)};
}

}  // namespace

ComplexMatrix moment_matrix(const HardFamily& f, MomentVariant variant, const ComplexMatrix& ux,
                            const ComplexMatrix& uy) {
    require_variant(f, variant);
    const Index r = f.dims.r;
    const ComplexMatrix rx = f.rotated_delta(ux);
    const ComplexMatrix ry = f.rotated_delta(uy);
    if (f.regime == Regime::TypeI) {
        const ComplexMatrix ax = anc_traced_outer(rx, f.center, r);
        const ComplexMatrix ay = anc_traced_outer(ry, f.center, r);
        return ax + ax.adjoint() - ay - ay.adjoint();
    }
    if (variant == MomentVariant::Diamond) {
        const auto [w, m] = diamond_reference(f);
        return anc_traced_outer(w, rx - ry, r) / m;
    }
    ComplexMatrix ref = f.center;
    if (f.regime == Regime::TypeII_largeRank) ref /= std::sqrt(1.0 - f.eps * f.eps);
    return anc_traced_outer(ref, rx - ry, r) / static_cast<double>(f.dims.d1);
}

double lipschitz_function(const HardFamily& f, MomentVariant variant, const ComplexMatrix& ux,
                          const ComplexMatrix& uy) {
    if (f.regime == Regime::TypeI) {
        const Index r = f.dims.r;
        const ComplexMatrix vx = f.isometry(ux);
        const ComplexMatrix vy = f.isometry(uy);
        return trace_norm(anc_traced_outer(vx, vx, r) - anc_traced_outer(vy, vy, r)) / static_cast<double>(f.dims.d1);
    }
    return trace_norm(moment_matrix(f, variant, ux, uy));
}

double lipschitz_constant(const HardFamily& f, MomentVariant variant) {
    require_variant(f, variant);
    const double d1 = static_cast<double>(f.dims.d1);
    if (f.regime == Regime::TypeI) return f.eps * std::sqrt(32.0 / d1);
    if (variant == MomentVariant::Diamond) return std::sqrt(2.0 / diamond_reference(f).second);
    return std::sqrt(2.0 / d1);
}

MomentBounds moment_bounds(const HardFamily& f, MomentVariant variant) {
    require_variant(f, variant);
    const auto& d = f.dims;
    const double d1 = static_cast<double>(d.d1);
    const double r = static_cast<double>(d.r);
    const double kappa_raw = (r * static_cast<double>(d.d2) - d1) / d1;
    switch (f.regime) {
        case Regime::TypeI:
            return {d1 * d1 / (20.0 * r), 12288.0 * std::pow(d1, 4) / std::pow(r, 3)};
        case Regime::TypeII_nearBoundary:
            if (variant == MomentVariant::Diamond) {
                const double m = diamond_reference(f).second;
                return {1.0 / m, 64.0 / std::pow(m, 3)};
            }
            return {kappa_raw / (2.0 * r), 256.0 / std::pow(r, 3)};
        case Regime::TypeII_mid:
            if (variant == MomentVariant::Diamond) return {1.0 / r, 64.0 / std::pow(r, 3)};
            return {std::min(kappa_raw, 1.0) / (4.0 * r), 256.0 / std::pow(r, 3)};
        case Regime::TypeII_largeRank:
            return {1.0 / r, 384.0 / std::pow(r, 3)};
    }
    return {};
}

MomentReport moment_experiment(Regime regime, const HardDims& dims, double eps, std::size_t samples, Rng& rng,
                               MomentVariant variant) {
    if (samples < 2) throw ArgumentError("moment_experiment needs at least two samples");
    const HardFamily f = make_family(regime, dims, eps);
    MomentReport rep;
    rep.regime = regime;
    rep.variant = variant;
    rep.samples = samples;
    rep.bounds = moment_bounds(f, variant);
    double s2 = 0.0, q2 = 0.0, s4 = 0.0, q4 = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const ComplexMatrix ux = haar_unitary(f.u_dim, rng);
        const ComplexMatrix uy = haar_unitary(f.u_dim, rng);
        const ComplexMatrix m = moment_matrix(f, variant, ux, uy);
        const ComplexMatrix mm = m.adjoint() * m;
        const double t2 = mm.trace().real();
        const double t4 = mm.squaredNorm();
        s2 += t2;
        q2 += t2 * t2;
        s4 += t4;
        q4 += t4 * t4;
        rep.fourth_max = std::max(rep.fourth_max, t4);
    }
    const double n = static_cast<double>(samples);
    rep.second_mean = s2 / n;
    rep.fourth_mean = s4 / n;
    rep.second_se = std::sqrt(std::max(0.0, q2 / n - rep.second_mean * rep.second_mean) / (n - 1.0));
    rep.fourth_se = std::sqrt(std::max(0.0, q4 / n - rep.fourth_mean * rep.fourth_mean) / (n - 1.0));
    rep.second_ok = rep.second_mean >= rep.bounds.second_lower - 5.0 * rep.second_se;
    rep.fourth_ok = rep.fourth_mean <= rep.bounds.fourth_upper + 5.0 * rep.fourth_se;
    return rep;
}

// ---- packing nets ----

std::string to_string(NetMetric m) { return m == NetMetric::Choi ? "choi" : "diamond_lower"; }

NetMetric net_metric_from_string(const std::string& s) {
    if (s == "choi") return NetMetric::Choi;
    if (s == "diamond_lower" || s == "diamond") return NetMetric::DiamondLower;
    throw ArgumentError("unknown metric '" + s + "' (choi | diamond_lower)");
}

double net_metric(const Channel& a, const Channel& b, NetMetric metric, Rng& rng) {
    if (metric == NetMetric::Choi) return choi_trace_distance(a, b);
    return diamond_distance(a, b, rng).lower;
}

PackingNet packing_net_from_instances(std::vector<HardInstance> instances, NetMetric metric, std::uint64_t seed) {
    if (instances.size() < 2) throw ArgumentError("a packing net needs at least two instances");
    if (static_cast<int>(instances.size()) > kMaxNetSize)
        throw BudgetError("packing nets are limited to " + std::to_string(kMaxNetSize) + " instances");
    PackingNet net;
    net.regime = instances.front().regime;
    net.dims = instances.front().dims;
    net.eps = instances.front().eps;
    net.seed = seed;
    net.metric = metric;
    for (const auto& inst : instances) net.channels.push_back(inst.channel());
    const std::size_t k = instances.size();
    net.pairwise.assign(k, std::vector<double>(k, 0.0));
    net.min_pairwise = std::numeric_limits<double>::infinity();
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double v = net_metric(net.channels[i], net.channels[j], metric, rng);
            net.pairwise[i][j] = net.pairwise[j][i] = v;
            net.min_pairwise = std::min(net.min_pairwise, v);
        }
    net.instances = std::move(instances);
    return net;
}

PackingNet sample_packing_net(Regime regime, const HardDims& dims, double eps, int count, NetMetric metric,
                              std::uint64_t seed) {
    if (count < 2) throw ArgumentError("a packing net needs count >= 2");
    if (count > kMaxNetSize) throw BudgetError("packing nets are limited to " + std::to_string(kMaxNetSize) + " instances");
    const HardFamily f = make_family(regime, dims, eps);
    Rng rng(seed);
    std::vector<HardInstance> insts;
    for (int i = 0; i < count; ++i) insts.push_back(make_instance(f, haar_unitary(f.u_dim, rng)));
    return packing_net_from_instances(std::move(insts), metric, seed);
}

std::string packing_net_to_json(const PackingNet& net) {
    nlohmann::json j;
    j["regime"] = to_string(net.regime);
    j["d1"] = net.dims.d1;
    j["d2"] = net.dims.d2;
    j["r"] = net.dims.r;
    j["eps"] = net.eps;
    j["seed"] = net.seed;
    j["metric"] = to_string(net.metric);
    j["min_pairwise"] = net.min_pairwise;
    j["separation_ratio"] = net.separation_ratio();
    j["channels"] = nlohmann::json::array();
    for (const auto& ch : net.channels) j["channels"].push_back(nlohmann::json::parse(channel_to_json(ch)));
    return j.dump();
}

// ---- Lipschitz probe ----

namespace {

// U exp(i t H) with H a random Hermitian matrix of unit Frobenius norm.
ComplexMatrix nudge(const ComplexMatrix& u, double t, Rng& rng) {
    const Index n = u.rows();
    ComplexMatrix g = complex_gaussian(n, n, rng);
    ComplexMatrix h = (g + g.adjoint()) / 2.0;
    h /= h.norm();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    ComplexVector ph(n);
    for (Index i = 0; i < n; ++i) ph(i) = std::polar(1.0, t * es.eigenvalues()(i));
    return u * es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

LipschitzReport lipschitz_probe(Regime regime, const HardDims& dims, double eps, std::size_t trials, Rng& rng,
                                MomentVariant variant, double step) {
    const HardFamily f = make_family(regime, dims, eps);
    LipschitzReport rep;
    rep.trials = trials;
    rep.constant = lipschitz_constant(f, variant);
    for (std::size_t k = 0; k < trials; ++k) {
        const ComplexMatrix ux = haar_unitary(f.u_dim, rng);
        const ComplexMatrix uy = haar_unitary(f.u_dim, rng);
        // Alternate local steps with global ones; the constant is global.
        const double t = (k % 2 == 0 ? step : 1.0) * (0.1 + 0.9 * uniform01(rng));
        const ComplexMatrix vx = nudge(ux, t, rng);
        const ComplexMatrix vy = k % 3 == 0 ? uy : nudge(uy, t, rng);
        const double dist = std::sqrt((ux - vx).squaredNorm() + (uy - vy).squaredNorm());
        if (dist == 0.0) continue;
        const double df = std::abs(lipschitz_function(f, variant, ux, uy) - lipschitz_function(f, variant, vx, vy));
        const double ratio = df / dist;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > rep.constant * (1.0 + 1e-3)) ++rep.violations;
    }
    return rep;
}

}  // namespace ctl
