#include "ctl/combs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ctl {

namespace {

std::vector<Label> labels_of(const std::vector<LabelGroup>& groups) {
    std::vector<Label> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    return all;
}

LabelledOperator identity_on(const FactorLayout& layout) { return {identity(layout.total_dim()), layout}; }

FactorLayout sub_layout(const FactorLayout& layout, const LabelGroup& labels) {
    std::vector<Factor> fs;
    for (const auto& l : labels) fs.push_back({l, layout.dim_of(l)});
    return FactorLayout(std::move(fs));
}

bool same_label_set(const FactorLayout& a, const FactorLayout& b) {
    auto la = a.labels();
    auto lb = b.labels();
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    return la == lb;
}

}  // namespace

LabelledOperator::LabelledOperator(ComplexMatrix op, FactorLayout layout)
    : op_(std::move(op)), layout_(std::move(layout)) {
    const Index n = layout_.total_dim();
    if (op_.rows() != n || op_.cols() != n)
        throw DimensionError("operator size " + std::to_string(op_.rows()) + "x" + std::to_string(op_.cols()) +
                             " does not match layout dimension " + std::to_string(n));
}

LabelledOperator LabelledOperator::reordered(std::span<const Label> order) const {
    std::vector<Factor> fs;
    for (const auto& l : order) fs.push_back({l, layout_.dim_of(l)});
    return {reorder(op_, layout_, order), FactorLayout(std::move(fs))};
}

LabelledOperator LabelledOperator::traced(std::span<const Label> labels) const {
    return {partial_trace(op_, layout_, labels), layout_.without(labels)};
}

LabelledOperator LabelledOperator::with_trivial(std::span<const Label> labels) const {
    std::vector<Factor> fs = layout_.factors();
    for (const auto& l : labels)
        if (!layout_.contains(l)) fs.push_back({l, 1});
    return {op_, FactorLayout(std::move(fs))};
}

LabelledOperator LabelledOperator::relabelled(const std::vector<std::pair<Label, Label>>& renames) const {
    std::vector<Factor> fs = layout_.factors();
    for (auto& f : fs)
        for (const auto& [from, to] : renames)
            if (f.label == from) {
                f.label = to;
                break;
            }
    return {op_, FactorLayout(std::move(fs))};
}

LabelledOperator tensor(const LabelledOperator& a, const LabelledOperator& b) {
    return {kron(a.op(), b.op()), a.layout().concat(b.layout())};
}

LabelledOperator operator+(const LabelledOperator& a, const LabelledOperator& b) {
    if (!same_label_set(a.layout(), b.layout())) throw LabelError("operator+: label sets differ");
    const auto order = a.layout().labels();
    const auto br = b.reordered(order);
    if (!(br.layout() == a.layout())) throw DimensionError("operator+: factor dimensions differ");
    return {a.op() + br.op(), a.layout()};
}

LabelledOperator operator-(const LabelledOperator& a, const LabelledOperator& b) { return a + b.scaled(-1.0); }

LabelledOperator link_product(const LabelledOperator& x, const LabelledOperator& y) {
    std::vector<Label> shared;
    std::vector<Label> x_only;
    std::vector<Label> y_only;
    for (const auto& f : x.layout().factors()) {
        if (y.layout().contains(f.label)) {
            if (y.layout().dim_of(f.label) != f.dim)
                throw DimensionError("link_product: label " + to_string(f.label) + " has different dimensions");
            shared.push_back(f.label);
        } else {
            x_only.push_back(f.label);
        }
    }
    for (const auto& f : y.layout().factors())
        if (!x.layout().contains(f.label)) y_only.push_back(f.label);

    std::vector<Label> x_order = x_only;
    x_order.insert(x_order.end(), shared.begin(), shared.end());
    std::vector<Label> y_order = shared;
    y_order.insert(y_order.end(), y_only.begin(), y_only.end());
    const auto xr = x.reordered(x_order);
    const auto yr = y.reordered(y_order);

    Index da = 1;
    Index ds = 1;
    Index db = 1;
    for (const auto& l : x_only) da *= x.layout().dim_of(l);
    for (const auto& l : shared) ds *= x.layout().dim_of(l);
    for (const auto& l : y_only) db *= y.layout().dim_of(l);

    // result[(a,b),(a',b')] = sum_{s,s'} X[(a,s'),(a',s)] Y[(s',b),(s,b')]
    ComplexMatrix xs(da * da, ds * ds);
    for (Index a = 0; a < da; ++a)
        for (Index ap = 0; ap < da; ++ap)
            for (Index sp = 0; sp < ds; ++sp)
                for (Index s = 0; s < ds; ++s) xs(a * da + ap, sp * ds + s) = xr.op()(a * ds + sp, ap * ds + s);
    ComplexMatrix ys(ds * ds, db * db);
    for (Index sp = 0; sp < ds; ++sp)
        for (Index s = 0; s < ds; ++s)
            for (Index b = 0; b < db; ++b)
                for (Index bp = 0; bp < db; ++bp) ys(sp * ds + s, b * db + bp) = yr.op()(sp * db + b, s * db + bp);
    const ComplexMatrix z = xs * ys;
    ComplexMatrix out(da * db, da * db);
    for (Index a = 0; a < da; ++a)
        for (Index ap = 0; ap < da; ++ap)
            for (Index b = 0; b < db; ++b)
                for (Index bp = 0; bp < db; ++bp) out(a * db + b, ap * db + bp) = z(a * da + ap, b * db + bp);

    std::vector<Factor> fs;
    for (const auto& l : x_only) fs.push_back({l, x.layout().dim_of(l)});
    for (const auto& l : y_only) fs.push_back({l, y.layout().dim_of(l)});
    return {std::move(out), FactorLayout(std::move(fs))};
}

CombCheck check_deterministic_comb(const LabelledOperator& x, const std::vector<LabelGroup>& ordering, double tol) {
    if (ordering.size() % 2 != 0) throw LabelError("comb ordering needs an even number of spaces");
    const auto all = labels_of(ordering);
    std::set<Label> seen;
    for (const auto& l : all)
        if (!seen.insert(l).second) throw LabelError("comb ordering repeats label " + to_string(l));
    for (const auto& l : x.layout().labels())
        if (!seen.count(l)) throw LabelError("label " + to_string(l) + " missing from comb ordering");

    CombCheck res;
    LabelledOperator cur = x.with_trivial(all);
    res.positive = is_psd(cur.op(), tol);
    const int teeth = static_cast<int>(ordering.size() / 2);
    for (int j = teeth; j >= 1; --j) {
        const auto& out_space = ordering[static_cast<std::size_t>(2 * j - 1)];
        const auto& in_space = ordering[static_cast<std::size_t>(2 * j - 2)];
        const LabelledOperator y = cur.traced(out_space);
        const FactorLayout in_layout = sub_layout(y.layout(), in_space);
        const LabelledOperator prev = y.traced(in_space).scaled(1.0 / static_cast<double>(in_layout.total_dim()));
        const LabelledOperator expected = tensor(identity_on(in_layout), prev).reordered(y.layout().labels());
        const double r = (y.op() - expected.op()).norm();
        res.residual = std::max(res.residual, r);
        if (r > tol * std::max(1.0, y.op().norm())) {
            res.failed_level = j;
            return res;
        }
        cur = prev;
    }
    const double r0 = std::abs(cur.op()(0, 0) - 1.0);
    res.residual = std::max(res.residual, r0);
    if (r0 > tol) {
        res.failed_level = 0;
        return res;
    }
    res.ok = res.positive;
    return res;
}

CombCheck check_deterministic_comb(const LabelledOperator& x, std::span<const Label> ordering, double tol) {
    std::vector<LabelGroup> groups;
    for (const auto& l : ordering) groups.push_back({l});
    return check_deterministic_comb(x, groups, tol);
}

bool is_deterministic_comb(const LabelledOperator& x, std::span<const Label> ordering, double tol) {
    return check_deterministic_comb(x, ordering, tol).ok;
}

bool is_probabilistic_comb_certified(const LabelledOperator& x, const LabelledOperator& certificate,
                                     const std::vector<LabelGroup>& ordering, double tol) {
    if (!same_label_set(x.layout(), certificate.layout()))
        throw LabelError("certificate and operator are carried on different labels");
    if (!check_deterministic_comb(certificate, ordering, tol).ok) return false;
    const auto cert = certificate.reordered(x.layout().labels());
    return min_eigenvalue(cert.op() - x.op()) >= -tol;
}

bool is_probabilistic_comb_certified(const LabelledOperator& x, const LabelledOperator& certificate,
                                     std::span<const Label> ordering, double tol) {
    std::vector<LabelGroup> groups;
    for (const auto& l : ordering) groups.push_back({l});
    return is_probabilistic_comb_certified(x, certificate, groups, tol);
}

Tester::Tester(TesterKind kind, std::vector<QuerySlot> slots, std::vector<TesterOutcome> outcomes, double tol)
    : kind_(kind), slots_(std::move(slots)), outcomes_(std::move(outcomes)) {
    if (outcomes_.empty()) throw InvalidChannelError("tester needs at least one outcome");
    const auto& layout = outcomes_.front().op.layout();
    std::size_t expected_factors = 0;
    for (const auto& s : slots_) {
        expected_factors += s.ancilla ? 3 : 2;
        if (!layout.contains(s.input) || !layout.contains(s.output) || (s.ancilla && !layout.contains(*s.ancilla)))
            throw LabelError("tester outcome does not carry every slot label");
    }
    if (layout.size() != expected_factors) throw LabelError("tester outcome carries labels outside its slots");
    for (const auto& o : outcomes_) {
        if (!same_label_set(o.op.layout(), layout)) throw LabelError("tester outcomes use different labels");
        if (!is_psd(o.op.op(), tol)) throw InvalidChannelError("tester outcome '" + o.name + "' is not positive");
    }
    const LabelledOperator total = normalization();
    if (kind_ == TesterKind::Parallel) {
        const ComplexMatrix rho = parallel_input_state(*this);
        std::vector<Label> order;
        std::vector<Label> rest;
        for (const auto& s : slots_) order.push_back(s.input);
        for (const auto& f : layout.factors())
            if (std::find(order.begin(), order.end(), f.label) == order.end()) rest.push_back(f.label);
        order.insert(order.end(), rest.begin(), rest.end());
        const auto sr = total.reordered(order);
        const Index db = sr.op().rows() / rho.rows();
        const double r = (sr.op() - kron(rho, identity(db))).norm();
        if (r > tol * std::max(1.0, sr.op().norm()))
            throw InvalidChannelError("parallel tester: sum of outcomes is not rho_A (x) I_B");
        if (!is_psd(rho, tol) || std::abs(rho.trace() - 1.0) > tol)
            throw InvalidChannelError("parallel tester: input state is not a density operator");
    } else {
        const auto check = check_deterministic_comb(total, comb_ordering(), kCombTol);
        if (!check.ok)
            throw InvalidChannelError("sequential tester: sum of outcomes fails the comb check at level " +
                                      std::to_string(check.failed_level));
    }
}

LabelledOperator Tester::normalization() const {
    LabelledOperator total = outcomes_.front().op;
    for (std::size_t i = 1; i < outcomes_.size(); ++i) total = total + outcomes_[i].op;
    return total;
}

std::vector<LabelGroup> Tester::comb_ordering() const {
    std::vector<LabelGroup> groups;
    groups.push_back({Label{Role::Start, 0}});
    for (const auto& s : slots_) {
        groups.push_back({s.input});
        LabelGroup b;
        if (s.ancilla) b.push_back(*s.ancilla);
        b.push_back(s.output);
        groups.push_back(std::move(b));
    }
    groups.push_back({Label{Role::End, 0}});
    return groups;
}

ComplexMatrix parallel_input_state(const Tester& t) {
    const LabelledOperator total = t.normalization();
    std::vector<Label> traced;
    std::vector<Label> inputs;
    for (const auto& s : t.slots()) inputs.push_back(s.input);
    Index db = 1;
    for (const auto& f : total.layout().factors())
        if (std::find(inputs.begin(), inputs.end(), f.label) == inputs.end()) {
            traced.push_back(f.label);
            db *= f.dim;
        }
    return total.traced(traced).reordered(inputs).op() / static_cast<double>(db);
}

std::vector<QuerySlot> standard_slots(int n, bool with_ancilla) {
    std::vector<QuerySlot> slots;
    for (int j = 0; j < n; ++j) {
        QuerySlot s{in(j), out(j), std::nullopt};
        if (with_ancilla) s.ancilla = anc(j);
        slots.push_back(s);
    }
    return slots;
}

LabelledOperator choi_power(const Channel& ch, const std::vector<QuerySlot>& slots) {
    ComplexMatrix m = ComplexMatrix::Ones(1, 1);
    std::vector<Factor> fs;
    for (const auto& s : slots) {
        m = kron(m, ch.choi());
        fs.push_back({s.output, ch.d_out()});
        fs.push_back({s.input, ch.d_in()});
    }
    return {std::move(m), FactorLayout(std::move(fs))};
}

LabelledOperator isometry_choi_power(const ComplexMatrix& v, Index anc_dim, const std::vector<QuerySlot>& slots) {
    const ComplexMatrix c = choi_of_operator(v);
    const Index d2 = v.rows() / anc_dim;
    ComplexMatrix m = ComplexMatrix::Ones(1, 1);
    std::vector<Factor> fs;
    for (const auto& s : slots) {
        if (!s.ancilla) throw LabelError("isometry_choi_power: slot without ancilla label");
        m = kron(m, c);
        fs.push_back({*s.ancilla, anc_dim});
        fs.push_back({s.output, d2});
        fs.push_back({s.input, v.cols()});
    }
    return {std::move(m), FactorLayout(std::move(fs))};
}

std::vector<double> apply_tester(const Tester& t, const LabelledOperator& queries) {
    std::vector<double> probs;
    for (const auto& o : t.outcomes()) {
        if (!same_label_set(o.op.layout(), queries.layout()))
            throw LabelError("apply_tester: query operator does not match tester labels");
        const auto q = queries.layout() == o.op.layout() ? queries : queries.reordered(o.op.layout().labels());
        if (!(q.layout() == o.op.layout())) throw DimensionError("apply_tester: per-query dimensions differ");
        // tr(T^T Q) = sum_{jk} T_jk Q_jk
        probs.push_back((o.op.op().array() * q.op().array()).sum().real());
    }
    return probs;
}

std::vector<double> apply_tester(const Tester& t, const Channel& ch) {
    for (const auto& s : t.slots())
        if (s.ancilla) throw LabelError("apply_tester: tester acts on dilations, not channels");
    return apply_tester(t, choi_power(ch, t.slots()));
}

std::vector<std::size_t> sample_histogram(const std::vector<double>& probs, std::size_t shots, Rng& rng) {
    std::vector<double> p(probs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        p[i] = std::max(0.0, probs[i]);
        total += p[i];
    }
    if (total <= 0.0) throw InvalidChannelError("sample_histogram: no positive probability");
    std::vector<std::size_t> hist(p.size(), 0);
    std::size_t left = shots;
    double mass = 1.0;
    for (std::size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
        const double q = std::clamp(p[i] / total / mass, 0.0, 1.0);
        std::binomial_distribution<std::size_t> bin(left, q);
        hist[i] = bin(rng);
        left -= hist[i];
        mass -= p[i] / total;
        if (mass <= 0.0) break;
    }
    hist.back() += left;
    return hist;
}

std::vector<std::size_t> sample_tester(const Tester& t, const Channel& ch, std::size_t shots, Rng& rng) {
    return sample_histogram(apply_tester(t, ch), shots, rng);
}

ComplexMatrix random_density(Index d, Rng& rng) {
    const ComplexMatrix g = complex_gaussian(d, d, rng);
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return hermitian_part(rho);
}

std::vector<ComplexMatrix> random_povm(Index d, int outcomes, Rng& rng) {
    if (outcomes < 1) throw ArgumentError("random_povm: need at least one outcome");
    std::vector<ComplexMatrix> gs;
    ComplexMatrix s = ComplexMatrix::Zero(d, d);
    for (int i = 0; i < outcomes; ++i) {
        const ComplexMatrix g = complex_gaussian(d, d, rng);
        gs.push_back(g * g.adjoint());
        s += gs.back();
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(s));
    const ComplexMatrix s_inv_half = es.eigenvectors() *
                                     es.eigenvalues().cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() *
                                     es.eigenvectors().adjoint();
    std::vector<ComplexMatrix> povm;
    for (const auto& g : gs) povm.push_back(hermitian_part(s_inv_half * g * s_inv_half));
    return povm;
}

Tester random_parallel_tester(const RandomTesterSpec& spec, Rng& rng) {
    if (spec.n < 1) throw ArgumentError("random_parallel_tester: n must be positive");
    const bool with_anc = spec.anc_dim > 0;
    const auto slots = standard_slots(spec.n, with_anc);
    Index da = 1;
    Index db = 1;
    std::vector<Factor> build;
    for (const auto& s : slots) {
        build.push_back({s.input, spec.d_in});
        da *= spec.d_in;
    }
    for (const auto& s : slots) {
        if (with_anc) {
            build.push_back({*s.ancilla, spec.anc_dim});
            db *= spec.anc_dim;
        }
        build.push_back({s.output, spec.d_out});
        db *= spec.d_out;
    }
    std::vector<Label> target;
    for (const auto& s : slots) {
        if (with_anc) target.push_back(*s.ancilla);
        target.push_back(s.output);
        target.push_back(s.input);
    }
    const FactorLayout build_layout(build);
    const ComplexMatrix sq = kron(psd_sqrt(random_density(da, rng)), identity(db));
    const auto povm = random_povm(da * db, spec.outcomes, rng);
    std::vector<TesterOutcome> outs;
    for (std::size_t i = 0; i < povm.size(); ++i) {
        const LabelledOperator t(hermitian_part(sq * povm[i] * sq), build_layout);
        outs.push_back({"outcome" + std::to_string(i), t.reordered(target)});
    }
    return Tester(TesterKind::Parallel, slots, std::move(outs));
}

Tester tester_from_state_and_povm(const ComplexMatrix& rho, const std::vector<ComplexMatrix>& povm, Index d_in,
                                  Index d_out, Index d_ref) {
    const LabelledOperator state(rho, FactorLayout({{in(0), d_in}, {ref(0), d_ref}}));
    std::vector<TesterOutcome> outs;
    for (std::size_t i = 0; i < povm.size(); ++i) {
        const LabelledOperator e(povm[i].transpose(), FactorLayout({{out(0), d_out}, {ref(0), d_ref}}));
        const Label order[] = {out(0), in(0)};
        outs.push_back({"outcome" + std::to_string(i), link_product(e, state).reordered(order)});
    }
    return Tester(TesterKind::Parallel, standard_slots(1, false), std::move(outs));
}

}  // namespace ctl
