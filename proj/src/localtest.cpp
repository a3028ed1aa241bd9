#include "ctl/localtest.hpp"

#include <algorithm>
#include <cmath>

#include "ctl/moments.hpp"

namespace ctl {

namespace {

void require_dilation_tester(const Tester& t) {
    if (t.kind() != TesterKind::Parallel) throw ArgumentError("local testers require a parallel tester");
    for (const auto& s : t.slots())
        if (!s.ancilla) throw LabelError("tester slots must carry an ancilla label");
    if (t.n() < 1 || t.n() > 2) throw UnsupportedOrderError("exact local testers exist for n in {1, 2} only");
}

std::vector<Label> channel_order(const std::vector<QuerySlot>& slots) {
    std::vector<Label> order;
    for (const auto& s : slots) {
        order.push_back(s.output);
        order.push_back(s.input);
    }
    return order;
}

std::vector<QuerySlot> strip_ancilla(std::vector<QuerySlot> slots) {
    for (auto& s : slots) s.ancilla.reset();
    return slots;
}

// tr over the leading `outer`-dimensional factor.
ComplexMatrix trace_leading(const ComplexMatrix& m, Index outer, Index inner) {
    ComplexMatrix r = ComplexMatrix::Zero(inner, inner);
    for (Index a = 0; a < outer; ++a) r += m.block(a * inner, a * inner, inner, inner);
    return r;
}

}  // namespace

Tester average_tester(const Tester& t, Index r) {
    require_dilation_tester(t);
    std::vector<TesterOutcome> outs;
    for (const auto& o : t.outcomes()) {
        if (o.op.layout().dim_of(*t.slots()[0].ancilla) != r)
            throw DimensionError("average_tester: ancilla dimension differs from r");
        LabelledOperator avg = t.n() == 1 ? twirl1(o.op, *t.slots()[0].ancilla)
                                          : twirl2(o.op, *t.slots()[0].ancilla, *t.slots()[1].ancilla);
        outs.push_back({o.name, LabelledOperator(hermitian_part(avg.op()), avg.layout())});
    }
    return Tester(TesterKind::Parallel, t.slots(), std::move(outs));
}

Tester localize_tester(const Tester& t_bar, const LocalTestDims& dims) {
    require_dilation_tester(t_bar);
    const auto& slots = t_bar.slots();
    const auto target = channel_order(slots);
    const Index r = dims.r;
    const Index m = dims.d1 * dims.d2;
    const double rd = static_cast<double>(r);
    std::vector<TesterOutcome> outs;
    ComplexMatrix perp;

    if (t_bar.n() == 1) {
        const Label a[] = {*slots[0].ancilla};
        for (const auto& o : t_bar.outcomes())
            outs.push_back({o.name, o.op.traced(a).reordered(target).scaled(1.0 / rd)});
        perp = ComplexMatrix::Zero(m, m);
    } else {
        std::vector<Label> order = {*slots[0].ancilla, *slots[1].ancilla};
        order.insert(order.end(), target.begin(), target.end());
        const Index s = std::min(m, r);
        const ComplexMatrix id_r = identity(r * r);
        const ComplexMatrix sw_r = swap_operator(r);
        const ComplexMatrix id_m = identity(m * m);
        const ComplexMatrix sw_m = swap_operator(m);
        struct Sector {
            ComplexMatrix pi_anc;
            ComplexMatrix pi_ab;
            double dim_q;
            bool allowed;
        };
        const Sector sectors[2] = {
            {(id_r + sw_r) / 2.0, (id_m + sw_m) / 2.0, rd * (rd + 1.0) / 2.0, true},
            {(id_r - sw_r) / 2.0, (id_m - sw_m) / 2.0, rd * (rd - 1.0) / 2.0, s >= 2},
        };
        FactorLayout out_layout;
        for (const auto& o : t_bar.outcomes()) {
            const auto tr = o.op.reordered(order);
            ComplexMatrix acc = ComplexMatrix::Zero(m * m, m * m);
            for (const auto& sec : sectors) {
                if (!sec.allowed) continue;
                const ComplexMatrix inner = trace_leading(kron(sec.pi_anc, id_m) * tr.op(), r * r, m * m);
                acc += sec.pi_ab * inner * sec.pi_ab / sec.dim_q;
            }
            const Label anc_labels[] = {order[0], order[1]};
            out_layout = tr.layout().without(anc_labels);
            outs.push_back({o.name, LabelledOperator(hermitian_part(acc), out_layout)});
        }
        perp = ComplexMatrix::Zero(m * m, m * m);
        if (s == 1 && m >= 2) {
            // Pi_anti (rho_A^sym (x) I_B) Pi_anti with rho^sym (x) I = (X + S X S) / 2.
            const ComplexMatrix rho = parallel_input_state(t_bar);
            std::vector<Factor> fs = {{slots[0].input, dims.d1}, {slots[1].input, dims.d1},
                                      {slots[0].output, dims.d2}, {slots[1].output, dims.d2}};
            const LabelledOperator x(kron(rho, identity(dims.d2 * dims.d2)), FactorLayout(fs));
            const ComplexMatrix xs = x.reordered(target).op();
            const ComplexMatrix sym = (xs + sw_m * xs * sw_m) / 2.0;
            perp = sectors[1].pi_ab * sym * sectors[1].pi_ab;
        }
    }
    std::vector<Factor> fs;
    for (const auto& s : slots) {
        fs.push_back({s.output, dims.d2});
        fs.push_back({s.input, dims.d1});
    }
    outs.push_back({kPerpOutcome, LabelledOperator(hermitian_part(perp), FactorLayout(fs))});
    return Tester(TesterKind::Parallel, strip_ancilla(slots), std::move(outs), 1e-8);
}

LocalTestBundle make_local_test_bundle(const Tester& original, const LocalTestDims& dims) {
    Tester averaged = average_tester(original, dims.r);
    Tester localized = localize_tester(averaged, dims);
    return LocalTestBundle{original, std::move(averaged), std::move(localized), original.n(), dims};
}

namespace {

// Outcome operators reordered to [anc_j, out_j, in_j] per slot.
std::vector<ComplexMatrix> standard_outcomes(const Tester& t) {
    std::vector<Label> standard;
    for (const auto& s : t.slots()) {
        if (!s.ancilla) throw LabelError("dilation tester slots must carry an ancilla label");
        standard.push_back(*s.ancilla);
        standard.push_back(s.output);
        standard.push_back(s.input);
    }
    std::vector<ComplexMatrix> ops;
    for (const auto& o : t.outcomes()) ops.push_back(o.op.reordered(standard).op());
    return ops;
}

std::vector<double> probabilities_from(const std::vector<ComplexMatrix>& ops, int n, const ComplexMatrix& v) {
    const ComplexVector vv = vectorize(v);
    ComplexVector w = ComplexVector::Ones(1);
    for (int j = 0; j < n; ++j) w = kron(w, vv);
    const ComplexVector wc = w.conjugate();
    std::vector<double> probs;
    // <<W| T^T |W>> = w^T T conj(w)
    for (const auto& t : ops) probs.push_back(w.cwiseProduct(t * wc).sum().real());
    return probs;
}

}  // namespace

std::vector<double> dilation_probabilities(const Tester& t, const ComplexMatrix& v) {
    return probabilities_from(standard_outcomes(t), t.n(), v);
}

DilationIdentityReport verify_dilation_identity(const LocalTestBundle& bundle, const Channel& ch,
                                                std::size_t samples, Rng& rng) {
    const auto& dims = bundle.dims;
    if (ch.d_in() != dims.d1 || ch.d_out() != dims.d2)
        throw DimensionError("verify_dilation_identity: channel dimensions differ from the bundle");
    DilationIdentityReport rep;
    const auto loc = apply_tester(bundle.localized, ch);
    rep.perp_probability = loc.back();
    rep.localized.assign(loc.begin(), loc.end() - 1);

    const Dilation v = dilate(ch, dims.r);
    rep.fixed_dilation = dilation_probabilities(bundle.averaged, v.isometry().matrix());

    const std::size_t k = rep.localized.size();
    std::vector<double> sum(k, 0.0);
    std::vector<double> sq(k, 0.0);
    const ComplexMatrix id2 = identity(dims.d2);
    const auto ops = standard_outcomes(bundle.original);
    for (std::size_t s = 0; s < samples; ++s) {
        const ComplexMatrix w = kron(haar_unitary(dims.r, rng), id2) * v.isometry().matrix();
        const auto p = probabilities_from(ops, bundle.n, w);
        for (std::size_t i = 0; i < k; ++i) {
            sum[i] += p[i];
            sq[i] += p[i] * p[i];
        }
    }
    const double n = static_cast<double>(samples);
    rep.exact_ok = true;
    rep.statistical_ok = true;
    for (std::size_t i = 0; i < k; ++i) {
        const double mean = sum[i] / n;
        const double var = std::max(0.0, sq[i] / n - mean * mean);
        const double se = std::sqrt(var / std::max(1.0, n - 1.0));
        rep.monte_carlo.push_back(mean);
        rep.standard_error.push_back(se);
        const double gap = std::abs(rep.localized[i] - rep.fixed_dilation[i]);
        rep.max_exact_gap = std::max(rep.max_exact_gap, gap);
        if (gap > kIdentityTol) rep.exact_ok = false;
        const double diff = rep.localized[i] - mean;
        // Floor the standard error at rounding level: with r = 1 every sample is identical.
        const double z = diff / std::max(se, 1e-12);
        rep.z_scores.push_back(z);
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
        if (std::abs(z) > kZBand) rep.statistical_ok = false;
    }
    return rep;
}

}  // namespace ctl
