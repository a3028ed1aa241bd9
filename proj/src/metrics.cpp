#include "ctl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctl {

namespace {

void require_same_dims(const Channel& a, const Channel& b) {
    if (a.d_in() != b.d_in() || a.d_out() != b.d_out())
        throw DimensionError("channels have different input/output dimensions");
}

struct SeeSawRun {
    double value{0.0};
    ComplexVector psi;
    bool converged{false};
    int iterations{0};
};

// Output difference ((a - b) (x) id)(|M>><<M|) for psi = |M>>.
ComplexMatrix output_difference(const std::vector<ComplexMatrix>& ka, const std::vector<ComplexMatrix>& kb,
                                const ComplexMatrix& m) {
    const Index n = ka.front().rows() * m.cols();
    ComplexMatrix x = ComplexMatrix::Zero(n, n);
    for (const auto& e : ka) {
        const ComplexVector v = vectorize(e * m);
        x.noalias() += v * v.adjoint();
    }
    for (const auto& f : kb) {
        const ComplexVector v = vectorize(f * m);
        x.noalias() -= v * v.adjoint();
    }
    return x;
}

SeeSawRun see_saw(const std::vector<ComplexMatrix>& ka, const std::vector<ComplexMatrix>& kb,
                  ComplexMatrix m, const SeeSawOptions& opts) {
    const Index d1 = m.rows();
    const ComplexMatrix id_ref = identity(d1);
    std::vector<ComplexMatrix> lifted_a;
    std::vector<ComplexMatrix> lifted_b;
    for (const auto& e : ka) lifted_a.push_back(kron(e, id_ref));
    for (const auto& f : kb) lifted_b.push_back(kron(f, id_ref));

    SeeSawRun run;
    run.psi = vectorize(m);
    run.value = trace_norm(output_difference(ka, kb, m));
    for (int it = 0; it < opts.max_iterations; ++it) {
        const ComplexMatrix x = output_difference(ka, kb, m);
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(x));
        RealVector signs = es.eigenvalues().unaryExpr([](double l) { return l >= 0.0 ? 1.0 : -1.0; });
        const ComplexMatrix w = es.eigenvectors() * signs.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
        ComplexMatrix h = ComplexMatrix::Zero(d1 * d1, d1 * d1);
        for (const auto& e : lifted_a) h.noalias() += e.adjoint() * w * e;
        for (const auto& f : lifted_b) h.noalias() -= f.adjoint() * w * f;
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> top(hermitian_part(h));
        const ComplexVector psi = top.eigenvectors().col(d1 * d1 - 1);
        m = unvectorize(psi, d1, d1);
        const double value = trace_norm(output_difference(ka, kb, m));
        run.iterations = it + 1;
        const double gain = value - run.value;
        if (value > run.value) {
            run.value = value;
            run.psi = psi;
        }
        if (gain < opts.tolerance) {
            run.converged = true;
            break;
        }
    }
    return run;
}

}  // namespace

double choi_trace_distance(const Channel& a, const Channel& b) {
    require_same_dims(a, b);
    return trace_norm(a.choi() - b.choi()) / static_cast<double>(a.d_in());
}

double state_fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
    const ComplexMatrix s = psd_sqrt(rho);
    const ComplexMatrix inner = s * sigma * s;
    const RealVector ev = hermitian_eigenvalues(inner);
    // Round-off eigenvalues near 1e-16 would otherwise add ~1e-8 after the square root.
    const double floor = 1e-13 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    double f = 0.0;
    for (Index i = 0; i < ev.size(); ++i)
        if (ev(i) > floor) f += std::sqrt(ev(i));
    return std::clamp(f * f, 0.0, 1.0);
}

double channel_fidelity(const Channel& a, const Channel& b) {
    require_same_dims(a, b);
    const double d = static_cast<double>(a.d_in());
    return state_fidelity(a.choi() / d, b.choi() / d);
}

DiamondEstimate diamond_distance(const Channel& a, const Channel& b, Rng& rng, const SeeSawOptions& opts) {
    require_same_dims(a, b);
    DiamondEstimate est;
    est.upper = trace_norm(a.choi() - b.choi());
    const Index d1 = a.d_in();
    if (est.upper <= 1e-14) {
        est.lower = 0.0;
        est.witness_state = ComplexMatrix(identity(d1 * d1) / static_cast<double>(d1 * d1));
        return est;
    }
    const auto ka = a.kraus();
    const auto kb = b.kraus();
    const int restarts = std::max(1, opts.restarts);
    SeeSawRun best;
    best.value = -1.0;
    est.converged = true;
    for (int k = 0; k < restarts; ++k) {
        ComplexMatrix m;
        if (k == 0) {
            m = identity(d1) / std::sqrt(static_cast<double>(d1));
        } else {
            m = complex_gaussian(d1, d1, rng);
            m /= m.norm();
        }
        SeeSawRun run = see_saw(ka, kb, std::move(m), opts);
        est.converged = est.converged && run.converged;
        est.iterations += run.iterations;
        if (run.value > best.value) best = std::move(run);
    }
    est.lower = std::min(best.value, est.upper);
    est.witness_state = ComplexMatrix(best.psi * best.psi.adjoint());
    return est;
}

double unitary_diamond_distance(const ComplexMatrix& u, const ComplexMatrix& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols()) throw DimensionError("unitary_diamond_distance: shape mismatch");
    Eigen::ComplexEigenSolver<ComplexMatrix> es(u.adjoint() * v, false);
    std::vector<double> phases;
    for (Index k = 0; k < es.eigenvalues().size(); ++k) {
        double p = std::arg(es.eigenvalues()(k));
        if (p < 0) p += 2.0 * std::numbers::pi;
        phases.push_back(p);
    }
    std::sort(phases.begin(), phases.end());
    double gap = 2.0 * std::numbers::pi - (phases.back() - phases.front());
    for (std::size_t k = 1; k < phases.size(); ++k) gap = std::max(gap, phases[k] - phases[k - 1]);
    const double arc = 2.0 * std::numbers::pi - gap;
    const double nu = arc >= std::numbers::pi ? 0.0 : std::cos(arc / 2.0);
    return 2.0 * std::sqrt(std::max(0.0, 1.0 - nu * nu));
}

double phase_aligned_operator_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    auto f = [&](double t) { return operator_norm(a - std::polar(1.0, t) * b); };
    const double start = std::arg((b.adjoint() * a).trace());
    constexpr int kGrid = 48;
    double best_t = start;
    double best = f(start);
    for (int k = 1; k < kGrid; ++k) {
        const double t = start + 2.0 * std::numbers::pi * k / kGrid;
        const double v = f(t);
        if (v < best) {
            best = v;
            best_t = t;
        }
    }
    // Golden-section refinement around the best grid point.
    double lo = best_t - 2.0 * std::numbers::pi / kGrid;
    double hi = best_t + 2.0 * std::numbers::pi / kGrid;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo);
    double d = lo + g * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 80; ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    return std::min({best, fc, fd});
}

}  // namespace ctl
