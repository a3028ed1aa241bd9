#include "ctl/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctl {

namespace {

double lower_median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return xs[(xs.size() - 1) / 2];
}

// ceil(x) that ignores representation error just above an integer.
std::uint64_t robust_ceil(double x) { return static_cast<std::uint64_t>(std::ceil(x - 1e-9 * std::max(1.0, x))); }

void check_eps_max(const PureStateOracleConfig& cfg) {
    if (!(cfg.eps_max >= 0.0 && cfg.eps_max <= 1.0)) throw ArgumentError("eps_max must lie in [0, 1]");
    if (!(cfg.c_q > 0.0)) throw ArgumentError("c_q must be positive");
}

}  // namespace

std::uint64_t oracle_copies(Index d, const PureStateOracleConfig& cfg) {
    check_eps_max(cfg);
    if (cfg.eps_max == 0.0) return 1;
    return std::max<std::uint64_t>(1, robust_ceil(cfg.c_q * static_cast<double>(d) / cfg.eps_max));
}

ComplexVector pure_state_oracle(const ComplexVector& v, const PureStateOracleConfig& cfg, Rng& rng) {
    check_eps_max(cfg);
    if (std::abs(v.norm() - 1.0) > 1e-9) throw ArgumentError("pure_state_oracle: input must be a unit vector");
    const Index d = v.size();
    const Complex phase = std::polar(1.0, 2.0 * std::numbers::pi * uniform01(rng));
    const double e = cfg.eps_max * uniform01(rng);
    if (d == 1 || e == 0.0) return phase * v;
    ComplexVector w = complex_gaussian(d, 1, rng).col(0);
    w -= v * v.dot(w);
    w.normalize();
    ComplexVector outv = phase * std::sqrt(1.0 - e) * v + std::sqrt(e) * w;
    return outv / outv.norm();
}

ComplexMatrix weak_isometry_tomography(const ComplexMatrix& v, const PureStateOracleConfig& cfg, Rng& rng) {
    const Index d1 = v.cols();
    const Index d2 = v.rows();
    if (d1 > d2) throw DimensionError("weak_isometry_tomography requires d1 <= d2");
    ComplexMatrix vt(d2, d1);
    for (Index j = 0; j < d1; ++j) vt.col(j) = pure_state_oracle(v.col(j), cfg, rng);
    const Svd s = svd(vt);
    return s.u.leftCols(d1) * s.v.adjoint();
}

ComplexMatrix dft_matrix(Index d) {
    ComplexMatrix f(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (Index k = 0; k < d; ++k)
        for (Index j = 0; j < d; ++j)
            f(k, j) = norm * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(d));
    return f;
}

ComplexMatrix align_phases(const ComplexMatrix& vhat1, const ComplexMatrix& vhat2, Index d1) {
    if (vhat1.rows() != vhat2.rows() || vhat1.cols() != d1 || vhat2.cols() != d1)
        throw DimensionError("align_phases: estimates must both be d2 x d1");
    const ComplexMatrix f = dft_matrix(d1);
    const ComplexMatrix phi3 = (vhat1.adjoint() * vhat2).cwiseQuotient(f);
    // Rows whose reference entry is too small to divide by are dropped; if all are, the
    // largest one is kept.
    std::vector<Index> rows;
    for (Index k = 0; k < d1; ++k)
        if (std::abs(phi3(k, 0)) >= 0.1) rows.push_back(k);
    if (rows.empty()) {
        Index best = 0;
        phi3.col(0).cwiseAbs().maxCoeff(&best);
        rows.push_back(best);
    }
    ComplexVector phases(d1);
    for (Index j = 0; j < d1; ++j) {
        std::vector<double> re;
        std::vector<double> im;
        for (Index k : rows) {
            const Complex q = phi3(k, j) / phi3(k, 0);
            re.push_back(q.real());
            im.push_back(q.imag());
        }
        const Complex z(lower_median(re), lower_median(im));
        phases(j) = std::abs(z) < 1e-12 ? Complex(1.0) : z / std::abs(z);
    }
    return vhat2 * phases.conjugate().asDiagonal() * f.adjoint();
}

std::uint64_t isometry_tomography_queries(Index d1, Index d2, const PureStateOracleConfig& cfg) {
    return 2 * static_cast<std::uint64_t>(d1) * oracle_copies(d2, cfg);
}

TomographyReport isometry_tomography(const ComplexMatrix& v, double eps, Rng& rng,
                                     std::optional<PureStateOracleConfig> cfg) {
    if (!(eps > 0.0 && eps <= 2.0)) throw ArgumentError("isometry_tomography: eps must lie in (0, 2]");
    const Isometry iso(v);
    const Index d1 = v.cols();
    const Index d2 = v.rows();
    const PureStateOracleConfig c = cfg.value_or(PureStateOracleConfig{eps_max_for(eps), 1.0});
    const ComplexMatrix vhat1 = weak_isometry_tomography(v, c, rng);
    const ComplexMatrix vhat2 = weak_isometry_tomography(v * dft_matrix(d1), c, rng);
    const ComplexMatrix est = align_phases(vhat1, vhat2, d1);

    TomographyReport rep;
    rep.target_eps = eps;
    rep.queries_charged = isometry_tomography_queries(d1, d2, c);
    rep.op_error = phase_aligned_operator_distance(v, est);
    const Channel truth = contract(v, 1);
    const Channel guess = contract(est, 1);
    rep.choi_error = choi_trace_distance(truth, guess);
    rep.dilation_choi_error = rep.choi_error;
    rep.diamond_interval.lower = rep.choi_error;
    rep.diamond_interval.upper =
        std::min(2.0 * rep.op_error, trace_norm(truth.choi() - guess.choi()));
    rep.success = 2.0 * rep.op_error <= eps;
    rep.estimate_isometry = est;
    rep.estimate = guess;
    return rep;
}

TomographyReport channel_tomography(const Channel& ch, Index r, double eps, Rng& rng,
                                    std::optional<PureStateOracleConfig> cfg) {
    const Dilation dil = dilate(ch, r);
    TomographyReport rep = isometry_tomography(dil.isometry().matrix(), eps, rng, cfg);
    const Channel est = contract(*rep.estimate_isometry, r);
    rep.dilation_choi_error = rep.choi_error;
    rep.choi_error = choi_trace_distance(ch, est);
    rep.diamond_interval.lower = rep.choi_error;
    rep.diamond_interval.upper = std::min(rep.diamond_interval.upper, trace_norm(ch.choi() - est.choi()));
    rep.success = rep.choi_error <= eps;
    rep.estimate = est;
    return rep;
}

double fidelity_trace_conversion(double f) {
    if (!(f >= 0.0 && f <= 1.0)) throw ArgumentError("fidelity must lie in [0, 1]");
    return 2.0 * std::sqrt(1.0 - f);
}

double isometry_choi_fidelity(const ComplexMatrix& v, const ComplexMatrix& w) {
    if (v.rows() != w.rows() || v.cols() != w.cols()) throw DimensionError("isometry_choi_fidelity: shape mismatch");
    const double d1 = static_cast<double>(v.cols());
    return std::norm((v.adjoint() * w).trace()) / (d1 * d1);
}

std::uint64_t trial_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

template <class Run>
TrialSummary run_trials(std::size_t trials, std::uint64_t root_seed, Run run) {
    TrialSummary s;
    s.trials = trials;
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(trial_seed(root_seed, t));
        const TomographyReport rep = run(rng);
        if (rep.success) ++s.successes;
        sum += rep.op_error;
        s.max_op_error = std::max(s.max_op_error, rep.op_error);
        s.queries_per_trial = rep.queries_charged;
    }
    s.mean_op_error = trials ? sum / static_cast<double>(trials) : 0.0;
    return s;
}

}  // namespace

TrialSummary isometry_tomography_trials(Index d1, Index d2, double eps, std::size_t trials, std::uint64_t root_seed,
                                        std::optional<PureStateOracleConfig> cfg) {
    return run_trials(trials, root_seed, [&](Rng& rng) {
        const ComplexMatrix v = random_isometry(d1, d2, rng);
        return isometry_tomography(v, eps, rng, cfg);
    });
}

TrialSummary channel_tomography_trials(Index d1, Index d2, Index r, double eps, std::size_t trials,
                                       std::uint64_t root_seed, std::optional<PureStateOracleConfig> cfg) {
    return run_trials(trials, root_seed, [&](Rng& rng) {
        const Channel ch = random_channel(d1, d2, r, rng);
        return channel_tomography(ch, r, eps, rng, cfg);
    });
}

}  // namespace ctl
