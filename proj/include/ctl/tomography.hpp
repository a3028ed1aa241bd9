#pragma once

// Isometry and channel tomography from an idealized pure-state tomography oracle.

#include <cstdint>
#include <optional>

#include "ctl/metrics.hpp"

namespace ctl {

struct PureStateOracleConfig {
    double eps_max{0.0};  // infidelity cap, in [0, 1]
    double c_q{1.0};      // copies charged per column = ceil(c_q * d / eps_max)
};

// Copies charged for one d-dimensional pure-state estimate.  eps_max = 0 is the noiseless
// limit and is charged a single copy.
std::uint64_t oracle_copies(Index d, const PureStateOracleConfig& cfg);

// phi sqrt(1 - e) v + sqrt(e) w with phi a uniform phase, w Haar in v^perp, e = eps_max * U[0,1].
ComplexVector pure_state_oracle(const ComplexVector& v, const PureStateOracleConfig& cfg, Rng& rng);

// Column-wise oracle estimates snapped to the nearest isometry through the SVD.
ComplexMatrix weak_isometry_tomography(const ComplexMatrix& v, const PureStateOracleConfig& cfg, Rng& rng);

ComplexMatrix dft_matrix(Index d);

// Removes the per-column phases of vhat2 (an estimate of V F) using vhat1 (an estimate of V).
ComplexMatrix align_phases(const ComplexMatrix& vhat1, const ComplexMatrix& vhat2, Index d1);

// Weak-tomography accuracy used for a target diamond error eps.
inline double eps_max_for(double eps) { return eps * eps / 64.0; }
// Charged queries 2 d1 ceil(c_q d2 / eps_max).
std::uint64_t isometry_tomography_queries(Index d1, Index d2, const PureStateOracleConfig& cfg);

struct TomographyReport {
    std::optional<ComplexMatrix> estimate_isometry;
    std::optional<Channel> estimate;
    std::uint64_t queries_charged{0};
    double target_eps{0.0};
    double op_error{0.0};         // min over global phase of ||V - e^{i t} Vhat||_op
    double choi_error{0.0};       // (1/d1) ||C - Chat||_1 of the reported estimate
    double dilation_choi_error{0.0};  // channel tomography: same for the dilation estimate
    DiamondEstimate diamond_interval;
    bool success{false};
    std::uint64_t seed{0};
};

// Target error eps in (0, 2].  cfg.eps_max defaults to eps_max_for(eps) when not given.
TomographyReport isometry_tomography(const ComplexMatrix& v, double eps, Rng& rng,
                                     std::optional<PureStateOracleConfig> cfg = std::nullopt);

// Ground-truth-dilation model: the query box exposes dilate(ch, r).  Success means the Choi
// trace distance of the contracted estimate is at most eps.
TomographyReport channel_tomography(const Channel& ch, Index r, double eps, Rng& rng,
                                    std::optional<PureStateOracleConfig> cfg = std::nullopt);

// 2 sqrt(1 - F) for pure normalized Choi states with fidelity F.
double fidelity_trace_conversion(double f);
// |<<V|W>>|^2 / d1^2
double isometry_choi_fidelity(const ComplexMatrix& v, const ComplexMatrix& w);

// splitmix64 of root + index, used for per-trial seeds.
std::uint64_t trial_seed(std::uint64_t root, std::uint64_t index);

struct TrialSummary {
    std::size_t trials{0};
    std::size_t successes{0};
    double mean_op_error{0.0};
    double max_op_error{0.0};
    std::uint64_t queries_per_trial{0};
    double rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

// Haar-random isometries d1 -> d2, one seeded trial each.
TrialSummary isometry_tomography_trials(Index d1, Index d2, double eps, std::size_t trials, std::uint64_t root_seed,
                                        std::optional<PureStateOracleConfig> cfg = std::nullopt);
// Random channels of Kraus rank r.
TrialSummary channel_tomography_trials(Index d1, Index d2, Index r, double eps, std::size_t trials,
                                       std::uint64_t root_seed, std::optional<PureStateOracleConfig> cfg = std::nullopt);

}  // namespace ctl
