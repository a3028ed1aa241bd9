#pragma once

#include <optional>

#include "ctl/channels.hpp"

namespace ctl {

// Certified interval for the diamond distance of two channels.
struct DiamondEstimate {
    double lower{0.0};  // see-saw value, attained by witness_state
    double upper{0.0};  // ||C_a - C_b||_1
    std::optional<ComplexMatrix> witness_state;  // pure state on in (x) ref
    bool converged{true};
    int iterations{0};
};

struct SeeSawOptions {
    int restarts{16};
    int max_iterations{1000};
    double tolerance{1e-8};
};

// (1/d_in) ||C_a - C_b||_1
double choi_trace_distance(const Channel& a, const Channel& b);
// Squared Uhlmann fidelity of the normalized Choi states.
double channel_fidelity(const Channel& a, const Channel& b);
double state_fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma);

DiamondEstimate diamond_distance(const Channel& a, const Channel& b, Rng& rng,
                                 const SeeSawOptions& opts = {});

// Exact diamond distance between unitary channels, 2 sqrt(1 - nu^2), with nu the
// distance from the origin to the convex hull of the spectrum of U^dagger V.
double unitary_diamond_distance(const ComplexMatrix& u, const ComplexMatrix& v);

// min over global phase theta of ||a - e^{i theta} b||_op
double phase_aligned_operator_distance(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace ctl
