#pragma once

// Labelled operators, the link product, quantum combs and testers.

#include <optional>
#include <string>
#include <vector>

#include "ctl/channels.hpp"

namespace ctl {

class LabelledOperator {
public:
    LabelledOperator(ComplexMatrix op, FactorLayout layout);

    const ComplexMatrix& op() const { return op_; }
    const FactorLayout& layout() const { return layout_; }

    LabelledOperator reordered(std::span<const Label> order) const;
    LabelledOperator traced(std::span<const Label> labels) const;
    LabelledOperator scaled(double s) const { return {op_ * s, layout_}; }
    // Adds one-dimensional factors (no change to the matrix).
    LabelledOperator with_trivial(std::span<const Label> labels) const;
    LabelledOperator relabelled(const std::vector<std::pair<Label, Label>>& renames) const;

private:
    ComplexMatrix op_;
    FactorLayout layout_;
};

// a (x) b on disjoint labels, a's factors first.
LabelledOperator tensor(const LabelledOperator& a, const LabelledOperator& b);
LabelledOperator operator+(const LabelledOperator& a, const LabelledOperator& b);
LabelledOperator operator-(const LabelledOperator& a, const LabelledOperator& b);

// X * Y = tr_shared[(X^{T_shared} (x) I)(I (x) Y)].  Result factors: x-only labels in
// x's order followed by y-only labels in y's order.
LabelledOperator link_product(const LabelledOperator& x, const LabelledOperator& y);

struct CombCheck {
    bool ok{false};
    bool positive{false};
    // -1: none; j >= 1: normalization at tooth j; 0: final trace condition X^(0) = 1.
    int failed_level{-1};
    double residual{0.0};

    explicit operator bool() const { return ok; }
};

inline constexpr double kCombTol = 1e-8;

// `ordering` lists H_0, H_1, ..., H_{2n-1}: inputs at even and outputs at odd positions.
CombCheck check_deterministic_comb(const LabelledOperator& x, std::span<const Label> ordering,
                                   double tol = kCombTol);
bool is_deterministic_comb(const LabelledOperator& x, std::span<const Label> ordering, double tol = kCombTol);
bool is_probabilistic_comb_certified(const LabelledOperator& x, const LabelledOperator& certificate,
                                     std::span<const Label> ordering, double tol = kCombTol);

// Same checks where each H_k may consist of several factors.  Labels of the ordering that
// are absent from x are treated as one-dimensional.
using LabelGroup = std::vector<Label>;
CombCheck check_deterministic_comb(const LabelledOperator& x, const std::vector<LabelGroup>& ordering,
                                   double tol = kCombTol);
bool is_probabilistic_comb_certified(const LabelledOperator& x, const LabelledOperator& certificate,
                                     const std::vector<LabelGroup>& ordering, double tol = kCombTol);

enum class TesterKind { Parallel, Sequential };

// One query: the tester feeds `input` and receives `output` (and `ancilla` for
// testers acting on dilations).
struct QuerySlot {
    Label input;
    Label output;
    std::optional<Label> ancilla;
};

struct TesterOutcome {
    std::string name;
    LabelledOperator op;
};

class Tester {
public:
    // Validates positivity and the parallel/sequential normalization.
    Tester(TesterKind kind, std::vector<QuerySlot> slots, std::vector<TesterOutcome> outcomes,
           double tol = kDefaultTol);

    TesterKind kind() const { return kind_; }
    int n() const { return static_cast<int>(slots_.size()); }
    const std::vector<QuerySlot>& slots() const { return slots_; }
    const std::vector<TesterOutcome>& outcomes() const { return outcomes_; }
    LabelledOperator normalization() const;
    // [Start, A_1, B_1, ..., A_n, B_n, End] with B_j = {anc_j, out_j}.
    std::vector<LabelGroup> comb_ordering() const;

private:
    TesterKind kind_;
    std::vector<QuerySlot> slots_;
    std::vector<TesterOutcome> outcomes_;
};

// For a parallel tester: rho_A with sum_i T_i = rho_A (x) I on the inputs in slot order.
ComplexMatrix parallel_input_state(const Tester& t);

// Standard slots [out_j, in_j] or [anc_j, out_j, in_j].
std::vector<QuerySlot> standard_slots(int n, bool with_ancilla);

// C^{(x) n} laid out per slot as [out_j, in_j] for j = 0..n-1.
LabelledOperator choi_power(const Channel& ch, const std::vector<QuerySlot>& slots);
// |V>><<V|^{(x) n} laid out per slot as [anc_j, out_j, in_j].
LabelledOperator isometry_choi_power(const ComplexMatrix& v, Index anc_dim, const std::vector<QuerySlot>& slots);

// p_i = T_i * Q for a query operator Q covering exactly the tester's labels.
std::vector<double> apply_tester(const Tester& t, const LabelledOperator& queries);
std::vector<double> apply_tester(const Tester& t, const Channel& ch);
std::vector<std::size_t> sample_tester(const Tester& t, const Channel& ch, std::size_t shots, Rng& rng);
std::vector<std::size_t> sample_histogram(const std::vector<double>& probs, std::size_t shots, Rng& rng);

struct RandomTesterSpec {
    int n{1};
    Index d_in{2};
    Index d_out{2};
    Index anc_dim{0};  // 0: tester on channels; r > 0: tester on dilations with r-dim ancilla
    int outcomes{2};
};
Tester random_parallel_tester(const RandomTesterSpec& spec, Rng& rng);

// Single-query tester from an input state on (in, ref) and a POVM on (out, ref):
// T_i = E_i^T * rho.
Tester tester_from_state_and_povm(const ComplexMatrix& rho, const std::vector<ComplexMatrix>& povm, Index d_in,
                                  Index d_out, Index d_ref);

ComplexMatrix random_density(Index d, Rng& rng);
std::vector<ComplexMatrix> random_povm(Index d, int outcomes, Rng& rng);

}  // namespace ctl
