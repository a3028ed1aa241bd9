#pragma once

// Hard isometry families and packing-net constructions.
//
// Every isometry maps C^{d1} into anc (x) out with the ancilla first (row a*d2 + b).  The
// row-major map g sends the 0-based index k to (b, a) = (k / r, k % r).

#include <cstdint>
#include <string>
#include <vector>

#include "ctl/combs.hpp"
#include "ctl/metrics.hpp"

namespace ctl {

enum class Regime { TypeI, TypeII_nearBoundary, TypeII_mid, TypeII_largeRank };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct HardDims {
    Index d1{2};
    Index d2{2};
    Index r{1};
};

// The U-independent part of a construction: V_{eps,U} = center + eps * rotate(delta, U).
struct HardFamily {
    Regime regime{Regime::TypeI};
    double eps{0.0};
    HardDims dims;
    ComplexMatrix center;  // (r d2) x d1; for the near-boundary regime this is V0 + V0'
    ComplexMatrix delta;   // (r d2) x d1
    // Isometry from C^{u_dim} onto the subspace of anc (x) out rotated by U.
    ComplexMatrix rotation_embedding;
    Index u_dim{1};

    // Type I: G (U Delta_A U^dagger); Type II: U Delta with U acting on the embedded subspace.
    ComplexMatrix rotated_delta(const ComplexMatrix& u) const;
    ComplexMatrix isometry(const ComplexMatrix& u) const { return center + eps * rotated_delta(u); }
};

struct HardInstance {
    Regime regime{Regime::TypeI};
    double eps{0.0};
    HardDims dims;
    ComplexMatrix v0;       // center
    ComplexMatrix delta;    // unrotated perturbation direction
    ComplexMatrix u;        // Haar-sampled unitary
    ComplexMatrix rotated;  // U Delta U^dagger (Type I) or U Delta (Type II)
    Isometry iso;
    Channel channel() const { return contract(iso.matrix(), dims.r); }
};

// Throws RegimeError naming the violated inequality.
void check_regime(Regime regime, const HardDims& dims, double eps);
HardFamily make_family(Regime regime, const HardDims& dims, double eps);
HardInstance make_instance(const HardFamily& family, const ComplexMatrix& u);

HardInstance build_type1(Index d1, Index d2, Index r, double eps, Rng& rng);
HardInstance build_type2(Regime regime, Index d1, Index d2, Index r, double eps, Rng& rng);
HardInstance build_instance(Regime regime, const HardDims& dims, double eps, Rng& rng);

// Orthogonal operators {K_i}_{i<r}, K_i : C^{d1} -> C^{d2}, with sum K_i^dagger K_i = I,
// tr(K_i^dagger K_j) = 0 for i != j and tr(K_i^dagger K_i) <= 2 d1 / r; zero padded to r.
std::vector<ComplexMatrix> kraus_partition(Index d1, Index d2, Index r);
// X^a Z^b for a, b < d, ordered by (a, b).
std::vector<ComplexMatrix> clock_shift_basis(Index d);

// Kraus blocks of the center restricted to the K_i of the regime's Kraus-bound statement.
std::vector<ComplexMatrix> center_kraus_blocks(const HardFamily& family);
struct KrausBounds {
    double lower{0.0};
    double upper{0.0};
};
// Bounds on |tr(K_i^dagger K_i)| for the near-boundary and mid regimes.
KrausBounds center_kraus_bounds(const HardFamily& family);

// Image of the perturbation against the center support, ||P_center U Delta||_F.
double image_overlap(const HardFamily& family, const ComplexMatrix& u);

// tr_anc(|X>><<Y|) on out (x) in for X, Y : C^{d1} -> anc (x) out.
ComplexMatrix anc_traced_outer(const ComplexMatrix& x, const ComplexMatrix& y, Index anc_dim);

// ---- gamma vectors and probabilistic-comb certificates ----

enum class GammaKind { TypeI, TypeII };

// V0, Delta : C^d -> C^D.  Type II requires orthogonal images.
struct GammaFamily {
    GammaKind kind{GammaKind::TypeI};
    ComplexMatrix v0;
    ComplexMatrix delta;
};

inline constexpr Index kGammaDimBudget = 4096;

// Generic single-system families; U is Haar random on the rotated block.
GammaFamily generic_type1_family(Index d, Index big_d, double eps, Rng& rng);
GammaFamily generic_type2_family(Index d, Index big_d, Index d_prime, double eps, Rng& rng);
GammaFamily gamma_family_from(const HardInstance& inst);

// |gamma_S><gamma_S| (Type I, S a bitmask over queries) or |gamma_i><gamma_i| (Type II)
// on [out_0, in_0, ..., out_{n-1}, in_{n-1}].
LabelledOperator gamma_vector(const GammaFamily& family, std::uint32_t index, int n);
// Comb ordering [in_0, out_0, ..., in_{n-1}, out_{n-1}].
std::vector<Label> gamma_comb_ordering(int n);
// Deterministic n-comb Y >= scale * |gamma><gamma|, built recursively on the last query.
LabelledOperator gamma_certificate(const GammaFamily& family, std::uint32_t index, int n, double scale = 1.0);

struct GammaCertification {
    bool ok{false};
    CombCheck certificate_check;
    double min_gap_eigenvalue{0.0};  // min eig(certificate - scale * gamma)
};
GammaCertification certify_gamma_comb(const GammaFamily& family, std::uint32_t index, int n, double scale = 1.0);

// ---- moment experiments, packing nets, Lipschitz probes ----

enum class MomentVariant { Choi, Diamond };

// The random matrix whose moments are bounded: D for Type I, F for Type II.
ComplexMatrix moment_matrix(const HardFamily& family, MomentVariant variant, const ComplexMatrix& ux,
                            const ComplexMatrix& uy);
// Lipschitz function f(Ux, Uy) and its stated constant.
double lipschitz_function(const HardFamily& family, MomentVariant variant, const ComplexMatrix& ux,
                          const ComplexMatrix& uy);
double lipschitz_constant(const HardFamily& family, MomentVariant variant);

struct MomentBounds {
    double second_lower{0.0};
    double fourth_upper{0.0};
};
MomentBounds moment_bounds(const HardFamily& family, MomentVariant variant);
bool has_variant(Regime regime, MomentVariant variant);

struct MomentReport {
    Regime regime{Regime::TypeI};
    MomentVariant variant{MomentVariant::Choi};
    std::size_t samples{0};
    double second_mean{0.0};
    double second_se{0.0};
    double fourth_mean{0.0};
    double fourth_se{0.0};
    MomentBounds bounds;
    bool second_ok{false};  // mean >= lower - 5 se
    bool fourth_ok{false};  // mean <= upper + 5 se
    double fourth_max{0.0};
};
MomentReport moment_experiment(Regime regime, const HardDims& dims, double eps, std::size_t samples, Rng& rng,
                               MomentVariant variant = MomentVariant::Choi);

enum class NetMetric { Choi, DiamondLower };

struct PackingNet {
    Regime regime{Regime::TypeI};
    HardDims dims;
    double eps{0.0};
    std::uint64_t seed{0};
    NetMetric metric{NetMetric::Choi};
    std::vector<HardInstance> instances;
    std::vector<Channel> channels;
    std::vector<std::vector<double>> pairwise;
    double min_pairwise{0.0};
    double separation_ratio() const { return min_pairwise / eps; }
};

inline constexpr int kMaxNetSize = 64;

PackingNet sample_packing_net(Regime regime, const HardDims& dims, double eps, int count, NetMetric metric,
                              std::uint64_t seed);
// Pairwise metric over given instances (all sharing regime, dims and eps).
PackingNet packing_net_from_instances(std::vector<HardInstance> instances, NetMetric metric, std::uint64_t seed);
double net_metric(const Channel& a, const Channel& b, NetMetric metric, Rng& rng);
std::string to_string(NetMetric m);
NetMetric net_metric_from_string(const std::string& s);
std::string packing_net_to_json(const PackingNet& net);

struct LipschitzReport {
    std::size_t trials{0};
    double constant{0.0};
    double max_ratio{0.0};
    std::size_t violations{0};
    bool ok() const { return violations == 0; }
};
LipschitzReport lipschitz_probe(Regime regime, const HardDims& dims, double eps, std::size_t trials, Rng& rng,
                                MomentVariant variant = MomentVariant::Choi, double step = 1e-3);

}  // namespace ctl
