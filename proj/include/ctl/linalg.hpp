#pragma once

// Dense complex linear algebra shared by every module.
//
// Conventions:
//  * |X>> is the row-major flattening of X, so |AXB>> = (A (x) B^T)|X>>.
//  * In a tensor product the first factor carries the most significant index.

#include <Eigen/Dense>

#include <complex>
#include <compare>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ctl/errors.hpp"

namespace ctl {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

inline constexpr double kDefaultTol = 1e-9;
inline constexpr double kPinvCutoff = 1e-10;

enum class Role : std::uint8_t { In, Out, Anc, Ref, Mem, Start, End };

// A tensor factor name: (role, index).  Queries are numbered from 0.
struct Label {
    Role role{Role::In};
    int index{0};
    auto operator<=>(const Label&) const = default;
};

std::string to_string(const Label& l);

inline Label in(int i) { return {Role::In, i}; }
inline Label out(int i) { return {Role::Out, i}; }
inline Label anc(int i) { return {Role::Anc, i}; }
inline Label ref(int i) { return {Role::Ref, i}; }

struct Factor {
    Label label;
    Index dim{1};
};

// Ordered list of labelled tensor factors with pairwise distinct labels.
class FactorLayout {
public:
    FactorLayout() = default;
    explicit FactorLayout(std::vector<Factor> factors);

    const std::vector<Factor>& factors() const { return factors_; }
    std::size_t size() const { return factors_.size(); }
    Index total_dim() const;
    bool contains(const Label& l) const;
    // Position of the label; throws LabelError when absent.
    std::size_t position(const Label& l) const;
    Index dim_of(const Label& l) const;
    std::vector<Label> labels() const;
    std::vector<Index> dims() const;
    FactorLayout without(std::span<const Label> removed) const;
    FactorLayout concat(const FactorLayout& other) const;

    bool operator==(const FactorLayout&) const;

private:
    std::vector<Factor> factors_;
};

ComplexMatrix identity(Index d);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector kron(const ComplexVector& a, const ComplexVector& b);
ComplexMatrix basis_projector(Index d, Index i);
ComplexVector basis_vector(Index d, Index i);

ComplexVector vectorize(const ComplexMatrix& x);
ComplexMatrix unvectorize(const ComplexVector& v, Index rows, Index cols);

// Permutes tensor factors.  Factor k of the result is factor perm[k] of the input.
ComplexVector permute_factors(const ComplexVector& v, std::span<const Index> dims,
                              std::span<const std::size_t> perm);
ComplexMatrix permute_factors(const ComplexMatrix& m, std::span<const Index> dims,
                              std::span<const std::size_t> perm);

// Reorders an operator carried on `layout` so that its factors follow `order`.
ComplexMatrix reorder(const ComplexMatrix& m, const FactorLayout& layout,
                      std::span<const Label> order);

ComplexMatrix partial_trace(const ComplexMatrix& m, const FactorLayout& layout,
                            std::span<const Label> traced);
ComplexMatrix partial_transpose(const ComplexMatrix& m, const FactorLayout& layout,
                                std::span<const Label> transposed);

double trace_norm(const ComplexMatrix& m);
double operator_norm(const ComplexMatrix& m);
double frobenius_norm(const ComplexMatrix& m);

ComplexMatrix hermitian_part(const ComplexMatrix& m);
RealVector hermitian_eigenvalues(const ComplexMatrix& m);
double min_eigenvalue(const ComplexMatrix& m);
bool is_psd(const ComplexMatrix& m, double tol = kDefaultTol);
bool is_finite(const ComplexMatrix& m);

// Singular values below cutoff * sigma_max are treated as zero.
ComplexMatrix pseudoinverse(const ComplexMatrix& m, double cutoff = kPinvCutoff);
Index numeric_rank(const ComplexMatrix& m, double cutoff = kPinvCutoff);
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

struct Svd {
    ComplexMatrix u;
    RealVector singular_values;
    ComplexMatrix v;
};
Svd svd(const ComplexMatrix& m);

ComplexMatrix complex_gaussian(Index rows, Index cols, Rng& rng);
// Haar unitary via QR of a complex Gaussian matrix with the diagonal phase fix.
ComplexMatrix haar_unitary(Index d, Rng& rng);
ComplexVector haar_state(Index d, Rng& rng);
double uniform01(Rng& rng);

// Returns <psi|M^+|psi> <= 1 + tol, i.e. M >= |psi><psi|.
// Throws SupportError when psi has weight outside supp(M).
bool psd_domination_check(const ComplexMatrix& m, const ComplexVector& psi,
                          double tol = kDefaultTol);

// Isometry embedding the first `sub` basis vectors starting at `offset` of C^dim.
ComplexMatrix coordinate_embedding(Index dim, Index offset, Index sub);

}  // namespace ctl
