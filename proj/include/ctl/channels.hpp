#pragma once

// Quantum channels in Choi, Kraus and Stinespring form.
//
// The Choi operator lives on out (x) in:  C = sum_i |E_i>><<E_i|.
// A dilation V : in -> anc (x) out is V = sum_i |i>_anc (x) E_i (ancilla first).

#include <optional>
#include <string>
#include <vector>

#include "ctl/linalg.hpp"

namespace ctl {

class Channel {
public:
    // Validates complete positivity and trace preservation within `tol`.
    static Channel from_choi(ComplexMatrix choi, Index d_in, Index d_out, double tol = kDefaultTol);
    static Channel from_kraus(std::vector<ComplexMatrix> kraus, double tol = kDefaultTol);

    Index d_in() const { return d_in_; }
    Index d_out() const { return d_out_; }
    const ComplexMatrix& choi() const { return choi_; }
    // Stored Kraus list when built from one, otherwise an orthogonal list from the Choi spectrum.
    std::vector<ComplexMatrix> kraus() const;
    bool has_stored_kraus() const { return kraus_.has_value(); }
    Index kraus_rank() const;

    ComplexMatrix apply(const ComplexMatrix& rho) const;

private:
    Channel(Index d_in, Index d_out, ComplexMatrix choi, std::optional<std::vector<ComplexMatrix>> kraus)
        : d_in_(d_in), d_out_(d_out), choi_(std::move(choi)), kraus_(std::move(kraus)) {}

    Index d_in_;
    Index d_out_;
    ComplexMatrix choi_;
    std::optional<std::vector<ComplexMatrix>> kraus_;
};

class Isometry {
public:
    explicit Isometry(ComplexMatrix matrix, double tol = kDefaultTol);
    Index d_in() const { return matrix_.cols(); }
    Index d_out() const { return matrix_.rows(); }
    const ComplexMatrix& matrix() const { return matrix_; }
    double defect() const;

private:
    ComplexMatrix matrix_;
};

// Isometry d_in -> anc_dim * d_out with the ancilla as the leading factor.
class Dilation {
public:
    Dilation(Isometry iso, Index anc_dim);
    const Isometry& isometry() const { return iso_; }
    Index anc_dim() const { return anc_dim_; }
    Index d_in() const { return iso_.d_in(); }
    Index d_out() const { return iso_.d_out() / anc_dim_; }
    // Block a of V, i.e. (<a|_anc (x) I) V.
    ComplexMatrix kraus_block(Index a) const;

private:
    Isometry iso_;
    Index anc_dim_;
};

ComplexMatrix choi_of_operator(const ComplexMatrix& e);

Channel kraus_to_choi(const std::vector<ComplexMatrix>& kraus);
std::vector<ComplexMatrix> choi_to_kraus(const Channel& ch);

Dilation dilate(const Channel& ch, Index r);
Dilation random_dilation(const Channel& ch, Index r, Rng& rng);
Channel contract(const Dilation& dil);
// Contracts an arbitrary isometry whose output splits as anc (x) out.
Channel contract(const ComplexMatrix& v, Index anc_dim);

Channel unitary_channel(const ComplexMatrix& u);
Channel identity_channel(Index d);
Channel depolarizing_channel(Index d);
// Random channel of Kraus rank `rank` from a Haar-random isometry.
Channel random_channel(Index d_in, Index d_out, Index rank, Rng& rng);
ComplexMatrix random_isometry(Index d_in, Index d_out, Rng& rng);
// second o first
Channel compose(const Channel& second, const Channel& first);

std::string channel_to_json(const Channel& ch);
Channel channel_from_json(const std::string& text);

}  // namespace ctl
