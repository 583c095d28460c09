#pragma once

#include <cstdint>
#include <vector>

#include "noisyor/errors.hpp"
#include "noisyor/linalg.hpp"
#include "noisyor/whitening.hpp"

namespace noisyor {

struct DecompParams {
    double delta = 0.25;        ///< oversampling exponent of the trial budget
    double zeta = 0.1;          ///< accept when the trilinear score is >= 1 - zeta
    double dedup_dist = 0.5;    ///< minimum sign-aligned distance between accepted u's
    double trial_constant = 4;  ///< C in ceil(C d^{1+delta} log d)
    int max_trials = 0;         ///< 0 selects the budget above
    int target_r = 1;
    std::uint64_t seed = 0;
};

void validate_params(const DecompParams& params);

/// Trial budget for a tensor whose largest dimension is d.
int trial_budget(const DecompParams& params, Eigen::Index d);

struct Component {
    DenseVector u, v, w;
    double score = 0;
    int trial = -1;  ///< trial index that produced the component
};

struct ComponentSet {
    std::vector<Component> triples;

    std::size_t size() const { return triples.size(); }
    bool empty() const { return triples.empty(); }
};

/// Fewer than target_r components were accepted within the trial budget.
class PartialResult : public Error {
public:
    PartialResult(const std::string& message, ComponentSet found) : Error(message), found_(std::move(found)) {}
    const ComponentSet& found() const noexcept { return found_; }

private:
    ComponentSet found_;
};

/// M_ij = sum_k T_ijk g_k.
DenseMatrix contract_mode3(const DenseTensor3& T, const DenseVector& g);

/// z_k = sum_ij T_ijk u_i v_j.
DenseVector contract_modes12(const DenseTensor3& T, const DenseVector& u, const DenseVector& v);

/// sum_ijk T_ijk u_i v_j w_k.
double trilinear(const DenseTensor3& T, const DenseVector& u, const DenseVector& v, const DenseVector& w);

/// Randomised decomposition of a nearly orthogonal tensor: Gaussian
/// contraction, top singular pair, verification by the trilinear score.
/// Trials are independent; acceptance runs in trial order.
ComponentSet orthogonal_decompose(const DenseTensor3& T, const DecompParams& params);

/// Whitens T with the inverse square roots, decomposes, and maps components
/// back through the square roots. Each returned vector is sign-fixed to a
/// nonnegative entry sum. PartialResult carries mapped-back components.
ComponentSet whitened_decompose(const DenseTensor3& T, const WhiteningSet& white, const DecompParams& params);

}  // namespace noisyor
