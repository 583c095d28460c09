#include "noisyor/tensor_decomp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "noisyor/parallel.hpp"
#include "noisyor/random.hpp"

namespace noisyor {

void validate_params(const DecompParams& params) {
    if (!(params.delta > 0 && params.delta < 1)) throw InvalidInput("decomposition: delta must lie in (0, 1)");
    if (!(params.zeta > 0 && params.zeta < 1)) throw InvalidInput("decomposition: zeta must lie in (0, 1)");
    if (!(params.dedup_dist > 0 && params.dedup_dist <= 1))
        throw InvalidInput("decomposition: dedup_dist must lie in (0, 1]");
    if (!(params.trial_constant > 0)) throw InvalidInput("decomposition: trial constant must be positive");
    if (params.max_trials < 0) throw InvalidInput("decomposition: max_trials must be nonnegative");
    if (params.target_r < 1) throw InvalidInput("decomposition: target_r must be positive");
}

int trial_budget(const DecompParams& params, Eigen::Index d) {
    if (params.max_trials > 0) return params.max_trials;
    const double dd = static_cast<double>(std::max<Eigen::Index>(d, 2));
    const double budget = std::ceil(params.trial_constant * std::pow(dd, 1 + params.delta) * std::log(dd));
    return std::max(params.target_r, static_cast<int>(budget));
}

DenseMatrix contract_mode3(const DenseTensor3& T, const DenseVector& g) {
    if (g.size() != T.dim(2)) throw InvalidInput("contract_mode3: vector length differs from mode-3 dimension");
    const DenseVector flat = T.unfold_12_3() * g;
    return Eigen::Map<const RowMajorMatrix<double>>(flat.data(), T.dim(0), T.dim(1));
}

DenseVector contract_modes12(const DenseTensor3& T, const DenseVector& u, const DenseVector& v) {
    if (u.size() != T.dim(0) || v.size() != T.dim(1))
        throw InvalidInput("contract_modes12: vector lengths differ from mode-1/2 dimensions");
    RowMajorMatrix<double> outer = u * v.transpose();
    const Eigen::Map<const DenseVector> flat(outer.data(), outer.size());
    return T.unfold_12_3().transpose() * flat;
}

double trilinear(const DenseTensor3& T, const DenseVector& u, const DenseVector& v, const DenseVector& w) {
    if (w.size() != T.dim(2)) throw InvalidInput("trilinear: vector length differs from mode-3 dimension");
    return contract_modes12(T, u, v).dot(w);
}

namespace {

struct Candidate {
    DenseVector u, v, w;
    double score = -1;
};

std::optional<Candidate> run_trial(const DenseTensor3& T, std::uint64_t seed, int trial) {
    auto rng = make_engine(seed, Stream::decomposition, static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> normal;
    DenseVector g(T.dim(2));
    for (auto& x : g) x = normal(rng);
    const DenseMatrix M = contract_mode3(T, g);
    Eigen::JacobiSVD<DenseMatrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!(svd.singularValues()(0) > 0)) return std::nullopt;
    Candidate c;
    c.u = svd.matrixU().col(0);
    c.v = svd.matrixV().col(0);
    const DenseVector z = contract_modes12(T, c.u, c.v);
    const double norm = z.norm();
    if (!(norm > 0) || !std::isfinite(norm)) return std::nullopt;
    c.w = z / norm;
    c.score = z.dot(c.w);  // trilinear score T(u, v, z / |z|)
    return c;
}

double aligned_distance(const DenseVector& x, const DenseVector& y) {
    return std::min((x - y).norm(), (x + y).norm());
}

constexpr int kBatch = 32;

}  // namespace

ComponentSet orthogonal_decompose(const DenseTensor3& T, const DecompParams& params) {
    validate_params(params);
    const Eigen::Index d_min = std::min({T.dim(0), T.dim(1), T.dim(2)});
    if (d_min < params.target_r) throw InvalidInput("orthogonal_decompose: every dimension must be >= target_r");
    if (!T.all_finite()) throw InvalidInput("orthogonal_decompose: non-finite tensor entries");
    const int budget = trial_budget(params, std::max({T.dim(0), T.dim(1), T.dim(2)}));

    ComponentSet found;
    std::vector<std::optional<Candidate>> batch;
    for (int start = 0; start < budget && static_cast<int>(found.size()) < params.target_r; start += kBatch) {
        const int count = std::min(kBatch, budget - start);
        batch.assign(static_cast<std::size_t>(count), std::nullopt);
        parallel_chunks(count, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t t = begin; t < end; ++t)
                batch[static_cast<std::size_t>(t)] = run_trial(T, params.seed, start + static_cast<int>(t));
        });
        for (int t = 0; t < count && static_cast<int>(found.size()) < params.target_r; ++t) {
            const auto& cand = batch[static_cast<std::size_t>(t)];
            if (!cand || cand->score < 1 - params.zeta) continue;
            const bool far = std::all_of(found.triples.begin(), found.triples.end(), [&](const Component& c) {
                return aligned_distance(c.u, cand->u) >= params.dedup_dist;
            });
            if (!far) continue;
            found.triples.push_back({cand->u, cand->v, cand->w, cand->score, start + t});
        }
    }
    if (static_cast<int>(found.size()) < params.target_r) {
        std::ostringstream os;
        os << "orthogonal_decompose: accepted " << found.size() << " of " << params.target_r << " components after "
           << budget << " trials";
        throw PartialResult(os.str(), std::move(found));
    }
    return found;
}

namespace {

void sign_fix(DenseVector& x) {
    if (x.sum() < 0) x = -x;
}

ComponentSet map_back(const ComponentSet& white, const WhiteningSet& w) {
    ComponentSet out;
    for (const auto& c : white.triples) {
        Component mapped{w.sqrt_a * c.u, w.sqrt_b * c.v, w.sqrt_c * c.w, c.score, c.trial};
        sign_fix(mapped.u);
        sign_fix(mapped.v);
        sign_fix(mapped.w);
        out.triples.push_back(std::move(mapped));
    }
    return out;
}

}  // namespace

ComponentSet whitened_decompose(const DenseTensor3& T, const WhiteningSet& white, const DecompParams& params) {
    if (white.m != params.target_r) throw InvalidInput("whitened_decompose: whitening rank differs from target_r");
    if (white.inv_sqrt_a.cols() != T.dim(0) || white.inv_sqrt_b.cols() != T.dim(1) ||
        white.inv_sqrt_c.cols() != T.dim(2))
        throw InvalidInput("whitened_decompose: whitening dimensions differ from the tensor");
    const DenseTensor3 whitened = multilinear_transform(T, white.inv_sqrt_a, white.inv_sqrt_b, white.inv_sqrt_c);
    try {
        return map_back(orthogonal_decompose(whitened, params), white);
    } catch (const PartialResult& partial) {
        throw PartialResult(partial.message(), map_back(partial.found(), white));
    }
}

}  // namespace noisyor
