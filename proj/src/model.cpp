#include "noisyor/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "noisyor/parallel.hpp"
#include "noisyor/random.hpp"

namespace noisyor {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidInput(message);
}

void require_indices(const NoisyOrModel& model, std::span<const int> idx) {
    require(!idx.empty() && idx.size() <= 3, "zero moment: between 1 and 3 indices required");
    for (std::size_t a = 0; a < idx.size(); ++a) {
        require(idx[a] >= 0 && idx[a] < model.n(), "zero moment: index out of range");
        for (std::size_t b = 0; b < a; ++b) require(idx[a] != idx[b], "zero moment: repeated index");
    }
}

/// log Pr[all of idx absent] = sum_k log(1 - rho (1 - exp(-sum_i W_ik))).
double log_zero_moment(const DenseMatrix& W, double rho, std::span<const int> idx) {
    double total = 0;
    for (Eigen::Index k = 0; k < W.cols(); ++k) {
        double s = 0;
        for (int i : idx) s += W(i, k);
        total += std::log1p(rho * std::expm1(-s));
    }
    return total;
}

template <typename LogMoment>
PmiBlocks assemble_blocks(const Partition& part, LogMoment&& log_moment) {
    validate_partition(part);
    const auto& A = part.a;
    const auto& B = part.b;
    const auto& C = part.c;
    std::vector<double> single(static_cast<std::size_t>(part.n));
    for (int i = 0; i < part.n; ++i) {
        const int idx[] = {i};
        single[static_cast<std::size_t>(i)] = log_moment(std::span<const int>(idx));
    }
    auto pair_block = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        DenseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const int idx[] = {rows[r], cols[c]};
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = log_moment(std::span<const int>(idx));
            }
        return out;
    };
    const DenseMatrix lab = pair_block(A, B);
    const DenseMatrix lbc = pair_block(B, C);
    const DenseMatrix lca = pair_block(C, A);

    PmiBlocks out;
    out.part = part;
    out.source = PmiSource::population;
    auto pmi = [&](const DenseMatrix& joint, const std::vector<int>& rows, const std::vector<int>& cols) {
        DenseMatrix m = joint;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) -= single[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])] +
                           single[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])];
        return m;
    };
    out.pmi_ab = pmi(lab, A, B);
    out.pmi_bc = pmi(lbc, B, C);
    out.pmi_ca = pmi(lca, C, A);

    const auto na = static_cast<Eigen::Index>(A.size());
    const auto nb = static_cast<Eigen::Index>(B.size());
    const auto nc = static_cast<Eigen::Index>(C.size());
    out.pmit = DenseTensor3(na, nb, nc);
    for (Eigen::Index ia = 0; ia < na; ++ia)
        for (Eigen::Index ib = 0; ib < nb; ++ib)
            for (Eigen::Index ic = 0; ic < nc; ++ic) {
                const int i = A[static_cast<std::size_t>(ia)];
                const int j = B[static_cast<std::size_t>(ib)];
                const int k = C[static_cast<std::size_t>(ic)];
                const int idx[] = {i, j, k};
                const double joint = log_moment(std::span<const int>(idx));
                out.pmit(ia, ib, ic) = lab(ia, ib) + lbc(ib, ic) + lca(ic, ia) - joint -
                                       single[static_cast<std::size_t>(i)] - single[static_cast<std::size_t>(j)] -
                                       single[static_cast<std::size_t>(k)];
            }
    return out;
}

DenseMatrix select_rows(const DenseMatrix& M, const std::vector<int>& rows) {
    DenseMatrix out(static_cast<Eigen::Index>(rows.size()), M.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = M.row(rows[r]);
    return out;
}

}  // namespace

void validate_model(const NoisyOrModel& model) {
    require(model.n() >= 1 && model.m() >= 1, "model: W must be nonempty");
    require(model.rho > 0 && model.rho < 1, "model: rho must lie in (0, 1)");
    require(std::isfinite(model.nu_u) && model.nu_u > 0, "model: nu_u must be positive");
    require(model.W.allFinite(), "model: W has non-finite entries");
    require(model.W.minCoeff() >= 0, "model: W has negative entries");
    require(model.W.maxCoeff() <= model.nu_u, "model: W exceeds nu_u");
}

double nonzero_weight_moment(const RandomModelParams& params) {
    const double lo = params.w_lo, hi = params.nu_u;
    if (hi - lo < 1e-12) return std::exp(-lo * lo);
    return std::sqrt(std::numbers::pi) / 2 * (std::erf(hi) - std::erf(lo)) / (hi - lo);
}

NoisyOrModel generate_random_model(const RandomModelParams& params) {
    require(params.n >= 1 && params.m >= 1, "generate: n and m must be positive");
    require(params.p >= 0 && params.p <= 1, "generate: p must lie in [0, 1]");
    require(params.rho > 0 && params.rho < 1, "generate: rho must lie in (0, 1)");
    require(params.nu_u > 0 && std::isfinite(params.nu_u), "generate: nu_u must be positive");
    require(params.w_lo >= 0 && params.w_lo <= params.nu_u, "generate: w_lo must lie in [0, nu_u]");
    require(params.nu_l > 0 && params.nu_l < 1, "generate: nu_l must lie in (0, 1)");
    const double moment = nonzero_weight_moment(params);
    if (params.p > 0 && moment > 1 - params.nu_l + 1e-12) {
        std::ostringstream os;
        os << "generate: weight law violates E[exp(-w^2)] <= 1 - nu_l (" << moment << " > " << 1 - params.nu_l
           << "); raise w_lo or lower nu_l";
        throw InvalidInput(os.str());
    }
    if (params.rho * params.p * params.m >= 1)
        std::clog << "warning: rho * p * m = " << params.rho * params.p * params.m
                  << " >= 1; most samples will show many symptoms\n";

    NoisyOrModel model;
    model.rho = params.rho;
    model.nu_u = params.nu_u;
    model.nu_l = params.nu_l;
    model.params = params;
    model.W = DenseMatrix::Zero(params.n, params.m);
    auto rng = make_engine(params.seed, Stream::model);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> weight(params.w_lo, params.nu_u);
    const bool point_mass = params.nu_u - params.w_lo < 1e-12;
    for (int i = 0; i < params.n; ++i)
        for (int j = 0; j < params.m; ++j) {
            if (unit(rng) < params.p) model.W(i, j) = point_mass ? params.w_lo : std::min(weight(rng), params.nu_u);
        }
    return model;
}

DenseMatrix derived_matrix(const DenseMatrix& W, int l) {
    require(l >= 1, "derived_matrix: l must be at least 1");
    return (-(static_cast<double>(l) * W.array())).exp().matrix().unaryExpr([](double x) { return 1.0 - x; });
}

DenseMatrix derived_matrix(const NoisyOrModel& model, int l) { return derived_matrix(model.W, l); }

SampleBatch::SampleBatch(int n, std::int64_t count) : n_(n), count_(count), words_((n + 63) / 64) {
    require(n >= 1, "sample batch: n must be positive");
    require(count >= 1, "sample batch: N must be positive");
    bits_.assign(static_cast<std::size_t>(count * words_), 0);
}

SampleBatch sample(const NoisyOrModel& model, std::int64_t count, std::uint64_t seed) {
    validate_model(model);
    require(count >= 1, "sample: N must be at least 1");
    SampleBatch batch(model.n(), count);
    const int n = model.n(), m = model.m();
    // Row-major copy so each symptom's weights are contiguous.
    const RowMajorMatrix<double> W = model.W;
    parallel_chunks(count, [&](std::int64_t begin, std::int64_t end) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<int> active;
        active.reserve(static_cast<std::size_t>(m));
        for (std::int64_t r = begin; r < end; ++r) {
            auto rng = make_engine(seed, Stream::sample, static_cast<std::uint64_t>(r));
            active.clear();
            for (int j = 0; j < m; ++j)
                if (unit(rng) < model.rho) active.push_back(j);
            if (active.empty()) continue;  // no disease: every symptom absent
            auto row = batch.row(r);
            for (int i = 0; i < n; ++i) {
                double load = 0;
                for (int j : active) load += W(i, j);
                if (load <= 0) continue;
                if (unit(rng) >= std::exp(-load)) row[static_cast<std::size_t>(i / 64)] |= std::uint64_t{1} << (i % 64);
            }
        }
    });
    return batch;
}

double exact_zero_moment(const NoisyOrModel& model, std::span<const int> idx) {
    require_indices(model, idx);
    double p = 1;
    for (Eigen::Index k = 0; k < model.W.cols(); ++k) {
        double s = 0;
        for (int i : idx) s += model.W(i, k);
        p *= 1 - model.rho * (1 - std::exp(-s));
    }
    return p;
}

double brute_force_zero_moment(const NoisyOrModel& model, std::span<const int> idx) {
    require_indices(model, idx);
    const int m = model.m();
    require(m <= 20, "brute force: enumeration limited to m <= 20");
    double total = 0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        double prior = 1;
        double load = 0;
        for (int j = 0; j < m; ++j) {
            const bool on = (mask >> j) & 1u;
            prior *= on ? model.rho : 1 - model.rho;
            if (on)
                for (int i : idx) load += model.W(i, j);
        }
        total += prior * std::exp(-load);
    }
    return total;
}

PmiBlocks population_pmi(const NoisyOrModel& model, const Partition& part) {
    validate_model(model);
    require(part.n == model.n(), "population_pmi: partition size differs from model n");
    return assemble_blocks(part, [&](std::span<const int> idx) {
        const double lp = log_zero_moment(model.W, model.rho, idx);
        if (!std::isfinite(lp)) throw DegenerateModel("population_pmi: a zero-pattern probability is 0");
        return lp;
    });
}

PmiBlocks brute_force_pmi(const NoisyOrModel& model, const Partition& part) {
    validate_model(model);
    require(part.n == model.n(), "brute_force_pmi: partition size differs from model n");
    return assemble_blocks(part, [&](std::span<const int> idx) {
        const double p = brute_force_zero_moment(model, idx);
        if (!(p > 0)) throw DegenerateModel("brute_force_pmi: a zero-pattern probability is 0");
        return std::log(p);
    });
}

DenseTensor3 pmit_series(const NoisyOrModel& model, const Partition& part, int terms) {
    require(terms >= 1, "pmit_series: at least one term required");
    validate_partition(part);
    const double c = model.rho / (1 - model.rho);
    DenseTensor3 out(static_cast<Eigen::Index>(part.a.size()), static_cast<Eigen::Index>(part.b.size()),
                     static_cast<Eigen::Index>(part.c.size()));
    for (int l = 1; l <= terms; ++l) {
        const DenseMatrix P = derived_matrix(model, l);
        const double coeff = (l % 2 == 1 ? 1.0 : -1.0) * std::pow(c, l) / l;
        out += coeff * cp_tensor<double>(select_rows(P, part.a), select_rows(P, part.b), select_rows(P, part.c));
    }
    return out;
}

DenseMatrix pmi_series(const NoisyOrModel& model, const std::vector<int>& rows, const std::vector<int>& cols,
                       int terms) {
    require(terms >= 1, "pmi_series: at least one term required");
    const double c = model.rho / (1 - model.rho);
    DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (int l = 1; l <= terms; ++l) {
        const DenseMatrix P = derived_matrix(model, l);
        const double coeff = (l % 2 == 1 ? 1.0 : -1.0) * std::pow(c, l) / l;
        out += coeff * select_rows(P, rows) * select_rows(P, cols).transpose();
    }
    return out;
}

double pmit_series_tail_bound(const NoisyOrModel& model, const Partition& part, int terms) {
    const double c = model.rho / (1 - model.rho);
    const double volume = static_cast<double>(part.a.size()) * static_cast<double>(part.b.size()) *
                          static_cast<double>(part.c.size());
    return 2 * std::pow(c, terms + 1) * model.m() * std::sqrt(volume) / (terms + 1);
}

}  // namespace noisyor
