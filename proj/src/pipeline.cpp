#include "noisyor/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "noisyor/pmi.hpp"

namespace noisyor {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Runs `body`, tagging any library error with the stage name.
template <typename Body>
auto staged(const char* stage, double& timing, Body&& body) {
    const auto start = Clock::now();
    try {
        auto result = body();
        timing = elapsed_ms(start);
        return result;
    } catch (Error& e) {
        if (e.stage().empty()) e.set_stage(stage);
        throw;
    }
}

void require_signal(const PmiBlocks& blocks) {
    const double peak = std::max({blocks.pmi_ab.cwiseAbs().maxCoeff(), blocks.pmi_bc.cwiseAbs().maxCoeff(),
                                  blocks.pmi_ca.cwiseAbs().maxCoeff(), blocks.pmit.data().cwiseAbs().maxCoeff()});
    if (!(peak > 0)) throw DegenerateModel("PMI blocks are identically zero: symptoms carry no shared signal");
}

std::string rho_pm_warning(double rho, double density, int m) {
    const double rho_pm = rho * density * m;
    if (!(rho_pm > 0.1)) return {};
    std::ostringstream os;
    os << "rho * p * m = " << rho_pm << " exceeds 0.1; recovery guarantees assume a sparse prior";
    return os.str();
}

}  // namespace

void validate_config(const FitConfig& cfg) {
    if (!(cfg.rho > 0 && cfg.rho < 1)) throw InvalidInput("fit: rho must lie in (0, 1)");
    if (cfg.m < 1) throw InvalidInput("fit: m must be at least 1");
    if (!(cfg.nu_u > 0) || !std::isfinite(cfg.nu_u)) throw InvalidInput("fit: nu_u must be positive and finite");
    if (cfg.whitening_rank < 0) throw InvalidInput("fit: whitening rank must be nonnegative");
    DecompParams params = cfg.decomp;
    params.target_r = cfg.m;
    validate_params(params);
}

double weight_from_y(double y, double nu_u) {
    if (y > 1) return 0;
    if (y > std::exp(-nu_u)) return std::min(nu_u, std::max(0.0, -std::log(y)));
    return nu_u;
}

DenseMatrix assemble_W(const ComponentSet& components, const Partition& part, double rho, double nu_u) {
    validate_partition(part);
    if (!(rho > 0 && rho < 1)) throw InvalidInput("assemble_W: rho must lie in (0, 1)");
    const double scale = std::cbrt((1 - rho) / rho);
    DenseMatrix W(part.n, static_cast<Eigen::Index>(components.size()));
    for (std::size_t i = 0; i < components.size(); ++i) {
        const Component& comp = components.triples[i];
        const DenseVector* parts[3] = {&comp.u, &comp.v, &comp.w};
        for (int b = 0; b < 3; ++b) {
            const auto& block = part.block(b);
            if (parts[b]->size() != static_cast<Eigen::Index>(block.size()))
                throw InvalidInput("assemble_W: component length differs from its block size");
            for (std::size_t j = 0; j < block.size(); ++j)
                W(block[j], static_cast<Eigen::Index>(i)) =
                    weight_from_y(1 - scale * (*parts[b])(static_cast<Eigen::Index>(j)), nu_u);
        }
    }
    return W;
}

RecoveryResult recover_from_blocks(const PmiBlocks& blocks, const FitConfig& cfg,
                                   const std::optional<WhiteningSet>& white) {
    validate_config(cfg);
    RecoveryResult out;
    out.partition = blocks.part;

    const WhiteningSet whitening = staged("whitening", out.timings.whitening_ms, [&] {
        return white ? *white : whitening_matrices(blocks, cfg.rho, cfg.m, cfg.whitening_rank);
    });
    DecompParams params = cfg.decomp;
    params.target_r = cfg.m;
    params.seed = cfg.seed;
    out.components = staged("decomposition", out.timings.decomposition_ms,
                            [&] { return whitened_decompose(blocks.pmit, whitening, params); });
    out.W_hat = staged("assembly", out.timings.assembly_ms,
                       [&] { return assemble_W(out.components, out.partition, cfg.rho, cfg.nu_u); });
    return out;
}

RecoveryResult fit(const SampleBatch& samples, const FitConfig& cfg) {
    validate_config(cfg);
    if (samples.size() < 1) throw InvalidInput("fit: at least one sample is required");
    double pmi_ms = 0;
    const PmiBlocks blocks = staged("pmi", pmi_ms, [&] {
        const Partition part = random_partition(samples.n(), cfg.seed);
        PmiBlocks b = pmi_from_counts(count_zero_patterns(samples, part));
        require_signal(b);
        return b;
    });
    RecoveryResult out = recover_from_blocks(blocks, cfg);
    out.timings.pmi_ms = pmi_ms;
    return out;
}

RecoveryResult fit(const NoisyOrModel& model, const FitConfig& cfg) {
    validate_model(model);
    validate_config(cfg);
    if (cfg.m != model.m()) throw InvalidInput("fit: configured m differs from the model's m");
    double pmi_ms = 0;
    const PmiBlocks blocks = staged("pmi", pmi_ms, [&] {
        const Partition part = random_partition(model.n(), cfg.seed);
        PmiBlocks b = population_pmi(model, part);
        require_signal(b);
        return b;
    });
    RecoveryResult out = recover_from_blocks(blocks, cfg);
    out.timings.pmi_ms = pmi_ms;
    const double density =
        static_cast<double>((model.W.array() > 0).count()) / static_cast<double>(model.W.size());
    if (auto w = rho_pm_warning(cfg.rho, density, cfg.m); !w.empty()) out.warnings.push_back(std::move(w));
    out.per_column_error = column_error(model.W, out.W_hat);
    return out;
}

}  // namespace noisyor
