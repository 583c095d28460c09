// noisyor: generate models, draw samples, fit, evaluate and sweep.

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "noisyor/diagnostics.hpp"
#include "noisyor/io.hpp"
#include "noisyor/parallel.hpp"
#include "noisyor/pipeline.hpp"
#include "noisyor/pmi.hpp"
#include "noisyor/random.hpp"

namespace {

using namespace noisyor;
using io::Json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// A seed given on the command line, or a freshly drawn one.
struct SeedOption {
    std::optional<std::uint64_t> value;
    std::uint64_t resolve() {
        if (!value) value = draw_seed();
        return *value;
    }
};

struct GenerateArgs {
    RandomModelParams params;
    SeedOption seed;
    std::string out;
};

struct SampleArgs {
    std::string model;
    std::int64_t count = 0;
    SeedOption seed;
    std::string out;
};

struct FitArgs {
    std::string samples;
    std::string model;
    bool exact_pmi = false;
    std::optional<double> rho;
    std::optional<int> m;
    std::optional<double> nu_u;
    FitConfig cfg;
    SeedOption seed;
    std::string out;
    std::string w_out;
};

struct EvalArgs {
    std::string model;
    std::string recovery;
    std::string out;
};

struct DiagArgs {
    std::string model;
    SeedOption seed;
    std::string out;
};

struct SweepArgs {
    std::vector<int> n{90};
    std::vector<int> m{5};
    std::vector<double> p{0.3};
    std::vector<double> rho{0.01};
    std::vector<std::int64_t> N{200000};
    std::vector<std::uint64_t> seeds;
    int num_seeds = 1;
    SeedOption seed;
    std::string mode = "samples";
    std::string out;
};

void add_decomp_options(CLI::App* cmd, FitConfig& cfg) {
    cmd->add_option("--delta", cfg.decomp.delta, "Trial-budget exponent")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--zeta", cfg.decomp.zeta, "Acceptance slack")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--dedup", cfg.decomp.dedup_dist, "Minimum distance between accepted components")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--trial-constant", cfg.decomp.trial_constant, "Constant of the trial budget")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-trials", cfg.decomp.max_trials, "Trial cap (0 = automatic)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--whitening-rank", cfg.whitening_rank, "Truncation rank of the middle pseudo-inverse (0 = m)")
        ->check(CLI::NonNegativeNumber);
}

int run_generate(GenerateArgs& args) {
    args.params.seed = args.seed.resolve();
    const auto model = generate_random_model(args.params);
    io::write_model(args.out, model);
    std::cout << "wrote " << args.out << " (n = " << model.n() << ", m = " << model.m()
              << ", seed = " << args.params.seed << ")\n";
    return 0;
}

int run_sample(SampleArgs& args) {
    const auto model = io::read_model(args.model);
    const auto seed = args.seed.resolve();
    const auto batch = sample(model, args.count, seed);
    const Json config = {{"schema_version", io::schema_version},
                         {"command", "sample"},
                         {"model", args.model},
                         {"N", args.count},
                         {"seed", seed}};
    io::write_samples(args.out, batch, config);
    std::cout << "wrote " << args.out << " (N = " << args.count << ", seed = " << seed << ")\n";
    return 0;
}

int run_fit(FitArgs& args) {
    std::optional<NoisyOrModel> model;
    if (!args.model.empty()) model = io::read_model(args.model);
    if (args.exact_pmi && !model) throw InvalidInput("--exact-pmi requires --model");
    if (!args.exact_pmi && args.samples.empty()) throw InvalidInput("fit needs --samples, or --model with --exact-pmi");

    FitConfig cfg = args.cfg;
    cfg.seed = args.seed.resolve();
    cfg.pmi_source = args.exact_pmi ? PmiSource::population : PmiSource::empirical;
    if (args.rho) cfg.rho = *args.rho;
    else if (model) cfg.rho = model->rho;
    else throw InvalidInput("--rho is required when no --model is given");
    if (args.m) cfg.m = *args.m;
    else if (model) cfg.m = model->m();
    else throw InvalidInput("--m is required when no --model is given");
    if (args.nu_u) cfg.nu_u = *args.nu_u;
    else if (model) cfg.nu_u = model->nu_u;

    RecoveryResult result;
    if (args.exact_pmi) {
        result = fit(*model, cfg);
    } else {
        const auto batch = io::read_samples(args.samples);
        result = fit(batch, cfg);
        if (model) result.per_column_error = column_error(model->W, result.W_hat);
    }
    for (const auto& w : result.warnings) std::clog << "warning: " << w << '\n';

    Json doc = io::recovery_to_json(result, cfg);
    doc["inputs"] = {{"samples", args.samples}, {"model", args.model}};
    io::write_json(args.out, doc);
    if (!args.w_out.empty())
        io::write_json(args.w_out, {{"schema_version", io::schema_version},
                                    {"config", io::config_to_json(cfg)},
                                    {"W_hat", io::matrix_to_json(result.W_hat)}});
    std::cout << "wrote " << args.out << " (seed = " << cfg.seed << ")";
    if (result.per_column_error) std::cout << ", eta_max = " << result.per_column_error->eta_max;
    std::cout << '\n';
    return 0;
}

int run_eval(const EvalArgs& args) {
    const auto model = io::read_model(args.model);
    const Json recovery = io::read_json(args.recovery);
    if (!recovery.contains("W_hat")) throw IoError(args.recovery + ": missing field 'W_hat'");
    const DenseMatrix W_hat = io::matrix_from_json(recovery.at("W_hat"), "W_hat");
    const auto err = column_error(model.W, W_hat);
    Json doc = io::column_error_to_json(err);
    doc["schema_version"] = io::schema_version;
    doc["inputs"] = {{"model", args.model}, {"recovery", args.recovery}};
    io::write_json(args.out, doc);
    std::cout << "eta_max = " << err.eta_max << ", eta_median = " << err.eta_median << '\n';
    return 0;
}

int run_diag(DiagArgs& args) {
    const auto model = io::read_model(args.model);
    const auto seed = args.seed.resolve();
    const auto part = random_partition(model.n(), seed);
    Json doc = io::diagnostics_to_json(model_report(model, part));
    doc["schema_version"] = io::schema_version;
    doc["inputs"] = {{"model", args.model}, {"partition_seed", seed}};
    doc["partition"] = io::partition_to_json(part);
    io::write_json(args.out, doc);
    std::cout << doc.dump(2) << '\n';
    return 0;
}

struct SweepRow {
    int n = 0, m = 0;
    double p = 0, rho = 0;
    std::int64_t N = 0;
    std::uint64_t seed = 0;
    std::optional<double> eta_max, eta_median;
    double tau_G = NAN, mu = NAN;
    StageTimings timings;
    std::string status = "ok";
};

void run_point(SweepRow& row, bool population) {
    RandomModelParams params;
    params.n = row.n;
    params.m = row.m;
    params.p = row.p;
    params.rho = row.rho;
    params.seed = row.seed;
    const auto model = generate_random_model(params);
    FitConfig cfg;
    cfg.rho = row.rho;
    cfg.m = row.m;
    cfg.nu_u = model.nu_u;
    cfg.seed = row.seed;
    cfg.pmi_source = population ? PmiSource::population : PmiSource::empirical;
    const auto part = random_partition(model.n(), row.seed);
    const auto diag = model_report(model, part);
    row.tau_G = diag.tau_G;
    row.mu = diag.mu;
    try {
        const RecoveryResult result = population ? fit(model, cfg) : fit(sample(model, row.N, row.seed), cfg);
        const auto err = column_error(model.W, result.W_hat);
        row.eta_max = err.eta_max;
        row.eta_median = err.eta_median;
        row.timings = result.timings;
    } catch (const PartialResult& e) {
        row.status = "partial:" + e.stage();
    } catch (const Error& e) {
        row.status = "error:" + (e.stage().empty() ? std::string("input") : e.stage());
    }
}

int run_sweep(SweepArgs& args) {
    if (args.mode != "samples" && args.mode != "population") throw InvalidInput("--mode must be samples or population");
    const bool population = args.mode == "population";
    std::vector<std::uint64_t> seeds = args.seeds;
    if (seeds.empty()) {
        const auto base = args.seed.resolve();
        for (int k = 0; k < args.num_seeds; ++k) seeds.push_back(base + static_cast<std::uint64_t>(k));
    }
    std::vector<SweepRow> rows;
    for (int n : args.n)
        for (int m : args.m)
            for (double p : args.p)
                for (double rho : args.rho)
                    for (std::int64_t N : args.N)
                        for (auto seed : seeds) {
                            SweepRow row;
                            row.n = n;
                            row.m = m;
                            row.p = p;
                            row.rho = rho;
                            row.N = population ? 0 : N;
                            row.seed = seed;
                            rows.push_back(row);
                        }
    if (rows.empty()) throw InvalidInput("sweep grid is empty");
    // Validate the whole grid before any work starts.
    for (const auto& row : rows) {
        if (row.n < 3 || row.m < 1) throw InvalidInput("sweep: --n must be >= 3 and --m >= 1");
        if (!(row.p >= 0 && row.p <= 1)) throw InvalidInput("sweep: --p values must lie in [0, 1]");
        if (!(row.rho > 0 && row.rho < 1)) throw InvalidInput("sweep: --rho values must lie in (0, 1)");
        if (!population && row.N < 1) throw InvalidInput("sweep: --N values must be positive");
    }

    std::atomic<std::size_t> next{0};
    parallel_chunks(thread_count(), [&](std::int64_t, std::int64_t) {
        for (std::size_t i = next++; i < rows.size(); i = next++) run_point(rows[i], population);
    });

    std::ofstream out(args.out);
    if (!out) throw IoError(args.out + ": cannot open for writing");
    const Json config = {{"schema_version", io::schema_version}, {"mode", args.mode}, {"n", args.n},
                         {"m", args.m},           {"p", args.p},                    {"rho", args.rho},
                         {"N", args.N},           {"seeds", seeds}};
    out << "# noisyor sweep " << config.dump() << '\n';
    out << "n,m,p,rho,N,seed,eta_max,eta_median,tau_G,mu,pmi_ms,whitening_ms,decomposition_ms,assembly_ms,status\n";
    out << std::setprecision(10);
    auto opt = [](const std::optional<double>& v) {
        if (!v) return std::string();
        std::ostringstream os;
        os << std::setprecision(10) << *v;
        return os.str();
    };
    for (const auto& r : rows)
        out << r.n << ',' << r.m << ',' << r.p << ',' << r.rho << ',' << r.N << ',' << r.seed << ','
            << opt(r.eta_max) << ',' << opt(r.eta_median) << ',' << r.tau_G << ',' << r.mu << ','
            << r.timings.pmi_ms << ',' << r.timings.whitening_ms << ',' << r.timings.decomposition_ms << ','
            << r.timings.assembly_ms << ',' << r.status << '\n';
    if (!out) throw IoError(args.out + ": write failed");
    std::cout << "wrote " << rows.size() << " rows to " << args.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn noisy-or network weights by decomposing the PMI tensor"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "noisyor schema " + std::to_string(io::schema_version));

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Draw a random noisy-or model");
    generate->add_option("--n", gen.params.n, "Number of symptoms")->check(CLI::Range(1, 1 << 20));
    generate->add_option("--m", gen.params.m, "Number of diseases")->check(CLI::Range(1, 1 << 16));
    generate->add_option("--p", gen.params.p, "Edge probability")->check(CLI::Range(0.0, 1.0));
    generate->add_option("--rho", gen.params.rho, "Disease prior")->check(CLI::Range(0.0, 1.0));
    generate->add_option("--nu-l", gen.params.nu_l, "Weight-condition constant")->check(CLI::Range(0.0, 1.0));
    generate->add_option("--nu-u", gen.params.nu_u, "Weight upper bound")->check(CLI::PositiveNumber);
    generate->add_option("--w-lo", gen.params.w_lo, "Lower end of the nonzero weight law")
        ->check(CLI::NonNegativeNumber);
    generate->add_option("--seed", gen.seed.value, "Random seed (drawn and recorded if omitted)");
    generate->add_option("--out", gen.out, "Output model JSON")->required();

    SampleArgs smp;
    auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a model");
    sample_cmd->add_option("--model", smp.model, "Model JSON")->required()->check(CLI::ExistingFile);
    sample_cmd->add_option("--N", smp.count, "Number of samples")->required()->check(CLI::PositiveNumber);
    sample_cmd->add_option("--seed", smp.seed.value, "Random seed (drawn and recorded if omitted)");
    sample_cmd->add_option("--out", smp.out, "Output sample file")->required();

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit", "Recover W from samples or from the exact PMI of a model");
    fit_cmd->add_option("--samples", fa.samples, "Sample file")->check(CLI::ExistingFile);
    fit_cmd->add_option("--model", fa.model, "Model JSON (truth for metrics; required with --exact-pmi)")
        ->check(CLI::ExistingFile);
    fit_cmd->add_flag("--exact-pmi", fa.exact_pmi, "Use the population PMI of --model instead of samples");
    fit_cmd->add_option("--rho", fa.rho, "Disease prior")->check(CLI::Range(0.0, 1.0));
    fit_cmd->add_option("--m", fa.m, "Number of diseases")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--nu-u", fa.nu_u, "Weight upper bound")->check(CLI::PositiveNumber);
    add_decomp_options(fit_cmd, fa.cfg);
    fit_cmd->add_option("--seed", fa.seed.value, "Random seed (drawn and recorded if omitted)");
    fit_cmd->add_option("--out", fa.out, "Output recovery JSON")->required();
    fit_cmd->add_option("--w-out", fa.w_out, "Also write W_hat and the config alone to this JSON file");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Column error of a recovery against its model");
    eval->add_option("--model", ev.model, "Model JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--recovery", ev.recovery, "Recovery JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", ev.out, "Output metrics JSON")->required();

    DiagArgs dg;
    auto* diag = app.add_subcommand("diag", "Spectral diagnostics of a model");
    diag->add_option("--model", dg.model, "Model JSON")->required()->check(CLI::ExistingFile);
    diag->add_option("--seed", dg.seed.value, "Partition seed (drawn and recorded if omitted)");
    diag->add_option("--out", dg.out, "Output diagnostics JSON")->required();

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid and write one CSV row per point");
    sweep->add_option("--n", sw.n, "Symptom counts")->expected(1, -1);
    sweep->add_option("--m", sw.m, "Disease counts")->expected(1, -1);
    sweep->add_option("--p", sw.p, "Edge probabilities")->expected(1, -1);
    sweep->add_option("--rho", sw.rho, "Disease priors")->expected(1, -1);
    sweep->add_option("--N", sw.N, "Sample counts")->expected(1, -1);
    sweep->add_option("--seeds", sw.seeds, "Explicit seeds")->expected(1, -1);
    sweep->add_option("--num-seeds", sw.num_seeds, "Consecutive seeds from --seed")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sw.seed.value, "Base seed (drawn and recorded if omitted)");
    sweep->add_option("--mode", sw.mode, "samples or population")->check(CLI::IsMember({"samples", "population"}));
    sweep->add_option("--out", sw.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*generate) return run_generate(gen);
        if (*sample_cmd) return run_sample(smp);
        if (*fit_cmd) return run_fit(fa);
        if (*eval) return run_eval(ev);
        if (*diag) return run_diag(dg);
        if (*sweep) return run_sweep(sw);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
