// krod: command-line driver for the twin-model pipeline.
//
//   krod run --config <file>
//   krod run --preset exp1|exp2|exp3 --out <dir> [--seed <u64>]
//   krod plot --manifest <file>
//   krod validate --manifest <file>
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O failure.

#include "krod/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

int report(const char* kind, const std::exception& e, int code)
{
    std::cerr << "krod: " << kind << ": " << e.what() << '\n';
    return code;
}

template <class F>
int guarded(F&& body)
{
    try {
        return body();
    } catch (const krod::ConfigError& e) {
        return report("config error", e, kConfig);
    } catch (const krod::NumericalError& e) {
        return report("numerical failure", e, kNumerical);
    } catch (const krod::IoError& e) {
        return report("I/O failure", e, kIo);
    } catch (const std::filesystem::filesystem_error& e) {
        return report("I/O failure", e, kIo);
    } catch (const std::exception& e) {
        return report("numerical failure", e, kNumerical);
    }
}

int do_run(const std::string& config_path, const std::string& preset, const std::string& out, std::uint64_t seed,
           bool seed_given, bool quiet)
{
    krod::RunConfig config;
    if (!config_path.empty()) {
        if (!preset.empty()) throw krod::ConfigError("use either --config or --preset, not both");
        config = krod::load_config(config_path);
        if (!out.empty()) config.output_dir = out;
    } else {
        if (preset.empty()) throw krod::ConfigError("run needs --config or --preset");
        if (preset != "exp1" && preset != "exp2" && preset != "exp3")
            throw krod::ConfigError("unknown preset '" + preset + "' (expected exp1, exp2 or exp3)");
        if (out.empty()) throw krod::ConfigError("--preset needs --out <dir>");
        config            = krod::preset_config(preset);
        config.output_dir = out;
    }
    if (seed_given) config.master_seed = seed;

    const auto progress = [quiet](const std::string& msg) {
        if (!quiet) std::cerr << "[krod] " << msg << '\n';
    };
    const auto summary = krod::run_pipeline(config, progress);

    std::printf("chosen rank        %d\n", summary.chosen_rank);
    std::printf("offline pearson    %.10f\n", summary.offline.pearson);
    std::printf("offline mae        %.6e\n", summary.offline.mae);
    if (summary.online) {
        std::printf("online pearson     %.10f\n", summary.online->pearson);
        std::printf("online mae         %.6e\n", summary.online->mae);
        std::printf("fold 1 mean fit %%  %.4f\n", summary.validation->folds[0].mean_fit());
        std::printf("fold 2 mean fit %%  %.4f\n", summary.validation->folds[1].mean_fit());
    }
    std::printf("elapsed            %.2f s\n", summary.seconds);
    std::printf("manifest           %s\n", summary.manifest_path.string().c_str());
    return kOk;
}

int do_plot(const std::string& manifest_path)
{
    auto manifest = krod::Manifest::load(manifest_path);
    if (manifest.status != "ok")
        throw krod::IoError("manifest marks a failed run (stage " + manifest.failed_stage + ")");
    krod::emit_plot_data(manifest);
    manifest.write();
    std::printf("plot data written to %s\n", manifest.directory.string().c_str());
    return kOk;
}

int do_validate(const std::string& manifest_path)
{
    const auto issues = krod::validate_manifest(manifest_path);
    bool integrity    = false;
    for (const auto& issue : issues) {
        std::fprintf(stderr, "%s: %s\n", issue.checksum ? "integrity" : "invariant", issue.message.c_str());
        integrity = integrity || issue.checksum;
    }
    if (issues.empty()) {
        std::printf("manifest ok\n");
        return kOk;
    }
    return integrity ? kIo : kNumerical;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"KROD twin-model pipeline for the viscous Burgers benchmarks"};
    app.require_subcommand(1);

    std::string config_path, preset, out, manifest;
    std::uint64_t seed = 0;
    bool quiet         = false;

    auto* run = app.add_subcommand("run", "generate, decompose, select, fit, validate and report");
    run->add_option("--config", config_path, "JSON config (schema krod-config/1)");
    run->add_option("--preset", preset, "built-in experiment: exp1, exp2 or exp3");
    run->add_option("--out", out, "output directory");
    auto* seed_opt = run->add_option("--seed", seed, "master seed (u64)");
    run->add_flag("-q,--quiet", quiet, "no progress output");

    auto* plot = app.add_subcommand("plot", "re-emit plot-ready CSVs from a run");
    plot->add_option("--manifest", manifest, "manifest.json of a run")->required();

    auto* validate = app.add_subcommand("validate", "re-check checksums and artifact invariants");
    validate->add_option("--manifest", manifest, "manifest.json of a run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (*run) return guarded([&] { return do_run(config_path, preset, out, seed, seed_opt->count() > 0, quiet); });
    if (*plot) return guarded([&] { return do_plot(manifest); });
    if (*validate) return guarded([&] { return do_validate(manifest); });
    return kConfig;
}
