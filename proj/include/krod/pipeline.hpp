#pragma once

// End-to-end run: generate -> decompose over a rank grid -> select ->
// fit surrogates -> validate -> report, with a checksummed manifest.
//
// Needs OpenSSL (libcrypto) for SHA-256.

#include "krod/burgers.hpp"
#include "krod/core.hpp"
#include "krod/io.hpp"
#include "krod/krod.hpp"
#include "krod/metrics.hpp"
#include "krod/model_select.hpp"
#include "krod/nlarx.hpp"
#include "krod/rng.hpp"
#include "krod/twin.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace krod {

inline constexpr std::string_view kConfigSchema   = "krod-config/1";
inline constexpr std::string_view kManifestSchema = "krod-manifest/1";
inline constexpr std::string_view kManifestName   = "manifest.json";

enum class FoldMode { OfflineOnly, Twofold };

struct RunConfig {
    ExperimentSpec experiment;
    std::string experiment_name = "exp1";
    std::vector<int> rank_grid; // empty: 5, 10, ..., 200 clipped to min(N_x, N_t)
    Seed master_seed = 1;
    NlarxFitOptions nlarx;
    std::filesystem::path output_dir;
    FoldMode folds = FoldMode::Twofold;
    SelectionPolicy policy = SelectionPolicy::Parsimonious;
    double similarity_tolerance = 1e-12;
    KrodOptions krod;

    [[nodiscard]] std::vector<int> effective_rank_grid() const
    {
        if (!rank_grid.empty()) return rank_grid;
        std::vector<int> grid;
        const int cap = std::min(experiment.nx, experiment.nt);
        for (int k = 5; k <= 200 && k <= cap; k += 5) grid.push_back(k);
        return grid;
    }

    void validate() const
    {
        experiment.validate();
        const auto grid = effective_rank_grid();
        detail::require(!grid.empty(), "config: rank_grid is empty");
        const int cap = std::min(experiment.nx, experiment.nt);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            detail::require(grid[i] >= 2, "config: rank_grid entries must be >= 2");
            detail::require(grid[i] <= cap, "config: rank " + std::to_string(grid[i]) + " exceeds min(nx, nt) = " +
                                                std::to_string(cap));
            detail::require(i == 0 || grid[i] > grid[i - 1], "config: rank_grid must be strictly increasing");
        }
        detail::require(similarity_tolerance >= 0.0, "config: similarity_tolerance must be >= 0");
        detail::require(nlarx.hidden_width >= 1, "config: nlarx.hidden_width must be >= 1");
        detail::require(nlarx.max_iterations >= 0 && nlarx.max_iterations <= 5000,
                        "config: nlarx.max_iterations must be in [0, 5000]");
        detail::require(nlarx.train_fraction > 0.0 && nlarx.train_fraction <= 1.0,
                        "config: nlarx.train_fraction must be in (0, 1]");
        detail::require(!output_dir.empty(), "config: output_dir is required");
    }
};

inline RunConfig preset_config(std::string_view name)
{
    RunConfig c;
    c.experiment      = preset_experiment(name);
    c.experiment_name = std::string(name);
    return c;
}

// --- config (de)serialization ---------------------------------------------

namespace detail {

template <class T>
T json_get(const io::Json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const io::Json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

inline std::vector<int> int_list(const io::Json& j, const char* key, std::vector<int> fallback)
{
    return json_get<std::vector<int>>(j, key, std::move(fallback));
}

} // namespace detail

inline RunConfig config_from_json(const io::Json& j, const std::filesystem::path& base_dir = {})
{
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    const auto schema = detail::json_get<std::string>(j, "schema", "");
    if (schema != kConfigSchema)
        throw ConfigError("config: schema must be \"" + std::string(kConfigSchema) + "\" (got \"" + schema + "\")");

    RunConfig c;
    const io::Json ex = j.value("experiment", io::Json::object());
    const auto name   = detail::json_get<std::string>(ex, "name", "exp1");
    c.experiment      = preset_experiment(name);
    c.experiment_name = name;
    auto& e           = c.experiment;
    e.nu              = detail::json_get(ex, "nu", e.nu);
    e.length          = detail::json_get(ex, "length", e.length);
    e.final_time      = detail::json_get(ex, "final_time", e.final_time);
    e.nx              = detail::json_get(ex, "nx", e.nx);
    e.nt              = detail::json_get(ex, "nt", e.nt);
    e.quad_order      = detail::json_get(ex, "quad_order", e.quad_order);
    e.u_left          = detail::json_get(ex, "u_left", e.u_left);
    e.u_right         = detail::json_get(ex, "u_right", e.u_right);
    const auto method = detail::json_get<std::string>(ex, "riemann_method", "closed_form");
    if (method == "closed_form") e.riemann = RiemannMethod::ClosedForm;
    else if (method == "quadrature") e.riemann = RiemannMethod::Quadrature;
    else throw ConfigError("config: riemann_method must be closed_form or quadrature");

    if (j.contains("rank_grid")) {
        const auto& g = j.at("rank_grid");
        if (g.is_object()) {
            const int start = detail::json_get(g, "start", 5);
            const int stop  = detail::json_get(g, "stop", 200);
            const int step  = detail::json_get(g, "step", 5);
            detail::require(step > 0, "config: rank_grid.step must be > 0");
            const int cap = std::min(e.nx, e.nt);
            for (int k = start; k <= stop && k <= cap; k += step) c.rank_grid.push_back(k);
            detail::require(!c.rank_grid.empty(), "config: rank_grid range is empty after clipping");
        } else {
            c.rank_grid = detail::int_list(j, "rank_grid", {});
            detail::require(!c.rank_grid.empty(), "config: rank_grid is empty");
        }
    }
    c.master_seed = detail::json_get<Seed>(j, "master_seed", c.master_seed);

    const auto folds = detail::json_get<std::string>(j, "folds", "twofold");
    if (folds == "twofold") c.folds = FoldMode::Twofold;
    else if (folds == "offline_only") c.folds = FoldMode::OfflineOnly;
    else throw ConfigError("config: folds must be twofold or offline_only");

    const io::Json sel = j.value("selection", io::Json::object());
    const auto policy  = detail::json_get<std::string>(sel, "policy", "parsimonious");
    if (policy == "parsimonious") c.policy = SelectionPolicy::Parsimonious;
    else if (policy == "knee") c.policy = SelectionPolicy::Knee;
    else throw ConfigError("config: selection.policy must be parsimonious or knee");
    c.similarity_tolerance = detail::json_get(sel, "similarity_tolerance", c.similarity_tolerance);

    const io::Json kr            = j.value("krod", io::Json::object());
    c.krod.sigma_tolerance       = detail::json_get(kr, "sigma_tolerance", c.krod.sigma_tolerance);
    c.krod.allow_rank_deficient  = detail::json_get(kr, "allow_rank_deficient", c.krod.allow_rank_deficient);
    const auto amps              = detail::json_get<std::string>(kr, "amplitudes", "current");
    if (amps == "current") c.krod.amplitudes = AmplitudeSource::Current;
    else if (amps == "shifted") c.krod.amplitudes = AmplitudeSource::Shifted;
    else throw ConfigError("config: krod.amplitudes must be current or shifted");

    const io::Json nl       = j.value("nlarx", io::Json::object());
    c.nlarx.hidden_width    = detail::json_get(nl, "hidden_width", c.nlarx.hidden_width);
    c.nlarx.max_iterations  = detail::json_get(nl, "max_iterations", c.nlarx.max_iterations);
    c.nlarx.train_fraction  = detail::json_get(nl, "train_fraction", c.nlarx.train_fraction);
    c.nlarx.tolerance       = detail::json_get(nl, "tolerance", c.nlarx.tolerance);
    const auto order_sel    = detail::json_get<std::string>(nl, "selection", "free_run");
    if (order_sel == "free_run") c.nlarx.selection = OrderSelection::FreeRun;
    else if (order_sel == "one_step") c.nlarx.selection = OrderSelection::OneStep;
    else throw ConfigError("config: nlarx.selection must be free_run or one_step");
    const auto na = detail::int_list(nl, "na", {1, 2, 3});
    const auto nb = detail::int_list(nl, "nb", {1, 2, 3});
    const auto nk = detail::int_list(nl, "nk", {1, 2});
    c.nlarx.order_grid.clear();
    for (int a : na)
        for (int b : nb)
            for (int d : nk) c.nlarx.order_grid.push_back({a, b, d});

    const auto out = detail::json_get<std::string>(j, "output_dir", "");
    if (!out.empty()) c.output_dir = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : base_dir / out;
    return c;
}

/// Echo of the resolved configuration (output_dir omitted so manifests of
/// identical runs in different directories compare equal).
inline io::Json config_to_json(const RunConfig& c)
{
    std::set<int> na, nb, nk;
    for (const auto& o : c.nlarx.order_grid) {
        na.insert(o.na);
        nb.insert(o.nb);
        nk.insert(o.nk);
    }
    const auto& e = c.experiment;
    return io::Json{
        {"schema", kConfigSchema},
        {"experiment",
         {{"name", c.experiment_name},
          {"kind", to_string(e.experiment)},
          {"nu", e.nu},
          {"length", e.length},
          {"final_time", e.final_time},
          {"nx", e.nx},
          {"nt", e.nt},
          {"quad_order", e.quad_order},
          {"u_left", e.u_left},
          {"u_right", e.u_right},
          {"riemann_method", e.riemann == RiemannMethod::ClosedForm ? "closed_form" : "quadrature"}}},
        {"rank_grid", c.effective_rank_grid()},
        {"master_seed", c.master_seed},
        {"folds", c.folds == FoldMode::Twofold ? "twofold" : "offline_only"},
        {"selection",
         {{"policy", c.policy == SelectionPolicy::Knee ? "knee" : "parsimonious"},
          {"similarity_tolerance", c.similarity_tolerance}}},
        {"krod",
         {{"sigma_tolerance", c.krod.sigma_tolerance},
          {"allow_rank_deficient", c.krod.allow_rank_deficient},
          {"amplitudes", c.krod.amplitudes == AmplitudeSource::Current ? "current" : "shifted"}}},
        {"nlarx",
         {{"na", std::vector<int>(na.begin(), na.end())},
          {"nb", std::vector<int>(nb.begin(), nb.end())},
          {"nk", std::vector<int>(nk.begin(), nk.end())},
          {"hidden_width", c.nlarx.hidden_width},
          {"max_iterations", c.nlarx.max_iterations},
          {"train_fraction", c.nlarx.train_fraction},
          {"tolerance", c.nlarx.tolerance},
          {"selection", c.nlarx.selection == OrderSelection::FreeRun ? "free_run" : "one_step"}}}};
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    io::Json j;
    try {
        j = io::Json::parse(io::read_text(path));
    } catch (const io::Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j, path.parent_path());
}

// --- checksums --------------------------------------------------------------

inline std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(io::read_text(path)); }

// --- manifest ----------------------------------------------------------------

struct Manifest {
    std::filesystem::path directory;
    io::Json config;
    std::string status = "ok"; // "ok" or "FAILED"
    std::string failed_stage;
    std::string error;
    std::vector<std::pair<std::string, std::string>> artifacts; // (relative path, kind)
    std::vector<std::string> notes;
    io::Json summary = io::Json::object();

    void add(const std::string& name, const std::string& kind)
    {
        for (auto& a : artifacts)
            if (a.first == name) {
                a.second = kind;
                return;
            }
        artifacts.emplace_back(name, kind);
    }

    [[nodiscard]] bool has(const std::string& name) const
    {
        return std::any_of(artifacts.begin(), artifacts.end(), [&](const auto& a) { return a.first == name; });
    }

    [[nodiscard]] io::Json to_json() const
    {
        io::Json list = io::Json::array();
        for (const auto& [name, kind] : artifacts) {
            const auto path = directory / name;
            const auto text = io::read_text(path);
            list.push_back({{"path", name}, {"kind", kind}, {"bytes", text.size()}, {"sha256", sha256_hex(text)}});
        }
        io::Json j{{"schema", kManifestSchema}, {"status", status}, {"config", config},
                   {"artifacts", list},     {"notes", notes},   {"summary", summary}};
        if (status != "ok") {
            j["failed_stage"] = failed_stage;
            j["error"]        = error;
        }
        return j;
    }

    void write() const { io::write_json(directory / kManifestName, to_json()); }

    static Manifest load(const std::filesystem::path& manifest_path)
    {
        const io::Json j = io::read_json(manifest_path);
        if (j.value("schema", "") != kManifestSchema) throw IoError(manifest_path.string() + ": not a krod manifest");
        Manifest m;
        m.directory = manifest_path.parent_path();
        m.config    = j.value("config", io::Json::object());
        m.status    = j.value("status", "FAILED");
        m.failed_stage = j.value("failed_stage", "");
        m.error        = j.value("error", "");
        m.notes        = j.value("notes", std::vector<std::string>{});
        m.summary      = j.value("summary", io::Json::object());
        for (const auto& a : j.at("artifacts")) m.artifacts.emplace_back(a.at("path"), a.at("kind"));
        return m;
    }
};

// --- run ---------------------------------------------------------------------

struct RankOutcome {
    int k = 0;
    bool feasible = false;
    std::string status; // "ok" or the rank-deficiency message
    CandidateScore score;
    double orthogonality_error = 0.0; // ||Phi^T Phi - I||_F
    double max_offdiag_mac     = 0.0;
    std::optional<KoopmanTriplet> triplet;
};

struct RunSummary {
    std::filesystem::path manifest_path;
    int chosen_rank = 0;
    std::vector<RankOutcome> ranks;
    SelectionResult selection;
    EvalReport offline;
    std::optional<EvalReport> online;
    std::optional<ValidationReport> validation;
    double seconds = 0.0;
};

using ProgressSink = std::function<void(const std::string&)>;

namespace detail {

inline double offdiag_max(const Matrix& mac)
{
    double m = 0.0;
    for (Eigen::Index j = 0; j < mac.cols(); ++j)
        for (Eigen::Index i = 0; i < mac.rows(); ++i)
            if (i != j) m = std::max(m, mac(i, j));
    return m;
}

[[noreturn]] inline void rethrow_with_stage(const std::string& stage)
{
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(stage + ": " + e.what());
    } catch (const RankDeficiencyError& e) {
        throw RankDeficiencyError(stage + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(stage + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(stage + ": " + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        throw IoError(stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw NumericalError(stage + ": " + e.what());
    }
}

inline void ensure_writable(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ConfigError("output_dir " + dir.string() + " cannot be created: " + ec.message());
    const auto probe = dir / ".krod-write-probe";
    {
        std::ofstream out(probe);
        if (!out) throw ConfigError("output_dir " + dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

inline std::vector<std::string> rank_headers(int k, const char* prefix)
{
    std::vector<std::string> h;
    for (int j = 0; j < k; ++j) h.push_back(prefix + std::to_string(j + 1));
    return h;
}

inline std::vector<std::string> time_headers(Eigen::Index n)
{
    std::vector<std::string> h;
    for (Eigen::Index i = 0; i < n; ++i) h.push_back("t_" + std::to_string(i));
    return h;
}

inline std::string scores_csv(const std::vector<RankOutcome>& ranks, const SelectionResult& sel)
{
    std::string out = "k,E,C,on_front,chosen,status,orthogonality_error,max_offdiag_mac\n";
    for (const auto& r : ranks) {
        out += std::to_string(r.k) + ',';
        if (r.feasible) {
            const bool on_front = std::any_of(sel.front.begin(), sel.front.end(),
                                              [&](const CandidateScore& s) { return s.k == r.k; });
            io::append_double(out, r.score.error);
            out += ',';
            io::append_double(out, r.score.similarity);
            out += on_front ? ",1," : ",0,";
            out += sel.chosen.k == r.k ? "1,ok," : "0,ok,";
            io::append_double(out, r.orthogonality_error);
            out += ',';
            io::append_double(out, r.max_offdiag_mac);
        } else {
            out += ",,0,0,infeasible,,";
        }
        out += '\n';
    }
    return out;
}

} // namespace detail

/// Writes the plot-ready CSVs derived from a run's artifacts and registers
/// them in the manifest.
inline void emit_plot_data(Manifest& m)
{
    const auto& dir = m.directory;
    for (const char* needed : {"scores.csv", "snapshots.csv", "local_error_offline.csv"})
        if (!m.has(needed) || !std::filesystem::exists(dir / needed))
            throw IoError(std::string("emit_plot_data: missing upstream artifact ") + needed);

    // objectives vs rank and the front come straight from scores.csv
    const auto lines = io::lines_of(io::read_text(dir / "scores.csv"));
    std::string objectives = "k,E,C,status\n";
    std::string front      = "k,E,C,chosen\n";
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = io::split(lines[i]);
        if (f.size() < 6) throw IoError("emit_plot_data: malformed scores.csv row " + std::to_string(i));
        objectives += std::string(f[0]) + ',' + std::string(f[1]) + ',' + std::string(f[2]) + ',' + std::string(f[5]) + '\n';
        if (f[3] == "1") front += std::string(f[0]) + ',' + std::string(f[1]) + ',' + std::string(f[2]) + ',' + std::string(f[4]) + '\n';
    }
    io::write_text(dir / "objectives_vs_rank.csv", objectives);
    io::write_text(dir / "pareto_front.csv", front);
    m.add("objectives_vs_rank.csv", "plot");
    m.add("pareto_front.csv", "plot");

    const SnapshotSet snaps = io::snapshots_from_csv(io::read_text(dir / "snapshots.csv"));

    if (m.has("traces_fold1.csv") && m.has("traces_fold2.csv") && m.has("amplitudes.csv")) {
        const Matrix measured = io::read_matrix_csv(dir / "amplitudes.csv", true);
        std::string traces    = "fold,coefficient,step,t,measured,simulated\n";
        for (int fold = 1; fold <= 2; ++fold) {
            const Matrix sim = io::read_matrix_csv(dir / ("traces_fold" + std::to_string(fold) + ".csv"), true);
            if (sim.rows() != measured.rows() || sim.cols() != measured.cols())
                throw IoError("emit_plot_data: fold traces do not match amplitudes");
            for (Eigen::Index j = 0; j < sim.rows(); ++j)
                for (Eigen::Index i = 0; i < sim.cols(); ++i) {
                    traces += std::to_string(fold) + ',' + std::to_string(j + 1) + ',' + std::to_string(i) + ',';
                    io::append_double(traces, snaps.time(i));
                    traces += ',';
                    io::append_double(traces, measured(j, i));
                    traces += ',';
                    io::append_double(traces, sim(j, i));
                    traces += '\n';
                }
        }
        io::write_text(dir / "coefficient_traces.csv", traces);
        m.add("coefficient_traces.csv", "plot");
    } else {
        const std::string note = "coefficient_traces.csv not written: no two-fold validation in this run";
        if (std::find(m.notes.begin(), m.notes.end(), note) == m.notes.end()) m.notes.push_back(note);
    }

    const Matrix offline = io::read_matrix_csv(dir / "local_error_offline.csv", false);
    std::optional<Matrix> online;
    if (m.has("local_error_online.csv")) online = io::read_matrix_csv(dir / "local_error_online.csv", false);
    std::string field = online ? "x,t,offline_error,online_error\n" : "x,t,offline_error\n";
    for (Eigen::Index i = 0; i < offline.cols(); ++i)
        for (Eigen::Index r = 0; r < offline.rows(); ++r) {
            io::append_double(field, snaps.x[static_cast<std::size_t>(r)]);
            field += ',';
            io::append_double(field, snaps.time(i));
            field += ',';
            io::append_double(field, offline(r, i));
            if (online) {
                field += ',';
                io::append_double(field, (*online)(r, i));
            }
            field += '\n';
        }
    io::write_text(dir / "local_error_field.csv", field);
    m.add("local_error_field.csv", "plot");
}

inline RunSummary run_pipeline(const RunConfig& config, const ProgressSink& progress = {})
{
    const auto started = std::chrono::steady_clock::now();
    auto say           = [&](const std::string& s) {
        if (progress) progress(s);
    };

    config.validate();
    detail::ensure_writable(config.output_dir);

    Manifest manifest;
    manifest.directory = config.output_dir;
    manifest.config    = config_to_json(config);
    std::filesystem::remove(config.output_dir / kManifestName);

    RunSummary summary;
    summary.manifest_path = config.output_dir / kManifestName;
    std::string stage;
    const auto& dir = config.output_dir;

    try {
        stage = "generate";
        say("generating snapshots for " + config.experiment_name);
        const SnapshotSet snaps = generate_snapshots(config.experiment);
        io::write_text(dir / "snapshots.csv", io::snapshots_to_csv(snaps));
        io::write_text(dir / "snapshots.bin", io::snapshots_to_blob(snaps));
        manifest.add("snapshots.csv", "snapshots");
        manifest.add("snapshots.bin", "snapshots");

        stage = "decompose";
        const auto [V0, V1] = split_snapshots(snaps.values);
        std::vector<CandidateScore> scores;
        for (int k : config.effective_rank_grid()) {
            RankOutcome r;
            r.k = k;
            try {
                KoopmanTriplet t = krod_offline(V0, V1, k, derive_seed(config.master_seed, "krod", k), config.krod);
                r.feasible       = true;
                r.status         = "ok";
                r.score          = score_candidate(V0, t);
                r.score.triplet_index = summary.ranks.size();
                r.orthogonality_error =
                    (t.modes.transpose() * t.modes - Matrix::Identity(k, k)).norm();
                r.max_offdiag_mac = detail::offdiag_max(mac_matrix(t.modes));
                scores.push_back(r.score);
                r.triplet = std::move(t);
            } catch (const RankDeficiencyError& e) {
                r.status = e.what();
            }
            summary.ranks.push_back(std::move(r));
        }
        if (scores.empty()) throw RankDeficiencyError("no rank in the grid is numerically supported by the data");
        say("decomposed " + std::to_string(scores.size()) + " feasible ranks");

        stage = "select";
        summary.selection  = select_model(scores, config.policy, config.similarity_tolerance);
        summary.chosen_rank = summary.selection.chosen.k;
        io::write_text(dir / "scores.csv", detail::scores_csv(summary.ranks, summary.selection));
        manifest.add("scores.csv", "scores");
        const KoopmanTriplet& chosen = *summary.ranks[summary.selection.chosen.triplet_index].triplet;
        io::write_matrix_csv(dir / "modes.csv", chosen.modes, detail::rank_headers(chosen.rank, "phi_"));
        io::write_matrix_csv(dir / "amplitudes.csv", chosen.amplitudes, detail::time_headers(chosen.amplitudes.cols()));
        io::write_json(dir / "triplet.json", io::triplet_sidecar(chosen));
        manifest.add("modes.csv", "modes");
        manifest.add("amplitudes.csv", "amplitudes");
        manifest.add("triplet.json", "triplet");
        say("selected rank " + std::to_string(summary.chosen_rank));

        stage = "evaluate-offline";
        summary.offline = evaluate(V0, reconstruct(chosen), chosen.modes);
        io::write_matrix_csv(dir / "mac.csv", summary.offline.mac);
        io::write_matrix_csv(dir / "local_error_offline.csv", summary.offline.local_error);
        manifest.add("mac.csv", "metrics");
        manifest.add("local_error_offline.csv", "metrics");

        io::Json eval{{"rank", chosen.rank},
                      {"offline",
                       {{"pearson", summary.offline.pearson},
                        {"mae", summary.offline.mae},
                        {"max_offdiag_mac", detail::offdiag_max(summary.offline.mac)}}}};

        if (config.folds == FoldMode::Twofold) {
            stage = "fit";
            say("fitting " + std::to_string(chosen.rank) + " surrogates");
            const Seed nlarx_seed = derive_seed(config.master_seed, "online");
            const TwinModel twin  = build_twin(chosen, snaps.values.col(0), snaps.t0, snaps.dt, config.nlarx, nlarx_seed);
            io::Json models       = io::Json::array();
            for (const auto& s : twin.surrogates) models.push_back(io::to_json(s));
            io::write_json(dir / "nlarx_models.json",
                           io::Json{{"a0", io::to_json(twin.a0)}, {"t0", twin.t0}, {"dt", twin.dt}, {"models", models}});
            manifest.add("nlarx_models.json", "models");

            stage = "validate";
            say("two-fold validation");
            summary.validation = twofold_validate(twin, chosen.amplitudes, config.nlarx, nlarx_seed);
            std::string vcsv   = "fold,coefficient,fit_percent,rmse\n";
            for (const auto& f : summary.validation->folds) {
                for (std::size_t j = 0; j < f.fit_percent.size(); ++j) {
                    vcsv += std::to_string(f.fold) + ',' + std::to_string(j + 1) + ',';
                    io::append_double(vcsv, f.fit_percent[j]);
                    vcsv += ',';
                    io::append_double(vcsv, f.rmse[j]);
                    vcsv += '\n';
                }
                io::write_matrix_csv(dir / ("traces_fold" + std::to_string(f.fold) + ".csv"), f.simulated,
                                     detail::time_headers(f.simulated.cols()));
                manifest.add("traces_fold" + std::to_string(f.fold) + ".csv", "validation");
            }
            io::write_text(dir / "validation.csv", vcsv);
            manifest.add("validation.csv", "validation");

            stage = "evaluate-online";
            std::vector<double> times;
            for (Eigen::Index i = 0; i < V0.cols(); ++i) times.push_back(snaps.time(i));
            const Matrix online = twin_predict(twin, times);
            summary.online      = evaluate(V0, online, twin.triplet.modes);
            io::write_matrix_csv(dir / "local_error_online.csv", summary.online->local_error);
            manifest.add("local_error_online.csv", "metrics");
            eval["online"] = {{"pearson", summary.online->pearson},
                              {"mae", summary.online->mae},
                              {"fold1_mean_fit_percent", summary.validation->folds[0].mean_fit()},
                              {"fold2_mean_fit_percent", summary.validation->folds[1].mean_fit()},
                              {"fold1_train_end", summary.validation->folds[0].train_end},
                              {"fold2_train_end", summary.validation->folds[1].train_end}};
        } else {
            manifest.notes.push_back("offline_only: surrogate fitting and two-fold validation skipped");
        }
        io::write_json(dir / "eval.json", eval);
        manifest.add("eval.json", "metrics");
        manifest.summary = eval;

        stage = "plot";
        emit_plot_data(manifest);
        manifest.write();
    } catch (...) {
        manifest.status       = "FAILED";
        manifest.failed_stage = stage;
        try {
            throw;
        } catch (const std::exception& e) {
            manifest.error = e.what();
        }
        try {
            manifest.write();
        } catch (...) {
        }
        detail::rethrow_with_stage(stage);
    }

    summary.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return summary;
}

// --- validate ------------------------------------------------------------------

struct ValidationIssue {
    bool checksum = false; // true: integrity problem, false: invariant violation
    std::string message;
};

/// Re-checks every checksum, that every file in the run directory is listed,
/// and the structural invariants of the persisted artifacts.
inline std::vector<ValidationIssue> validate_manifest(const std::filesystem::path& manifest_path)
{
    std::vector<ValidationIssue> issues;
    const io::Json j   = io::read_json(manifest_path);
    const auto dir     = manifest_path.parent_path();
    std::set<std::string> listed;
    for (const auto& a : j.at("artifacts")) {
        const std::string name = a.at("path");
        listed.insert(name);
        if (!std::filesystem::exists(dir / name)) {
            issues.push_back({true, name + ": missing"});
            continue;
        }
        if (sha256_file(dir / name) != a.at("sha256").get<std::string>())
            issues.push_back({true, name + ": checksum mismatch"});
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name == kManifestName) continue;
        if (!listed.count(name)) issues.push_back({true, name + ": present but not listed in the manifest"});
    }
    if (j.value("status", "") != "ok") {
        issues.push_back({false, "run status is " + j.value("status", std::string("?")) + " at stage " +
                                     j.value("failed_stage", std::string("?"))});
        return issues;
    }
    if (!issues.empty()) return issues;

    // modes orthonormal, MAC off-diagonal small
    const Matrix modes = io::read_matrix_csv(dir / "modes.csv", true);
    const double ortho = (modes.transpose() * modes - Matrix::Identity(modes.cols(), modes.cols())).norm();
    if (!(ortho <= 1e-10)) issues.push_back({false, "modes.csv: ||Phi^T Phi - I||_F = " + io::format_double(ortho)});
    const double mac = detail::offdiag_max(mac_matrix(modes));
    if (!(mac <= 1e-8)) issues.push_back({false, "modes.csv: max off-diagonal MAC = " + io::format_double(mac)});

    // front members undominated, exactly one chosen
    const auto lines = io::lines_of(io::read_text(dir / "scores.csv"));
    std::vector<CandidateScore> feasible;
    std::vector<int> front_ks;
    int chosen = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = io::split(lines[i]);
        if (f.size() < 6 || f[5] != "ok") continue;
        CandidateScore s;
        s.k          = std::stoi(std::string(f[0]));
        s.error      = io::parse_double(f[1], "scores.csv");
        s.similarity = io::parse_double(f[2], "scores.csv");
        feasible.push_back(s);
        if (f[3] == "1") front_ks.push_back(s.k);
        if (f[4] == "1") ++chosen;
    }
    if (chosen != 1) issues.push_back({false, "scores.csv: expected exactly one chosen rank"});
    std::vector<int> expected;
    for (const auto& s : pareto_front(feasible)) expected.push_back(s.k);
    if (expected != front_ks) issues.push_back({false, "scores.csv: on_front flags disagree with dominance"});

    const Matrix amps = io::read_matrix_csv(dir / "amplitudes.csv", true);
    if (amps.rows() != modes.cols()) issues.push_back({false, "amplitudes.csv: row count differs from mode count"});
    return issues;
}

} // namespace krod
