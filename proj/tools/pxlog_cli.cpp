// pxlog: simulate gameplay telemetry, validate .pxlog files, and run the
// analysis pipeline (clean -> endpoints -> stats -> trajectory -> report).

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pxlog/errors.hpp"
#include "pxlog/log_io.hpp"
#include "pxlog/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pxlog;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStat = 3;
constexpr int kExitIo = 4;

int dispatch(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const StatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitStat;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PixelLOG-style gameplay telemetry: simulation and analysis pipeline"};
    app.require_subcommand(1);

    // ---- simulate ----
    std::string sim_cohort, sim_out;
    std::uint64_t sim_seed = 0;
    auto* sim = app.add_subcommand("simulate", "Generate synthetic sessions from a cohort spec");
    sim->add_option("--cohort", sim_cohort, "Cohort spec JSON")->required();
    sim->add_option("--out", sim_out, "Output directory")->required();
    sim->add_option("--seed", sim_seed, "Master seed")->required();

    // ---- validate ----
    std::vector<std::string> val_files;
    auto* val = app.add_subcommand("validate", "Validate .pxlog files (exit 2 on first violation)");
    val->add_option("files", val_files, "Files to check")->required();

    // ---- clean ----
    std::string clean_logs, clean_out;
    CleaningConfig clean_cfg;
    bool clean_all_trials = false;
    auto* cln = app.add_subcommand("clean", "Outlier exclusion over per-trial endpoints");
    cln->add_option("--logs", clean_logs, "Directory of .pxlog files")->required();
    cln->add_option("--out", clean_out, "Output directory")->required();
    cln->add_option("--cutoff", clean_cfg.max_cutoff_s, "Step-1 cutoff, seconds");
    cln->add_option("--session-loss", clean_cfg.session_loss_threshold, "Step-2 session fraction");
    cln->add_option("--log-mad", clean_cfg.log_mad_multiplier, "Step-3 log-MAD multiplier");
    cln->add_flag("--all-trials", clean_all_trials, "Include error trials (default: correct only)");

    // ---- endpoints ----
    std::string ep_logs, ep_clean, ep_out, ep_external;
    auto* ep = app.add_subcommand("endpoints", "Session endpoint table (mean RT/gRT, RR thresholds)");
    ep->add_option("--logs", ep_logs, "Directory of .pxlog files")->required();
    ep->add_option("--clean", ep_clean, "Directory holding trials_rt.csv / trials_grt.csv")->required();
    ep->add_option("--out", ep_out, "Output CSV path")->required();
    ep->add_option("--external", ep_external, "External scores CSV to merge");

    // ---- stats ----
    std::string st_endpoints, st_pairs, st_out;
    bool st_no_filter = false;
    double st_ratio = 3.5;
    auto* st = app.add_subcommand("stats", "Correlations, Bayes factors, and test-retest ICCs");
    st->add_option("--endpoints", st_endpoints, "Endpoint table CSV")->required();
    st->add_option("--pairs", st_pairs, "Pairing spec JSON (array of pair objects)");
    st->add_option("--out", st_out, "Output directory")->required();
    st->add_flag("--no-participant-filter", st_no_filter, "Skip the participant-level MAD screen");
    st->add_option("--participant-mad-ratio", st_ratio, "Participant-level MAD ratio");

    // ---- trajectory ----
    std::string tj_logs, tj_out;
    std::uint64_t tj_seed = 0;
    double tj_lateral = 0.5;
    EmbedParams tj_embed;
    ClusterParams tj_cluster;
    auto* tj = app.add_subcommand("trajectory", "NK movement clustering and player identification");
    tj->add_option("--logs", tj_logs, "Directory of .pxlog files")->required();
    tj->add_option("--out", tj_out, "Output directory")->required();
    tj->add_option("--seed", tj_seed, "Embedding seed")->required();
    tj->add_option("--lateral-threshold", tj_lateral, "Direct/indirect threshold, blocks");
    tj->add_option("--neighbors", tj_embed.n_neighbors, "Embedding neighborhood size");
    tj->add_option("--min-dist", tj_embed.min_dist, "Embedding minimum distance");
    tj->add_option("--epochs", tj_embed.n_epochs, "Embedding SGD epochs");
    tj->add_option("--eps", tj_cluster.eps, "DBSCAN eps");
    tj->add_option("--min-samples", tj_cluster.min_samples, "DBSCAN min samples");

    // ---- report ----
    std::string rp_bundle, rp_out;
    auto* rp = app.add_subcommand("report", "Merge prior stage outputs into report.json");
    rp->add_option("--bundle", rp_bundle, "Bundle directory")->required();
    rp->add_option("--out", rp_out, "Output JSON path")->required();

    // ---- run ----
    std::string run_config, run_out;
    std::optional<std::uint64_t> run_seed;
    auto* rn = app.add_subcommand("run", "Full pipeline from a config file");
    rn->add_option("--config", run_config, "Pipeline config JSON")->required();
    rn->add_option("--out", run_out, "Bundle output directory")->required();
    rn->add_option("--seed", run_seed, "Override the config seed");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        return dispatch([&] {
            stage_simulate(load_cohort_spec(sim_cohort), sim_seed, sim_out);
            std::printf("wrote %s/logs + ground_truth.json\n", sim_out.c_str());
        });
    }
    if (val->parsed()) {
        return dispatch([&] {
            for (const auto& f : val_files) {
                read_logfile(f);
                std::printf("%s: OK\n", f.c_str());
            }
        });
    }
    if (cln->parsed()) {
        return dispatch([&] { stage_clean(clean_logs, clean_cfg, !clean_all_trials, clean_out); });
    }
    if (ep->parsed()) {
        return dispatch([&] {
            std::optional<fs::path> ext;
            if (!ep_external.empty()) ext = fs::path(ep_external);
            stage_endpoints(ep_logs, ep_clean, ext, ep_out);
        });
    }
    if (st->parsed()) {
        return dispatch([&] {
            std::vector<PairingSpec> pairs;
            if (!st_pairs.empty()) pairs = load_pairs(st_pairs);
            stage_stats(st_endpoints, pairs, !st_no_filter, st_ratio, st_out);
        });
    }
    if (tj->parsed()) {
        return dispatch(
            [&] { stage_trajectory(tj_logs, tj_lateral, tj_embed, tj_cluster, tj_seed, tj_out); });
    }
    if (rp->parsed()) {
        return dispatch([&] { stage_report(rp_bundle, rp_out); });
    }
    if (rn->parsed()) {
        return dispatch([&] {
            PipelineConfig cfg = load_pipeline_config(run_config);
            if (run_seed) cfg.seed = *run_seed;
            run_pipeline(cfg, run_out);
            std::printf("bundle written to %s\n", run_out.c_str());
        });
    }
    return 0;
}
