#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pxlog/cleaning.hpp"
#include "pxlog/embedding.hpp"
#include "pxlog/endpoints.hpp"
#include "pxlog/synth_player.hpp"

namespace pxlog {

struct PairingSpec {
    std::string game;  // game task code on the left
    EndpointKind game_kind{EndpointKind::rt};
    std::string task;  // external task on the right
    std::string form;
    EndpointKind task_kind{EndpointKind::rt};
};

struct PipelineConfig {
    CohortSpec cohort;
    std::uint64_t seed{0};
    CleaningConfig cleaning;
    bool rt_correct_only{true};
    bool participant_filter{true};
    std::optional<std::filesystem::path> external_scores;
    std::vector<PairingSpec> pairs;
    EmbedParams embed;
    ClusterParams cluster;
    double lateral_threshold{0.5};
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
CohortSpec load_cohort_spec(const std::filesystem::path& path);
std::vector<PairingSpec> load_pairs(const std::filesystem::path& path);

// Canonical JSON rendering of the effective config; its FNV-1a hash goes into
// the manifest so a bundle pins its own recipe.
std::string config_canonical_json(const PipelineConfig& cfg);
std::string fnv1a_hex(const std::string& bytes);

void save_ground_truth(const std::vector<GroundTruth>& truths, const std::filesystem::path& path);
std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path);

// Logs in a directory, ordered by filename (deterministic).
std::vector<std::filesystem::path> list_pxlog_files(const std::filesystem::path& dir);
std::vector<LogFile> load_logs(const std::filesystem::path& dir);

// ---- stages (file in, file out; run_pipeline is their composition) ----

// simulate: <out>/logs/*.pxlog + <out>/ground_truth.json
void stage_simulate(const CohortSpec& cohort, std::uint64_t seed, const std::filesystem::path& out_dir);

// clean: trials_rt.csv / trials_grt.csv (kept trials) and
// exclusion_rt.csv / exclusion_grt.csv (per-assessment accounting)
void stage_clean(const std::filesystem::path& logs_dir, const CleaningConfig& cfg,
                 bool rt_correct_only, const std::filesystem::path& out_dir);

// endpoints: endpoints.csv (session means + RR psychometric thresholds,
// merged with optional external scores)
void stage_endpoints(const std::filesystem::path& logs_dir, const std::filesystem::path& clean_dir,
                     const std::optional<std::filesystem::path>& external_scores,
                     const std::filesystem::path& out_csv);

// stats: correlations.csv + icc.csv
void stage_stats(const std::filesystem::path& endpoints_csv, const std::vector<PairingSpec>& pairs,
                 bool participant_filter, double participant_mad_ratio,
                 const std::filesystem::path& out_dir);

// trajectory: features.csv, embedding.csv, clusters.csv, profiles.json,
// confusion.csv under <out>/trajectory/
void stage_trajectory(const std::filesystem::path& logs_dir, double lateral_threshold,
                      const EmbedParams& embed, const ClusterParams& cluster, std::uint64_t seed,
                      const std::filesystem::path& out_dir);

// report: merges the bundle's tables into report.json without recomputation
void stage_report(const std::filesystem::path& bundle_dir, const std::filesystem::path& out_json);

// The whole thing: simulate -> validate -> clean -> endpoints -> stats ->
// trajectory -> report + manifest.json. Aborts name the failing stage; a
// failed run removes the partially written bundle.
void run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace pxlog
