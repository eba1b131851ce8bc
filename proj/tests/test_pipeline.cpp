#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pxlog/errors.hpp"
#include "pxlog/pipeline.hpp"

using namespace pxlog;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("pxlog_test_" + tag)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

PipelineConfig small_config() {
    PipelineConfig cfg;
    cfg.seed = 424242;
    cfg.cohort.games = {Game::NK, Game::RR};
    for (int p = 0; p < 4; ++p) {
        CohortPlayer pl;
        pl.id = "p0" + std::to_string(p);
        pl.sessions = 2;
        pl.params.error_rate = 0.04 * p;
        pl.params.latency_log_mean = 6.6 + 0.15 * p;
        if (p % 2 == 1) {
            pl.params.path_style = PathStyle::indirect;
            pl.params.lateral_amplitude = 2.0;
        }
        if (p >= 2) pl.params.gaze_policy = GazePolicy::no_fix;
        cfg.cohort.players.push_back(std::move(pl));
    }
    cfg.cluster.min_samples = 10;  // desk-size cohort
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("run_pipeline produces the full bundle and is byte-reproducible") {
    TempDir tmp("bundle");
    const PipelineConfig cfg = small_config();
    run_pipeline(cfg, tmp.path / "a");
    run_pipeline(cfg, tmp.path / "b");

    const std::vector<std::string> artifacts = {
        "ground_truth.json",  "trials_rt.csv",      "trials_grt.csv",
        "exclusion_rt.csv",   "exclusion_grt.csv",  "endpoints.csv",
        "correlations.csv",   "icc.csv",            "report.json",
        "manifest.json",      "config.json",        "trajectory/features.csv",
        "trajectory/embedding.csv", "trajectory/clusters.csv", "trajectory/profiles.json",
        "trajectory/confusion.csv", "trajectory/trajectory_summary.json",
    };
    for (const auto& rel : artifacts) {
        CAPTURE(rel);
        REQUIRE(fs::exists(tmp.path / "a" / rel));
        CHECK(slurp(tmp.path / "a" / rel) == slurp(tmp.path / "b" / rel));
    }
    // same number of log files, byte-identical
    for (const auto& f : list_pxlog_files(tmp.path / "a" / "logs")) {
        const fs::path twin = tmp.path / "b" / "logs" / f.filename();
        REQUIRE(fs::exists(twin));
        CHECK(slurp(f) == slurp(twin));
    }
}

TEST_CASE("stage composition equals the orchestrated run") {
    TempDir tmp("stages");
    const PipelineConfig cfg = small_config();
    run_pipeline(cfg, tmp.path / "whole");

    const fs::path piecewise = tmp.path / "piecewise";
    fs::create_directories(piecewise);
    stage_simulate(cfg.cohort, cfg.seed, piecewise);
    stage_clean(piecewise / "logs", cfg.cleaning, cfg.rt_correct_only, piecewise);
    stage_endpoints(piecewise / "logs", piecewise, std::nullopt, piecewise / "endpoints.csv");
    stage_stats(piecewise / "endpoints.csv", cfg.pairs, cfg.participant_filter,
                cfg.cleaning.participant_mad_ratio, piecewise);
    stage_trajectory(piecewise / "logs", cfg.lateral_threshold, cfg.embed, cfg.cluster, cfg.seed,
                     piecewise / "trajectory");

    for (const auto& rel : {"trials_rt.csv", "trials_grt.csv", "exclusion_rt.csv", "endpoints.csv",
                            "correlations.csv", "icc.csv", "trajectory/confusion.csv"}) {
        CAPTURE(rel);
        CHECK(slurp(tmp.path / "whole" / rel) == slurp(piecewise / rel));
    }
}

TEST_CASE("aborted runs name the stage and clean up partial output") {
    TempDir tmp("abort");
    PipelineConfig cfg = small_config();
    cfg.external_scores = tmp.path / "missing.csv";  // endpoints stage will fail
    try {
        run_pipeline(cfg, tmp.path / "bundle");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("stage endpoints") != std::string::npos);
        CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(tmp.path / "bundle"));
}

TEST_CASE("run_pipeline refuses a non-empty output directory") {
    TempDir tmp("nonempty");
    fs::create_directories(tmp.path / "bundle");
    std::ofstream(tmp.path / "bundle" / "junk.txt") << "x";
    CHECK_THROWS_AS(run_pipeline(small_config(), tmp.path / "bundle"), IoError);
}

TEST_CASE("config round-trips through JSON with a stable hash") {
    TempDir tmp("config");
    fs::create_directories(tmp.path);
    const PipelineConfig cfg = small_config();
    const std::string canon = config_canonical_json(cfg);
    std::ofstream(tmp.path / "cfg.json") << canon;
    const PipelineConfig back = load_pipeline_config(tmp.path / "cfg.json");
    CHECK(config_canonical_json(back) == canon);
    CHECK(fnv1a_hex(canon) == fnv1a_hex(config_canonical_json(back)));
    CHECK(back.seed == cfg.seed);
    CHECK(back.cohort.players.size() == cfg.cohort.players.size());
    CHECK(back.cluster.min_samples == cfg.cluster.min_samples);
}

TEST_CASE("a pipeline config without a seed is rejected") {
    TempDir tmp("noseed");
    fs::create_directories(tmp.path);
    std::ofstream(tmp.path / "cfg.json") << "{\"cohort\": {\"players\": [{\"id\": \"p\"}]}}";
    CHECK_THROWS_AS(load_pipeline_config(tmp.path / "cfg.json"), ValidationError);
}

TEST_CASE("ground truth sidecar round-trips") {
    TempDir tmp("truth");
    fs::create_directories(tmp.path);
    const auto res = simulate_cohort(small_config().cohort, 5);
    save_ground_truth(res.truths, tmp.path / "gt.json");
    const auto back = load_ground_truth(tmp.path / "gt.json");
    REQUIRE(back.size() == res.truths.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].session_id == res.truths[i].session_id);
        REQUIRE(back[i].trials.size() == res.truths[i].trials.size());
        for (std::size_t t = 0; t < back[i].trials.size(); ++t) {
            CHECK(back[i].trials[t].decision_ms ==
                  doctest::Approx(res.truths[i].trials[t].decision_ms));
            CHECK(back[i].trials[t].gaze_commit_ms.has_value() ==
                  res.truths[i].trials[t].gaze_commit_ms.has_value());
            CHECK(back[i].trials[t].planted_type == res.truths[i].trials[t].planted_type);
        }
    }
}

TEST_CASE("external scores flow into the endpoint table and pairings") {
    TempDir tmp("external");
    fs::create_directories(tmp.path);
    PipelineConfig cfg = small_config();
    cfg.cohort.games = {Game::NK};

    // external scores correlated with each participant's index
    std::ofstream ext(tmp.path / "ext.csv");
    ext << "participant,task,form,kind,value\n";
    for (int p = 0; p < 4; ++p)
        ext << "p0" << p << ",PCPS,,RT," << 0.8 + 0.1 * p << "\n";
    ext.close();
    cfg.external_scores = tmp.path / "ext.csv";
    cfg.pairs.push_back({"NK", EndpointKind::rt, "PCPS", "", EndpointKind::rt});
    cfg.participant_filter = false;  // four points: keep them all

    run_pipeline(cfg, tmp.path / "bundle");
    const std::string corr = slurp(tmp.path / "bundle" / "correlations.csv");
    CHECK(corr.find("NK,RT,PCPS,,RT,") != std::string::npos);
    // n = 4 complete participants
    CHECK(corr.find(",4,") != std::string::npos);
}
