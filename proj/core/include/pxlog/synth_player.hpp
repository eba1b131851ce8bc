#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pxlog/log_model.hpp"

namespace pxlog {

enum class PathStyle { direct, indirect };
enum class GazePolicy { early_fix, late_fix, no_fix };

const char* to_string(PathStyle s);
const char* to_string(GazePolicy g);
PathStyle path_style_from_string(const std::string& s);
GazePolicy gaze_policy_from_string(const std::string& s);

/// Behavioral parameters of a simulated player. The enum fields pick the
/// modal behavior; indirect_prob / fix_prob make a player a per-trial mixture
/// (negative means "derive from the enum"), which is what gives different
/// players distinguishable trial-type profiles.
struct AgentParams {
    double latency_log_mean{6.8024};  // log-ms, exp() ~ 900 ms
    double latency_log_sd{0.4};
    double error_rate{0.0};
    double move_speed{4.3};  // blocks/s
    PathStyle path_style{PathStyle::direct};
    double lateral_amplitude{2.0};  // detour offset, blocks (indirect trials)
    GazePolicy gaze_policy{GazePolicy::early_fix};
    double lapse_rate{0.0};  // probability of a >10 s stall before responding
    double indirect_prob{-1.0};
    double fix_prob{-1.0};

    double resolved_indirect_prob() const {
        return indirect_prob >= 0.0 ? indirect_prob : (path_style == PathStyle::indirect ? 1.0 : 0.0);
    }
    double resolved_fix_prob() const {
        return fix_prob >= 0.0 ? fix_prob : (gaze_policy == GazePolicy::no_fix ? 0.0 : 1.0);
    }
};

/// Per-trial generative truth, the oracle for the analysis modules.
struct TrialTruth {
    int trial_index{0};
    double decision_ms{0.0};  // deliberation end relative to trial start
    std::optional<double> gaze_commit_ms;  // continuous stable-alignment onset
    std::optional<std::string> planted_type;  // "DG"|"IG"|"DN"|"IN", NK only
    bool planted_correct{true};
    bool lapse{false};
    double rt_ms{0.0};  // realized response latency (timeout duration if timed out)
    bool timed_out{false};
};

struct GroundTruth {
    std::string session_id;
    std::string player;
    Game game{Game::NK};
    std::vector<TrialTruth> trials;
};

std::pair<LogFile, GroundTruth> simulate_session(Game game, const AgentParams& params,
                                                 std::uint64_t seed, const std::string& player = "p0",
                                                 int session_index = 0, const TrialTiming& timing = {});

struct CohortPlayer {
    std::string id;
    AgentParams params;
    int sessions{1};
};

struct CohortSpec {
    std::vector<CohortPlayer> players;
    std::vector<Game> games{Game::NK};
};

struct CohortResult {
    std::vector<LogFile> logs;
    std::vector<GroundTruth> truths;
};

// Deterministic: per-(player, session, game) seeds derive from the master seed
// and the player id, so a cohort spec + seed pins every byte of output.
CohortResult simulate_cohort(const CohortSpec& spec, std::uint64_t master_seed);

}  // namespace pxlog
