#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pxlog/log_io.hpp"

namespace pxlog {

struct TrajSample {
    double t_s{0.0};  // seconds from trial start
    double x{0.0};
    double z{0.0};
    double yaw{0.0};  // unwrapped degrees (continuous across +-180)
};

/// Canonicalized per-trial movement record. Left-selection trials are mirrored
/// about the z axis (x -> -x, yaw -> -yaw, target x -> -target x) so every
/// selected target is effectively right-sided.
struct Trajectory {
    std::vector<TrajSample> samples;
    std::vector<std::optional<std::string>> viewed;  // parallel gaze channel
    double target_x{0.0};
    double target_z{0.0};
    Side selected_side{Side::right};
    bool mirrored{false};
};

// nullopt = rejected (fewer than two valid samples). Only NK segments are
// meaningful input; other games throw.
std::optional<Trajectory> canonicalize(const TrialSegment& seg);

// Fixed-length resample via linear interpolation, uniform in normalized time;
// endpoints preserved exactly, idempotent when the input is already uniform of
// the same length.
Trajectory resample(const Trajectory& traj, int length = 120);

/// Signed angular difference between gaze direction and direction-to-target,
/// plus its sine and cosine, per sample.
struct HeadingSeries {
    std::vector<double> heading_deg;
    std::vector<double> sin_h;
    std::vector<double> cos_h;
};

HeadingSeries heading_series(const Trajectory& traj);

inline constexpr int kFeatureCount = 27;
using FeatureVector = std::array<double, kFeatureCount>;
extern const std::array<const char*, kFeatureCount> kFeatureNames;

// The fixed 27-feature summary of a canonicalized, resampled trajectory.
// Time-index features are fractions of the resampled length in [0, 1].
FeatureVector features27(const Trajectory& resampled, const HeadingSeries& heading);

// Largest unsigned perpendicular distance of any sample from the straight
// start -> target line.
double max_lateral_deviation(const Trajectory& traj);

enum class TrialType { DG, IG, DN, IN };
const char* to_string(TrialType t);
TrialType trial_type_from_string(const std::string& s);

// Direct iff the path never leaves the start -> target corridor by more than
// lateral_threshold; gaze iff the endpoints module flagged a stable fixation.
TrialType classify_trial(const Trajectory& canon, double lateral_threshold, bool fixated);

struct SessionProfile {
    std::array<double, 4> p{0, 0, 0, 0};  // DG, IG, DN, IN proportions

    friend bool operator==(const SessionProfile&, const SessionProfile&) = default;
};

SessionProfile session_profile(const std::vector<TrialType>& types);

// Jensen-Shannon distance with base-2 logs: sqrt of the JS divergence,
// a [0, 1] metric on the 4-simplex.
double jsd(const SessionProfile& a, const SessionProfile& b);

struct IdentifyResult {
    std::vector<std::string> players;            // row/column order
    std::vector<std::vector<double>> matrix;     // row-normalized percentages
    double mean_diagonal{0.0};                   // percent
    bool had_ties{false};
};

// Rank-by-JSD weighted voting: each session gives 1.0 to the nearest player
// average (leave-one-session-out), plus 0.5 / 0.3 to the true player at rank
// 2 / 3; rows aggregate by true player and normalize to 100%.
IdentifyResult identify(const std::vector<std::pair<std::string, SessionProfile>>& sessions);

}  // namespace pxlog
