#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pxlog/log_io.hpp"

namespace pxlog {

/// Two-parameter logistic fit: p(d) = 1 / (1 + exp((d - theta) / sigma)),
/// success probability decreasing in difficulty d. theta is the 50% point,
/// sigma the spread. capped marks a theta pinned at (max level + 0.5) or
/// (min level - 0.5) when the data carry no crossing information.
struct PsychFit {
    double theta{0.0};
    double sigma{1.0};
    double rmse{0.0};
    bool capped{false};
};

enum class EndpointKind { rt, grt, theta };

const char* to_string(EndpointKind k);
EndpointKind endpoint_kind_from_string(const std::string& s);

struct EndpointRow {
    std::string participant;
    std::string session;  // empty for one-shot external scores
    std::string task;     // game code or external task name
    std::string form;     // external form tag ("1", "2", ...), empty for games
    EndpointKind kind{EndpointKind::rt};
    double value{0.0};
    int n_trials{0};  // 0 when not applicable
};

// Classical response time: (end_t - start_t) in seconds; end_t is the response
// moment by the trial-window convention. Timeout trials have no RT.
double trial_rt_seconds(const TrialRecord& tr);

// Flag, not a filter: sub-100 ms responses are implausible but dropping them
// is the cleaning stage's call.
inline bool rt_implausible(double rt_s) { return rt_s < 0.1; }

struct GazeRt {
    double seconds{0.0};
    bool fixated{false};
};

// Earliest sample time from which the viewed target equals the selected target
// on every sample through the response; falls back to (trial RT, false) when
// no such run exists. Errors if the segment has no viewed-target channel or no
// selected target.
GazeRt gaze_rt(const TrialSegment& seg);

// Least-squares 2PL fit over per-level success proportions (unweighted), by
// Levenberg-Marquardt with box projection: theta within
// [min level - 0.5, max level + 0.5], sigma >= 0.05. Needs >= 2 distinct
// levels. On convergence trouble the fit restarts from a jittered empirical
// 50% point.
PsychFit fit_2pl(const std::vector<std::pair<double, bool>>& trials);

// CSV columns: participant,task,form,kind,value. Duplicate
// (participant, task, form, kind) rows or missing cells are errors.
std::vector<EndpointRow> ingest_external_scores(std::istream& csv);

}  // namespace pxlog
