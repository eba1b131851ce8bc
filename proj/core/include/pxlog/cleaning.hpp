#pragma once

#include <string>
#include <vector>

namespace pxlog {

struct CleaningConfig {
    double max_cutoff_s{10.0};           // step 1: hard endpoint cutoff, seconds
    double session_loss_threshold{0.25}; // step 2: drop session if > this fraction is over cutoff
    double log_mad_multiplier{3.0};      // step 3: per-session log-MAD threshold
    double participant_mad_ratio{3.5};   // participant-level MAD ratio
};

/// Per-trial endpoint values for one session of one assessment.
struct SessionEndpoints {
    std::string participant;
    std::string session_id;
    std::string assessment;  // e.g. "NK", "DD", "BB"
    std::vector<int> trial_index;
    std::vector<double> values_s;
};

struct SessionDisposition {
    std::string participant;
    std::string session_id;
    std::string assessment;
    bool session_dropped{false};        // step 2
    std::vector<int> cutoff_trials;     // step 1 (trial indices)
    std::vector<int> log_mad_trials;    // step 3
};

struct ExclusionRow {
    std::string assessment;
    long trials_total{0};
    long trials_lost{0};
    double trials_lost_pct{0.0};
    long sessions_total{0};
    long sessions_lost{0};
    double sessions_lost_pct{0.0};
};

struct ExclusionReport {
    std::vector<ExclusionRow> rows;  // one per assessment, sorted by name
};

struct CleanResult {
    std::vector<SessionEndpoints> kept;
    std::vector<SessionDisposition> dispositions;
    ExclusionReport report;
};

// Step 1: drop trials over the cutoff. Step 2: drop whole sessions whose
// over-cutoff fraction exceeds the threshold (all of their trials count as
// lost). Step 3: within each surviving session, drop trials whose log value
// sits more than multiplier x robust-scale from the session's log median.
// Values must be positive; an empty session list is an error.
CleanResult clean_sessions(const std::vector<SessionEndpoints>& sessions, const CleaningConfig& cfg);

// Participant-level screen: removes values with |v - median| / scale > ratio.
// Needs >= 3 values. A fully degenerate spread removes nothing.
std::vector<double> participant_outlier_filter(const std::vector<double>& values, double ratio = 3.5);

double median(std::vector<double> v);

// Robust dispersion around `center`: 1.4826 * MAD; when the MAD degenerates to
// zero with spread still present, falls back to sqrt(pi/2)-scaled mean
// absolute deviation; returns 0 only when every value equals the center.
double robust_scale(const std::vector<double>& v, double center);

}  // namespace pxlog
