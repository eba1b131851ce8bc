#include "pxlog/cleaning.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pxlog/errors.hpp"

namespace pxlog {

double median(std::vector<double> v) {
    if (v.empty()) throw StatError("median of empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double robust_scale(const std::vector<double>& v, double center) {
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::fabs(v[i] - center);
    const double mad = median(dev);
    if (mad > 0.0) return 1.4826 * mad;
    double sum = 0.0;
    for (const double d : dev) sum += d;
    const double mean_ad = sum / static_cast<double>(dev.size());
    if (mean_ad > 0.0) return 1.253314 * mean_ad;  // sqrt(pi/2) consistency constant
    return 0.0;
}

CleanResult clean_sessions(const std::vector<SessionEndpoints>& sessions, const CleaningConfig& cfg) {
    if (sessions.empty()) throw StatError("clean_sessions: no sessions given");
    for (const auto& s : sessions) {
        if (s.trial_index.size() != s.values_s.size())
            throw StatError("clean_sessions: trial_index / values_s length mismatch in session '" +
                            s.session_id + "'");
        for (const double v : s.values_s)
            if (!(v > 0.0))
                throw StatError("clean_sessions: non-positive endpoint value in session '" + s.session_id +
                                "'");
    }

    CleanResult out;
    struct Tally {
        long trials_total = 0, trials_lost = 0, sessions_total = 0, sessions_lost = 0;
    };
    std::map<std::string, Tally> tallies;

    for (const auto& s : sessions) {
        SessionDisposition disp;
        disp.participant = s.participant;
        disp.session_id = s.session_id;
        disp.assessment = s.assessment;

        auto& tally = tallies[s.assessment];
        const long n = static_cast<long>(s.values_s.size());
        tally.trials_total += n;
        tally.sessions_total += 1;

        // step 1: mark over-cutoff trials
        for (std::size_t i = 0; i < s.values_s.size(); ++i)
            if (s.values_s[i] > cfg.max_cutoff_s) disp.cutoff_trials.push_back(s.trial_index[i]);

        // step 2: whole-session removal by over-cutoff fraction
        if (n > 0 && static_cast<double>(disp.cutoff_trials.size()) / static_cast<double>(n) >
                         cfg.session_loss_threshold) {
            disp.session_dropped = true;
            tally.sessions_lost += 1;
            tally.trials_lost += n;
            out.dispositions.push_back(std::move(disp));
            continue;
        }
        tally.trials_lost += static_cast<long>(disp.cutoff_trials.size());

        SessionEndpoints kept;
        kept.participant = s.participant;
        kept.session_id = s.session_id;
        kept.assessment = s.assessment;
        std::vector<double> logs;
        for (std::size_t i = 0; i < s.values_s.size(); ++i) {
            if (s.values_s[i] > cfg.max_cutoff_s) continue;
            kept.trial_index.push_back(s.trial_index[i]);
            kept.values_s.push_back(s.values_s[i]);
            logs.push_back(std::log(s.values_s[i]));
        }

        // step 3: per-session log-MAD screen on the remaining trials
        if (!logs.empty()) {
            const double med = median(logs);
            const double scale = robust_scale(logs, med);
            if (scale > 0.0) {
                SessionEndpoints screened;
                screened.participant = kept.participant;
                screened.session_id = kept.session_id;
                screened.assessment = kept.assessment;
                for (std::size_t i = 0; i < logs.size(); ++i) {
                    if (std::fabs(logs[i] - med) > cfg.log_mad_multiplier * scale) {
                        disp.log_mad_trials.push_back(kept.trial_index[i]);
                        tally.trials_lost += 1;
                    } else {
                        screened.trial_index.push_back(kept.trial_index[i]);
                        screened.values_s.push_back(kept.values_s[i]);
                    }
                }
                kept = std::move(screened);
            }
        }

        if (!kept.values_s.empty()) out.kept.push_back(std::move(kept));
        out.dispositions.push_back(std::move(disp));
    }

    for (const auto& [assessment, tally] : tallies) {
        ExclusionRow row;
        row.assessment = assessment;
        row.trials_total = tally.trials_total;
        row.trials_lost = tally.trials_lost;
        row.trials_lost_pct =
            tally.trials_total ? 100.0 * static_cast<double>(tally.trials_lost) /
                                     static_cast<double>(tally.trials_total)
                               : 0.0;
        row.sessions_total = tally.sessions_total;
        row.sessions_lost = tally.sessions_lost;
        row.sessions_lost_pct =
            tally.sessions_total ? 100.0 * static_cast<double>(tally.sessions_lost) /
                                       static_cast<double>(tally.sessions_total)
                                 : 0.0;
        out.report.rows.push_back(std::move(row));
    }
    return out;
}

std::vector<double> participant_outlier_filter(const std::vector<double>& values, double ratio) {
    if (values.size() < 3)
        throw StatError("participant_outlier_filter: need >= 3 values, got " +
                        std::to_string(values.size()));
    const double med = median(values);
    const double scale = robust_scale(values, med);
    if (scale <= 0.0) return values;  // fully degenerate: nothing to flag
    std::vector<double> kept;
    kept.reserve(values.size());
    for (const double v : values)
        if (std::fabs(v - med) / scale <= ratio) kept.push_back(v);
    return kept;
}

}  // namespace pxlog
