#include "pxlog/endpoints.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>

#include "pxlog/csv.hpp"
#include "pxlog/errors.hpp"
#include "pxlog/rng.hpp"

namespace pxlog {

const char* to_string(EndpointKind k) {
    switch (k) {
        case EndpointKind::rt: return "RT";
        case EndpointKind::grt: return "gRT";
        case EndpointKind::theta: return "theta";
    }
    return "?";
}

EndpointKind endpoint_kind_from_string(const std::string& s) {
    if (s == "RT") return EndpointKind::rt;
    if (s == "gRT") return EndpointKind::grt;
    if (s == "theta") return EndpointKind::theta;
    throw ValidationError("unknown endpoint kind '" + s + "'");
}

double trial_rt_seconds(const TrialRecord& tr) {
    if (tr.outcome == Outcome::timeout)
        throw StatError("trial " + std::to_string(tr.trial_index) + " timed out; no RT");
    return static_cast<double>(tr.end_t - tr.start_t) / 1000.0;
}

GazeRt gaze_rt(const TrialSegment& seg) {
    if (!seg.trial.response)
        throw StatError("gaze_rt: trial " + std::to_string(seg.trial.trial_index) +
                        " has no selected target");
    const std::string& selected = *seg.trial.response;

    bool channel_present = false;
    for (const auto& s : seg.states)
        if (s.viewed_target) {
            channel_present = true;
            break;
        }
    if (!channel_present)
        throw StatError("gaze_rt: segment of trial " + std::to_string(seg.trial.trial_index) +
                        " carries no viewed-target channel");

    // Longest suffix run of samples locked on the selected target.
    std::ptrdiff_t run_start = static_cast<std::ptrdiff_t>(seg.states.size());
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(seg.states.size()) - 1; i >= 0; --i) {
        const auto& v = seg.states[static_cast<std::size_t>(i)].viewed_target;
        if (v && *v == selected)
            run_start = i;
        else
            break;
    }

    const double rt = trial_rt_seconds(seg.trial);
    if (run_start == static_cast<std::ptrdiff_t>(seg.states.size())) return {rt, false};
    const Timestamp t_star = seg.states[static_cast<std::size_t>(run_start)].t;
    return {static_cast<double>(t_star - seg.trial.start_t) / 1000.0, true};
}

// ------------------------------------------------------------------ 2PL fit

namespace {

struct LevelData {
    std::vector<double> level;
    std::vector<double> prop;
    double lo{0.0}, hi{0.0};  // theta box: [min level - 0.5, max level + 0.5]
};

constexpr double kSigmaFloor = 0.05;

double logistic2pl(double d, double theta, double sigma) {
    return 1.0 / (1.0 + std::exp((d - theta) / sigma));
}

double sse_at(const LevelData& ld, double theta, double sigma) {
    double s = 0.0;
    for (std::size_t i = 0; i < ld.level.size(); ++i) {
        const double e = ld.prop[i] - logistic2pl(ld.level[i], theta, sigma);
        s += e * e;
    }
    return s;
}

// Level where the empirical success proportion crosses 0.5 (interpolated).
double empirical_midpoint(const LevelData& ld) {
    for (std::size_t i = 0; i + 1 < ld.level.size(); ++i) {
        const double p0 = ld.prop[i], p1 = ld.prop[i + 1];
        if ((p0 - 0.5) * (p1 - 0.5) <= 0.0 && p0 != p1)
            return ld.level[i] + (p0 - 0.5) / (p0 - p1) * (ld.level[i + 1] - ld.level[i]);
    }
    // No crossing: everything above or everything below 0.5.
    double mean_p = 0.0;
    for (const double p : ld.prop) mean_p += p;
    mean_p /= static_cast<double>(ld.prop.size());
    return mean_p >= 0.5 ? ld.hi : ld.lo;
}

struct LmResult {
    double theta, sigma, sse;
    bool converged;
};

LmResult lm_run(const LevelData& ld, double theta0, double sigma0) {
    double theta = std::clamp(theta0, ld.lo, ld.hi);
    double sigma = std::max(sigma0, kSigmaFloor);
    double sse = sse_at(ld, theta, sigma);
    double lambda = 1e-3;
    bool converged = false;

    for (int iter = 0; iter < 200; ++iter) {
        // J^T J and J^T r for the 2-parameter model
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (std::size_t i = 0; i < ld.level.size(); ++i) {
            const double p = logistic2pl(ld.level[i], theta, sigma);
            const double resid = ld.prop[i] - p;
            const double core = p * (1.0 - p);
            const double d_theta = core / sigma;
            const double d_sigma = core * (ld.level[i] - theta) / (sigma * sigma);
            jtj00 += d_theta * d_theta;
            jtj01 += d_theta * d_sigma;
            jtj11 += d_sigma * d_sigma;
            jtr0 += d_theta * resid;
            jtr1 += d_sigma * resid;
        }
        bool stepped = false;
        for (int attempt = 0; attempt < 25; ++attempt) {
            const double a00 = jtj00 * (1.0 + lambda);
            const double a11 = jtj11 * (1.0 + lambda);
            const double det = a00 * a11 - jtj01 * jtj01;
            if (std::fabs(det) < 1e-300) {
                lambda *= 10.0;
                continue;
            }
            const double d_theta = (a11 * jtr0 - jtj01 * jtr1) / det;
            const double d_sigma = (a00 * jtr1 - jtj01 * jtr0) / det;
            const double theta_new = std::clamp(theta + d_theta, ld.lo, ld.hi);
            const double sigma_new = std::max(sigma + d_sigma, kSigmaFloor);
            const double sse_new = sse_at(ld, theta_new, sigma_new);
            if (sse_new <= sse) {
                const double step = std::fabs(theta_new - theta) + std::fabs(sigma_new - sigma);
                const double gain = sse - sse_new;
                theta = theta_new;
                sigma = sigma_new;
                sse = sse_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (step < 1e-10 || gain < 1e-15) converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!stepped || converged) {
            converged = converged || stepped;
            break;
        }
    }
    return {theta, sigma, sse, converged};
}

}  // namespace

PsychFit fit_2pl(const std::vector<std::pair<double, bool>>& trials) {
    std::map<double, std::pair<int, int>> by_level;  // level -> (passes, total)
    for (const auto& [level, passed] : trials) {
        auto& cell = by_level[level];
        cell.first += passed ? 1 : 0;
        cell.second += 1;
    }
    if (by_level.size() < 2)
        throw StatError("fit_2pl: need >= 2 distinct difficulty levels, got " +
                        std::to_string(by_level.size()));

    LevelData ld;
    for (const auto& [level, cell] : by_level) {
        ld.level.push_back(level);
        ld.prop.push_back(static_cast<double>(cell.first) / static_cast<double>(cell.second));
    }
    ld.lo = ld.level.front() - 0.5;
    ld.hi = ld.level.back() + 0.5;

    const double mid = empirical_midpoint(ld);
    const double span = ld.level.back() - ld.level.front();
    LmResult best = lm_run(ld, mid, std::max(span / 4.0, kSigmaFloor));

    // Re-initialize near the empirical 50% point if the first descent stalled.
    Rng rng(0x2f1u);
    for (int restart = 0; restart < 6 && !best.converged; ++restart) {
        const double jitter = span * 0.15 * (rng.uniform() - 0.5);
        const LmResult alt = lm_run(ld, mid + jitter, std::max(span / (2.0 + restart), kSigmaFloor));
        if (alt.sse < best.sse || (alt.converged && !best.converged)) best = alt;
    }

    PsychFit fit;
    fit.theta = best.theta;
    fit.sigma = best.sigma;
    fit.capped = best.theta >= ld.hi - 1e-9 || best.theta <= ld.lo + 1e-9;
    fit.rmse = std::sqrt(best.sse / static_cast<double>(ld.level.size()));
    return fit;
}

std::vector<EndpointRow> ingest_external_scores(std::istream& csv) {
    std::vector<EndpointRow> rows;
    std::map<std::tuple<std::string, std::string, std::string, std::string>, long> seen;
    std::string line;
    long line_no = 0;
    bool header_checked = false;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = csv_split(line);
        if (!header_checked) {
            if (cells != std::vector<std::string>{"participant", "task", "form", "kind", "value"})
                throw ParseError("expected header 'participant,task,form,kind,value'", line_no);
            header_checked = true;
            continue;
        }
        if (cells.size() != 5) throw ParseError("expected 5 cells", line_no);
        for (std::size_t i = 0; i < 4; ++i)
            if (cells[i].empty() && i != 2)  // form may legitimately be blank
                throw ParseError("empty cell in column " + std::to_string(i + 1), line_no);
        if (cells[4].empty()) throw ParseError("missing value cell", line_no);

        EndpointRow row;
        row.participant = cells[0];
        row.task = cells[1];
        row.form = cells[2];
        try {
            row.kind = endpoint_kind_from_string(cells[3]);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
        try {
            std::size_t used = 0;
            row.value = std::stod(cells[4], &used);
            if (used != cells[4].size()) throw std::invalid_argument("trailing garbage");
        } catch (const std::exception&) {
            throw ParseError("value cell '" + cells[4] + "' is not a number", line_no);
        }
        row.n_trials = 0;

        const auto key = std::make_tuple(row.participant, row.task, row.form, cells[3]);
        if (const auto it = seen.find(key); it != seen.end())
            throw ParseError("duplicate (participant, task, form, kind) first seen on line " +
                                 std::to_string(it->second),
                             line_no);
        seen[key] = line_no;
        rows.push_back(std::move(row));
    }
    if (!header_checked) throw ParseError("empty external scores file", 1);
    return rows;
}

}  // namespace pxlog
