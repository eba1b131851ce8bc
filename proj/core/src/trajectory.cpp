#include "pxlog/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pxlog/errors.hpp"

namespace pxlog {

namespace {

double wrap180(double a) {
    while (a >= 180.0) a -= 360.0;
    while (a < -180.0) a += 360.0;
    return a;
}

constexpr double kAlignedDeg = 10.0;

}  // namespace

const char* to_string(TrialType t) {
    switch (t) {
        case TrialType::DG: return "DG";
        case TrialType::IG: return "IG";
        case TrialType::DN: return "DN";
        case TrialType::IN: return "IN";
    }
    return "?";
}

TrialType trial_type_from_string(const std::string& s) {
    if (s == "DG") return TrialType::DG;
    if (s == "IG") return TrialType::IG;
    if (s == "DN") return TrialType::DN;
    if (s == "IN") return TrialType::IN;
    throw ValidationError("unknown trial type '" + s + "'");
}

std::optional<Trajectory> canonicalize(const TrialSegment& seg) {
    if (seg.trial.game != Game::NK)
        throw StatError("canonicalize: trajectory analysis applies to NK trials only");
    if (!seg.trial.response) return std::nullopt;  // timeout: no selected target

    const auto& stim = std::get<NKTrialStimulus>(seg.trial.stimulus);
    const bool left = *seg.trial.response == "knight_left";

    Trajectory traj;
    traj.selected_side = left ? Side::left : Side::right;
    traj.target_x = left ? stim.left_x : stim.right_x;
    traj.target_z = left ? stim.left_z : stim.right_z;

    Timestamp prev_t = -1;
    double yaw_cont = 0.0;
    double prev_raw = 0.0;
    for (const auto& s : seg.states) {
        if (s.t <= prev_t) continue;  // duplicate timestamps are not valid samples
        if (prev_t < 0) {
            yaw_cont = s.yaw;
        } else {
            yaw_cont += wrap180(s.yaw - prev_raw);  // unwrap across the +-180 seam
        }
        prev_raw = s.yaw;
        prev_t = s.t;
        traj.samples.push_back(
            {static_cast<double>(s.t - seg.trial.start_t) / 1000.0, s.x, s.z, yaw_cont});
        traj.viewed.push_back(s.viewed_target);
    }
    if (traj.samples.size() < 2) return std::nullopt;

    if (left) {
        traj.mirrored = true;
        traj.target_x = -traj.target_x;
        for (auto& s : traj.samples) {
            s.x = -s.x;
            s.yaw = -s.yaw;
        }
    }
    return traj;
}

Trajectory resample(const Trajectory& traj, int length) {
    if (traj.samples.size() < 2) throw StatError("resample: need >= 2 samples");
    if (length < 2) throw StatError("resample: need length >= 2");

    const std::size_t n = traj.samples.size();
    const double t0 = traj.samples.front().t_s;
    const double t1 = traj.samples.back().t_s;
    const double span = t1 - t0;
    if (!(span > 0.0)) throw StatError("resample: degenerate time span");

    Trajectory out;
    out.target_x = traj.target_x;
    out.target_z = traj.target_z;
    out.selected_side = traj.selected_side;
    out.mirrored = traj.mirrored;
    out.samples.reserve(static_cast<std::size_t>(length));
    out.viewed.reserve(static_cast<std::size_t>(length));

    std::size_t j = 1;
    for (int i = 0; i < length; ++i) {
        if (i == 0) {
            out.samples.push_back(traj.samples.front());
            out.viewed.push_back(traj.viewed.front());
            continue;
        }
        if (i == length - 1) {
            out.samples.push_back(traj.samples.back());
            out.viewed.push_back(traj.viewed.back());
            continue;
        }
        const double tau = t0 + span * static_cast<double>(i) / static_cast<double>(length - 1);
        while (j + 1 < n && traj.samples[j].t_s < tau) ++j;
        const auto& a = traj.samples[j - 1];
        const auto& b = traj.samples[j];
        if (b.t_s == tau) {
            out.samples.push_back(b);
            out.viewed.push_back(traj.viewed[j]);
            continue;
        }
        const double f = (tau - a.t_s) / (b.t_s - a.t_s);
        out.samples.push_back({tau, a.x + f * (b.x - a.x), a.z + f * (b.z - a.z),
                               a.yaw + f * (b.yaw - a.yaw)});
        out.viewed.push_back(f < 0.5 ? traj.viewed[j - 1] : traj.viewed[j]);
    }
    return out;
}

HeadingSeries heading_series(const Trajectory& traj) {
    HeadingSeries h;
    h.heading_deg.reserve(traj.samples.size());
    for (const auto& s : traj.samples) {
        const double bearing =
            std::atan2(traj.target_x - s.x, traj.target_z - s.z) * 180.0 / M_PI;
        const double heading = wrap180(s.yaw - bearing);
        h.heading_deg.push_back(heading);
        h.sin_h.push_back(std::sin(heading * M_PI / 180.0));
        h.cos_h.push_back(std::cos(heading * M_PI / 180.0));
    }
    return h;
}

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "min_x",           "max_x",           "final_x",
    "min_z",           "max_z",           "final_z",
    "net_displacement", "path_length",    "straightness",
    "max_lateral_dev", "t_max_lateral_dev",
    "mean_speed",      "speed_std",       "max_speed",      "t_max_speed",
    "mean_abs_heading", "heading_std",    "max_abs_heading", "t_peak_abs_heading",
    "mean_sin_heading", "mean_cos_heading",
    "heading_sign_changes", "frac_aligned", "t_first_aligned", "final_aligned_run",
    "mean_abs_yaw_vel", "max_abs_yaw_vel",
};

double max_lateral_deviation(const Trajectory& traj) {
    if (traj.samples.empty()) return 0.0;
    const double sx = traj.samples.front().x;
    const double sz = traj.samples.front().z;
    const double dx = traj.target_x - sx;
    const double dz = traj.target_z - sz;
    const double len = std::hypot(dx, dz);
    double worst = 0.0;
    for (const auto& s : traj.samples) {
        double dev;
        if (len > 0.0) {
            dev = std::fabs((s.x - sx) * dz - (s.z - sz) * dx) / len;
        } else {
            dev = std::hypot(s.x - sx, s.z - sz);
        }
        worst = std::max(worst, dev);
    }
    return worst;
}

FeatureVector features27(const Trajectory& traj, const HeadingSeries& heading) {
    const std::size_t n = traj.samples.size();
    if (n < 2) throw StatError("features27: need >= 2 samples");
    if (heading.heading_deg.size() != n)
        throw StatError("features27: heading series length mismatch");
    const double denom_idx = static_cast<double>(n - 1);

    FeatureVector f{};
    double min_x = traj.samples[0].x, max_x = min_x;
    double min_z = traj.samples[0].z, max_z = min_z;
    for (const auto& s : traj.samples) {
        min_x = std::min(min_x, s.x);
        max_x = std::max(max_x, s.x);
        min_z = std::min(min_z, s.z);
        max_z = std::max(max_z, s.z);
    }
    f[0] = min_x;
    f[1] = max_x;
    f[2] = traj.samples.back().x;
    f[3] = min_z;
    f[4] = max_z;
    f[5] = traj.samples.back().z;

    double path = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        path += std::hypot(traj.samples[i].x - traj.samples[i - 1].x,
                           traj.samples[i].z - traj.samples[i - 1].z);
    const double net = std::hypot(traj.samples.back().x - traj.samples.front().x,
                                  traj.samples.back().z - traj.samples.front().z);
    f[6] = net;
    f[7] = path;
    f[8] = path > 0.0 ? net / path : 0.0;

    // lateral deviation profile against the start -> target line
    {
        const double sx = traj.samples.front().x, sz = traj.samples.front().z;
        const double dx = traj.target_x - sx, dz = traj.target_z - sz;
        const double len = std::hypot(dx, dz);
        double worst = -1.0;
        std::size_t worst_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = traj.samples[i];
            const double dev = len > 0.0
                                   ? std::fabs((s.x - sx) * dz - (s.z - sz) * dx) / len
                                   : std::hypot(s.x - sx, s.z - sz);
            if (dev > worst) {
                worst = dev;
                worst_i = i;
            }
        }
        f[9] = worst;
        f[10] = static_cast<double>(worst_i) / denom_idx;
    }

    // speeds per segment, attributed to the segment's end sample
    {
        double sum = 0.0, sum2 = 0.0, best = -1.0;
        std::size_t best_i = 1;
        for (std::size_t i = 1; i < n; ++i) {
            const double dt = traj.samples[i].t_s - traj.samples[i - 1].t_s;
            const double d = std::hypot(traj.samples[i].x - traj.samples[i - 1].x,
                                        traj.samples[i].z - traj.samples[i - 1].z);
            const double v = dt > 0.0 ? d / dt : 0.0;
            sum += v;
            sum2 += v * v;
            if (v > best) {
                best = v;
                best_i = i;
            }
        }
        const double m = sum / static_cast<double>(n - 1);
        f[11] = m;
        f[12] = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n - 1) - m * m));
        f[13] = best;
        f[14] = static_cast<double>(best_i) / denom_idx;
    }

    // heading statistics
    {
        double sum_abs = 0.0, sum = 0.0, sum2 = 0.0, max_abs = -1.0;
        double sum_sin = 0.0, sum_cos = 0.0;
        std::size_t peak_i = 0;
        long aligned = 0;
        std::ptrdiff_t first_aligned = -1;
        int sign_changes = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double h = heading.heading_deg[i];
            const double a = std::fabs(h);
            sum_abs += a;
            sum += h;
            sum2 += h * h;
            sum_sin += heading.sin_h[i];
            sum_cos += heading.cos_h[i];
            if (a > max_abs) {
                max_abs = a;
                peak_i = i;
            }
            if (a < kAlignedDeg) {
                ++aligned;
                if (first_aligned < 0) first_aligned = static_cast<std::ptrdiff_t>(i);
            }
            if (i > 0) {
                const bool neg = h < 0.0, prev_neg = heading.heading_deg[i - 1] < 0.0;
                if (neg != prev_neg) ++sign_changes;
            }
        }
        const double nd = static_cast<double>(n);
        const double mean_h = sum / nd;
        f[15] = sum_abs / nd;
        f[16] = std::sqrt(std::max(0.0, sum2 / nd - mean_h * mean_h));
        f[17] = max_abs;
        f[18] = static_cast<double>(peak_i) / denom_idx;
        f[19] = sum_sin / nd;
        f[20] = sum_cos / nd;
        f[21] = static_cast<double>(sign_changes);
        f[22] = static_cast<double>(aligned) / nd;
        f[23] = first_aligned < 0 ? 1.0 : static_cast<double>(first_aligned) / denom_idx;
        std::size_t run = 0;
        for (std::size_t i = n; i-- > 0;) {
            if (std::fabs(heading.heading_deg[i]) < kAlignedDeg)
                ++run;
            else
                break;
        }
        f[24] = static_cast<double>(run) / nd;
    }

    // yaw angular velocity per segment
    {
        double sum = 0.0, best = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double dt = traj.samples[i].t_s - traj.samples[i - 1].t_s;
            const double w = dt > 0.0 ? std::fabs(traj.samples[i].yaw - traj.samples[i - 1].yaw) / dt : 0.0;
            sum += w;
            best = std::max(best, w);
        }
        f[25] = sum / static_cast<double>(n - 1);
        f[26] = best;
    }
    return f;
}

TrialType classify_trial(const Trajectory& canon, double lateral_threshold, bool fixated) {
    const bool direct = max_lateral_deviation(canon) <= lateral_threshold;
    if (direct) return fixated ? TrialType::DG : TrialType::DN;
    return fixated ? TrialType::IG : TrialType::IN;
}

SessionProfile session_profile(const std::vector<TrialType>& types) {
    if (types.empty()) throw StatError("session_profile: no classified trials");
    SessionProfile prof;
    for (const TrialType t : types) prof.p[static_cast<std::size_t>(t)] += 1.0;
    for (double& v : prof.p) v /= static_cast<double>(types.size());
    return prof;
}

double jsd(const SessionProfile& a, const SessionProfile& b) {
    double js = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double m = 0.5 * (a.p[i] + b.p[i]);
        if (a.p[i] > 0.0) js += 0.5 * a.p[i] * std::log2(a.p[i] / m);
        if (b.p[i] > 0.0) js += 0.5 * b.p[i] * std::log2(b.p[i] / m);
    }
    return std::sqrt(std::max(0.0, js));
}

IdentifyResult identify(const std::vector<std::pair<std::string, SessionProfile>>& sessions) {
    if (sessions.empty()) throw StatError("identify: no sessions");

    IdentifyResult res;
    std::map<std::string, std::size_t> index_of;
    std::vector<std::vector<std::size_t>> owned;  // player -> session indices
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const auto& id = sessions[s].first;
        auto it = index_of.find(id);
        if (it == index_of.end()) {
            it = index_of.emplace(id, res.players.size()).first;
            res.players.push_back(id);
            owned.emplace_back();
        }
        owned[it->second].push_back(s);
    }
    const std::size_t np = res.players.size();
    res.matrix.assign(np, std::vector<double>(np, 0.0));

    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const std::size_t truth = index_of.at(sessions[s].first);

        std::vector<std::pair<double, std::size_t>> ranked;  // (distance, player)
        ranked.reserve(np);
        for (std::size_t p = 0; p < np; ++p) {
            SessionProfile avg;
            int cnt = 0;
            for (const std::size_t os : owned[p]) {
                if (os == s) continue;  // leave-one-session-out
                for (std::size_t i = 0; i < 4; ++i) avg.p[i] += sessions[os].second.p[i];
                ++cnt;
            }
            if (cnt == 0) {
                avg.p = {0.25, 0.25, 0.25, 0.25};  // no other sessions to average
            } else {
                for (double& v : avg.p) v /= static_cast<double>(cnt);
            }
            ranked.push_back({jsd(sessions[s].second, avg), p});
        }
        std::sort(ranked.begin(), ranked.end());  // ties break toward the lower player index
        for (std::size_t i = 1; i < ranked.size(); ++i)
            if (ranked[i].first == ranked[i - 1].first) res.had_ties = true;

        res.matrix[truth][ranked[0].second] += 1.0;
        if (ranked.size() > 1 && ranked[1].second == truth) res.matrix[truth][truth] += 0.5;
        if (ranked.size() > 2 && ranked[2].second == truth) res.matrix[truth][truth] += 0.3;
    }

    double diag = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        const double row_sum = std::accumulate(res.matrix[p].begin(), res.matrix[p].end(), 0.0);
        if (row_sum > 0.0)
            for (double& v : res.matrix[p]) v *= 100.0 / row_sum;
        diag += res.matrix[p][p];
    }
    res.mean_diagonal = diag / static_cast<double>(np);
    return res;
}

}  // namespace pxlog
