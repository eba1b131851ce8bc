#include "pxlog/synth_player.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "pxlog/errors.hpp"
#include "pxlog/rng.hpp"

namespace pxlog {

const char* to_string(PathStyle s) { return s == PathStyle::direct ? "direct" : "indirect"; }
const char* to_string(GazePolicy g) {
    switch (g) {
        case GazePolicy::early_fix: return "early_fix";
        case GazePolicy::late_fix: return "late_fix";
        case GazePolicy::no_fix: return "no_fix";
    }
    return "?";
}
PathStyle path_style_from_string(const std::string& s) {
    if (s == "direct") return PathStyle::direct;
    if (s == "indirect") return PathStyle::indirect;
    throw ValidationError("unknown path style '" + s + "'");
}
GazePolicy gaze_policy_from_string(const std::string& s) {
    if (s == "early_fix") return GazePolicy::early_fix;
    if (s == "late_fix") return GazePolicy::late_fix;
    if (s == "no_fix") return GazePolicy::no_fix;
    throw ValidationError("unknown gaze policy '" + s + "'");
}

namespace {

constexpr double kTickMs = 50.0;
constexpr double kYawRateDegPerMs = 0.3;  // 300 deg/s gaze turn cap
constexpr double kGroundY = 64.0;

double wrap180(double a) {
    while (a >= 180.0) a -= 360.0;
    while (a < -180.0) a += 360.0;
    return a;
}

// Signed smallest rotation from `from` to `to`, degrees.
double ang_diff(double from, double to) { return wrap180(to - from); }

// Yaw convention: 0 along +z, positive toward +x.
double bearing_deg(double px, double pz, double qx, double qz) {
    return std::atan2(qx - px, qz - pz) * 180.0 / M_PI;
}

struct Entity {
    std::string id;
    double x, z;
};

struct Waypoint {
    double t;  // absolute ms
    double x, z;
};

struct TrialPlan {
    TrialRecord record;
    TrialTruth truth;
    // timing, absolute ms
    double decision_abs{0.0};
    double response_abs{0.0};
    // gaze
    bool intend_fix{false};
    double gaze_start_abs{0.0};
    double wander_amp{5.0}, wander_period{3000.0}, wander_phase{0.0};
    // world
    std::vector<Entity> entities;
    int selected_entity{-1};
    double view_cone_deg{12.0};
    std::vector<Waypoint> path;  // clamped interpolation; empty -> fixed (0,0)
};

struct PendingEvent {
    Timestamp t;
    GameEvent ev;
};

std::pair<double, double> path_pos(const std::vector<Waypoint>& path, double t) {
    if (path.empty()) return {0.0, 0.0};
    if (t <= path.front().t) return {path.front().x, path.front().z};
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (t <= path[i].t) {
            const auto& a = path[i - 1];
            const auto& b = path[i];
            const double f = b.t > a.t ? (t - a.t) / (b.t - a.t) : 1.0;
            return {a.x + f * (b.x - a.x), a.z + f * (b.z - a.z)};
        }
    }
    return {path.back().x, path.back().z};
}

double wander_deg(const TrialPlan& p, double t) {
    return p.wander_amp * std::sin(2.0 * M_PI * (t + p.wander_phase) / p.wander_period);
}

// Build the walking path start -> (detour) -> approach point short of target.
// The detour offsets perpendicular to the approach line, away from the
// target's side of the arena.
std::vector<Waypoint> build_walk(double move_begin, double speed, double tx, double tz,
                                 double stop_short, double detour_offset) {
    const double len = std::hypot(tx, tz);
    const double ux = tx / len, uz = tz / len;
    const double ax = tx - ux * stop_short;
    const double az = tz - uz * stop_short;
    std::vector<Waypoint> path;
    path.push_back({move_begin, 0.0, 0.0});
    if (detour_offset > 0.0) {
        double nx = -uz, nz = ux;  // unit normal of the approach line
        if ((tx >= 0.0 && nx > 0.0) || (tx < 0.0 && nx < 0.0)) {
            nx = -nx;
            nz = -nz;
        }
        const double mx = 0.5 * ax + nx * detour_offset;
        const double mz = 0.5 * az + nz * detour_offset;
        const double leg1 = std::hypot(mx, mz);
        const double leg2 = std::hypot(ax - mx, az - mz);
        path.push_back({move_begin + leg1 / speed * 1000.0, mx, mz});
        path.push_back({move_begin + (leg1 + leg2) / speed * 1000.0, ax, az});
    } else {
        const double leg = std::hypot(ax, az);
        path.push_back({move_begin + leg / speed * 1000.0, ax, az});
    }
    return path;
}

struct SessionBuild {
    std::vector<TrialPlan> plans;
    std::vector<PendingEvent> events;
    double session_end{0.0};
};

GameEvent make_event(Timestamp t, EventKind kind, std::map<std::string, std::string> payload) {
    GameEvent e;
    e.t = t;
    e.kind = kind;
    e.payload = std::move(payload);
    return e;
}

void push_feedback(SessionBuild& b, Timestamp t, int trial, const std::string& result) {
    b.events.push_back(
        {t, make_event(t, EventKind::trial_feedback, {{"result", result}, {"trial", std::to_string(trial)}})});
}

// Shared deliberation draw: lognormal latency, optionally stretched by a lapse.
std::pair<double, bool> draw_decision_ms(const AgentParams& ap, Rng& rng) {
    double d = std::clamp(rng.lognormal(ap.latency_log_mean, ap.latency_log_sd), 150.0, 4800.0);
    const bool lapse = rng.bernoulli(ap.lapse_rate);
    if (lapse) d += rng.uniform(10200.0, 16000.0);
    return {d, lapse};
}

// ---------------------------------------------------------------- AFC planning

void plan_afc_trial(Game game, SessionBuild& b, const AgentParams& ap, Rng& rng,
                    const TrialTiming& timing, int index, Timestamp start,
                    const std::vector<Entity>& entities, int correct_idx, TrialStimulus stimulus,
                    double view_cone, double wander_amp, bool movement) {
    TrialPlan p;
    p.entities = entities;
    p.view_cone_deg = view_cone;
    p.wander_amp = wander_amp;
    p.wander_period = rng.uniform(2600.0, 3400.0);
    p.wander_phase = rng.uniform(0.0, p.wander_period);

    const auto [decision_ms, lapse] = draw_decision_ms(ap, rng);
    const bool err = rng.bernoulli(ap.error_rate);
    int selected = correct_idx;
    if (err) {
        int other = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(entities.size()) - 2));
        if (other >= correct_idx) ++other;
        selected = other;
    }
    p.selected_entity = selected;

    const bool indirect = movement && rng.bernoulli(ap.resolved_indirect_prob());
    const double detour =
        indirect ? std::max(0.0, ap.lateral_amplitude * rng.uniform(0.9, 1.1)) : 0.0;
    p.intend_fix = rng.bernoulli(ap.resolved_fix_prob());
    if (game == Game::BB) p.intend_fix = true;  // aiming is the response mechanic

    p.decision_abs = static_cast<double>(start) + decision_ms;
    const Entity& target = entities[static_cast<std::size_t>(selected)];

    if (movement) {
        p.path = build_walk(p.decision_abs, ap.move_speed, target.x, target.z, 0.75, detour);
        p.response_abs = p.path.back().t;
        if (p.intend_fix) {
            const double motor = p.response_abs - p.decision_abs;
            p.gaze_start_abs = ap.gaze_policy == GazePolicy::late_fix
                                   ? p.decision_abs + 0.6 * motor
                                   : static_cast<double>(start) + 0.55 * decision_ms;
        }
    } else {
        p.path.clear();  // stands at the shooting spot
        const double yaw_at_decision = 0.0;  // wander is symmetric; use its center for the aim estimate
        const double aim_deg = std::fabs(ang_diff(yaw_at_decision, bearing_deg(0, 0, target.x, target.z)));
        const double aim_ms = aim_deg / kYawRateDegPerMs + 60.0;
        p.gaze_start_abs = p.decision_abs;
        p.response_abs = p.decision_abs + aim_ms + rng.uniform(180.0, 450.0);
    }

    TrialRecord& rec = p.record;
    rec.game = game;
    rec.trial_index = index;
    rec.start_t = start;
    rec.stimulus = std::move(stimulus);
    rec.correct_answer = entities[static_cast<std::size_t>(correct_idx)].id;

    TrialTruth& tt = p.truth;
    tt.trial_index = index;
    tt.decision_ms = decision_ms;  // includes the stall on lapse trials
    tt.lapse = lapse;

    const double rt = p.response_abs - static_cast<double>(start);
    if (rt > static_cast<double>(timing.response_timeout_ms)) {
        rec.end_t = start + timing.response_timeout_ms;
        rec.outcome = Outcome::timeout;
        tt.timed_out = true;
        tt.planted_correct = false;
        tt.rt_ms = static_cast<double>(timing.response_timeout_ms);
        p.intend_fix = false;
        p.gaze_start_abs = 0.0;
        p.response_abs = static_cast<double>(rec.end_t);
        push_feedback(b, rec.end_t, index, "timeout");
    } else {
        rec.end_t = static_cast<Timestamp>(std::llround(p.response_abs));
        rec.response = target.id;
        rec.outcome = err ? Outcome::incorrect : Outcome::correct;
        tt.planted_correct = !err;
        tt.rt_ms = rt;
        const EventKind respond = game == Game::NK   ? EventKind::click_select
                                  : game == Game::DD ? EventKind::door_enter
                                                     : EventKind::shot;
        const char* key = game == Game::DD ? "door" : "target";
        b.events.push_back({rec.end_t, make_event(rec.end_t, respond, {{key, target.id}})});
        push_feedback(b, rec.end_t, index, err ? "incorrect" : "correct");
    }

    if (game == Game::NK) {
        // planted directness from the realized detour; gaze half is filled in
        // after the tick simulation decides whether alignment reached a sample
        tt.planted_type = std::string(detour > 0.5 ? "I" : "D") + "?";
    }
    b.plans.push_back(std::move(p));
}

SessionBuild plan_nk(const AgentParams& ap, Rng& rng, const TrialTiming& timing) {
    SessionBuild b;
    const NKRule rule = rng.bernoulli(0.5) ? NKRule::color : NKRule::semantic;
    const auto stimuli = nk_schedule(rule, rng.raw());
    Timestamp t = 1000;
    for (int i = 0; i < static_cast<int>(stimuli.size()); ++i) {
        const NKStimulus& s = stimuli[static_cast<std::size_t>(i)];
        const std::string correct_color = nk_correct_target(s);
        const std::string other_color = correct_color == s.word ? s.ink : s.word;
        const bool correct_right = rng.bernoulli(0.5);

        NKTrialStimulus stim;
        stim.core = s;
        stim.left_x = -2.5;
        stim.left_z = 6.0;
        stim.right_x = 2.5;
        stim.right_z = 6.0;
        stim.left_color = correct_right ? other_color : correct_color;
        stim.right_color = correct_right ? correct_color : other_color;

        const std::vector<Entity> knights = {{"knight_left", stim.left_x, stim.left_z},
                                             {"knight_right", stim.right_x, stim.right_z}};
        plan_afc_trial(Game::NK, b, ap, rng, timing, i, t, knights, correct_right ? 1 : 0,
                       TrialStimulus(stim), 12.0, 5.0, true);
        t = b.plans.back().record.end_t + timing.feedback_ms + 500;
    }
    b.session_end = static_cast<double>(t) + 500.0;
    return b;
}

SessionBuild plan_dd(const AgentParams& ap, Rng& rng, const TrialTiming& timing) {
    SessionBuild b;
    const auto schedule = dd_schedule(rng.raw());
    static constexpr double door_x[4] = {-4.5, -1.5, 1.5, 4.5};
    Timestamp t = 1000;
    for (int i = 0; i < static_cast<int>(schedule.size()); ++i) {
        const DDTrial& trial = schedule[static_cast<std::size_t>(i)];
        std::vector<Entity> doors;
        for (int d = 0; d < 4; ++d) doors.push_back({"door_" + std::to_string(d), door_x[d], 6.0});
        plan_afc_trial(Game::DD, b, ap, rng, timing, i, t, doors, dd_correct_door(trial),
                       TrialStimulus(trial), 7.0, 4.0, true);
        t = b.plans.back().record.end_t + timing.feedback_ms + 500;
    }
    b.session_end = static_cast<double>(t) + 500.0;
    return b;
}

SessionBuild plan_bb(const AgentParams& ap, Rng& rng, const TrialTiming& timing) {
    SessionBuild b;
    const auto schedule = bb_schedule(rng.raw());
    const std::vector<Entity> targets = {{"target_left", -3.5, 7.0}, {"target_right", 3.5, 7.0}};
    Timestamp t = 1000;
    for (int i = 0; i < static_cast<int>(schedule.size()); ++i) {
        const BBStimulus& s = schedule[static_cast<std::size_t>(i)];
        const int correct = bb_correct_side(s) == Side::left ? 0 : 1;
        plan_afc_trial(Game::BB, b, ap, rng, timing, i, t, targets, correct, TrialStimulus(s), 12.0,
                       5.0, false);
        t = b.plans.back().record.end_t + timing.feedback_ms + 500;
    }
    b.session_end = static_cast<double>(t) + 500.0;
    return b;
}

SessionBuild plan_rr(const AgentParams& ap, Rng& rng, const TrialTiming& timing) {
    SessionBuild b;
    RRState st;
    Timestamp t = 1000;
    int index = 0;
    while (!st.finished) {
        const RRPattern target = rr_generate_pattern(st.current_size, rng);

        TrialPlan p;
        p.view_cone_deg = 12.0;
        p.wander_amp = 4.0;
        p.wander_period = rng.uniform(2600.0, 3400.0);
        p.wander_phase = rng.uniform(0.0, p.wander_period);
        p.selected_entity = -1;

        const Timestamp observe_start = t + 5000;
        const double need = 1500.0 * target.size + rng.uniform(0.0, 1000.0);
        const double observe = std::min(60000.0, need);
        if (observe < 60000.0) {
            const Timestamp skip_t = observe_start + static_cast<Timestamp>(std::llround(observe));
            b.events.push_back({skip_t, make_event(skip_t, EventKind::skip_phase,
                                                   {{"phase", "observe"}, {"trial", std::to_string(index)}})});
        }
        const double build_start = static_cast<double>(observe_start) + observe;

        // Build: one block every ~700 ms; each block correct with 1 - error_rate,
        // a miss keeps the cell but paints the wrong color.
        RRPattern built;
        built.size = target.size;
        double bt = build_start;
        for (const auto& cell : target.cells) {
            bt += rng.uniform(600.0, 800.0);
            RRCell placed = cell;
            if (rng.bernoulli(ap.error_rate)) {
                std::string wrong;
                do {
                    wrong = kRrColors[static_cast<std::size_t>(rng.uniform_int(0, 2))];
                } while (wrong == cell.color);
                placed.color = wrong;
            }
            const Timestamp ts = static_cast<Timestamp>(std::llround(bt));
            b.events.push_back({ts, make_event(ts, EventKind::block_place,
                                               {{"color", placed.color},
                                                {"gx", std::to_string(placed.gx)},
                                                {"gy", "64"},
                                                {"gz", std::to_string(placed.gz)}})});
            built.cells.push_back(placed);
        }
        std::sort(built.cells.begin(), built.cells.end());
        const RRJudgment judgment = rr_judge(target, built);

        TrialRecord& rec = p.record;
        rec.game = Game::RR;
        rec.trial_index = index;
        rec.start_t = t;
        rec.end_t = static_cast<Timestamp>(std::llround(bt + 400.0));
        rec.stimulus = TrialStimulus(target);
        rec.correct_answer = "pass";
        rec.response = judgment.pass ? "pass" : "fail";
        rec.outcome = judgment.pass ? Outcome::correct : Outcome::incorrect;
        push_feedback(b, rec.end_t, index, judgment.pass ? "correct" : "incorrect");

        p.response_abs = static_cast<double>(rec.end_t);
        p.decision_abs = build_start;
        TrialTruth& tt = p.truth;
        tt.trial_index = index;
        tt.decision_ms = build_start - static_cast<double>(t);
        tt.planted_correct = judgment.pass;
        tt.rt_ms = static_cast<double>(rec.end_t - rec.start_t);
        b.plans.push_back(std::move(p));

        st = rr_step(std::move(st), judgment.pass);
        t = rec.end_t + 5000 + 500;  // judging display, then the next prep phase
        ++index;
        (void)timing;
    }
    b.session_end = static_cast<double>(t) + 500.0;
    return b;
}

// ---------------------------------------------------------------- tick pass

// Walks the 20 Hz grid once, integrating the yaw controller and annotating
// viewed targets; records, per trial, the continuous moment the gaze finally
// locked onto the selected entity (sub-tick interpolated) and stayed there.
void run_ticks(LogFile& file, SessionBuild& b, Rng& rng) {
    double yaw = 0.0;
    std::size_t active = 0;
    std::ptrdiff_t last_trial_seen = -1;

    struct GazeTrack {
        bool prev_on_target = false;
        double prev_abs_diff = 1e9;
        double candidate = -1.0;
    };
    std::vector<GazeTrack> tracks(b.plans.size());

    const double phase_seed = rng.uniform(0.0, 1000.0);  // pitch wobble offset

    for (double t = 0.0; t <= b.session_end; t += kTickMs) {
        while (active + 1 < b.plans.size() &&
               t >= static_cast<double>(b.plans[active + 1].record.start_t))
            ++active;
        const TrialPlan* p = nullptr;
        if (!b.plans.empty() && t >= static_cast<double>(b.plans[active].record.start_t))
            p = &b.plans[active];

        double px = 0.0, pz = 0.0;
        if (p) std::tie(px, pz) = path_pos(p->path, t);

        // New trial: the avatar teleports to the next arena, view snaps along.
        if (p && static_cast<std::ptrdiff_t>(active) != last_trial_seen) {
            last_trial_seen = static_cast<std::ptrdiff_t>(active);
            yaw = wander_deg(*p, t);
        }

        double goal = p ? wander_deg(*p, t) : 0.0;
        const bool in_window = p && t >= static_cast<double>(p->record.start_t) &&
                               t <= static_cast<double>(p->record.end_t);
        const bool chasing = p && p->intend_fix && in_window && t >= p->gaze_start_abs &&
                             p->selected_entity >= 0;
        if (chasing) {
            const Entity& e = p->entities[static_cast<std::size_t>(p->selected_entity)];
            goal = bearing_deg(px, pz, e.x, e.z);
        }
        const double step = std::clamp(ang_diff(yaw, goal), -kYawRateDegPerMs * kTickMs,
                                       kYawRateDegPerMs * kTickMs);
        yaw = wrap180(yaw + step);

        // Viewed target: angularly closest entity within the cone, else arena.
        std::string viewed = "arena";
        double best = 1e9;
        if (p) {
            for (const auto& e : p->entities) {
                const double d = std::fabs(ang_diff(yaw, bearing_deg(px, pz, e.x, e.z)));
                if (d <= p->view_cone_deg && d < best) {
                    best = d;
                    viewed = e.id;
                }
            }
        }

        if (p && in_window && p->selected_entity >= 0) {
            GazeTrack& g = tracks[active];
            const Entity& sel = p->entities[static_cast<std::size_t>(p->selected_entity)];
            const double diff = std::fabs(ang_diff(yaw, bearing_deg(px, pz, sel.x, sel.z)));
            const bool on = viewed == sel.id;
            if (on && !g.prev_on_target) {
                double cross = t;
                if (g.prev_abs_diff > p->view_cone_deg && g.prev_abs_diff < 1e8) {
                    const double f = (g.prev_abs_diff - p->view_cone_deg) / (g.prev_abs_diff - diff);
                    cross = t - kTickMs + kTickMs * std::clamp(f, 0.0, 1.0);
                }
                g.candidate = cross;
            } else if (!on) {
                g.candidate = -1.0;
            }
            g.prev_on_target = on;
            g.prev_abs_diff = diff;
        }

        StateSample s;
        s.t = static_cast<Timestamp>(std::llround(t));
        s.x = quantize_pos(px);
        s.y = kGroundY;
        s.z = quantize_pos(pz);
        s.yaw = quantize_yaw(yaw);
        s.pitch = quantize_angle(-10.0 + 2.0 * std::sin((t + phase_seed) / 1300.0));
        s.viewed_target = viewed;
        file.log_sequence.emplace_back(std::move(s));
    }

    for (std::size_t i = 0; i < b.plans.size(); ++i) {
        TrialPlan& p = b.plans[i];
        if (tracks[i].candidate >= 0.0) {
            p.truth.gaze_commit_ms = tracks[i].candidate - static_cast<double>(p.record.start_t);
        }
        if (p.record.game == Game::NK && p.truth.planted_type) {
            const char dir = (*p.truth.planted_type)[0];
            p.truth.planted_type = std::string(1, dir) + (p.truth.gaze_commit_ms ? "G" : "N");
        }
    }
}

}  // namespace

std::pair<LogFile, GroundTruth> simulate_session(Game game, const AgentParams& params,
                                                 std::uint64_t seed, const std::string& player,
                                                 int session_index, const TrialTiming& timing) {
    if (params.error_rate < 0.0 || params.error_rate > 1.0 || params.lapse_rate < 0.0 ||
        params.lapse_rate > 1.0)
        throw ValidationError("simulate_session: probabilities must lie in [0, 1]");
    if (params.lateral_amplitude < 0.0)
        throw ValidationError("simulate_session: lateral_amplitude must be >= 0");
    if (params.move_speed <= 0.0) throw ValidationError("simulate_session: move_speed must be > 0");

    Rng rng(seed);
    SessionBuild b;
    switch (game) {
        case Game::NK: b = plan_nk(params, rng, timing); break;
        case Game::DD: b = plan_dd(params, rng, timing); break;
        case Game::BB: b = plan_bb(params, rng, timing); break;
        case Game::RR: b = plan_rr(params, rng, timing); break;
    }

    LogFile file;
    file.header.session_id = player + "-s" + std::to_string(session_index + 1) + "-" + to_string(game);
    file.header.player = player;
    file.header.game = game;
    file.header.state_hz = 20;
    file.header.env_hz = 1;
    file.header.seed = seed;

    run_ticks(file, b, rng);

    for (Timestamp t = 0; static_cast<double>(t) <= b.session_end; t += 1000) {
        EnvSample e;
        e.t = t;
        e.blocks = {{-6, 63, 0, "quartz"}, {6, 63, 0, "quartz"}, {-6, 63, 8, "quartz"},
                    {6, 63, 8, "quartz"}};
        file.log_sequence.emplace_back(std::move(e));
    }
    for (auto& pe : b.events) file.log_sequence.emplace_back(std::move(pe.ev));

    std::stable_sort(file.log_sequence.begin(), file.log_sequence.end(),
                     [](const LogRecord& a, const LogRecord& bb_) {
                         const Timestamp ta = record_time(a), tb = record_time(bb_);
                         if (ta != tb) return ta < tb;
                         return record_rank(a) < record_rank(bb_);
                     });

    GroundTruth truth;
    truth.session_id = file.header.session_id;
    truth.player = player;
    truth.game = game;
    for (auto& p : b.plans) {
        file.trial_summary.push_back(std::move(p.record));
        truth.trials.push_back(std::move(p.truth));
    }

    validate(file);
    return {std::move(file), std::move(truth)};
}

CohortResult simulate_cohort(const CohortSpec& spec, std::uint64_t master_seed) {
    if (spec.players.empty()) throw ValidationError("simulate_cohort: need at least one player");
    if (spec.games.empty()) throw ValidationError("simulate_cohort: need at least one game");
    CohortResult out;
    for (const auto& player : spec.players) {
        for (int s = 0; s < player.sessions; ++s) {
            for (std::size_t g = 0; g < spec.games.size(); ++g) {
                const std::uint64_t seed = derive_seed(
                    master_seed, player.id, static_cast<std::uint64_t>(s) * 16 + g);
                auto [log, truth] =
                    simulate_session(spec.games[g], player.params, seed, player.id, s);
                out.logs.push_back(std::move(log));
                out.truths.push_back(std::move(truth));
            }
        }
    }
    return out;
}

}  // namespace pxlog
