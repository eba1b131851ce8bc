#include "pxlog/log_model.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "pxlog/errors.hpp"

namespace pxlog {

const char* to_string(Game g) {
    switch (g) {
        case Game::NK: return "NK";
        case Game::DD: return "DD";
        case Game::BB: return "BB";
        case Game::RR: return "RR";
    }
    return "?";
}

Game game_from_string(const std::string& s) {
    if (s == "NK") return Game::NK;
    if (s == "DD") return Game::DD;
    if (s == "BB") return Game::BB;
    if (s == "RR") return Game::RR;
    throw ValidationError("unknown game '" + s + "'");
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::click_select: return "click_select";
        case EventKind::door_enter: return "door_enter";
        case EventKind::shot: return "shot";
        case EventKind::block_place: return "block_place";
        case EventKind::block_break: return "block_break";
        case EventKind::trial_feedback: return "trial_feedback";
        case EventKind::skip_phase: return "skip_phase";
    }
    return "?";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "click_select") return EventKind::click_select;
    if (s == "door_enter") return EventKind::door_enter;
    if (s == "shot") return EventKind::shot;
    if (s == "block_place") return EventKind::block_place;
    if (s == "block_break") return EventKind::block_break;
    if (s == "trial_feedback") return EventKind::trial_feedback;
    if (s == "skip_phase") return EventKind::skip_phase;
    throw ValidationError("unknown event kind '" + s + "'");
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::correct: return "correct";
        case Outcome::incorrect: return "incorrect";
        case Outcome::timeout: return "timeout";
    }
    return "?";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "correct") return Outcome::correct;
    if (s == "incorrect") return Outcome::incorrect;
    if (s == "timeout") return Outcome::timeout;
    throw ValidationError("unknown outcome '" + s + "'");
}

double quantize(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

double quantize_yaw(double v) {
    double q = quantize(v, 2);
    while (q >= 180.0) q -= 360.0;
    while (q < -180.0) q += 360.0;
    return q;
}

Timestamp record_time(const LogRecord& r) {
    return std::visit([](const auto& x) { return x.t; }, r);
}

int record_rank(const LogRecord& r) {
    return static_cast<int>(r.index());  // state=0, env=1, event=2
}

namespace {

void check_payload(const GameEvent& e) {
    static const std::map<EventKind, std::vector<std::string>> schema = {
        {EventKind::click_select, {"target"}},
        {EventKind::door_enter, {"door"}},
        {EventKind::shot, {"target"}},
        {EventKind::block_place, {"color", "gx", "gy", "gz"}},
        {EventKind::block_break, {"gx", "gy", "gz"}},
        {EventKind::trial_feedback, {"result", "trial"}},
        {EventKind::skip_phase, {"phase", "trial"}},
    };
    const auto& expect = schema.at(e.kind);
    if (e.payload.size() != expect.size())
        throw ValidationError(std::string("event '") + to_string(e.kind) + "' has wrong payload keys");
    auto it = e.payload.begin();
    for (const auto& key : expect) {
        if (it->first != key)
            throw ValidationError(std::string("event '") + to_string(e.kind) +
                                  "' payload key '" + it->first + "' (expected '" + key + "')");
        ++it;
    }
}

void check_state(const StateSample& s, long seq_index) {
    const std::string at = "log_sequence[" + std::to_string(seq_index) + "]";
    if (s.t < 0) throw ValidationError(at + ": negative timestamp");
    if (s.yaw < -180.0 || s.yaw >= 180.0)
        throw ValidationError(at + ": yaw " + std::to_string(s.yaw) + " outside [-180, 180)");
    if (s.pitch < -90.0 || s.pitch > 90.0)
        throw ValidationError(at + ": pitch " + std::to_string(s.pitch) + " outside [-90, 90]");
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z))
        throw ValidationError(at + ": non-finite position");
}

}  // namespace

void validate(const LogFile& f) {
    if (f.header.state_hz <= 0 || f.header.env_hz <= 0)
        throw ValidationError("header sampling rates must be positive");

    const Timestamp state_period = 1000 / f.header.state_hz;  // 50 ms at 20 Hz

    Timestamp prev_t = -1;
    int prev_rank = -1;
    Timestamp prev_state_t = -1;
    Timestamp prev_env_t = -1;
    long i = 0;
    for (const auto& rec : f.log_sequence) {
        const Timestamp t = record_time(rec);
        const int rank = record_rank(rec);
        if (t < 0) throw ValidationError("log_sequence[" + std::to_string(i) + "]: negative timestamp");
        if (t < prev_t || (t == prev_t && rank < prev_rank))
            throw ValidationError("log_sequence[" + std::to_string(i) +
                                  "]: records out of order (t=" + std::to_string(t) + ")");
        if (const auto* s = std::get_if<StateSample>(&rec)) {
            check_state(*s, i);
            if (prev_state_t >= 0) {
                const Timestamp dt = s->t - prev_state_t;
                if (std::llabs(dt - state_period) > 1)
                    throw ValidationError("log_sequence[" + std::to_string(i) + "]: state sample spacing " +
                                          std::to_string(dt) + " ms (expected " +
                                          std::to_string(state_period) + " +- 1)");
            }
            prev_state_t = s->t;
        } else if (const auto* e = std::get_if<EnvSample>(&rec)) {
            if (prev_env_t >= 0 && e->t - prev_env_t < 1000)
                throw ValidationError("log_sequence[" + std::to_string(i) + "]: env sample period " +
                                      std::to_string(e->t - prev_env_t) + " ms < 1000");
            prev_env_t = e->t;
        } else {
            check_payload(std::get<GameEvent>(rec));
        }
        prev_t = t;
        prev_rank = rank;
        ++i;
    }

    // With spacing already checked, the stream covers a window iff it brackets it.
    Timestamp first_state_t = -1, last_state_t = -1;
    for (const auto& rec : f.log_sequence) {
        if (const auto* s = std::get_if<StateSample>(&rec)) {
            if (first_state_t < 0) first_state_t = s->t;
            last_state_t = s->t;
        }
    }

    Timestamp prev_end = -1;
    int expect_index = 0;
    for (const auto& tr : f.trial_summary) {
        const std::string at = "trial " + std::to_string(tr.trial_index);
        if (tr.trial_index != expect_index++)
            throw ValidationError(at + ": trial indices must be 0,1,2,...");
        if (tr.start_t < 0 || tr.start_t >= tr.end_t)
            throw ValidationError(at + ": window [" + std::to_string(tr.start_t) + ", " +
                                  std::to_string(tr.end_t) + "] is not start < end");
        if (tr.start_t <= prev_end)
            throw ValidationError(at + ": window overlaps previous trial");
        prev_end = tr.end_t;

        const bool match = tr.response && *tr.response == tr.correct_answer;
        if (match != (tr.outcome == Outcome::correct))
            throw ValidationError(at + ": outcome inconsistent with response/correct_answer");
        if (tr.outcome == Outcome::timeout && tr.response)
            throw ValidationError(at + ": timeout trial carries a response");

        if (first_state_t < 0 || first_state_t > tr.start_t || last_state_t < tr.end_t)
            throw ValidationError(at + ": trial window not covered by state samples");
    }
}

}  // namespace pxlog
