#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pxlog/task_engine.hpp"

namespace pxlog {

// Milliseconds since session start. Non-negative, non-decreasing per stream.
using Timestamp = std::int64_t;

enum class Game { NK, DD, BB, RR };

const char* to_string(Game g);
Game game_from_string(const std::string& s);

// Canonical on-disk precision: positions carry 4 decimals, angles 2. Values in
// a LogFile are expected to already be quantized this way; the writer refuses
// nothing but formats at exactly that precision, so construction-side
// quantization is what makes parse(write(L)) == L hold exactly.
double quantize(double v, int decimals);
inline double quantize_pos(double v) { return quantize(v, 4); }
// Also folds the result into [-180, 180) so 179.996... cannot round to 180.
double quantize_yaw(double v);
inline double quantize_angle(double v) { return quantize(v, 2); }

/// High-frequency (20 Hz) player state sample.
struct StateSample {
    Timestamp t{0};
    double x{0.0}, y{0.0}, z{0.0};  // block units
    double yaw{0.0};                // degrees, [-180, 180)
    double pitch{0.0};              // degrees, [-90, 90]
    std::optional<std::string> viewed_target;  // entity/block id under the crosshair

    friend bool operator==(const StateSample&, const StateSample&) = default;
};

struct BlockCell {
    int gx{0}, gy{0}, gz{0};
    std::string kind;

    friend bool operator==(const BlockCell&, const BlockCell&) = default;
};

/// Low-frequency (<= 1 Hz) environment snapshot.
struct EnvSample {
    Timestamp t{0};
    std::vector<BlockCell> blocks;

    friend bool operator==(const EnvSample&, const EnvSample&) = default;
};

enum class EventKind {
    click_select,
    door_enter,
    shot,
    block_place,
    block_break,
    trial_feedback,
    skip_phase,
};

const char* to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

/// Discrete, event-driven capture. Payload keys are fixed per kind; values are
/// strings so the canonical byte form is unambiguous.
struct GameEvent {
    Timestamp t{0};
    EventKind kind{EventKind::click_select};
    std::map<std::string, std::string> payload;

    friend bool operator==(const GameEvent&, const GameEvent&) = default;
};

enum class Outcome { correct, incorrect, timeout };

const char* to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

/// NK stimulus as logged: the word/ink/rule triple plus the knight placement
/// needed to reconstruct the trial scene (armor color and position per side).
struct NKTrialStimulus {
    NKStimulus core;
    std::string left_color, right_color;
    double left_x{0.0}, left_z{0.0};
    double right_x{0.0}, right_z{0.0};

    friend bool operator==(const NKTrialStimulus&, const NKTrialStimulus&) = default;
};

using TrialStimulus = std::variant<NKTrialStimulus, DDTrial, BBStimulus, RRPattern>;

/// One row of the trial summary. The trial window convention is
/// [start_t, end_t] with end_t = response / feedback-onset time; the 1500 ms
/// feedback period is outside the window.
struct TrialRecord {
    Game game{Game::NK};
    int trial_index{0};
    Timestamp start_t{0};
    Timestamp end_t{0};
    TrialStimulus stimulus;
    std::string correct_answer;            // target identifier
    std::optional<std::string> response;   // absent on timeout
    Outcome outcome{Outcome::correct};

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct LogHeader {
    std::string session_id;
    std::string player;
    Game game{Game::NK};
    int state_hz{20};
    int env_hz{1};
    std::uint64_t seed{0};

    friend bool operator==(const LogHeader&, const LogHeader&) = default;
};

using LogRecord = std::variant<StateSample, EnvSample, GameEvent>;

Timestamp record_time(const LogRecord& r);
// Merge-order rank for equal timestamps: state < env < event.
int record_rank(const LogRecord& r);

/// The dual-structured log: a time-ordered mixed sequence of samples/events
/// plus the per-trial summary.
struct LogFile {
    LogHeader header;
    std::vector<LogRecord> log_sequence;
    std::vector<TrialRecord> trial_summary;

    friend bool operator==(const LogFile&, const LogFile&) = default;
};

// Throws ValidationError on the first violated invariant (ranges, ordering,
// sampling cadence, trial-window coverage, outcome consistency).
void validate(const LogFile& f);

}  // namespace pxlog
