#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pxlog/rng.hpp"

namespace pxlog {

// ---------------------------------------------------------------- Nether Knight

// Word/ink palette shared with Door Decipher's color attribute.
inline constexpr std::array<const char*, 4> kNkColors = {"RED", "BLUE", "GREEN", "YELLOW"};

enum class NKRule { semantic, color };

/// Incongruent colored-word stimulus; word and ink always differ.
struct NKStimulus {
    std::string word;
    std::string ink;
    NKRule rule{NKRule::semantic};

    friend bool operator==(const NKStimulus&, const NKStimulus&) = default;
};

// Armor color of the knight that must be selected.
std::string nk_correct_target(const NKStimulus& s);

// 40 incongruent stimuli; the two knights on a trial wear {word, ink}.
std::vector<NKStimulus> nk_schedule(NKRule rule, std::uint64_t seed);

// ---------------------------------------------------------------- Door Decipher

enum class DDRule { color, shape, quantity };

inline constexpr std::array<const char*, 4> kDdColors = {"red", "blue", "green", "yellow"};
inline constexpr std::array<const char*, 4> kDdShapes = {"circle", "square", "triangle", "plus"};

struct DDCard {
    std::string color;
    std::string shape;
    int quantity{1};  // 1..4

    friend bool operator==(const DDCard&, const DDCard&) = default;
};

/// One trial: a key card and four doors, exactly one of which matches the key
/// on the active rule. The color-, shape- and quantity-matching doors are three
/// distinct doors and the fourth matches on nothing, so feedback across a block
/// identifies the rule.
struct DDTrial {
    DDCard key;
    std::array<DDCard, 4> doors;
    DDRule active_rule{DDRule::color};

    friend bool operator==(const DDTrial&, const DDTrial&) = default;
};

int dd_correct_door(const DDTrial& t);
DDTrial dd_generate_trial(DDRule active_rule, Rng& rng);

// 42 trials in six blocks of 7; the rule changes at every block boundary.
std::vector<DDTrial> dd_schedule(std::uint64_t seed);

// ---------------------------------------------------------------- Barnyard Blast

enum class Species { cow, pig };
enum class Side { left, right };

inline Side opposite(Side s) { return s == Side::left ? Side::right : Side::left; }

struct BBStimulus {
    Species species{Species::cow};
    Side center_dir{Side::left};
    bool congruent{true};  // flankers face the same way as the center animal

    friend bool operator==(const BBStimulus&, const BBStimulus&) = default;
};

// cow -> center direction; pig -> opposite. Flankers never change the answer.
Side bb_correct_side(const BBStimulus& s);

// 48 trials, 12 per (species x congruence) cell, seeded shuffle.
std::vector<BBStimulus> bb_schedule(std::uint64_t seed);

// ---------------------------------------------------------------- Rainbow Random

inline constexpr std::array<const char*, 3> kRrColors = {"red", "green", "blue"};

struct RRCell {
    int gx{0};
    int gz{0};
    std::string color;

    friend bool operator==(const RRCell&, const RRCell&) = default;
    friend auto operator<=>(const RRCell&, const RRCell&) = default;
};

struct RRPattern {
    int size{0};  // number of blocks requested
    std::vector<RRCell> cells;

    friend bool operator==(const RRPattern&, const RRPattern&) = default;
};

// Random connected-ish 2-D arrangement of `size` colored blocks on an 8x8 grid.
RRPattern rr_generate_pattern(int size, Rng& rng);

struct RRJudgment {
    double accuracy{0.0};
    bool pass{false};
};

// accuracy = |cells matching in position and color| / max(|target|, |built|);
// pass requires strictly more than 80%.
RRJudgment rr_judge(const RRPattern& target, const RRPattern& built);

/// Staircase state. Pass raises the size (cap 10), fail lowers it (floor 1) and
/// charges a failure against the attempted size. The run finishes when any size
/// accumulates two failures (not necessarily consecutive) or a size-10 pattern
/// is passed.
struct RRState {
    int current_size{1};
    std::map<int, int> fail_counts;
    bool finished{false};
    std::vector<std::pair<int, bool>> history;  // (attempted size, passed)
};

RRState rr_step(RRState s, bool pass);

// ---------------------------------------------------------------- timing metadata

/// Schedule timing constants used by the simulator and trial bookkeeping.
/// The stimulus stays visible 5000 ms and feedback is shown 1500 ms. Trials
/// with no response at all are closed as timeouts after response_timeout_ms;
/// slow responses past 10 s remain ordinary trials (they are the cleaning
/// stage's job to exclude), so the limit sits well above the 10 s RT cutoff.
struct TrialTiming {
    int stimulus_ms{5000};
    int feedback_ms{1500};
    int response_timeout_ms{30000};
};

inline constexpr int kNkTrialCount = 40;
inline constexpr int kDdTrialCount = 42;
inline constexpr int kDdBlockLength = 7;
inline constexpr int kBbTrialCount = 48;
inline constexpr int kRrMaxSize = 10;

const char* to_string(NKRule r);
const char* to_string(DDRule r);
const char* to_string(Species s);
const char* to_string(Side s);
NKRule nk_rule_from_string(const std::string& s);
DDRule dd_rule_from_string(const std::string& s);
Species species_from_string(const std::string& s);
Side side_from_string(const std::string& s);

}  // namespace pxlog
