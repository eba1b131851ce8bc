#include "pxlog/task_engine.hpp"

#include <algorithm>
#include <set>

#include "pxlog/errors.hpp"

namespace pxlog {

const char* to_string(NKRule r) { return r == NKRule::semantic ? "semantic" : "color"; }
const char* to_string(DDRule r) {
    switch (r) {
        case DDRule::color: return "color";
        case DDRule::shape: return "shape";
        case DDRule::quantity: return "quantity";
    }
    return "?";
}
const char* to_string(Species s) { return s == Species::cow ? "cow" : "pig"; }
const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

NKRule nk_rule_from_string(const std::string& s) {
    if (s == "semantic") return NKRule::semantic;
    if (s == "color") return NKRule::color;
    throw ValidationError("unknown NK rule '" + s + "'");
}
DDRule dd_rule_from_string(const std::string& s) {
    if (s == "color") return DDRule::color;
    if (s == "shape") return DDRule::shape;
    if (s == "quantity") return DDRule::quantity;
    throw ValidationError("unknown DD rule '" + s + "'");
}
Species species_from_string(const std::string& s) {
    if (s == "cow") return Species::cow;
    if (s == "pig") return Species::pig;
    throw ValidationError("unknown species '" + s + "'");
}
Side side_from_string(const std::string& s) {
    if (s == "left") return Side::left;
    if (s == "right") return Side::right;
    throw ValidationError("unknown side '" + s + "'");
}

// ---------------------------------------------------------------- Nether Knight

std::string nk_correct_target(const NKStimulus& s) {
    return s.rule == NKRule::semantic ? s.word : s.ink;
}

std::vector<NKStimulus> nk_schedule(NKRule rule, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<NKStimulus> out;
    out.reserve(kNkTrialCount);
    for (int i = 0; i < kNkTrialCount; ++i) {
        const int w = static_cast<int>(rng.uniform_int(0, 3));
        int k = static_cast<int>(rng.uniform_int(0, 2));  // ink drawn from the other three
        if (k >= w) ++k;
        out.push_back({kNkColors[static_cast<std::size_t>(w)], kNkColors[static_cast<std::size_t>(k)], rule});
    }
    return out;
}

// ---------------------------------------------------------------- Door Decipher

int dd_correct_door(const DDTrial& t) {
    for (int i = 0; i < 4; ++i) {
        const auto& d = t.doors[static_cast<std::size_t>(i)];
        const bool match = t.active_rule == DDRule::color      ? d.color == t.key.color
                           : t.active_rule == DDRule::shape    ? d.shape == t.key.shape
                                                               : d.quantity == t.key.quantity;
        if (match) return i;
    }
    throw ValidationError("DD trial has no door matching the active rule");
}

namespace {

// A value different from `taken`, drawn uniformly from the remaining three.
template <std::size_t N>
std::string draw_other(const std::array<const char*, N>& pool, const std::string& taken, Rng& rng) {
    std::string v;
    do {
        v = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(N) - 1))];
    } while (v == taken);
    return v;
}

int draw_other_qty(int taken, Rng& rng) {
    int v;
    do {
        v = static_cast<int>(rng.uniform_int(1, 4));
    } while (v == taken);
    return v;
}

}  // namespace

DDTrial dd_generate_trial(DDRule active_rule, Rng& rng) {
    DDTrial t;
    t.active_rule = active_rule;
    t.key.color = kDdColors[static_cast<std::size_t>(rng.uniform_int(0, 3))];
    t.key.shape = kDdShapes[static_cast<std::size_t>(rng.uniform_int(0, 3))];
    t.key.quantity = static_cast<int>(rng.uniform_int(1, 4));

    // One door per dimension matches the key on that dimension only; the
    // fourth door matches on nothing. Distinctness is forced by construction.
    DDCard color_door{t.key.color, draw_other(kDdShapes, t.key.shape, rng),
                      draw_other_qty(t.key.quantity, rng)};
    DDCard shape_door{draw_other(kDdColors, t.key.color, rng), t.key.shape,
                      draw_other_qty(t.key.quantity, rng)};
    DDCard qty_door{draw_other(kDdColors, t.key.color, rng), draw_other(kDdShapes, t.key.shape, rng),
                    t.key.quantity};
    DDCard null_door{draw_other(kDdColors, t.key.color, rng), draw_other(kDdShapes, t.key.shape, rng),
                     draw_other_qty(t.key.quantity, rng)};

    std::vector<DDCard> doors = {color_door, shape_door, qty_door, null_door};
    rng.shuffle(doors);
    std::copy(doors.begin(), doors.end(), t.doors.begin());
    return t;
}

std::vector<DDTrial> dd_schedule(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<DDTrial> out;
    out.reserve(kDdTrialCount);
    const std::array<DDRule, 3> rules = {DDRule::color, DDRule::shape, DDRule::quantity};
    DDRule rule = rules[static_cast<std::size_t>(rng.uniform_int(0, 2))];
    for (int block = 0; block < kDdTrialCount / kDdBlockLength; ++block) {
        if (block > 0) {
            // switch to one of the two other rules
            DDRule next;
            do {
                next = rules[static_cast<std::size_t>(rng.uniform_int(0, 2))];
            } while (next == rule);
            rule = next;
        }
        for (int i = 0; i < kDdBlockLength; ++i) out.push_back(dd_generate_trial(rule, rng));
    }
    return out;
}

// ---------------------------------------------------------------- Barnyard Blast

Side bb_correct_side(const BBStimulus& s) {
    return s.species == Species::cow ? s.center_dir : opposite(s.center_dir);
}

std::vector<BBStimulus> bb_schedule(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<BBStimulus> out;
    out.reserve(kBbTrialCount);
    for (const Species sp : {Species::cow, Species::pig})
        for (const bool cong : {true, false})
            for (int i = 0; i < kBbTrialCount / 4; ++i)
                out.push_back({sp, i % 2 == 0 ? Side::left : Side::right, cong});
    rng.shuffle(out);
    return out;
}

// ---------------------------------------------------------------- Rainbow Random

RRPattern rr_generate_pattern(int size, Rng& rng) {
    if (size < 1) throw ValidationError("pattern size must be >= 1");
    RRPattern p;
    p.size = size;
    std::set<std::pair<int, int>> occupied;
    std::vector<std::pair<int, int>> frontier;
    auto place = [&](int gx, int gz) {
        occupied.insert({gx, gz});
        frontier.push_back({gx, gz});
        p.cells.push_back({gx, gz, kRrColors[static_cast<std::size_t>(rng.uniform_int(0, 2))]});
    };
    place(4, 4);
    static constexpr int dx[4] = {1, -1, 0, 0};
    static constexpr int dz[4] = {0, 0, 1, -1};
    while (static_cast<int>(p.cells.size()) < size) {
        const auto& base = frontier[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(frontier.size()) - 1))];
        const int d = static_cast<int>(rng.uniform_int(0, 3));
        const int gx = std::clamp(base.first + dx[d], 0, 7);
        const int gz = std::clamp(base.second + dz[d], 0, 7);
        if (!occupied.count({gx, gz})) place(gx, gz);
    }
    std::sort(p.cells.begin(), p.cells.end());
    return p;
}

RRJudgment rr_judge(const RRPattern& target, const RRPattern& built) {
    if (target.cells.empty()) throw ValidationError("rr_judge: empty target pattern");
    std::set<RRCell> t(target.cells.begin(), target.cells.end());
    std::set<RRCell> b(built.cells.begin(), built.cells.end());
    std::size_t matches = 0;
    for (const auto& c : b)
        if (t.count(c)) ++matches;
    const double denom = static_cast<double>(std::max(t.size(), b.size()));
    RRJudgment j;
    j.accuracy = static_cast<double>(matches) / denom;
    j.pass = j.accuracy > 0.80;
    return j;
}

RRState rr_step(RRState s, bool pass) {
    if (s.finished) throw ValidationError("rr_step on finished staircase");
    const int size = s.current_size;
    s.history.push_back({size, pass});
    if (pass) {
        if (size >= kRrMaxSize)
            s.finished = true;  // a passed size-10 pattern ends the run
        else
            s.current_size = size + 1;
    } else {
        const int fails = ++s.fail_counts[size];
        if (fails >= 2)
            s.finished = true;  // two failures at the same size, not necessarily consecutive
        else
            s.current_size = std::max(1, size - 1);
    }
    return s;
}

}  // namespace pxlog
