#include <doctest.h>

#include <map>
#include <set>

#include "pxlog/errors.hpp"
#include "pxlog/task_engine.hpp"

using namespace pxlog;

// ---------------------------------------------------------------- Nether Knight

TEST_CASE("nk_correct_target follows the instructed rule") {
    CHECK(nk_correct_target({"BLUE", "RED", NKRule::semantic}) == "BLUE");
    CHECK(nk_correct_target({"BLUE", "RED", NKRule::color}) == "RED");
    CHECK(nk_correct_target({"GREEN", "YELLOW", NKRule::color}) == "YELLOW");
}

TEST_CASE("nk_schedule: 40 incongruent stimuli, deterministic per seed") {
    const auto s1 = nk_schedule(NKRule::semantic, 7);
    const auto s2 = nk_schedule(NKRule::semantic, 7);
    const auto s3 = nk_schedule(NKRule::semantic, 8);
    CHECK(s1.size() == 40);
    CHECK(s1 == s2);
    CHECK(s1 != s3);
    for (const auto& s : s1) {
        CHECK(s.word != s.ink);
        // the two rules always disagree on the correct target
        NKStimulus color_variant = s;
        color_variant.rule = NKRule::color;
        CHECK(nk_correct_target(s) != nk_correct_target(color_variant));
    }
}

// ---------------------------------------------------------------- Door Decipher

namespace {

int count_matches(const DDTrial& t, DDRule rule) {
    int n = 0;
    for (const auto& d : t.doors) {
        if (rule == DDRule::color && d.color == t.key.color) ++n;
        if (rule == DDRule::shape && d.shape == t.key.shape) ++n;
        if (rule == DDRule::quantity && d.quantity == t.key.quantity) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("dd trials: one match per dimension, distinct match doors, one null door") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const DDRule rule = static_cast<DDRule>(i % 3);
        const DDTrial t = dd_generate_trial(rule, rng);
        CHECK(count_matches(t, DDRule::color) == 1);
        CHECK(count_matches(t, DDRule::shape) == 1);
        CHECK(count_matches(t, DDRule::quantity) == 1);

        int color_door = -1, shape_door = -1, qty_door = -1;
        for (int d = 0; d < 4; ++d) {
            const auto& door = t.doors[static_cast<std::size_t>(d)];
            if (door.color == t.key.color) color_door = d;
            if (door.shape == t.key.shape) shape_door = d;
            if (door.quantity == t.key.quantity) qty_door = d;
        }
        CHECK(color_door != shape_door);
        CHECK(color_door != qty_door);
        CHECK(shape_door != qty_door);

        // the correct door identifies the active rule from a single trial
        const auto& chosen = t.doors[static_cast<std::size_t>(dd_correct_door(t))];
        int consistent = 0;
        if (chosen.color == t.key.color) ++consistent;
        if (chosen.shape == t.key.shape) ++consistent;
        if (chosen.quantity == t.key.quantity) ++consistent;
        CHECK(consistent == 1);
    }
}

TEST_CASE("dd_correct_door applies the rule") {
    Rng rng(5);
    const DDTrial t = dd_generate_trial(DDRule::quantity, rng);
    const int d = dd_correct_door(t);
    CHECK(t.doors[static_cast<std::size_t>(d)].quantity == t.key.quantity);
}

TEST_CASE("dd_schedule: 42 trials, rule constant within blocks, changed across") {
    const auto sched = dd_schedule(123);
    CHECK(sched.size() == 42);
    CHECK(dd_schedule(123) == sched);
    for (int block = 0; block < 6; ++block) {
        const DDRule rule = sched[static_cast<std::size_t>(block * 7)].active_rule;
        for (int i = 0; i < 7; ++i)
            CHECK(sched[static_cast<std::size_t>(block * 7 + i)].active_rule == rule);
        if (block > 0) CHECK(sched[static_cast<std::size_t>(block * 7 - 1)].active_rule != rule);
    }
}

// ---------------------------------------------------------------- Barnyard Blast

TEST_CASE("bb_correct_side: cows match, pigs reverse, flankers never matter") {
    CHECK(bb_correct_side({Species::cow, Side::right, true}) == Side::right);
    CHECK(bb_correct_side({Species::pig, Side::right, false}) == Side::left);
    CHECK(bb_correct_side({Species::cow, Side::right, false}) == Side::right);
    for (const Species sp : {Species::cow, Species::pig})
        for (const Side dir : {Side::left, Side::right})
            CHECK(bb_correct_side({sp, dir, true}) == bb_correct_side({sp, dir, false}));
}

TEST_CASE("bb_schedule: 48 trials, 12 per species x congruence cell") {
    const auto sched = bb_schedule(3);
    CHECK(sched.size() == 48);
    CHECK(bb_schedule(3) == sched);
    std::map<std::pair<Species, bool>, int> cells;
    for (const auto& s : sched) cells[{s.species, s.congruent}]++;
    CHECK(cells.size() == 4);
    for (const auto& [cell, n] : cells) CHECK(n == 12);
}

// ---------------------------------------------------------------- Rainbow Random

TEST_CASE("rr_step trace: 1P 2P 3F leads back to size 2") {
    RRState s;
    s = rr_step(std::move(s), true);
    CHECK(s.current_size == 2);
    s = rr_step(std::move(s), true);
    CHECK(s.current_size == 3);
    s = rr_step(std::move(s), false);
    CHECK(s.current_size == 2);
    CHECK_FALSE(s.finished);
}

TEST_CASE("rr_step: passing size 10 finishes the run") {
    RRState s;
    s.current_size = 10;
    s = rr_step(std::move(s), true);
    CHECK(s.finished);
}

TEST_CASE("rr_step: two cumulative failures at one size finish the run") {
    RRState s;
    s.current_size = 2;
    s = rr_step(std::move(s), false);  // first failure at 2
    CHECK_FALSE(s.finished);
    CHECK(s.current_size == 1);
    s = rr_step(std::move(s), true);  // back to 2
    CHECK(s.current_size == 2);
    s = rr_step(std::move(s), false);  // second failure at 2, not consecutive
    CHECK(s.finished);
}

TEST_CASE("rr_step on a finished staircase is an error") {
    RRState s;
    s.finished = true;
    CHECK_THROWS_AS(rr_step(std::move(s), true), ValidationError);
}

TEST_CASE("rr staircase property: size stays in range, terminates within 40 steps") {
    Rng rng(2024);
    for (int run = 0; run < 200; ++run) {
        RRState s;
        int steps = 0;
        while (!s.finished) {
            CHECK(s.current_size >= 1);
            CHECK(s.current_size <= 10);
            s = rr_step(std::move(s), rng.bernoulli(0.55));
            REQUIRE(++steps <= 40);
        }
    }
}

TEST_CASE("rr_judge: boundary arithmetic") {
    Rng rng(1);
    const RRPattern target = rr_generate_pattern(5, rng);

    SUBCASE("perfect rebuild passes") {
        const RRJudgment j = rr_judge(target, target);
        CHECK(j.accuracy == doctest::Approx(1.0));
        CHECK(j.pass);
    }
    SUBCASE("4 of 5 with no extras is exactly 0.8 and fails") {
        RRPattern built = target;
        built.cells.pop_back();
        const RRJudgment j = rr_judge(target, built);
        CHECK(j.accuracy == doctest::Approx(0.8));
        CHECK_FALSE(j.pass);  // strictly-greater rule
    }
    SUBCASE("5 of 5 plus one extra block is 5/6 and passes") {
        RRPattern built = target;
        built.cells.push_back({7, 7, "red"});
        const RRJudgment j = rr_judge(target, built);
        CHECK(j.accuracy == doctest::Approx(5.0 / 6.0));
        CHECK(j.pass);
    }
    SUBCASE("empty target is an error") {
        CHECK_THROWS_AS(rr_judge(RRPattern{}, target), ValidationError);
    }
}

TEST_CASE("rr_generate_pattern: requested size, unique cells, palette colors") {
    Rng rng(9);
    for (int size = 1; size <= 10; ++size) {
        const RRPattern p = rr_generate_pattern(size, rng);
        CHECK(p.size == size);
        CHECK(p.cells.size() == static_cast<std::size_t>(size));
        std::set<std::pair<int, int>> uniq;
        for (const auto& c : p.cells) {
            uniq.insert({c.gx, c.gz});
            CHECK((c.color == "red" || c.color == "green" || c.color == "blue"));
        }
        CHECK(uniq.size() == p.cells.size());
    }
}
