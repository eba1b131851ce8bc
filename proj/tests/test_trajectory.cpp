#include <doctest.h>

#include <cmath>

#include "pxlog/errors.hpp"
#include "pxlog/rng.hpp"
#include "pxlog/trajectory.hpp"
#include "test_util.hpp"

using namespace pxlog;

namespace {

Trajectory make_traj(const std::vector<std::array<double, 4>>& rows, double tx = 2.5,
                     double tz = 6.0) {
    Trajectory t;
    t.target_x = tx;
    t.target_z = tz;
    for (const auto& r : rows) {
        t.samples.push_back({r[0], r[1], r[2], r[3]});
        t.viewed.push_back(std::nullopt);
    }
    return t;
}

TrialSegment nk_segment(Side selected, const std::vector<StateSample>& states) {
    TrialSegment seg;
    seg.trial.game = Game::NK;
    seg.trial.start_t = states.front().t;
    seg.trial.end_t = states.back().t;
    NKTrialStimulus stim;
    stim.core = {"BLUE", "RED", NKRule::semantic};
    stim.left_color = "RED";
    stim.right_color = "BLUE";
    stim.left_x = -2.5;
    stim.left_z = 6.0;
    stim.right_x = 2.5;
    stim.right_z = 6.0;
    seg.trial.stimulus = stim;
    seg.trial.correct_answer = selected == Side::left ? "knight_left" : "knight_right";
    seg.trial.response = seg.trial.correct_answer;
    seg.trial.outcome = Outcome::correct;
    seg.states = states;
    return seg;
}

StateSample state_at(Timestamp t, double x, double z, double yaw) {
    StateSample s;
    s.t = t;
    s.x = x;
    s.y = 64.0;
    s.z = z;
    s.yaw = yaw;
    s.viewed_target = "arena";
    return s;
}

}  // namespace

// -------------------------------------------------------------- canonicalize

TEST_CASE("right-selection trials pass through unchanged") {
    const auto seg = nk_segment(Side::right, {state_at(0, 0.5, 1.0, 10.0), state_at(50, 0.6, 1.2, 12.0)});
    const auto traj = canonicalize(seg);
    REQUIRE(traj.has_value());
    CHECK_FALSE(traj->mirrored);
    CHECK(traj->samples[0].x == doctest::Approx(0.5));
    CHECK(traj->samples[0].yaw == doctest::Approx(10.0));
    CHECK(traj->target_x == doctest::Approx(2.5));
}

TEST_CASE("left-selection trials are mirrored to the right side") {
    const auto seg = nk_segment(Side::left, {state_at(0, -0.5, 1.0, -10.0), state_at(50, -2.0, 4.0, -20.0)});
    const auto traj = canonicalize(seg);
    REQUIRE(traj.has_value());
    CHECK(traj->mirrored);
    CHECK(traj->samples[0].x == doctest::Approx(0.5));
    CHECK(traj->samples[0].yaw == doctest::Approx(10.0));
    CHECK(traj->samples[1].x == doctest::Approx(2.0));
    CHECK(traj->target_x == doctest::Approx(2.5));  // left knight at -2.5 reflects to +2.5
}

TEST_CASE("a trial ending at x=-2 ends at +2 after reflection") {
    const auto seg = nk_segment(Side::left, {state_at(0, 0.0, 0.0, 0.0), state_at(50, -1.0, 2.0, -5.0),
                                             state_at(100, -2.0, 4.0, -9.0)});
    const auto traj = canonicalize(seg);
    REQUIRE(traj.has_value());
    CHECK(traj->samples.back().x == doctest::Approx(2.0));
}

TEST_CASE("reflection applied twice is the identity") {
    Rng rng(55);
    for (int rep = 0; rep < 50; ++rep) {
        const double x = rng.uniform(-3, 3), z = rng.uniform(0, 6), yaw = rng.uniform(-170, 170);
        // mirror twice by hand: the transform is its own inverse
        const double mx = -(-x), mz = z, myaw = -(-yaw);
        CHECK(mx == doctest::Approx(x));
        CHECK(mz == doctest::Approx(z));
        CHECK(myaw == doctest::Approx(yaw));
    }
}

TEST_CASE("fewer than two valid samples is a rejection, not an error") {
    const auto seg = nk_segment(Side::right, {state_at(0, 0, 0, 0)});
    CHECK_FALSE(canonicalize(seg).has_value());

    // duplicate timestamps collapse to one valid sample
    const auto dup = nk_segment(Side::right, {state_at(0, 0, 0, 0), state_at(0, 1, 1, 1)});
    CHECK_FALSE(canonicalize(dup).has_value());
}

TEST_CASE("timeout trials (no selection) are rejected") {
    auto seg = nk_segment(Side::right, {state_at(0, 0, 0, 0), state_at(50, 1, 1, 1)});
    seg.trial.response.reset();
    seg.trial.outcome = Outcome::timeout;
    CHECK_FALSE(canonicalize(seg).has_value());
}

TEST_CASE("non-NK segments are refused") {
    TrialSegment seg;
    seg.trial.game = Game::BB;
    CHECK_THROWS_AS(canonicalize(seg), StatError);
}

// ------------------------------------------------------------------ resample

TEST_CASE("constant trajectories resample to constants") {
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i < 7; ++i) rows.push_back({static_cast<double>(i), 1.5, 2.5, 30.0});
    const Trajectory out = resample(make_traj(rows), 120);
    REQUIRE(out.samples.size() == 120);
    for (const auto& s : out.samples) {
        CHECK(s.x == doctest::Approx(1.5));
        CHECK(s.z == doctest::Approx(2.5));
        CHECK(s.yaw == doctest::Approx(30.0));
    }
}

TEST_CASE("uniform input of the target length is returned bit-identically") {
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i < 120; ++i)
        rows.push_back({static_cast<double>(i), std::sin(0.1 * i), 0.05 * i, 3.0 * i});
    const Trajectory in = make_traj(rows);
    const Trajectory out = resample(in, 120);
    REQUIRE(out.samples.size() == in.samples.size());
    for (std::size_t i = 0; i < 120; ++i) {
        CHECK(out.samples[i].x == in.samples[i].x);
        CHECK(out.samples[i].z == in.samples[i].z);
        CHECK(out.samples[i].yaw == in.samples[i].yaw);
    }
}

TEST_CASE("a linear ramp resamples to i/(L-1)") {
    const Trajectory in = make_traj({{0.0, 0.0, 0.0, 0.0}, {1.0, 1.0, 2.0, 90.0}});
    const Trajectory out = resample(in, 120);
    for (int i = 0; i < 120; ++i) {
        const double f = static_cast<double>(i) / 119.0;
        CHECK(out.samples[static_cast<std::size_t>(i)].x == doctest::Approx(f).epsilon(1e-12));
        CHECK(out.samples[static_cast<std::size_t>(i)].z == doctest::Approx(2 * f).epsilon(1e-12));
    }
}

TEST_CASE("endpoints are preserved exactly and resampling is idempotent") {
    Rng rng(8);
    std::vector<std::array<double, 4>> rows;
    double t = 0;
    for (int i = 0; i < 37; ++i) {
        rows.push_back({t, rng.uniform(-2, 2), rng.uniform(0, 6), rng.uniform(-40, 40)});
        t += rng.uniform(0.03, 0.2);
    }
    const Trajectory in = make_traj(rows);
    const Trajectory once = resample(in, 120);
    CHECK(once.samples.front().x == in.samples.front().x);
    CHECK(once.samples.back().x == in.samples.back().x);
    CHECK(once.samples.back().yaw == in.samples.back().yaw);
    const Trajectory twice = resample(once, 120);
    for (std::size_t i = 0; i < 120; ++i) {
        CHECK(twice.samples[i].x == once.samples[i].x);
        CHECK(twice.samples[i].z == once.samples[i].z);
        CHECK(twice.samples[i].yaw == once.samples[i].yaw);
    }
}

// ------------------------------------------------------------------ features

TEST_CASE("heading series satisfies sin^2 + cos^2 = 1") {
    Rng rng(9);
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i < 50; ++i)
        rows.push_back({i * 0.05, rng.uniform(-2, 2), rng.uniform(0, 6), rng.uniform(-720, 720)});
    const HeadingSeries h = heading_series(make_traj(rows));
    for (std::size_t i = 0; i < h.heading_deg.size(); ++i) {
        CHECK(h.sin_h[i] * h.sin_h[i] + h.cos_h[i] * h.cos_h[i] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(h.heading_deg[i] >= -180.0);
        CHECK(h.heading_deg[i] < 180.0);
    }
}

TEST_CASE("stationary trajectory: degenerate features follow the conventions") {
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i < 120; ++i) rows.push_back({i * 0.05, 0.0, 0.0, 0.0});
    const Trajectory traj = make_traj(rows);
    const FeatureVector f = features27(traj, heading_series(traj));
    CHECK(f[6] == 0.0);  // net displacement
    CHECK(f[7] == 0.0);  // path length
    CHECK(f[8] == 0.0);  // straightness defined as 0 when path = 0
    CHECK(f[11] == 0.0);  // mean speed
}

TEST_CASE("straight constant-speed run at the target maxes straightness") {
    std::vector<std::array<double, 4>> rows;
    const double bearing = std::atan2(2.5, 6.0) * 180.0 / M_PI;
    for (int i = 0; i < 120; ++i) {
        const double f = 0.9 * i / 119.0;  // stops just short of the knight
        rows.push_back({i * 0.05, 2.5 * f, 6.0 * f, bearing});
    }
    const Trajectory traj = make_traj(rows);
    const FeatureVector f = features27(traj, heading_series(traj));
    CHECK(f[8] == doctest::Approx(1.0).epsilon(1e-9));   // straightness
    CHECK(f[9] == doctest::Approx(0.0).epsilon(1e-9));   // max lateral deviation
    CHECK(f[22] == doctest::Approx(1.0).epsilon(1e-9));  // aligned the whole way
    CHECK(f[23] == 0.0);                                  // first alignment at index 0
}

TEST_CASE("equal resampled trajectories give equal features regardless of original pacing") {
    // same geometric path, sampled once uniformly and once with erratic timing
    auto path_point = [](double u) {
        return std::array<double, 2>{2.5 * u + 0.8 * std::sin(3.14159 * u), 6.0 * u};
    };
    std::vector<std::array<double, 4>> uniform_rows, erratic_rows;
    for (int i = 0; i < 200; ++i) {
        const double u = i / 199.0;
        const auto p = path_point(u);
        uniform_rows.push_back({u * 2.0, p[0], p[1], 15.0 * u});
    }
    Rng rng(12);
    double tu = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double u = i / 199.0;
        const auto p = path_point(u);
        // same normalized-time samples, wildly uneven wall-clock spacing
        tu = u * 2.0;
        erratic_rows.push_back({tu, p[0], p[1], 15.0 * u});
    }
    const Trajectory a = resample(make_traj(uniform_rows), 120);
    const Trajectory b = resample(make_traj(erratic_rows), 120);
    const FeatureVector fa = features27(a, heading_series(a));
    const FeatureVector fb = features27(b, heading_series(b));
    for (int i = 0; i < kFeatureCount; ++i)
        CHECK(fa[static_cast<std::size_t>(i)] ==
              doctest::Approx(fb[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("feature vector is finite and the name table lines up") {
    CHECK(kFeatureNames.size() == 27);
    Rng rng(77);
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i < 64; ++i)
        rows.push_back({i * 0.05, rng.uniform(-3, 3), rng.uniform(0, 6), rng.uniform(-90, 90)});
    const Trajectory traj = resample(make_traj(rows), 120);
    const FeatureVector f = features27(traj, heading_series(traj));
    for (const double v : f) CHECK(std::isfinite(v));
}

// ------------------------------------------------------------ classification

TEST_CASE("classification crosses directness with fixation") {
    std::vector<std::array<double, 4>> straight, detour;
    for (int i = 0; i < 60; ++i) {
        const double u = i / 59.0;
        straight.push_back({u, 2.0 * u, 5.0 * u, 0.0});
        // a 2-block lateral excursion midway
        detour.push_back({u, 2.0 * u - 2.0 * std::sin(3.14159 * u), 5.0 * u, 0.0});
    }
    const Trajectory direct = make_traj(straight, 2.0, 5.0);
    const Trajectory indirect = make_traj(detour, 2.0, 5.0);
    CHECK(classify_trial(direct, 0.5, true) == TrialType::DG);
    CHECK(classify_trial(direct, 0.5, false) == TrialType::DN);
    CHECK(classify_trial(indirect, 0.5, true) == TrialType::IG);
    CHECK(classify_trial(indirect, 0.5, false) == TrialType::IN);
}

TEST_CASE("classification is invariant to uniform speed scaling") {
    std::vector<std::array<double, 4>> rows, slow_rows;
    for (int i = 0; i < 60; ++i) {
        const double u = i / 59.0;
        rows.push_back({u, 1.5 * u - 0.9 * std::sin(3.14159 * u), 6.0 * u, 0.0});
        slow_rows.push_back({u * 7.0, 1.5 * u - 0.9 * std::sin(3.14159 * u), 6.0 * u, 0.0});
    }
    const Trajectory fast = make_traj(rows, 1.5, 6.0);
    const Trajectory slow = make_traj(slow_rows, 1.5, 6.0);
    CHECK(classify_trial(fast, 0.5, true) == classify_trial(slow, 0.5, true));
    CHECK(max_lateral_deviation(fast) == doctest::Approx(max_lateral_deviation(slow)));
}

// -------------------------------------------------------------- profiles/JSD

TEST_CASE("session_profile is a normalized histogram") {
    CHECK(session_profile({TrialType::DG, TrialType::DG}).p ==
          std::array<double, 4>{1.0, 0.0, 0.0, 0.0});
    const SessionProfile half =
        session_profile({TrialType::DG, TrialType::IG, TrialType::DG, TrialType::IG});
    CHECK(half.p == std::array<double, 4>{0.5, 0.5, 0.0, 0.0});
    CHECK_THROWS_AS(session_profile({}), StatError);

    // a 40-trial mixed tally
    std::vector<TrialType> mixed;
    for (int i = 0; i < 12; ++i) mixed.push_back(TrialType::DG);
    for (int i = 0; i < 18; ++i) mixed.push_back(TrialType::IG);
    for (int i = 0; i < 4; ++i) mixed.push_back(TrialType::DN);
    for (int i = 0; i < 6; ++i) mixed.push_back(TrialType::IN);
    const SessionProfile prof = session_profile(mixed);
    CHECK(prof.p[0] == doctest::Approx(0.30));
    CHECK(prof.p[1] == doctest::Approx(0.45));
    CHECK(prof.p[2] == doctest::Approx(0.10));
    CHECK(prof.p[3] == doctest::Approx(0.15));
}

TEST_CASE("jsd fixed points and the extended-precision fixture") {
    const SessionProfile a{{1, 0, 0, 0}};
    const SessionProfile b{{0, 1, 0, 0}};
    CHECK(jsd(a, a) == 0.0);
    CHECK(jsd(a, b) == doctest::Approx(1.0).epsilon(1e-12));  // disjoint support, base 2
    const SessionProfile c{{0.5, 0.5, 0, 0}};
    const SessionProfile d{{0.25, 0.25, 0.25, 0.25}};
    CHECK(jsd(c, d) == doctest::Approx(0.5579230452841438).epsilon(1e-12));
}

TEST_CASE("jsd metric axioms on random profile triples") {
    Rng rng(5005);
    auto random_profile = [&] {
        SessionProfile p;
        double sum = 0;
        for (int i = 0; i < 4; ++i) {
            p.p[static_cast<std::size_t>(i)] = rng.bernoulli(0.2) ? 0.0 : rng.uniform(0.0, 1.0);
            sum += p.p[static_cast<std::size_t>(i)];
        }
        if (sum == 0) p.p[0] = sum = 1.0;
        for (auto& v : p.p) v /= sum;
        return p;
    };
    for (int rep = 0; rep < 3000; ++rep) {
        const SessionProfile a = random_profile(), b = random_profile(), c = random_profile();
        const double ab = jsd(a, b), ba = jsd(b, a), ac = jsd(a, c), cb = jsd(c, b);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));   // symmetry
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0 + 1e-12);
        CHECK(ab <= ac + cb + 1e-9);                        // triangle inequality
        CHECK(jsd(a, a) == 0.0);                            // identity
    }
}

// ------------------------------------------------------------ identification

TEST_CASE("two players with orthogonal profiles identify perfectly") {
    const SessionProfile all_dg{{1, 0, 0, 0}};
    const SessionProfile all_in{{0, 0, 0, 1}};
    const IdentifyResult res = identify({{"alice", all_dg},
                                         {"alice", all_dg},
                                         {"bob", all_in},
                                         {"bob", all_in}});
    REQUIRE(res.players.size() == 2);
    CHECK(res.matrix[0][0] == doctest::Approx(100.0));
    CHECK(res.matrix[1][1] == doctest::Approx(100.0));
    CHECK(res.mean_diagonal == doctest::Approx(100.0));
}

TEST_CASE("vote arithmetic is traceable by hand") {
    // alice's two sessions are identical; bob sits close to alice, carol far.
    const SessionProfile pa{{0.8, 0.2, 0, 0}};
    const SessionProfile pb{{0.6, 0.4, 0, 0}};
    const SessionProfile pc{{0, 0, 0.5, 0.5}};
    const IdentifyResult res =
        identify({{"alice", pa}, {"alice", pa}, {"bob", pb}, {"bob", pb}, {"carol", pc}, {"carol", pc}});
    // every session's nearest leave-one-out average is its own player, so each
    // row concentrates its votes on the diagonal
    CHECK(res.mean_diagonal == doctest::Approx(100.0));

    // a lone session (leave-one-out average empty -> uniform) still ranks:
    // bob's profile is nearer to alice's average than to uniform, so the vote
    // goes to alice and the true player earns the rank-2 partial credit
    const IdentifyResult lone = identify({{"alice", pa}, {"alice", pa}, {"bob", pb}});
    const std::size_t bob_row = 1;
    CHECK(lone.matrix[bob_row][0] == doctest::Approx(100.0 * 1.0 / 1.5));  // 1.0 vote to alice
    CHECK(lone.matrix[bob_row][1] == doctest::Approx(100.0 * 0.5 / 1.5));  // 0.5 to bob at rank 2
}

TEST_CASE("a single player yields a 1x1 matrix at 100%") {
    const SessionProfile p{{0.7, 0.1, 0.1, 0.1}};
    const IdentifyResult res = identify({{"solo", p}});
    REQUIRE(res.players.size() == 1);
    CHECK(res.matrix[0][0] == doctest::Approx(100.0));
    CHECK(res.mean_diagonal == doctest::Approx(100.0));
}

TEST_CASE("exact ties are flagged and broken by player order") {
    const SessionProfile p{{1, 0, 0, 0}};
    const IdentifyResult res = identify({{"a", p}, {"a", p}, {"b", p}, {"b", p}});
    CHECK(res.had_ties);
    // both rows vote for player "a" first (tie-break by index)
    CHECK(res.matrix[1][0] > 0.0);
}
