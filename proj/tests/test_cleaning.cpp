#include <doctest.h>

#include <cmath>

#include "pxlog/cleaning.hpp"
#include "pxlog/errors.hpp"
#include "pxlog/rng.hpp"

using namespace pxlog;

namespace {

SessionEndpoints make_session(const std::string& id, const std::vector<double>& values) {
    SessionEndpoints s;
    s.participant = "p";
    s.session_id = id;
    s.assessment = "NK";
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.trial_index.push_back(static_cast<int>(i));
        s.values_s.push_back(values[i]);
    }
    return s;
}

long kept_trials(const CleanResult& res) {
    long n = 0;
    for (const auto& s : res.kept) n += static_cast<long>(s.values_s.size());
    return n;
}

}  // namespace

TEST_CASE("homogeneous fast sessions lose nothing") {
    std::vector<double> vals(20, 0.8);
    const CleanResult res = clean_sessions({make_session("s1", vals)}, {});
    CHECK(kept_trials(res) == 20);
    CHECK(res.report.rows.size() == 1);
    CHECK(res.report.rows[0].trials_lost == 0);
    CHECK(res.report.rows[0].sessions_lost == 0);
}

TEST_CASE("session with 30% over-cutoff trials is dropped whole") {
    std::vector<double> vals(7, 1.0);
    vals.insert(vals.end(), {12.0, 15.0, 11.0});  // 3 of 10 over 10 s
    const CleanResult res = clean_sessions({make_session("s1", vals)}, {});
    CHECK(res.kept.empty());
    CHECK(res.dispositions[0].session_dropped);
    CHECK(res.report.rows[0].sessions_lost == 1);
    CHECK(res.report.rows[0].trials_lost == 10);  // the whole session counts as lost
}

TEST_CASE("session at exactly 25% over-cutoff is kept (strictly-greater rule)") {
    std::vector<double> vals(6, 1.0);
    vals.insert(vals.end(), {11.0, 12.0});  // 2 of 8 = 25%
    const CleanResult res = clean_sessions({make_session("s1", vals)}, {});
    CHECK_FALSE(res.dispositions[0].session_dropped);
    CHECK(kept_trials(res) == 6);  // the two over-cutoff trials still go at step 1
}

TEST_CASE("log-MAD catches an ultra-long trial that survives the cutoff") {
    // {0.8 x19, 9.5}: log-MAD proper is 0, the mean-AD fallback scale is
    // ~0.155, so the 9.5 s trial sits ~16 scales out and is removed
    std::vector<double> vals(19, 0.8);
    vals.push_back(9.5);
    const CleanResult res = clean_sessions({make_session("s1", vals)}, {});
    CHECK_FALSE(res.dispositions[0].session_dropped);
    CHECK(res.dispositions[0].log_mad_trials == std::vector<int>{19});
    CHECK(kept_trials(res) == 19);
    CHECK(res.report.rows[0].trials_lost == 1);
}

TEST_CASE("steps 1-2 are idempotent on their own output") {
    Rng rng(88);
    std::vector<SessionEndpoints> sessions;
    for (int s = 0; s < 12; ++s) {
        std::vector<double> vals;
        for (int i = 0; i < 40; ++i)
            vals.push_back(rng.bernoulli(0.12) ? rng.uniform(10.5, 25.0) : rng.lognormal(0.0, 0.5));
        sessions.push_back(make_session("s" + std::to_string(s), vals));
    }
    CleaningConfig cfg;
    cfg.log_mad_multiplier = 1e9;  // isolate steps 1-2
    const CleanResult once = clean_sessions(sessions, cfg);
    const CleanResult twice = clean_sessions(once.kept, cfg);
    CHECK(kept_trials(twice) == kept_trials(once));
    for (const auto& d : twice.dispositions) {
        CHECK_FALSE(d.session_dropped);
        CHECK(d.cutoff_trials.empty());
    }
}

TEST_CASE("raising the cutoff never increases step-1 losses") {
    Rng rng(99);
    std::vector<SessionEndpoints> sessions;
    for (int s = 0; s < 8; ++s) {
        std::vector<double> vals;
        for (int i = 0; i < 30; ++i) vals.push_back(rng.uniform(0.3, 14.0));
        sessions.push_back(make_session("s" + std::to_string(s), vals));
    }
    long prev_lost = std::numeric_limits<long>::max();
    for (const double cutoff : {6.0, 8.0, 10.0, 12.0, 14.0}) {
        CleaningConfig cfg;
        cfg.max_cutoff_s = cutoff;
        cfg.session_loss_threshold = 1.1;  // disable step 2
        cfg.log_mad_multiplier = 1e9;      // disable step 3
        const CleanResult res = clean_sessions(sessions, cfg);
        long lost = 0;
        for (const auto& d : res.dispositions) lost += static_cast<long>(d.cutoff_trials.size());
        CHECK(lost <= prev_lost);
        prev_lost = lost;
    }
}

TEST_CASE("report percentages are consistent with counts") {
    Rng rng(123);
    std::vector<SessionEndpoints> sessions;
    for (int s = 0; s < 10; ++s) {
        std::vector<double> vals;
        for (int i = 0; i < 25; ++i)
            vals.push_back(rng.bernoulli(0.2) ? rng.uniform(11.0, 30.0) : rng.uniform(0.5, 3.0));
        sessions.push_back(make_session("s" + std::to_string(s), vals));
    }
    const CleanResult res = clean_sessions(sessions, {});
    for (const auto& row : res.report.rows) {
        CHECK(row.trials_lost <= row.trials_total);
        CHECK(row.sessions_lost <= row.sessions_total);
        CHECK(row.trials_lost_pct ==
              doctest::Approx(100.0 * row.trials_lost / row.trials_total).epsilon(1e-12));
        CHECK(row.sessions_lost_pct ==
              doctest::Approx(100.0 * row.sessions_lost / row.sessions_total).epsilon(1e-12));
    }
    // dispositions and the report must agree
    long lost = 0, sessions_lost = 0;
    for (const auto& d : res.dispositions) {
        if (d.session_dropped) {
            ++sessions_lost;
            lost += 25;
        } else {
            lost += static_cast<long>(d.cutoff_trials.size() + d.log_mad_trials.size());
        }
    }
    CHECK(res.report.rows[0].trials_lost == lost);
    CHECK(res.report.rows[0].sessions_lost == sessions_lost);
}

TEST_CASE("cleaning preconditions") {
    CHECK_THROWS_AS(clean_sessions({}, {}), StatError);
    CHECK_THROWS_AS(clean_sessions({make_session("s", {1.0, -2.0})}, {}), StatError);
}

// --------------------------------------------------- participant-level filter

TEST_CASE("participant filter: constant values stay (fully degenerate spread)") {
    const std::vector<double> vals(6, 2.5);
    CHECK(participant_outlier_filter(vals) == vals);
}

TEST_CASE("participant filter: {1,1,1,1,100} drops the 100") {
    const std::vector<double> kept = participant_outlier_filter({1, 1, 1, 1, 100});
    CHECK(kept == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("participant filter: values within one scale unit all stay") {
    const std::vector<double> vals = {1.0, 1.1, 0.9, 1.05, 0.95};
    CHECK(participant_outlier_filter(vals) == vals);
}

TEST_CASE("participant filter needs three values") {
    CHECK_THROWS_AS(participant_outlier_filter({1.0, 2.0}), StatError);
}

// ------------------------------------------------------------------ utilities

TEST_CASE("median and robust scale") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK_THROWS_AS(median({}), StatError);
    // MAD path: {1..7} around 4 -> 1.4826 * 2
    CHECK(robust_scale({1, 2, 3, 4, 5, 6, 7}, 4.0) == doctest::Approx(1.4826 * 2).epsilon(1e-12));
    // fallback path: majority at the center
    CHECK(robust_scale({1, 1, 1, 1, 100}, 1.0) ==
          doctest::Approx(1.253314 * (99.0 / 5.0)).epsilon(1e-12));
    CHECK(robust_scale({5, 5, 5}, 5.0) == 0.0);
}
