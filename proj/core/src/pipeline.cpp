#include "pxlog/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pxlog/csv.hpp"
#include "pxlog/errors.hpp"
#include "pxlog/stats.hpp"
#include "pxlog/trajectory.hpp"

using nlohmann::json;

namespace pxlog {

namespace {

namespace fs = std::filesystem;

json agent_params_to_json(const AgentParams& p) {
    json j;
    j["latency_log_mean"] = p.latency_log_mean;
    j["latency_log_sd"] = p.latency_log_sd;
    j["error_rate"] = p.error_rate;
    j["move_speed"] = p.move_speed;
    j["path_style"] = to_string(p.path_style);
    j["lateral_amplitude"] = p.lateral_amplitude;
    j["gaze_policy"] = to_string(p.gaze_policy);
    j["lapse_rate"] = p.lapse_rate;
    if (p.indirect_prob >= 0.0) j["indirect_prob"] = p.indirect_prob;
    if (p.fix_prob >= 0.0) j["fix_prob"] = p.fix_prob;
    return j;
}

AgentParams agent_params_from_json(const json& j) {
    AgentParams p;
    p.latency_log_mean = j.value("latency_log_mean", p.latency_log_mean);
    p.latency_log_sd = j.value("latency_log_sd", p.latency_log_sd);
    p.error_rate = j.value("error_rate", p.error_rate);
    p.move_speed = j.value("move_speed", p.move_speed);
    if (j.contains("path_style")) p.path_style = path_style_from_string(j["path_style"].get<std::string>());
    p.lateral_amplitude = j.value("lateral_amplitude", p.lateral_amplitude);
    if (j.contains("gaze_policy"))
        p.gaze_policy = gaze_policy_from_string(j["gaze_policy"].get<std::string>());
    p.lapse_rate = j.value("lapse_rate", p.lapse_rate);
    if (j.contains("indirect_prob") && !j["indirect_prob"].is_null())
        p.indirect_prob = j["indirect_prob"].get<double>();
    if (j.contains("fix_prob") && !j["fix_prob"].is_null()) p.fix_prob = j["fix_prob"].get<double>();
    return p;
}

json cohort_to_json(const CohortSpec& c) {
    json j;
    j["games"] = json::array();
    for (const Game g : c.games) j["games"].push_back(to_string(g));
    j["players"] = json::array();
    for (const auto& pl : c.players) {
        json p;
        p["id"] = pl.id;
        p["sessions"] = pl.sessions;
        p["params"] = agent_params_to_json(pl.params);
        j["players"].push_back(std::move(p));
    }
    return j;
}

CohortSpec cohort_from_json(const json& j) {
    CohortSpec c;
    if (j.contains("games")) {
        c.games.clear();
        for (const auto& g : j["games"]) c.games.push_back(game_from_string(g.get<std::string>()));
    }
    if (!j.contains("players") || !j["players"].is_array())
        throw ValidationError("cohort spec: missing 'players' array");
    for (const auto& p : j["players"]) {
        CohortPlayer pl;
        pl.id = p.at("id").get<std::string>();
        pl.sessions = p.value("sessions", 1);
        if (pl.sessions < 1) throw ValidationError("cohort spec: sessions must be >= 1");
        if (p.contains("params")) pl.params = agent_params_from_json(p["params"]);
        c.players.push_back(std::move(pl));
    }
    return c;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("'" + path.string() + "' is not valid JSON");
    return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(header[i]);
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(row[i]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ValidationError("CSV is missing column '" + name + "'");
    }
};

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = csv_split(line);
        if (t.header.empty())
            t.header = std::move(cells);
        else
            t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw ValidationError("'" + path.string() + "' is empty");
    return t;
}

double parse_double(const std::string& s, const fs::path& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("bad numeric cell '" + s + "' in " + where.string());
    }
}

// Per-trial endpoint values for the AFC games of one log.
struct TrialValues {
    std::string participant, session;
    Game game{Game::NK};
    std::vector<int> trial;
    std::vector<double> rt_s, grt_s;
    std::vector<bool> fixated, correct;
};

TrialValues extract_trial_values(const LogFile& log) {
    TrialValues tv;
    tv.participant = log.header.player;
    tv.session = log.header.session_id;
    tv.game = log.header.game;
    for (const auto& tr : log.trial_summary) {
        if (tr.outcome == Outcome::timeout) continue;
        const TrialSegment seg = extract_trial_segment(log, tr.trial_index);
        const GazeRt g = gaze_rt(seg);
        tv.trial.push_back(tr.trial_index);
        tv.rt_s.push_back(trial_rt_seconds(tr));
        tv.grt_s.push_back(g.seconds);
        tv.fixated.push_back(g.fixated);
        tv.correct.push_back(tr.outcome == Outcome::correct);
    }
    return tv;
}

std::vector<SessionEndpoints> to_sessions(const std::vector<TrialValues>& values, bool use_grt,
                                          bool correct_only) {
    std::vector<SessionEndpoints> out;
    for (const auto& tv : values) {
        SessionEndpoints se;
        se.participant = tv.participant;
        se.session_id = tv.session;
        se.assessment = to_string(tv.game);
        for (std::size_t i = 0; i < tv.trial.size(); ++i) {
            if (correct_only && !tv.correct[i]) continue;
            se.trial_index.push_back(tv.trial[i]);
            se.values_s.push_back(use_grt ? tv.grt_s[i] : tv.rt_s[i]);
        }
        if (!se.values_s.empty()) out.push_back(std::move(se));
    }
    return out;
}

void write_clean_outputs(const fs::path& out_dir, const std::string& tag, const CleanResult& res) {
    std::vector<std::vector<std::string>> trial_rows;
    std::map<std::string, std::pair<std::string, std::string>> session_meta;  // session -> (participant, game)
    for (const auto& s : res.kept) {
        for (std::size_t i = 0; i < s.values_s.size(); ++i)
            trial_rows.push_back({s.participant, s.session_id, s.assessment,
                                  std::to_string(s.trial_index[i]), fmt_double(s.values_s[i])});
    }
    write_csv(out_dir / ("trials_" + tag + ".csv"),
              {"participant", "session", "game", "trial", "value_s"}, trial_rows);

    std::vector<std::vector<std::string>> report_rows;
    for (const auto& row : res.report.rows)
        report_rows.push_back({row.assessment, std::to_string(row.trials_total),
                               std::to_string(row.trials_lost), fmt_fixed(row.trials_lost_pct, 2),
                               std::to_string(row.sessions_total), std::to_string(row.sessions_lost),
                               fmt_fixed(row.sessions_lost_pct, 2)});
    write_csv(out_dir / ("exclusion_" + tag + ".csv"),
              {"assessment", "trials_total", "trials_lost", "trials_lost_pct", "sessions_total",
               "sessions_lost", "sessions_lost_pct"},
              report_rows);
}

template <typename Fn>
void run_stage(const char* name, Fn&& fn) {
    const std::string prefix = std::string("stage ") + name + ": ";
    try {
        fn();
    } catch (const ParseError& e) {
        throw ValidationError(prefix + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    } catch (const StatError& e) {
        throw StatError(prefix + e.what());
    } catch (const IoError& e) {
        throw IoError(prefix + e.what());
    } catch (const fs::filesystem_error& e) {
        throw IoError(prefix + e.what());
    } catch (const std::exception& e) {
        throw IoError(prefix + e.what());
    }
}

}  // namespace

// ------------------------------------------------------------ config + json

namespace {

std::vector<PairingSpec> pairs_from_json(const json& arr) {
    if (!arr.is_array()) throw ValidationError("pairing spec must be a JSON array");
    std::vector<PairingSpec> pairs;
    for (const auto& p : arr) {
        PairingSpec ps;
        ps.game = p.at("game").get<std::string>();
        ps.game_kind = endpoint_kind_from_string(p.value("game_kind", "RT"));
        ps.task = p.at("task").get<std::string>();
        ps.form = p.value("form", "");
        ps.task_kind = endpoint_kind_from_string(p.value("task_kind", "RT"));
        pairs.push_back(std::move(ps));
    }
    return pairs;
}

}  // namespace

std::vector<PairingSpec> load_pairs(const fs::path& path) {
    return pairs_from_json(read_json_file(path));
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    const json j = read_json_file(path);
    PipelineConfig cfg;
    if (!j.contains("seed") || !j["seed"].is_number())
        throw ValidationError("pipeline config: 'seed' is required (reproducibility)");
    cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("cohort")) cfg.cohort = cohort_from_json(j["cohort"]);
    if (j.contains("cleaning")) {
        const auto& c = j["cleaning"];
        cfg.cleaning.max_cutoff_s = c.value("max_cutoff_s", cfg.cleaning.max_cutoff_s);
        cfg.cleaning.session_loss_threshold =
            c.value("session_loss_threshold", cfg.cleaning.session_loss_threshold);
        cfg.cleaning.log_mad_multiplier = c.value("log_mad_multiplier", cfg.cleaning.log_mad_multiplier);
        cfg.cleaning.participant_mad_ratio =
            c.value("participant_mad_ratio", cfg.cleaning.participant_mad_ratio);
    }
    cfg.rt_correct_only = j.value("rt_correct_only", cfg.rt_correct_only);
    cfg.participant_filter = j.value("participant_filter", cfg.participant_filter);
    if (j.contains("external_scores")) cfg.external_scores = fs::path(j["external_scores"].get<std::string>());
    if (j.contains("pairs")) cfg.pairs = pairs_from_json(j["pairs"]);
    if (j.contains("embed")) {
        const auto& e = j["embed"];
        cfg.embed.n_neighbors = e.value("n_neighbors", cfg.embed.n_neighbors);
        cfg.embed.min_dist = e.value("min_dist", cfg.embed.min_dist);
        cfg.embed.spread = e.value("spread", cfg.embed.spread);
        cfg.embed.n_epochs = e.value("n_epochs", cfg.embed.n_epochs);
        cfg.embed.learning_rate = e.value("learning_rate", cfg.embed.learning_rate);
        cfg.embed.negative_sample_rate = e.value("negative_sample_rate", cfg.embed.negative_sample_rate);
    }
    if (j.contains("cluster")) {
        cfg.cluster.eps = j["cluster"].value("eps", cfg.cluster.eps);
        cfg.cluster.min_samples = j["cluster"].value("min_samples", cfg.cluster.min_samples);
    }
    cfg.lateral_threshold = j.value("lateral_threshold", cfg.lateral_threshold);
    return cfg;
}

CohortSpec load_cohort_spec(const fs::path& path) { return cohort_from_json(read_json_file(path)); }

std::string config_canonical_json(const PipelineConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["cohort"] = cohort_to_json(cfg.cohort);
    j["cleaning"] = {{"max_cutoff_s", cfg.cleaning.max_cutoff_s},
                     {"session_loss_threshold", cfg.cleaning.session_loss_threshold},
                     {"log_mad_multiplier", cfg.cleaning.log_mad_multiplier},
                     {"participant_mad_ratio", cfg.cleaning.participant_mad_ratio}};
    j["rt_correct_only"] = cfg.rt_correct_only;
    j["participant_filter"] = cfg.participant_filter;
    if (cfg.external_scores) j["external_scores"] = cfg.external_scores->string();
    j["pairs"] = json::array();
    for (const auto& p : cfg.pairs)
        j["pairs"].push_back({{"game", p.game},
                              {"game_kind", to_string(p.game_kind)},
                              {"task", p.task},
                              {"form", p.form},
                              {"task_kind", to_string(p.task_kind)}});
    j["embed"] = {{"n_neighbors", cfg.embed.n_neighbors},
                  {"min_dist", cfg.embed.min_dist},
                  {"spread", cfg.embed.spread},
                  {"n_epochs", cfg.embed.n_epochs},
                  {"learning_rate", cfg.embed.learning_rate},
                  {"negative_sample_rate", cfg.embed.negative_sample_rate}};
    j["cluster"] = {{"eps", cfg.cluster.eps}, {"min_samples", cfg.cluster.min_samples}};
    j["lateral_threshold"] = cfg.lateral_threshold;
    return j.dump(2);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_ground_truth(const std::vector<GroundTruth>& truths, const fs::path& path) {
    json j;
    j["sessions"] = json::array();
    for (const auto& gt : truths) {
        json s;
        s["session"] = gt.session_id;
        s["player"] = gt.player;
        s["game"] = to_string(gt.game);
        s["trials"] = json::array();
        for (const auto& t : gt.trials) {
            json tj;
            tj["trial"] = t.trial_index;
            tj["decision_ms"] = t.decision_ms;
            tj["gaze_commit_ms"] = t.gaze_commit_ms ? json(*t.gaze_commit_ms) : json(nullptr);
            tj["type"] = t.planted_type ? json(*t.planted_type) : json(nullptr);
            tj["correct"] = t.planted_correct;
            tj["lapse"] = t.lapse;
            tj["rt_ms"] = t.rt_ms;
            tj["timeout"] = t.timed_out;
            s["trials"].push_back(std::move(tj));
        }
        j["sessions"].push_back(std::move(s));
    }
    write_text_file(path, j.dump(2) + "\n");
}

std::vector<GroundTruth> load_ground_truth(const fs::path& path) {
    const json j = read_json_file(path);
    std::vector<GroundTruth> out;
    for (const auto& s : j.at("sessions")) {
        GroundTruth gt;
        gt.session_id = s.at("session").get<std::string>();
        gt.player = s.at("player").get<std::string>();
        gt.game = game_from_string(s.at("game").get<std::string>());
        for (const auto& tj : s.at("trials")) {
            TrialTruth t;
            t.trial_index = tj.at("trial").get<int>();
            t.decision_ms = tj.at("decision_ms").get<double>();
            if (!tj.at("gaze_commit_ms").is_null()) t.gaze_commit_ms = tj["gaze_commit_ms"].get<double>();
            if (!tj.at("type").is_null()) t.planted_type = tj["type"].get<std::string>();
            t.planted_correct = tj.at("correct").get<bool>();
            t.lapse = tj.at("lapse").get<bool>();
            t.rt_ms = tj.at("rt_ms").get<double>();
            t.timed_out = tj.at("timeout").get<bool>();
            gt.trials.push_back(std::move(t));
        }
        out.push_back(std::move(gt));
    }
    return out;
}

std::vector<fs::path> list_pxlog_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pxlog")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<LogFile> load_logs(const fs::path& dir) {
    std::vector<LogFile> logs;
    for (const auto& f : list_pxlog_files(dir)) logs.push_back(read_logfile(f));
    if (logs.empty()) throw IoError("no .pxlog files under '" + dir.string() + "'");
    return logs;
}

// ------------------------------------------------------------------- stages

void stage_simulate(const CohortSpec& cohort, std::uint64_t seed, const fs::path& out_dir) {
    fs::create_directories(out_dir / "logs");
    const CohortResult res = simulate_cohort(cohort, seed);
    for (const auto& log : res.logs)
        write_logfile(log, out_dir / "logs" / (log.header.session_id + ".pxlog"));
    save_ground_truth(res.truths, out_dir / "ground_truth.json");
}

void stage_clean(const fs::path& logs_dir, const CleaningConfig& cfg, bool rt_correct_only,
                 const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<TrialValues> values;
    for (const auto& log : load_logs(logs_dir)) {
        if (log.header.game == Game::RR) continue;  // threshold task: no RT cleaning
        values.push_back(extract_trial_values(log));
    }
    if (values.empty()) throw StatError("no AFC game sessions to clean");
    write_clean_outputs(out_dir, "rt", clean_sessions(to_sessions(values, false, rt_correct_only), cfg));
    write_clean_outputs(out_dir, "grt", clean_sessions(to_sessions(values, true, rt_correct_only), cfg));
}

void stage_endpoints(const fs::path& logs_dir, const fs::path& clean_dir,
                     const std::optional<fs::path>& external_scores, const fs::path& out_csv) {
    std::vector<EndpointRow> rows;

    for (const std::string tag : {"rt", "grt"}) {
        const CsvTable t = read_csv(clean_dir / ("trials_" + tag + ".csv"));
        const std::size_t c_part = t.col("participant"), c_sess = t.col("session"),
                          c_game = t.col("game"), c_val = t.col("value_s");
        std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, int>> acc;
        for (const auto& r : t.rows) {
            auto& cell = acc[{r[c_part], r[c_sess], r[c_game]}];
            cell.first += parse_double(r[c_val], clean_dir);
            cell.second += 1;
        }
        for (const auto& [key, sum_count] : acc) {
            EndpointRow row;
            row.participant = std::get<0>(key);
            row.session = std::get<1>(key);
            row.task = std::get<2>(key);
            row.kind = tag == "rt" ? EndpointKind::rt : EndpointKind::grt;
            row.value = sum_count.first / sum_count.second;
            row.n_trials = sum_count.second;
            rows.push_back(std::move(row));
        }
    }

    // RR psychometric thresholds straight from the logs
    for (const auto& log : load_logs(logs_dir)) {
        if (log.header.game != Game::RR) continue;
        std::vector<std::pair<double, bool>> trials;
        for (const auto& tr : log.trial_summary) {
            const auto& pat = std::get<RRPattern>(tr.stimulus);
            trials.push_back({static_cast<double>(pat.size), tr.outcome == Outcome::correct});
        }
        if (trials.size() < 2) continue;
        const PsychFit fit = fit_2pl(trials);
        EndpointRow row;
        row.participant = log.header.player;
        row.session = log.header.session_id;
        row.task = "RR";
        row.kind = EndpointKind::theta;
        row.value = fit.theta;
        row.n_trials = static_cast<int>(trials.size());
        rows.push_back(std::move(row));
    }

    if (external_scores) {
        std::ifstream in(*external_scores);
        if (!in) throw IoError("cannot open '" + external_scores->string() + "'");
        for (auto& row : ingest_external_scores(in)) rows.push_back(std::move(row));
    }

    // Session ids are session-unique; test-retest pairing needs a common label,
    // so each (participant, task) run of sessions is renumbered s1, s2, ...
    {
        std::map<std::pair<std::string, std::string>, std::set<std::pair<std::size_t, std::string>>>
            session_sets;
        for (const auto& r : rows)
            if (!r.session.empty())
                session_sets[{r.participant, r.task}].insert({r.session.size(), r.session});
        for (auto& r : rows) {
            if (r.session.empty()) continue;
            const auto& ordered = session_sets[{r.participant, r.task}];
            std::size_t ord = 1;
            for (const auto& key : ordered) {
                if (key.second == r.session) break;
                ++ord;
            }
            r.session = "s" + std::to_string(ord);
        }
    }

    std::sort(rows.begin(), rows.end(), [](const EndpointRow& a, const EndpointRow& b) {
        return std::tie(a.participant, a.session, a.task, a.form, a.kind) <
               std::tie(b.participant, b.session, b.task, b.form, b.kind);
    });
    std::vector<std::vector<std::string>> csv_rows;
    for (const auto& r : rows)
        csv_rows.push_back({r.participant, r.session, r.task, r.form, to_string(r.kind),
                            fmt_double(r.value), std::to_string(r.n_trials)});
    write_csv(out_csv, {"participant", "session", "task", "form", "kind", "value", "n_trials"},
              csv_rows);
}

namespace {

// participant -> mean value over that participant's matching rows
std::map<std::string, double> participant_means(const CsvTable& t, const std::string& task,
                                                const std::string& form, const std::string& kind,
                                                bool match_form) {
    const std::size_t c_part = t.col("participant"), c_task = t.col("task"), c_form = t.col("form"),
                      c_kind = t.col("kind"), c_val = t.col("value");
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : t.rows) {
        if (r[c_task] != task || r[c_kind] != kind) continue;
        if (match_form && r[c_form] != form) continue;
        auto& cell = acc[r[c_part]];
        cell.first += parse_double(r[c_val], "endpoints.csv");
        cell.second += 1;
    }
    std::map<std::string, double> out;
    for (const auto& [p, sc] : acc) out[p] = sc.first / sc.second;
    return out;
}

void apply_participant_filter(std::map<std::string, double>& vals, double ratio) {
    if (vals.size() < 3) return;
    std::vector<double> v;
    v.reserve(vals.size());
    for (const auto& [p, x] : vals) v.push_back(x);
    const double med = median(v);
    const double scale = robust_scale(v, med);
    if (scale <= 0.0) return;
    for (auto it = vals.begin(); it != vals.end();)
        it = std::fabs(it->second - med) / scale > ratio ? vals.erase(it) : std::next(it);
}

}  // namespace

void stage_stats(const fs::path& endpoints_csv, const std::vector<PairingSpec>& pairs,
                 bool participant_filter, double participant_mad_ratio, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const CsvTable t = read_csv(endpoints_csv);

    std::vector<std::vector<std::string>> corr_rows;
    for (const auto& pair : pairs) {
        auto left = participant_means(t, pair.game, "", to_string(pair.game_kind), false);
        auto right = participant_means(t, pair.task, pair.form, to_string(pair.task_kind), true);
        if (participant_filter) {
            apply_participant_filter(left, participant_mad_ratio);
            apply_participant_filter(right, participant_mad_ratio);
        }
        std::vector<double> x, y;
        for (const auto& [p, v] : left) {
            const auto it = right.find(p);
            if (it == right.end()) continue;  // missing pair member: excluded
            x.push_back(v);
            y.push_back(it->second);
        }
        if (x.size() < 3)
            throw StatError("pairing " + pair.game + "/" + pair.task + " has only " +
                            std::to_string(x.size()) + " complete participants (need >= 3)");
        const CorrResult res = correlate(x, y);
        corr_rows.push_back({pair.game, to_string(pair.game_kind), pair.task, pair.form,
                             to_string(pair.task_kind), fmt_double(res.r), std::to_string(res.n),
                             fmt_double(res.p), fmt_double(res.bf10), fmt_double(res.rmse)});
    }
    write_csv(out_dir / "correlations.csv",
              {"game", "game_kind", "task", "form", "task_kind", "r", "n", "p", "bf10", "rmse"},
              corr_rows);

    // test-retest ICC per (task, kind) over the first two sessions
    const std::size_t c_part = t.col("participant"), c_sess = t.col("session"), c_task = t.col("task"),
                      c_kind = t.col("kind"), c_val = t.col("value");
    std::map<std::pair<std::string, std::string>,
             std::map<std::string, std::map<std::string, double>>>
        grouped;  // (task, kind) -> participant -> session -> value
    for (const auto& r : t.rows) {
        if (r[c_sess].empty()) continue;  // external one-shot scores have no sessions
        grouped[{r[c_task], r[c_kind]}][r[c_part]][r[c_sess]] = parse_double(r[c_val], "endpoints.csv");
    }
    std::vector<std::vector<std::string>> icc_rows;
    for (const auto& [task_kind, by_part] : grouped) {
        // canonical session order: shortest label first, then lexicographic
        std::set<std::pair<std::size_t, std::string>> session_ids;
        for (const auto& [p, by_sess] : by_part)
            for (const auto& [s, v] : by_sess) session_ids.insert({s.size(), s});
        if (session_ids.size() < 2) continue;
        auto it = session_ids.begin();
        const std::string s1 = it->second;
        const std::string s2 = std::next(it)->second;
        std::vector<std::vector<double>> matrix;
        for (const auto& [p, by_sess] : by_part) {
            const auto a = by_sess.find(s1);
            const auto b = by_sess.find(s2);
            if (a != by_sess.end() && b != by_sess.end()) matrix.push_back({a->second, b->second});
        }
        if (matrix.size() < 2) continue;
        const ICCResult res = icc_2_1(matrix);
        icc_rows.push_back({task_kind.first, task_kind.second, fmt_double(res.icc),
                            std::to_string(res.n), std::to_string(res.k), fmt_double(res.f),
                            fmt_double(res.p)});
    }
    write_csv(out_dir / "icc.csv", {"task", "kind", "icc", "n", "k", "f", "p"}, icc_rows);
}

void stage_trajectory(const fs::path& logs_dir, double lateral_threshold, const EmbedParams& embed,
                      const ClusterParams& cluster, std::uint64_t seed, const fs::path& out_dir) {
    fs::create_directories(out_dir);

    struct TrialEntry {
        std::string player, session;
        int trial;
        TrialType type;
        FeatureVector features;
    };
    std::vector<TrialEntry> entries;
    long rejected = 0;

    for (const auto& log : load_logs(logs_dir)) {
        if (log.header.game != Game::NK) continue;
        for (const auto& tr : log.trial_summary) {
            const TrialSegment seg = extract_trial_segment(log, tr.trial_index);
            const auto canon = canonicalize(seg);
            if (!canon) {
                ++rejected;
                continue;
            }
            const GazeRt g = gaze_rt(seg);
            const Trajectory res = resample(*canon, 120);
            const HeadingSeries heading = heading_series(res);
            TrialEntry e;
            e.player = log.header.player;
            e.session = log.header.session_id;
            e.trial = tr.trial_index;
            e.type = classify_trial(*canon, lateral_threshold, g.fixated);
            e.features = features27(res, heading);
            entries.push_back(std::move(e));
        }
    }
    if (entries.empty()) throw StatError("no usable NK trials for trajectory analysis");

    std::vector<std::vector<double>> rows;
    rows.reserve(entries.size());
    for (const auto& e : entries) rows.emplace_back(e.features.begin(), e.features.end());
    zscore_columns(rows);
    const auto points = embed_2d(rows, embed, seed);
    const auto labels = dbscan(points, cluster);

    // features.csv
    {
        std::vector<std::string> header = {"player", "session", "trial", "type"};
        for (const auto* name : kFeatureNames) header.push_back(name);
        std::vector<std::vector<std::string>> out;
        for (const auto& e : entries) {
            std::vector<std::string> row = {e.player, e.session, std::to_string(e.trial),
                                            to_string(e.type)};
            for (const double v : e.features) row.push_back(fmt_double(v));
            out.push_back(std::move(row));
        }
        write_csv(out_dir / "features.csv", header, out);
    }
    // embedding.csv + clusters.csv
    {
        std::vector<std::vector<std::string>> emb, clu;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            emb.push_back({e.player, e.session, std::to_string(e.trial), fmt_double(points[i][0]),
                           fmt_double(points[i][1])});
            clu.push_back({e.player, e.session, std::to_string(e.trial), std::to_string(labels[i])});
        }
        write_csv(out_dir / "embedding.csv", {"player", "session", "trial", "x", "y"}, emb);
        write_csv(out_dir / "clusters.csv", {"player", "session", "trial", "cluster"}, clu);
    }

    // per-session profiles + identification
    std::map<std::pair<std::string, std::string>, std::vector<TrialType>> by_session;
    for (const auto& e : entries) by_session[{e.player, e.session}].push_back(e.type);
    std::vector<std::pair<std::string, SessionProfile>> sessions;
    json profiles = json::array();
    for (const auto& [key, types] : by_session) {
        const SessionProfile prof = session_profile(types);
        sessions.push_back({key.first, prof});
        profiles.push_back({{"player", key.first},
                            {"session", key.second},
                            {"p", {prof.p[0], prof.p[1], prof.p[2], prof.p[3]}}});
    }
    write_text_file(out_dir / "profiles.json",
                    json{{"bins", {"DG", "IG", "DN", "IN"}}, {"profiles", profiles}}.dump(2) + "\n");

    const IdentifyResult ident = identify(sessions);
    {
        std::vector<std::string> header = {"player"};
        for (const auto& p : ident.players) header.push_back(p);
        std::vector<std::vector<std::string>> out;
        for (std::size_t i = 0; i < ident.players.size(); ++i) {
            std::vector<std::string> row = {ident.players[i]};
            for (const double v : ident.matrix[i]) row.push_back(fmt_fixed(v, 2));
            out.push_back(std::move(row));
        }
        write_csv(out_dir / "confusion.csv", header, out);
    }

    int n_clusters = 0;
    long noise = 0;
    for (const int l : labels) {
        n_clusters = std::max(n_clusters, l + 1);
        if (l < 0) ++noise;
    }
    json summary;
    summary["trials_used"] = entries.size();
    summary["trials_rejected"] = rejected;
    summary["clusters"] = n_clusters;
    summary["noise_points"] = noise;
    summary["mean_diagonal_pct"] = ident.mean_diagonal;
    summary["had_ties"] = ident.had_ties;
    write_text_file(out_dir / "trajectory_summary.json", summary.dump(2) + "\n");
}

void stage_report(const fs::path& bundle_dir, const fs::path& out_json) {
    json report;
    auto csv_to_json = [&](const fs::path& p) -> json {
        const CsvTable t = read_csv(p);
        json rows = json::array();
        for (const auto& r : t.rows) {
            json row;
            for (std::size_t i = 0; i < t.header.size() && i < r.size(); ++i) row[t.header[i]] = r[i];
            rows.push_back(std::move(row));
        }
        return rows;
    };
    for (const std::string tag : {"rt", "grt"}) {
        const fs::path p = bundle_dir / ("exclusion_" + tag + ".csv");
        if (fs::exists(p)) report["exclusion"][tag] = csv_to_json(p);
    }
    if (fs::exists(bundle_dir / "endpoints.csv")) {
        const CsvTable t = read_csv(bundle_dir / "endpoints.csv");
        report["endpoints"]["rows"] = t.rows.size();
    }
    if (fs::exists(bundle_dir / "correlations.csv"))
        report["correlations"] = csv_to_json(bundle_dir / "correlations.csv");
    if (fs::exists(bundle_dir / "icc.csv")) report["icc"] = csv_to_json(bundle_dir / "icc.csv");
    if (fs::exists(bundle_dir / "trajectory" / "trajectory_summary.json"))
        report["trajectory"] = read_json_file(bundle_dir / "trajectory" / "trajectory_summary.json");
    if (report.empty()) throw IoError("no stage outputs found under '" + bundle_dir.string() + "'");
    write_text_file(out_json, report.dump(2) + "\n");
}

void run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir) {
    if (fs::exists(out_dir) && !fs::is_empty(out_dir))
        throw IoError("output directory '" + out_dir.string() + "' already exists and is not empty");
    const bool created = !fs::exists(out_dir);
    fs::create_directories(out_dir);

    try {
        run_stage("simulate", [&] { stage_simulate(cfg.cohort, cfg.seed, out_dir); });
        run_stage("validate", [&] { load_logs(out_dir / "logs"); });
        run_stage("clean", [&] {
            stage_clean(out_dir / "logs", cfg.cleaning, cfg.rt_correct_only, out_dir);
        });
        run_stage("endpoints", [&] {
            stage_endpoints(out_dir / "logs", out_dir, cfg.external_scores,
                            out_dir / "endpoints.csv");
        });
        run_stage("stats", [&] {
            stage_stats(out_dir / "endpoints.csv", cfg.pairs, cfg.participant_filter,
                        cfg.cleaning.participant_mad_ratio, out_dir);
        });
        const bool has_nk =
            std::find(cfg.cohort.games.begin(), cfg.cohort.games.end(), Game::NK) != cfg.cohort.games.end();
        if (has_nk) {
            run_stage("trajectory", [&] {
                stage_trajectory(out_dir / "logs", cfg.lateral_threshold, cfg.embed, cfg.cluster,
                                 cfg.seed, out_dir / "trajectory");
            });
        }
        run_stage("report", [&] { stage_report(out_dir, out_dir / "report.json"); });

        const std::string config_json = config_canonical_json(cfg);
        json manifest;
        manifest["config_hash"] = fnv1a_hex(config_json);
        manifest["seed"] = cfg.seed;
        std::vector<std::string> outputs;
        for (const auto& entry : fs::recursive_directory_iterator(out_dir))
            if (entry.is_regular_file())
                outputs.push_back(fs::relative(entry.path(), out_dir).generic_string());
        std::sort(outputs.begin(), outputs.end());
        manifest["outputs"] = outputs;
        write_text_file(out_dir / "config.json", config_json + "\n");
        manifest["outputs"].push_back("config.json");
        manifest["outputs"].push_back("manifest.json");
        std::sort(manifest["outputs"].begin(), manifest["outputs"].end());
        write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (...) {
        std::error_code ec;
        if (created)
            fs::remove_all(out_dir, ec);
        else
            for (const auto& entry : fs::directory_iterator(out_dir)) fs::remove_all(entry.path(), ec);
        throw;
    }
}

}  // namespace pxlog
