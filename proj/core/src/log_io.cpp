#include "pxlog/log_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pxlog/errors.hpp"

using nlohmann::json;

namespace pxlog {

namespace {

// ---- canonical writers --------------------------------------------------

void append_escaped(std::string& out, std::string_view s) {
    out += '"';
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void append_fixed(std::string& out, double v, int precision) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    out.append(buf, res.ptr);
}

void append_int(std::string& out, std::int64_t v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void append_uint(std::string& out, std::uint64_t v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void write_header(std::string& out, const LogHeader& h) {
    out += R"({"rec":"hdr","session":)";
    append_escaped(out, h.session_id);
    out += R"(,"player":)";
    append_escaped(out, h.player);
    out += R"(,"game":")";
    out += to_string(h.game);
    out += R"(","state_hz":)";
    append_int(out, h.state_hz);
    out += R"(,"env_hz":)";
    append_int(out, h.env_hz);
    out += R"(,"seed":)";
    append_uint(out, h.seed);
    out += "}\n";
}

void write_state(std::string& out, const StateSample& s) {
    out += R"({"rec":"state","t":)";
    append_int(out, s.t);
    out += R"(,"x":)";
    append_fixed(out, s.x, 4);
    out += R"(,"y":)";
    append_fixed(out, s.y, 4);
    out += R"(,"z":)";
    append_fixed(out, s.z, 4);
    out += R"(,"yaw":)";
    append_fixed(out, s.yaw, 2);
    out += R"(,"pitch":)";
    append_fixed(out, s.pitch, 2);
    if (s.viewed_target) {
        out += R"(,"view":)";
        append_escaped(out, *s.viewed_target);
    }
    out += "}\n";
}

void write_env(std::string& out, const EnvSample& e) {
    out += R"({"rec":"env","t":)";
    append_int(out, e.t);
    out += R"(,"blocks":[)";
    bool first = true;
    for (const auto& b : e.blocks) {
        if (!first) out += ',';
        first = false;
        out += '[';
        append_int(out, b.gx);
        out += ',';
        append_int(out, b.gy);
        out += ',';
        append_int(out, b.gz);
        out += ',';
        append_escaped(out, b.kind);
        out += ']';
    }
    out += "]}\n";
}

void write_event(std::string& out, const GameEvent& e) {
    out += R"({"rec":"event","t":)";
    append_int(out, e.t);
    out += R"(,"kind":")";
    out += to_string(e.kind);
    out += R"(","payload":{)";
    bool first = true;
    for (const auto& [k, v] : e.payload) {  // std::map: keys already sorted
        if (!first) out += ',';
        first = false;
        append_escaped(out, k);
        out += ':';
        append_escaped(out, v);
    }
    out += "}}\n";
}

void write_card(std::string& out, const DDCard& c) {
    out += R"({"color":)";
    append_escaped(out, c.color);
    out += R"(,"qty":)";
    append_int(out, c.quantity);
    out += R"(,"shape":)";
    append_escaped(out, c.shape);
    out += '}';
}

void write_stimulus(std::string& out, const TrialStimulus& stim) {
    if (const auto* nk = std::get_if<NKTrialStimulus>(&stim)) {
        out += R"({"word":)";
        append_escaped(out, nk->core.word);
        out += R"(,"ink":)";
        append_escaped(out, nk->core.ink);
        out += R"(,"rule":")";
        out += to_string(nk->core.rule);
        out += R"(","left":)";
        append_escaped(out, nk->left_color);
        out += R"(,"right":)";
        append_escaped(out, nk->right_color);
        out += R"(,"left_x":)";
        append_fixed(out, nk->left_x, 4);
        out += R"(,"left_z":)";
        append_fixed(out, nk->left_z, 4);
        out += R"(,"right_x":)";
        append_fixed(out, nk->right_x, 4);
        out += R"(,"right_z":)";
        append_fixed(out, nk->right_z, 4);
        out += '}';
    } else if (const auto* dd = std::get_if<DDTrial>(&stim)) {
        out += R"({"key":)";
        write_card(out, dd->key);
        out += R"(,"doors":[)";
        for (int i = 0; i < 4; ++i) {
            if (i) out += ',';
            write_card(out, dd->doors[static_cast<std::size_t>(i)]);
        }
        out += R"(],"rule":")";
        out += to_string(dd->active_rule);
        out += R"("})";
    } else if (const auto* bb = std::get_if<BBStimulus>(&stim)) {
        out += R"({"species":")";
        out += to_string(bb->species);
        out += R"(","dir":")";
        out += to_string(bb->center_dir);
        out += R"(","congruent":)";
        out += bb->congruent ? "true" : "false";
        out += '}';
    } else {
        const auto& rr = std::get<RRPattern>(stim);
        out += R"({"size":)";
        append_int(out, rr.size);
        out += R"(,"cells":[)";
        bool first = true;
        for (const auto& c : rr.cells) {
            if (!first) out += ',';
            first = false;
            out += '[';
            append_int(out, c.gx);
            out += ',';
            append_int(out, c.gz);
            out += ',';
            append_escaped(out, c.color);
            out += ']';
        }
        out += "]}";
    }
}

void write_trial(std::string& out, const TrialRecord& tr) {
    out += R"({"rec":"trial","game":")";
    out += to_string(tr.game);
    out += R"(","trial":)";
    append_int(out, tr.trial_index);
    out += R"(,"start_t":)";
    append_int(out, tr.start_t);
    out += R"(,"end_t":)";
    append_int(out, tr.end_t);
    out += R"(,"stimulus":)";
    write_stimulus(out, tr.stimulus);
    out += R"(,"answer":)";
    append_escaped(out, tr.correct_answer);
    if (tr.response) {
        out += R"(,"response":)";
        append_escaped(out, *tr.response);
    }
    out += R"(,"outcome":")";
    out += to_string(tr.outcome);
    out += "\"}\n";
}

// ---- parsing helpers ----------------------------------------------------

[[noreturn]] void fail(long line, const std::string& msg) { throw ParseError(msg, line); }

const json& field(const json& j, const char* key, long line) {
    auto it = j.find(key);
    if (it == j.end()) fail(line, std::string("missing field '") + key + "'");
    return *it;
}

std::string str_field(const json& j, const char* key, long line) {
    const auto& v = field(j, key, line);
    if (!v.is_string()) fail(line, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::int64_t int_field(const json& j, const char* key, long line) {
    const auto& v = field(j, key, line);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(line, std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

double num_field(const json& j, const char* key, long line) {
    const auto& v = field(j, key, line);
    if (!v.is_number()) fail(line, std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

void check_keys(const json& j, std::initializer_list<const char*> keys, long line) {
    for (const auto& [k, _] : j.items()) {
        bool known = false;
        for (const char* want : keys)
            if (k == want) {
                known = true;
                break;
            }
        if (!known) fail(line, "unexpected field '" + k + "'");
    }
}

DDCard parse_card(const json& j, long line) {
    if (!j.is_object()) fail(line, "card must be an object");
    check_keys(j, {"color", "qty", "shape"}, line);
    DDCard c;
    c.color = str_field(j, "color", line);
    c.shape = str_field(j, "shape", line);
    c.quantity = static_cast<int>(int_field(j, "qty", line));
    return c;
}

TrialStimulus parse_stimulus(Game game, const json& j, long line) {
    if (!j.is_object()) fail(line, "stimulus must be an object");
    switch (game) {
        case Game::NK: {
            check_keys(j, {"word", "ink", "rule", "left", "right", "left_x", "left_z", "right_x", "right_z"},
                       line);
            NKTrialStimulus s;
            s.core.word = str_field(j, "word", line);
            s.core.ink = str_field(j, "ink", line);
            s.core.rule = nk_rule_from_string(str_field(j, "rule", line));
            s.left_color = str_field(j, "left", line);
            s.right_color = str_field(j, "right", line);
            s.left_x = num_field(j, "left_x", line);
            s.left_z = num_field(j, "left_z", line);
            s.right_x = num_field(j, "right_x", line);
            s.right_z = num_field(j, "right_z", line);
            return s;
        }
        case Game::DD: {
            check_keys(j, {"key", "doors", "rule"}, line);
            DDTrial t;
            t.key = parse_card(field(j, "key", line), line);
            const auto& doors = field(j, "doors", line);
            if (!doors.is_array() || doors.size() != 4) fail(line, "'doors' must be an array of 4 cards");
            for (std::size_t i = 0; i < 4; ++i) t.doors[i] = parse_card(doors[i], line);
            t.active_rule = dd_rule_from_string(str_field(j, "rule", line));
            return t;
        }
        case Game::BB: {
            check_keys(j, {"species", "dir", "congruent"}, line);
            BBStimulus s;
            s.species = species_from_string(str_field(j, "species", line));
            s.center_dir = side_from_string(str_field(j, "dir", line));
            const auto& c = field(j, "congruent", line);
            if (!c.is_boolean()) fail(line, "'congruent' must be a boolean");
            s.congruent = c.get<bool>();
            return s;
        }
        case Game::RR: {
            check_keys(j, {"size", "cells"}, line);
            RRPattern p;
            p.size = static_cast<int>(int_field(j, "size", line));
            const auto& cells = field(j, "cells", line);
            if (!cells.is_array()) fail(line, "'cells' must be an array");
            for (const auto& c : cells) {
                if (!c.is_array() || c.size() != 3 || !c[0].is_number_integer() ||
                    !c[1].is_number_integer() || !c[2].is_string())
                    fail(line, "pattern cell must be [gx, gz, color]");
                p.cells.push_back({c[0].get<int>(), c[1].get<int>(), c[2].get<std::string>()});
            }
            return p;
        }
    }
    fail(line, "unreachable stimulus game");
}

}  // namespace

std::string write_logfile(const LogFile& f) {
    validate(f);  // refuse to serialize invalid files
    std::string out;
    out.reserve(128 + f.log_sequence.size() * 96 + f.trial_summary.size() * 256);
    write_header(out, f.header);
    for (const auto& rec : f.log_sequence) {
        if (const auto* s = std::get_if<StateSample>(&rec))
            write_state(out, *s);
        else if (const auto* e = std::get_if<EnvSample>(&rec))
            write_env(out, *e);
        else
            write_event(out, std::get<GameEvent>(rec));
    }
    for (const auto& tr : f.trial_summary) write_trial(out, tr);
    return out;
}

LogFile parse_logfile(std::string_view text) {
    LogFile f;
    bool have_header = false;
    bool in_summary = false;
    long line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view lv = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (lv.empty()) continue;

        json j = json::parse(lv, nullptr, false);
        if (j.is_discarded()) fail(line_no, "malformed JSON record");
        if (!j.is_object()) fail(line_no, "record must be a JSON object");
        const std::string rec = str_field(j, "rec", line_no);

        if (rec == "hdr") {
            if (have_header) fail(line_no, "duplicate header record");
            check_keys(j, {"rec", "session", "player", "game", "state_hz", "env_hz", "seed"}, line_no);
            f.header.session_id = str_field(j, "session", line_no);
            f.header.player = str_field(j, "player", line_no);
            f.header.game = game_from_string(str_field(j, "game", line_no));
            f.header.state_hz = static_cast<int>(int_field(j, "state_hz", line_no));
            f.header.env_hz = static_cast<int>(int_field(j, "env_hz", line_no));
            const auto& seed = field(j, "seed", line_no);
            if (!seed.is_number_unsigned() && !seed.is_number_integer())
                fail(line_no, "field 'seed' must be an integer");
            f.header.seed = seed.get<std::uint64_t>();
            have_header = true;
            continue;
        }
        if (!have_header) fail(line_no, "header record must come first");

        if (rec == "state") {
            if (in_summary) fail(line_no, "log record after trial summary began");
            check_keys(j, {"rec", "t", "x", "y", "z", "yaw", "pitch", "view"}, line_no);
            StateSample s;
            s.t = int_field(j, "t", line_no);
            s.x = num_field(j, "x", line_no);
            s.y = num_field(j, "y", line_no);
            s.z = num_field(j, "z", line_no);
            s.yaw = num_field(j, "yaw", line_no);
            s.pitch = num_field(j, "pitch", line_no);
            if (j.contains("view")) s.viewed_target = str_field(j, "view", line_no);
            f.log_sequence.emplace_back(std::move(s));
        } else if (rec == "env") {
            if (in_summary) fail(line_no, "log record after trial summary began");
            check_keys(j, {"rec", "t", "blocks"}, line_no);
            EnvSample e;
            e.t = int_field(j, "t", line_no);
            const auto& blocks = field(j, "blocks", line_no);
            if (!blocks.is_array()) fail(line_no, "'blocks' must be an array");
            for (const auto& b : blocks) {
                if (!b.is_array() || b.size() != 4 || !b[0].is_number_integer() ||
                    !b[1].is_number_integer() || !b[2].is_number_integer() || !b[3].is_string())
                    fail(line_no, "block entry must be [gx, gy, gz, kind]");
                e.blocks.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<std::string>()});
            }
            f.log_sequence.emplace_back(std::move(e));
        } else if (rec == "event") {
            if (in_summary) fail(line_no, "log record after trial summary began");
            check_keys(j, {"rec", "t", "kind", "payload"}, line_no);
            GameEvent e;
            e.t = int_field(j, "t", line_no);
            try {
                e.kind = event_kind_from_string(str_field(j, "kind", line_no));
            } catch (const ValidationError& err) {
                fail(line_no, err.what());
            }
            const auto& payload = field(j, "payload", line_no);
            if (!payload.is_object()) fail(line_no, "'payload' must be an object");
            for (const auto& [k, v] : payload.items()) {
                if (!v.is_string()) fail(line_no, "payload values must be strings");
                e.payload[k] = v.get<std::string>();
            }
            f.log_sequence.emplace_back(std::move(e));
        } else if (rec == "trial") {
            in_summary = true;
            check_keys(j, {"rec", "game", "trial", "start_t", "end_t", "stimulus", "answer", "response",
                           "outcome"},
                       line_no);
            TrialRecord tr;
            try {
                tr.game = game_from_string(str_field(j, "game", line_no));
                tr.outcome = outcome_from_string(str_field(j, "outcome", line_no));
            } catch (const ValidationError& err) {
                fail(line_no, err.what());
            }
            tr.trial_index = static_cast<int>(int_field(j, "trial", line_no));
            tr.start_t = int_field(j, "start_t", line_no);
            tr.end_t = int_field(j, "end_t", line_no);
            try {
                tr.stimulus = parse_stimulus(tr.game, field(j, "stimulus", line_no), line_no);
            } catch (const ValidationError& err) {
                fail(line_no, err.what());
            }
            tr.correct_answer = str_field(j, "answer", line_no);
            if (j.contains("response")) tr.response = str_field(j, "response", line_no);
            f.trial_summary.push_back(std::move(tr));
        } else {
            fail(line_no, "unknown record discriminator '" + rec + "'");
        }
    }
    if (!have_header) throw ParseError("missing header record", 1);
    validate(f);
    return f;
}

LogFile read_logfile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_logfile(ss.str());
}

void write_logfile(const LogFile& f, const std::filesystem::path& path) {
    const std::string bytes = write_logfile(f);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create '" + path.string() + "'");
    out << bytes;
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

TrialSegment extract_trial_segment(const LogFile& f, int trial_index) {
    const TrialRecord* found = nullptr;
    for (const auto& tr : f.trial_summary)
        if (tr.trial_index == trial_index) {
            found = &tr;
            break;
        }
    if (!found)
        throw ValidationError("trial index " + std::to_string(trial_index) + " not found (file has " +
                              std::to_string(f.trial_summary.size()) + " trials)");
    TrialSegment seg;
    seg.trial = *found;
    for (const auto& rec : f.log_sequence) {
        const Timestamp t = record_time(rec);
        if (t < found->start_t || t > found->end_t) continue;
        if (const auto* s = std::get_if<StateSample>(&rec))
            seg.states.push_back(*s);
        else if (const auto* e = std::get_if<GameEvent>(&rec))
            seg.events.push_back(*e);
    }
    return seg;
}

}  // namespace pxlog
