#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pxlog/log_model.hpp"

namespace pxlog {

// Canonical .pxlog form: UTF-8, one JSON object per line, discriminated by a
// "rec" field ("hdr" | "state" | "env" | "event" | "trial"); header first,
// then the time-ordered log sequence, then the trial summary. Positions are
// written with exactly 4 decimals and angles with 2, making write() a
// deterministic byte-for-byte function of the LogFile.

LogFile parse_logfile(std::string_view text);
std::string write_logfile(const LogFile& f);

LogFile read_logfile(const std::filesystem::path& path);
void write_logfile(const LogFile& f, const std::filesystem::path& path);

struct TrialSegment {
    TrialRecord trial;
    std::vector<StateSample> states;
    std::vector<GameEvent> events;
};

// Samples/events with start_t <= t <= end_t, in stream order.
TrialSegment extract_trial_segment(const LogFile& f, int trial_index);

}  // namespace pxlog
