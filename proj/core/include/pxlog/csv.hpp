#pragma once

#include <string>
#include <vector>

namespace pxlog {

// Minimal CSV support for the artifact's flat tables: comma separator,
// double-quote quoting with "" escapes, no embedded newlines.
std::vector<std::string> csv_split(const std::string& line);
std::string csv_escape(const std::string& cell);

// Shortest round-trip decimal form (to_chars); deterministic.
std::string fmt_double(double v);
// Fixed-precision decimal form, e.g. fmt_fixed(1.5, 4) == "1.5000".
std::string fmt_fixed(double v, int precision);

}  // namespace pxlog
