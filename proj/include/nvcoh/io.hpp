#pragma once

// Delimited-text curve files.
//
//   # protocol=sqRelax
//   # temperature_k=300
//   # seed=7
//   # shots=inf
//   # <key>=<value>          any further metadata
//   tau_us	signal	sigma	counts_signal	counts_reference
//   0	1	...
//
// Writing uses tabs and %.17g so a write/read cycle is lossless.  Reading
// accepts tab, comma or whitespace delimiters; sigma and the count columns are
// optional.

#include "nvcoh/curve_data.hpp"
#include "nvcoh/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nvcoh {

/// Malformed input file; the message names the offending line.
class ParseError : public IoError {
public:
    using IoError::IoError;
};

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(std::string_view line)
{
    std::vector<std::string> out;
    char delim = 0;
    if (line.find('\t') != std::string_view::npos) {
        delim = '\t';
    } else if (line.find(',') != std::string_view::npos) {
        delim = ',';
    }
    if (delim != 0) {
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find(delim, start);
            out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
            if (pos == std::string_view::npos) {
                break;
            }
            start = pos + 1;
        }
        return out;
    }
    std::istringstream in{std::string(line)};
    std::string tok;
    while (in >> tok) {
        out.push_back(tok);
    }
    return out;
}

inline double parse_number(std::string_view s, std::size_t lineNo, std::string_view column)
{
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError("line " + std::to_string(lineNo) + ": column '" + std::string(column) +
                         "' is not a number: '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace detail

inline void write_curve(std::ostream& os, const CurveData& c)
{
    c.validate();
    if (!c.protocol.empty()) {
        os << "# protocol=" << c.protocol << '\n';
    }
    if (!std::isnan(c.temperature)) {
        os << "# temperature_k=" << format_double(c.temperature) << '\n';
    }
    os << "# seed=" << c.seed << '\n';
    os << "# shots=" << (c.shots ? std::to_string(*c.shots) : std::string("inf")) << '\n';
    for (const auto& [k, v] : c.metadata) {
        os << "# " << k << '=' << v << '\n';
    }
    const bool counts = !c.countsSignal.empty();
    os << "tau_us\tsignal";
    if (c.has_sigma()) {
        os << "\tsigma";
    }
    if (counts) {
        os << "\tcounts_signal\tcounts_reference";
    }
    os << '\n';
    for (std::size_t i = 0; i < c.size(); ++i) {
        os << format_double(c.tauUs[i]) << '\t' << format_double(c.signal[i]);
        if (c.has_sigma()) {
            os << '\t' << format_double(c.sigma[i]);
        }
        if (counts) {
            os << '\t' << format_double(c.countsSignal[i]) << '\t' << format_double(c.countsReference[i]);
        }
        os << '\n';
    }
}

inline CurveData read_curve(std::istream& in)
{
    CurveData c;
    std::string raw;
    std::size_t lineNo = 0;
    std::vector<std::string> columns;
    int tauCol = -1;
    int signalCol = -1;
    int sigmaCol = -1;
    int csCol = -1;
    int crCol = -1;

    while (std::getline(in, raw)) {
        ++lineNo;
        const auto line = detail::trim(raw);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const auto body = detail::trim(line.substr(1));
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) {
                continue;
            }
            const std::string key(detail::trim(body.substr(0, eq)));
            const std::string value(detail::trim(body.substr(eq + 1)));
            try {
                if (key == "protocol") {
                    c.protocol = value;
                } else if (key == "temperature_k") {
                    c.temperature = detail::parse_number(value, lineNo, key);
                } else if (key == "seed") {
                    c.seed = std::stoull(value);
                } else if (key == "shots") {
                    if (value == "inf") {
                        c.shots.reset();
                    } else {
                        c.shots = std::stoll(value);
                    }
                } else {
                    c.metadata[key] = value;
                }
            } catch (const std::logic_error&) {
                throw ParseError("line " + std::to_string(lineNo) + ": bad value for '" + key + "'");
            }
            continue;
        }

        auto fields = detail::split_fields(line);
        if (columns.empty()) {
            columns = fields;
            for (std::size_t j = 0; j < columns.size(); ++j) {
                const auto& name = columns[j];
                const int idx = static_cast<int>(j);
                int* slot = name == "tau_us"             ? &tauCol
                            : name == "signal"           ? &signalCol
                            : name == "sigma"            ? &sigmaCol
                            : name == "counts_signal"    ? &csCol
                            : name == "counts_reference" ? &crCol
                                                         : nullptr;
                if (slot == nullptr) {
                    throw ParseError("line " + std::to_string(lineNo) + ": unknown column '" + name + "'");
                }
                if (*slot >= 0) {
                    throw ParseError("line " + std::to_string(lineNo) + ": duplicate column '" + name + "'");
                }
                *slot = idx;
            }
            if (tauCol < 0 || signalCol < 0) {
                throw ParseError("line " + std::to_string(lineNo) + ": header must name tau_us and signal");
            }
            if ((csCol < 0) != (crCol < 0)) {
                throw ParseError("line " + std::to_string(lineNo) +
                                 ": counts_signal and counts_reference must appear together");
            }
            continue;
        }
        if (fields.size() != columns.size()) {
            throw ParseError("line " + std::to_string(lineNo) + ": expected " + std::to_string(columns.size()) +
                             " fields, found " + std::to_string(fields.size()));
        }
        const auto get = [&](int col) {
            return detail::parse_number(fields[static_cast<std::size_t>(col)], lineNo,
                                        columns[static_cast<std::size_t>(col)]);
        };
        const double tau = get(tauCol);
        if (!c.tauUs.empty() && !(tau > c.tauUs.back())) {
            throw ParseError("line " + std::to_string(lineNo) + ": tau_us must be strictly increasing");
        }
        c.tauUs.push_back(tau);
        c.signal.push_back(get(signalCol));
        if (sigmaCol >= 0) {
            c.sigma.push_back(get(sigmaCol));
        }
        if (csCol >= 0) {
            c.countsSignal.push_back(get(csCol));
            c.countsReference.push_back(get(crCol));
        }
    }
    if (columns.empty()) {
        throw ParseError("line " + std::to_string(lineNo) + ": no header row (empty file?)");
    }
    if (c.tauUs.empty()) {
        throw ParseError("line " + std::to_string(lineNo) + ": no data rows");
    }
    return c;
}

inline CurveData ingest_curve(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    try {
        return read_curve(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

}  // namespace nvcoh
