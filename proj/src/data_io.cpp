#include "dtsst/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dtsst {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_missing_token(std::string_view s) {
    return s == "NaN" || s == "nan" || s == "NAN";
}

double parse_value(std::string_view tok, std::size_t line) {
    tok = trim(tok);
    if (is_missing_token(tok)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = tok.data() + tok.size();
    if (!tok.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || tok.empty()) {
        throw DataError("line " + std::to_string(line) + ": cannot parse value '" + std::string(tok) + "'");
    }
    if (!std::isfinite(v)) {
        throw DataError("line " + std::to_string(line) + ": non-finite value '" + std::string(tok) + "'");
    }
    return v;
}

} // namespace

std::string format_value(double v) {
    if (std::isnan(v)) {
        return "NaN";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

Dataset parse_dataset(std::istream& in) {
    Dataset data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("line " + std::to_string(lineno) + ": expected '<id>\\t<values>'");
        }
        Record rec;
        rec.id = line.substr(0, tab);
        if (rec.id.empty()) {
            throw DataError("line " + std::to_string(lineno) + ": empty series id");
        }
        std::string_view rest(line);
        rest.remove_prefix(tab + 1);
        rest = trim(rest);
        if (rest.empty()) {
            throw DataError("line " + std::to_string(lineno) + ": series '" + rec.id + "' has no values");
        }
        while (true) {
            const auto comma = rest.find(',');
            rec.values.push_back(parse_value(rest.substr(0, comma), lineno));
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        data.records.push_back(std::move(rec));
    }
    return data;
}

void write_dataset(std::ostream& out, const Dataset& data) {
    for (const auto& rec : data.records) {
        if (rec.id.empty() || rec.id.find_first_of("\t\n\r") != std::string::npos) {
            throw DataError("series id '" + rec.id + "' is empty or contains tabs/newlines");
        }
        if (rec.values.empty()) {
            throw DataError("series '" + rec.id + "' has no values");
        }
        out << rec.id << '\t';
        for (std::size_t i = 0; i < rec.values.size(); ++i) {
            if (i) {
                out << ',';
            }
            out << format_value(rec.values[i]);
        }
        out << '\n';
    }
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset '" + path.string() + "'");
    }
    return parse_dataset(in);
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write dataset '" + path.string() + "'");
    }
    write_dataset(out, data);
    if (!out) {
        throw DataError("write failed for '" + path.string() + "'");
    }
}

Dataset convert_wide_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.emplace_back(trim(cell));
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("csv: empty input");
    }
    const auto header = split(line);
    std::size_t first = 0;
    if (!header.empty()) {
        const std::string& h = header[0];
        if (h == "timestamp" || h == "time" || h == "date" || h == "index") {
            first = 1;
        }
    }
    if (header.size() <= first) {
        throw DataError("csv: no series columns");
    }
    Dataset data;
    for (std::size_t c = first; c < header.size(); ++c) {
        data.records.push_back({header[c].empty() ? "col" + std::to_string(c) : header[c], {}});
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line);
        for (std::size_t c = first; c < header.size(); ++c) {
            const std::string cell = c < cells.size() ? cells[c] : std::string();
            data.records[c - first].values.push_back(
                cell.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_value(cell, lineno));
        }
    }
    Dataset out;
    for (auto& rec : data.records) {
        while (!rec.values.empty() && std::isnan(rec.values.back())) {
            rec.values.pop_back();
        }
        if (!rec.values.empty()) {
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

WindowSampler::WindowSampler(const Dataset& data, WindowSpec spec) : spec_(spec) {
    if (spec.length < 8) {
        throw InvalidArgument("window length must be >= 8");
    }
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        if (data.records[i].values.size() >= spec.length) {
            kept_.push_back(data.records[i]);
            kept_source_.push_back(i);
        }
    }
    if (kept_.empty()) {
        throw DataError("no series of length >= " + std::to_string(spec.length) + " among " +
                        std::to_string(data.records.size()) + " records");
    }
}

Window WindowSampler::at(std::size_t kept_index, std::size_t offset) const {
    const Record& rec = kept_.at(kept_index);
    if (offset + spec_.length > rec.values.size()) {
        throw ShapeError("window offset " + std::to_string(offset) + " out of range for series '" + rec.id + "'");
    }
    const std::span<const double> raw(rec.values.data() + offset, spec_.length);
    Normalized n = z_normalize(raw);
    Window w;
    w.values = std::move(n.values);
    w.mean = n.mean;
    w.std = n.std;
    w.record = kept_source_[kept_index];
    w.offset = offset;
    return w;
}

Window WindowSampler::draw(Rng& rng) const {
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kept_.size()) - 1));
    const auto span = kept_[k].values.size() - spec_.length;
    const auto offset = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(span)));
    return at(k, offset);
}

} // namespace dtsst
