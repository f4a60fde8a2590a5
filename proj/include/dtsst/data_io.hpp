#pragma once

// Line-delimited dataset files and normalized window sampling.
//
// File format: one record per line, `<id>\t<v1>,<v2>,...`. Values are
// decimal reals; the literal token NaN marks a missing value. Lines that
// are empty or start with '#' are ignored.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtsst/numerics/rng.hpp"
#include "dtsst/series.hpp"

namespace dtsst {

struct Record {
    std::string id;
    Series values;  // missing values are quiet NaN
};

struct Dataset {
    std::vector<Record> records;
};

Dataset parse_dataset(std::istream& in);
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// Converts a wide CSV (header row of series ids, one column per series,
/// empty cells or NaN for missing values) into records. Trailing missing
/// cells of each column are dropped; an optional first column named
/// "timestamp", "time", "date" or "index" is skipped.
Dataset convert_wide_csv(std::istream& in);

/// Formats a value so that parsing returns the identical double.
std::string format_value(double v);

struct WindowSpec {
    std::size_t length = 128;
};

struct Window {
    Series values;  // normalized
    double mean = 0.0;
    double std = 0.0;
    std::size_t record = 0;
    std::size_t offset = 0;
};

/// Draws normalized contiguous windows. Series shorter than the window are
/// discarded at construction; the kept records are copied.
class WindowSampler {
public:
    WindowSampler(const Dataset& data, WindowSpec spec);

    /// Record uniformly among the kept series, then a start offset uniformly in [0, len - L].
    Window draw(Rng& rng) const;
    Window at(std::size_t kept_index, std::size_t offset) const;

    std::size_t size() const { return kept_.size(); }
    const WindowSpec& spec() const { return spec_; }
    const Record& record(std::size_t kept_index) const { return kept_.at(kept_index); }

private:
    WindowSpec spec_;
    std::vector<Record> kept_;
    std::vector<std::size_t> kept_source_;
};

} // namespace dtsst
