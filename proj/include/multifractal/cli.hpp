#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "multifractal/maps.hpp"
#include "multifractal/spectrum.hpp"
#include "multifractal/weak_gibbs.hpp"

namespace multifractal::cli {

struct BranchSpec {
    std::string family = "linear";  // linear | manneville_pomeau | farey_left | farey_right | power_interpolated
    double slope = 2.0;
    double offset = 0.0;
    double s = 0.5;
    double c = 1.0;
    double shift = 0.0;
    double lo = 0.0;
    double hi = 1.0;

    friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
};

/// Either a preset name or an explicit branch list.
struct MapSection {
    std::string preset;  // doubling | golden_mean | two_slope | manneville_pomeau | farey
    double s = 0.5;      // manneville_pomeau only
    std::vector<BranchSpec> branches;
    std::vector<std::vector<int>> transition;  // empty: derived from the images

    friend bool operator==(const MapSection&, const MapSection&) = default;
};

struct PotentialSection {
    std::string kind = "constant";  // constant | bernoulli | table | geometric
    double value = 0.0;
    std::vector<double> probabilities;
    int depth = 1;
    std::vector<double> values;
    double coefficient = -1.0;
    bool normalize = false;
    double normalize_tol = 1e-10;
    bool kn_exact = true;
    double kn_C = 0.0;
    double kn_gamma = 1.0;

    friend bool operator==(const PotentialSection&, const PotentialSection&) = default;
};

struct CommandSection {
    std::string name;  // pressure | bcurve | spectrum | endpoints | blockopt | localdim | induce | validate
    int level = 8;
    std::vector<int> levels;
    double tol = 1e-8;
    int max_level = 40;  // cap for the adaptive level drivers
    double alpha_lo = 0.5;
    double alpha_hi = 2.0;
    int alpha_count = 31;
    double a_lo = -4.0;
    double a_hi = 4.0;
    int a_samples = 41;
    std::vector<double> a_grid;
    double alpha = 1.0;
    double eps = 0.05;
    int n = 3;
    int count = 1000;
    int depth = 20;
    std::uint64_t seed = 1;
    int truncation = 40;
    double tail_tol = 0.05;

    friend bool operator==(const CommandSection&, const CommandSection&) = default;
};

struct OutputSection {
    std::string dir = "out";
    int precision = 17;

    friend bool operator==(const OutputSection&, const OutputSection&) = default;
};

struct RunConfig {
    MapSection map;
    PotentialSection potential;
    CommandSection command;
    OutputSection output;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses a JSON config. `overrides` are "dotted.key=value" strings applied
/// before validation; the value is read as JSON, else as a plain string.
/// Unknown keys and out-of-range numbers throw ConfigError.
RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Canonical JSON text; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);

MapConfig make_map_config(const MapSection& section);
Potential make_potential(const MarkovMap& map, const PotentialSection& section);
KnLaw make_law(const PotentialSection& section);

/// The curve the spectrum command emits for these command parameters.
SpectrumCurve spectrum_curve(const MarkovMap& map, const Potential& phi, const CommandSection& command);

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

/// %.{precision}g with "inf", "-inf" and "nan" spelled out.
std::string format_double(double x, int precision = 17);

/// Header plus one line per row. Throws IoError when the file cannot be written.
void emit_csv(const Table& table, const std::filesystem::path& path, int precision = 17);

/// Columns a,b,b_low,b_high,alpha,f,f_low,f_high; one row per grid point.
Table spectrum_table(const SpectrumCurve& curve);
/// The sampled b(a) curve behind a spectrum.
Table samples_table(const SpectrumCurve& curve);

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 converged to a wider enclosure than asked, 1 error
    std::vector<std::filesystem::path> artifacts;
    std::vector<std::string> diagnostics;
};

/// Executes the configured command, writing CSV artifacts and manifest.json
/// under output.dir. Progress and diagnostics go to `log`.
RunResult run(const RunConfig& config, std::ostream& log);

}  // namespace multifractal::cli
