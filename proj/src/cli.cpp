#include "multifractal/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "multifractal/error.hpp"
#include "multifractal/induced.hpp"
#include "multifractal/numerics.hpp"

#ifndef MFSPEC_VERSION
#define MFSPEC_VERSION "0.0.0"
#endif

namespace multifractal::cli {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) config_error(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) config_error("unknown key " + where + "." + key);
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_error(where + "." + key + ": " + e.what());
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) config_error(what);
}

bool finite(double x) { return std::isfinite(x); }

const std::set<std::string> kPresets{"doubling", "golden_mean", "two_slope", "manneville_pomeau", "farey"};
const std::set<std::string> kFamilies{"linear", "manneville_pomeau", "farey_left", "farey_right",
                                      "power_interpolated"};
const std::set<std::string> kKinds{"constant", "bernoulli", "table", "geometric"};
const std::set<std::string> kCommands{"pressure", "bcurve",   "spectrum", "endpoints",
                                      "blockopt", "localdim", "induce",   "validate"};

MapSection parse_map(const json& j) {
    check_keys(j, {"preset", "s", "branches", "transition"}, "map");
    MapSection m;
    read(j, "preset", m.preset, "map");
    read(j, "s", m.s, "map");
    read(j, "transition", m.transition, "map");
    if (j.contains("branches")) {
        const json& bs = j.at("branches");
        require(bs.is_array(), "map.branches must be an array");
        for (const json& b : bs) {
            check_keys(b, {"family", "slope", "offset", "s", "c", "shift", "domain"}, "map.branches[]");
            BranchSpec item;
            read(b, "family", item.family, "map.branches[]");
            read(b, "slope", item.slope, "map.branches[]");
            read(b, "offset", item.offset, "map.branches[]");
            read(b, "s", item.s, "map.branches[]");
            read(b, "c", item.c, "map.branches[]");
            read(b, "shift", item.shift, "map.branches[]");
            std::vector<double> d{item.lo, item.hi};
            read(b, "domain", d, "map.branches[]");
            require(d.size() == 2, "map.branches[].domain needs two numbers");
            item.lo = d[0];
            item.hi = d[1];
            require(kFamilies.count(item.family) > 0, "unknown branch family " + item.family);
            require(finite(item.slope) && finite(item.offset) && finite(item.c) && finite(item.shift),
                    "branch coefficients must be finite");
            require(item.s > 0.0 && item.s <= 10.0, "branch s must lie in (0, 10]");
            require(item.c > 0.0, "branch c must be positive");
            require(finite(item.lo) && finite(item.hi) && item.lo < item.hi, "branch domain must be lo < hi");
            m.branches.push_back(item);
        }
    }
    require(m.preset.empty() != m.branches.empty(), "map needs exactly one of preset and branches");
    if (!m.preset.empty()) {
        require(kPresets.count(m.preset) > 0, "unknown map preset " + m.preset);
        require(m.transition.empty(), "map.transition only goes with explicit branches");
    }
    require(m.s > 0.0 && m.s <= 10.0, "map.s must lie in (0, 10]");
    for (const auto& row : m.transition) {
        require(row.size() == m.transition.size(), "map.transition must be square");
        for (int v : row) require(v == 0 || v == 1, "map.transition entries must be 0 or 1");
    }
    return m;
}

PotentialSection parse_potential(const json& j) {
    check_keys(j,
               {"kind", "value", "probabilities", "depth", "values", "coefficient", "normalize",
                "normalize_tol", "kn"},
               "potential");
    PotentialSection p;
    read(j, "kind", p.kind, "potential");
    read(j, "value", p.value, "potential");
    read(j, "probabilities", p.probabilities, "potential");
    read(j, "depth", p.depth, "potential");
    read(j, "values", p.values, "potential");
    read(j, "coefficient", p.coefficient, "potential");
    read(j, "normalize", p.normalize, "potential");
    read(j, "normalize_tol", p.normalize_tol, "potential");
    if (j.contains("kn")) {
        const json& k = j.at("kn");
        check_keys(k, {"exact", "C", "gamma"}, "potential.kn");
        read(k, "exact", p.kn_exact, "potential.kn");
        read(k, "C", p.kn_C, "potential.kn");
        read(k, "gamma", p.kn_gamma, "potential.kn");
    }
    require(kKinds.count(p.kind) > 0, "unknown potential kind " + p.kind);
    require(finite(p.value) && finite(p.coefficient), "potential coefficients must be finite");
    require(p.depth >= 1 && p.depth <= 12, "potential.depth must lie in [1, 12]");
    for (double q : p.probabilities) require(q > 0.0 && q <= 1.0, "probabilities must lie in (0, 1]");
    for (double v : p.values) require(finite(v), "potential.values must be finite");
    if (p.kind == "bernoulli") {
        double total = 0.0;
        for (double q : p.probabilities) total += q;
        require(!p.probabilities.empty() && std::abs(total - 1.0) < 1e-12, "probabilities must sum to 1");
    }
    if (p.kind == "table") require(!p.values.empty(), "table potential needs values");
    require(p.normalize_tol > 0.0 && p.normalize_tol < 1.0, "potential.normalize_tol must lie in (0, 1)");
    require(p.kn_C >= 0.0 && finite(p.kn_C), "potential.kn.C must be finite and >= 0");
    require(p.kn_gamma > 0.0 && finite(p.kn_gamma), "potential.kn.gamma must be positive");
    return p;
}

CommandSection parse_command(const json& j) {
    check_keys(j,
               {"name", "level", "levels", "tol", "max_level", "alpha_lo", "alpha_hi", "alpha_count", "a_lo", "a_hi",
                "a_samples", "a_grid", "alpha", "eps", "n", "count", "depth", "seed", "truncation",
                "tail_tol"},
               "command");
    CommandSection c;
    const std::string w = "command";
    read(j, "name", c.name, w);
    read(j, "level", c.level, w);
    read(j, "levels", c.levels, w);
    read(j, "tol", c.tol, w);
    read(j, "max_level", c.max_level, w);
    read(j, "alpha_lo", c.alpha_lo, w);
    read(j, "alpha_hi", c.alpha_hi, w);
    read(j, "alpha_count", c.alpha_count, w);
    read(j, "a_lo", c.a_lo, w);
    read(j, "a_hi", c.a_hi, w);
    read(j, "a_samples", c.a_samples, w);
    read(j, "a_grid", c.a_grid, w);
    read(j, "alpha", c.alpha, w);
    read(j, "eps", c.eps, w);
    read(j, "n", c.n, w);
    read(j, "count", c.count, w);
    read(j, "depth", c.depth, w);
    read(j, "seed", c.seed, w);
    read(j, "truncation", c.truncation, w);
    read(j, "tail_tol", c.tail_tol, w);
    require(kCommands.count(c.name) > 0, "unknown command '" + c.name + "'");
    require(c.level >= 1 && c.level <= 40, "command.level must lie in [1, 40]");
    for (int l : c.levels) require(l >= 1 && l <= 40, "command.levels must lie in [1, 40]");
    require(c.tol > 0.0 && c.tol < 1.0, "command.tol must lie in (0, 1)");
    require(c.max_level >= 1 && c.max_level <= 60, "command.max_level must lie in [1, 60]");
    require(finite(c.alpha_lo) && finite(c.alpha_hi) && c.alpha_lo <= c.alpha_hi,
            "command.alpha_lo <= alpha_hi required");
    require(c.alpha_count >= 1 && c.alpha_count <= 100000, "command.alpha_count must lie in [1, 100000]");
    require(finite(c.a_lo) && finite(c.a_hi) && c.a_lo < c.a_hi, "command.a_lo < a_hi required");
    require(c.a_samples >= 3 && c.a_samples <= 10001, "command.a_samples must lie in [3, 10001]");
    for (double a : c.a_grid) require(finite(a), "command.a_grid must be finite");
    require(finite(c.alpha) && c.alpha > 0.0, "command.alpha must be positive");
    require(c.eps > 0.0 && c.eps < 10.0, "command.eps must lie in (0, 10)");
    require(c.n >= 1 && c.n <= 30, "command.n must lie in [1, 30]");
    require(c.count >= 1 && c.count <= 10000000, "command.count must lie in [1, 1e7]");
    require(c.depth >= 4 && c.depth <= 60, "command.depth must lie in [4, 60]");
    require(c.truncation >= 1 && c.truncation <= 5000, "command.truncation must lie in [1, 5000]");
    require(c.tail_tol > 0.0, "command.tail_tol must be positive");
    return c;
}

OutputSection parse_output(const json& j) {
    check_keys(j, {"dir", "precision"}, "output");
    OutputSection o;
    read(j, "dir", o.dir, "output");
    read(j, "precision", o.precision, "output");
    require(!o.dir.empty(), "output.dir must not be empty");
    require(o.precision >= 1 && o.precision <= 17, "output.precision must lie in [1, 17]");
    return o;
}

void apply_override(json& doc, const std::string& item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) config_error("override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) config_error("override key '" + key + "' has an empty part");
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) config_error("override key '" + key + "' crosses a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::string word_text(const Word& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i && w[i] >= 10) s += '.';
        s += std::to_string(w[i]);
    }
    return s;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> grid(double lo, double hi, int count) {
    if (count == 1) return {lo};
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    return g;
}

json interval_json(double lo, double hi) { return json::array({lo, hi}); }

// Everything a command hands back to run().
struct Outcome {
    std::vector<std::pair<std::string, Table>> tables;
    json brackets = json::object();
    std::vector<std::string> notes;
    bool converged = true;
};

Outcome do_pressure(const MarkovMap& map, const Potential& phi, const CommandSection& c, std::ostream& log) {
    Outcome o;
    Table t{{"level", "P", "P_low", "P_high"}, {}};
    std::vector<PressureBracket> brackets;
    if (c.levels.empty()) {
        try {
            PressureOptions po;
            po.max_level = c.max_level;
            brackets.push_back(pressure(map, phi, c.tol, po));
        } catch (const NotConverged& e) {
            const Interval b = e.best();
            PressureBracket pb;
            pb.lower = b.lo;
            pb.upper = b.hi;
            pb.value = b.mid();
            brackets.push_back(pb);
            o.converged = false;
            o.notes.push_back(e.what());
        }
    } else {
        for (int n : c.levels) brackets.push_back(pressure_bracket(map, phi, n));
    }
    for (const auto& b : brackets) {
        t.rows.push_back({static_cast<long long>(b.level), b.value, b.lower, b.upper});
        log << "P at level " << b.level << " in [" << format_double(b.lower) << ", "
            << format_double(b.upper) << "]\n";
    }
    o.brackets["pressure"] = interval_json(brackets.back().lower, brackets.back().upper);
    o.tables.emplace_back("pressure.csv", std::move(t));
    return o;
}

Outcome do_bcurve(const MarkovMap& map, const Potential& phi, const CommandSection& c, std::ostream&) {
    Outcome o;
    const BSolver solver(map, phi, c.level);
    const std::vector<double> as = c.a_grid.empty() ? grid(c.a_lo, c.a_hi, c.a_samples) : c.a_grid;
    Table t{{"a", "b", "b_low", "b_high", "alpha"}, {}};
    double widest = 0.0;
    for (double a : as) {
        const BBracket b = solver.solve(a);
        double alpha = std::nan("");
        try {
            alpha = alpha_of_a(solver, a).alpha;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DerivativeUnstable) throw;
        }
        widest = std::max(widest, b.width());
        t.rows.push_back({a, b.value, b.lower, b.upper, alpha});
    }
    if (widest > c.tol) {
        o.converged = false;
        o.notes.push_back("widest b bracket " + format_double(widest, 6) + " exceeds tol");
    }
    o.brackets["widest_b"] = widest;
    o.tables.emplace_back("bcurve.csv", std::move(t));
    return o;
}

Outcome do_spectrum(const MarkovMap& map, const Potential& phi, const CommandSection& c, std::ostream& log) {
    Outcome o;
    const SpectrumCurve curve = spectrum_curve(map, phi, c);
    o.converged = curve.converged;
    o.notes = curve.notes;
    const CurveChecks chk = check_curve(curve);
    o.brackets["alpha_min"] = interval_json(curve.ends.alpha_min.lo, curve.ends.alpha_min.hi);
    o.brackets["alpha_max"] = curve.ends.alpha_max_infinite
                                  ? json("inf")
                                  : interval_json(curve.ends.alpha_max.lo, curve.ends.alpha_max.hi);
    o.brackets["dim_lambda"] = interval_json(curve.dim_lambda.lower, curve.dim_lambda.upper);
    o.brackets["level"] = curve.level;
    o.brackets["max_second_difference"] = chk.max_second_difference;
    o.brackets["concave"] = chk.concave();
    log << "alpha_min = " << format_double(curve.alpha_min, 10)
        << ", alpha_max = " << format_double(curve.alpha_max, 10) << ", level " << curve.level << "\n";
    if (curve.a_transition) log << "b(a) = 0 ray below a = " << format_double(*curve.a_transition, 10) << "\n";
    o.tables.emplace_back("spectrum.csv", spectrum_table(curve));
    o.tables.emplace_back("samples.csv", samples_table(curve));
    return o;
}

Outcome do_endpoints(const MarkovMap& map, const Potential& phi, const CommandSection& c, std::ostream& log) {
    Outcome o;
    const Endpoints e = endpoints(map, phi, std::max(2, c.n));
    Table t{{"quantity", "value", "low", "high", "cycle"}, {}};
    t.rows.push_back({std::string("alpha_min"), e.alpha_min.mid(), e.alpha_min.lo, e.alpha_min.hi,
                      word_text(e.min_cycle)});
    if (e.alpha_max_infinite) {
        t.rows.push_back({std::string("alpha_max"), kInf, kInf, kInf, std::string()});
    } else {
        t.rows.push_back({std::string("alpha_max"), e.alpha_max.mid(), e.alpha_max.lo, e.alpha_max.hi,
                          word_text(e.max_cycle)});
    }
    log << "alpha_min = " << format_double(e.alpha_min.mid(), 10) << "\n";
    log << "alpha_max = " << (e.alpha_max_infinite ? std::string("inf") : format_double(e.alpha_max.mid(), 10))
        << "\n";
    o.brackets["alpha_min"] = interval_json(e.alpha_min.lo, e.alpha_min.hi);
    o.brackets["alpha_max"] = e.alpha_max_infinite ? json("inf") : interval_json(e.alpha_max.lo, e.alpha_max.hi);
    o.tables.emplace_back("endpoints.csv", std::move(t));
    return o;
}

Outcome do_blockopt(const MarkovMap& map, const Potential& phi, const CommandSection& c, std::ostream& log) {
    Outcome o;
    const std::vector<int> ns = c.levels.empty() ? std::vector<int>{c.n} : c.levels;
    Table t{{"n", "f_block", "f_block_low", "f_block_high", "error_bar", "s_n", "s_n_low", "s_n_high", "words"},
            {}};
    for (int n : ns) {
        const BlockMeasure bm = optimize_block_weights(map, phi, n, c.alpha);
        const double h = bm.entropy_per_block / n;
        const double f = bm.objective();
        std::vector<Cell> row{static_cast<long long>(n), f, std::min(f, h / bm.lyapunov.hi),
                              std::max(f, h / bm.lyapunov.lo), bm.error_bar};
        try {
            const SnBracket s = bowen_sn(map, phi, n, c.alpha, c.eps);
            row.insert(row.end(), {s.value, s.lower, s.upper, static_cast<long long>(s.words)});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EmptyWindow) throw;
            const double nan = std::nan("");
            row.insert(row.end(), {nan, nan, nan, 0LL});
            o.notes.push_back("empty window at n = " + std::to_string(n));
        }
        log << "n = " << n << ": block optimum " << format_double(bm.objective(), 10) << "\n";
        t.rows.push_back(std::move(row));
    }
    o.tables.emplace_back("blockopt.csv", std::move(t));
    return o;
}

Outcome do_localdim(const WeakGibbsModel& model, const CommandSection& c, std::ostream& log) {
    Outcome o;
    const auto words = sample_points(model, static_cast<std::size_t>(c.count), c.depth, c.seed);
    Table t{{"index", "word", "trend", "estimate", "estimate_low", "estimate_high", "boundary_ok"}, {}};
    std::vector<double> mids;
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const LocalDimension d = local_dimension(model, words[i]);
        mids.push_back(d.estimate.mid());
        flagged += d.boundary_ok ? 0 : 1;
        t.rows.push_back({static_cast<long long>(i), word_text(words[i]), d.trend, d.estimate.mid(), d.estimate.lo,
                          d.estimate.hi, static_cast<long long>(d.boundary_ok)});
    }
    std::sort(mids.begin(), mids.end());
    const double median = mids[mids.size() / 2];
    log << "median local dimension estimate " << format_double(median, 10) << " over " << words.size()
        << " points, " << flagged << " near a cylinder boundary\n";
    o.brackets["median_estimate"] = median;
    o.brackets["boundary_flagged"] = flagged;
    o.tables.emplace_back("localdim.csv", std::move(t));
    return o;
}

Outcome do_induce(const WeakGibbsModel& model, const CommandSection& c, std::ostream& log) {
    Outcome o;
    const InducedSystem sys = build_induced(model, c.truncation);
    const std::vector<double> as = c.a_grid.empty() ? grid(c.a_lo, c.a_hi, c.a_samples) : c.a_grid;
    const auto curve = induced_b_curve(sys, as, c.tail_tol);
    Table t{{"a", "b", "b_low", "b_high", "truncation_error"}, {}};
    for (const auto& p : curve) t.rows.push_back({p.a, p.value, p.lower, p.upper, p.truncation_error});
    log << sys.branches.size() << " induced branches, kept mass " << format_double(sys.kept_mass, 10) << "\n";
    o.brackets["branches"] = sys.branches.size();
    o.brackets["kept_mass"] = sys.kept_mass;
    o.tables.emplace_back("induce.csv", std::move(t));
    return o;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) config_error("config is not valid JSON");
    if (!doc.is_object()) config_error("config must be an object");
    for (const auto& o : overrides) apply_override(doc, o);
    check_keys(doc, {"map", "potential", "command", "output"}, "config");
    for (const char* k : {"map", "potential", "command"})
        if (!doc.contains(k)) config_error(std::string("missing section ") + k);
    RunConfig c;
    c.map = parse_map(doc.at("map"));
    c.potential = parse_potential(doc.at("potential"));
    c.command = parse_command(doc.at("command"));
    if (doc.contains("output")) c.output = parse_output(doc.at("output"));
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string serialize(const RunConfig& c) {
    json doc;
    json& m = doc["map"];
    if (!c.map.preset.empty()) {
        m["preset"] = c.map.preset;
        m["s"] = c.map.s;
    } else {
        m["branches"] = json::array();
        for (const auto& b : c.map.branches) {
            m["branches"].push_back({{"family", b.family},
                                     {"slope", b.slope},
                                     {"offset", b.offset},
                                     {"s", b.s},
                                     {"c", b.c},
                                     {"shift", b.shift},
                                     {"domain", {b.lo, b.hi}}});
        }
        if (!c.map.transition.empty()) m["transition"] = c.map.transition;
    }
    const PotentialSection& p = c.potential;
    doc["potential"] = {{"kind", p.kind},
                        {"value", p.value},
                        {"probabilities", p.probabilities},
                        {"depth", p.depth},
                        {"values", p.values},
                        {"coefficient", p.coefficient},
                        {"normalize", p.normalize},
                        {"normalize_tol", p.normalize_tol},
                        {"kn", {{"exact", p.kn_exact}, {"C", p.kn_C}, {"gamma", p.kn_gamma}}}};
    const CommandSection& k = c.command;
    doc["command"] = {{"name", k.name},         {"level", k.level},         {"levels", k.levels},
                      {"tol", k.tol},           {"max_level", k.max_level}, {"alpha_lo", k.alpha_lo},   {"alpha_hi", k.alpha_hi},
                      {"alpha_count", k.alpha_count}, {"a_lo", k.a_lo},     {"a_hi", k.a_hi},
                      {"a_samples", k.a_samples}, {"a_grid", k.a_grid},     {"alpha", k.alpha},
                      {"eps", k.eps},           {"n", k.n},                 {"count", k.count},
                      {"depth", k.depth},       {"seed", k.seed},           {"truncation", k.truncation},
                      {"tail_tol", k.tail_tol}};
    doc["output"] = {{"dir", c.output.dir}, {"precision", c.output.precision}};
    return doc.dump(2) + "\n";
}

MapConfig make_map_config(const MapSection& s) {
    if (s.preset == "doubling") return presets::doubling();
    if (s.preset == "golden_mean") return presets::golden_mean();
    if (s.preset == "two_slope") return presets::two_slope();
    if (s.preset == "manneville_pomeau") return presets::manneville_pomeau(s.s);
    if (s.preset == "farey") return presets::farey();
    MapConfig mc;
    for (const auto& b : s.branches) {
        BranchFamily f = family::Linear{b.slope, b.offset};
        if (b.family == "manneville_pomeau") f = family::MannevillePomeau{b.s, b.shift};
        if (b.family == "farey_left") f = family::FareyLeft{};
        if (b.family == "farey_right") f = family::FareyRight{};
        if (b.family == "power_interpolated") f = family::PowerInterpolated{b.c, b.s, b.shift};
        mc.branches.emplace_back(f, Interval{b.lo, b.hi});
    }
    if (!s.transition.empty()) {
        TransitionMatrix t(s.transition.size());
        for (std::size_t i = 0; i < s.transition.size(); ++i)
            for (std::size_t j = 0; j < s.transition.size(); ++j) t.set(i, j, s.transition[i][j] != 0);
        mc.transition = t;
    }
    return mc;
}

Potential make_potential(const MarkovMap& map, const PotentialSection& s) {
    Potential phi;
    if (s.kind == "constant") phi = Potential::constant(s.value);
    if (s.kind == "bernoulli") {
        if (s.probabilities.size() != map.symbols())
            config_error("bernoulli potential needs one probability per branch");
        phi = Potential::bernoulli(s.probabilities);
    }
    if (s.kind == "table") phi = Potential::locally_constant(map.symbols(), s.depth, s.values);
    if (s.kind == "geometric") phi = Potential::geometric(s.coefficient);
    if (s.normalize) phi = normalize_potential(map, phi, s.normalize_tol);
    return phi;
}

KnLaw make_law(const PotentialSection& s) { return s.kn_exact ? KnLaw{} : KnLaw::declared(s.kn_C, s.kn_gamma); }

std::string format_double(double x, int precision) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

void emit_csv(const Table& table, const std::filesystem::path& path, int precision) {
    std::string text;
    for (std::size_t i = 0; i < table.columns.size(); ++i) text += (i ? "," : "") + table.columns[i];
    text += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) text += ',';
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>) {
                        text += format_double(v, precision);
                    } else if constexpr (std::is_same_v<V, long long>) {
                        text += std::to_string(v);
                    } else {
                        text += v;
                    }
                },
                row[i]);
        }
        text += '\n';
    }
    write_text(path, text);
}

SpectrumCurve spectrum_curve(const MarkovMap& map, const Potential& phi, const CommandSection& c) {
    SpectrumOptions opt;
    opt.tol = c.tol;
    opt.a_samples = c.a_samples;
    opt.endpoint_level = c.n;
    opt.pressure.max_level = c.max_level;
    return legendre_spectrum(map, phi, grid(c.alpha_lo, c.alpha_hi, c.alpha_count), c.a_lo, c.a_hi, opt);
}

Table spectrum_table(const SpectrumCurve& curve) {
    Table t{{"a", "b", "b_low", "b_high", "alpha", "f", "f_low", "f_high"}, {}};
    const double nan = std::nan("");
    for (const auto& p : curve.points) {
        if (p.empty) {
            t.rows.push_back({nan, nan, nan, nan, p.alpha, p.f, p.f_lower, p.f_upper});
        } else {
            t.rows.push_back({p.a_star, p.b.value, p.b.lower, p.b.upper, p.alpha, p.f, p.f_lower, p.f_upper});
        }
    }
    return t;
}

Table samples_table(const SpectrumCurve& curve) {
    Table t{{"a", "b", "b_low", "b_high", "alpha", "f", "on_ray"}, {}};
    for (const auto& s : curve.samples)
        t.rows.push_back({s.a, s.b.value, s.b.lower, s.b.upper, s.alpha, s.f, static_cast<long long>(s.on_ray)});
    return t;
}

RunResult run(const RunConfig& config, std::ostream& log) {
    RunResult result;
    const std::filesystem::path dir(config.output.dir);
    json manifest;
    const std::string canonical = serialize(config);
    char hash[32];
    std::snprintf(hash, sizeof hash, "fnv1a64:%016" PRIx64, fnv1a(canonical));
    manifest["config_hash"] = hash;
    manifest["version"] = MFSPEC_VERSION;
    manifest["command"] = config.command.name;
    manifest["config"] = json::parse(canonical);

    Outcome outcome;
    try {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
        const MarkovMap map = build_map(make_map_config(config.map));
        const Potential phi = make_potential(map, config.potential);
        const CommandSection& c = config.command;
        if (c.name == "pressure") outcome = do_pressure(map, phi, c, log);
        if (c.name == "bcurve") outcome = do_bcurve(map, phi, c, log);
        if (c.name == "spectrum") outcome = do_spectrum(map, phi, c, log);
        if (c.name == "endpoints") outcome = do_endpoints(map, phi, c, log);
        if (c.name == "blockopt") outcome = do_blockopt(map, phi, c, log);
        if (c.name == "localdim" || c.name == "induce" || c.name == "validate") {
            const WeakGibbsModel model(map, phi, make_law(config.potential));
            if (c.name == "localdim") outcome = do_localdim(model, c, log);
            if (c.name == "induce") outcome = do_induce(model, c, log);
            if (c.name == "validate") {
                log << "valid: " << map.symbols() << " branches, " << map.parabolic_orbits().size()
                    << " parabolic orbit(s), aperiodicity power " << map.aperiodicity_power() << "\n";
                outcome.brackets["symbols"] = map.symbols();
                outcome.brackets["parabolic_orbits"] = map.parabolic_orbits().size();
            }
        }
        for (auto& [name, table] : outcome.tables) {
            emit_csv(table, dir / name, config.output.precision);
            result.artifacts.push_back(dir / name);
        }
        result.exit_code = outcome.converged ? 0 : 2;
        manifest["status"] = outcome.converged ? "ok" : "not_converged";
    } catch (const NotConverged& e) {
        result.exit_code = 2;
        manifest["status"] = "not_converged";
        manifest["error"] = {{"kind", error_name(e.kind())}, {"message", e.what()}};
        outcome.brackets["best"] = interval_json(e.best().lo, e.best().hi);
        result.diagnostics.push_back(e.what());
    } catch (const Error& e) {
        result.exit_code = 1;
        manifest["status"] = "error";
        manifest["error"] = {{"kind", error_name(e.kind())}, {"message", e.what()}};
        result.diagnostics.push_back(e.what());
    }
    for (const auto& n : outcome.notes) result.diagnostics.push_back(n);
    manifest["exit_code"] = result.exit_code;
    manifest["brackets"] = outcome.brackets;
    manifest["notes"] = outcome.notes;
    json arts = json::array();
    for (const auto& a : result.artifacts) arts.push_back(a.filename().string());
    manifest["artifacts"] = arts;
    for (const auto& d : result.diagnostics) log << "diagnostic: " << d << "\n";
    try {
        write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const Error& e) {
        log << "diagnostic: " << e.what() << "\n";
        if (result.exit_code == 0) result.exit_code = 1;
    }
    return result;
}

}  // namespace multifractal::cli
