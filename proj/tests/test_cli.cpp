#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "multifractal/cli.hpp"
#include "multifractal/error.hpp"

using namespace multifractal;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = MF_CONFIG_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "mf_test_cli" / name;
    fs::remove_all(p);
    return p;
}

cli::RunResult run_quiet(cli::RunConfig c, const fs::path& dir) {
    c.output.dir = dir.string();
    std::ostringstream log;
    return cli::run(c, log);
}

const char* kMinimal = R"({"map": {"preset": "doubling"},
  "potential": {"kind": "constant", "value": -0.6931471805599453},
  "command": {"name": "endpoints"}})";

}  // namespace

TEST_CASE("config round trip for every shipped config") {
    std::size_t seen = 0;
    for (const auto& e : fs::directory_iterator(kConfigs)) {
        if (e.path().extension() != ".json") continue;
        ++seen;
        CAPTURE(e.path().string());
        const cli::RunConfig c = cli::load_config(e.path());
        const std::string text = cli::serialize(c);
        const cli::RunConfig back = cli::parse_config(text);
        CHECK(back == c);
        CHECK(cli::serialize(back) == text);
    }
    CHECK(seen >= 10);
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(cli::parse_config(kMinimal));
    const auto kind_of = [](const std::string& text, const std::vector<std::string>& ov = {}) {
        try {
            cli::parse_config(text, ov);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoError;  // "no error"
    };
    CHECK(kind_of("{not json") == ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {"command.bogus=1"}) == ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {"map.bogus=1"}) == ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {"command.level=0"}) == ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {"command.name=dance"}) == ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {"output.precision=18"}) == ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {"potential.kind=bernoulli", "potential.probabilities=[0.3, 0.6]"}) ==
          ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {"command.tol=\"small\""}) == ErrorKind::ConfigError);
    CHECK(kind_of(kMinimal, {R"(map.branches=[{"family": "linear"}])"}) == ErrorKind::ConfigError);

    const cli::RunConfig c = cli::parse_config(kMinimal, {"command.n=5", "output.dir=elsewhere"});
    CHECK(c.command.n == 5);
    CHECK(c.output.dir == "elsewhere");
}

TEST_CASE("number formatting") {
    CHECK(cli::format_double(kInf) == "inf");
    CHECK(cli::format_double(-kInf) == "-inf");
    CHECK(cli::format_double(std::nan("")) == "nan");
    CHECK(cli::format_double(0.5) == "0.5");
    for (double x : {0.1, 1.0 / 3.0, 2.0 / 7.0 * 1e-9, 12345.678901234567}) {
        CHECK(std::strtod(cli::format_double(x).c_str(), nullptr) == x);
    }
    CHECK(cli::format_double(1.0 / 3.0, 3) == "0.333");
}

TEST_CASE("csv emission") {
    SpectrumCurve curve;
    for (double alpha : {0.5, 1.0, 1.5}) {
        SpectrumPoint p;
        p.alpha = alpha;
        p.f = p.f_lower = p.f_upper = 1.0 - (alpha - 1.0) * (alpha - 1.0);
        curve.points.push_back(p);
    }
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    cli::emit_csv(cli::spectrum_table(curve), dir / "s.csv");
    const auto l = lines(slurp(dir / "s.csv"));
    REQUIRE(l.size() == 4);
    CHECK(l[0] == "a,b,b_low,b_high,alpha,f,f_low,f_high");

    cli::Table t{{"x", "y"}, {{kInf, 1LL}, {std::string("label"), 2.5}}};
    cli::emit_csv(t, dir / "t.csv");
    CHECK(slurp(dir / "t.csv") == "x,y\ninf,1\nlabel,2.5\n");
    CHECK_THROWS_AS(cli::emit_csv(t, dir / "missing" / "t.csv"), Error);
}

TEST_CASE("run: commands, exit codes and determinism") {
    const cli::RunConfig bad = cli::load_config(kConfigs / "overlapping_branches.json");
    const fs::path d0 = scratch("bad");
    CHECK(run_quiet(bad, d0).exit_code == 1);
    CHECK(slurp(d0 / "manifest.json").find("MarkovViolation") != std::string::npos);

    const cli::RunConfig farey = cli::load_config(kConfigs / "farey_endpoints.json");
    const fs::path d1 = scratch("farey");
    const cli::RunResult r = run_quiet(farey, d1);
    CHECK(r.exit_code == 0);
    const auto l = lines(slurp(d1 / "endpoints.csv"));
    REQUIRE(l.size() == 3);
    CHECK(l[1].rfind("alpha_min,", 0) == 0);
    CHECK(l[2] == "alpha_max,inf,inf,inf,");

    const cli::RunConfig spec = cli::load_config(kConfigs / "doubling_degenerate.json");
    const fs::path d2 = scratch("deg_a"), d3 = scratch("deg_b");
    CHECK(run_quiet(spec, d2).exit_code == 0);
    CHECK(run_quiet(spec, d3).exit_code == 0);
    for (const char* f : {"spectrum.csv", "samples.csv"}) {
        CAPTURE(f);
        CHECK(slurp(d2 / f) == slurp(d3 / f));
    }
    CHECK(lines(slurp(d2 / "spectrum.csv")).size() == 1 + static_cast<std::size_t>(spec.command.alpha_count));

    // a tolerance no bracket can meet gives exit 2 with the enclosure still written
    cli::RunConfig tight = cli::load_config(kConfigs / "golden_bcurve.json");
    tight.command.tol = 1e-300;
    const fs::path d4 = scratch("tight");
    CHECK(run_quiet(tight, d4).exit_code == 2);
    CHECK(fs::exists(d4 / "bcurve.csv"));
}
