#include "doctest.h"

#include "kwc/commands.hpp"
#include "kwc/config.hpp"
#include "kwc/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace kwc;
namespace fs = std::filesystem;

namespace {

struct Csv {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name)
                return k;
        FAIL("no column " << name);
        return 0;
    }
    double number(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }
};

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(item);
    return out;
}

Csv read_csv(const fs::path& p)
{
    std::ifstream in(p);
    REQUIRE(in);
    Csv csv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind('#', 0) == 0)
            csv.comments.push_back(line);
        else if (csv.header.empty())
            csv.header = split(line);
        else
            csv.rows.push_back(split(line));
    }
    return csv;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("kwc_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& command, const std::string& ini, const fs::path& out, std::uint64_t seed = 0)
{
    auto ctx = make_context(Config::parse(ini), out.string(), &seed, nullptr);
    return run_command(command, ctx);
}

} // namespace

TEST_CASE("config parsing")
{
    const auto cfg = Config::parse("[grid]\nnodes = 64\nh = 0.5\n[schedule]\neps = 0.1, 0.01 ,0.001\nname = step\n");
    CHECK(cfg.count("grid.nodes") == 64);
    CHECK(cfg.number("grid.h") == 0.5);
    CHECK(cfg.numbers("schedule.eps") == std::vector<double>{0.1, 0.01, 0.001});
    CHECK(cfg.text("schedule.name") == "step");
    CHECK(cfg.number("grid.missing", 7.0) == 7.0);
    CHECK_FALSE(cfg.has("grid.missing"));
    CHECK_THROWS_AS(cfg.number("grid.missing"), ConfigError);
    CHECK_THROWS_AS(cfg.number("schedule.name"), ConfigError);
    CHECK_THROWS_AS(cfg.count("grid.h"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[broken\n"), ConfigError);
    CHECK_THROWS_AS(Config::load("/nonexistent/kwc.ini"), ConfigError);
    CHECK(Config::parse("[a]\nb = 1, , 2\n").numbers("a.b") == std::vector<double>{1.0, 2.0});
}

TEST_CASE("config hash and paths")
{
    const auto a = Config::parse("[a]\nx = 1\n");
    const auto b = Config::parse("[a]\nx = 2\n");
    CHECK(a.hash().size() == 16);
    CHECK(a.hash() == Config::parse("[a]\nx = 1\n").hash());
    CHECK(a.hash() != b.hash());
    CHECK(fnv1a("") == 14695981039346656037ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);

    const auto dir = scratch("paths");
    std::ofstream(dir / "c.ini") << "[x]\ny = 1\n";
    const auto cfg = Config::load((dir / "c.ini").string());
    CHECK(cfg.resolve("t.txt") == (dir / "t.txt").string());
    CHECK(cfg.resolve("/abs/t.txt") == "/abs/t.txt");
}

TEST_CASE("potential and weight blocks")
{
    CHECK(potential_from(Config::parse("")).kind() == PotentialSpec::Kind::quadratic);
    CHECK(potential_from(Config::parse("[potential]\nkind = quartic\n")).kind() == PotentialSpec::Kind::quartic);
    CHECK_THROWS_AS(potential_from(Config::parse("[potential]\nkind = sextic\n")), ConfigError);
    CHECK(weight_from(Config::parse("[weight]\nkind = shifted\nshift = 0.5\n"))(0.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(weight_from(Config::parse("[weight]\nkind = shifted\n")), ConfigError);
    CHECK_THROWS_AS(weight_from(Config::parse("[weight]\nkind = shifted\nshift = -1\n")), ConfigError);

    const auto dir = scratch("tables");
    std::ofstream(dir / "f.txt") << "# v F\n-1 4\n0 1\n1 0\n2 1\n3 4\n";
    std::ofstream(dir / "c.ini") << "[potential]\nkind = table\nfile = f.txt\n";
    const auto pot = potential_from(Config::load((dir / "c.ini").string()));
    CHECK(pot(1.0) == doctest::Approx(0.0));
    CHECK(pot(0.0) == doctest::Approx(1.0));
    std::ofstream(dir / "d.ini") << "[potential]\nkind = table\nfile = nowhere.txt\n";
    CHECK_THROWS_AS(potential_from(Config::load((dir / "d.ini").string())), ConfigError);
}

TEST_CASE("metadata block")
{
    const auto cfg = Config::parse("[a]\nx = 1\n");
    std::ostringstream os;
    write_metadata(os, cfg, "sigma-table", 42);
    CHECK(os.str() == std::string("# kwc ") + kToolVersion + "\n# command: sigma-table\n# config_hash: " + cfg.hash() +
                          "\n# seed: 42\n");
}

TEST_CASE("fixtures")
{
    const auto f = staircase_signal(32, 3, 1.0, 1);
    CHECK(f.size() == 32);
    CHECK(f[14] == 0.0);
    CHECK(f[15] == 1.0);
    CHECK(f[16] == 2.0);
    CHECK(f[17] == 3.0);
    CHECK(f[31] == 3.0);
    const auto flat = staircase_signal(8, 0, 1.0, 1);
    for (double x : flat.values())
        CHECK(x == 0.0);
    CHECK_THROWS_AS(staircase_signal(4, 5, 1.0, 1), InvalidArgument);

    CHECK(in_thick_cantor(0.0, 3));
    CHECK(in_thick_cantor(1.0, 3));
    CHECK(in_thick_cantor(0.3, 3));
    CHECK(in_thick_cantor(0.71875, 3));  // edge of a removed gap
    CHECK_FALSE(in_thick_cantor(0.5, 3));
    CHECK_FALSE(in_thick_cantor(0.25, 3));
    CHECK_FALSE(in_thick_cantor(0.125, 3));
    CHECK_FALSE(in_thick_cantor(0.375, 3));
    CHECK(in_thick_cantor(0.125, 2));    // only removed at depth 3
    CHECK_FALSE(in_thick_cantor(1.5, 3));
    // Removed at depth 3: 1/4, then 2/16, then 3/64 (two depth-3 gaps half overlap the first).
    std::size_t inside = 0;
    const std::size_t n = 1 << 16;
    for (std::size_t k = 0; k < n; ++k)
        inside += in_thick_cantor((static_cast<double>(k) + 0.5) / n, 3);
    CHECK(static_cast<double>(inside) / n == doctest::Approx(1.0 - 0.25 - 2.0 / 16 - 3.0 / 64).epsilon(1e-4));
}

TEST_CASE("sigma-table command")
{
    const auto out = scratch("sigma");
    CHECK(run("sigma-table", "[sigma]\nr = 0.01, 0.1, 0.5, 1, 2, 5, 10\n", out) == kExitPass);
    const auto csv = read_csv(out / "sigma_table.csv");
    CHECK(csv.header == std::vector<std::string>{"r", "sigma_numeric", "sigma_closed_form", "diff"});
    REQUIRE(csv.rows.size() == 8);  // r = 0 is added
    CHECK(csv.number(0, "r") == 0.0);
    CHECK(csv.number(0, "sigma_numeric") == 0.0);
    for (std::size_t k = 0; k < csv.rows.size(); ++k) {
        const double r = csv.number(k, "r");
        CHECK(std::abs(csv.number(k, "sigma_numeric") - r / (1.0 + r)) <= 1e-6);
    }
    CHECK(csv.number(4, "sigma_numeric") == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(csv.number(7, "sigma_numeric") == doctest::Approx(10.0 / 11.0).epsilon(1e-6));
    REQUIRE(csv.comments.size() >= 3);
    CHECK(csv.comments[0] == std::string("# kwc ") + kToolVersion);
    CHECK(csv.comments[2].rfind("# config_hash: ", 0) == 0);

    const auto other = scratch("sigma_shifted");
    CHECK(run("sigma-table", "[weight]\nkind = shifted\nshift = 0.2\n[sigma]\ncount = 5\n", other) == kExitPass);
    CHECK(read_csv(other / "sigma_table.csv").header == std::vector<std::string>{"r", "sigma_numeric"});
}

TEST_CASE("gamma-check command")
{
    const std::string fixture = "[limit]\ndims = 1\nlo = -1\nhi = 2.5\nat = 0.5\nxi_minus = 0.3\nxi_plus = 1.2\n"
                                "[schedule]\neps = 0.1, 0.01\n[grid]\nh_over_eps = 20\n";
    const auto out = scratch("gamma");
    CHECK(run("gamma-check", fixture, out) == kExitPass);
    const auto csv = read_csv(out / "gamma_check.csv");
    CHECK(csv.header ==
          std::vector<std::string>{"epsilon", "h", "nodes", "e_sMM_of_recovery", "e0_limit", "rel_error"});
    REQUIRE(csv.rows.size() == 2);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(csv.number(k, "e0_limit") == doctest::Approx(0.53).epsilon(1e-9));

    // Too tight a gate is a property violation.
    CHECK(run("gamma-check", fixture + "[gate]\nmax_rel_error = 1e-9\n", scratch("gamma_tight")) == kExitViolation);

    // Empty singular set: every energy vanishes.
    const auto none = scratch("gamma_none");
    CHECK(run("gamma-check", "[limit]\ndims = 1\n[schedule]\neps = 0.1, 0.01\n", none) == kExitPass);
    const auto zero = read_csv(none / "gamma_check.csv");
    for (std::size_t k = 0; k < zero.rows.size(); ++k) {
        CHECK(zero.number(k, "e_sMM_of_recovery") == 0.0);
        CHECK(zero.number(k, "e0_limit") == 0.0);
    }

    // Supports that do not fit are skipped and reported.
    const auto tight = scratch("gamma_skip");
    CHECK(run("gamma-check",
              "[limit]\ndims = 1\nat = 0.5\nxi_minus = 0.3\nxi_plus = 1.2\n[schedule]\neps = 0.1, 0.001\n", tight) ==
          kExitPass);
    const auto skipped = read_csv(tight / "gamma_check.csv");
    CHECK(skipped.rows.size() == 1);
    bool reported = false;
    for (const auto& c : skipped.comments)
        reported = reported || c.rfind("# skipped epsilon=0.1", 0) == 0;
    CHECK(reported);

    // 2D flat segment of length 0.5: the limit is 0.5 * 0.53.
    const auto plane = scratch("gamma_2d");
    run("gamma-check",
        "[limit]\ndims = 2\nax = 0.25\nay = 0.5\nbx = 0.75\nby = 0.5\nxi_minus = 0.3\nxi_plus = 1.2\n"
        "[schedule]\neps = 0.001\n[grid]\nnodes = 256\n",
        plane);
    CHECK(read_csv(plane / "gamma_check.csv").number(0, "e0_limit") == doctest::Approx(0.265).epsilon(1e-9));
}

TEST_CASE("configuration errors map to exit code 3")
{
    CHECK(run("gamma-check", "[limit]\ndims = 3\n[schedule]\neps = 0.1\n", scratch("bad_dims")) == kExitConfig);
    CHECK(run("gamma-check", "[limit]\ndims = 1\n", scratch("no_schedule")) == kExitConfig);
    CHECK(run("gamma-check", "[limit]\nat = 0.5, 0.7\nxi_minus = 0.3\nxi_plus = 1.2\n[schedule]\neps = 0.1\n",
              scratch("ragged")) == kExitConfig);
    CHECK(run("sigma-table", "[potential]\nkind = nope\n", scratch("bad_pot")) == kExitConfig);
    CHECK(run("denoise", "[denoise]\ninput = /nonexistent/f.txt\n", scratch("no_input")) == kExitConfig);
    CHECK(run("no-such-command", "", scratch("unknown")) == kExitConfig);
}

TEST_CASE("elpf-check command")
{
    const auto out = scratch("elpf");
    CHECK(run("elpf-check", "[potential]\nkind = quartic\n", out) == kExitPass);
    const auto csv = read_csv(out / "elpf.csv");
    CHECK(csv.rows.size() == 100);
    for (std::size_t k = 0; k < csv.rows.size(); ++k) {
        CHECK(csv.rows[k].back() == "1");
        if (csv.number(k, "c") == 1.0) {
            CHECK(csv.number(k, "lhs") == 0.0);
            CHECK(csv.number(k, "rhs") == 0.0);
        }
    }
}

TEST_CASE("staircase command")
{
    const auto out = scratch("stairs");
    CHECK(run("staircase", "[staircase]\nlambda_count = 21\n", out) == kExitPass);
    const auto csv = read_csv(out / "staircase.csv");
    std::map<std::string, std::size_t> at;
    for (std::size_t k = 0; k < csv.rows.size(); ++k)
        at[csv.rows[k][0]] = k;
    CHECK(csv.number(at["per_step"], "tv") == doctest::Approx(3.0));
    CHECK(csv.number(at["merged"], "tv") == doctest::Approx(3.0));
    CHECK(csv.number(at["per_step"], "tvkwc_jump_cost") == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(csv.number(at["merged"], "tvkwc_jump_cost") == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(csv.number(at["tvkwc_oracle"], "jumps") == 1);
    CHECK(csv.number(at["tvkwc_oracle"], "tvkwc_objective") ==
          doctest::Approx(csv.number(at["exhaustive_search"], "tvkwc_objective")).epsilon(1e-12));

    const auto flat = scratch("stairs_flat");
    CHECK(run("staircase", "[staircase]\nsteps = 0\nlambda = 10\n", flat) == kExitPass);
    const auto f = read_csv(flat / "staircase_signal.csv");
    for (std::size_t k = 0; k < f.rows.size(); ++k) {
        CHECK(f.number(k, "u_tvkwc") == f.number(k, "f"));
        CHECK(f.number(k, "u_tv") == doctest::Approx(f.number(k, "f")));
    }

    const auto single = scratch("stairs_single");
    CHECK(run("staircase", "[staircase]\nsteps = 1\nstep_height = 2\nlambda = 1000\n", single) == kExitPass);
    const auto s = read_csv(single / "staircase.csv");
    for (std::size_t k = 0; k < s.rows.size(); ++k)
        if (s.rows[k][0] == "tvkwc_oracle" || s.rows[k][0] == "tv_taut_string")
            CHECK(s.number(k, "jumps") == 1);
}

TEST_CASE("commands are deterministic given config and seed")
{
    const std::string ini = "[staircase]\nnoise = 0.1\nlambda = 5\nverify = 0\n";
    const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    run("staircase", ini, a, 3);
    run("staircase", ini, b, 3);
    run("staircase", ini, c, 4);
    CHECK(slurp(a / "staircase_signal.csv") == slurp(b / "staircase_signal.csv"));
    CHECK(slurp(a / "staircase_signal.csv") != slurp(c / "staircase_signal.csv"));
}

TEST_CASE("metric-demo command")
{
    const auto out = scratch("metric");
    CHECK(run("metric-demo",
              "[metric]\npixels = 128\neps = 0.2\ncantor_eps = 0.1\ncantor_slices = 3\ndirections = 2\n", out) ==
          kExitPass);
    const auto csv = read_csv(out / "metric_demo.csv");
    CHECK(csv.header ==
          std::vector<std::string>{"fixture", "epsilon", "offset", "quantity", "value", "bound", "pass"});
    CHECK(csv.rows.size() == 2 + 1 + 3);
    CHECK(fs::exists(out / "cantor_K.pgm"));
    CHECK(fs::exists(out / "cantor_Keps0.1.pgm"));
    CHECK(fs::exists(out / "bump_meridian_eps0.2.pgm"));
}

TEST_CASE("denoise command")
{
    const auto out = scratch("denoise");
    auto f = GridField::over_interval(0.0, 1.0, 24, 0.4);
    f.save((out / "flat.txt").string());
    CHECK(run("denoise", "[denoise]\ninput = " + (out / "flat.txt").string() + "\neps = 0.1, 0.05\n", out) ==
          kExitPass);
    const auto u = GridField::load((out / "u.txt").string());
    const auto v = GridField::load((out / "v.txt").string());
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(u[i] == f[i]);
        CHECK(v[i] == 1.0);
    }
    const auto trace = read_csv(out / "trace.csv");
    CHECK(trace.header.front() == "iteration");
    CHECK(read_csv(out / "jumps.csv").rows.empty());
}
