// Runs the acceptance experiments and prints one PASS/FAIL line per criterion.

#include "kwc/commands.hpp"
#include "kwc/energy.hpp"
#include "kwc/errors.hpp"
#include "kwc/profile.hpp"
#include "kwc/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace kwc;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const std::string& name, bool pass, const std::string& detail)
{
    std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

// Runs one criterion; an exception is a failure with its message.
void criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body)
{
    try {
        const auto [pass, detail] = body();
        report(id, name, pass, detail);
    } catch (const std::exception& e) {
        report(id, name, false, std::string("threw: ") + e.what());
    }
}

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// The 1D limit used by the recovery criteria: one jump at 0.5 with (0.3, 1.2)
// on a domain wide enough for the eps = 0.1 support.
SlicedLimit1D line_fixture() { return SlicedLimit1D(-1.0, 2.5, {{0.5, 0.3, 1.2}}); }

Limit2D plane_fixture() { return Limit2D(Rect{{0.0, 0.0}, {1.0, 1.0}}, {{{0.25, 0.5}, {0.75, 0.5}, 0.3, 1.2}}); }

GridField line_grid(double eps)
{
    const auto n = static_cast<std::size_t>(std::ceil(3.5 * 50.0 / eps)) + 1;
    return GridField::over_interval(-1.0, 2.5, n);
}

double recovery_energy_1d(double eps)
{
    const auto q = PotentialSpec::quadratic();
    const auto v = recovery_field(eps, line_fixture(), WeightSpec::quadratic(), q, line_grid(eps));
    return e_sMM(v, eps, q).total;
}

double brute_hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& b)
{
    auto dir = [](const std::vector<Point2>& x, const std::vector<Point2>& y) {
        double worst = 0.0;
        for (const auto& p : x) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : y)
                best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(dir(a, b), dir(b, a));
}

std::vector<std::string> csv_field_rows(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::vector<std::string> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.rfind('#', 0) == 0)
            continue;
        if (header) {
            header = false;
            continue;
        }
        rows.push_back(line);
    }
    return rows;
}

} // namespace

int main()
{
    const auto q = PotentialSpec::quadratic();
    const auto quartic = PotentialSpec::quartic();
    const auto w = WeightSpec::quadratic();

    criterion(1, "sigma closed form", [&] {
        const auto t0 = Clock::now();
        double worst = 0.0;
        for (double r : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0})
            worst = std::max(worst, std::abs(sigma_jump_cost(w, q, r) - r / (1.0 + r)));
        const double t = seconds_since(t0);
        return std::pair{worst <= 1e-6 && t < 1.0, "max |sigma - r/(1+r)| = " + fmt(worst) + ", " + fmt(t) + " s"};
    });

    criterion(2, "G closed form", [&] {
        const auto t0 = Clock::now();
        double worst = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double s = -1.0 + 4.0 * k / 200.0;
            worst = std::max(worst, std::abs(G(q, s) - 0.5 * (s - 1.0) * (s - 1.0)));
        }
        const double t = seconds_since(t0);
        return std::pair{worst <= 1e-8 && t < 1.0, "max error over 201 points = " + fmt(worst) + ", " + fmt(t) + " s"};
    });

    const double limit1 = e0_sMM(line_fixture(), q);
    std::vector<double> family_energy;
    criterion(3, "1D limsup at desk scale", [&] {
        const auto t0 = Clock::now();
        std::vector<double> errs;
        for (double eps : {1e-1, 1e-2, 1e-3}) {
            const double e = recovery_energy_1d(eps);
            family_energy.push_back(e);
            errs.push_back(std::abs(e - limit1) / limit1);
        }
        const double t = seconds_since(t0);
        const bool close = errs.back() <= 0.05;
        const bool decreasing = errs[1] < errs[0] && errs[2] < errs[1];
        return std::pair{close && decreasing && t < 10.0,
                         "rel errors " + fmt(errs[0]) + ", " + fmt(errs[1]) + ", " + fmt(errs[2]) + " (within 5%: " +
                             (close ? "yes" : "no") + ", decreasing: " + (decreasing ? "yes" : "no") + "), " + fmt(t) +
                             " s"};
    });

    double plane_energy = std::numeric_limits<double>::quiet_NaN();
    criterion(4, "2D limsup", [&] {
        const auto t0 = Clock::now();
        const auto grid = GridField::over_rectangle({0.0, 0.0}, {1.0, 1.0}, 1024);
        const auto v = recovery_field(1e-3, plane_fixture(), w, q, grid);
        plane_energy = e_sMM(v, 1e-3, q).total;
        const double limit = e0_sMM(plane_fixture(), q);
        const double rel = std::abs(plane_energy - limit) / limit;
        const double t = seconds_since(t0);
        return std::pair{rel <= 0.1 && t < 60.0, "energy " + fmt(plane_energy) + " vs " + fmt(limit) + ", rel error " +
                                                     fmt(rel) + ", " + fmt(t) + " s"};
    });

    criterion(5, "one-sided liminf", [&] {
        family_energy.push_back(recovery_energy_1d(1e-4));
        double lowest = std::numeric_limits<double>::infinity();
        for (double e : family_energy)
            lowest = std::min(lowest, e);
        const bool pass = lowest >= 0.95 * limit1;
        return std::pair{pass, "1D family (eps 1e-1..1e-4): min energy " + fmt(lowest) + " vs 0.95 * " + fmt(limit1) +
                                   " = " + fmt(0.95 * limit1) + "; 2D 1024^2 at eps 1e-3: " + fmt(plane_energy) +
                                   " vs 0.95 * 0.265 = " + fmt(0.95 * 0.265)};
    });

    criterion(6, "sliced-graph convergence", [&] {
        const double eps1 = 1e-4;
        const auto grid1 = line_grid(eps1);
        const auto v1 = recovery_field(eps1, line_fixture(), w, q, grid1);
        const auto d1 = d_nu(*slices_of(v1), *slices_of(line_fixture()), {1.0, 0.0}, {}, grid1.spacing()).value;

        const double eps2 = 1e-3;
        const auto grid2 = GridField::over_rectangle({0.0, 0.0}, {1.0, 1.0}, 1024);
        const auto v2 = recovery_field(eps2, plane_fixture(), w, q, grid2);
        const auto dd = d_D(*slices_of(v2), *slices_of(plane_fixture()), DirectionSet::golden_angle(8), 64,
                            grid2.spacing());
        const bool pass = d1 <= 0.02 && dd.value <= 0.05;
        return std::pair{pass, "1D d_nu at eps 1e-4 = " + fmt(d1) + " (bound 0.02); 2D d_D at eps 1e-3 = " +
                                   fmt(dd.value) + " (bound 0.05, tail " + fmt(dd.tail_bound) + ")"};
    });

    criterion(7, "profile decay bound", [&] {
        const auto t0 = Clock::now();
        std::vector<double> deltas(20);
        for (int k = 0; k < 20; ++k)
            deltas[k] = std::pow(10.0, -3.0 + 3.0 * k / 19.0);
        const std::vector<double> cs{-1.0, 0.0, 0.5, 0.9, 1.0};
        double excess = -std::numeric_limits<double>::infinity();
        bool pass = true;
        for (const auto* pot : {&q, &quartic}) {
            const auto rep = check_elpf(*pot, cs, deltas, 1e-8);
            pass = pass && rep.passed && rep.rows.size() == 100;
            for (const auto& r : rep.rows) {
                excess = std::max(excess, r.lhs - r.rhs);
                pass = pass && r.lhs <= r.rhs + 1e-8;
            }
        }
        const double t = seconds_since(t0);
        return std::pair{pass && t < 5.0, "max lhs - rhs = " + fmt(excess) + " over 200 rows, " + fmt(t) + " s"};
    });

    criterion(8, "staircase contrast", [&] {
        const auto f = staircase_signal(32, 3, 1.0, 1);
        const JumpCostTable table(w, q);
        const double merged = table.evaluate(3.0).value;
        const double per_step = 3.0 * table.evaluate(1.0).value;
        const bool costs = merged < per_step && std::abs(merged - 0.75) <= 1e-6 && std::abs(per_step - 1.5) <= 1e-6;

        // Lambda range on which the oracle keeps a single jump.
        double lo = 0.0, hi = 0.0;
        for (int k = 0; k <= 40; ++k) {
            const double lam = std::pow(10.0, -1.0 + 4.0 * k / 40.0);
            if (minimize_tvkwc_1d(f, lam, q, w, 16).jumps == 1) {
                lo = lo == 0.0 ? lam : lo;
                hi = lam;
            }
        }
        bool one_jump = false, verified = true;
        std::string detail;
        for (double lam : {std::sqrt(lo * hi), lo, hi, 0.5 * lo, 2.0 * hi}) {
            if (!(lam > 0.0))
                continue;
            const auto dp = minimize_tvkwc_1d(f, lam, q, w, 16);
            const auto ex = search_tvkwc_1d(f, lam, q, w, 16);
            verified = verified && std::abs(dp.objective - ex.objective) <= 1e-12 * std::max(1.0, dp.objective);
            if (lam == std::sqrt(lo * hi)) {
                one_jump = dp.jumps == 1 && dp.jump_cost < per_step;
                detail = "at lambda " + fmt(lam) + " oracle jumps " + std::to_string(dp.jumps) + " (size " +
                         fmt(dp.jumps == 1 ? std::abs(dp.u[31] - dp.u[0]) : 0.0) + ", cost " + fmt(dp.jump_cost) +
                         "), objective " + fmt(dp.objective) + " = exhaustive " + fmt(ex.objective);
            }
        }
        return std::pair{costs && one_jump && verified,
                         "sigma(3) = " + fmt(merged) + " < 3 sigma(1) = " + fmt(per_step) + "; one-jump window [" +
                             fmt(lo) + ", " + fmt(hi) + "]; " + detail + "; exhaustive agreement at 5 lambdas: " +
                             (verified ? "yes" : "no")};
    });

    criterion(9, "radial bump counterexample", [&] {
        const auto out = std::filesystem::temp_directory_path() / "kwc_acceptance_metric";
        const auto t0 = Clock::now();
        auto ctx = make_context(Config::parse("[metric]\npixels = 512\neps = 0.2, 0.1, 0.05\n"
                                              "slice_offsets = 0.25, 0.5, 0.75\ndirections = 8\n"
                                              "cantor_eps = 0.1\ncantor_slices = 1\n"),
                                out.string(), nullptr, nullptr);
        const int code = run_command("metric-demo", ctx);
        bool pass = code == kExitPass;
        std::string detail;
        std::size_t bump_rows = 0;
        for (const auto& row : csv_field_rows(out / "metric_demo.csv")) {
            if (row.rfind("radial_bump,", 0) != 0)
                continue;
            ++bump_rows;
            std::vector<std::string> cols;
            std::stringstream ss(row);
            for (std::string c; std::getline(ss, c, ',');)
                cols.push_back(c);
            pass = pass && cols.back() == "1";
            detail += "eps " + fmt(std::stod(cols[1])) + " " + cols[3] + " " + fmt(std::stod(cols[4])) + "; ";
        }
        pass = pass && bump_rows == 6;
        return std::pair{pass, detail + "3h = " + fmt(3.0 * 2.0 / 511.0) + ", " + fmt(seconds_since(t0)) + " s"};
    });

    criterion(10, "solver descent and limit consistency", [&] {
        const auto t0 = Clock::now();
        const std::size_t n = 4096;
        auto f = GridField::over_interval(0.0, 0.25, n);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> noise(-0.05, 0.05);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = (i >= n / 2 ? 1.0 : 0.0) + noise(rng);
        SolveConfig cfg;
        cfg.lambda = 50.0;
        const auto trace = alternate(f, cfg, q, w);
        const auto& last = trace.snapshots.back();
        const auto jumps = approximate_jumps(last.u, default_jump_threshold(last.u));
        const double increase = trace.worst_increase();
        bool pass = increase <= 1e-10 && jumps.facets.size() == 1 && last.epsilon == 1e-3;
        std::string detail = "worst increase " + fmt(increase) + ", jumps " + std::to_string(jumps.facets.size());
        if (jumps.facets.size() == 1) {
            const double r = jumps.facets[0].size;
            const auto i = static_cast<std::size_t>(std::floor(jumps.facets[0].a.x / f.spacing()));
            const double face = std::min(last.v[i], last.v[i + 1]);
            const double target = 1.0 / (1.0 + r);
            const double rel = std::abs(face - target) / target;
            pass = pass && rel <= 0.1;
            detail += ", r = " + fmt(r) + ", face v " + fmt(face) + " vs 1/(1+r) = " + fmt(target) + " (rel " +
                      fmt(rel) + ")";
        }
        return std::pair{pass, detail + ", " + fmt(seconds_since(t0)) + " s"};
    });

    criterion(11, "oracle equivalences", [&] {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        bool exact = true;
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t na = trial < 3 ? 12000 : 20 + rng() % 400;
            const std::size_t nb = trial < 3 ? 1500 : 20 + rng() % 400;
            std::vector<Point2> a(na), b(nb);
            const double shift = unit(rng);
            for (auto& p : a)
                p = {unit(rng), unit(rng)};
            for (auto& p : b)
                p = {unit(rng) + shift, 2.0 * unit(rng)};
            exact = exact && hausdorff(a, b) == brute_hausdorff(a, b);
        }

        double prox = 0.0;
        auto sig = GridField::over_interval(0.0, 1.0, 200);
        std::normal_distribution<double> g(0.0, 0.2);
        for (std::size_t i = 0; i < sig.size(); ++i)
            sig[i] = (i >= 100 ? 1.0 : 0.0) + (i >= 150 ? -0.5 : 0.0) + g(rng);
        const auto ones = sig.map([](double) { return 1.0; });
        const std::vector<double> fv(sig.values().begin(), sig.values().end());
        for (double lambda : {100.0, 1000.0, 5000.0}) {
            const auto res = minimize_u(ones, sig, lambda, w, {});
            const auto ref = tv_prox_1d(fv, 1.0 / (lambda * sig.spacing()));
            for (std::size_t i = 0; i < sig.size(); ++i)
                prox = std::max(prox, std::abs(res.u[i] - ref[i]));
        }

        double sd = 0.0;
        const std::vector<Segment> fixtures{
            {{0.2, 0.5}, {0.8, 0.5}}, {{0.1, 0.2}, {0.7, 0.9}}, {{0.5, 0.1}, {0.5, 0.8}}};
        for (const auto& s : fixtures) {
            const GraphCurve curve(s);
            const int samples = 2000000;
            for (int k = 0; k < 12; ++k) {
                const Point2 z{unit(rng), unit(rng)};
                double best = std::numeric_limits<double>::infinity();
                for (int m = 0; m <= samples; ++m) {
                    const Point2 p = s.a + (double(m) / samples) * (s.b - s.a);
                    best = std::min(best, std::hypot(z.x - p.x, z.y - p.y));
                }
                sd = std::max(sd, std::abs(std::abs(curve.signed_distance(z)) - best));
            }
        }
        const bool pass = exact && prox <= 1e-4 && sd <= 1e-6;
        return std::pair{pass, std::string("hausdorff exact on 100 pairs: ") + (exact ? "yes" : "no") +
                                   "; minimize_u vs taut string " + fmt(prox) + "; signed distance vs dense " + fmt(sd)};
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
