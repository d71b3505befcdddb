#include "kwc/commands.hpp"

#include "kwc/energy.hpp"
#include "kwc/errors.hpp"
#include "kwc/profile.hpp"
#include "kwc/setvalued.hpp"
#include "kwc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace kwc {

namespace {

namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void say(const CommandContext& ctx, const std::string& line)
{
    if (ctx.log)
        *ctx.log << line << '\n';
}

std::string fmt(double x, int digits = 8)
{
    std::ostringstream os;
    os << std::setprecision(digits) << x;
    return os.str();
}

std::ofstream open_output(const CommandContext& ctx, const std::string& name)
{
    std::ofstream os(fs::path(ctx.out_dir) / name);
    if (!os)
        throw ConfigError("cannot write " + (fs::path(ctx.out_dir) / name).string());
    os << std::setprecision(17);
    return os;
}

std::ofstream open_csv(const CommandContext& ctx, const std::string& name, const std::string& command)
{
    auto os = open_output(ctx, name);
    write_metadata(os, ctx.config, command, ctx.seed);
    return os;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count)
{
    if (!(lo > 0.0 && hi >= lo) || count == 0)
        throw ConfigError("config: log grid needs 0 < min <= max and count >= 1");
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k)
        out[k] = count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(count - 1));
    return out;
}

bool default_pair(const PotentialSpec& pot, const WeightSpec& weight)
{
    return pot.kind() == PotentialSpec::Kind::quadratic && weight.kind() == WeightSpec::Kind::quadratic;
}

std::string join_sizes(const std::vector<double>& sizes)
{
    std::ostringstream os;
    os << std::setprecision(10);
    for (std::size_t k = 0; k < sizes.size(); ++k)
        os << (k ? ";" : "") << sizes[k];
    return sizes.empty() ? "-" : os.str();
}

// ---------------------------------------------------------------------------
// gamma-check

struct LimitFixture {
    std::optional<SlicedLimit1D> line;
    std::optional<Limit2D> plane;
};

std::vector<double> same_length(const Config& cfg, const std::string& key, std::size_t n)
{
    auto v = cfg.numbers(key);
    if (v.size() != n)
        throw ConfigError("config: " + key + " needs " + std::to_string(n) + " entries");
    return v;
}

LimitFixture read_limit(const Config& cfg)
{
    LimitFixture fx;
    const auto dims = cfg.count("limit.dims", 1);
    if (dims == 1) {
        std::vector<Jump1D> jumps;
        if (cfg.has("limit.at")) {
            const auto at = cfg.numbers("limit.at");
            const auto xm = same_length(cfg, "limit.xi_minus", at.size());
            const auto xp = same_length(cfg, "limit.xi_plus", at.size());
            for (std::size_t k = 0; k < at.size(); ++k)
                jumps.push_back({at[k], xm[k], xp[k]});
        }
        fx.line.emplace(cfg.number("limit.lo", 0.0), cfg.number("limit.hi", 1.0), std::move(jumps));
    } else if (dims == 2) {
        if (cfg.has("limit.file")) {
            fx.plane.emplace(Limit2D::load(cfg.resolve(cfg.text("limit.file"))));
        } else {
            const auto box = cfg.numbers("limit.domain", {0.0, 0.0, 1.0, 1.0});
            if (box.size() != 4)
                throw ConfigError("config: limit.domain needs x0, y0, x1, y1");
            std::vector<Segment> segs;
            if (cfg.has("limit.ax")) {
                const auto ax = cfg.numbers("limit.ax");
                const std::size_t m = ax.size();
                const auto ay = same_length(cfg, "limit.ay", m), bx = same_length(cfg, "limit.bx", m),
                           by = same_length(cfg, "limit.by", m), xm = same_length(cfg, "limit.xi_minus", m),
                           xp = same_length(cfg, "limit.xi_plus", m);
                for (std::size_t k = 0; k < m; ++k)
                    segs.push_back({{ax[k], ay[k]}, {bx[k], by[k]}, xm[k], xp[k]});
            }
            fx.plane.emplace(Rect{{box[0], box[1]}, {box[2], box[3]}}, std::move(segs));
        }
    } else {
        throw ConfigError("config: limit.dims must be 1 or 2");
    }
    return fx;
}

GridField recovery_grid(const Config& cfg, const LimitFixture& fx, double eps)
{
    if (fx.line) {
        const double lo = fx.line->t_lo(), hi = fx.line->t_hi();
        std::size_t n = cfg.count("grid.nodes", 0);
        if (n == 0) {
            const double ratio = cfg.number("grid.h_over_eps", 50.0);
            if (!(ratio > 0.0))
                throw ConfigError("config: grid.h_over_eps must be positive");
            n = static_cast<std::size_t>(std::ceil((hi - lo) * ratio / eps)) + 1;
        }
        if (n < 2 || n > 100000000)
            throw ConfigError("config: 1D grid needs between 2 and 1e8 nodes");
        return GridField::over_interval(lo, hi, n);
    }
    const auto& box = fx.plane->domain();
    const std::size_t n = cfg.count("grid.nodes", 1024);
    if (n < 2 || n > 8192)
        throw ConfigError("config: 2D grid needs between 2 and 8192 nodes per side");
    return GridField::over_rectangle(box.lo, box.hi, n);
}

// ---------------------------------------------------------------------------
// metric-demo helpers

PixelMask mask_of(const GridField& grid, const std::function<bool(Point2)>& inside)
{
    PixelMask m(grid.shape()[0], grid.shape()[1]);
    for (std::size_t i = 0; i < m.nx; ++i)
        for (std::size_t j = 0; j < m.ny; ++j)
            if (inside(grid.node(i, j)))
                m.set(i, j);
    return m;
}

void save_mask(const CommandContext& ctx, const std::string& name, const PixelMask& m)
{
    auto os = open_output(ctx, name);
    m.write_pgm(os);
}

// Graph of a radial set-valued function on the slice {(t, s)}: a vertical
// column [0, 1] where the point is in the set, the value 1 elsewhere.
SampledGraph annulus_slice(double s, double h, const std::function<bool(double)>& in_set)
{
    SampledGraph g;
    g.resolution = h;
    const double half = std::sqrt(std::max(0.0, 1.0 - s * s));
    const auto steps = static_cast<std::size_t>(std::floor(2.0 * half / h));
    const auto levels = static_cast<std::size_t>(std::ceil(1.0 / h));
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = -half + h * static_cast<double>(k);
        if (in_set(std::hypot(t, s))) {
            for (std::size_t q = 0; q <= levels; ++q)
                g.points.push_back({t, std::min(1.0, h * static_cast<double>(q))});
        } else {
            g.points.push_back({t, 1.0});
        }
    }
    return g;
}

std::string tag(double x)
{
    std::ostringstream os;
    os << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// staircase helpers

struct Structure {
    std::vector<double> sizes;
    double tv = 0.0;
    double jump_cost = 0.0;
    double fidelity = 0.0;
};

Structure describe(const GridField& u, const GridField& f, double lambda, const JumpCostTable& table, double tol)
{
    Structure s;
    for (std::size_t i = 1; i < u.size(); ++i) {
        const double d = std::abs(u[i] - u[i - 1]);
        s.tv += d;
        if (d > tol) {
            s.sizes.push_back(d);
            s.jump_cost += table.evaluate(d).value;
        }
    }
    s.fidelity = fidelity(u, f, lambda);
    return s;
}

// ---------------------------------------------------------------------------
// denoise helpers

// Smaller of the two node values of v across the face a facet sits on.
double facet_face_value(const GridField& v, const JumpFacet& facet)
{
    const double h = v.spacing();
    const Point2 lo = v.lower();
    auto clampi = [](double x, std::size_t n) {
        return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(n - 1)));
    };
    if (v.dims() == 1) {
        const std::size_t n = v.size();
        const std::size_t i = clampi(std::floor((facet.a.x - lo.x) / h), n - 1);
        return std::min(v[i], v[i + 1]);
    }
    const auto nx = v.shape()[0], ny = v.shape()[1];
    const Point2 mid = 0.5 * (facet.a + facet.b);
    if (facet.a.x == facet.b.x) {
        const std::size_t i = clampi(std::floor((facet.a.x - lo.x) / h), nx - 1);
        const std::size_t j = clampi(std::round((mid.y - lo.y) / h), ny);
        return std::min(v.at(i, j), v.at(i + 1, j));
    }
    const std::size_t j = clampi(std::floor((facet.a.y - lo.y) / h), ny - 1);
    const std::size_t i = clampi(std::round((mid.x - lo.x) / h), nx);
    return std::min(v.at(i, j), v.at(i, j + 1));
}

} // namespace

// ---------------------------------------------------------------------------

GridField staircase_signal(std::size_t nodes, std::size_t steps, double height, std::size_t riser_nodes)
{
    const std::size_t inner = steps > 0 ? (steps - 1) * riser_nodes : 0;
    if (nodes < 2 || inner + 2 > nodes)
        throw InvalidArgument("staircase_signal: not enough nodes for the steps");
    auto f = GridField::over_interval(0.0, 1.0, nodes);
    if (steps == 0)
        return f;
    const std::size_t left = (nodes - inner) / 2;
    for (std::size_t i = 0; i < nodes; ++i) {
        if (i < left)
            f[i] = 0.0;
        else if (i < left + inner)
            f[i] = height * static_cast<double>(1 + (i - left) / riser_nodes);
        else
            f[i] = height * static_cast<double>(steps);
    }
    return f;
}

bool in_thick_cantor(double r, std::size_t depth)
{
    if (!(r >= 0.0 && r <= 1.0))
        return false;
    for (std::size_t n = 1; n <= depth; ++n) {
        const double scale = std::ldexp(1.0, static_cast<int>(n));
        const double half = std::ldexp(1.0, -static_cast<int>(2 * n + 1));
        const double a = std::round(r * scale);
        if (a >= 1.0 && a < scale && std::abs(r - a / scale) < half)
            return false;
    }
    return true;
}

CommandContext make_context(Config cfg, const std::string& out_override, const std::uint64_t* seed_override,
                            std::ostream* log)
{
    CommandContext ctx;
    ctx.out_dir = !out_override.empty() ? out_override : cfg.text("experiment.out", ".");
    ctx.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(cfg.count("experiment.seed", 0));
    ctx.config = std::move(cfg);
    ctx.log = log;
    return ctx;
}

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"gamma-check", "sigma-table", "staircase",
                                                "metric-demo", "elpf-check",  "denoise"};
    return names;
}

int run_command(const std::string& name, const CommandContext& ctx)
{
    static const std::map<std::string, int (*)(const CommandContext&)> table{
        {"gamma-check", cmd_gamma_check}, {"sigma-table", cmd_sigma_table}, {"staircase", cmd_staircase},
        {"metric-demo", cmd_metric_demo}, {"elpf-check", cmd_elpf_check},   {"denoise", cmd_denoise},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
        std::cerr << "kwc: unknown command " << name << '\n';
        return kExitConfig;
    }
    try {
        std::error_code ec;
        fs::create_directories(ctx.out_dir, ec);
        if (ec || !fs::is_directory(ctx.out_dir))
            throw ConfigError("output directory " + ctx.out_dir + " is not writable");
        return it->second(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "kwc " << name << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "kwc " << name << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const PropertyViolation& e) {
        std::cerr << "kwc " << name << ": " << e.what() << '\n';
        return kExitViolation;
    } catch (const std::exception& e) {
        std::cerr << "kwc " << name << ": " << e.what() << '\n';
        return kExitError;
    }
}

// ---------------------------------------------------------------------------

int cmd_gamma_check(const CommandContext& ctx)
{
    const auto& cfg = ctx.config;
    const auto pot = potential_from(cfg);
    const auto weight = weight_from(cfg);
    const auto fx = read_limit(cfg);
    const auto schedule = cfg.numbers("schedule.eps");
    const double bound = cfg.number("gate.max_rel_error", 0.05);
    const double limit = fx.line ? e0_sMM(*fx.line, pot) : e0_sMM(*fx.plane, pot);

    auto os = open_csv(ctx, "gamma_check.csv", "gamma-check");
    os << "epsilon,h,nodes,e_sMM_of_recovery,e0_limit,rel_error\n";
    std::optional<double> final_error;
    for (double eps : schedule) {
        if (!(eps > 0.0))
            throw ConfigError("config: schedule.eps entries must be positive");
        const auto grid = recovery_grid(cfg, fx, eps);
        try {
            const auto v = fx.line ? recovery_field(eps, *fx.line, weight, pot, grid)
                                   : recovery_field(eps, *fx.plane, weight, pot, grid);
            const double e = e_sMM(v, eps, pot).total;
            const double rel = limit > 0.0 ? std::abs(e - limit) / limit : std::abs(e);
            os << eps << ',' << grid.spacing() << ',' << grid.size() << ',' << e << ',' << limit << ',' << rel << '\n';
            say(ctx, "eps " + fmt(eps) + ": energy " + fmt(e) + ", limit " + fmt(limit) + ", rel_error " + fmt(rel));
            final_error = rel;
        } catch (const EpsilonTooLarge& e) {
            os << "# skipped epsilon=" << eps << ": " << e.what() << '\n';
            say(ctx, "eps " + fmt(eps) + ": skipped (" + e.what() + ")");
        }
    }
    if (!final_error) {
        say(ctx, "FAIL: every epsilon was skipped");
        return kExitViolation;
    }
    const bool ok = *final_error <= bound;
    say(ctx, std::string(ok ? "PASS" : "FAIL") + ": final rel_error " + fmt(*final_error) + " (bound " + fmt(bound) + ")");
    return ok ? kExitPass : kExitViolation;
}

int cmd_sigma_table(const CommandContext& ctx)
{
    const auto& cfg = ctx.config;
    const auto pot = potential_from(cfg);
    const auto weight = weight_from(cfg);
    std::vector<double> rs = cfg.has("sigma.r")
                                 ? cfg.numbers("sigma.r")
                                 : log_grid(cfg.number("sigma.r_min", 1e-2), cfg.number("sigma.r_max", 1e2),
                                            cfg.count("sigma.count", 41));
    if (cfg.count("sigma.include_zero", 1) != 0)
        rs.push_back(0.0);
    std::sort(rs.begin(), rs.end());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    if (rs.front() < 0.0)
        throw ConfigError("config: sigma.r entries must be non-negative");

    const bool closed = default_pair(pot, weight);
    const double bound = cfg.number("gate.max_diff", 1e-6);
    const JumpCostTable table(weight, pot);

    auto os = open_csv(ctx, "sigma_table.csv", "sigma-table");
    os << (closed ? "r,sigma_numeric,sigma_closed_form,diff\n" : "r,sigma_numeric\n");
    std::vector<double> sig;
    double worst = 0.0;
    for (double r : rs) {
        const double s = r == 0.0 ? 0.0 : table.evaluate(r).value;
        sig.push_back(s);
        os << r << ',' << s;
        if (closed) {
            const double exact = r / (1.0 + r);
            worst = std::max(worst, std::abs(s - exact));
            os << ',' << exact << ',' << std::abs(s - exact);
        }
        os << '\n';
    }
    // Concavity: no interior point below the chord of its neighbours.
    double dent = 0.0;
    for (std::size_t k = 1; k + 1 < rs.size(); ++k) {
        const double th = (rs[k] - rs[k - 1]) / (rs[k + 1] - rs[k - 1]);
        dent = std::max(dent, (1.0 - th) * sig[k - 1] + th * sig[k + 1] - sig[k]);
    }
    say(ctx, "rows " + std::to_string(rs.size()) + ", largest chord excess " + fmt(dent));
    bool ok = dent <= 1e-9;
    if (closed) {
        say(ctx, "max |sigma - r/(1+r)| = " + fmt(worst) + " (bound " + fmt(bound) + ")");
        ok = ok && worst <= bound;
    }
    say(ctx, ok ? "PASS" : "FAIL");
    return ok ? kExitPass : kExitViolation;
}

int cmd_staircase(const CommandContext& ctx)
{
    const auto& cfg = ctx.config;
    const auto pot = potential_from(cfg);
    const auto weight = weight_from(cfg);
    const std::size_t nodes = cfg.count("staircase.nodes", 32);
    const std::size_t steps = cfg.count("staircase.steps", 3);
    const double height = cfg.number("staircase.step_height", 1.0);
    const std::size_t riser = cfg.count("staircase.riser_nodes", 1);
    const std::size_t levels = cfg.count("staircase.levels", 16);
    const double noise = cfg.number("staircase.noise", 0.0);
    if (!(height > 0.0) || riser == 0 || !(noise >= 0.0))
        throw ConfigError("config: staircase needs step_height > 0, riser_nodes >= 1, noise >= 0");

    const auto clean = staircase_signal(nodes, steps, height, riser);
    auto f = clean;
    if (noise > 0.0) {
        std::mt19937_64 rng(ctx.seed);
        std::uniform_real_distribution<double> jitter(-noise, noise);
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] += jitter(rng);
    }
    const JumpCostTable table(weight, pot);

    // The range of lambda on which the oracle answers with a single jump.
    std::optional<std::pair<double, double>> window;
    if (steps >= 2) {
        for (double lam : log_grid(cfg.number("staircase.lambda_min", 0.1), cfg.number("staircase.lambda_max", 1e3),
                                   cfg.count("staircase.lambda_count", 41))) {
            if (minimize_tvkwc_1d(f, lam, pot, weight, levels).jumps != 1)
                continue;
            window = window ? std::pair{window->first, lam} : std::pair{lam, lam};
        }
    }
    double lambda = cfg.number("staircase.lambda", 100.0);
    if (!cfg.has("staircase.lambda") && window)
        lambda = std::sqrt(window->first * window->second);
    if (!(lambda > 0.0))
        throw ConfigError("config: staircase.lambda must be positive");

    const double h = f.spacing();
    const double tol = 1e-9 * std::max(1.0, height * static_cast<double>(steps));
    const auto dp = minimize_tvkwc_1d(f, lambda, pot, weight, levels);
    const std::vector<double> fv(f.values().begin(), f.values().end());
    const auto taut = tv_prox_1d(fv, 1.0 / (lambda * h));
    auto u_tv = f;
    std::copy(taut.begin(), taut.end(), u_tv.values().begin());

    // Reference structures on the clean staircase: every step kept, or one merged jump.
    auto merged = clean;
    const double top = height * static_cast<double>(steps);
    for (std::size_t i = 0; i < merged.size(); ++i)
        merged[i] = merged[i] > 0.5 * top ? top : 0.0;

    std::vector<std::pair<std::string, GridField>> rows{
        {"tvkwc_oracle", dp.u}, {"tv_taut_string", u_tv}, {"per_step", clean}, {"merged", merged}};
    std::optional<TvkwcSolution> exhaustive;
    if (cfg.count("staircase.verify", 1) != 0) {
        exhaustive = search_tvkwc_1d(f, lambda, pot, weight, levels);
        rows.push_back({"exhaustive_search", exhaustive->u});
    }

    auto os = open_csv(ctx, "staircase.csv", "staircase");
    if (window)
        os << "# one-jump lambda window: [" << window->first << ", " << window->second << "]\n";
    os << "# lambda: " << lambda << '\n';
    os << "structure,lambda,jumps,jump_sizes,tv,tvkwc_jump_cost,fidelity,tv_objective,tvkwc_objective\n";
    std::map<std::string, Structure> seen;
    for (const auto& [name, u] : rows) {
        const auto s = describe(u, f, lambda, table, tol);
        seen[name] = s;
        os << name << ',' << lambda << ',' << s.sizes.size() << ',' << join_sizes(s.sizes) << ',' << s.tv << ','
           << s.jump_cost << ',' << s.fidelity << ',' << s.tv + s.fidelity << ',' << s.jump_cost + s.fidelity << '\n';
        say(ctx, name + ": jumps " + std::to_string(s.sizes.size()) + " [" + join_sizes(s.sizes) + "], jump cost " +
                     fmt(s.jump_cost) + ", tv " + fmt(s.tv));
    }

    auto sig = open_csv(ctx, "staircase_signal.csv", "staircase");
    sig << "x,f,u_tvkwc,u_tv\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        sig << f.coord(0, i) << ',' << f[i] << ',' << dp.u[i] << ',' << u_tv[i] << '\n';

    bool ok = true;
    if (steps >= 2) {
        const auto& per = seen["per_step"];
        const auto& one = seen["merged"];
        const bool prefers = one.jump_cost < per.jump_cost;
        const bool tv_flat = std::abs(one.tv - per.tv) <= tol;
        say(ctx, "merged jump cost " + fmt(one.jump_cost) + " vs per-step " + fmt(per.jump_cost) +
                     (prefers ? " (merged cheaper)" : " (merged NOT cheaper)"));
        say(ctx, "tv merged " + fmt(one.tv) + " vs per-step " + fmt(per.tv));
        ok = prefers && tv_flat;
    }
    if (exhaustive) {
        const double gap = std::abs(exhaustive->objective - dp.objective);
        const bool same = gap <= 1e-12 * std::max(1.0, std::abs(dp.objective));
        say(ctx, "oracle objective " + fmt(dp.objective, 15) + ", exhaustive " + fmt(exhaustive->objective, 15));
        ok = ok && same;
    }
    say(ctx, ok ? "PASS" : "FAIL");
    return ok ? kExitPass : kExitViolation;
}

int cmd_metric_demo(const CommandContext& ctx)
{
    const auto& cfg = ctx.config;
    const std::size_t n = cfg.count("metric.pixels", 512);
    if (n < 8 || n > 4096)
        throw ConfigError("config: metric.pixels must be in [8, 4096]");
    const auto bump_eps = cfg.numbers("metric.eps", {0.2, 0.1, 0.05});
    const auto offsets = cfg.numbers("metric.slice_offsets", {0.25, 0.5, 0.75});
    const auto dirs = DirectionSet::golden_angle(cfg.count("metric.directions", 8));
    const std::size_t depth = cfg.count("metric.cantor_depth", 3);
    const auto cantor_eps = cfg.numbers("metric.cantor_eps", {0.1, 0.05, 0.02});
    const std::size_t cantor_slices = cfg.count("metric.cantor_slices", 8);
    const double eh_lo = cfg.number("gate.eh_min", 0.9), eh_hi = cfg.number("gate.eh_max", 1.1);
    const double slice_factor = cfg.number("gate.slice_pixels", 3.0);
    const double cantor_pixels = cfg.number("gate.cantor_pixels", 2.0);

    const auto grid = GridField::over_rectangle({-1.0, -1.0}, {1.0, 1.0}, n);
    const double h = grid.spacing();
    auto os = open_csv(ctx, "metric_demo.csv", "metric-demo");
    os << "fixture,epsilon,offset,quantity,value,bound,pass\n";
    bool ok = true;
    auto row = [&](const std::string& fixture, double eps, double offset, const std::string& what, double value,
                   double bound, bool pass) {
        os << fixture << ',' << eps << ',' << offset << ',' << what << ',' << value << ',' << bound << ','
           << (pass ? 1 : 0) << '\n';
        ok = ok && pass;
    };

    // Radial bump (1 - |z| / eps)_+ against the zero function.
    const auto zero = grid.map([](double) { return 0.0; });
    const auto flat = slices_of(zero);
    const std::size_t mx = static_cast<std::size_t>(std::ceil(std::sqrt(2.0) / h)) + 2;
    const std::size_t my = static_cast<std::size_t>(std::ceil(1.0 / h)) + 2;
    const Point2 corner{-0.5 * h, -0.5 * h};
    for (double eps : bump_eps) {
        if (!(eps > 0.0))
            throw ConfigError("config: metric.eps entries must be positive");
        auto v = grid;
        std::vector<Point2> graph, base;
        graph.reserve(grid.size());
        base.reserve(grid.size());
        for (std::size_t i = 0; i < grid.shape()[0]; ++i)
            for (std::size_t j = 0; j < grid.shape()[1]; ++j) {
                const double rho = norm(grid.node(i, j));
                v.at(i, j) = std::max(0.0, 1.0 - rho / eps);
                graph.push_back({rho, v.at(i, j)});
                base.push_back({rho, 0.0});
            }
        // The graphs are rotation invariant; compare their meridian sections.
        const auto ma = rasterize(graph, corner, h, mx, my);
        const auto mb = rasterize(base, corner, h, mx, my);
        save_mask(ctx, "bump_meridian_eps" + tag(eps) + ".pgm", ma);
        const double eh = essential_hausdorff(ma, mb, h);
        row("radial_bump", eps, kNaN, "essential_hausdorff", eh, eh_hi, eh >= eh_lo && eh <= eh_hi);

        const auto bump = slices_of(v);
        double worst = 0.0;
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            const Point2 nu = dirs[k];
            const Point2 perp{-nu.y, nu.x};
            for (double s : offsets)
                for (double sign : {-1.0, 1.0}) {
                    const Point2 x = (sign * s) * perp;
                    worst = std::max(worst, hausdorff(bump->slice_graph(nu, x, h), flat->slice_graph(nu, x, h)));
                }
        }
        row("radial_bump", eps, kNaN, "max_offcenter_slice_distance", worst, slice_factor * h,
            worst <= slice_factor * h);
        say(ctx, "radial bump eps " + fmt(eps) + ": essential Hausdorff " + fmt(eh) + ", max off-center slice " +
                     fmt(worst) + " (3h = " + fmt(slice_factor * h) + ")");
    }

    // Thick Cantor annuli K and their inward shifts K_eps.
    auto in_k = [&](double r) { return r < 1.0 && in_thick_cantor(r, depth); };
    const auto k_mask = mask_of(grid, [&](Point2 z) { return in_k(norm(z)); });
    save_mask(ctx, "cantor_K.pgm", k_mask);
    std::mt19937_64 rng(ctx.seed);
    std::uniform_real_distribution<double> pick(2.0 * h, 1.0 - 2.0 * h);
    std::vector<double> slice_at;
    for (std::size_t tries = 0; slice_at.size() < cantor_slices && tries < 100000; ++tries) {
        const double s = pick(rng);
        if (in_thick_cantor(s, depth))
            slice_at.push_back(s);
    }
    for (double eps : cantor_eps) {
        if (!(eps > 0.0 && eps < 1.0))
            throw ConfigError("config: metric.cantor_eps entries must be in (0, 1)");
        auto in_keps = [&](double r) { return r + eps < 1.0 && in_thick_cantor(r + eps, depth); };
        const auto ke_mask = mask_of(grid, [&](Point2 z) { return in_keps(norm(z)); });
        save_mask(ctx, "cantor_Keps" + tag(eps) + ".pgm", ke_mask);
        const double hd = essential_hausdorff(ke_mask, k_mask, h);
        const double bound = eps + cantor_pixels * h;
        row("cantor", eps, kNaN, "hausdorff_Keps_K", hd, bound, hd <= bound);

        double smallest = std::numeric_limits<double>::infinity();
        for (double s : slice_at) {
            const double d = hausdorff(annulus_slice(s, h, in_keps), annulus_slice(s, h, in_k));
            smallest = std::min(smallest, d);
            row("cantor_slice", eps, s, "slice_distance", d, kNaN, true);
        }
        say(ctx, "cantor eps " + fmt(eps) + ": Hausdorff " + fmt(hd) + " (bound " + fmt(bound) +
                     "), smallest slice distance at |x| in G " + fmt(smallest) + " = " + fmt(smallest / h) + " h");
    }
    say(ctx, ok ? "PASS" : "FAIL");
    return ok ? kExitPass : kExitViolation;
}

int cmd_elpf_check(const CommandContext& ctx)
{
    const auto& cfg = ctx.config;
    const auto pot = potential_from(cfg);
    const auto cs = cfg.numbers("elpf.c", {-1.0, 0.0, 0.5, 0.9, 1.0});
    const auto deltas = log_grid(cfg.number("elpf.delta_min", 1e-3), cfg.number("elpf.delta_max", 1.0),
                                 cfg.count("elpf.delta_count", 20));
    const double slack = cfg.number("elpf.slack", 1e-8);
    const auto report = check_elpf(pot, cs, deltas, slack);

    auto os = open_csv(ctx, "elpf.csv", "elpf-check");
    os << "c,delta,lhs,rhs,ratio,pass\n";
    for (const auto& r : report.rows) {
        const double ratio = r.rhs > 0.0 ? r.lhs / r.rhs : (r.lhs == 0.0 ? 0.0 : kNaN);
        os << r.c << ',' << r.delta << ',' << r.lhs << ',' << r.rhs << ',' << ratio << ','
           << (r.lhs <= r.rhs + slack ? 1 : 0) << '\n';
    }
    say(ctx, "potential " + pot.name() + ": " + std::to_string(report.rows.size()) + " rows, max ratio " +
                 fmt(report.max_ratio) + ", worst excess " + fmt(report.worst_excess));
    say(ctx, report.passed ? "PASS" : "FAIL");
    return report.passed ? kExitPass : kExitViolation;
}

int cmd_denoise(const CommandContext& ctx)
{
    const auto& cfg = ctx.config;
    const auto pot = potential_from(cfg);
    const auto weight = weight_from(cfg);
    GridField f;
    try {
        f = GridField::load(cfg.resolve(cfg.text("denoise.input")));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: denoise.input: ") + e.what());
    }

    SolveConfig sc;
    sc.eps_schedule = cfg.numbers("denoise.eps", sc.eps_schedule);
    sc.lambda = cfg.number("denoise.lambda", sc.lambda);
    sc.outer_iters = cfg.count("denoise.outer_iters", sc.outer_iters);
    sc.jump_threshold = cfg.number("denoise.jump_threshold", 0.0);
    sc.steps.iters = cfg.count("denoise.pd_iters", sc.steps.iters);
    sc.steps.tol = cfg.number("denoise.pd_tol", sc.steps.tol);
    sc.v_min = cfg.number("denoise.v_min", sc.v_min);
    sc.v_max = cfg.number("denoise.v_max", sc.v_max);
    sc.validate();

    SolveTrace trace;
    try {
        trace = alternate(f, sc, pot, weight);
    } catch (const SolveError& e) {
        auto os = open_csv(ctx, "trace.csv", "denoise");
        e.trace().write_csv(os);
        throw;
    }
    {
        auto os = open_csv(ctx, "trace.csv", "denoise");
        trace.write_csv(os);
    }
    const auto& last = trace.snapshots.back();
    const double eps = last.epsilon;
    const auto& u = last.u;
    const auto& v = last.v;
    {
        auto os = open_output(ctx, "u.txt");
        u.write(os);
        auto ov = open_output(ctx, "v.txt");
        v.write(ov);
    }

    const double threshold = sc.jump_threshold > 0.0 ? sc.jump_threshold : default_jump_threshold(u);
    const auto jumps = approximate_jumps(u, threshold);
    std::vector<double> face_v;
    for (const auto& facet : jumps.facets)
        face_v.push_back(facet_face_value(v, facet));
    {
        auto os = open_csv(ctx, "jumps.csv", "denoise");
        os << (f.dims() == 1 ? "t,size,u_minus,u_plus,face_v\n" : "ax,ay,bx,by,size,u_minus,u_plus,face_v\n");
        for (std::size_t k = 0; k < jumps.facets.size(); ++k) {
            const auto& j = jumps.facets[k];
            if (f.dims() == 1)
                os << j.a.x;
            else
                os << j.a.x << ',' << j.a.y << ',' << j.b.x << ',' << j.b.y;
            os << ',' << j.size << ',' << j.u_minus << ',' << j.u_plus << ',' << face_v[k] << '\n';
        }
    }

    // Distance between the graph of v and the limit the detected jumps imply.
    const double h = f.spacing();
    const auto field = slices_of(v);
    auto dist = open_csv(ctx, "distances.csv", "denoise");
    dist << "direction,nu_x,nu_y,d_nu,degenerate\n";
    double worst_d = 0.0;
    if (f.dims() == 1) {
        std::vector<Jump1D> js;
        for (std::size_t k = 0; k < jumps.facets.size(); ++k)
            js.push_back({jumps.facets[k].a.x, std::min(face_v[k], 1.0), 1.0});
        const SlicedLimit1D implied(f.lower().x, f.upper().x, std::move(js));
        const auto d = d_nu(*field, *slices_of(implied), {1.0, 0.0}, {}, h);
        dist << 0 << ',' << 1 << ',' << 0 << ',' << d.value << ',' << d.degenerate << '\n';
        worst_d = d.value;
    } else {
        std::vector<Segment> segs;
        for (std::size_t k = 0; k < jumps.facets.size(); ++k) {
            // Neighbouring faces share endpoints; pull them apart slightly.
            const auto& j = jumps.facets[k];
            const Point2 d = j.b - j.a;
            const double shrink = 1e-6 * h / std::max(norm(d), 1e-300);
            segs.push_back({j.a + shrink * d, j.b - shrink * d, std::min(face_v[k], 1.0), 1.0});
        }
        const Limit2D implied(Rect{f.lower(), f.upper()}, std::move(segs));
        const auto target = slices_of(implied);
        const auto dirs = DirectionSet::golden_angle(cfg.count("denoise.directions", 8));
        const std::size_t slices = cfg.count("denoise.slices", 64);
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            const auto d = d_nu(*field, *target, dirs[k], midpoint_plan(implied.domain(), dirs[k], slices), h);
            dist << k + 1 << ',' << dirs[k].x << ',' << dirs[k].y << ',' << d.value << ',' << d.degenerate << '\n';
            worst_d = std::max(worst_d, d.value);
        }
    }

    auto sum = open_csv(ctx, "summary.csv", "denoise");
    sum << "quantity,value\n";
    sum << "final_epsilon," << eps << '\n';
    sum << "jumps," << jumps.facets.size() << '\n';
    sum << "worst_energy_increase," << trace.worst_increase() << '\n';
    sum << "max_d_nu," << worst_d << '\n';
    const double max_increase = cfg.number("gate.max_increase", 1e-10);
    bool ok = trace.worst_increase() <= max_increase;
    say(ctx, "final eps " + fmt(eps) + ", jumps " + std::to_string(jumps.facets.size()) + ", worst energy increase " +
                 fmt(trace.worst_increase()) + ", max d_nu " + fmt(worst_d));

    if (f.dims() == 1 && jumps.facets.size() == 1) {
        const double r = jumps.facets[0].size;
        const double target = JumpCostTable(weight, pot).evaluate(r).xi_minus;
        const double rel = std::abs(face_v[0] - target) / target;
        const double tol = cfg.number("gate.dip_tolerance", 0.1);
        sum << "jump_size," << r << '\n' << "face_v," << face_v[0] << '\n'
            << "optimal_xi_minus," << target << '\n' << "dip_rel_error," << rel << '\n';
        say(ctx, "jump " + fmt(r) + ": face v " + fmt(face_v[0]) + " vs optimal " + fmt(target) + " (rel " +
                     fmt(rel) + ")");
        ok = ok && rel <= tol;
    }
    if (f.dims() == 2 && !jumps.facets.empty()) {
        // Band {v < level}: reach on either side of the jump set, measured
        // along the facet normals.
        const double level = cfg.number("denoise.band_level", 0.99);
        double ahead = 0.0, behind = 0.0;
        for (std::size_t i = 0; i < v.shape()[0]; ++i)
            for (std::size_t jj = 0; jj < v.shape()[1]; ++jj) {
                if (!(v.at(i, jj) < level))
                    continue;
                const Point2 z = v.node(i, jj);
                double best = std::numeric_limits<double>::infinity(), side = 0.0;
                for (const auto& fc : jumps.facets) {
                    const Point2 mid = 0.5 * (fc.a + fc.b);
                    const double d = norm(z - mid);
                    if (d < best) {
                        best = d;
                        side = fc.a.x == fc.b.x ? z.x - mid.x : z.y - mid.y;
                    }
                }
                (side >= 0.0 ? ahead : behind) = std::max(side >= 0.0 ? ahead : behind, best);
            }
        const double width = ahead + behind;
        const double bound = 7.0 * std::sqrt(eps);
        sum << "band_width," << width << '\n' << "band_bound," << bound << '\n';
        say(ctx, "band width " + fmt(width) + " (7 sqrt(eps) = " + fmt(bound) + ")");
    }
    say(ctx, ok ? "PASS" : "FAIL");
    return ok ? kExitPass : kExitViolation;
}

} // namespace kwc
