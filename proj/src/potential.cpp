#include "kwc/potential.hpp"

#include "kwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace kwc {

namespace {

constexpr double kGoldenRatio = 0.6180339887498949;

std::vector<double> default_sample_grid()
{
    // Symmetric around the well, contains 1 exactly.
    std::vector<double> g;
    for (int i = -1200; i <= 1200; ++i)
        g.push_back(1.0 + i * 0.005);
    return g;
}

// Golden-section search for a minimum of f on [lo, hi].
template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, double tol)
{
    double a = lo, b = hi;
    double c = b - kGoldenRatio * (b - a);
    double d = a + kGoldenRatio * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kGoldenRatio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kGoldenRatio * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

double integrate_sqrt_f(const PotentialSpec& spec, double lo, double hi)
{
    using boost::math::quadrature::gauss_kronrod;
    if (lo == hi)
        return 0.0;
    double err = 0.0;
    auto integrand = [&](double t) { return std::sqrt(std::max(spec(t), 0.0)); };
    const double val = gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 15, 1e-12, &err);
    if (!(err <= 1e-10 * std::max(1.0, std::abs(val))) || !std::isfinite(val))
        throw NumericFailure("quadrature of sqrt(F) did not converge", err);
    return val;
}

} // namespace

PotentialSpec::PotentialSpec(Kind kind, std::string name, Fn f, Fn df)
    : kind_(kind), name_(std::move(name)), f_(std::move(f)), df_(std::move(df))
{
    const auto grid = default_sample_grid();
    flags_ = check_assumptions(*this, grid);
}

PotentialSpec PotentialSpec::quadratic()
{
    return PotentialSpec(
        Kind::quadratic, "quadratic", [](double v) { return (v - 1.0) * (v - 1.0); },
        [](double v) { return 2.0 * (v - 1.0); });
}

PotentialSpec PotentialSpec::quartic()
{
    return PotentialSpec(
        Kind::quartic, "quartic",
        [](double v) { return (v - 1.0) * (v - 1.0) * (v * v + 1.0); },
        [](double v) { return 2.0 * (v - 1.0) * (2.0 * v * v - v + 1.0); });
}

PotentialSpec PotentialSpec::custom(std::string name, Fn f, Fn df)
{
    if (!f)
        throw InvalidArgument("custom potential needs F");
    if (!df) {
        df = [f](double v) {
            const double d = 1e-6 * std::max(1.0, std::abs(v));
            return (f(v + d) - f(v - d)) / (2.0 * d);
        };
    }
    return PotentialSpec(Kind::custom, std::move(name), std::move(f), std::move(df));
}

PotentialSpec PotentialSpec::tabulated(std::vector<double> v, std::vector<double> f)
{
    if (v.size() != f.size() || v.size() < 4)
        throw InvalidArgument("potential table needs at least four (v, F) pairs");
    if (!std::is_sorted(v.begin(), v.end()) || std::adjacent_find(v.begin(), v.end()) != v.end())
        throw InvalidArgument("potential table abscissae must be strictly increasing");
    const double lo = v.front(), hi = v.back();
    const double f_lo = f.front(), f_hi = f.back();
    using Interp = boost::math::interpolators::pchip<std::vector<double>>;
    auto interp = std::make_shared<Interp>(std::move(v), std::move(f));
    Fn eval = [interp, lo, hi, f_lo, f_hi](double x) {
        if (x <= lo)
            return f_lo;
        if (x >= hi)
            return f_hi;
        return (*interp)(x);
    };
    Fn deriv = [interp, lo, hi](double x) {
        if (x <= lo || x >= hi)
            return 0.0;
        return interp->prime(x);
    };
    return PotentialSpec(Kind::tabulated, "table", std::move(eval), std::move(deriv));
}

PotentialSpec PotentialSpec::from_table_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open potential table " + path);
    std::vector<double> v, f;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        double a = 0.0, b = 0.0;
        if (!(ss >> a))
            continue;
        if (!(ss >> b))
            throw InvalidArgument("potential table line needs two columns: " + line);
        v.push_back(a);
        f.push_back(b);
    }
    return tabulated(std::move(v), std::move(f));
}

WeightSpec::WeightSpec(Kind kind, std::string name, Fn a, Fn da, double offset)
    : kind_(kind), name_(std::move(name)), a_(std::move(a)), da_(std::move(da)), offset_(offset)
{
}

WeightSpec WeightSpec::quadratic()
{
    return WeightSpec(
        Kind::quadratic, "quadratic", [](double v) { return v * v; },
        [](double v) { return 2.0 * v; }, 0.0);
}

WeightSpec WeightSpec::shifted(double offset)
{
    if (!(offset >= 0.0))
        throw InvalidArgument("weight offset must be non-negative");
    return WeightSpec(
        Kind::shifted, "shifted", [offset](double v) { return v * v + offset; },
        [](double v) { return 2.0 * v; }, offset);
}

WeightSpec WeightSpec::custom(std::string name, Fn alpha, Fn dalpha)
{
    if (!alpha)
        throw InvalidArgument("custom weight needs alpha");
    return WeightSpec(Kind::custom, std::move(name), std::move(alpha), std::move(dalpha), 0.0);
}

WeightSpec WeightSpec::tabulated(std::vector<double> v, std::vector<double> a)
{
    if (v.size() != a.size() || v.size() < 2)
        throw InvalidArgument("weight table needs at least two (v, alpha) pairs");
    if (!std::is_sorted(v.begin(), v.end()) || std::adjacent_find(v.begin(), v.end()) != v.end())
        throw InvalidArgument("weight table abscissae must be strictly increasing");
    if (std::any_of(a.begin(), a.end(), [](double x) { return !(x >= 0.0); }))
        throw InvalidArgument("weight table values must be non-negative");
    Fn eval = [v = std::move(v), a = std::move(a)](double x) {
        if (x <= v.front())
            return a.front();
        if (x >= v.back())
            return a.back();
        const auto it = std::upper_bound(v.begin(), v.end(), x);
        const auto k = static_cast<std::size_t>(it - v.begin()) - 1;
        const double t = (x - v[k]) / (v[k + 1] - v[k]);
        return (1.0 - t) * a[k] + t * a[k + 1];
    };
    return WeightSpec(Kind::custom, "table", std::move(eval), {}, 0.0);
}

double WeightSpec::deriv(double v) const
{
    if (da_)
        return da_(v);
    const double d = 1e-6 * std::max(1.0, std::abs(v));
    return (a_(v + d) - a_(v - d)) / (2.0 * d);
}

AssumptionReport check_assumptions(const PotentialSpec& spec, std::span<const double> sample_grid)
{
    if (sample_grid.empty())
        throw InvalidArgument("check_assumptions: empty sample grid");
    if (std::find(sample_grid.begin(), sample_grid.end(), 1.0) == sample_grid.end())
        throw InvalidArgument("check_assumptions: sample grid must contain 1");

    AssumptionReport rep;
    rep.f1_ok = true;
    rep.f2prime_ok = true;
    double worst = 0.0;
    double radius = 0.0;
    for (double v : sample_grid)
        radius = std::max(radius, std::abs(v - 1.0));

    double far_min = std::numeric_limits<double>::infinity();
    for (double v : sample_grid) {
        const double f = spec(v);
        if (!std::isfinite(f)) {
            rep.f1_ok = false;
            worst = std::numeric_limits<double>::infinity();
            continue;
        }
        if (v == 1.0) {
            if (f != 0.0) {
                rep.f1_ok = false;
                worst = std::max(worst, std::abs(f));
            }
        } else if (f <= 0.0) {
            rep.f1_ok = false;
            worst = std::max(worst, -f);
        }
        const double mono = spec.deriv(v) * (v - 1.0);
        if (mono < -1e-12) {
            rep.f2prime_ok = false;
            worst = std::max(worst, -mono);
        }
        if (std::abs(v - 1.0) >= 0.5 * radius)
            far_min = std::min(far_min, f);
    }
    rep.f2_ok = radius > 0.0 && far_min > 0.0;
    rep.worst_violation = worst;
    return rep;
}

double G(const PotentialSpec& spec, double sigma)
{
    if (!std::isfinite(sigma))
        throw InvalidArgument("G: non-finite argument");
    return std::abs(integrate_sqrt_f(spec, 1.0, sigma));
}

AlphaMin alpha_min(const WeightSpec& weight, double xi_minus, double xi_plus)
{
    if (!(xi_minus <= xi_plus))
        throw InvalidArgument("alpha_min: inverted interval");
    if (xi_minus == xi_plus)
        return {xi_minus, weight(xi_minus)};

    constexpr std::size_t n = 4097;
    const double step = (xi_plus - xi_minus) / static_cast<double>(n - 1);
    std::size_t best = 0;
    double best_val = weight(xi_minus);
    for (std::size_t i = 1; i < n; ++i) {
        const double x = i + 1 == n ? xi_plus : xi_minus + step * static_cast<double>(i);
        const double a = weight(x);
        if (a < best_val) {
            best_val = a;
            best = i;
        }
    }
    const double best_x = best + 1 == n ? xi_plus : xi_minus + step * static_cast<double>(best);
    const double lo = best == 0 ? xi_minus : best_x - step;
    const double hi = best + 1 == n ? xi_plus : best_x + step;
    const auto [x, val] = golden_min([&](double t) { return weight(t); }, lo, hi, 1e-10);
    if (val < best_val)
        return {x, val};
    return {best_x, best_val};
}

// ---------------------------------------------------------------------------

JumpCostTable::JumpCostTable(const WeightSpec& weight, const PotentialSpec& pot, double xi_span,
                             std::size_t nodes)
    : weight_(std::make_shared<WeightSpec>(weight)),
      pot_(std::make_shared<PotentialSpec>(pot)),
      span_(xi_span)
{
    if (!(xi_span > 0.0) || nodes < 3)
        throw InvalidArgument("JumpCostTable: bad truncation");

    const double a1 = weight(1.0);
    for (std::size_t i = 0; i <= 1000; ++i) {
        const double v = 1.0 + xi_span * static_cast<double>(i) / 1000.0;
        if (weight(v) < a1) {
            one_sided_ = false;
            break;
        }
    }

    // Tabulate G and the running minimum of alpha, walking away from the well.
    auto tabulate = [&](double dir, std::vector<double>& xs, std::vector<double>& gs,
                        std::vector<double>& am) {
        const double h = xi_span / static_cast<double>(nodes - 1);
        xs.assign(nodes, 1.0);
        gs.assign(nodes, 0.0);
        am.assign(nodes, a1);
        for (std::size_t k = 1; k < nodes; ++k) {
            xs[k] = 1.0 + dir * h * static_cast<double>(k);
            gs[k] = gs[k - 1] + std::abs(integrate_sqrt_f(*pot_, xs[k - 1], xs[k]));
            double m = am[k - 1];
            for (int s = 1; s <= 8; ++s)
                m = std::min(m, weight(xs[k - 1] + dir * h * s / 8.0));
            am[k] = m;
        }
    };
    tabulate(-1.0, lo_nodes_, lo_G_, lo_amin_);
    if (!one_sided_)
        tabulate(1.0, hi_nodes_, hi_G_, hi_amin_);
}

double JumpCostTable::objective_one_sided(double r, double xi_minus) const
{
    return r * alpha_min(*weight_, xi_minus, 1.0).value + 2.0 * G(*pot_, xi_minus);
}

JumpCost JumpCostTable::evaluate(double r) const
{
    if (!(r >= 0.0))
        throw InvalidArgument("sigma_jump_cost: negative jump size");
    if (r == 0.0)
        return {0.0, 1.0, 1.0, 1.0};

    const std::size_t n = lo_nodes_.size();
    if (one_sided_) {
        std::size_t best = 0;
        double best_val = r * lo_amin_[0];
        for (std::size_t k = 1; k < n; ++k) {
            const double val = r * lo_amin_[k] + 2.0 * lo_G_[k];
            if (val < best_val) {
                best_val = val;
                best = k;
            }
        }
        // Nodes descend from 1; bracket [node(best+1), node(best-1)].
        const double lo = lo_nodes_[std::min(best + 1, n - 1)];
        const double hi = lo_nodes_[best == 0 ? 0 : best - 1];
        auto [x, val] = golden_min([&](double t) { return objective_one_sided(r, t); }, lo, hi, 1e-10);
        double xm = x;
        // The competitor xi_minus = 1 costs exactly r * alpha(1).
        const double at_well = r * (*weight_)(1.0);
        if (at_well <= val) {
            val = at_well;
            xm = 1.0;
        }
        const auto inner = alpha_min(*weight_, xm, 1.0);
        return {val, xm, 1.0, inner.eta};
    }

    // Two-sided search: alpha may dip below alpha(1) above the well.
    std::size_t bl = 0, bh = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; j += 1) {
            const double val =
                r * std::min(lo_amin_[i], hi_amin_[j]) + 2.0 * (lo_G_[i] + hi_G_[j]);
            if (val < best_val) {
                best_val = val;
                bl = i;
                bh = j;
            }
        }
    }
    double xm = lo_nodes_[bl], xp = hi_nodes_[bh];
    auto full = [&](double a, double b) {
        return r * alpha_min(*weight_, a, b).value + 2.0 * (G(*pot_, a) + G(*pot_, b));
    };
    double val = full(xm, xp);
    const double h = span_ / static_cast<double>(n - 1);
    for (int sweep = 0; sweep < 4; ++sweep) {
        auto lo_fit = golden_min([&](double t) { return full(t, xp); }, std::max(1.0 - span_, xm - h),
                                 std::min(1.0, xm + h), 1e-10);
        if (lo_fit.second < val) {
            xm = lo_fit.first;
            val = lo_fit.second;
        }
        auto hi_fit = golden_min([&](double t) { return full(xm, t); }, std::max(1.0, xp - h),
                                 std::min(1.0 + span_, xp + h), 1e-10);
        if (hi_fit.second < val) {
            xp = hi_fit.first;
            val = hi_fit.second;
        }
    }
    const double at_well = r * (*weight_)(1.0);
    if (at_well <= val)
        return {at_well, 1.0, 1.0, 1.0};
    return {val, xm, xp, alpha_min(*weight_, xm, xp).eta};
}

double sigma_jump_cost(const WeightSpec& weight, const PotentialSpec& pot, double r, double xi_span)
{
    if (!(r >= 0.0))
        throw InvalidArgument("sigma_jump_cost: negative jump size");
    return JumpCostTable(weight, pot, xi_span).evaluate(r).value;
}

} // namespace kwc
