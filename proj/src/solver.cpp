#include "kwc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace kwc {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// eps h^(N-2) L + (h^N / eps) I, L the graph Laplacian of the grid.
std::vector<Eigen::Triplet<double>> base_triplets(const GridField& g, const std::vector<Face>& fs, double eps)
{
    const double h = g.spacing();
    const double cell = g.cell_measure();
    const double stiff = eps * cell / (h * h);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(4 * fs.size() + g.size());
    for (const auto& f : fs) {
        const auto i = static_cast<int>(f.lo), j = static_cast<int>(f.hi);
        t.emplace_back(i, i, stiff);
        t.emplace_back(j, j, stiff);
        t.emplace_back(i, j, -stiff);
        t.emplace_back(j, i, -stiff);
    }
    for (std::size_t k = 0; k < g.size(); ++k)
        t.emplace_back(static_cast<int>(k), static_cast<int>(k), cell / eps);
    return t;
}

struct VProblem {
    const GridField& u;
    double eps;
    const PotentialSpec& pot;
    const WeightSpec& weight;
    std::vector<Face> fs;
    std::vector<double> mass;  // |du| h^(N-1) per face

    VProblem(const GridField& u_, double eps_, const PotentialSpec& p, const WeightSpec& w)
        : u(u_), eps(eps_), pot(p), weight(w), fs(faces(u_))
    {
        const double m = u.dims() == 1 ? 1.0 : u.spacing();
        mass.resize(fs.size());
        for (std::size_t k = 0; k < fs.size(); ++k)
            mass[k] = std::abs(u[fs[k].hi] - u[fs[k].lo]) * m;
    }

    double energy(const GridField& v) const
    {
        double tv = 0.0;
        for (std::size_t k = 0; k < fs.size(); ++k)
            if (mass[k] > 0.0)
                tv += std::min(weight(v[fs[k].lo]), weight(v[fs[k].hi])) * mass[k];
        return tv + e_sMM(v, eps, pot).total;
    }

    // Node carrying the face weight: the smaller alpha, ties to the lower index.
    std::size_t carrier(const GridField& v, std::size_t k) const
    {
        return weight(v[fs[k].hi]) < weight(v[fs[k].lo]) ? fs[k].hi : fs[k].lo;
    }
};

GridField ones_like(const GridField& g) { return g.map([](double) { return 1.0; }); }

GridField solve_v_quadratic(const VProblem& pb, double tol, GridField v, std::size_t max_iters)
{
    const auto n = static_cast<Eigen::Index>(v.size());
    const auto base = base_triplets(v, pb.fs, pb.eps);
    const Vec rhs = Vec::Constant(n, v.cell_measure() / pb.eps);
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(std::max(tol, 1e-14));
    cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * n));

    std::vector<std::size_t> assign(pb.fs.size(), 0), prev;
    double energy = pb.energy(v);
    for (std::size_t it = 0; it < max_iters; ++it) {
        std::vector<double> diag(v.size(), 0.0);
        for (std::size_t k = 0; k < pb.fs.size(); ++k) {
            assign[k] = pb.carrier(v, k);
            diag[assign[k]] += 2.0 * pb.mass[k];
        }
        if (it > 0 && assign == prev)
            return v;
        prev = assign;

        auto trips = base;
        for (std::size_t k = 0; k < v.size(); ++k)
            if (diag[k] != 0.0)
                trips.emplace_back(static_cast<int>(k), static_cast<int>(k), diag[k]);
        SpMat a(n, n);
        a.setFromTriplets(trips.begin(), trips.end());
        cg.compute(a);
        Vec guess(n);
        for (Eigen::Index k = 0; k < n; ++k)
            guess[k] = v[static_cast<std::size_t>(k)];
        const Vec x = cg.solveWithGuess(rhs, guess);
        if (cg.info() != Eigen::Success)
            throw SolverFailure("v-step: conjugate gradients did not converge", cg.error(), v);

        GridField next = v;
        for (Eigen::Index k = 0; k < n; ++k)
            next[static_cast<std::size_t>(k)] = x[k];
        const double e = pb.energy(next);
        // The majorizer guarantees descent up to the linear-solve residual.
        if (e > energy)
            return v;
        const double drop = energy - e;
        v = std::move(next);
        energy = e;
        if (drop <= tol * std::max(1.0, std::abs(energy)))
            return v;
    }
    return v;
}

GridField solve_v_general(const VProblem& pb, double tol, GridField v, const VOptions& opt)
{
    const auto n = static_cast<Eigen::Index>(v.size());
    const auto trips = base_triplets(v, pb.fs, pb.eps);
    SpMat pre(n, n);
    pre.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<SpMat> chol(pre);
    if (chol.info() != Eigen::Success)
        throw NumericFailure("v-step: preconditioner factorization failed");

    const double h = v.spacing();
    const double cell = v.cell_measure();
    const double stiff = pb.eps * cell / (h * h);
    auto clamp = [&](double x) { return std::clamp(x, opt.v_min, opt.v_max); };
    for (auto& x : v.values())
        x = clamp(x);

    double energy = pb.energy(v);
    double last_drop = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        Vec g(n);
        for (Eigen::Index k = 0; k < n; ++k)
            g[k] = cell / (2.0 * pb.eps) * pb.pot.deriv(v[static_cast<std::size_t>(k)]);
        for (std::size_t k = 0; k < pb.fs.size(); ++k) {
            const auto i = pb.fs[k].lo, j = pb.fs[k].hi;
            const double d = stiff * (v[i] - v[j]);
            g[static_cast<Eigen::Index>(i)] += d;
            g[static_cast<Eigen::Index>(j)] -= d;
            if (pb.mass[k] > 0.0) {
                const auto c = pb.carrier(v, k);
                g[static_cast<Eigen::Index>(c)] += pb.weight.deriv(v[c]) * pb.mass[k];
            }
        }
        const Vec dir = chol.solve(g);

        bool accepted = false;
        double t = 1.0;
        for (int back = 0; back < 60; ++back, t *= 0.5) {
            GridField trial = v;
            double decrease = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                auto& x = trial[static_cast<std::size_t>(k)];
                const double moved = clamp(x - t * dir[k]);
                decrease += g[k] * (x - moved);
                x = moved;
            }
            if (decrease <= 0.0)
                break;
            const double e = pb.energy(trial);
            if (e <= energy - 1e-4 * decrease) {
                last_drop = energy - e;
                v = std::move(trial);
                energy = e;
                accepted = true;
                break;
            }
        }
        if (!accepted || last_drop <= tol * std::max(1.0, std::abs(energy)))
            return v;
    }
    throw SolverFailure("v-step: projected gradient hit the iteration cap", last_drop, v);
}

} // namespace

void SolveConfig::validate() const
{
    if (eps_schedule.empty())
        throw InvalidArgument("solve config: empty epsilon schedule");
    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
        if (!(eps_schedule[k] > 0.0))
            throw InvalidArgument("solve config: epsilon values must be positive");
        if (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1]))
            throw InvalidArgument("solve config: epsilon schedule must decrease strictly");
    }
    if (!(lambda > 0.0))
        throw InvalidArgument("solve config: lambda must be positive");
    if (!(v_tol > 0.0) || !(u_tol > 0.0) || !(outer_tol > 0.0))
        throw InvalidArgument("solve config: tolerances must be positive");
    if (outer_iters == 0)
        throw InvalidArgument("solve config: outer_iters must be positive");
    if (!(v_min < 1.0 && 1.0 < v_max))
        throw InvalidArgument("solve config: the box must contain 1 in its interior");
    if (steps.tau < 0.0 || steps.sigma < 0.0 || jump_threshold < 0.0)
        throw InvalidArgument("solve config: negative step or threshold");
}

void SolveTrace::write_csv(std::ostream& os) const
{
    os.precision(17);
    os << "iteration,epsilon,dirichlet,potential,weighted_tv,fidelity,total\n";
    for (const auto& r : rows)
        os << r.iteration << ',' << r.energy.epsilon << ',' << r.energy.dirichlet << ',' << r.energy.potential
           << ',' << r.energy.weighted_tv << ',' << r.energy.fidelity << ',' << r.energy.total << '\n';
}

double SolveTrace::worst_increase() const
{
    double worst = 0.0;
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (rows[k].stage == rows[k - 1].stage)
            worst = std::max(worst, rows[k].energy.total - rows[k - 1].energy.total);
    return worst;
}

GridField minimize_v(const GridField& u, double eps, const PotentialSpec& pot, const WeightSpec& weight,
                     double tol, const GridField* warm, const VOptions& opt)
{
    if (!(eps > 0.0))
        throw InvalidArgument("minimize_v: epsilon must be positive");
    if (!(tol > 0.0))
        throw InvalidArgument("minimize_v: tolerance must be positive");
    if (warm && !warm->same_layout(u))
        throw InvalidArgument("minimize_v: warm start layout differs");
    const VProblem pb(u, eps, pot, weight);
    const GridField one = ones_like(u);
    GridField start = warm ? *warm : one;

    const bool linear = pot.kind() == PotentialSpec::Kind::quadratic && weight.is_quadratic_family();
    GridField v = linear ? solve_v_quadratic(pb, tol, std::move(start), opt.max_iters)
                         : solve_v_general(pb, tol, std::move(start), opt);
    if (pb.energy(one) < pb.energy(v))
        return one;
    return v;
}

// ---------------------------------------------------------------------------

UResult minimize_u(const GridField& v, const GridField& f, double lambda, const WeightSpec& weight,
                   const PrimalDualSteps& steps, const GridField* warm_u, const std::vector<double>* warm_dual)
{
    if (!v.same_layout(f))
        throw InvalidArgument("minimize_u: v and f layouts differ");
    if (!(lambda > 0.0))
        throw InvalidArgument("minimize_u: lambda must be positive");
    const double lip2 = 4.0 * v.dims();
    double tau = steps.tau > 0.0 ? steps.tau : 1.0 / std::sqrt(lip2);
    double sigma = steps.sigma > 0.0 ? steps.sigma : 1.0 / std::sqrt(lip2);
    if (tau * sigma * lip2 > 1.0 + 1e-12)
        throw InvalidArgument("minimize_u: step sizes violate tau * sigma * L^2 <= 1");

    const auto fs = faces(v);
    const double mu = lambda * v.cell_measure();
    const double m = v.dims() == 1 ? 1.0 : v.spacing();
    std::vector<double> bound(fs.size());
    bool any = false;
    for (std::size_t k = 0; k < fs.size(); ++k) {
        bound[k] = std::min(weight(v[fs[k].lo]), weight(v[fs[k].hi])) * m / mu;
        if (bound[k] < 0.0)
            throw InvalidArgument("minimize_u: negative weight");
        any = any || bound[k] > 0.0;
    }

    UResult res;
    res.dual.assign(fs.size(), 0.0);
    if (!any) {
        res.u = f;
        return res;
    }

    const std::size_t n = f.size();
    std::vector<double> u(n), ubar(n), uold(n), dtp(n);
    for (std::size_t i = 0; i < n; ++i)
        u[i] = warm_u ? (*warm_u)[i] : f[i];
    if (warm_u && !warm_u->same_layout(f))
        throw InvalidArgument("minimize_u: warm start layout differs");
    auto& p = res.dual;
    if (warm_dual && warm_dual->size() == fs.size())
        for (std::size_t k = 0; k < fs.size(); ++k)
            p[k] = std::clamp((*warm_dual)[k], -bound[k], bound[k]);
    ubar = u;

    auto apply_dt = [&]() {
        std::fill(dtp.begin(), dtp.end(), 0.0);
        for (std::size_t k = 0; k < fs.size(); ++k) {
            dtp[fs[k].hi] += p[k];
            dtp[fs[k].lo] -= p[k];
        }
    };
    auto primal = [&](const std::vector<double>& x) {
        double tv = 0.0, fid = 0.0;
        for (std::size_t k = 0; k < fs.size(); ++k)
            tv += bound[k] * std::abs(x[fs[k].hi] - x[fs[k].lo]);
        for (std::size_t i = 0; i < n; ++i)
            fid += (x[i] - f[i]) * (x[i] - f[i]);
        return tv + 0.5 * fid;
    };
    auto dual_value = [&]() {
        double lin = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lin += dtp[i] * f[i];
            sq += dtp[i] * dtp[i];
        }
        return lin - 0.5 * sq;
    };

    std::vector<double> best = u;
    double best_obj = primal(u);
    double best_gap = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < steps.iters; ++it) {
        for (std::size_t k = 0; k < fs.size(); ++k)
            p[k] = std::clamp(p[k] + sigma * (ubar[fs[k].hi] - ubar[fs[k].lo]), -bound[k], bound[k]);
        apply_dt();
        uold = u;
        for (std::size_t i = 0; i < n; ++i)
            u[i] = (u[i] - tau * dtp[i] + tau * f[i]) / (1.0 + tau);
        const double theta = 1.0 / std::sqrt(1.0 + 2.0 * tau);
        tau *= theta;
        sigma /= theta;
        for (std::size_t i = 0; i < n; ++i)
            ubar[i] = u[i] + theta * (u[i] - uold[i]);

        if (it % 10 == 9 || it + 1 == steps.iters) {
            const double obj = primal(u);
            const double gap = obj - dual_value();
            if (obj <= best_obj) {
                best_obj = obj;
                best = u;
                best_gap = gap;
            }
            if (gap <= steps.tol) {
                best = u;
                best_gap = gap;
                ++it;
                break;
            }
        }
    }
    res.u = f;
    for (std::size_t i = 0; i < n; ++i)
        res.u[i] = best[i];
    res.gap = best_gap * mu;
    res.iterations = it;
    return res;
}

// ---------------------------------------------------------------------------

SolveTrace alternate(const GridField& f, const SolveConfig& config, const PotentialSpec& pot,
                     const WeightSpec& weight)
{
    config.validate();
    SolveTrace trace;
    GridField u = f;
    GridField v = ones_like(f);
    std::vector<double> dual;
    const VOptions box{config.v_min, config.v_max, 500};
    PrimalDualSteps steps = config.steps;
    steps.tol = config.u_tol;
    std::size_t counter = 0;

    for (std::size_t s = 0; s < config.eps_schedule.size(); ++s) {
        const double eps = config.eps_schedule[s];
        auto objective = [&](const GridField& uu, const GridField& vv) {
            EnergyReport r = e_KWC(uu, vv, eps, pot, weight);
            r.fidelity = fidelity(uu, f, config.lambda);
            r.lambda = config.lambda;
            r.sum();
            return r;
        };
        try {
            EnergyReport e = objective(u, v);
            const GridField v0 = minimize_v(u, eps, pot, weight, config.v_tol, &v, box);
            if (const auto ev = objective(u, v0); ev.total <= e.total) {
                v = v0;
                e = ev;
            }
            trace.rows.push_back({counter++, s, e});
            for (std::size_t it = 0; it < config.outer_iters; ++it) {
                const double before = e.total;
                auto ur = minimize_u(v, f, config.lambda, weight, steps, &u, &dual);
                if (const auto eu = objective(ur.u, v); eu.total <= e.total) {
                    u = std::move(ur.u);
                    dual = std::move(ur.dual);
                    e = eu;
                }
                GridField vn = minimize_v(u, eps, pot, weight, config.v_tol, &v, box);
                if (const auto ev = objective(u, vn); ev.total <= e.total) {
                    v = std::move(vn);
                    e = ev;
                }
                trace.rows.push_back({counter++, s, e});
                if (before - e.total <= config.outer_tol * std::max(1.0, std::abs(e.total)))
                    break;
            }
        } catch (const NumericFailure& err) {
            trace.failed_stage = static_cast<int>(s);
            trace.failure = err.what();
            throw SolveError(std::string("stage ") + std::to_string(s) + ": " + err.what(), trace);
        }
        trace.snapshots.push_back({eps, u, v});
    }
    return trace;
}

// ---------------------------------------------------------------------------

std::vector<double> tv_prox_1d(const std::vector<double>& in, double lambda)
{
    if (!(lambda >= 0.0))
        throw InvalidArgument("tv_prox_1d: negative penalty");
    const std::size_t width = in.size();
    std::vector<double> out(width);
    if (width == 0)
        return out;
    if (lambda == 0.0)
        return in;

    // Direct taut-string scan: extend the current segment while the running
    // residual stays inside [-lambda, lambda], otherwise fix it at the bound.
    std::size_t k = 0, k0 = 0, kplus = 0, kminus = 0;
    double umin = lambda, umax = -lambda;
    double vmin = in[0] - lambda, vmax = in[0] + lambda;
    const double twolambda = 2.0 * lambda;
    for (;;) {
        while (k == width - 1) {
            if (umin < 0.0) {
                do
                    out[k0++] = vmin;
                while (k0 <= kminus);
                k = kminus = k0;
                vmin = in[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if (umax > 0.0) {
                do
                    out[k0++] = vmax;
                while (k0 <= kplus);
                k = kplus = k0;
                vmax = in[k0];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / static_cast<double>(k - k0 + 1);
                do
                    out[k0++] = vmin;
                while (k0 <= k);
                return out;
            }
        }
        if ((umin += in[k + 1] - vmin) < -lambda) {
            do
                out[k0++] = vmin;
            while (k0 <= kminus);
            k = kplus = kminus = k0;
            vmin = in[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = -lambda;
        } else if ((umax += in[k + 1] - vmax) > lambda) {
            do
                out[k0++] = vmax;
            while (k0 <= kplus);
            k = kplus = kminus = k0;
            vmax = in[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = -lambda;
        } else {
            ++k;
            if (umin >= lambda) {
                kminus = k;
                vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
                umin = lambda;
            }
            if (umax <= -lambda) {
                kplus = k;
                vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
                umax = -lambda;
            }
        }
    }
}

// ---------------------------------------------------------------------------

std::vector<double> quantized_levels(const GridField& f, std::size_t level_count)
{
    if (level_count < 2)
        throw InvalidArgument("quantized_levels: need at least two levels");
    const auto [lo_it, hi_it] = std::minmax_element(f.values().begin(), f.values().end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> levels(level_count);
    if (hi == lo) {
        // Constant data: keep the data value itself on the grid.
        const double step = 0.5 * std::max(std::abs(lo), 1.0) / static_cast<double>(level_count - 1);
        const auto mid = static_cast<double>(level_count / 2);
        for (std::size_t k = 0; k < level_count; ++k)
            levels[k] = lo + (static_cast<double>(k) - mid) * step;
        levels[level_count / 2] = lo;
        return levels;
    }
    const double a = lo - 0.25 * (hi - lo), b = hi + 0.25 * (hi - lo);
    for (std::size_t k = 0; k < level_count; ++k)
        levels[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(level_count - 1);
    return levels;
}

TvkwcSolution minimize_tvkwc_1d(const GridField& f, double lambda, const PotentialSpec& pot,
                                const WeightSpec& weight, std::size_t level_count)
{
    if (f.dims() != 1)
        throw InvalidArgument("minimize_tvkwc_1d: need a 1D signal");
    if (!(lambda > 0.0))
        throw InvalidArgument("minimize_tvkwc_1d: lambda must be positive");
    if (level_count < 16)
        throw InvalidArgument("minimize_tvkwc_1d: need at least 16 levels");

    TvkwcSolution sol;
    sol.levels = quantized_levels(f, level_count);
    const auto& lv = sol.levels;
    const std::size_t n = f.size(), nl = lv.size();
    const double w = 0.5 * lambda * f.spacing();

    // Levels are uniform, so the jump cost depends only on the index distance.
    const JumpCostTable table(weight, pot);
    std::vector<double> by_distance(nl, 0.0);
    for (std::size_t d = 1; d < nl; ++d)
        by_distance[d] = table.evaluate(lv[d] - lv[0]).value;
    std::vector<double> jump(nl * nl, 0.0);
    for (std::size_t a = 0; a < nl; ++a)
        for (std::size_t b = 0; b < nl; ++b)
            jump[a * nl + b] = by_distance[a > b ? a - b : b - a];

    std::vector<double> cost(nl), next(nl);
    std::vector<std::size_t> from(n * nl, 0);
    for (std::size_t l = 0; l < nl; ++l)
        cost[l] = w * (lv[l] - f[0]) * (lv[l] - f[0]);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t l = 0; l < nl; ++l) {
            double best = cost[l];
            std::size_t arg = l;
            for (std::size_t m = 0; m < nl; ++m) {
                if (m == l)
                    continue;
                const double c = cost[m] + jump[m * nl + l];
                if (c < best) {
                    best = c;
                    arg = m;
                }
            }
            next[l] = best + w * (lv[l] - f[i]) * (lv[l] - f[i]);
            from[i * nl + l] = arg;
        }
        std::swap(cost, next);
    }
    std::size_t l = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    sol.objective = cost[l];
    sol.level_index.assign(n, 0);
    for (std::size_t i = n; i-- > 0;) {
        sol.level_index[i] = l;
        l = from[i * nl + l];
    }

    sol.u = f;
    for (std::size_t i = 0; i < n; ++i) {
        sol.u[i] = lv[sol.level_index[i]];
        sol.fidelity += w * (sol.u[i] - f[i]) * (sol.u[i] - f[i]);
        if (i > 0 && sol.level_index[i] != sol.level_index[i - 1]) {
            sol.jump_cost += jump[sol.level_index[i - 1] * nl + sol.level_index[i]];
            ++sol.jumps;
        }
    }
    return sol;
}

TvkwcSolution search_tvkwc_1d(const GridField& f, double lambda, const PotentialSpec& pot,
                              const WeightSpec& weight, std::size_t level_count, std::size_t max_visits)
{
    if (f.dims() != 1)
        throw InvalidArgument("search_tvkwc_1d: need a 1D signal");
    if (!(lambda > 0.0))
        throw InvalidArgument("search_tvkwc_1d: lambda must be positive");

    TvkwcSolution sol;
    sol.levels = quantized_levels(f, level_count);
    const auto& lv = sol.levels;
    const std::size_t n = f.size(), nl = lv.size();
    const double w = 0.5 * lambda * f.spacing();

    const JumpCostTable table(weight, pot);
    std::vector<double> jump(nl * nl, 0.0);
    double cheapest_jump = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < nl; ++a)
        for (std::size_t b = a + 1; b < nl; ++b) {
            const double c = table.evaluate(std::abs(lv[a] - lv[b])).value;
            jump[a * nl + b] = jump[b * nl + a] = c;
            cheapest_jump = std::min(cheapest_jump, c);
        }

    std::vector<double> fid(n * nl);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < nl; ++l)
            fid[i * nl + l] = w * (lv[l] - f[i]) * (lv[l] - f[i]);
    // Suffix bounds: staying on one level, or the cheapest fit plus one jump.
    std::vector<double> stay((n + 1) * nl, 0.0), loose(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < nl; ++l) {
            stay[i * nl + l] = stay[(i + 1) * nl + l] + fid[i * nl + l];
            m = std::min(m, fid[i * nl + l]);
        }
        loose[i] = loose[i + 1] + m;
    }
    auto bound = [&](std::size_t i, std::size_t l) {
        return std::min(stay[i * nl + l], loose[i] + cheapest_jump);
    };

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> path(n, 0), best_path(n, 0);
    std::vector<std::vector<std::size_t>> order(n, std::vector<std::size_t>(nl));
    std::size_t visits = 0;

    auto descend = [&](auto&& self, std::size_t i, double prefix) -> void {
        if (++visits > max_visits)
            throw NumericFailure("search_tvkwc_1d: visit budget exhausted", best);
        if (i == n) {
            if (prefix < best) {
                best = prefix;
                best_path = path;
            }
            return;
        }
        auto& ord = order[i];
        std::iota(ord.begin(), ord.end(), std::size_t{0});
        auto step = [&](std::size_t l) {
            return fid[i * nl + l] + (i > 0 ? jump[path[i - 1] * nl + l] : 0.0);
        };
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return step(a) < step(b); });
        for (std::size_t l : ord) {
            const double c = prefix + step(l);
            if (c + bound(i + 1, l) >= best)
                continue;
            path[i] = l;
            self(self, i + 1, c);
        }
    };
    descend(descend, 0, 0.0);

    sol.objective = best;
    sol.level_index = best_path;
    sol.u = f;
    for (std::size_t i = 0; i < n; ++i) {
        sol.u[i] = lv[best_path[i]];
        sol.fidelity += fid[i * nl + best_path[i]];
        if (i > 0 && best_path[i] != best_path[i - 1]) {
            sol.jump_cost += jump[best_path[i - 1] * nl + best_path[i]];
            ++sol.jumps;
        }
    }
    return sol;
}

} // namespace kwc
