#pragma once

#include "kwc/energy.hpp"
#include "kwc/errors.hpp"
#include "kwc/grid.hpp"
#include "kwc/potential.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace kwc {

/// Step sizes and stopping rule of the primal-dual u-step.
///
/// The u-step runs on the problem rescaled by 1 / (lambda h^N), so tau and
/// sigma are dimensionless; zero means 1 / L with L^2 = 4N.
struct PrimalDualSteps {
    double tau = 0.0;
    double sigma = 0.0;
    std::size_t iters = 100000;
    double tol = 1e-10;  // duality gap of the rescaled problem
};

struct SolveConfig {
    std::vector<double> eps_schedule{0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
    double lambda = 50.0;
    std::size_t outer_iters = 30;
    double v_tol = 1e-10;
    double u_tol = 1e-10;
    double outer_tol = 1e-9;    // relative energy decrease ending an epsilon stage
    double jump_threshold = 0.0;  // 0: default_jump_threshold
    PrimalDualSteps steps{0.0, 0.0, 20000, 1e-10};  // warm-started, so a lower cap
    double v_min = -1.0;
    double v_max = 3.0;

    void validate() const;
};

struct TraceRow {
    std::size_t iteration = 0;
    std::size_t stage = 0;
    EnergyReport energy;
};

struct Snapshot {
    double epsilon = 0.0;
    GridField u;
    GridField v;
};

struct SolveTrace {
    std::vector<TraceRow> rows;
    std::vector<Snapshot> snapshots;
    int failed_stage = -1;
    std::string failure;

    // iteration,epsilon,dirichlet,potential,weighted_tv,fidelity,total
    void write_csv(std::ostream& os) const;
    // Largest increase of the total between consecutive rows of one stage.
    double worst_increase() const;
};

/// Raised by minimize_v when the iteration cap is hit; carries the best iterate.
class SolverFailure : public NumericFailure {
public:
    SolverFailure(const std::string& what, double achieved, GridField best)
        : NumericFailure(what, achieved), best_(std::move(best)) {}
    const GridField& best() const noexcept { return best_; }

private:
    GridField best_;
};

/// alternate() failed inside a stage; the partial trace is kept.
class SolveError : public NumericFailure {
public:
    SolveError(const std::string& what, SolveTrace trace)
        : NumericFailure(what), trace_(std::move(trace)) {}
    const SolveTrace& trace() const noexcept { return trace_; }

private:
    SolveTrace trace_;
};

struct VOptions {
    double v_min = -1.0;
    double v_max = 3.0;
    std::size_t max_iters = 500;
};

/// Minimizer of E^eps_KWC(u, .) for fixed u.
///
/// Quadratic potential with a quadratic-family weight: majorize-minimize, each
/// step a sparse SPD solve (conjugate gradients). Otherwise: projected,
/// preconditioned gradient descent with Armijo backtracking inside the box.
GridField minimize_v(const GridField& u, double eps, const PotentialSpec& pot, const WeightSpec& weight,
                     double tol, const GridField* warm = nullptr, const VOptions& opt = {});

struct UResult {
    GridField u;
    std::vector<double> dual;  // one entry per face, in faces() order
    double gap = 0.0;
    std::size_t iterations = 0;
};

/// Approximate minimizer of weighted_tv(u, alpha(v)) + fidelity(u, f, lambda)
/// by the accelerated primal-dual iteration; returns the best iterate seen.
UResult minimize_u(const GridField& v, const GridField& f, double lambda, const WeightSpec& weight,
                   const PrimalDualSteps& steps, const GridField* warm_u = nullptr,
                   const std::vector<double>* warm_dual = nullptr);

/// Alternating minimization of E^eps_KWC + fidelity along the epsilon schedule.
SolveTrace alternate(const GridField& f, const SolveConfig& config, const PotentialSpec& pot,
                     const WeightSpec& weight);

/// Exact solution of min 0.5 |u - f|^2 + t sum |u_{i+1} - u_i| (taut string).
std::vector<double> tv_prox_1d(const std::vector<double>& f, double t);

struct TvkwcSolution {
    GridField u;
    std::vector<double> levels;
    std::vector<std::size_t> level_index;  // per node
    double objective = 0.0;
    double jump_cost = 0.0;
    double fidelity = 0.0;
    std::size_t jumps = 0;
};

/// Uniform levels over [min f - range/4, max f + range/4].
std::vector<double> quantized_levels(const GridField& f, std::size_t level_count);

/// Global minimizer of TV_KWC + fidelity over piecewise-constant u with values
/// on the quantized level grid, by dynamic programming over (node, level).
TvkwcSolution minimize_tvkwc_1d(const GridField& f, double lambda, const PotentialSpec& pot,
                                const WeightSpec& weight, std::size_t level_count);

/// The same problem solved by depth-first enumeration of level sequences,
/// pruned only by valid lower bounds; exact, exponential in the worst case.
/// Jump costs are evaluated per level pair. Throws NumericFailure after
/// max_visits search nodes.
TvkwcSolution search_tvkwc_1d(const GridField& f, double lambda, const PotentialSpec& pot,
                              const WeightSpec& weight, std::size_t level_count,
                              std::size_t max_visits = 200000000);

} // namespace kwc
