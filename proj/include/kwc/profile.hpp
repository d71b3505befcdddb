#pragma once

#include "kwc/grid.hpp"
#include "kwc/potential.hpp"
#include "kwc/setvalued.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

namespace kwc {

/// psi(., c) for one anchor c: the solution of psi' = sqrt(F(psi)), psi(0) = c,
/// extended evenly and by the constant 1 past s_star.
///
/// Internally tabulated in y = -log|1 - psi| / |1 - c|, where the map
/// y -> s has the bounded integrand |1 - z| / sqrt(F(z)).
class ProfileTable {
public:
    ProfileTable(const PotentialSpec& pot, double c);

    double anchor() const noexcept { return c_; }
    // +infinity when the profile only approaches 1 asymptotically.
    double s_star() const noexcept { return s_star_; }

    double operator()(double s) const;
    // Inverse on the monotone branch: the s >= 0 with psi(s) = target.
    double arc_length(double target) const;

    // Tabulation nodes (s_k, psi(s_k)), increasing in s.
    const std::vector<double>& s_grid() const noexcept { return s_; }
    std::vector<double> psi_values() const;

private:
    double z_of(double y) const;
    double integrand(double y) const;
    double y_of(double s) const;

    std::shared_ptr<const PotentialSpec> pot_;
    double c_;
    double gap_;  // |1 - c|
    double sign_; // -1 below the well, +1 above
    double s_star_;
    std::vector<double> y_, s_;
};

double psi(const PotentialSpec& pot, double s, double c);

/// The eight-piece profile in the variable s with breakpoints at multiples of r = sqrt(eps).
class PiecewiseProfile {
public:
    enum class Piece { constant, linear, lower_branch, upper_branch };

    PiecewiseProfile(double eps, double a, double b, const PotentialSpec& pot);

    double epsilon() const noexcept { return eps_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double root_eps() const noexcept { return r_; }
    double s0() const noexcept { return s0_; }
    void set_shift(double s0) { s0_ = s0; }

    // -2r, -r, 0, r, 2r, 4r, 5r
    std::array<double, 7> breakpoints() const;
    // Piece index 0..7 containing s (left-closed, the last breakpoint goes right).
    int piece_of(double s) const;
    Piece kind(int piece) const;

    // Unshifted profile.
    double operator()(double s) const;
    // Shifted profile phi(s) = Psi(s + s0).
    double shifted(double s) const { return (*this)(s + s0_); }

    // {Psi != 1} is contained in this open interval of the shifted variable.
    double support_lo() const { return -2.0 * r_ - s0_; }
    double support_hi() const { return 5.0 * r_ - s0_; }

    // Profile values at the gluing points +-r (lower) and 2r, 4r (upper).
    double lower_join() const noexcept { return pa_; }
    double upper_join() const noexcept { return pb_; }

private:
    double eps_, a_, b_, r_;
    double s0_ = 0.0;
    std::shared_ptr<const ProfileTable> lower_, upper_;
    double pa_, pb_;
};

PiecewiseProfile build_profile(double eps, double a, double b, const PotentialSpec& pot);

/// Smallest s0 >= 0 with Psi(s0) = eta, scanning the pieces on s >= 0 in order.
double shift_s0(const PiecewiseProfile& profile, double eta);

// Two-column (s, Psi(s)) export over [-3r, 6r].
void write_profile(std::ostream& os, const PiecewiseProfile& profile, std::size_t samples = 901);

// ---------------------------------------------------------------------------
// Signed distance to a curve given as the graph of a piecewise-linear function

/// A polyline that is a graph over x (x strictly increasing) or, failing that,
/// over y. Positive side: above the graph over x, right of the graph over y.
class GraphCurve {
public:
    explicit GraphCurve(std::vector<Point2> vertices);
    explicit GraphCurve(const Segment& s) : GraphCurve(std::vector<Point2>{s.a, s.b}) {}

    int axis() const noexcept { return axis_; }
    const std::vector<Point2>& vertices() const noexcept { return v_; }
    double distance(Point2 z) const;
    double signed_distance(Point2 z) const;

private:
    std::vector<Point2> v_;
    int axis_ = 0;
};

GridField signed_distance(const GraphCurve& curve, const GridField& grid);

// ---------------------------------------------------------------------------
// Recovery fields

/// v_eps for a set-valued limit: on each jump / segment the shifted profile
/// composed with the signed distance, 1 elsewhere. The grid argument only
/// supplies the layout. Throws EpsilonTooLarge when supports overlap or leave
/// the domain.
GridField recovery_field(double eps, const SlicedLimit1D& limit, const WeightSpec& weight,
                         const PotentialSpec& pot, const GridField& grid);
GridField recovery_field(double eps, const Limit2D& limit, const WeightSpec& weight,
                         const PotentialSpec& pot, const GridField& grid);

// ---------------------------------------------------------------------------

struct ElpfRow {
    double c;
    double delta;
    double lhs;  // F(psi(1/delta, c)) / delta^2
    double rhs;  // (1 - c)^2
};

struct ElpfReport {
    std::vector<ElpfRow> rows;
    double max_ratio = 0.0;  // max lhs / rhs over rows with rhs > 0
    double worst_excess = 0.0;
    bool passed = true;
};

ElpfReport check_elpf(const PotentialSpec& pot, const std::vector<double>& c_grid,
                      const std::vector<double>& delta_grid, double slack = 1e-8);

} // namespace kwc
