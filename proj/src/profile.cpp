#include "kwc/profile.hpp"

#include "kwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace kwc {

namespace {

constexpr double kStepY = 0.25;
// The table stops once |1 - psi| drops to this level; beyond it 1 - psi is
// below what a double near 1 can resolve reliably.
constexpr double kTailGap = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

ProfileTable::ProfileTable(const PotentialSpec& pot, double c)
    : pot_(std::make_shared<PotentialSpec>(pot)), c_(c), gap_(std::abs(1.0 - c)),
      sign_(c < 1.0 ? -1.0 : 1.0), s_star_(kInf)
{
    if (!std::isfinite(c))
        throw InvalidArgument("psi: non-finite anchor");
    if (gap_ == 0.0) {
        y_ = {0.0};
        s_ = {0.0};
        return;
    }
    if (!((*pot_)(c) > 0.0))
        throw InvalidArgument("psi: F vanishes at the anchor " + std::to_string(c) + " away from the well");

    using boost::math::quadrature::gauss_kronrod;
    const double y_max = std::max(kStepY, std::log(gap_ / kTailGap));
    const auto n = static_cast<std::size_t>(std::ceil(y_max / kStepY));
    y_.reserve(n + 1);
    s_.reserve(n + 1);
    y_.push_back(0.0);
    s_.push_back(0.0);
    auto g = [this](double y) { return integrand(y); };
    for (std::size_t k = 1; k <= n; ++k) {
        const double lo = y_.back(), hi = kStepY * static_cast<double>(k);
        double err = 0.0;
        const double piece = gauss_kronrod<double, 15>::integrate(g, lo, hi, 12, 1e-12, &err);
        // Near the well 1 - z carries relative rounding of order eps / |1 - z|,
        // which bounds how far the error estimate can fall.
        const double floor = 1e4 * std::numeric_limits<double>::epsilon() * kStepY * integrand(hi) /
                             std::abs(1.0 - z_of(hi));
        if (!(err <= 1e-10 * std::max(1.0, std::abs(piece)) + floor) || !std::isfinite(piece))
            throw NumericFailure("psi: quadrature of the profile map did not converge", err);
        y_.push_back(hi);
        s_.push_back(s_.back() + piece);
    }

    // Exponentially decaying integrand at the end of the table: the profile
    // reaches the well at a finite s_star, estimated from the decay rate.
    const double y_end = y_.back();
    const double g_end = integrand(y_end);
    const double g_back = integrand(std::max(0.0, y_end - 5.0));
    if (g_back > 0.0 && g_end < 0.5 * g_back) {
        const double rate = std::log(g_back / std::max(g_end, 1e-300)) / std::min(5.0, y_end);
        s_star_ = s_.back() + g_end / rate;
    }
}

double ProfileTable::z_of(double y) const { return y == 0.0 ? c_ : 1.0 + sign_ * gap_ * std::exp(-y); }

double ProfileTable::integrand(double y) const
{
    // Distance taken from the rounded point so F and the Jacobian agree.
    const double z = z_of(y);
    const double f = (*pot_)(z);
    if (!(f > 0.0))
        throw NumericFailure("psi: F vanishes between the anchor and the well");
    return std::abs(1.0 - z) / std::sqrt(f);
}

double ProfileTable::y_of(double s) const
{
    if (s <= 0.0)
        return 0.0;
    if (s >= s_.back()) {
        if (s >= s_star_)
            return kInf;
        const double y_end = y_.back();
        const double g_end = integrand(y_end);
        if (std::isfinite(s_star_)) {
            // Exponential tail g_end * exp(-rate (y - y_end)).
            const double rate = g_end / (s_star_ - s_.back());
            const double frac = 1.0 - (s - s_.back()) * rate / g_end;
            return frac > 0.0 ? y_end - std::log(frac) / rate : kInf;
        }
        return y_end + (s - s_.back()) / g_end;
    }

    const auto k = static_cast<std::size_t>(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin()) - 1;
    double lo = y_[k], hi = y_[k + 1];
    const double target = s - s_[k];
    auto g = [this](double y) { return integrand(y); };
    auto phi = [&](double y) {
        return y == y_[k] ? -target : boost::math::quadrature::gauss<double, 20>::integrate(g, y_[k], y) - target;
    };
    double y = lo + (hi - lo) * target / (s_[k + 1] - s_[k]);
    for (int it = 0; it < 60; ++it) {
        const double r = phi(y);
        if (std::abs(r) <= 1e-15 * std::max(1.0, s))
            break;
        if (r < 0.0)
            lo = y;
        else
            hi = y;
        double next = y - r / integrand(y);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - y) <= 1e-15 * std::max(1.0, y)) {
            y = next;
            break;
        }
        y = next;
    }
    return y;
}

double ProfileTable::operator()(double s) const
{
    if (gap_ == 0.0)
        return 1.0;
    const double y = y_of(std::abs(s));
    return std::isfinite(y) ? z_of(y) : 1.0;
}

double ProfileTable::arc_length(double target) const
{
    if (gap_ == 0.0)
        return 0.0;
    const double d = sign_ * (target - 1.0);
    if (!(d >= 0.0 && d <= gap_))
        throw InvalidArgument("psi: target outside the range between the anchor and the well");
    if (d == 0.0)
        return s_star_;
    const double y = std::log(gap_ / d);
    if (y >= y_.back()) {
        const double g_end = integrand(y_.back());
        if (std::isfinite(s_star_)) {
            const double rate = g_end / (s_star_ - s_.back());
            return s_.back() + g_end / rate * (1.0 - std::exp(-rate * (y - y_.back())));
        }
        return s_.back() + g_end * (y - y_.back());
    }
    const auto k = std::min(static_cast<std::size_t>(y / kStepY), y_.size() - 2);
    auto g = [this](double t) { return integrand(t); };
    return s_[k] + boost::math::quadrature::gauss<double, 20>::integrate(g, y_[k], y);
}

std::vector<double> ProfileTable::psi_values() const
{
    std::vector<double> out;
    out.reserve(y_.size());
    for (double y : y_)
        out.push_back(gap_ == 0.0 ? 1.0 : z_of(y));
    return out;
}

double psi(const PotentialSpec& pot, double s, double c)
{
    if (c == 1.0 || s == 0.0)
        return c;
    return ProfileTable(pot, c)(s);
}

// ---------------------------------------------------------------------------

PiecewiseProfile::PiecewiseProfile(double eps, double a, double b, const PotentialSpec& pot)
    : eps_(eps), a_(a), b_(b), r_(std::sqrt(eps))
{
    if (!(eps > 0.0 && eps < 1.0))
        throw InvalidArgument("profile: need 0 < eps < 1");
    if (a > 1.0 || b < 1.0)
        throw InvalidArgument("profile: need a <= 1 <= b");
    lower_ = std::make_shared<ProfileTable>(pot, a);
    upper_ = std::make_shared<ProfileTable>(pot, b);
    pa_ = (*lower_)(r_ / eps_);
    pb_ = (*upper_)(r_ / eps_);
}

std::array<double, 7> PiecewiseProfile::breakpoints() const
{
    return {-2.0 * r_, -r_, 0.0, r_, 2.0 * r_, 4.0 * r_, 5.0 * r_};
}

int PiecewiseProfile::piece_of(double s) const
{
    const auto bp = breakpoints();
    return static_cast<int>(std::upper_bound(bp.begin(), bp.end(), s) - bp.begin());
}

PiecewiseProfile::Piece PiecewiseProfile::kind(int piece) const
{
    switch (piece) {
    case 0:
    case 7:
        return Piece::constant;
    case 1:
    case 4:
    case 6:
        return Piece::linear;
    case 2:
    case 3:
        return Piece::lower_branch;
    case 5:
        return Piece::upper_branch;
    default:
        throw InvalidArgument("profile: piece index out of range");
    }
}

double PiecewiseProfile::operator()(double s) const
{
    const double r = r_;
    switch (piece_of(s)) {
    case 1:
        return 1.0 + (s + 2.0 * r) / r * (pa_ - 1.0);
    case 2:
    case 3:
        return (*lower_)(s / eps_);
    case 4:
        return pa_ + (s - r) / r * (pb_ - pa_);
    case 5:
        return (*upper_)((s - 3.0 * r) / eps_);
    case 6:
        return pb_ + (s - 4.0 * r) / r * (1.0 - pb_);
    default:
        return 1.0;
    }
}

PiecewiseProfile build_profile(double eps, double a, double b, const PotentialSpec& pot)
{
    return PiecewiseProfile(eps, a, b, pot);
}

double shift_s0(const PiecewiseProfile& p, double eta)
{
    if (!(eta >= p.a() && eta <= p.b()))
        throw InvalidArgument("shift_s0: eta outside the range of the profile");
    const double r = p.root_eps();
    const double cuts[] = {0.0, r, 2.0 * r, 3.0 * r, 4.0 * r, 5.0 * r};
    for (std::size_t k = 0; k + 1 < std::size(cuts); ++k) {
        double lo = cuts[k], hi = cuts[k + 1];
        double flo = p(lo) - eta;
        const double fhi = p(hi) - eta;
        if (flo == 0.0)
            return lo;
        if (fhi != 0.0 && (flo > 0.0) == (fhi > 0.0))
            continue;
        while (hi - lo > 1e-12 * r) {
            const double mid = 0.5 * (lo + hi);
            const double fm = p(mid) - eta;
            if (fm == 0.0)
                return mid;
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return fhi == 0.0 && hi == cuts[k + 1] && lo > hi - 1e-12 * r ? hi : 0.5 * (lo + hi);
    }
    throw NumericFailure("shift_s0: no root on s >= 0");
}

void write_profile(std::ostream& os, const PiecewiseProfile& p, std::size_t samples)
{
    const double r = p.root_eps();
    const double lo = -3.0 * r, hi = 6.0 * r;
    os.precision(17);
    os << "# s psi\n";
    for (std::size_t k = 0; k < samples; ++k) {
        const double s = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
        os << s << ' ' << p(s) << '\n';
    }
}

// ---------------------------------------------------------------------------

GraphCurve::GraphCurve(std::vector<Point2> vertices) : v_(std::move(vertices))
{
    if (v_.size() < 2)
        throw InvalidArgument("curve needs at least two vertices");
    auto strictly = [this](auto coord) {
        bool up = true, down = true;
        for (std::size_t i = 0; i + 1 < v_.size(); ++i) {
            up = up && coord(v_[i + 1]) > coord(v_[i]);
            down = down && coord(v_[i + 1]) < coord(v_[i]);
        }
        return up ? 1 : (down ? -1 : 0);
    };
    const int over_x = strictly([](Point2 p) { return p.x; });
    const int over_y = strictly([](Point2 p) { return p.y; });
    if (over_x != 0) {
        axis_ = 0;
        if (over_x < 0)
            std::reverse(v_.begin(), v_.end());
    } else if (over_y != 0) {
        axis_ = 1;
        if (over_y < 0)
            std::reverse(v_.begin(), v_.end());
    } else {
        throw InvalidArgument("curve is not a graph over either axis");
    }
}

double GraphCurve::distance(Point2 z) const
{
    double d = kInf;
    for (std::size_t i = 0; i + 1 < v_.size(); ++i)
        d = std::min(d, point_segment_distance(z, v_[i], v_[i + 1]));
    return d;
}

double GraphCurve::signed_distance(Point2 z) const
{
    const double d = distance(z);
    const double t = axis_ == 0 ? z.x : z.y;
    std::size_t i = 0;
    while (i + 2 < v_.size() && (axis_ == 0 ? v_[i + 1].x : v_[i + 1].y) < t)
        ++i;
    const double cr = cross(v_[i + 1] - v_[i], z - v_[i]);
    const bool positive = axis_ == 0 ? cr > 0.0 : cr < 0.0;
    return positive ? d : -d;
}

GridField signed_distance(const GraphCurve& curve, const GridField& grid)
{
    if (grid.dims() != 2)
        throw InvalidArgument("signed_distance: need a 2D grid");
    GridField out = grid;
    const auto [nx, ny] = grid.shape();
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            out.at(i, j) = curve.signed_distance(grid.node(i, j));
    return out;
}

// ---------------------------------------------------------------------------

namespace {

PiecewiseProfile shifted_profile(double eps, double a, double b, const WeightSpec& weight,
                                 const PotentialSpec& pot)
{
    PiecewiseProfile p(eps, a, b, pot);
    p.set_shift(shift_s0(p, alpha_min(weight, a, b).eta));
    return p;
}

} // namespace

GridField recovery_field(double eps, const SlicedLimit1D& limit, const WeightSpec& weight,
                         const PotentialSpec& pot, const GridField& grid)
{
    if (grid.dims() != 1)
        throw InvalidArgument("recovery_field: need a 1D grid for a 1D limit");
    const auto& jumps = limit.jumps();
    std::vector<PiecewiseProfile> prof;
    prof.reserve(jumps.size());
    for (const auto& j : jumps)
        prof.push_back(shifted_profile(eps, j.xi_minus, j.xi_plus, weight, pot));

    for (std::size_t k = 0; k < jumps.size(); ++k) {
        const double lo = jumps[k].t + prof[k].support_lo();
        const double hi = jumps[k].t + prof[k].support_hi();
        if (lo <= limit.t_lo() || hi >= limit.t_hi())
            throw EpsilonTooLarge("recovery support of jump " + std::to_string(k) + " leaves the domain");
        if (k + 1 < jumps.size() && hi >= jumps[k + 1].t + prof[k + 1].support_lo())
            throw EpsilonTooLarge("recovery supports of jumps " + std::to_string(k) + " and " +
                                  std::to_string(k + 1) + " overlap");
    }

    GridField v = grid;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double t = v.coord(0, i);
        double val = 1.0;
        for (std::size_t k = 0; k < jumps.size(); ++k) {
            const double sd = t - jumps[k].t;
            if (sd > prof[k].support_lo() && sd < prof[k].support_hi()) {
                val = prof[k].shifted(sd);
                break;
            }
        }
        v[i] = val;
    }
    return v;
}

GridField recovery_field(double eps, const Limit2D& limit, const WeightSpec& weight,
                         const PotentialSpec& pot, const GridField& grid)
{
    if (grid.dims() != 2)
        throw InvalidArgument("recovery_field: need a 2D grid for a 2D limit");
    const auto& segs = limit.segments();
    std::vector<PiecewiseProfile> prof;
    std::vector<GraphCurve> curves;
    std::vector<double> reach;
    for (const auto& s : segs) {
        prof.push_back(shifted_profile(eps, s.xi_minus, s.xi_plus, weight, pot));
        curves.emplace_back(s);
        reach.push_back(std::max(-prof.back().support_lo(), prof.back().support_hi()));
    }

    const Rect& dom = limit.domain();
    for (std::size_t k = 0; k < segs.size(); ++k) {
        double wall = kInf;
        for (Point2 p : {segs[k].a, segs[k].b})
            wall = std::min({wall, p.x - dom.lo.x, dom.hi.x - p.x, p.y - dom.lo.y, dom.hi.y - p.y});
        if (wall <= reach[k])
            throw EpsilonTooLarge("recovery support of segment " + std::to_string(k) + " leaves the domain");
        for (std::size_t m = 0; m < k; ++m)
            if (segment_segment_distance(segs[k], segs[m]) <= reach[k] + reach[m])
                throw EpsilonTooLarge("recovery supports of segments " + std::to_string(m) + " and " +
                                      std::to_string(k) + " overlap");
    }

    GridField v = grid;
    const auto [nx, ny] = grid.shape();
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const Point2 z = grid.node(i, j);
            double val = 1.0;
            for (std::size_t k = 0; k < segs.size(); ++k) {
                if (curves[k].distance(z) >= reach[k])
                    continue;
                const double sd = curves[k].signed_distance(z);
                if (sd > prof[k].support_lo() && sd < prof[k].support_hi()) {
                    val = prof[k].shifted(sd);
                    break;
                }
            }
            v.at(i, j) = val;
        }
    }
    return v;
}

// ---------------------------------------------------------------------------

ElpfReport check_elpf(const PotentialSpec& pot, const std::vector<double>& c_grid,
                      const std::vector<double>& delta_grid, double slack)
{
    if (!pot.satisfies_f1())
        throw InvalidArgument("check_elpf: potential violates F1");
    ElpfReport rep;
    for (double c : c_grid) {
        const ProfileTable table(pot, c);
        for (double delta : delta_grid) {
            if (!(delta > 0.0))
                throw InvalidArgument("check_elpf: delta must be positive");
            const double val = table(1.0 / delta);
            ElpfRow row{c, delta, pot(val) / (delta * delta), (1.0 - c) * (1.0 - c)};
            const double excess = row.lhs - row.rhs;
            rep.worst_excess = std::max(rep.worst_excess, excess);
            if (row.rhs > 0.0)
                rep.max_ratio = std::max(rep.max_ratio, row.lhs / row.rhs);
            if (excess > slack)
                rep.passed = false;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

} // namespace kwc
