#include "kwc/energy.hpp"

#include "kwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace kwc {

namespace {

void require_eps(double eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw InvalidArgument("epsilon must be positive");
}

void require_same(const GridField& a, const GridField& b, const char* what)
{
    if (!a.same_layout(b))
        throw InvalidArgument(std::string(what) + ": grid layouts differ");
}

double face_measure(const GridField& g) { return g.dims() == 1 ? 1.0 : g.spacing(); }

std::vector<bool> jump_mask(const GridField& u, const std::vector<Face>& fs, double thr)
{
    std::vector<bool> m(fs.size());
    for (std::size_t k = 0; k < fs.size(); ++k)
        m[k] = std::abs(u[fs[k].hi] - u[fs[k].lo]) > thr;
    return m;
}

} // namespace

void EnergyReport::write(std::ostream& os) const
{
    os.precision(17);
    os << "epsilon=" << epsilon << '\n'
       << "lambda=" << lambda << '\n'
       << "h=" << h << '\n'
       << "dirichlet=" << dirichlet << '\n'
       << "potential=" << potential << '\n'
       << "weighted_tv=" << weighted_tv << '\n'
       << "jump_term=" << jump_term << '\n'
       << "fidelity=" << fidelity << '\n'
       << "total=" << total << '\n';
}

std::string EnergyReport::csv_header()
{
    return "epsilon,lambda,h,dirichlet,potential,weighted_tv,jump_term,fidelity,total";
}

std::string EnergyReport::csv_row() const
{
    std::ostringstream os;
    os.precision(17);
    os << epsilon << ',' << lambda << ',' << h << ',' << dirichlet << ',' << potential << ','
       << weighted_tv << ',' << jump_term << ',' << fidelity << ',' << total;
    return os.str();
}

JumpTriplet JumpTriplet::points(std::vector<double> t, std::vector<double> sizes, WeightSpec weight)
{
    if (t.size() != sizes.size())
        throw InvalidArgument("jump triplet: one size per location");
    JumpTriplet out;
    out.dims = 1;
    out.weight = std::move(weight);
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!(sizes[k] >= 0.0))
            throw InvalidArgument("jump triplet: negative jump size");
        out.facets.push_back({{t[k], 0.0}, {t[k], 0.0}, sizes[k], 0.0, sizes[k], 1.0});
    }
    return out;
}

JumpTriplet JumpTriplet::segments(std::vector<Segment> segs, std::vector<double> sizes, WeightSpec weight)
{
    if (segs.size() != sizes.size())
        throw InvalidArgument("jump triplet: one size per location");
    JumpTriplet out;
    out.dims = 2;
    out.weight = std::move(weight);
    for (std::size_t k = 0; k < segs.size(); ++k) {
        if (!(sizes[k] >= 0.0))
            throw InvalidArgument("jump triplet: negative jump size");
        out.facets.push_back({segs[k].a, segs[k].b, sizes[k], 0.0, sizes[k], segs[k].length()});
    }
    return out;
}

EnergyReport e_sMM(const GridField& v, double eps, const PotentialSpec& pot)
{
    require_eps(eps);
    EnergyReport rep;
    rep.epsilon = eps;
    rep.h = v.spacing();
    const double h = v.spacing();
    const double cell = v.cell_measure();
    double grad = 0.0;
    for (const auto& f : faces(v)) {
        const double d = (v[f.hi] - v[f.lo]) / h;
        grad += d * d;
    }
    double well = 0.0;
    for (double x : v.values())
        well += pot(x);
    rep.dirichlet = 0.5 * eps * grad * cell;
    rep.potential = well * cell / (2.0 * eps);
    rep.sum();
    return rep;
}

std::vector<double> face_weights(const GridField& w)
{
    const auto fs = faces(w);
    std::vector<double> out(fs.size());
    for (std::size_t k = 0; k < fs.size(); ++k)
        out[k] = std::min(w[fs[k].lo], w[fs[k].hi]);
    return out;
}

double weighted_tv(const GridField& u, const GridField& w)
{
    require_same(u, w, "weighted_tv");
    const auto fs = faces(u);
    double sum = 0.0;
    for (const auto& f : fs) {
        const double wf = std::min(w[f.lo], w[f.hi]);
        if (wf < 0.0)
            throw InvalidArgument("weighted_tv: negative weight");
        sum += wf * std::abs(u[f.hi] - u[f.lo]);
    }
    return sum * face_measure(u);
}

double total_variation(const GridField& u)
{
    double sum = 0.0;
    for (const auto& f : faces(u))
        sum += std::abs(u[f.hi] - u[f.lo]);
    return sum * face_measure(u);
}

EnergyReport e_KWC(const GridField& u, const GridField& v, double eps, const PotentialSpec& pot,
                   const WeightSpec& weight)
{
    require_same(u, v, "e_KWC");
    EnergyReport rep = e_sMM(v, eps, pot);
    rep.weighted_tv = weighted_tv(u, v.map([&](double x) { return weight(x); }));
    rep.sum();
    return rep;
}

double e_sMM_J(const GridField& v, double eps, const PotentialSpec& pot, const JumpTriplet& triplet)
{
    double total = e_sMM(v, eps, pot).total;
    if (triplet.dims != v.dims())
        throw InvalidArgument("e_sMM_J: triplet and field dimensions differ");
    const Rect box{v.lower(), v.upper()};
    for (const auto& f : triplet.facets) {
        if (v.dims() == 1) {
            if (!(f.a.x >= box.lo.x && f.a.x <= box.hi.x))
                throw InvalidArgument("e_sMM_J: jump location outside the domain");
            total += triplet.weight(v.interpolate(f.a.x)) * f.size;
            continue;
        }
        if (!box.contains(f.a, 1e-12) || !box.contains(f.b, 1e-12))
            throw InvalidArgument("e_sMM_J: jump facet outside the domain");
        constexpr int nodes = 32;
        double acc = 0.0;
        for (int m = 0; m < nodes; ++m) {
            const double s = (m + 0.5) / nodes;
            acc += triplet.weight(v.interpolate(f.a + s * (f.b - f.a)));
        }
        total += acc / nodes * f.size * f.measure;
    }
    return total;
}

double e0_sMM(const SlicedLimit1D& limit, const PotentialSpec& pot)
{
    double sum = 0.0;
    for (const auto& j : limit.jumps())
        sum += G(pot, j.xi_minus) + G(pot, j.xi_plus);
    return 2.0 * sum;
}

double e0_sMM(const Limit2D& limit, const PotentialSpec& pot)
{
    double sum = 0.0;
    for (const auto& s : limit.segments())
        sum += (G(pot, s.xi_minus) + G(pot, s.xi_plus)) * s.length();
    return 2.0 * sum;
}

namespace {

// Minimum of alpha over the interval attached to the singular-set piece the
// facet lies on, or a negative value when the facet misses the singular set.
double matched_alpha(const SlicedLimit1D& limit, const JumpFacet& f, const WeightSpec& w, double tol)
{
    for (const auto& j : limit.jumps())
        if (std::abs(f.a.x - j.t) <= tol)
            return alpha_min(w, j.xi_minus, j.xi_plus).value;
    return -1.0;
}

double matched_alpha(const Limit2D& limit, const JumpFacet& f, const WeightSpec& w, double tol)
{
    const Segment facet{f.a, f.b};
    for (const auto& s : limit.segments()) {
        const double d = facet.length() > 0.0 ? segment_segment_distance(facet, s)
                                              : point_segment_distance(f.a, s.a, s.b);
        if (d <= tol)
            return alpha_min(w, s.xi_minus, s.xi_plus).value;
    }
    return -1.0;
}

template <class Limit>
double e0_sMM_J_impl(const Limit& limit, const JumpTriplet& triplet, const PotentialSpec& pot, double tol)
{
    double total = e0_sMM(limit, pot);
    for (const auto& f : triplet.facets) {
        const double a0 = matched_alpha(limit, f, triplet.weight, tol);
        if (a0 >= 0.0)
            total += a0 * f.size * f.measure;
    }
    return total;
}

template <class Limit>
EnergyReport e0_KWC_impl(const GridField& u, const Limit& limit, const PotentialSpec& pot,
                         const WeightSpec& weight, double thr)
{
    if (!(thr > 0.0))
        throw InvalidArgument("jump threshold must be positive");
    EnergyReport rep;
    rep.h = u.spacing();
    const auto fs = faces(u);
    const auto jm = jump_mask(u, fs, thr);
    double tv = 0.0;
    for (std::size_t k = 0; k < fs.size(); ++k)
        if (!jm[k])
            tv += std::abs(u[fs[k].hi] - u[fs[k].lo]);
    const double alpha1 = weight(1.0);
    rep.weighted_tv = alpha1 * tv * face_measure(u);
    rep.potential = e0_sMM(limit, pot);

    const auto jumps = approximate_jumps(u, thr);
    const double tol = 0.5 * u.spacing() * (1.0 + 1e-9);
    for (const auto& f : jumps.facets) {
        const double a0 = matched_alpha(limit, f, weight, tol);
        rep.jump_term += (a0 >= 0.0 ? a0 : alpha1) * f.size * f.measure;
    }
    rep.sum();
    return rep;
}

} // namespace

double e0_sMM_J(const SlicedLimit1D& limit, const JumpTriplet& triplet, const PotentialSpec& pot,
                double match_tol)
{
    return e0_sMM_J_impl(limit, triplet, pot, match_tol);
}

double e0_sMM_J(const Limit2D& limit, const JumpTriplet& triplet, const PotentialSpec& pot, double match_tol)
{
    return e0_sMM_J_impl(limit, triplet, pot, match_tol);
}

double default_jump_threshold(const GridField& u)
{
    const auto fs = faces(u);
    std::vector<double> d(fs.size());
    for (std::size_t k = 0; k < fs.size(); ++k)
        d[k] = std::abs(u[fs[k].hi] - u[fs[k].lo]);
    double median = 0.0;
    if (!d.empty()) {
        auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
        std::nth_element(d.begin(), mid, d.end());
        median = *mid;
    }
    const auto [lo, hi] = std::minmax_element(u.values().begin(), u.values().end());
    return std::max({10.0 * median, 0.05 * (*hi - *lo), std::numeric_limits<double>::min()});
}

JumpTriplet approximate_jumps(const GridField& u, double thr)
{
    if (!(thr > 0.0))
        throw InvalidArgument("jump threshold must be positive");
    JumpTriplet out;
    out.dims = u.dims();
    const double h = u.spacing();
    const Point2 lo = u.lower(), hi = u.upper();
    const std::size_t ny = u.shape()[1];
    for (const auto& f : faces(u)) {
        const double um = u[f.lo], up = u[f.hi];
        if (!(std::abs(up - um) > thr))
            continue;
        JumpFacet jf;
        jf.u_minus = um;
        jf.u_plus = up;
        jf.size = std::abs(up - um);
        if (u.dims() == 1) {
            const double t = u.coord(0, f.lo) + 0.5 * h;
            jf.a = jf.b = {t, 0.0};
            jf.measure = 1.0;
        } else {
            const Point2 p = u.node(f.lo / ny, f.lo % ny);
            if (f.axis == 0) {
                const double x = p.x + 0.5 * h;
                jf.a = {x, std::max(lo.y, p.y - 0.5 * h)};
                jf.b = {x, std::min(hi.y, p.y + 0.5 * h)};
            } else {
                const double y = p.y + 0.5 * h;
                jf.a = {std::max(lo.x, p.x - 0.5 * h), y};
                jf.b = {std::min(hi.x, p.x + 0.5 * h), y};
            }
            jf.measure = h;
        }
        out.facets.push_back(jf);
    }
    return out;
}

EnergyReport e0_KWC(const GridField& u, const SlicedLimit1D& limit, const PotentialSpec& pot,
                    const WeightSpec& weight, double thr)
{
    if (u.dims() != 1)
        throw InvalidArgument("e0_KWC: 1D limit needs a 1D field");
    return e0_KWC_impl(u, limit, pot, weight, thr);
}

EnergyReport e0_KWC(const GridField& u, const Limit2D& limit, const PotentialSpec& pot,
                    const WeightSpec& weight, double thr)
{
    if (u.dims() != 2)
        throw InvalidArgument("e0_KWC: 2D limit needs a 2D field");
    return e0_KWC_impl(u, limit, pot, weight, thr);
}

double tv_KWC(const GridField& u, const PotentialSpec& pot, const WeightSpec& weight, double thr)
{
    if (!(thr > 0.0))
        throw InvalidArgument("jump threshold must be positive");
    const auto fs = faces(u);
    const auto jm = jump_mask(u, fs, thr);
    double smooth = 0.0;
    for (std::size_t k = 0; k < fs.size(); ++k)
        if (!jm[k])
            smooth += std::abs(u[fs[k].hi] - u[fs[k].lo]);
    double total = weight(1.0) * smooth * face_measure(u);
    const auto jumps = approximate_jumps(u, thr);
    if (!jumps.facets.empty()) {
        const JumpCostTable table(weight, pot);
        for (const auto& f : jumps.facets)
            total += table.evaluate(f.size).value * f.measure;
    }
    return total;
}

double fidelity(const GridField& u, const GridField& f, double lambda)
{
    require_same(u, f, "fidelity");
    if (!(lambda >= 0.0))
        throw InvalidArgument("fidelity: lambda must be non-negative");
    double sum = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = u[k] - f[k];
        sum += d * d;
    }
    return 0.5 * lambda * sum * u.cell_measure();
}

} // namespace kwc
