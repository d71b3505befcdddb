#include "kwc/setvalued.hpp"

#include "kwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

namespace kwc {

namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using BPoint = bg::model::point<double, 2, bg::cs::cartesian>;

constexpr std::size_t kIndexThreshold = 10000;

Point2 perp(Point2 nu) { return {-nu.y, nu.x}; }

double directed_brute(std::span<const Point2> a, std::span<const Point2> b)
{
    double worst = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) {
            const double d = std::hypot(p.x - q.x, p.y - q.y);
            if (d < best) {
                best = d;
                if (best <= worst)
                    break;
            }
        }
        worst = std::max(worst, best);
    }
    return worst;
}

double directed_indexed(std::span<const Point2> a, std::span<const Point2> b)
{
    std::vector<std::pair<BPoint, std::size_t>> entries;
    entries.reserve(b.size());
    for (std::size_t k = 0; k < b.size(); ++k)
        entries.emplace_back(BPoint(b[k].x, b[k].y), k);
    bgi::rtree<std::pair<BPoint, std::size_t>, bgi::rstar<16>> tree(entries.begin(), entries.end());
    double worst = 0.0;
    std::vector<std::pair<BPoint, std::size_t>> hit;
    for (const auto& p : a) {
        hit.clear();
        tree.query(bgi::nearest(BPoint(p.x, p.y), 1), std::back_inserter(hit));
        const Point2 q = b[hit.front().second];
        worst = std::max(worst, std::hypot(p.x - q.x, p.y - q.y));
    }
    return worst;
}

double directed(std::span<const Point2> a, std::span<const Point2> b)
{
    if (std::max(a.size(), b.size()) > kIndexThreshold)
        return directed_indexed(a, b);
    return directed_brute(a, b);
}

} // namespace

// ---------------------------------------------------------------------------

SlicedLimit1D::SlicedLimit1D(double t_lo, double t_hi, std::vector<Jump1D> jumps)
    : t_lo_(t_lo), t_hi_(t_hi), jumps_(std::move(jumps))
{
    if (!(t_hi > t_lo))
        throw InvalidArgument("SlicedLimit1D: empty domain");
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
        const auto& j = jumps_[k];
        if (!(j.t > t_lo && j.t < t_hi))
            throw InvalidArgument("SlicedLimit1D: jump outside the open domain");
        if (k > 0 && !(j.t > jumps_[k - 1].t))
            throw InvalidArgument("SlicedLimit1D: jump positions must increase strictly");
        if (!(j.xi_minus <= 1.0 && 1.0 <= j.xi_plus))
            throw InvalidArgument("SlicedLimit1D: need xi_minus <= 1 <= xi_plus");
    }
}

double point_segment_distance(Point2 p, Point2 a, Point2 b)
{
    const Point2 d = b - a;
    const double len2 = dot(d, d);
    double s = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return norm(p - (a + s * d));
}

double segment_segment_distance(const Segment& s, const Segment& t)
{
    const Point2 d1 = s.b - s.a, d2 = t.b - t.a;
    const double c1 = cross(d1, t.a - s.a), c2 = cross(d1, t.b - s.a);
    const double c3 = cross(d2, s.a - t.a), c4 = cross(d2, s.b - t.a);
    if (((c1 > 0 && c2 < 0) || (c1 < 0 && c2 > 0)) && ((c3 > 0 && c4 < 0) || (c3 < 0 && c4 > 0)))
        return 0.0;
    return std::min({point_segment_distance(s.a, t.a, t.b), point_segment_distance(s.b, t.a, t.b),
                     point_segment_distance(t.a, s.a, s.b), point_segment_distance(t.b, s.a, s.b)});
}

Limit2D::Limit2D(Rect domain, std::vector<Segment> segments)
    : domain_(domain), segments_(std::move(segments))
{
    if (!(domain_.hi.x > domain_.lo.x) || !(domain_.hi.y > domain_.lo.y))
        throw InvalidArgument("Limit2D: empty domain");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(s.length() > 0.0))
            throw InvalidArgument("Limit2D: zero-length segment");
        if (!domain_.contains(s.a, 1e-12) || !domain_.contains(s.b, 1e-12))
            throw InvalidArgument("Limit2D: segment leaves the domain");
        if (!(s.xi_minus <= 1.0 && 1.0 <= s.xi_plus))
            throw InvalidArgument("Limit2D: need xi_minus <= 1 <= xi_plus");
        for (std::size_t j = 0; j < i; ++j)
            if (!(segment_segment_distance(s, segments_[j]) > 0.0))
                throw InvalidArgument("Limit2D: segments " + std::to_string(j) + " and " +
                                      std::to_string(i) + " touch");
    }
}

void Limit2D::write(std::ostream& os) const
{
    os.precision(17);
    os << "domain " << domain_.lo.x << ' ' << domain_.lo.y << ' ' << domain_.hi.x << ' '
       << domain_.hi.y << '\n';
    for (const auto& s : segments_)
        os << s.a.x << ' ' << s.a.y << ' ' << s.b.x << ' ' << s.b.y << ' ' << s.xi_minus << ' '
           << s.xi_plus << '\n';
}

Limit2D Limit2D::read(std::istream& is)
{
    Rect domain{{0.0, 0.0}, {1.0, 1.0}};
    std::vector<Segment> segs;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first))
            continue;
        if (first == "domain") {
            if (!(ss >> domain.lo.x >> domain.lo.y >> domain.hi.x >> domain.hi.y))
                throw InvalidArgument("segment list: malformed domain line");
            continue;
        }
        Segment s;
        std::istringstream full(line);
        if (!(full >> s.a.x >> s.a.y >> s.b.x >> s.b.y >> s.xi_minus >> s.xi_plus))
            throw InvalidArgument("segment list: expected 'ax ay bx by xi_minus xi_plus': " + line);
        segs.push_back(s);
    }
    return Limit2D(domain, std::move(segs));
}

Limit2D Limit2D::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open " + path);
    return read(in);
}

DirectionSet::DirectionSet(std::vector<Point2> directions) : dirs_(std::move(directions))
{
    if (dirs_.empty())
        throw InvalidArgument("DirectionSet: empty");
    for (const auto& d : dirs_)
        if (std::abs(norm(d) - 1.0) > 1e-12)
            throw InvalidArgument("DirectionSet: directions must be unit vectors");
}

DirectionSet DirectionSet::golden_angle(std::size_t m)
{
    const double phi = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Point2> d;
    for (std::size_t j = 1; j <= m; ++j) {
        const double th = phi * static_cast<double>(j);
        d.push_back({std::cos(th), std::sin(th)});
    }
    return DirectionSet(std::move(d));
}

double DirectionSet::weight(std::size_t j) const { return std::ldexp(1.0, -static_cast<int>(j + 1)); }

double DirectionSet::tail_bound() const { return std::ldexp(1.0, -static_cast<int>(dirs_.size())); }

// ---------------------------------------------------------------------------

bool clip_line(const Rect& r, Point2 nu, Point2 x, double& t_lo, double& t_hi)
{
    t_lo = -std::numeric_limits<double>::infinity();
    t_hi = std::numeric_limits<double>::infinity();
    auto axis = [&](double p, double d, double lo, double hi) {
        if (std::abs(d) < 1e-15)
            return p >= lo && p <= hi;
        double a = (lo - p) / d, b = (hi - p) / d;
        if (a > b)
            std::swap(a, b);
        t_lo = std::max(t_lo, a);
        t_hi = std::min(t_hi, b);
        return true;
    };
    if (!axis(x.x, nu.x, r.lo.x, r.hi.x) || !axis(x.y, nu.y, r.lo.y, r.hi.y))
        return false;
    return t_hi > t_lo;
}

SlicedLimit1D slice_limit(const Limit2D& limit, Point2 nu, Point2 x)
{
    if (std::abs(norm(nu) - 1.0) > 1e-12)
        throw InvalidArgument("slice_limit: nu must be a unit vector");
    if (std::abs(dot(x, nu)) > 1e-12 * std::max(1.0, norm(x)))
        throw InvalidArgument("slice_limit: x must lie on the hyperplane orthogonal to nu");
    double t_lo = 0.0, t_hi = 0.0;
    if (!clip_line(limit.domain(), nu, x, t_lo, t_hi))
        throw InvalidArgument("slice_limit: line misses the domain");

    std::vector<Jump1D> jumps;
    for (const auto& s : limit.segments()) {
        const Point2 d = s.b - s.a;
        const Point2 w = s.a - x;
        const double den = cross(d, nu);
        if (std::abs(den) <= 1e-12 * norm(d)) {
            if (std::abs(cross(w, nu)) <= 1e-12 * std::max(1.0, norm(w)))
                throw DegenerateSlice("slice runs along a segment");
            continue;
        }
        const double sp = -cross(w, nu) / den;
        if (sp < -1e-14 || sp > 1.0 + 1e-14)
            continue;
        const double t = cross(w, d) / cross(nu, d);
        if (t > t_lo && t < t_hi)
            jumps.push_back({t, s.xi_minus, s.xi_plus});
    }
    std::sort(jumps.begin(), jumps.end(), [](const Jump1D& a, const Jump1D& b) { return a.t < b.t; });
    return SlicedLimit1D(t_lo, t_hi, std::move(jumps));
}

SampledGraph graph_of_field(const GridField& v)
{
    if (v.dims() != 1 || v.size() < 2)
        throw InvalidArgument("graph_of_field: need a 1D field with >= 2 samples");
    SampledGraph g;
    g.resolution = v.spacing();
    g.points.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        g.points.push_back({v.coord(0, i), v[i]});
    return g;
}

SampledGraph graph_of_limit(const SlicedLimit1D& sl, double resolution)
{
    if (!(resolution > 0.0))
        throw InvalidArgument("graph_of_limit: resolution must be positive");
    SampledGraph g;
    g.resolution = resolution;
    const double len = sl.t_hi() - sl.t_lo();
    const auto n = static_cast<std::size_t>(std::ceil(len / resolution)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = i + 1 == n ? sl.t_hi() : sl.t_lo() + len * static_cast<double>(i) / (n - 1);
        g.points.push_back({t, 1.0});
    }
    for (const auto& j : sl.jumps()) {
        g.points.push_back({j.t, 1.0});
        const double span = j.xi_plus - j.xi_minus;
        const auto m = static_cast<std::size_t>(std::ceil(span / resolution));
        for (std::size_t k = 0; k <= m && span > 0.0; ++k) {
            const double y = k == m ? j.xi_plus : j.xi_minus + span * static_cast<double>(k) / m;
            g.points.push_back({j.t, y});
        }
    }
    std::sort(g.points.begin(), g.points.end(),
              [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    g.points.erase(std::unique(g.points.begin(), g.points.end(),
                               [](Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }),
                   g.points.end());
    return g;
}

double hausdorff(std::span<const Point2> a, std::span<const Point2> b)
{
    if (a.empty() || b.empty())
        throw InvalidArgument("hausdorff: empty point set");
    return std::max(directed(a, b), directed(b, a));
}

double hausdorff(const SampledGraph& a, const SampledGraph& b) { return hausdorff(a.points, b.points); }

// ---------------------------------------------------------------------------

namespace {

class Limit1DSource final : public SliceSource {
public:
    explicit Limit1DSource(SlicedLimit1D l) : l_(std::move(l)) {}
    int dims() const override { return 1; }
    Rect domain() const override { return {{l_.t_lo(), 0.0}, {l_.t_hi(), 0.0}}; }
    SampledGraph slice_graph(Point2, Point2, double) const override
    {
        throw InvalidArgument("1D limit has no line slices");
    }
    SampledGraph graph(double resolution) const override { return graph_of_limit(l_, resolution); }

private:
    SlicedLimit1D l_;
};

class Limit2DSource final : public SliceSource {
public:
    explicit Limit2DSource(Limit2D l) : l_(std::move(l)) {}
    int dims() const override { return 2; }
    Rect domain() const override { return l_.domain(); }
    SampledGraph slice_graph(Point2 nu, Point2 x, double resolution) const override
    {
        return graph_of_limit(slice_limit(l_, nu, x), resolution);
    }
    SampledGraph graph(double) const override { throw InvalidArgument("2D limit needs a slice"); }

private:
    Limit2D l_;
};

class FunctionSource final : public SliceSource {
public:
    FunctionSource(std::function<double(Point2)> f, Rect domain) : f_(std::move(f)), dom_(domain) {}
    int dims() const override { return 2; }
    Rect domain() const override { return dom_; }
    SampledGraph slice_graph(Point2 nu, Point2 x, double resolution) const override
    {
        double t0 = 0.0, t1 = 0.0;
        if (!clip_line(dom_, nu, x, t0, t1))
            throw InvalidArgument("slice misses the domain");
        const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil((t1 - t0) / resolution)) + 1);
        SampledGraph g;
        g.resolution = (t1 - t0) / static_cast<double>(n - 1);
        g.points.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = i + 1 == n ? t1 : t0 + g.resolution * static_cast<double>(i);
            g.points.push_back({t, f_(x + t * nu)});
        }
        return g;
    }
    SampledGraph graph(double) const override { throw InvalidArgument("2D source needs a slice"); }

private:
    std::function<double(Point2)> f_;
    Rect dom_;
};

class FieldSource final : public SliceSource {
public:
    explicit FieldSource(GridField f) : f_(std::move(f)) {}
    int dims() const override { return f_.dims(); }
    Rect domain() const override { return {f_.lower(), f_.upper()}; }
    SampledGraph slice_graph(Point2 nu, Point2 x, double resolution) const override
    {
        if (f_.dims() != 2)
            throw InvalidArgument("1D field has no line slices");
        FunctionSource fs([this](Point2 p) { return f_.interpolate(p); }, domain());
        return fs.slice_graph(nu, x, resolution);
    }
    SampledGraph graph(double) const override
    {
        if (f_.dims() != 1)
            throw InvalidArgument("2D field needs a slice");
        return graph_of_field(f_);
    }

private:
    GridField f_;
};

} // namespace

std::unique_ptr<SliceSource> slices_of(const SlicedLimit1D& limit) { return std::make_unique<Limit1DSource>(limit); }
std::unique_ptr<SliceSource> slices_of(const Limit2D& limit) { return std::make_unique<Limit2DSource>(limit); }
std::unique_ptr<SliceSource> slices_of(const GridField& field) { return std::make_unique<FieldSource>(field); }
std::unique_ptr<SliceSource> slices_of(std::function<double(Point2)> f, Rect domain)
{
    return std::make_unique<FunctionSource>(std::move(f), domain);
}

SlicePlan midpoint_plan(const Rect& domain, Point2 nu, std::size_t count)
{
    if (count == 0)
        throw InvalidArgument("midpoint_plan: need at least one slice");
    const Point2 p = perp(nu);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Point2 c : {domain.lo, domain.hi, Point2{domain.lo.x, domain.hi.y}, Point2{domain.hi.x, domain.lo.y}}) {
        const double s = dot(c, p);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    SlicePlan plan;
    plan.cell = (hi - lo) / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k)
        plan.offsets.push_back(lo + (static_cast<double>(k) + 0.5) * plan.cell);
    return plan;
}

SlicedDistance d_nu(const SliceSource& g1, const SliceSource& g2, Point2 nu, const SlicePlan& plan,
                    double resolution)
{
    if (!(resolution > 0.0))
        throw InvalidArgument("d_nu: resolution must be positive");
    if (g1.dims() != g2.dims())
        throw InvalidArgument("d_nu: dimension mismatch");
    SlicedDistance out;
    if (g1.dims() == 1) {
        const double d = hausdorff(g1.graph(resolution), g2.graph(resolution));
        out.slice_dg.push_back(d);
        out.value = d / (1.0 + d);
        return out;
    }
    if (std::abs(norm(nu) - 1.0) > 1e-12)
        throw InvalidArgument("d_nu: nu must be a unit vector");
    const Point2 p = perp(nu);
    const Rect dom = g1.domain();
    for (double s : plan.offsets) {
        const Point2 x = s * p;
        double t0 = 0.0, t1 = 0.0;
        if (!clip_line(dom, nu, x, t0, t1))
            throw InvalidArgument("d_nu: slice position outside the projected domain");
        try {
            const double d = hausdorff(g1.slice_graph(nu, x, resolution), g2.slice_graph(nu, x, resolution));
            out.slice_dg.push_back(d);
            out.value += plan.cell * d / (1.0 + d);
        } catch (const DegenerateSlice&) {
            out.slice_dg.push_back(std::numeric_limits<double>::quiet_NaN());
            ++out.degenerate;
        }
    }
    return out;
}

DirectionalDistance d_D(const SliceSource& g1, const SliceSource& g2, const DirectionSet& dirs,
                        std::size_t slices_per_direction, double resolution)
{
    DirectionalDistance out;
    out.tail_bound = dirs.tail_bound();
    for (std::size_t j = 0; j < dirs.size(); ++j) {
        const auto plan = midpoint_plan(g1.domain(), dirs[j], slices_per_direction);
        const auto dn = d_nu(g1, g2, dirs[j], plan, resolution);
        out.per_direction.push_back(dn.value);
        out.degenerate += dn.degenerate;
        out.value += dirs.weight(j) * dn.value / (1.0 + dn.value);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::size_t PixelMask::count() const
{
    return static_cast<std::size_t>(std::count(on.begin(), on.end(), std::uint8_t{1}));
}

void PixelMask::write_pgm(std::ostream& os) const
{
    os << "P2\n" << nx << ' ' << ny << "\n1\n";
    for (std::size_t r = 0; r < ny; ++r) {
        const std::size_t j = ny - 1 - r;
        for (std::size_t i = 0; i < nx; ++i)
            os << (get(i, j) ? 1 : 0) << (i + 1 == nx ? '\n' : ' ');
    }
}

PixelMask PixelMask::read_pgm(std::istream& is)
{
    auto next = [&is]() {
        std::string tok;
        while (is >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(is, rest);
                continue;
            }
            return tok;
        }
        throw InvalidArgument("PGM mask: truncated");
    };
    if (next() != "P2")
        throw InvalidArgument("PGM mask: expected P2 header");
    const auto nx = std::stoul(next());
    const auto ny = std::stoul(next());
    const auto maxval = std::stoul(next());
    if (nx == 0 || ny == 0 || maxval == 0)
        throw InvalidArgument("PGM mask: bad dimensions");
    PixelMask m(nx, ny);
    for (std::size_t r = 0; r < ny; ++r)
        for (std::size_t i = 0; i < nx; ++i)
            m.set(i, ny - 1 - r, std::stoul(next()) > 0);
    return m;
}

PixelMask rasterize(std::span<const Point2> pts, Point2 lower, double h, std::size_t nx, std::size_t ny)
{
    PixelMask m(nx, ny);
    for (const auto& p : pts) {
        const double fx = std::floor((p.x - lower.x) / h);
        const double fy = std::floor((p.y - lower.y) / h);
        if (fx < 0 || fy < 0 || fx >= static_cast<double>(nx) || fy >= static_cast<double>(ny))
            continue;
        m.set(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy));
    }
    return m;
}

namespace {

// One-dimensional lower envelope of parabolas. Unset pixels carry a large
// finite value so the envelope never mixes infinities.
void edt_1d(const double* f, double* d, std::size_t n, std::vector<std::size_t>& v, std::vector<double>& z)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    std::size_t k = 0;
    z[0] = -inf;
    z[1] = inf;
    for (std::size_t q = 1; q < n; ++q) {
        const auto qd = static_cast<double>(q);
        double s = 0.0;
        for (;;) {
            const auto vk = static_cast<double>(v[k]);
            s = ((f[q] + qd * qd) - (f[v[k]] + vk * vk)) / (2.0 * qd - 2.0 * vk);
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const auto qd = static_cast<double>(q);
        while (z[k + 1] < qd)
            ++k;
        const auto vk = static_cast<double>(v[k]);
        d[q] = (qd - vk) * (qd - vk) + f[v[k]];
    }
}

} // namespace

std::vector<double> squared_distance_transform(const PixelMask& m)
{
    constexpr double far = 1e20;
    std::vector<double> d(m.nx * m.ny);
    for (std::size_t k = 0; k < d.size(); ++k)
        d[k] = m.on[k] ? 0.0 : far;
    std::vector<std::size_t> v;
    std::vector<double> z;
    std::vector<double> in(std::max(m.nx, m.ny)), out(std::max(m.nx, m.ny));
    // Along j (contiguous), then along i.
    for (std::size_t i = 0; i < m.nx; ++i) {
        std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(i * m.ny), m.ny, in.begin());
        edt_1d(in.data(), out.data(), m.ny, v, z);
        std::copy_n(out.begin(), m.ny, d.begin() + static_cast<std::ptrdiff_t>(i * m.ny));
    }
    for (std::size_t j = 0; j < m.ny; ++j) {
        for (std::size_t i = 0; i < m.nx; ++i)
            in[i] = d[i * m.ny + j];
        edt_1d(in.data(), out.data(), m.nx, v, z);
        for (std::size_t i = 0; i < m.nx; ++i)
            d[i * m.ny + j] = out[i];
    }
    return d;
}

double essential_hausdorff(const PixelMask& a, const PixelMask& b, double h)
{
    if (a.nx != b.nx || a.ny != b.ny)
        throw InvalidArgument("essential_hausdorff: masks live on different grids");
    if (a.count() == 0 || b.count() == 0)
        throw InvalidArgument("essential_hausdorff: empty pixel set");
    if (!(h > 0.0))
        throw InvalidArgument("essential_hausdorff: spacing must be positive");
    auto directed_e = [](const PixelMask& from, const PixelMask& to) {
        const auto dt = squared_distance_transform(to);
        double worst = 0.0;
        for (std::size_t k = 0; k < from.on.size(); ++k)
            if (from.on[k])
                worst = std::max(worst, std::ceil(std::sqrt(dt[k]) - 1e-12));
        return worst;
    };
    return h * std::max(directed_e(a, b), directed_e(b, a));
}

} // namespace kwc
