#pragma once

#include "kwc/grid.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kwc {

struct Rect {
    Point2 lo;
    Point2 hi;

    bool contains(Point2 p, double tol = 0.0) const
    {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol;
    }
};

struct Jump1D {
    double t;
    double xi_minus;
    double xi_plus;
};

/// A set-valued limit restricted to a line: [xi-, xi+] at the jumps, {1} elsewhere.
class SlicedLimit1D {
public:
    SlicedLimit1D(double t_lo, double t_hi, std::vector<Jump1D> jumps);

    double t_lo() const noexcept { return t_lo_; }
    double t_hi() const noexcept { return t_hi_; }
    const std::vector<Jump1D>& jumps() const noexcept { return jumps_; }

private:
    double t_lo_;
    double t_hi_;
    std::vector<Jump1D> jumps_;
};

struct Segment {
    Point2 a;
    Point2 b;
    double xi_minus = 1.0;
    double xi_plus = 1.0;

    double length() const { return norm(b - a); }
};

double point_segment_distance(Point2 p, Point2 a, Point2 b);
double segment_segment_distance(const Segment& s, const Segment& t);

/// Finite union of disjoint flat segments carrying constant interval values.
class Limit2D {
public:
    Limit2D(Rect domain, std::vector<Segment> segments);

    const Rect& domain() const noexcept { return domain_; }
    const std::vector<Segment>& segments() const noexcept { return segments_; }

    // One line per segment: "ax ay bx by xi_minus xi_plus"; an optional
    // "domain x0 y0 x1 y1" line sets the rectangle (default unit square).
    void write(std::ostream& os) const;
    static Limit2D read(std::istream& is);
    static Limit2D load(const std::string& path);

private:
    Rect domain_;
    std::vector<Segment> segments_;
};

struct SampledGraph {
    std::vector<Point2> points;  // (t, value)
    double resolution = 0.0;
};

/// Truncated countable dense set of directions with weights 2^-j.
class DirectionSet {
public:
    explicit DirectionSet(std::vector<Point2> directions);
    // nu_j = (cos j*phi, sin j*phi), phi the golden angle, j = 1..m.
    static DirectionSet golden_angle(std::size_t m);

    std::size_t size() const noexcept { return dirs_.size(); }
    Point2 operator[](std::size_t j) const { return dirs_[j]; }
    // Weight of the (j+1)-th direction: 2^-(j+1).
    double weight(std::size_t j) const;
    // Sum of weights beyond the truncation.
    double tail_bound() const;

private:
    std::vector<Point2> dirs_;
};

SlicedLimit1D slice_limit(const Limit2D& limit, Point2 nu, Point2 x);

SampledGraph graph_of_field(const GridField& v);
SampledGraph graph_of_limit(const SlicedLimit1D& sl, double resolution);

/// Exact Hausdorff distance between finite point sets.
double hausdorff(const SampledGraph& a, const SampledGraph& b);
double hausdorff(std::span<const Point2> a, std::span<const Point2> b);

// ---------------------------------------------------------------------------
// Sliced distances

/// Anything whose restriction to a line has a sampleable graph.
class SliceSource {
public:
    virtual ~SliceSource() = default;
    virtual int dims() const = 0;
    // Omega (for dims == 1 only lo.x, hi.x are used).
    virtual Rect domain() const = 0;
    // Graph of the restriction to the line x + t nu, t in the clipped range.
    virtual SampledGraph slice_graph(Point2 nu, Point2 x, double resolution) const = 0;
    // Whole graph, dims == 1 only.
    virtual SampledGraph graph(double resolution) const = 0;
};

std::unique_ptr<SliceSource> slices_of(const SlicedLimit1D& limit);
std::unique_ptr<SliceSource> slices_of(const Limit2D& limit);
// Linear / bilinear interpolation between nodes; 1D fields use their nodes directly.
std::unique_ptr<SliceSource> slices_of(const GridField& field);
std::unique_ptr<SliceSource> slices_of(std::function<double(Point2)> f, Rect domain);

// Parameter range of the line x + t nu inside the rectangle; empty if it misses.
bool clip_line(const Rect& r, Point2 nu, Point2 x, double& t_lo, double& t_hi);

/// Slice positions on the hyperplane orthogonal to nu: x = s * perp(nu).
struct SlicePlan {
    std::vector<double> offsets;
    double cell = 0.0;  // measure attached to each offset
};

// Midpoints of a uniform partition of the projected domain.
SlicePlan midpoint_plan(const Rect& domain, Point2 nu, std::size_t count);

struct SlicedDistance {
    double value = 0.0;
    std::size_t degenerate = 0;        // slices skipped as tangential
    std::vector<double> slice_dg;      // per-slice graph distance (NaN where skipped)
};

SlicedDistance d_nu(const SliceSource& g1, const SliceSource& g2, Point2 nu, const SlicePlan& plan,
                    double resolution);

struct DirectionalDistance {
    double value = 0.0;
    double tail_bound = 0.0;
    std::size_t degenerate = 0;
    std::vector<double> per_direction;  // d_nu for each direction
};

DirectionalDistance d_D(const SliceSource& g1, const SliceSource& g2, const DirectionSet& dirs,
                        std::size_t slices_per_direction, double resolution);

// ---------------------------------------------------------------------------
// Pixel sets

struct PixelMask {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<std::uint8_t> on;  // on[i * ny + j]

    PixelMask() = default;
    PixelMask(std::size_t nx_, std::size_t ny_) : nx(nx_), ny(ny_), on(nx_ * ny_, 0) {}
    bool get(std::size_t i, std::size_t j) const { return on[i * ny + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v = true) { on[i * ny + j] = v ? 1 : 0; }
    std::size_t count() const;

    // Plain PGM (P2) with maxval 1; rows are j descending so the image is upright.
    void write_pgm(std::ostream& os) const;
    static PixelMask read_pgm(std::istream& is);
};

/// Mark every pixel (cell of size h with lower corner `lower`) containing a point.
PixelMask rasterize(std::span<const Point2> pts, Point2 lower, double h, std::size_t nx, std::size_t ny);

/// Squared Euclidean distance (in pixels) from every pixel to the nearest set pixel.
std::vector<double> squared_distance_transform(const PixelMask& m);

/// Discrete essential Hausdorff distance between two pixel sets on the same grid.
double essential_hausdorff(const PixelMask& a, const PixelMask& b, double h);

} // namespace kwc
