#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kwc {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 a);

/// Uniform-grid scalar samples on an interval (dims = 1) or rectangle (dims = 2).
///
/// Nodes sit at origin + i * spacing along each axis. Values are stored
/// row-major with axis 1 (y) fastest: index(i, j) = i * shape[1] + j.
class GridField {
public:
    GridField() = default;
    static GridField line(std::size_t n, double spacing, double origin, double fill = 0.0);
    static GridField plane(std::size_t nx, std::size_t ny, double spacing, Point2 origin,
                           double fill = 0.0);
    // Grid spanning [lo, hi] with n nodes.
    static GridField over_interval(double lo, double hi, std::size_t n, double fill = 0.0);
    // Square-cell grid spanning [x0, x1] with nx nodes; ny follows from the spacing.
    static GridField over_rectangle(Point2 lo, Point2 hi, std::size_t nx, double fill = 0.0);

    int dims() const noexcept { return dims_; }
    const std::array<std::size_t, 2>& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }
    double spacing() const noexcept { return h_; }
    Point2 origin() const noexcept { return origin_; }
    // Lower and upper corners of the closed node box.
    Point2 lower() const noexcept { return origin_; }
    Point2 upper() const;
    // h^N, the cell measure attached to each node.
    double cell_measure() const noexcept { return dims_ == 1 ? h_ : h_ * h_; }

    double coord(int axis, std::size_t i) const
    {
        return (axis == 0 ? origin_.x : origin_.y) + h_ * static_cast<double>(i);
    }
    Point2 node(std::size_t i, std::size_t j) const { return {coord(0, i), coord(1, j)}; }
    std::size_t index(std::size_t i, std::size_t j) const { return i * shape_[1] + j; }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& at(std::size_t i, std::size_t j) { return values_[index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool same_layout(const GridField& other) const noexcept;

    // Linear (1D) or bilinear (2D) interpolation, clamped to the node box.
    double interpolate(double t) const;
    double interpolate(Point2 p) const;

    template <class F>
    GridField map(F&& f) const
    {
        GridField out = *this;
        for (auto& v : out.values_)
            v = f(v);
        return out;
    }

    void write(std::ostream& os) const;
    static GridField read(std::istream& is);
    void save(const std::string& path) const;
    static GridField load(const std::string& path);

private:
    int dims_ = 1;
    std::array<std::size_t, 2> shape_{0, 1};
    double h_ = 1.0;
    Point2 origin_{};
    std::vector<double> values_;
};

/// One face between two neighbouring nodes.
struct Face {
    std::size_t lo;  // node index on the low side
    std::size_t hi;  // node index on the high side
    int axis;
};

// All faces of the grid, axis 0 first, in a fixed order.
std::vector<Face> faces(const GridField& g);

} // namespace kwc
