#include "kwc/grid.hpp"

#include "kwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace kwc {

double norm(Point2 a) { return std::hypot(a.x, a.y); }

GridField GridField::line(std::size_t n, double spacing, double origin, double fill)
{
    if (n < 2 || !(spacing > 0.0))
        throw InvalidArgument("GridField: need >= 2 nodes and positive spacing");
    GridField g;
    g.dims_ = 1;
    g.shape_ = {n, 1};
    g.h_ = spacing;
    g.origin_ = {origin, 0.0};
    g.values_.assign(n, fill);
    return g;
}

GridField GridField::plane(std::size_t nx, std::size_t ny, double spacing, Point2 origin, double fill)
{
    if (nx < 2 || ny < 2 || !(spacing > 0.0))
        throw InvalidArgument("GridField: need >= 2 nodes per axis and positive spacing");
    GridField g;
    g.dims_ = 2;
    g.shape_ = {nx, ny};
    g.h_ = spacing;
    g.origin_ = origin;
    g.values_.assign(nx * ny, fill);
    return g;
}

GridField GridField::over_interval(double lo, double hi, std::size_t n, double fill)
{
    if (!(hi > lo) || n < 2)
        throw InvalidArgument("GridField: bad interval");
    return line(n, (hi - lo) / static_cast<double>(n - 1), lo, fill);
}

GridField GridField::over_rectangle(Point2 lo, Point2 hi, std::size_t nx, double fill)
{
    if (!(hi.x > lo.x) || !(hi.y > lo.y) || nx < 2)
        throw InvalidArgument("GridField: bad rectangle");
    const double h = (hi.x - lo.x) / static_cast<double>(nx - 1);
    const auto ny = static_cast<std::size_t>(std::llround((hi.y - lo.y) / h)) + 1;
    return plane(nx, std::max<std::size_t>(ny, 2), h, lo, fill);
}

Point2 GridField::upper() const
{
    return {coord(0, shape_[0] - 1), dims_ == 2 ? coord(1, shape_[1] - 1) : origin_.y};
}

bool GridField::same_layout(const GridField& o) const noexcept
{
    return dims_ == o.dims_ && shape_ == o.shape_ && h_ == o.h_ && origin_.x == o.origin_.x &&
           origin_.y == o.origin_.y;
}

double GridField::interpolate(double t) const
{
    const double s = std::clamp((t - origin_.x) / h_, 0.0, static_cast<double>(shape_[0] - 1));
    const auto i = std::min(static_cast<std::size_t>(s), shape_[0] - 2);
    const double w = s - static_cast<double>(i);
    if (dims_ == 1)
        return (1.0 - w) * values_[i] + w * values_[i + 1];
    return interpolate(Point2{t, origin_.y});
}

double GridField::interpolate(Point2 p) const
{
    if (dims_ == 1)
        return interpolate(p.x);
    const double sx = std::clamp((p.x - origin_.x) / h_, 0.0, static_cast<double>(shape_[0] - 1));
    const double sy = std::clamp((p.y - origin_.y) / h_, 0.0, static_cast<double>(shape_[1] - 1));
    const auto i = std::min(static_cast<std::size_t>(sx), shape_[0] - 2);
    const auto j = std::min(static_cast<std::size_t>(sy), shape_[1] - 2);
    const double wx = sx - static_cast<double>(i);
    const double wy = sy - static_cast<double>(j);
    return (1.0 - wx) * ((1.0 - wy) * at(i, j) + wy * at(i, j + 1)) +
           wx * ((1.0 - wy) * at(i + 1, j) + wy * at(i + 1, j + 1));
}

void GridField::write(std::ostream& os) const
{
    os << std::setprecision(17);
    os << dims_ << ' ' << shape_[0];
    if (dims_ == 2)
        os << ' ' << shape_[1];
    os << ' ' << h_ << ' ' << origin_.x;
    if (dims_ == 2)
        os << ' ' << origin_.y;
    os << '\n';
    const std::size_t row = dims_ == 2 ? shape_[1] : shape_[0];
    for (std::size_t k = 0; k < values_.size(); ++k)
        os << values_[k] << ((k + 1) % row == 0 ? '\n' : ' ');
}

GridField GridField::read(std::istream& is)
{
    std::string line;
    std::string header;
    while (std::getline(is, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        header = line;
        break;
    }
    std::istringstream hs(header);
    int dims = 0;
    if (!(hs >> dims) || (dims != 1 && dims != 2))
        throw InvalidArgument("grid field header: dims must be 1 or 2");
    std::size_t n0 = 0, n1 = 1;
    double h = 0.0, o0 = 0.0, o1 = 0.0;
    hs >> n0;
    if (dims == 2)
        hs >> n1;
    hs >> h >> o0;
    if (dims == 2)
        hs >> o1;
    if (!hs)
        throw InvalidArgument("grid field header malformed: " + header);
    GridField g = dims == 1 ? GridField::line(n0, h, o0) : GridField::plane(n0, n1, h, {o0, o1});
    for (auto& v : g.values_) {
        if (!(is >> v))
            throw InvalidArgument("grid field: fewer values than the header announces");
        if (!std::isfinite(v))
            throw InvalidArgument("grid field: non-finite value");
    }
    return g;
}

void GridField::save(const std::string& path) const
{
    std::ofstream out(path);
    if (!out)
        throw InvalidArgument("cannot write " + path);
    write(out);
}

GridField GridField::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open " + path);
    return read(in);
}

std::vector<Face> faces(const GridField& g)
{
    std::vector<Face> out;
    const auto [nx, ny] = g.shape();
    if (g.dims() == 1) {
        out.reserve(nx - 1);
        for (std::size_t i = 0; i + 1 < nx; ++i)
            out.push_back({i, i + 1, 0});
        return out;
    }
    out.reserve((nx - 1) * ny + nx * (ny - 1));
    for (std::size_t i = 0; i + 1 < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            out.push_back({g.index(i, j), g.index(i + 1, j), 0});
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j + 1 < ny; ++j)
            out.push_back({g.index(i, j), g.index(i, j + 1), 1});
    return out;
}

} // namespace kwc
