#include "hqlab/grid.hpp"

#include <cmath>
#include <string>

#include "hqlab/errors.hpp"

namespace hqlab {

Box Box::cube(int dim, double half_width) {
    if (dim != 2 && dim != 3) throw DomainError("Box: dim must be 2 or 3");
    if (!(half_width > 0.0)) throw DomainError("Box: half width must be positive");
    Box b;
    b.dim = dim;
    for (int a = 0; a < dim; ++a) {
        b.lo[a] = -half_width;
        b.hi[a] = half_width;
    }
    return b;
}

bool Box::contains_ball(const Point& center, double radius) const {
    for (int a = 0; a < dim; ++a) {
        if (center[a] - radius < lo[a] || center[a] + radius > hi[a]) return false;
    }
    return true;
}

GridFunction::GridFunction(int dim, std::array<int, 3> shape, double h, Point origin)
    : dim_(dim), shape_(shape), h_(h), origin_(std::move(origin)) {
    if (dim != 2 && dim != 3) throw DomainError("GridFunction: dim must be 2 or 3");
    if (!(h > 0.0)) throw DomainError("GridFunction: spacing must be positive");
    if (dim == 2) shape_[2] = 1;
    for (int a = 0; a < dim; ++a) {
        if (shape_[a] < 5) throw DomainError("GridFunction: need at least 5 points per axis");
    }
    for (int a = dim; a < 3; ++a) origin_[a] = 0.0;
    stride_ = {1, shape_[0], static_cast<long>(shape_[0]) * shape_[1]};
    const long total = stride_[2] * shape_[2];
    values_.assign(static_cast<std::size_t>(total), 0.0);
    mask_.assign(static_cast<std::size_t>(total), 0);
    for (long p = 0; p < total; ++p) {
        const auto c = coords(p);
        bool edge = false;
        for (int a = 0; a < dim; ++a) edge = edge || c[a] == 0 || c[a] == shape_[a] - 1;
        mask_[static_cast<std::size_t>(p)] = edge ? 1 : 0;
    }
}

GridFunction GridFunction::on_box(const Box& box, int points) {
    if (points < 5) throw DomainError("GridFunction: need at least 5 points per axis");
    const double h = (box.hi[0] - box.lo[0]) / (points - 1);
    std::array<int, 3> shape{points, 1, 1};
    for (int a = 1; a < box.dim; ++a) {
        const double cells = (box.hi[a] - box.lo[a]) / h;
        const double rounded = std::round(cells);
        if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells)) {
            throw DomainError("GridFunction: box sides are not commensurate with the spacing");
        }
        shape[a] = static_cast<int>(rounded) + 1;
    }
    return GridFunction(box.dim, shape, h, box.lo);
}

std::array<int, 3> GridFunction::coords(long idx) const noexcept {
    const int k = static_cast<int>(idx / stride_[2]);
    const long rest = idx - k * stride_[2];
    const int j = static_cast<int>(rest / stride_[1]);
    const int i = static_cast<int>(rest - j * stride_[1]);
    return {i, j, k};
}

Point GridFunction::point(long idx) const noexcept {
    const auto c = coords(idx);
    Point x = Point::Zero();
    for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + h_ * c[a];
    return x;
}

std::vector<long> GridFunction::interior() const {
    std::vector<long> out;
    for (long p = 0; p < size(); ++p) {
        if (!is_boundary(p)) out.push_back(p);
    }
    return out;
}

void discrete_hessian(const GridFunction& u, long p, Eigen::Matrix3d& m) noexcept {
    const double inv = 1.0 / (u.h() * u.h());
    const int d = u.dim();
    const double c = u[p];
    m.setZero();
    for (int a = 0; a < d; ++a) {
        const long sa = u.stride(a);
        m(a, a) = (u[p + sa] - 2.0 * c + u[p - sa]) * inv;
        for (int b = a + 1; b < d; ++b) {
            const long sb = u.stride(b);
            const double v = (u[p + sa + sb] - u[p + sa - sb] - u[p - sa + sb] + u[p - sa - sb]) * 0.25 * inv;
            m(a, b) = v;
            m(b, a) = v;
        }
    }
}

Eigen::MatrixXd hessian_at(const GridFunction& u, long idx) {
    if (idx < 0 || idx >= u.size() || u.is_boundary(idx)) {
        throw DomainError("hessian_at: index " + std::to_string(idx) + " is not an interior point");
    }
    Eigen::Matrix3d m;
    discrete_hessian(u, idx, m);
    return m.topLeftCorner(u.dim(), u.dim());
}

Point gradient_at(const GridFunction& u, long idx) {
    if (idx < 0 || idx >= u.size() || u.is_boundary(idx)) {
        throw DomainError("gradient_at: index " + std::to_string(idx) + " is not an interior point");
    }
    Point g = Point::Zero();
    for (int a = 0; a < u.dim(); ++a) {
        const long s = u.stride(a);
        g[a] = (u[idx + s] - u[idx - s]) / (2.0 * u.h());
    }
    return g;
}

}  // namespace hqlab
