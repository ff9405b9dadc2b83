#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace hqlab {

/// Physical point; entries past the grid dimension are zero.
using Point = Eigen::Vector3d;

/// Axis-aligned box [lo, hi] in dim 2 or 3.
struct Box {
    int dim = 2;
    Point lo = Point::Zero();
    Point hi = Point::Zero();

    /// [-a, a]^dim.
    [[nodiscard]] static Box cube(int dim, double half_width);
    [[nodiscard]] bool contains_ball(const Point& center, double radius) const;
};

/// Scalar field on a uniform grid. Index order is i fastest, then j, then k.
/// The outermost layer of points is the Dirichlet ring.
class GridFunction {
public:
    GridFunction(int dim, std::array<int, 3> shape, double h, Point origin);

    /// Grid on `box` with `points` nodes along axis 0; other axes get the
    /// same spacing and must fit an integer number of cells.
    [[nodiscard]] static GridFunction on_box(const Box& box, int points);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int shape(int axis) const noexcept { return shape_[static_cast<std::size_t>(axis)]; }
    [[nodiscard]] const std::array<int, 3>& shape() const noexcept { return shape_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] const Point& origin() const noexcept { return origin_; }
    [[nodiscard]] long size() const noexcept { return static_cast<long>(values_.size()); }
    [[nodiscard]] long stride(int axis) const noexcept { return stride_[static_cast<std::size_t>(axis)]; }

    [[nodiscard]] long index(int i, int j, int k = 0) const noexcept {
        return i + stride_[1] * j + stride_[2] * k;
    }
    [[nodiscard]] std::array<int, 3> coords(long idx) const noexcept;
    [[nodiscard]] Point point(long idx) const noexcept;
    [[nodiscard]] bool is_boundary(long idx) const noexcept { return mask_[static_cast<std::size_t>(idx)] != 0; }
    [[nodiscard]] const std::vector<std::uint8_t>& boundary_mask() const noexcept { return mask_; }
    /// Interior indices in storage order.
    [[nodiscard]] std::vector<long> interior() const;

    [[nodiscard]] std::vector<double>& values() noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    double& operator[](long idx) noexcept { return values_[static_cast<std::size_t>(idx)]; }
    double operator[](long idx) const noexcept { return values_[static_cast<std::size_t>(idx)]; }

    template <class Fn>
    void fill(Fn&& fn) {
        for (long p = 0; p < size(); ++p) values_[static_cast<std::size_t>(p)] = fn(point(p));
    }

    /// Same geometry, values set to zero.
    [[nodiscard]] GridFunction zeros_like() const { return GridFunction(dim_, shape_, h_, origin_); }

private:
    int dim_;
    std::array<int, 3> shape_;
    std::array<long, 3> stride_;
    double h_;
    Point origin_;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
};

/// Central-difference Hessian at an interior point; the off-diagonal entries
/// use the four-point cross stencil. Throws DomainError on boundary points.
[[nodiscard]] Eigen::MatrixXd hessian_at(const GridFunction& u, long idx);
/// Central-difference gradient at an interior point (zero past dim).
[[nodiscard]] Point gradient_at(const GridFunction& u, long idx);

/// Unchecked fixed-size variant used in the grid loops; fills the leading
/// dim x dim block.
void discrete_hessian(const GridFunction& u, long idx, Eigen::Matrix3d& m) noexcept;

}  // namespace hqlab
