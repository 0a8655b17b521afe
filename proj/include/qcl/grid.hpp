#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "qcl/types.hpp"

namespace qcl {

/// Node grid on the unit square. Nodes (i, j) with 0 <= i <= nx, 0 <= j <= ny
/// are stored row-major in j then i. Immutable; copies share the layout.
class Grid2D {
public:
    static constexpr int min_nodes_per_axis = 8;

    Grid2D(int nx, int ny);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return 1.0 / nx_; }
    double hy() const { return 1.0 / ny_; }

    int node_count() const { return (nx_ + 1) * (ny_ + 1); }
    int boundary_count() const { return 2 * (nx_ + ny_); }
    int interior_count() const { return (nx_ - 1) * (ny_ - 1); }

    int index(int i, int j) const { return j * (nx_ + 1) + i; }
    int col(int n) const { return n % (nx_ + 1); }
    int row(int n) const { return n / (nx_ + 1); }
    Vec2 point(int n) const { return {col(n) * hx(), row(n) * hy()}; }

    bool is_boundary(int n) const;

    /// Boundary nodes in counterclockwise perimeter order starting at (0, 0).
    const std::vector<int>& boundary_nodes() const { return layout_->boundary; }
    const std::vector<int>& interior_nodes() const { return layout_->interior; }
    /// Position of node n in boundary_nodes() or interior_nodes(); -1 if absent.
    int boundary_slot(int n) const { return layout_->boundary_slot[n]; }
    int interior_slot(int n) const { return layout_->interior_slot[n]; }

    /// Perimeter coordinate in [0, 4), each edge normalized to length 1.
    double perimeter_coordinate(int boundary_position) const {
        return layout_->perimeter[boundary_position];
    }

    /// Trapezoidal quadrature weights on the nodes.
    const RVector& quadrature_weights() const { return layout_->weights; }

    bool operator==(const Grid2D& other) const { return nx_ == other.nx_ && ny_ == other.ny_; }
    bool operator!=(const Grid2D& other) const { return !(*this == other); }

private:
    struct Layout {
        std::vector<int> boundary;
        std::vector<int> interior;
        std::vector<int> boundary_slot;
        std::vector<int> interior_slot;
        std::vector<double> perimeter;
        RVector weights;
    };

    int nx_;
    int ny_;
    std::shared_ptr<const Layout> layout_;
};

inline Grid2D build_grid(int nx, int ny) { return Grid2D(nx, ny); }

/// Nodal field over a grid.
template <typename Scalar>
struct BasicField {
    using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Grid2D grid;
    Values values;

    explicit BasicField(const Grid2D& g) : grid(g), values(Values::Zero(g.node_count())) {}
    BasicField(const Grid2D& g, Values v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.node_count()) {
            throw std::invalid_argument("field length does not match grid node count");
        }
    }

    Scalar& operator[](int n) { return values(n); }
    const Scalar& operator[](int n) const { return values(n); }
    Scalar& at(int i, int j) { return values(grid.index(i, j)); }
    const Scalar& at(int i, int j) const { return values(grid.index(i, j)); }

    bool all_finite() const { return values.allFinite(); }
};

using ScalarField = BasicField<Complex>;
using RealField = BasicField<double>;

/// Samples fn(x, y) at every node.
ScalarField sample_field(const Grid2D& grid, const std::function<Complex(double, double)>& fn);

/// Boundary values in perimeter order (length boundary_count()).
using BoundaryValues = CVector;

BoundaryValues boundary_trace(const ScalarField& field);
BoundaryValues sample_boundary(const Grid2D& grid, const std::function<Complex(double, double)>& fn);

/// Trapezoidal integral of nodal values over the unit square.
template <typename Derived>
typename Derived::Scalar trapezoid_integral(const Grid2D& grid, const Eigen::MatrixBase<Derived>& values) {
    return (grid.quadrature_weights().template cast<typename Derived::Scalar>().array() * values.array()).sum();
}

/// Discrete L2 norm via the trapezoidal weights.
template <typename Derived>
double l2_norm(const Grid2D& grid, const Eigen::MatrixBase<Derived>& values) {
    return std::sqrt((grid.quadrature_weights().array() * values.array().abs2()).sum());
}

/// Closed perimeter interval [a, b] with 0 <= a < b <= 4.
struct ArcInterval {
    double a;
    double b;
};

/// Subset of the boundary nodes, kept in perimeter order.
class BoundarySet {
public:
    BoundarySet(const Grid2D& grid, std::vector<int> boundary_positions);

    const Grid2D& grid() const { return grid_; }
    /// Positions into grid().boundary_nodes(), ascending.
    const std::vector<int>& positions() const { return positions_; }
    std::vector<int> nodes() const;
    std::size_t size() const { return positions_.size(); }
    bool empty() const { return positions_.empty(); }
    bool contains_position(int p) const { return member_[p] != 0; }

    BoundarySet complement() const;
    /// 1 on member positions, 0 elsewhere.
    RVector indicator() const;

private:
    Grid2D grid_;
    std::vector<int> positions_;
    std::vector<char> member_;
};

BoundarySet boundary_arc(const Grid2D& grid, const std::vector<ArcInterval>& intervals);
inline BoundarySet full_boundary(const Grid2D& grid) { return boundary_arc(grid, {{0.0, 4.0}}); }

/// Writes `i,j,x,y,value_re,value_im`, row-major in j then i, 17 significant digits.
void write_field_csv(std::ostream& os, const ScalarField& field);
void write_field_csv(const std::string& path, const ScalarField& field);
ScalarField read_field_csv(std::istream& is, const Grid2D& grid);
ScalarField read_field_csv(const std::string& path, const Grid2D& grid);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace qcl
