#include "qcl/operators.hpp"

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace qcl {

namespace {

using Triplet = Eigen::Triplet<double>;

// Derivative along one axis at index k of a line with nodes 0..n, spacing h.
void add_axis_derivative(std::vector<Triplet>& t, int row, int k, int n, double h,
                         const std::function<int(int)>& node_at) {
    if (k == 0) {
        t.emplace_back(row, node_at(0), -1.5 / h);
        t.emplace_back(row, node_at(1), 2.0 / h);
        t.emplace_back(row, node_at(2), -0.5 / h);
    } else if (k == n) {
        t.emplace_back(row, node_at(n), 1.5 / h);
        t.emplace_back(row, node_at(n - 1), -2.0 / h);
        t.emplace_back(row, node_at(n - 2), 0.5 / h);
    } else {
        t.emplace_back(row, node_at(k + 1), 0.5 / h);
        t.emplace_back(row, node_at(k - 1), -0.5 / h);
    }
}

}  // namespace

SchemeOperators::SchemeOperators(const Grid2D& g) : grid(g) {
    const int nx = g.nx();
    const int ny = g.ny();
    const int nodes = g.node_count();
    const int faces = nx * (ny + 1) + (nx + 1) * ny;

    std::vector<Triplet> dt;
    std::vector<Triplet> mt;
    dt.reserve(2 * faces);
    mt.reserve(2 * faces);
    face_weight.resize(faces);
    int f = 0;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i < nx; ++i, ++f) {
            const int a = g.index(i, j);
            const int b = g.index(i + 1, j);
            dt.emplace_back(f, a, -1.0);
            dt.emplace_back(f, b, 1.0);
            mt.emplace_back(f, a, 0.5);
            mt.emplace_back(f, b, 0.5);
            face_weight(f) = (g.hy() / g.hx()) * ((j == 0 || j == ny) ? 0.5 : 1.0);
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i <= nx; ++i, ++f) {
            const int a = g.index(i, j);
            const int b = g.index(i, j + 1);
            dt.emplace_back(f, a, -1.0);
            dt.emplace_back(f, b, 1.0);
            mt.emplace_back(f, a, 0.5);
            mt.emplace_back(f, b, 0.5);
            face_weight(f) = (g.hx() / g.hy()) * ((i == 0 || i == nx) ? 0.5 : 1.0);
        }
    }
    difference.resize(faces, nodes);
    difference.setFromTriplets(dt.begin(), dt.end());
    average.resize(faces, nodes);
    average.setFromTriplets(mt.begin(), mt.end());

    std::vector<Triplet> gx;
    std::vector<Triplet> gy;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const int row = g.index(i, j);
            add_axis_derivative(gx, row, i, nx, g.hx(), [&](int k) { return g.index(k, j); });
            add_axis_derivative(gy, row, j, ny, g.hy(), [&](int k) { return g.index(i, k); });
        }
    }
    grad_x.resize(nodes, nodes);
    grad_x.setFromTriplets(gx.begin(), gx.end());
    grad_y.resize(nodes, nodes);
    grad_y.setFromTriplets(gy.begin(), gy.end());

    stiffness = difference.transpose() * face_weight.asDiagonal() * difference;
    stiffness.makeCompressed();
}

std::shared_ptr<const SchemeOperators> scheme_operators(const Grid2D& grid) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const SchemeOperators>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{grid.nx(), grid.ny()}];
    if (!slot) slot = std::make_shared<const SchemeOperators>(grid);
    return slot;
}

Complex energy_pairing(const SchemeOperators& ops, const CVector& gamma_nodes, const CVector& u, const CVector& phi) {
    const CVector du = ops.difference.cast<Complex>() * u;
    const CVector dphi = ops.difference.cast<Complex>() * phi;
    const CVector gf = ops.average.cast<Complex>() * gamma_nodes;
    return (ops.face_weight.cast<Complex>().array() * gf.array() * du.array() * dphi.array()).sum();
}

CVector discrete_laplacian(const SchemeOperators& ops, const CVector& u) {
    return -(ops.stiffness.cast<Complex>() * u);
}

CVector gather_interior(const Grid2D& grid, const CVector& full) {
    const auto& interior = grid.interior_nodes();
    CVector out(static_cast<Eigen::Index>(interior.size()));
    for (std::size_t k = 0; k < interior.size(); ++k) out(static_cast<Eigen::Index>(k)) = full(interior[k]);
    return out;
}

CVector scatter_full(const Grid2D& grid, const CVector& interior, const BoundaryValues& boundary) {
    CVector full(grid.node_count());
    const auto& in = grid.interior_nodes();
    const auto& bn = grid.boundary_nodes();
    for (std::size_t k = 0; k < in.size(); ++k) full(in[k]) = interior(static_cast<Eigen::Index>(k));
    for (std::size_t k = 0; k < bn.size(); ++k) full(bn[k]) = boundary(static_cast<Eigen::Index>(k));
    return full;
}

}  // namespace qcl
