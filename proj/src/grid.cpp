#include "qcl/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qcl {

namespace {

constexpr double arc_tolerance = 1e-12;

}  // namespace

Grid2D::Grid2D(int nx, int ny) : nx_(nx), ny_(ny) {
    if (nx < min_nodes_per_axis || ny < min_nodes_per_axis) {
        throw std::invalid_argument("grid too coarse: need nx, ny >= 8");
    }
    auto layout = std::make_shared<Layout>();
    const int n_nodes = node_count();
    layout->boundary_slot.assign(n_nodes, -1);
    layout->interior_slot.assign(n_nodes, -1);

    // Counterclockwise from (0,0): bottom, right, top, left.
    auto push = [&](int i, int j, double s) {
        const int n = index(i, j);
        layout->boundary_slot[n] = static_cast<int>(layout->boundary.size());
        layout->boundary.push_back(n);
        layout->perimeter.push_back(s);
    };
    for (int i = 0; i < nx; ++i) push(i, 0, static_cast<double>(i) / nx);
    for (int j = 0; j < ny; ++j) push(nx, j, 1.0 + static_cast<double>(j) / ny);
    for (int i = nx; i > 0; --i) push(i, ny, 2.0 + static_cast<double>(nx - i) / nx);
    for (int j = ny; j > 0; --j) push(0, j, 3.0 + static_cast<double>(ny - j) / ny);

    for (int n = 0; n < n_nodes; ++n) {
        if (layout->boundary_slot[n] < 0) {
            layout->interior_slot[n] = static_cast<int>(layout->interior.size());
            layout->interior.push_back(n);
        }
    }

    layout->weights.resize(n_nodes);
    const double cell = hx() * hy();
    for (int n = 0; n < n_nodes; ++n) {
        const int i = col(n);
        const int j = row(n);
        const double wx = (i == 0 || i == nx) ? 0.5 : 1.0;
        const double wy = (j == 0 || j == ny) ? 0.5 : 1.0;
        layout->weights(n) = cell * wx * wy;
    }
    layout_ = std::move(layout);
}

bool Grid2D::is_boundary(int n) const { return layout_->boundary_slot[n] >= 0; }

ScalarField sample_field(const Grid2D& grid, const std::function<Complex(double, double)>& fn) {
    ScalarField field(grid);
    for (int n = 0; n < grid.node_count(); ++n) {
        const Vec2 p = grid.point(n);
        field[n] = fn(p.x(), p.y());
    }
    return field;
}

BoundaryValues boundary_trace(const ScalarField& field) {
    const auto& nodes = field.grid.boundary_nodes();
    BoundaryValues out(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t p = 0; p < nodes.size(); ++p) out(static_cast<Eigen::Index>(p)) = field[nodes[p]];
    return out;
}

BoundaryValues sample_boundary(const Grid2D& grid, const std::function<Complex(double, double)>& fn) {
    const auto& nodes = grid.boundary_nodes();
    BoundaryValues out(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t p = 0; p < nodes.size(); ++p) {
        const Vec2 x = grid.point(nodes[p]);
        out(static_cast<Eigen::Index>(p)) = fn(x.x(), x.y());
    }
    return out;
}

BoundarySet::BoundarySet(const Grid2D& grid, std::vector<int> boundary_positions)
    : grid_(grid), positions_(std::move(boundary_positions)), member_(grid.boundary_count(), 0) {
    std::sort(positions_.begin(), positions_.end());
    positions_.erase(std::unique(positions_.begin(), positions_.end()), positions_.end());
    for (int p : positions_) {
        if (p < 0 || p >= grid.boundary_count()) {
            throw std::invalid_argument("boundary position out of range");
        }
        member_[p] = 1;
    }
}

std::vector<int> BoundarySet::nodes() const {
    std::vector<int> out;
    out.reserve(positions_.size());
    for (int p : positions_) out.push_back(grid_.boundary_nodes()[p]);
    return out;
}

BoundarySet BoundarySet::complement() const {
    std::vector<int> rest;
    for (int p = 0; p < grid_.boundary_count(); ++p) {
        if (!member_[p]) rest.push_back(p);
    }
    return BoundarySet(grid_, std::move(rest));
}

RVector BoundarySet::indicator() const {
    RVector out = RVector::Zero(grid_.boundary_count());
    for (int p : positions_) out(p) = 1.0;
    return out;
}

BoundarySet boundary_arc(const Grid2D& grid, const std::vector<ArcInterval>& intervals) {
    for (const auto& iv : intervals) {
        if (!(iv.a < iv.b) || iv.a < 0.0 || iv.b > 4.0) {
            throw std::invalid_argument("degenerate or out-of-range perimeter interval");
        }
    }
    std::vector<int> positions;
    for (int p = 0; p < grid.boundary_count(); ++p) {
        const double s = grid.perimeter_coordinate(p);
        for (const auto& iv : intervals) {
            if (s >= iv.a - arc_tolerance && s <= iv.b + arc_tolerance) {
                positions.push_back(p);
                break;
            }
        }
    }
    return BoundarySet(grid, std::move(positions));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_field_csv(std::ostream& os, const ScalarField& field) {
    const Grid2D& g = field.grid;
    os << "i,j,x,y,value_re,value_im\n";
    for (int n = 0; n < g.node_count(); ++n) {
        const Vec2 p = g.point(n);
        os << g.col(n) << ',' << g.row(n) << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ','
           << format_double(field[n].real()) << ',' << format_double(field[n].imag()) << '\n';
    }
}

void write_field_csv(const std::string& path, const ScalarField& field) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_field_csv(os, field);
}

ScalarField read_field_csv(std::istream& is, const Grid2D& grid) {
    std::string line;
    if (!std::getline(is, line) || line != "i,j,x,y,value_re,value_im") {
        throw std::runtime_error("field CSV header mismatch");
    }
    ScalarField field(grid);
    std::vector<char> seen(grid.node_count(), 0);
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::array<std::string, 6> cells;
        for (auto& c : cells) {
            if (!std::getline(ls, c, ',')) throw std::runtime_error("field CSV row has too few columns");
        }
        const int i = std::stoi(cells[0]);
        const int j = std::stoi(cells[1]);
        if (i < 0 || i > grid.nx() || j < 0 || j > grid.ny()) {
            throw std::runtime_error("field CSV node outside grid");
        }
        const int n = grid.index(i, j);
        field[n] = Complex(std::stod(cells[4]), std::stod(cells[5]));
        seen[n] = 1;
        ++rows;
    }
    if (rows != grid.node_count() || std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw std::runtime_error("field CSV does not cover the grid");
    }
    if (!field.all_finite()) throw std::runtime_error("field CSV contains non-finite values");
    return field;
}

ScalarField read_field_csv(const std::string& path, const Grid2D& grid) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_field_csv(is, grid);
}

}  // namespace qcl
