#pragma once

// Spatial discretization: structured P1 meshes on the unit interval / unit
// square, Galerkin mass and stiffness matrices, boundary mass on the excited
// (Gamma0) and absorbing (Gamma1) parts, and the discrete Neumann maps.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgt/error.hpp"

namespace mgt {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class BoundaryPart { gamma0, gamma1 };

// Which sides of the reference domain form the excited boundary Gamma0.
// In 1D the sides are "left" (x=0) and "right" (x=1); in 2D additionally
// "bottom" (y=0) and "top" (y=1). Nodes shared between a selected and an
// unselected side (corners) belong to Gamma0.
struct BoundarySelector {
    std::set<std::string> sides{"left"};

    static BoundarySelector parse(const std::string& text) {
        BoundarySelector sel;
        sel.sides.clear();
        std::string spec = text;
        std::replace(spec.begin(), spec.end(), '+', ',');
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char ch) { return std::isspace(ch); }),
                       item.end());
            if (item.empty()) continue;
            if (item == "default") item = "left";
            for (const std::string suffix : {"_edge", "edge"})
                if (item.size() > suffix.size() && item.ends_with(suffix)) item.resize(item.size() - suffix.size());
            sel.sides.insert(item);
        }
        require(!sel.sides.empty(), "gamma0 selector is empty");
        return sel;
    }

    std::string str() const {
        std::string out;
        for (const auto& s : sides) {
            if (!out.empty()) out += ',';
            out += s;
        }
        return out;
    }
};

struct Mesh {
    int dimension = 1;
    Matrix nodes;                                  // n_nodes x dimension
    std::vector<std::vector<Index>> elements;      // 2 (1D) or 3 (2D) node ids
    std::vector<std::vector<Index>> boundary_facets; // 1 (1D) or 2 (2D) node ids
    std::vector<Index> gamma0_nodes;               // sorted
    std::vector<Index> gamma1_nodes;               // sorted

    Index num_nodes() const { return nodes.rows(); }

    bool in_gamma0(Index node) const {
        return std::binary_search(gamma0_nodes.begin(), gamma0_nodes.end(), node);
    }

    // A facet belongs to Gamma0 when all of its nodes do; otherwise to Gamma1.
    BoundaryPart facet_part(const std::vector<Index>& facet) const {
        for (Index v : facet)
            if (!in_gamma0(v)) return BoundaryPart::gamma1;
        return BoundaryPart::gamma0;
    }
};

inline std::vector<Index> boundary_nodes(const Mesh& mesh) {
    std::set<Index> all;
    for (const auto& f : mesh.boundary_facets) all.insert(f.begin(), f.end());
    return {all.begin(), all.end()};
}

// Checks the Mesh invariants; throws InvalidArgument naming the first violation.
inline void validate_mesh(const Mesh& mesh) {
    require(mesh.dimension == 1 || mesh.dimension == 2, "mesh dimension must be 1 or 2");
    require(mesh.nodes.cols() == mesh.dimension, "node coordinate width does not match dimension");
    const Index n = mesh.num_nodes();
    const std::size_t per_elem = static_cast<std::size_t>(mesh.dimension) + 1;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        require(mesh.elements[e].size() == per_elem, "element " + std::to_string(e) + " has wrong node count");
        for (Index v : mesh.elements[e])
            require(v >= 0 && v < n, "element " + std::to_string(e) + " references a missing node");
    }
    require(!mesh.gamma0_nodes.empty(), "Gamma0 is empty");
    require(!mesh.gamma1_nodes.empty(), "Gamma1 is empty: the selector covers the whole boundary");
    require(std::is_sorted(mesh.gamma0_nodes.begin(), mesh.gamma0_nodes.end()) &&
                std::is_sorted(mesh.gamma1_nodes.begin(), mesh.gamma1_nodes.end()),
            "boundary node lists must be sorted");
    std::vector<Index> overlap;
    std::set_intersection(mesh.gamma0_nodes.begin(), mesh.gamma0_nodes.end(), mesh.gamma1_nodes.begin(),
                          mesh.gamma1_nodes.end(), std::back_inserter(overlap));
    require(overlap.empty(), "Gamma0 and Gamma1 overlap at node " +
                                 (overlap.empty() ? std::string{} : std::to_string(overlap.front())));
    std::vector<Index> joined;
    std::merge(mesh.gamma0_nodes.begin(), mesh.gamma0_nodes.end(), mesh.gamma1_nodes.begin(),
               mesh.gamma1_nodes.end(), std::back_inserter(joined));
    require(joined == boundary_nodes(mesh), "every boundary node must belong to exactly one of Gamma0, Gamma1");
}

// Uniform mesh of [0,1] (dimension 1) or [0,1]^2 split into right triangles
// (dimension 2) with `resolution` elements per axis.
inline Mesh build_mesh(int dimension, int resolution, const BoundarySelector& gamma0 = {}) {
    require(dimension == 1 || dimension == 2, "dimension must be 1 or 2");
    require(resolution >= 2, "resolution must be at least 2");
    const std::set<std::string> allowed = dimension == 1 ? std::set<std::string>{"left", "right"}
                                                         : std::set<std::string>{"left", "right", "bottom", "top"};
    for (const auto& s : gamma0.sides)
        require(allowed.count(s) == 1, "unknown boundary side '" + s + "' for a " + std::to_string(dimension) + "D mesh");
    require(!gamma0.sides.empty(), "gamma0 selector is empty");

    Mesh mesh;
    mesh.dimension = dimension;
    const int N = resolution;
    const double h = 1.0 / N;

    auto on_side = [&](const std::string& side, double x, double y) {
        constexpr double eps = 1e-12;
        if (side == "left") return std::abs(x) < eps;
        if (side == "right") return std::abs(x - 1.0) < eps;
        if (side == "bottom") return std::abs(y) < eps;
        return std::abs(y - 1.0) < eps; // top
    };

    if (dimension == 1) {
        mesh.nodes.resize(N + 1, 1);
        for (int i = 0; i <= N; ++i) mesh.nodes(i, 0) = i * h;
        for (int i = 0; i < N; ++i) mesh.elements.push_back({i, i + 1});
        mesh.boundary_facets = {{0}, {N}};
    } else {
        const int stride = N + 1;
        mesh.nodes.resize(stride * stride, 2);
        for (int j = 0; j <= N; ++j)
            for (int i = 0; i <= N; ++i) {
                mesh.nodes(j * stride + i, 0) = i * h;
                mesh.nodes(j * stride + i, 1) = j * h;
            }
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < N; ++i) {
                const Index a = j * stride + i, b = a + 1, c = a + stride + 1, d = a + stride;
                mesh.elements.push_back({a, b, c});
                mesh.elements.push_back({a, c, d});
            }
        for (int i = 0; i < N; ++i) {
            mesh.boundary_facets.push_back({i, i + 1});                               // bottom
            mesh.boundary_facets.push_back({N * stride + i, N * stride + i + 1});     // top
            mesh.boundary_facets.push_back({i * stride, (i + 1) * stride});           // left
            mesh.boundary_facets.push_back({i * stride + N, (i + 1) * stride + N});   // right
        }
    }

    for (Index v : boundary_nodes(mesh)) {
        const double x = mesh.nodes(v, 0);
        const double y = dimension == 2 ? mesh.nodes(v, 1) : 0.5;
        bool selected = false;
        for (const auto& s : gamma0.sides) selected = selected || on_side(s, x, y);
        (selected ? mesh.gamma0_nodes : mesh.gamma1_nodes).push_back(v);
    }
    validate_mesh(mesh);
    return mesh;
}

// Discrete operators on a mesh. Matrices are dense (desk scale).
//   M    consistent mass, the L2(Omega) Gram matrix
//   K    stiffness with natural Neumann conditions (weak -Laplacian)
//   Mg1  boundary mass of the absorbing part, n x n
//   T0   trace-load map of Gamma0: nodal boundary data -> load vector, n x n_control
//   Mg0  boundary mass restricted to Gamma0 nodes, the U inner product
//   T1, Mg1u  the same pair for Gamma1 (used by the Gamma1 Neumann map)
struct FemOperators {
    Matrix M, K, Mg1, T0, Mg0, T1, Mg1u;
    std::vector<Index> gamma0_nodes, gamma1_nodes;

    Index num_nodes() const { return M.rows(); }
    Index num_controls() const { return T0.cols(); }
};

namespace detail {

inline Matrix restrict_rows_cols(const Matrix& full, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = full(rows[i], cols[j]);
    return out;
}

inline Matrix restrict_cols(const Matrix& full, const std::vector<Index>& cols) {
    Matrix out(full.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = full.col(cols[j]);
    return out;
}

} // namespace detail

inline FemOperators assemble_fem(const Mesh& mesh) {
    validate_mesh(mesh);
    const Index n = mesh.num_nodes();
    FemOperators ops;
    ops.M = Matrix::Zero(n, n);
    ops.K = Matrix::Zero(n, n);
    ops.gamma0_nodes = mesh.gamma0_nodes;
    ops.gamma1_nodes = mesh.gamma1_nodes;

    // Characteristic length for the degeneracy test.
    const double scale = 1.0 / std::max<double>(1.0, std::pow(static_cast<double>(mesh.elements.size()),
                                                              1.0 / mesh.dimension));

    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& el = mesh.elements[e];
        if (mesh.dimension == 1) {
            const double h = mesh.nodes(el[1], 0) - mesh.nodes(el[0], 0);
            if (std::abs(h) < 1e-12 * scale)
                throw AssemblyError("element " + std::to_string(e) + " has zero measure");
            const double len = std::abs(h);
            const Eigen::Matrix2d ke = (Eigen::Matrix2d() << 1, -1, -1, 1).finished() / len;
            const Eigen::Matrix2d me = (Eigen::Matrix2d() << 2, 1, 1, 2).finished() * (len / 6.0);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    ops.K(el[a], el[b]) += ke(a, b);
                    ops.M(el[a], el[b]) += me(a, b);
                }
        } else {
            const Eigen::Vector2d p0 = mesh.nodes.row(el[0]).transpose();
            const Eigen::Vector2d p1 = mesh.nodes.row(el[1]).transpose();
            const Eigen::Vector2d p2 = mesh.nodes.row(el[2]).transpose();
            Eigen::Matrix2d J;
            J.col(0) = p1 - p0;
            J.col(1) = p2 - p0;
            const double det = J.determinant();
            if (std::abs(det) < 1e-12 * scale * scale)
                throw AssemblyError("element " + std::to_string(e) + " has zero measure");
            const double area = 0.5 * std::abs(det);
            // Gradients of the barycentric coordinates.
            const Eigen::Matrix2d Jinv_t = J.inverse().transpose();
            Eigen::Matrix<double, 2, 3> grads;
            grads.col(1) = Jinv_t.col(0);
            grads.col(2) = Jinv_t.col(1);
            grads.col(0) = -grads.col(1) - grads.col(2);
            const Eigen::Matrix3d ke = area * grads.transpose() * grads;
            Eigen::Matrix3d me = Eigen::Matrix3d::Constant(1.0);
            me.diagonal().setConstant(2.0);
            me *= area / 12.0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    ops.K(el[a], el[b]) += ke(a, b);
                    ops.M(el[a], el[b]) += me(a, b);
                }
        }
    }

    Matrix mg0_full = Matrix::Zero(n, n);
    ops.Mg1 = Matrix::Zero(n, n);
    for (const auto& f : mesh.boundary_facets) {
        Matrix& target = mesh.facet_part(f) == BoundaryPart::gamma0 ? mg0_full : ops.Mg1;
        if (mesh.dimension == 1) {
            target(f[0], f[0]) += 1.0; // point boundary: evaluation at the endpoint
        } else {
            const double len = (mesh.nodes.row(f[1]) - mesh.nodes.row(f[0])).norm();
            target(f[0], f[0]) += len / 3.0;
            target(f[1], f[1]) += len / 3.0;
            target(f[0], f[1]) += len / 6.0;
            target(f[1], f[0]) += len / 6.0;
        }
    }
    ops.T0 = detail::restrict_cols(mg0_full, mesh.gamma0_nodes);
    ops.Mg0 = detail::restrict_rows_cols(mg0_full, mesh.gamma0_nodes, mesh.gamma0_nodes);
    ops.T1 = detail::restrict_cols(ops.Mg1, mesh.gamma1_nodes);
    ops.Mg1u = detail::restrict_rows_cols(ops.Mg1, mesh.gamma1_nodes, mesh.gamma1_nodes);
    return ops;
}

// Nodal trace of an interior field on the selected boundary part.
inline Vector boundary_trace(const FemOperators& ops, BoundaryPart which, const Vector& f) {
    require(f.size() == ops.num_nodes(), "boundary_trace: field length mismatch");
    const auto& ids = which == BoundaryPart::gamma0 ? ops.gamma0_nodes : ops.gamma1_nodes;
    Vector out(static_cast<Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) out(i) = f(ids[i]);
    return out;
}

// Discrete Green map: v with (K + M) v = trace-load(phi), i.e. the weak form of
// Delta v - v = 0 with normal derivative phi on the selected part, 0 elsewhere.
inline Vector neumann_map(const FemOperators& ops, BoundaryPart which, const Vector& phi) {
    const Matrix& load = which == BoundaryPart::gamma0 ? ops.T0 : ops.T1;
    if (phi.size() != load.cols())
        throw InvalidArgument("neumann_map: boundary data has length " + std::to_string(phi.size()) + ", expected " +
                              std::to_string(load.cols()));
    const Matrix H = ops.K + ops.M;
    return H.llt().solve(load * phi);
}

// Adjoint of the Green map for the L2(Omega) / L2(Gamma_i) pairing:
// (N phi, w)_M = (phi, N^* w)_{boundary mass}.
inline Vector neumann_map_adjoint(const FemOperators& ops, BoundaryPart which, const Vector& w) {
    require(w.size() == ops.num_nodes(), "neumann_map_adjoint: field length mismatch");
    const bool g0 = which == BoundaryPart::gamma0;
    const Matrix& load = g0 ? ops.T0 : ops.T1;
    const Matrix& mass = g0 ? ops.Mg0 : ops.Mg1u;
    const Matrix H = ops.K + ops.M;
    const Vector tmp = H.llt().solve(ops.M * w);
    return mass.llt().solve(load.transpose() * tmp);
}

} // namespace mgt
