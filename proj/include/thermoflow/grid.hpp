#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "thermoflow/errors.hpp"

namespace thermoflow {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// What a field's boundary values mean.
//   DirichletZero: values are exactly zero on every boundary point.
//   NeumannZero:   values are live; operators use mirror ghosts (zero normal flux).
//   None:          derived data (gradients, divergences); no condition is imposed.
enum class BoundaryTag { DirichletZero, NeumannZero, None };

inline const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::DirichletZero: return "DirichletZero";
        case BoundaryTag::NeumannZero: return "NeumannZero";
        case BoundaryTag::None: return "None";
    }
    return "?";
}

/// Uniform collocated grid on the box [0, L_0] x ... x [0, L_{dim-1}].
///
/// Unused axes are padded with a single point so that loops can always run
/// over three axes. Points are stored row-major: the last active axis varies
/// fastest. Trapezoidal quadrature weights are computed once and shared by
/// copies of the grid.
template <typename Scalar = double>
class Grid {
public:
    Grid(int dim, const std::array<Index, 3>& points, const std::array<Scalar, 3>& lengths)
        : dim_(dim), points_{1, 1, 1}, lengths_{0, 0, 0}, spacing_{0, 0, 0} {
        if (dim < 1 || dim > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
        for (int a = 0; a < dim; ++a) {
            if (points[a] < 3) throw InvalidInput("each axis needs at least 3 points");
            if (!(lengths[a] > 0) || !std::isfinite(static_cast<double>(lengths[a])))
                throw InvalidInput("axis lengths must be positive and finite");
            points_[a] = points[a];
            lengths_[a] = lengths[a];
            spacing_[a] = lengths[a] / static_cast<Scalar>(points[a] - 1);
        }
        strides_[2] = 1;
        strides_[1] = points_[2];
        strides_[0] = points_[1] * points_[2];
        weights_ = std::make_shared<const Vector<Scalar>>(build_weights());
    }

    // Same point count and length on every axis.
    static Grid cube(int dim, Index points, Scalar length = Scalar(1)) {
        return Grid(dim, {points, points, points}, {length, length, length});
    }

    int dim() const noexcept { return dim_; }
    Index points(int axis) const { return points_[axis]; }
    const std::array<Index, 3>& extents() const noexcept { return points_; }
    Scalar length(int axis) const { return lengths_[axis]; }
    Scalar spacing(int axis) const { return spacing_[axis]; }
    Index stride(int axis) const { return strides_[axis]; }
    Index size() const noexcept { return points_[0] * points_[1] * points_[2]; }

    // |Omega|
    Scalar measure() const {
        Scalar m(1);
        for (int a = 0; a < dim_; ++a) m *= lengths_[a];
        return m;
    }

    Scalar cell_volume() const {
        Scalar v(1);
        for (int a = 0; a < dim_; ++a) v *= spacing_[a];
        return v;
    }

    Index flat(Index i0, Index i1 = 0, Index i2 = 0) const {
        return i0 * strides_[0] + i1 * strides_[1] + i2;
    }

    std::array<Index, 3> unravel(Index p) const {
        return {p / strides_[0], (p / strides_[1]) % points_[1], p % points_[2]};
    }

    Scalar coordinate(int axis, Index i) const { return static_cast<Scalar>(i) * spacing_[axis]; }

    std::array<Scalar, 3> position(Index p) const {
        const auto idx = unravel(p);
        std::array<Scalar, 3> x{0, 0, 0};
        for (int a = 0; a < dim_; ++a) x[a] = coordinate(a, idx[a]);
        return x;
    }

    bool on_boundary(Index p) const {
        const auto idx = unravel(p);
        for (int a = 0; a < dim_; ++a)
            if (idx[a] == 0 || idx[a] == points_[a] - 1) return true;
        return false;
    }

    // Number of interior points along every active axis multiplied together.
    Index interior_size() const {
        Index n = 1;
        for (int a = 0; a < dim_; ++a) n *= points_[a] - 2;
        return n;
    }

    const Vector<Scalar>& weights() const noexcept { return *weights_; }

    bool operator==(const Grid& other) const {
        return dim_ == other.dim_ && points_ == other.points_ && lengths_ == other.lengths_;
    }
    bool operator!=(const Grid& other) const { return !(*this == other); }

    std::string describe() const {
        std::string s = std::to_string(dim_) + "D ";
        for (int a = 0; a < dim_; ++a) {
            if (a) s += "x";
            s += std::to_string(points_[a]);
        }
        return s;
    }

private:
    Vector<Scalar> build_weights() const {
        std::array<std::vector<Scalar>, 3> axis_w;
        for (int a = 0; a < 3; ++a) {
            axis_w[a].assign(static_cast<std::size_t>(points_[a]), a < dim_ ? spacing_[a] : Scalar(1));
            if (a < dim_) {
                axis_w[a].front() *= Scalar(0.5);
                axis_w[a].back() *= Scalar(0.5);
            }
        }
        Vector<Scalar> w(size());
        for (Index i = 0; i < points_[0]; ++i)
            for (Index j = 0; j < points_[1]; ++j)
                for (Index k = 0; k < points_[2]; ++k)
                    w[flat(i, j, k)] = axis_w[0][i] * axis_w[1][j] * axis_w[2][k];
        return w;
    }

    int dim_;
    std::array<Index, 3> points_;
    std::array<Scalar, 3> lengths_;
    std::array<Scalar, 3> spacing_;
    std::array<Index, 3> strides_{};
    std::shared_ptr<const Vector<Scalar>> weights_;
};

/// Values sampled at every grid point plus the boundary condition they obey.
template <typename Scalar = double>
struct ScalarField {
    Grid<Scalar> grid;
    Vector<Scalar> values;
    BoundaryTag bc = BoundaryTag::NeumannZero;

    ScalarField(Grid<Scalar> g, Vector<Scalar> v, BoundaryTag tag)
        : grid(std::move(g)), values(std::move(v)), bc(tag) {
        if (values.size() != grid.size()) throw InvalidInput("field length does not match grid size");
    }

    static ScalarField zeros(const Grid<Scalar>& g, BoundaryTag tag) {
        return ScalarField(g, Vector<Scalar>::Zero(g.size()), tag);
    }

    static ScalarField constant(const Grid<Scalar>& g, Scalar c, BoundaryTag tag = BoundaryTag::NeumannZero) {
        ScalarField f(g, Vector<Scalar>::Constant(g.size(), c), tag);
        f.enforce_boundary();
        return f;
    }

    // fn receives the physical position {x, y, z} of each point.
    template <typename Fn>
    static ScalarField sample(const Grid<Scalar>& g, Fn&& fn, BoundaryTag tag) {
        Vector<Scalar> v(g.size());
        for (Index p = 0; p < g.size(); ++p) v[p] = fn(g.position(p));
        ScalarField f(g, std::move(v), tag);
        f.enforce_boundary();
        return f;
    }

    Index size() const noexcept { return values.size(); }
    Scalar operator[](Index p) const { return values[p]; }
    Scalar& operator[](Index p) { return values[p]; }

    // Zero the boundary when the tag is DirichletZero; no-op otherwise.
    void enforce_boundary() {
        if (bc != BoundaryTag::DirichletZero) return;
        for (Index p = 0; p < grid.size(); ++p)
            if (grid.on_boundary(p)) values[p] = Scalar(0);
    }

    bool all_finite() const { return values.allFinite(); }

    ScalarField retagged(BoundaryTag tag) const {
        ScalarField f(grid, values, tag);
        f.enforce_boundary();
        return f;
    }
};

/// dim scalar components on one grid, one boundary tag shared by all.
template <typename Scalar = double>
struct VectorField {
    std::vector<ScalarField<Scalar>> components;

    VectorField() = default;
    explicit VectorField(std::vector<ScalarField<Scalar>> comps) : components(std::move(comps)) {
        if (components.empty()) throw InvalidInput("vector field needs at least one component");
        for (const auto& c : components) {
            if (c.grid != components.front().grid) throw InvalidInput("vector components on different grids");
            if (c.bc != components.front().bc) throw InvalidInput("vector components with different boundary tags");
        }
        if (static_cast<int>(components.size()) != components.front().grid.dim())
            throw InvalidInput("vector field needs one component per grid axis");
    }

    static VectorField zeros(const Grid<Scalar>& g, BoundaryTag tag = BoundaryTag::DirichletZero) {
        return VectorField(std::vector<ScalarField<Scalar>>(static_cast<std::size_t>(g.dim()),
                                                            ScalarField<Scalar>::zeros(g, tag)));
    }

    const Grid<Scalar>& grid() const { return components.front().grid; }
    BoundaryTag bc() const { return components.front().bc; }
    int dim() const { return static_cast<int>(components.size()); }
    const ScalarField<Scalar>& operator[](int c) const { return components[static_cast<std::size_t>(c)]; }
    ScalarField<Scalar>& operator[](int c) { return components[static_cast<std::size_t>(c)]; }

    bool all_finite() const {
        for (const auto& c : components)
            if (!c.all_finite()) return false;
        return true;
    }
};

// Componentwise arithmetic. Operands must share grid and tag.

namespace detail {
template <typename Scalar>
void require_compatible(const ScalarField<Scalar>& a, const ScalarField<Scalar>& b) {
    if (a.grid != b.grid) throw InvalidInput("fields live on different grids");
    if (a.bc != b.bc) throw InvalidInput("fields carry different boundary tags");
}
}  // namespace detail

template <typename Scalar>
ScalarField<Scalar> operator+(const ScalarField<Scalar>& a, const ScalarField<Scalar>& b) {
    detail::require_compatible(a, b);
    return ScalarField<Scalar>(a.grid, a.values + b.values, a.bc);
}

template <typename Scalar>
ScalarField<Scalar> operator-(const ScalarField<Scalar>& a, const ScalarField<Scalar>& b) {
    detail::require_compatible(a, b);
    return ScalarField<Scalar>(a.grid, a.values - b.values, a.bc);
}

template <typename Scalar>
ScalarField<Scalar> operator*(Scalar s, const ScalarField<Scalar>& a) {
    return ScalarField<Scalar>(a.grid, s * a.values, a.bc);
}

template <typename Scalar>
VectorField<Scalar> operator+(const VectorField<Scalar>& a, const VectorField<Scalar>& b) {
    if (a.dim() != b.dim()) throw InvalidInput("vector fields of different dimension");
    VectorField<Scalar> out = a;
    for (int c = 0; c < a.dim(); ++c) out[c] = a[c] + b[c];
    return out;
}

template <typename Scalar>
VectorField<Scalar> operator-(const VectorField<Scalar>& a, const VectorField<Scalar>& b) {
    if (a.dim() != b.dim()) throw InvalidInput("vector fields of different dimension");
    VectorField<Scalar> out = a;
    for (int c = 0; c < a.dim(); ++c) out[c] = a[c] - b[c];
    return out;
}

template <typename Scalar>
VectorField<Scalar> operator*(Scalar s, const VectorField<Scalar>& a) {
    VectorField<Scalar> out = a;
    for (auto& c : out.components) c.values *= s;
    return out;
}

}  // namespace thermoflow
