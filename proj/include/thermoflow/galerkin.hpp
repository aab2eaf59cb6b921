#pragma once

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <vector>

#include "thermoflow/grid.hpp"

namespace thermoflow {

/// Orthonormal discrete sine basis on the interior points of one axis:
/// S(j, k) = sqrt(2/(n-1)) sin(j k pi / (n-1)), j, k = 1..n-2. The columns are
/// the exact eigenvectors of the 3-point Dirichlet stencil.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sine_basis(Index n) {
    const Index m = n - 2;
    const Scalar scale = std::sqrt(Scalar(2) / static_cast<Scalar>(n - 1));
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> s(m, m);
    for (Index j = 0; j < m; ++j)
        for (Index k = 0; k < m; ++k)
            s(j, k) = scale * std::sin(static_cast<Scalar>((j + 1) * (k + 1)) * std::numbers::pi_v<Scalar> /
                                       static_cast<Scalar>(n - 1));
    return s;
}

// Eigenvalue of -lap_D for mode k (1-based) on an axis with n points and spacing h.
template <typename Scalar>
Scalar dirichlet_eigenvalue(Index k, Index n, Scalar h) {
    const Scalar s = std::sin(static_cast<Scalar>(k) * std::numbers::pi_v<Scalar> / (Scalar(2) * static_cast<Scalar>(n - 1)));
    return Scalar(4) / (h * h) * s * s;
}

namespace detail {

// FFTW's planner is not thread-safe; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Orthonormal DST-I of length m in long double. It is its own inverse and
/// equals multiplication by sine_basis(m + 2).
class SineTransform {
public:
    explicit SineTransform(Index m) : m_(m), scale_(1.0L / std::sqrt(2.0L * static_cast<long double>(m + 1))) {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        std::vector<long double> in(static_cast<std::size_t>(m)), out(static_cast<std::size_t>(m));
        plan_ = fftwl_plan_r2r_1d(static_cast<int>(m), in.data(), out.data(), FFTW_RODFT00,
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan_) throw InvalidInput("galerkin: could not plan a sine transform of length " + std::to_string(m));
    }
    ~SineTransform() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftwl_destroy_plan(plan_);
    }
    SineTransform(const SineTransform&) = delete;
    SineTransform& operator=(const SineTransform&) = delete;

    Index size() const noexcept { return m_; }

    // out = S in; in and out must not alias.
    void apply(long double* in, long double* out) const {
        fftwl_execute_r2r(plan_, in, out);
        for (Index i = 0; i < m_; ++i) out[i] *= scale_;
    }

private:
    Index m_;
    long double scale_;
    fftwl_plan plan_ = nullptr;
};

}  // namespace detail

/// Orthogonal projection onto the span of the first `modes` tensor-product
/// sine modes, ordered by increasing discrete Dirichlet eigenvalue (ties broken
/// lexicographically by mode index).
template <typename Scalar = double>
class SineProjector {
public:
    // Transforms run in extended precision so that a full-basis projection
    // reproduces its input to the last bit instead of accumulating rounding
    // drift over many steps.
    using Wide = long double;

    SineProjector(const Grid<Scalar>& grid, Index modes) : grid_(grid), modes_(modes) {
        const Index total = grid.interior_size();
        if (modes < 1 || modes > total)
            throw InvalidInput("galerkin mode count must lie in [1, " + std::to_string(total) + "]");
        for (int a = 0; a < grid.dim(); ++a) {
            interior_[a] = grid.points(a) - 2;
            transform_[a] = std::make_shared<const detail::SineTransform>(interior_[a]);
        }
        for (int a = grid.dim(); a < 3; ++a) interior_[a] = 1;

        std::vector<Scalar> lambda(static_cast<std::size_t>(total));
        for (Index c = 0; c < total; ++c) {
            const auto k = unravel_interior(c);
            Scalar l(0);
            for (int a = 0; a < grid.dim(); ++a)
                l += dirichlet_eigenvalue<Scalar>(k[a] + 1, grid.points(a), grid.spacing(a));
            lambda[static_cast<std::size_t>(c)] = l;
        }
        std::vector<Index> order(static_cast<std::size_t>(total));
        std::iota(order.begin(), order.end(), Index(0));
        std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
            return lambda[static_cast<std::size_t>(x)] < lambda[static_cast<std::size_t>(y)];
        });
        keep_.assign(static_cast<std::size_t>(total), false);
        for (Index r = 0; r < modes; ++r) keep_[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = true;
    }

    Index modes() const noexcept { return modes_; }
    const Grid<Scalar>& grid() const noexcept { return grid_; }

    /// Sine coefficients of the interior values, in interior row-major order.
    Vector<Scalar> coefficients(const ScalarField<Scalar>& f) const {
        return wide_coefficients(f).template cast<Scalar>();
    }

    ScalarField<Scalar> project(const ScalarField<Scalar>& f) const {
        if (f.bc != BoundaryTag::DirichletZero) throw InvalidInput("galerkin: DirichletZero field required");
        Vector<Wide> c = wide_coefficients(f);
        for (Index i = 0; i < c.size(); ++i)
            if (!keep_[static_cast<std::size_t>(i)]) c[i] = Wide(0);
        for (int a = 0; a < grid_.dim(); ++a) transform_axis(c, a);
        return ScalarField<Scalar>(grid_, scatter_interior(c), BoundaryTag::DirichletZero);
    }

    VectorField<Scalar> project(const VectorField<Scalar>& w) const {
        VectorField<Scalar> out = w;
        for (auto& c : out.components) c = project(c);
        return out;
    }

private:
    Vector<Wide> wide_coefficients(const ScalarField<Scalar>& f) const {
        if (f.grid != grid_) throw InvalidInput("galerkin: grid mismatch");
        Vector<Wide> c = gather_interior(f.values);
        for (int a = 0; a < grid_.dim(); ++a) transform_axis(c, a);
        return c;
    }

    std::array<Index, 3> unravel_interior(Index c) const {
        return {c / (interior_[1] * interior_[2]), (c / interior_[2]) % interior_[1], c % interior_[2]};
    }

    Vector<Wide> gather_interior(const Vector<Scalar>& v) const {
        Vector<Wide> out(grid_.interior_size());
        for (Index c = 0; c < out.size(); ++c) out[c] = static_cast<Wide>(v[grid_point(c)]);
        return out;
    }

    Vector<Scalar> scatter_interior(const Vector<Wide>& c) const {
        Vector<Scalar> out = Vector<Scalar>::Zero(grid_.size());
        for (Index i = 0; i < c.size(); ++i) out[grid_point(i)] = static_cast<Scalar>(c[i]);
        return out;
    }

    Index grid_point(Index c) const {
        const auto k = unravel_interior(c);
        std::array<Index, 3> idx{0, 0, 0};
        for (int a = 0; a < grid_.dim(); ++a) idx[a] = k[a] + 1;
        return grid_.flat(idx[0], idx[1], idx[2]);
    }

    // Applies S along one axis of the interior tensor; S is symmetric and
    // orthogonal, so the forward and inverse transforms coincide.
    void transform_axis(Vector<Wide>& data, int axis) const {
        const Index m = interior_[axis];
        Index stride = 1;
        for (int a = axis + 1; a < 3; ++a) stride *= interior_[a];
        const Index outer = data.size() / (m * stride);
        Vector<Wide> line(m), mapped(m);
        for (Index o = 0; o < outer; ++o)
            for (Index t = 0; t < stride; ++t) {
                const Index base = o * m * stride + t;
                for (Index i = 0; i < m; ++i) line[i] = data[base + i * stride];
                transform_[axis]->apply(line.data(), mapped.data());
                for (Index i = 0; i < m; ++i) data[base + i * stride] = mapped[i];
            }
    }

    Grid<Scalar> grid_;
    Index modes_;
    std::array<Index, 3> interior_{1, 1, 1};
    std::array<std::shared_ptr<const detail::SineTransform>, 3> transform_;
    std::vector<bool> keep_;
};

template <typename Scalar>
VectorField<Scalar> project_galerkin(const VectorField<Scalar>& w, Index n) {
    return SineProjector<Scalar>(w.grid(), n).project(w);
}

}  // namespace thermoflow
