#pragma once

#include <array>
#include <cmath>
#include <string>

#include "thermoflow/grid.hpp"

// Second-order finite-difference calculus on the collocated box grid.
//
// Boundary conventions are chosen so that, in the trapezoidal inner product,
//   <grad f, w> = -<f, div w>   for NeumannZero f and DirichletZero w,
//   <lap f, g>  =  <f, lap g>   for matching tags,
// hold to rounding. Interior stencils are the usual centered ones.

namespace thermoflow {

namespace detail {

// Calls fn(offset) for the first point of every grid line along `axis`.
template <typename Scalar, typename Fn>
void for_each_line(const Grid<Scalar>& g, int axis, Fn&& fn) {
    std::array<Index, 3> n = g.extents();
    n[axis] = 1;
    for (Index i = 0; i < n[0]; ++i)
        for (Index j = 0; j < n[1]; ++j)
            for (Index k = 0; k < n[2]; ++k) fn(g.flat(i, j, k));
}

template <typename Scalar>
void require_finite(const ScalarField<Scalar>& f, const char* where) {
    if (!f.all_finite()) throw InvalidInput(std::string(where) + ": field contains NaN or Inf");
}

template <typename Scalar>
void require_same_grid(const Grid<Scalar>& a, const Grid<Scalar>& b, const char* where) {
    if (a != b) throw InvalidInput(std::string(where) + ": grid mismatch");
}

}  // namespace detail

/// d f / d x_axis.
///
/// Centered in the interior. At the two ends of the axis a NeumannZero input
/// uses its mirror ghost, which makes the normal derivative exactly zero;
/// other inputs use the one-sided second-order formula.
template <typename Scalar>
ScalarField<Scalar> partial(const ScalarField<Scalar>& f, int axis) {
    detail::require_finite(f, "partial");
    const Grid<Scalar>& g = f.grid;
    if (axis < 0 || axis >= g.dim()) throw InvalidInput("partial: axis out of range");
    const Index n = g.points(axis);
    const Index s = g.stride(axis);
    const Scalar inv2h = Scalar(1) / (Scalar(2) * g.spacing(axis));
    const bool mirror = f.bc == BoundaryTag::NeumannZero;
    const auto& x = f.values;
    Vector<Scalar> out(g.size());
    detail::for_each_line(g, axis, [&](Index o) {
        for (Index i = 1; i + 1 < n; ++i) out[o + i * s] = (x[o + (i + 1) * s] - x[o + (i - 1) * s]) * inv2h;
        const Index last = o + (n - 1) * s;
        if (mirror) {
            out[o] = Scalar(0);
            out[last] = Scalar(0);
        } else {
            out[o] = (Scalar(-3) * x[o] + Scalar(4) * x[o + s] - x[o + 2 * s]) * inv2h;
            out[last] = (Scalar(3) * x[last] - Scalar(4) * x[last - s] + x[last - 2 * s]) * inv2h;
        }
    });
    return ScalarField<Scalar>(g, std::move(out), BoundaryTag::None);
}

template <typename Scalar>
VectorField<Scalar> gradient(const ScalarField<Scalar>& f) {
    std::vector<ScalarField<Scalar>> comps;
    comps.reserve(static_cast<std::size_t>(f.grid.dim()));
    for (int a = 0; a < f.grid.dim(); ++a) comps.push_back(partial(f, a));
    return VectorField<Scalar>(std::move(comps));
}

/// Discrete divergence of a DirichletZero vector field, the negative adjoint
/// of `gradient` on NeumannZero scalars. Centered in the interior, one-sided
/// first order on the boundary rows (where the trapezoid weight is halved).
template <typename Scalar>
ScalarField<Scalar> divergence(const VectorField<Scalar>& w) {
    const Grid<Scalar>& g = w.grid();
    if (w.bc() != BoundaryTag::DirichletZero) throw InvalidInput("divergence: components must be DirichletZero");
    Vector<Scalar> out = Vector<Scalar>::Zero(g.size());
    for (int a = 0; a < g.dim(); ++a) {
        detail::require_finite(w[a], "divergence");
        const Index n = g.points(a);
        const Index s = g.stride(a);
        const Scalar h = g.spacing(a);
        const Scalar inv2h = Scalar(1) / (Scalar(2) * h);
        const auto& x = w[a].values;
        detail::for_each_line(g, a, [&](Index o) {
            for (Index i = 1; i + 1 < n; ++i) out[o + i * s] += (x[o + (i + 1) * s] - x[o + (i - 1) * s]) * inv2h;
            const Index last = o + (n - 1) * s;
            out[o] += (x[o + s] - x[o]) / h;
            out[last] += (x[last] - x[last - s]) / h;
        });
    }
    return ScalarField<Scalar>(g, std::move(out), BoundaryTag::None);
}

namespace detail {

// out = lap x for the given tag; out must already have the grid's size.
template <typename Scalar>
void apply_laplacian(const Grid<Scalar>& g, BoundaryTag bc, const Vector<Scalar>& x, Vector<Scalar>& out) {
    const bool dirichlet = bc == BoundaryTag::DirichletZero;
    out.setZero();
    for (int a = 0; a < g.dim(); ++a) {
        const Index n = g.points(a);
        const Index s = g.stride(a);
        const Scalar inv_h2 = Scalar(1) / (g.spacing(a) * g.spacing(a));
        for_each_line(g, a, [&](Index o) {
            const Scalar* xl = x.data() + o;
            Scalar* ol = out.data() + o;
            for (Index i = 1; i + 1 < n; ++i)
                ol[i * s] += (xl[(i + 1) * s] - Scalar(2) * xl[i * s] + xl[(i - 1) * s]) * inv_h2;
            if (!dirichlet) {
                ol[0] += Scalar(2) * (xl[s] - xl[0]) * inv_h2;
                ol[(n - 1) * s] += Scalar(2) * (xl[(n - 2) * s] - xl[(n - 1) * s]) * inv_h2;
            }
        });
    }
    if (dirichlet) {
        for (int a = 0; a < g.dim(); ++a) {
            const Index n = g.points(a);
            const Index s = g.stride(a);
            for_each_line(g, a, [&](Index o) {
                out[o] = Scalar(0);
                out[o + (n - 1) * s] = Scalar(0);
            });
        }
    }
}

}  // namespace detail

/// (2*dim+1)-point Laplacian. DirichletZero: zero ghosts, zero output on the
/// boundary. NeumannZero: mirror ghosts.
template <typename Scalar>
ScalarField<Scalar> laplacian(const ScalarField<Scalar>& f) {
    detail::require_finite(f, "laplacian");
    if (f.bc == BoundaryTag::None) throw InvalidInput("laplacian: field has no boundary condition");
    Vector<Scalar> out(f.grid.size());
    detail::apply_laplacian(f.grid, f.bc, f.values, out);
    return ScalarField<Scalar>(f.grid, std::move(out), f.bc);
}

/// Trapezoidal quadrature; fixed summation order.
template <typename Scalar>
Scalar integrate(const ScalarField<Scalar>& f) {
    detail::require_finite(f, "integrate");
    return f.grid.weights().dot(f.values);
}

template <typename Scalar>
Scalar inner(const ScalarField<Scalar>& f, const ScalarField<Scalar>& g) {
    detail::require_same_grid(f.grid, g.grid, "inner");
    detail::require_finite(f, "inner");
    detail::require_finite(g, "inner");
    return (f.grid.weights().array() * f.values.array() * g.values.array()).sum();
}

template <typename Scalar>
Scalar inner(const VectorField<Scalar>& a, const VectorField<Scalar>& b) {
    if (a.dim() != b.dim()) throw InvalidInput("inner: vector fields of different dimension");
    Scalar s(0);
    for (int c = 0; c < a.dim(); ++c) s += inner(a[c], b[c]);
    return s;
}

template <typename Scalar>
Scalar l2_norm(const ScalarField<Scalar>& f) {
    return std::sqrt(inner(f, f));
}

template <typename Scalar>
Scalar l2_norm(const VectorField<Scalar>& w) {
    return std::sqrt(inner(w, w));
}

/// -<f, lap f>: the discrete Dirichlet integral matched to the Laplacian
/// stencil. Equals the quadrature of the squared one-sided difference
/// quotients on grid edges.
template <typename Scalar>
Scalar dirichlet_form(const ScalarField<Scalar>& f) {
    return -inner(f, laplacian(f));
}

template <typename Scalar>
Scalar dirichlet_form(const VectorField<Scalar>& w) {
    Scalar s(0);
    for (const auto& c : w.components) s += dirichlet_form(c);
    return s;
}

/// Pointwise |grad f|^2 from face differences: each point averages the squared
/// differences on its two faces per axis (its one face on the boundary).
/// The trapezoid integral equals the sum of h * d^2 over faces, i.e. the
/// Dirichlet form of the Neumann Laplacian, and is exact for linear f.
template <typename Scalar>
Vector<Scalar> gradient_density(const ScalarField<Scalar>& f) {
    detail::require_finite(f, "gradient_density");
    const Grid<Scalar>& g = f.grid;
    Vector<Scalar> out = Vector<Scalar>::Zero(g.size());
    for (int a = 0; a < g.dim(); ++a) {
        const Index n = g.points(a);
        const Index s = g.stride(a);
        const Scalar inv_h = Scalar(1) / g.spacing(a);
        const auto& x = f.values;
        detail::for_each_line(g, a, [&](Index o) {
            Scalar prev = Scalar(0);
            for (Index i = 0; i + 1 < n; ++i) {
                const Scalar d = (x[o + (i + 1) * s] - x[o + i * s]) * inv_h;
                const Scalar sq = d * d;
                out[o + i * s] += i == 0 ? sq : Scalar(0.5) * (prev + sq);
                prev = sq;
            }
            out[o + (n - 1) * s] += prev;
        });
    }
    return out;
}

/// Second derivative d^2 f / dx_a dx_b of a NeumannZero field, computed with
/// centered stencils on the even (mirror) extension across the boundary.
template <typename Scalar>
ScalarField<Scalar> second_derivative(const ScalarField<Scalar>& f, int a, int b) {
    detail::require_finite(f, "second_derivative");
    if (f.bc != BoundaryTag::NeumannZero) throw InvalidInput("second_derivative: NeumannZero field required");
    const Grid<Scalar>& g = f.grid;
    if (a < 0 || b < 0 || a >= g.dim() || b >= g.dim()) throw InvalidInput("second_derivative: axis out of range");
    auto reflect = [](Index i, Index n) { return i < 0 ? -i : (i > n - 1 ? 2 * (n - 1) - i : i); };
    const auto& x = f.values;
    Vector<Scalar> out(g.size());
    if (a == b) {
        const Index n = g.points(a);
        const Index s = g.stride(a);
        const Scalar inv_h2 = Scalar(1) / (g.spacing(a) * g.spacing(a));
        detail::for_each_line(g, a, [&](Index o) {
            for (Index i = 0; i < n; ++i)
                out[o + i * s] =
                    (x[o + reflect(i + 1, n) * s] - Scalar(2) * x[o + i * s] + x[o + reflect(i - 1, n) * s]) * inv_h2;
        });
    } else {
        const Index na = g.points(a), nb = g.points(b);
        const Index sa = g.stride(a), sb = g.stride(b);
        const Scalar scale = Scalar(1) / (Scalar(4) * g.spacing(a) * g.spacing(b));
        for (Index p = 0; p < g.size(); ++p) {
            const auto idx = g.unravel(p);
            const Index ia = idx[a], ib = idx[b];
            const Index base = p - ia * sa - ib * sb;
            auto at = [&](Index i, Index j) { return x[base + reflect(i, na) * sa + reflect(j, nb) * sb]; };
            out[p] = (at(ia + 1, ib + 1) - at(ia + 1, ib - 1) - at(ia - 1, ib + 1) + at(ia - 1, ib - 1)) * scale;
        }
    }
    return ScalarField<Scalar>(g, std::move(out), BoundaryTag::None);
}

/// Pointwise Frobenius norm squared of the discrete Hessian.
template <typename Scalar>
Vector<Scalar> hessian_norm_squared(const ScalarField<Scalar>& f) {
    Vector<Scalar> acc = Vector<Scalar>::Zero(f.grid.size());
    for (int a = 0; a < f.grid.dim(); ++a)
        for (int b = a; b < f.grid.dim(); ++b) {
            const auto d = second_derivative(f, a, b);
            acc.array() += (a == b ? Scalar(1) : Scalar(2)) * d.values.array().square();
        }
    return acc;
}

}  // namespace thermoflow
