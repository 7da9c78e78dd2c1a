#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include "kathleen/fft.hpp"
#include "kathleen/tape.hpp"
#include "kathleen/tensor.hpp"

namespace kathleen {

// ---------------------------------------------------------------------------
// broadcast machinery (right-aligned, NumPy rules)
// ---------------------------------------------------------------------------

inline Shape broadcast_shape(const char* op, const Shape& a, const Shape& b) {
    int ra = static_cast<int>(a.size()), rb = static_cast<int>(b.size());
    int r = std::max(ra, rb);
    Shape out(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
        int64_t da = (i < r - ra) ? 1 : a[static_cast<size_t>(i - (r - ra))];
        int64_t db = (i < r - rb) ? 1 : b[static_cast<size_t>(i - (r - rb))];
        if (da != db && da != 1 && db != 1) shape_fail(op, a, b);
        out[static_cast<size_t>(i)] = std::max(da, db);
    }
    return out;
}

// Row-major strides of `in` aligned to the (broadcast) output shape,
// with 0 where the input dimension is broadcast.
inline std::vector<int64_t> broadcast_strides(const Shape& in, const Shape& out) {
    int r = static_cast<int>(out.size()), ri = static_cast<int>(in.size());
    std::vector<int64_t> strides(in.size());
    int64_t acc = 1;
    for (int i = ri - 1; i >= 0; --i) {
        strides[static_cast<size_t>(i)] = acc;
        acc *= in[static_cast<size_t>(i)];
    }
    std::vector<int64_t> s(static_cast<size_t>(r), 0);
    for (int i = 0; i < r; ++i) {
        int j = i - (r - ri);
        if (j >= 0 && in[static_cast<size_t>(j)] != 1) s[static_cast<size_t>(i)] = strides[static_cast<size_t>(j)];
    }
    return s;
}

// Calls fn(out_linear_index, a_offset, b_offset) for every output element.
template <class F>
void broadcast_walk(const Shape& out, const std::vector<int64_t>& sa, const std::vector<int64_t>& sb,
                    F&& fn) {
    const int r = static_cast<int>(out.size());
    const int64_t n = shape_numel(out);
    if (r == 0) {
        if (n == 1) fn(int64_t{0}, int64_t{0}, int64_t{0});
        return;
    }
    std::vector<int64_t> idx(static_cast<size_t>(r), 0);
    int64_t ao = 0, bo = 0;
    for (int64_t o = 0; o < n; ++o) {
        fn(o, ao, bo);
        for (int d = r - 1; d >= 0; --d) {
            idx[static_cast<size_t>(d)]++;
            ao += sa[static_cast<size_t>(d)];
            bo += sb[static_cast<size_t>(d)];
            if (idx[static_cast<size_t>(d)] < out[static_cast<size_t>(d)]) break;
            ao -= sa[static_cast<size_t>(d)] * out[static_cast<size_t>(d)];
            bo -= sb[static_cast<size_t>(d)] * out[static_cast<size_t>(d)];
            idx[static_cast<size_t>(d)] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// elementwise binary ops
// ---------------------------------------------------------------------------

// fwd(a,b) -> y; da(g,a,b) and db(g,a,b) -> grad contributions.
template <std::floating_point S, class FwdF, class DaF, class DbF>
TensorT<S> binary_op(const char* name, const TensorT<S>& a, const TensorT<S>& b, FwdF fwd, DaF da,
                     DbF db) {
    Shape os = broadcast_shape(name, a.shape(), b.shape());
    auto y = TensorT<S>::zeros(os);
    const auto& av = a.data();
    const auto& bv = b.data();
    auto& yv = y.data();

    const bool same = (a.shape() == b.shape());
    if (same) {
        const int64_t n = y.numel();
        for (int64_t i = 0; i < n; ++i) yv[static_cast<size_t>(i)] = fwd(av[static_cast<size_t>(i)], bv[static_cast<size_t>(i)]);
    } else {
        auto sa = broadcast_strides(a.shape(), os);
        auto sb = broadcast_strides(b.shape(), os);
        broadcast_walk(os, sa, sb, [&](int64_t o, int64_t ao, int64_t bo) {
            yv[static_cast<size_t>(o)] = fwd(av[static_cast<size_t>(ao)], bv[static_cast<size_t>(bo)]);
        });
    }
    check_finite(yv, name);

    if (grad_needed<S>({&a, &b})) {
        y.set_requires_grad(true);
        auto ai = a.impl(), bi = b.impl(), yi = y.impl();
        Shape oshape = os;
        TapeT<S>::active()->record([ai, bi, yi, oshape, same, da, db] {
            if (yi->grad.empty()) return;
            const auto& g = yi->grad;
            const auto& av2 = ai->value;
            const auto& bv2 = bi->value;
            const bool na = ai->requires_grad, nb = bi->requires_grad;
            if (!na && !nb) return;
            if (na) ai->ensure_grad();
            if (nb) bi->ensure_grad();
            if (same) {
                const int64_t n = static_cast<int64_t>(g.size());
                for (int64_t i = 0; i < n; ++i) {
                    size_t u = static_cast<size_t>(i);
                    if (na) ai->grad[u] += da(g[u], av2[u], bv2[u]);
                    if (nb) bi->grad[u] += db(g[u], av2[u], bv2[u]);
                }
            } else {
                auto sa = broadcast_strides(ai->shape, oshape);
                auto sb = broadcast_strides(bi->shape, oshape);
                broadcast_walk(oshape, sa, sb, [&](int64_t o, int64_t ao, int64_t bo) {
                    size_t uo = static_cast<size_t>(o), ua = static_cast<size_t>(ao), ub = static_cast<size_t>(bo);
                    if (na) ai->grad[ua] += da(g[uo], av2[ua], bv2[ub]);
                    if (nb) bi->grad[ub] += db(g[uo], av2[ua], bv2[ub]);
                });
            }
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    return binary_op(
        "add", a, b, [](S x, S y) { return x + y; }, [](S g, S, S) { return g; },
        [](S g, S, S) { return g; });
}

template <std::floating_point S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    return binary_op(
        "sub", a, b, [](S x, S y) { return x - y; }, [](S g, S, S) { return g; },
        [](S g, S, S) { return -g; });
}

template <std::floating_point S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    return binary_op(
        "mul", a, b, [](S x, S y) { return x * y; }, [](S g, S, S y) { return g * y; },
        [](S g, S x, S) { return g * x; });
}

template <std::floating_point S>
TensorT<S> div(const TensorT<S>& a, const TensorT<S>& b) {
    return binary_op(
        "div", a, b, [](S x, S y) { return x / y; }, [](S g, S, S y) { return g / y; },
        [](S g, S x, S y) { return -g * x / (y * y); });
}

// ---------------------------------------------------------------------------
// elementwise unary ops
// ---------------------------------------------------------------------------

// d(x,y) is evaluated from the saved input and output values.
template <std::floating_point S, class FwdF, class DF>
TensorT<S> unary_op(const char* name, const TensorT<S>& x, FwdF fwd, DF d) {
    auto y = TensorT<S>::zeros(x.shape());
    const auto& xv = x.data();
    auto& yv = y.data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) yv[static_cast<size_t>(i)] = fwd(xv[static_cast<size_t>(i)]);
    check_finite(yv, name);

    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, d] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            const auto& g = yi->grad;
            const int64_t n2 = static_cast<int64_t>(g.size());
            for (int64_t i = 0; i < n2; ++i) {
                size_t u = static_cast<size_t>(i);
                xi->grad[u] += g[u] * d(xi->value[u], yi->value[u]);
            }
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> sigmoid(const TensorT<S>& x) {
    return unary_op(
        "sigmoid", x,
        [](S v) { return v >= 0 ? S(1) / (S(1) + std::exp(-v)) : std::exp(v) / (S(1) + std::exp(v)); },
        [](S, S y) { return y * (S(1) - y); });
}

template <std::floating_point S>
TensorT<S> tanh(const TensorT<S>& x) {
    return unary_op(
        "tanh", x, [](S v) { return std::tanh(v); }, [](S, S y) { return S(1) - y * y; });
}

template <std::floating_point S>
TensorT<S> sin(const TensorT<S>& x) {
    return unary_op(
        "sin", x, [](S v) { return std::sin(v); }, [](S v, S) { return std::cos(v); });
}

template <std::floating_point S>
TensorT<S> cos(const TensorT<S>& x) {
    return unary_op(
        "cos", x, [](S v) { return std::cos(v); }, [](S v, S) { return -std::sin(v); });
}

template <std::floating_point S>
TensorT<S> exp(const TensorT<S>& x) {
    return unary_op(
        "exp", x, [](S v) { return std::exp(v); }, [](S, S y) { return y; });
}

template <std::floating_point S>
TensorT<S> log(const TensorT<S>& x) {
    return unary_op(
        "log", x, [](S v) { return std::log(v); }, [](S v, S) { return S(1) / v; });
}

template <std::floating_point S>
TensorT<S> abs(const TensorT<S>& x) {
    return unary_op(
        "abs", x, [](S v) { return std::abs(v); },
        [](S v, S) { return v > 0 ? S(1) : (v < 0 ? S(-1) : S(0)); });
}

template <std::floating_point S>
TensorT<S> sign(const TensorT<S>& x) {
    return unary_op(
        "sign", x, [](S v) { return v > 0 ? S(1) : (v < 0 ? S(-1) : S(0)); },
        [](S, S) { return S(0); });
}

template <std::floating_point S>
TensorT<S> softplus(const TensorT<S>& x) {
    return unary_op(
        "softplus", x,
        [](S v) {
            if (v > S(20)) return v;
            if (v < S(-20)) return std::exp(v);
            return std::log1p(std::exp(v));
        },
        [](S v, S) { return v >= 0 ? S(1) / (S(1) + std::exp(-v)) : std::exp(v) / (S(1) + std::exp(v)); });
}

template <std::floating_point S>
TensorT<S> scale(const TensorT<S>& x, double c) {
    const S cs = static_cast<S>(c);
    return unary_op(
        "scale", x, [cs](S v) { return cs * v; }, [cs](S, S) { return cs; });
}

template <std::floating_point S>
TensorT<S> add_const(const TensorT<S>& x, double c) {
    const S cs = static_cast<S>(c);
    return unary_op(
        "add_const", x, [cs](S v) { return v + cs; }, [](S, S) { return S(1); });
}

template <std::floating_point S>
TensorT<S> neg(const TensorT<S>& x) {
    return scale(x, -1.0);
}

// x^e for x >= 0, e a learnable scalar. Gradient at x == 0 is clamped to 0
// (both wrt x and e), which is the correct limit for e > 0.
template <std::floating_point S>
TensorT<S> pow(const TensorT<S>& x, const TensorT<S>& e) {
    if (e.numel() != 1) throw ShapeError("pow: exponent must be scalar, got " + shape_str(e.shape()));
    const S ev = e.data()[0];
    auto y = TensorT<S>::zeros(x.shape());
    const auto& xv = x.data();
    auto& yv = y.data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) {
        S v = xv[static_cast<size_t>(i)];
        if (v < S(0)) throw NumericError("pow: negative base");
        yv[static_cast<size_t>(i)] = std::pow(v, ev);
    }
    check_finite(yv, "pow");

    if (grad_needed<S>({&x, &e})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), ei = e.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, ei, yi, ev] {
            if (yi->grad.empty()) return;
            const auto& g = yi->grad;
            const int64_t n2 = static_cast<int64_t>(g.size());
            if (xi->requires_grad) {
                xi->ensure_grad();
                for (int64_t i = 0; i < n2; ++i) {
                    size_t u = static_cast<size_t>(i);
                    S v = xi->value[u];
                    if (v > S(0)) xi->grad[u] += g[u] * ev * std::pow(v, ev - S(1));
                }
            }
            if (ei->requires_grad) {
                ei->ensure_grad();
                S acc = 0;
                for (int64_t i = 0; i < n2; ++i) {
                    size_t u = static_cast<size_t>(i);
                    S v = xi->value[u];
                    if (v > S(0)) acc += g[u] * yi->value[u] * std::log(v);
                }
                ei->grad[0] += acc;
            }
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// matmul / linear
// ---------------------------------------------------------------------------

namespace detail {
template <std::floating_point S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <std::floating_point S>
using EMap = Eigen::Map<EMat<S>>;
template <std::floating_point S>
using ECMap = Eigen::Map<const EMat<S>>;

// y[m,n] (+)= a[m,k] * b[k,n], row blocks across threads
template <std::floating_point S>
void gemm(const S* a, const S* b, S* y, int64_t m, int64_t k, int64_t n, bool accumulate) {
    parallel_for(m, 64, [&](int64_t lo, int64_t hi) {
        if (lo >= hi) return;
        ECMap<S> A(a + lo * k, hi - lo, k);
        ECMap<S> B(b, k, n);
        EMap<S> Y(y + lo * n, hi - lo, n);
        if (accumulate)
            Y.noalias() += A * B;
        else
            Y.noalias() = A * B;
    });
}

// y[m,n] (+)= a[k,m]^T * b[k,n]
template <std::floating_point S>
void gemm_tn(const S* a, const S* b, S* y, int64_t m, int64_t k, int64_t n, bool accumulate) {
    ECMap<S> A(a, k, m);
    ECMap<S> B(b, k, n);
    EMap<S> Y(y, m, n);
    if (accumulate)
        Y.noalias() += A.transpose() * B;
    else
        Y.noalias() = A.transpose() * B;
}

// y[m,k] (+)= a[m,n] * b[k,n]^T
template <std::floating_point S>
void gemm_nt(const S* a, const S* b, S* y, int64_t m, int64_t n, int64_t k, bool accumulate) {
    parallel_for(m, 64, [&](int64_t lo, int64_t hi) {
        if (lo >= hi) return;
        ECMap<S> A(a + lo * n, hi - lo, n);
        ECMap<S> B(b, k, n);
        EMap<S> Y(y + lo * k, hi - lo, k);
        if (accumulate)
            Y.noalias() += A * B.transpose();
        else
            Y.noalias() = A * B.transpose();
    });
}
}  // namespace detail

// a[..., k] x b[k, n] -> [..., n]; leading dims of a are treated as rows.
template <std::floating_point S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() < 2 || b.rank() != 2 || a.shape().back() != b.dim(0)) {
        shape_fail("matmul", a.shape(), b.shape());
    }
    const int64_t k = b.dim(0), n = b.dim(1);
    const int64_t m = a.numel() / k;
    Shape os(a.shape().begin(), a.shape().end() - 1);
    os.push_back(n);
    auto y = TensorT<S>::zeros(os);
    detail::gemm(a.data().data(), b.data().data(), y.data().data(), m, k, n, false);
    check_finite(y.data(), "matmul");

    if (grad_needed<S>({&a, &b})) {
        y.set_requires_grad(true);
        auto ai = a.impl(), bi = b.impl(), yi = y.impl();
        TapeT<S>::active()->record([ai, bi, yi, m, k, n] {
            if (yi->grad.empty()) return;
            const S* g = yi->grad.data();
            if (ai->requires_grad) {
                ai->ensure_grad();
                detail::gemm_nt(g, bi->value.data(), ai->grad.data(), m, n, k, true);
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                detail::gemm_tn(ai->value.data(), g, bi->grad.data(), k, m, n, true);
            }
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& bias) {
    auto y = matmul(x, w);
    return bias.defined() ? add(y, bias) : y;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

namespace detail {
struct AxisSplit {
    int64_t outer, n, inner;
};
inline AxisSplit axis_split(const Shape& s, int axis) {
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    AxisSplit sp{1, s[static_cast<size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) sp.outer *= s[static_cast<size_t>(i)];
    for (int i = axis + 1; i < static_cast<int>(s.size()); ++i) sp.inner *= s[static_cast<size_t>(i)];
    return sp;
}
inline Shape drop_axis(const Shape& s, int axis) {
    Shape r;
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
        if (i != axis) r.push_back(s[static_cast<size_t>(i)]);
    }
    if (r.empty()) r.push_back(1);
    return r;
}
}  // namespace detail

template <std::floating_point S>
TensorT<S> sum_all(const TensorT<S>& x) {
    S acc = 0;
    for (S v : x.data()) acc += v;
    auto y = TensorT<S>::scalar(acc);
    check_finite(y.data(), "sum");
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            const S g = yi->grad[0];
            for (auto& gx : xi->grad) gx += g;
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> mean(const TensorT<S>& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

template <std::floating_point S>
TensorT<S> sum_axis(const TensorT<S>& x, int axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    auto y = TensorT<S>::zeros(detail::drop_axis(x.shape(), axis));
    const auto& xv = x.data();
    auto& yv = y.data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t t = 0; t < sp.n; ++t) {
            const S* src = xv.data() + (o * sp.n + t) * sp.inner;
            S* dst = yv.data() + o * sp.inner;
            for (int64_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
        }
    }
    check_finite(yv, "sum_axis");
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, sp] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (int64_t o = 0; o < sp.outer; ++o) {
                for (int64_t t = 0; t < sp.n; ++t) {
                    S* dst = xi->grad.data() + (o * sp.n + t) * sp.inner;
                    const S* g = yi->grad.data() + o * sp.inner;
                    for (int64_t i = 0; i < sp.inner; ++i) dst[i] += g[i];
                }
            }
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> mean_axis(const TensorT<S>& x, int axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    return scale(sum_axis(x, axis), 1.0 / static_cast<double>(sp.n));
}

template <std::floating_point S>
TensorT<S> max_over_axis(const TensorT<S>& x, int axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    if (sp.n < 1) throw ShapeError("max_over_axis: empty axis in " + shape_str(x.shape()));
    auto y = TensorT<S>::zeros(detail::drop_axis(x.shape(), axis));
    const auto& xv = x.data();
    auto& yv = y.data();
    std::vector<int64_t> arg(static_cast<size_t>(sp.outer * sp.inner), 0);
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            S best = xv[static_cast<size_t>((o * sp.n) * sp.inner + i)];
            int64_t bt = 0;
            for (int64_t t = 1; t < sp.n; ++t) {
                S v = xv[static_cast<size_t>((o * sp.n + t) * sp.inner + i)];
                if (v > best) {
                    best = v;
                    bt = t;
                }
            }
            yv[static_cast<size_t>(o * sp.inner + i)] = best;
            arg[static_cast<size_t>(o * sp.inner + i)] = bt;
        }
    }
    check_finite(yv, "max_over_axis");
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, sp, arg = std::move(arg)] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (int64_t o = 0; o < sp.outer; ++o) {
                for (int64_t i = 0; i < sp.inner; ++i) {
                    int64_t t = arg[static_cast<size_t>(o * sp.inner + i)];
                    xi->grad[static_cast<size_t>((o * sp.n + t) * sp.inner + i)] +=
                        yi->grad[static_cast<size_t>(o * sp.inner + i)];
                }
            }
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> softmax(const TensorT<S>& x, int axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    auto y = TensorT<S>::zeros(x.shape());
    const auto& xv = x.data();
    auto& yv = y.data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            const int64_t base = o * sp.n * sp.inner + i;
            S m = xv[static_cast<size_t>(base)];
            for (int64_t t = 1; t < sp.n; ++t) m = std::max(m, xv[static_cast<size_t>(base + t * sp.inner)]);
            S z = 0;
            for (int64_t t = 0; t < sp.n; ++t) {
                S e = std::exp(xv[static_cast<size_t>(base + t * sp.inner)] - m);
                yv[static_cast<size_t>(base + t * sp.inner)] = e;
                z += e;
            }
            for (int64_t t = 0; t < sp.n; ++t) yv[static_cast<size_t>(base + t * sp.inner)] /= z;
        }
    }
    check_finite(yv, "softmax");
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, sp] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            const auto& g = yi->grad;
            const auto& yv2 = yi->value;
            for (int64_t o = 0; o < sp.outer; ++o) {
                for (int64_t i = 0; i < sp.inner; ++i) {
                    const int64_t base = o * sp.n * sp.inner + i;
                    S dot = 0;
                    for (int64_t t = 0; t < sp.n; ++t) {
                        size_t u = static_cast<size_t>(base + t * sp.inner);
                        dot += g[u] * yv2[u];
                    }
                    for (int64_t t = 0; t < sp.n; ++t) {
                        size_t u = static_cast<size_t>(base + t * sp.inner);
                        xi->grad[u] += yv2[u] * (g[u] - dot);
                    }
                }
            }
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> cumsum(const TensorT<S>& x, int axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    auto y = TensorT<S>::zeros(x.shape());
    const auto& xv = x.data();
    auto& yv = y.data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            const int64_t base = o * sp.n * sp.inner + i;
            S acc = 0;
            for (int64_t t = 0; t < sp.n; ++t) {
                acc += xv[static_cast<size_t>(base + t * sp.inner)];
                yv[static_cast<size_t>(base + t * sp.inner)] = acc;
            }
        }
    }
    check_finite(yv, "cumsum");
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, sp] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            const auto& g = yi->grad;
            for (int64_t o = 0; o < sp.outer; ++o) {
                for (int64_t i = 0; i < sp.inner; ++i) {
                    const int64_t base = o * sp.n * sp.inner + i;
                    S acc = 0;
                    for (int64_t t = sp.n - 1; t >= 0; --t) {
                        acc += g[static_cast<size_t>(base + t * sp.inner)];
                        xi->grad[static_cast<size_t>(base + t * sp.inner)] += acc;
                    }
                }
            }
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

template <std::floating_point S>
TensorT<S> reshape(const TensorT<S>& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        shape_fail("reshape", x.shape(), shape);
    }
    auto y = TensorT<S>::from_data(std::move(shape), x.data());
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (size_t i = 0; i < yi->grad.size(); ++i) xi->grad[i] += yi->grad[i];
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> concat(const std::vector<TensorT<S>>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    Shape os = parts[0].shape();
    int64_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != static_cast<int>(os.size())) shape_fail("concat", os, p.shape());
        for (int i = 0; i < p.rank(); ++i) {
            if (i != axis && p.dim(i) != os[static_cast<size_t>(i)]) shape_fail("concat", os, p.shape());
        }
        total += p.dim(axis);
    }
    os[static_cast<size_t>(axis)] = total;
    auto y = TensorT<S>::zeros(os);
    auto spo = detail::axis_split(os, axis);
    auto& yv = y.data();
    int64_t off = 0;
    for (const auto& p : parts) {
        const int64_t pn = p.dim(axis);
        const auto& pv = p.data();
        for (int64_t o = 0; o < spo.outer; ++o) {
            std::memcpy(yv.data() + (o * spo.n + off) * spo.inner, pv.data() + o * pn * spo.inner,
                        static_cast<size_t>(pn * spo.inner * static_cast<int64_t>(sizeof(S))));
        }
        off += pn;
    }

    bool need = false;
    for (const auto& p : parts) need = need || p.requires_grad();
    if (need && TapeT<S>::active()) {
        y.set_requires_grad(true);
        std::vector<std::shared_ptr<TensorImplT<S>>> impls;
        impls.reserve(parts.size());
        for (const auto& p : parts) impls.push_back(p.impl());
        auto yi = y.impl();
        TapeT<S>::active()->record([impls, yi, spo, axis] {
            if (yi->grad.empty()) return;
            int64_t off2 = 0;
            for (const auto& pi : impls) {
                const int64_t pn = pi->shape[static_cast<size_t>(axis)];
                if (pi->requires_grad) {
                    pi->ensure_grad();
                    for (int64_t o = 0; o < spo.outer; ++o) {
                        const S* g = yi->grad.data() + (o * spo.n + off2) * spo.inner;
                        S* dst = pi->grad.data() + o * pn * spo.inner;
                        for (int64_t i = 0; i < pn * spo.inner; ++i) dst[i] += g[i];
                    }
                }
                off2 += pn;
            }
        });
    }
    return y;
}

template <std::floating_point S>
TensorT<S> slice(const TensorT<S>& x, int axis, int64_t start, int64_t len) {
    auto sp = detail::axis_split(x.shape(), axis);
    if (start < 0 || len < 0 || start + len > sp.n) {
        throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                         ") out of bounds for axis of length " + std::to_string(sp.n));
    }
    Shape os = x.shape();
    os[static_cast<size_t>(axis)] = len;
    auto y = TensorT<S>::zeros(os);
    const auto& xv = x.data();
    auto& yv = y.data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        std::memcpy(yv.data() + o * len * sp.inner, xv.data() + (o * sp.n + start) * sp.inner,
                    static_cast<size_t>(len * sp.inner * static_cast<int64_t>(sizeof(S))));
    }
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, sp, start, len] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (int64_t o = 0; o < sp.outer; ++o) {
                const S* g = yi->grad.data() + o * len * sp.inner;
                S* dst = xi->grad.data() + (o * sp.n + start) * sp.inner;
                for (int64_t i = 0; i < len * sp.inner; ++i) dst[i] += g[i];
            }
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// detach / embedding / dropout / cross-entropy
// ---------------------------------------------------------------------------

/// Same values, no gradient flow. Never records on the tape.
template <std::floating_point S>
TensorT<S> detach(const TensorT<S>& x) {
    return x.clone();
}

/// table[N,d] indexed by flat indices -> [prefix..., d]; scatter-add adjoint.
template <std::floating_point S>
TensorT<S> embedding_lookup(const TensorT<S>& table, const std::vector<int64_t>& indices,
                            Shape prefix) {
    if (table.rank() != 2) throw ShapeError("embedding_lookup: table must be 2-d, got " + shape_str(table.shape()));
    const int64_t n_rows = table.dim(0), d = table.dim(1);
    if (shape_numel(prefix) != static_cast<int64_t>(indices.size())) {
        throw ShapeError("embedding_lookup: prefix " + shape_str(prefix) + " vs " +
                         std::to_string(indices.size()) + " indices");
    }
    Shape os = prefix;
    os.push_back(d);
    auto y = TensorT<S>::zeros(os);
    const auto& tv = table.data();
    auto& yv = y.data();
    for (size_t i = 0; i < indices.size(); ++i) {
        int64_t r = indices[i];
        if (r < 0 || r >= n_rows) throw ShapeError("embedding_lookup: index " + std::to_string(r) + " out of range");
        std::memcpy(yv.data() + static_cast<int64_t>(i) * d, tv.data() + r * d,
                    static_cast<size_t>(d) * sizeof(S));
    }
    if (grad_needed<S>({&table})) {
        y.set_requires_grad(true);
        auto ti = table.impl(), yi = y.impl();
        TapeT<S>::active()->record([ti, yi, indices, d] {
            if (yi->grad.empty() || !ti->requires_grad) return;
            ti->ensure_grad();
            for (size_t i = 0; i < indices.size(); ++i) {
                const S* g = yi->grad.data() + static_cast<int64_t>(i) * d;
                S* dst = ti->grad.data() + indices[i] * d;
                for (int64_t c = 0; c < d; ++c) dst[c] += g[c];
            }
        });
    }
    return y;
}

/// Inverted dropout; identity when not training. Mask has no gradient.
template <std::floating_point S>
TensorT<S> dropout(const TensorT<S>& x, double p, Prng& rng, bool training) {
    if (!training || p <= 0.0) return x;
    const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
    std::vector<S> mask(static_cast<size_t>(x.numel()));
    for (auto& m : mask) m = (rng.uniform01() >= p) ? keep_scale : S(0);
    auto y = TensorT<S>::zeros(x.shape());
    const auto& xv = x.data();
    auto& yv = y.data();
    for (size_t i = 0; i < yv.size(); ++i) yv[i] = xv[i] * mask[i];
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, mask = std::move(mask)] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (size_t i = 0; i < yi->grad.size(); ++i) xi->grad[i] += yi->grad[i] * mask[i];
        });
    }
    return y;
}

/// Mean over the batch of -log softmax(logits)[label]. Stable log-sum-exp.
template <std::floating_point S>
TensorT<S> cross_entropy(const TensorT<S>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw ShapeError("cross_entropy: logits must be [B,C], got " + shape_str(logits.shape()));
    const int64_t bsz = logits.dim(0), ncls = logits.dim(1);
    if (static_cast<int64_t>(labels.size()) != bsz) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch " + std::to_string(bsz));
    }
    const auto& zv = logits.data();
    double total = 0;
    for (int64_t b = 0; b < bsz; ++b) {
        int lab = labels[static_cast<size_t>(b)];
        if (lab < 0 || lab >= ncls) {
            throw ConfigError("cross_entropy: label " + std::to_string(lab) + " outside [0," + std::to_string(ncls) + ")");
        }
        const S* row = zv.data() + b * ncls;
        S m = row[0];
        for (int64_t c = 1; c < ncls; ++c) m = std::max(m, row[c]);
        double lse = 0;
        for (int64_t c = 0; c < ncls; ++c) lse += std::exp(static_cast<double>(row[c] - m));
        total += static_cast<double>(m) + std::log(lse) - static_cast<double>(row[lab]);
    }
    auto y = TensorT<S>::scalar(static_cast<S>(total / static_cast<double>(bsz)));
    check_finite(y.data(), "cross_entropy");

    if (grad_needed<S>({&logits})) {
        y.set_requires_grad(true);
        auto zi = logits.impl(), yi = y.impl();
        TapeT<S>::active()->record([zi, yi, labels, bsz, ncls] {
            if (yi->grad.empty() || !zi->requires_grad) return;
            zi->ensure_grad();
            const S g = yi->grad[0] / static_cast<S>(bsz);
            for (int64_t b = 0; b < bsz; ++b) {
                const S* row = zi->value.data() + b * ncls;
                S* gz = zi->grad.data() + b * ncls;
                S m = row[0];
                for (int64_t c = 1; c < ncls; ++c) m = std::max(m, row[c]);
                S z = 0;
                for (int64_t c = 0; c < ncls; ++c) z += std::exp(row[c] - m);
                for (int64_t c = 0; c < ncls; ++c) {
                    S p = std::exp(row[c] - m) / z;
                    gz[c] += g * (p - (c == labels[static_cast<size_t>(b)] ? S(1) : S(0)));
                }
            }
        });
    }
    return y;
}

/// Row-wise argmax of [B,C]; plain helper, no tape.
template <std::floating_point S>
std::vector<int> argmax_rows(const TensorT<S>& x) {
    const int64_t bsz = x.dim(0), ncls = x.dim(1);
    std::vector<int> out(static_cast<size_t>(bsz));
    for (int64_t b = 0; b < bsz; ++b) {
        const S* row = x.data().data() + b * ncls;
        int best = 0;
        for (int64_t c = 1; c < ncls; ++c) {
            if (row[c] > row[best]) best = static_cast<int>(c);
        }
        out[static_cast<size_t>(b)] = best;
    }
    return out;
}

// ---------------------------------------------------------------------------
// real FFT ops (one-sided spectrum as a re/im tensor pair)
// ---------------------------------------------------------------------------

template <std::floating_point S>
struct ComplexPairT {
    TensorT<S> re, im;
};

namespace detail {
inline bool plane_fft_ok(int64_t n, int64_t inner) {
    return fftcore::is_pow2(static_cast<size_t>(n)) && inner >= 4;
}
}  // namespace detail

template <std::floating_point S>
ComplexPairT<S> rfft(const TensorT<S>& x, int axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    if (sp.n < 1) throw ShapeError("rfft: empty axis in " + shape_str(x.shape()));
    const int64_t nb = fftcore::rfft_bins(sp.n);
    Shape os = x.shape();
    os[static_cast<size_t>(axis)] = nb;
    auto re = TensorT<S>::zeros(os);
    auto im = TensorT<S>::zeros(os);
    const auto& xv = x.data();
    auto& rv = re.data();
    auto& iv = im.data();
    if (detail::plane_fft_ok(sp.n, sp.inner)) {
        parallel_for(sp.outer, 1, [&](int64_t olo, int64_t ohi) {
            std::vector<double> pr(static_cast<size_t>(sp.n * sp.inner)), pi(pr.size(), 0.0);
            for (int64_t o = olo; o < ohi; ++o) {
                const S* src = xv.data() + o * sp.n * sp.inner;
                for (int64_t j = 0; j < sp.n * sp.inner; ++j) pr[static_cast<size_t>(j)] = static_cast<double>(src[j]);
                std::fill(pi.begin(), pi.end(), 0.0);
                fftcore::plane_cfft_pow2(pr.data(), pi.data(), sp.n, sp.inner, false);
                for (int64_t k = 0; k < nb; ++k) {
                    S* dr = rv.data() + (o * nb + k) * sp.inner;
                    S* di = iv.data() + (o * nb + k) * sp.inner;
                    for (int64_t i = 0; i < sp.inner; ++i) {
                        dr[i] = static_cast<S>(pr[static_cast<size_t>(k * sp.inner + i)]);
                        di[i] = static_cast<S>(pi[static_cast<size_t>(k * sp.inner + i)]);
                    }
                }
            }
        });
    } else {
        const int64_t lines = sp.outer * sp.inner;
        parallel_for(lines, 8, [&](int64_t lo, int64_t hi) {
            std::vector<double> br(static_cast<size_t>(nb)), bi(static_cast<size_t>(nb));
            for (int64_t ln = lo; ln < hi; ++ln) {
                const int64_t o = ln / sp.inner, i = ln % sp.inner;
                const S* src = xv.data() + o * sp.n * sp.inner + i;
                fftcore::rfft_line(src, sp.n, sp.inner, br.data(), bi.data());
                for (int64_t k = 0; k < nb; ++k) {
                    rv[static_cast<size_t>((o * nb + k) * sp.inner + i)] = static_cast<S>(br[static_cast<size_t>(k)]);
                    iv[static_cast<size_t>((o * nb + k) * sp.inner + i)] = static_cast<S>(bi[static_cast<size_t>(k)]);
                }
            }
        });
    }
    check_finite(rv, "rfft");
    check_finite(iv, "rfft");

    if (grad_needed<S>({&x})) {
        re.set_requires_grad(true);
        im.set_requires_grad(true);
        auto xi = x.impl(), ri = re.impl(), ii = im.impl();
        TapeT<S>::active()->record([xi, ri, ii, sp, nb] {
            if ((ri->grad.empty() && ii->grad.empty()) || !xi->requires_grad) return;
            xi->ensure_grad();
            if (detail::plane_fft_ok(sp.n, sp.inner)) {
                parallel_for(sp.outer, 1, [&](int64_t olo, int64_t ohi) {
                    std::vector<double> pr(static_cast<size_t>(sp.n * sp.inner)), pi(pr.size());
                    for (int64_t o = olo; o < ohi; ++o) {
                        std::fill(pr.begin(), pr.end(), 0.0);
                        std::fill(pi.begin(), pi.end(), 0.0);
                        for (int64_t k = 0; k < nb; ++k) {
                            for (int64_t i = 0; i < sp.inner; ++i) {
                                size_t u = static_cast<size_t>((o * nb + k) * sp.inner + i);
                                size_t v = static_cast<size_t>(k * sp.inner + i);
                                if (!ri->grad.empty()) pr[v] = static_cast<double>(ri->grad[u]);
                                if (!ii->grad.empty()) pi[v] = static_cast<double>(ii->grad[u]);
                            }
                        }
                        fftcore::plane_cfft_pow2(pr.data(), pi.data(), sp.n, sp.inner, true);
                        S* gx = xi->grad.data() + o * sp.n * sp.inner;
                        for (int64_t j = 0; j < sp.n * sp.inner; ++j) gx[j] += static_cast<S>(pr[static_cast<size_t>(j)]);
                    }
                });
                return;
            }
            const int64_t lines2 = sp.outer * sp.inner;
            parallel_for(lines2, 8, [&](int64_t lo, int64_t hi) {
                std::vector<double> gr(static_cast<size_t>(nb)), gi(static_cast<size_t>(nb)),
                    gx(static_cast<size_t>(sp.n));
                for (int64_t ln = lo; ln < hi; ++ln) {
                    const int64_t o = ln / sp.inner, i = ln % sp.inner;
                    for (int64_t k = 0; k < nb; ++k) {
                        size_t u = static_cast<size_t>((o * nb + k) * sp.inner + i);
                        gr[static_cast<size_t>(k)] = ri->grad.empty() ? 0.0 : static_cast<double>(ri->grad[u]);
                        gi[static_cast<size_t>(k)] = ii->grad.empty() ? 0.0 : static_cast<double>(ii->grad[u]);
                    }
                    fftcore::rfft_adjoint_line(gr.data(), gi.data(), sp.n, gx.data());
                    for (int64_t t = 0; t < sp.n; ++t) {
                        xi->grad[static_cast<size_t>((o * sp.n + t) * sp.inner + i)] +=
                            static_cast<S>(gx[static_cast<size_t>(t)]);
                    }
                }
            });
        });
    }
    return {re, im};
}

template <std::floating_point S>
TensorT<S> irfft(const TensorT<S>& re, const TensorT<S>& im, int axis, int64_t length) {
    if (re.shape() != im.shape()) shape_fail("irfft", re.shape(), im.shape());
    auto sp = detail::axis_split(re.shape(), axis);
    const int64_t nb = fftcore::rfft_bins(length);
    if (sp.n != nb) {
        throw ShapeError("irfft: spectrum has " + std::to_string(sp.n) + " bins, length " +
                         std::to_string(length) + " needs " + std::to_string(nb));
    }
    Shape os = re.shape();
    os[static_cast<size_t>(axis)] = length;
    auto y = TensorT<S>::zeros(os);
    const auto& rv = re.data();
    const auto& iv = im.data();
    auto& yv = y.data();
    if (detail::plane_fft_ok(length, sp.inner)) {
        parallel_for(sp.outer, 1, [&](int64_t olo, int64_t ohi) {
            std::vector<double> pr(static_cast<size_t>(length * sp.inner)), pi(pr.size());
            for (int64_t o = olo; o < ohi; ++o) {
                for (int64_t k = 0; k < nb; ++k) {
                    const S* sr = rv.data() + (o * nb + k) * sp.inner;
                    const S* si = iv.data() + (o * nb + k) * sp.inner;
                    for (int64_t i = 0; i < sp.inner; ++i) {
                        pr[static_cast<size_t>(k * sp.inner + i)] = static_cast<double>(sr[i]);
                        pi[static_cast<size_t>(k * sp.inner + i)] = static_cast<double>(si[i]);
                    }
                }
                // Hermitian completion of the one-sided spectrum
                for (int64_t k = nb; k < length; ++k) {
                    const int64_t mirror = length - k;
                    for (int64_t i = 0; i < sp.inner; ++i) {
                        pr[static_cast<size_t>(k * sp.inner + i)] = pr[static_cast<size_t>(mirror * sp.inner + i)];
                        pi[static_cast<size_t>(k * sp.inner + i)] = -pi[static_cast<size_t>(mirror * sp.inner + i)];
                    }
                }
                fftcore::plane_cfft_pow2(pr.data(), pi.data(), length, sp.inner, true);
                const double invn = 1.0 / static_cast<double>(length);
                S* dst = yv.data() + o * length * sp.inner;
                for (int64_t j = 0; j < length * sp.inner; ++j) {
                    dst[j] = static_cast<S>(pr[static_cast<size_t>(j)] * invn);
                }
            }
        });
    } else {
        const int64_t lines = sp.outer * sp.inner;
        parallel_for(lines, 8, [&](int64_t lo, int64_t hi) {
            std::vector<double> br(static_cast<size_t>(nb)), bi(static_cast<size_t>(nb)),
                out(static_cast<size_t>(length));
            for (int64_t ln = lo; ln < hi; ++ln) {
                const int64_t o = ln / sp.inner, i = ln % sp.inner;
                for (int64_t k = 0; k < nb; ++k) {
                    br[static_cast<size_t>(k)] = static_cast<double>(rv[static_cast<size_t>((o * nb + k) * sp.inner + i)]);
                    bi[static_cast<size_t>(k)] = static_cast<double>(iv[static_cast<size_t>((o * nb + k) * sp.inner + i)]);
                }
                fftcore::irfft_line_core(br.data(), bi.data(), length, out.data());
                for (int64_t t = 0; t < length; ++t) {
                    yv[static_cast<size_t>((o * length + t) * sp.inner + i)] = static_cast<S>(out[static_cast<size_t>(t)]);
                }
            }
        });
    }
    check_finite(yv, "irfft");

    if (grad_needed<S>({&re, &im})) {
        y.set_requires_grad(true);
        auto ri = re.impl(), ii = im.impl(), yi = y.impl();
        TapeT<S>::active()->record([ri, ii, yi, sp, nb, length] {
            if (yi->grad.empty()) return;
            const bool nr = ri->requires_grad, ni = ii->requires_grad;
            if (!nr && !ni) return;
            if (nr) ri->ensure_grad();
            if (ni) ii->ensure_grad();
            const int64_t lines2 = sp.outer * sp.inner;
            const double invn = 1.0 / static_cast<double>(length);
            if (detail::plane_fft_ok(length, sp.inner)) {
                parallel_for(sp.outer, 1, [&](int64_t olo, int64_t ohi) {
                    std::vector<double> pr(static_cast<size_t>(length * sp.inner)), pi(pr.size());
                    for (int64_t o = olo; o < ohi; ++o) {
                        const S* g = yi->grad.data() + o * length * sp.inner;
                        for (int64_t j = 0; j < length * sp.inner; ++j) pr[static_cast<size_t>(j)] = static_cast<double>(g[j]);
                        std::fill(pi.begin(), pi.end(), 0.0);
                        fftcore::plane_cfft_pow2(pr.data(), pi.data(), length, sp.inner, false);
                        for (int64_t k = 0; k < nb; ++k) {
                            const bool edge = (k == 0) || (length % 2 == 0 && k == length / 2);
                            const double c = (edge ? 1.0 : 2.0) * invn;
                            for (int64_t i = 0; i < sp.inner; ++i) {
                                size_t u = static_cast<size_t>((o * nb + k) * sp.inner + i);
                                size_t v = static_cast<size_t>(k * sp.inner + i);
                                if (nr) ri->grad[u] += static_cast<S>(c * pr[v]);
                                if (ni && !edge) ii->grad[u] += static_cast<S>(c * pi[v]);
                            }
                        }
                    }
                });
                return;
            }
            parallel_for(lines2, 8, [&](int64_t lo, int64_t hi) {
                std::vector<double> gr(static_cast<size_t>(nb)), gi(static_cast<size_t>(nb)),
                    gx(static_cast<size_t>(length));
                for (int64_t ln = lo; ln < hi; ++ln) {
                    const int64_t o = ln / sp.inner, i = ln % sp.inner;
                    for (int64_t t = 0; t < length; ++t) {
                        gx[static_cast<size_t>(t)] =
                            static_cast<double>(yi->grad[static_cast<size_t>((o * length + t) * sp.inner + i)]);
                    }
                    fftcore::rfft_line(gx.data(), length, 1, gr.data(), gi.data());
                    for (int64_t k = 0; k < nb; ++k) {
                        const bool edge = (k == 0) || (length % 2 == 0 && k == length / 2);
                        const double c = edge ? 1.0 : 2.0;
                        size_t u = static_cast<size_t>((o * nb + k) * sp.inner + i);
                        if (nr) ri->grad[u] += static_cast<S>(c * invn * gr[static_cast<size_t>(k)]);
                        // forward ignores im at DC and (even n) Nyquist
                        if (ni && !edge) ii->grad[u] += static_cast<S>(c * invn * gi[static_cast<size_t>(k)]);
                    }
                }
            });
        });
    }
    return y;
}

}  // namespace kathleen
