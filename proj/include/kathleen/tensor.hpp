#pragma once

#include <concepts>
#include <memory>
#include <utility>
#include <vector>

#include "kathleen/common.hpp"
#include "kathleen/memstats.hpp"
#include "kathleen/rng.hpp"

namespace kathleen {

/// Dense row-major tensor storage plus optional gradient buffer.
/// Values are immutable after the producing op finishes (the optimizer is
/// the one sanctioned writer); the grad buffer is filled by backward passes.
template <std::floating_point S>
struct TensorImplT {
    Shape shape;
    std::vector<S> value;
    std::vector<S> grad;  // empty until backward touches this node
    bool requires_grad = false;

    TensorImplT(Shape s, std::vector<S> v) : shape(std::move(s)), value(std::move(v)) {
        MemStats::add(static_cast<int64_t>(value.size() * sizeof(S)));
    }
    ~TensorImplT() {
        MemStats::sub(static_cast<int64_t>((value.size() + grad.size()) * sizeof(S)));
    }
    TensorImplT(const TensorImplT&) = delete;
    TensorImplT& operator=(const TensorImplT&) = delete;

    void ensure_grad() {
        if (grad.empty() && !value.empty()) {
            grad.assign(value.size(), S(0));
            MemStats::add(static_cast<int64_t>(grad.size() * sizeof(S)));
        }
    }
};

/// Value-semantic handle to shared tensor storage. Copies alias.
template <std::floating_point S>
class TensorT {
public:
    using Impl = TensorImplT<S>;

    TensorT() = default;
    explicit TensorT(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    static TensorT zeros(Shape shape) {
        auto n = shape_numel(shape);
        return TensorT(std::make_shared<Impl>(std::move(shape), std::vector<S>(static_cast<size_t>(n), S(0))));
    }
    static TensorT full(Shape shape, S v) {
        auto n = shape_numel(shape);
        return TensorT(std::make_shared<Impl>(std::move(shape), std::vector<S>(static_cast<size_t>(n), v)));
    }
    static TensorT scalar(S v) { return full({1}, v); }
    static TensorT from_data(Shape shape, std::vector<S> data) {
        if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
            throw ShapeError("from_data: " + shape_str(shape) + " does not hold " +
                             std::to_string(data.size()) + " values");
        }
        return TensorT(std::make_shared<Impl>(std::move(shape), std::move(data)));
    }
    static TensorT uniform(Shape shape, double lo, double hi, Prng& rng) {
        auto n = shape_numel(shape);
        std::vector<S> v(static_cast<size_t>(n));
        for (auto& x : v) x = static_cast<S>(rng.uniform(lo, hi));
        return TensorT(std::make_shared<Impl>(std::move(shape), std::move(v)));
    }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int64_t dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(impl_->value.size()); }

    std::vector<S>& data() { return impl_->value; }
    const std::vector<S>& data() const { return impl_->value; }

    S item() const {
        if (numel() != 1) throw ShapeError("item: tensor has " + std::to_string(numel()) + " elements");
        return impl_->value[0];
    }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    TensorT& set_requires_grad(bool b) {
        impl_->requires_grad = b;
        return *this;
    }

    /// Gradient buffer, allocated (zeroed) on first access.
    std::vector<S>& grad() {
        impl_->ensure_grad();
        return impl_->grad;
    }
    const std::vector<S>* grad_if() const {
        return (impl_ && !impl_->grad.empty()) ? &impl_->grad : nullptr;
    }
    void zero_grad() {
        if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), S(0));
    }

    /// Deep copy of values; fresh leaf (no grad state carried over).
    TensorT clone() const {
        return TensorT(std::make_shared<Impl>(impl_->shape, impl_->value));
    }

    const std::shared_ptr<Impl>& impl() const { return impl_; }

private:
    std::shared_ptr<Impl> impl_;
};

using Tensor32 = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace kathleen
