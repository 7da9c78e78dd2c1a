#pragma once

#include <concepts>
#include <functional>
#include <initializer_list>
#include <vector>

#include "kathleen/tensor.hpp"

namespace kathleen {

/// Wengert list: ops executed while a tape is active append their adjoint
/// closure. backward() seeds the scalar loss with 1 and replays adjoints in
/// reverse creation order, which is a valid reverse topological order.
template <std::floating_point S>
class TapeT {
public:
    using Adjoint = std::function<void()>;

    void record(Adjoint fn) { entries_.push_back(std::move(fn)); }

    void backward(TensorT<S>& loss) {
        if (loss.numel() != 1) {
            throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
        }
        loss.grad()[0] = S(1);
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    }

    size_t size() const { return entries_.size(); }

    static TapeT*& active_slot() {
        static thread_local TapeT* current = nullptr;
        return current;
    }
    static TapeT* active() { return active_slot(); }

private:
    std::vector<Adjoint> entries_;
};

/// RAII activation of a tape on the current thread.
template <std::floating_point S>
class TapeScope {
public:
    explicit TapeScope(TapeT<S>& tape) : prev_(TapeT<S>::active_slot()) {
        TapeT<S>::active_slot() = &tape;
    }
    ~TapeScope() { TapeT<S>::active_slot() = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    TapeT<S>* prev_;
};

/// True when the op should register an adjoint; marks the output as a
/// gradient carrier so downstream ops keep recording.
template <std::floating_point S>
bool grad_needed(std::initializer_list<const TensorT<S>*> inputs) {
    if (!TapeT<S>::active()) return false;
    for (const auto* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

}  // namespace kathleen
