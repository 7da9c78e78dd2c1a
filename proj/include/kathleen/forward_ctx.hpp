#pragma once

#include <concepts>
#include <cstddef>
#include <vector>

#include "kathleen/rng.hpp"
#include "kathleen/tensor.hpp"

namespace kathleen {

template <std::floating_point S>
struct NamedParam {
    std::string name;
    TensorT<S> tensor;
};

/// Captures energy-mix weights on one forward and replays them on later
/// forwards. Finite-difference gradient checks need the stop-gradient
/// weights held fixed at the linearization point; otherwise FD would measure
/// derivative paths the mixing intentionally detaches.
template <std::floating_point S>
struct EpmFreezeT {
    enum class Mode { Capture, Replay };
    Mode mode = Mode::Capture;
    std::vector<std::vector<std::vector<S>>> captured;  // per call, per signal
    size_t cursor = 0;

    void begin_forward() { cursor = 0; }
};

template <std::floating_point S>
struct ForwardTraceT {
    TensorT<S> h_prime;  // frontend output
    TensorT<S> z;        // sequencer output (pre-dropout)
};

template <std::floating_point S>
struct ForwardCtxT {
    bool training = false;
    double dropout = 0.0;
    Prng* rng = nullptr;
    EpmFreezeT<S>* freeze = nullptr;
    ForwardTraceT<S>* trace = nullptr;
};

}  // namespace kathleen
