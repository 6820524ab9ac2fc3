#pragma once

#include <array>
#include <cstddef>

namespace bms {

// One classical fixed-step Runge-Kutta stage set. `f` maps a state vector to
// its time derivative; the forcing is whatever f captures, held constant over
// the step. Plant and observer both integrate through this exact routine so
// that identical states and parameters produce bitwise-identical trajectories.
template <std::size_t N, class Deriv>
std::array<double, N> rk4_step(const Deriv& f, const std::array<double, N>& y, double dt) {
    std::array<double, N> s{};

    const std::array<double, N> k1 = f(y);
    for (std::size_t j = 0; j < N; ++j) s[j] = y[j] + 0.5 * dt * k1[j];
    const std::array<double, N> k2 = f(s);
    for (std::size_t j = 0; j < N; ++j) s[j] = y[j] + 0.5 * dt * k2[j];
    const std::array<double, N> k3 = f(s);
    for (std::size_t j = 0; j < N; ++j) s[j] = y[j] + dt * k3[j];
    const std::array<double, N> k4 = f(s);

    std::array<double, N> out{};
    for (std::size_t j = 0; j < N; ++j)
        out[j] = y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return out;
}

} // namespace bms
