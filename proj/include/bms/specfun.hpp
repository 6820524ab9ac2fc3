#pragma once

#include <functional>

#include "bms/errors.hpp"

namespace bms {

// Euler gamma restricted to positive arguments. Throws DomainError otherwise.
double gamma_fn(double x);

// One-parameter Mittag-Leffler function E_alpha(rho), alpha > 0. Evaluated by
// direct series summation in log space with compensated accumulation.
// |rho| is capped (default 1e3): far beyond that the alternating series for
// negative rho loses all significance in double precision, so the call is
// rejected (ArgumentTooLarge) instead of returning noise.
double mittag_leffler(double alpha, double rho, double rho_max = 1e3);

struct NussbaumParams {
    double alpha = 2.5; // fractional order, must lie in (2, 3]
    double lam = 1.0;   // gain scale, must be > 0
};

// Nussbaum-type switching gain N(k) = E_alpha(-lam * k^alpha) for k >= 0.
double nussbaum(const NussbaumParams& np, double k);

struct AverageExtrema {
    double sup_avg; // max over the grid of (1/k) * integral_0^k f
    double inf_avg; // min over the same grid
};

// Running averages (1/k) * integral_{k0}^{k} f(s) ds evaluated on a uniform
// grid of `grid_nodes` points over [k0, k_max], trapezoidal rule. The node at
// k = k0 is skipped (the average is undefined there). Used to check the
// two-sided unboundedness that a switching gain must provide.
AverageExtrema running_average_extrema(const std::function<double(double)>& f,
                                       double k0, double k_max, int grid_nodes);

// True when the running average of N over [0, k_max] attains a value > 1 and
// a value < -1 somewhere on the grid, i.e. the gain provides usable pushes in
// both directions up to that horizon.
bool verify_nussbaum_property(const NussbaumParams& np, double k_max, int grid_nodes,
                              AverageExtrema* extrema = nullptr);

} // namespace bms
