#include "bms/specfun.hpp"

#include <cmath>
#include <limits>

namespace bms {

double gamma_fn(double x) {
    if (!(x > 0.0))
        throw DomainError("gamma_fn: argument must be > 0");
    return std::tgamma(x);
}

double mittag_leffler(double alpha, double rho, double rho_max) {
    if (!(alpha > 0.0))
        throw DomainError("mittag_leffler: alpha must be > 0");
    if (!(std::abs(rho) <= rho_max))
        throw ArgumentTooLarge("mittag_leffler: |rho| exceeds cancellation guard");
    if (rho == 0.0)
        return 1.0;

    // Kahan-compensated partial sums. The terms of the alternating series can
    // exceed the result by orders of magnitude, so plain accumulation would
    // shed the low bits that the cancellation later depends on.
    double total = 0.0, comp = 0.0;
    int small_run = 0;
    for (int k = 0; k < 500; ++k) {
        const double t = std::pow(rho, static_cast<double>(k)) / std::tgamma(k * alpha + 1.0);
        if (!std::isfinite(t))
            throw ArgumentTooLarge("mittag_leffler: series term overflowed");
        const double yv = t - comp;
        const double tn = total + yv;
        comp = (tn - total) - yv;
        total = tn;
        if (std::abs(t) < 1e-16 * std::abs(total)) {
            if (++small_run >= 3)
                break;
        } else {
            small_run = 0;
        }
    }
    return total;
}

double nussbaum(const NussbaumParams& np, double k) {
    if (!(np.alpha > 2.0 && np.alpha <= 3.0))
        throw DomainError("nussbaum: alpha must lie in (2, 3]");
    if (!(np.lam > 0.0))
        throw DomainError("nussbaum: lam must be > 0");
    if (!(k >= 0.0))
        throw DomainError("nussbaum: gain argument must be >= 0");
    return mittag_leffler(np.alpha, -np.lam * std::pow(k, np.alpha));
}

AverageExtrema running_average_extrema(const std::function<double(double)>& f,
                                       double k0, double k_max, int grid_nodes) {
    if (!(k0 >= 0.0) || !(k_max > k0))
        throw DomainError("running_average_extrema: need 0 <= k0 < k_max");
    if (grid_nodes < 2)
        throw DomainError("running_average_extrema: need at least 2 grid nodes");

    const double h = (k_max - k0) / static_cast<double>(grid_nodes - 1);
    double integ = 0.0;
    double prev = f(k0);
    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    for (int j = 1; j < grid_nodes; ++j) {
        const double kj = k0 + static_cast<double>(j) * h;
        const double fj = f(kj);
        integ += (prev + fj) * 0.5 * (kj - (k0 + static_cast<double>(j - 1) * h));
        prev = fj;
        const double avg = integ / (kj - k0);
        if (avg > sup) sup = avg;
        if (avg < inf) inf = avg;
    }
    return {sup, inf};
}

bool verify_nussbaum_property(const NussbaumParams& np, double k_max, int grid_nodes,
                              AverageExtrema* extrema) {
    const auto ex = running_average_extrema(
        [&np](double k) { return nussbaum(np, k); }, 0.0, k_max, grid_nodes);
    if (extrema)
        *extrema = ex;
    return ex.sup_avg > 1.0 && ex.inf_avg < -1.0;
}

} // namespace bms
