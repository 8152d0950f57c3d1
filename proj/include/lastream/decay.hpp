#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "lastream/error.hpp"

namespace lastream {

enum class DecayFamily { polynomial, exponential, sliding_window };

inline std::string to_string(DecayFamily f) {
    switch (f) {
        case DecayFamily::polynomial: return "polynomial";
        case DecayFamily::exponential: return "exponential";
        case DecayFamily::sliding_window: return "sliding-window";
    }
    return "?";
}

inline DecayFamily decay_family_from_string(const std::string& s) {
    if (s == "polynomial") return DecayFamily::polynomial;
    if (s == "exponential") return DecayFamily::exponential;
    if (s == "sliding-window" || s == "sliding_window" || s == "window") return DecayFamily::sliding_window;
    throw ContractViolation("unknown decay family '" + s + "'");
}

/// Weight assigned to an update of age tau (tau = 1 is the current step).
///   polynomial:     tau^-s
///   exponential:    s^(tau - 1), normalised so that w(1) = 1
///   sliding-window: 1 if tau <= W else 0
struct DecayFunction {
    DecayFamily family = DecayFamily::polynomial;
    double s = 1.0;
    std::uint64_t window = 0;

    static DecayFunction polynomial(double s) {
        detail::require(s > 0.0, "polynomial decay requires s > 0");
        return {DecayFamily::polynomial, s, 0};
    }
    static DecayFunction exponential(double s) {
        detail::require(s > 0.0 && s <= 1.0, "exponential decay requires s in (0, 1]");
        return {DecayFamily::exponential, s, 0};
    }
    static DecayFunction sliding_window(std::uint64_t w) {
        detail::require(w >= 1, "window must be >= 1");
        return {DecayFamily::sliding_window, 1.0, w};
    }

    double operator()(std::uint64_t tau) const {
        detail::require(tau >= 1, "decay age must be >= 1");
        switch (family) {
            case DecayFamily::polynomial: return std::pow(static_cast<double>(tau), -s);
            case DecayFamily::exponential: return std::pow(s, static_cast<double>(tau - 1));
            case DecayFamily::sliding_window: return tau <= window ? 1.0 : 0.0;
        }
        return 0.0;
    }
};

inline double decay_weight(const DecayFunction& fn, std::uint64_t tau) { return fn(tau); }

struct SmoothnessParams {
    double eta = 0.0;             ///< coordinate distortion tolerance
    double nu = 0.0;              ///< negligible tail weight
    std::uint64_t expiry_age = 1; ///< blocks whose newest update reaches this age are dropped
};

/// ceil(nu^(-2/s)); may be +inf for tiny nu.
inline double polynomial_expiry_age(double s, double nu) { return std::ceil(std::pow(nu, -2.0 / s)); }

/// Smallest integer a >= 1 with sum_{i >= a} s^(i-1) = s^(a-1) / (1 - s) <= nu.
/// Returns +inf for s = 1 (no decay, the tail never vanishes).
inline double exponential_expiry_age(double s, double nu) {
    if (s >= 1.0) return std::numeric_limits<double>::infinity();
    auto tail = [&](double a) { return std::pow(s, a - 1.0) / (1.0 - s); };
    double a = std::max(1.0, std::ceil(std::log(nu * (1.0 - s)) / std::log(s)) + 1.0);
    // the closed form can land one off either way after rounding
    while (a > 1.0 && tail(a - 1.0) <= nu) a -= 1.0;
    while (tail(a) > nu) a += 1.0;
    return a;
}

/// Parameters that make (w, |x|^p) smooth at accuracy eps over streams of
/// length m:
///   eta = eps / (100 p^2)
///   polynomial:  nu = eps / (100 p m^(p-1)),  expiry = ceil(nu^(-2/s))
///   exponential: nu = eps / (100 p m),        expiry = min a with s^(a-1)/(1-s) <= nu
///   sliding-window: nu as exponential, expiry = W + 1 (the tail weight is exactly 0)
/// Expiry ages beyond m + 1 are clamped to m + 1: such blocks never expire.
inline SmoothnessParams smoothness_params(const DecayFunction& fn, double eps, double p, std::uint64_t m) {
    if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("epsilon must lie in (0, 1)");
    if (!(p >= 2.0)) throw ContractViolation("p must be >= 2");
    if (m < 1) throw ContractViolation("stream length must be >= 1");

    SmoothnessParams out;
    out.eta = eps / (100.0 * p * p);
    const double md = static_cast<double>(m);
    const double cap = md + 1.0;
    double expiry = cap;

    switch (fn.family) {
        case DecayFamily::polynomial: {
            out.nu = eps / (100.0 * p * std::pow(md, p - 1.0));
            expiry = polynomial_expiry_age(fn.s, out.nu);
            break;
        }
        case DecayFamily::exponential: {
            out.nu = eps / (100.0 * p * md);
            expiry = exponential_expiry_age(fn.s, out.nu);
            break;
        }
        case DecayFamily::sliding_window: {
            out.nu = eps / (100.0 * p * md);
            expiry = static_cast<double>(fn.window) + 1.0;
            break;
        }
    }
    if (!std::isfinite(expiry) || expiry > cap) expiry = cap;
    out.expiry_age = static_cast<std::uint64_t>(std::max(1.0, expiry));
    return out;
}

}  // namespace lastream
