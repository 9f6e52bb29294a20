#pragma once

// Special functions and combinatorial factors behind the closed-form
// training-length and outage expressions. Everything here is a pure function.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace beamtrain::special {

// A probability carried on the natural-log scale.
struct LogProb {
    double value = 0.0;

    double probability() const { return std::exp(value); }
};

// ln C(n, k). Throws std::domain_error when k > n.
double log_binomial(std::uint64_t n, std::uint64_t k);

// Extended-precision variant used by the analytic evaluators.
long double log_binomial_ld(std::uint64_t n, std::uint64_t k);

// ln(n!).
long double log_factorial(std::uint64_t n);

// n! as a running product in extended precision (exact up to n = 25).
long double factorial(int n);

namespace detail {

template <std::floating_point T>
void check_gamma_args(int s, T x) {
    if (s < 1) throw std::domain_error("incomplete gamma: s must be >= 1");
    if (!(x >= T(0))) throw std::domain_error("incomplete gamma: x must be >= 0");
}

// e^{-x} * sum_{k<s} x^k / k!  (Poisson CDF at s-1). Positive terms only.
template <std::floating_point T>
T poisson_head(int s, T x) {
    T term = std::exp(-x);
    T sum = term;
    for (int k = 1; k < s; ++k) {
        term *= x / T(k);
        sum += term;
    }
    return sum;
}

// e^{-x} * sum_{k>=s} x^k / k!, summed directly; converges fast for x < s.
template <std::floating_point T>
T poisson_tail(int s, T x) {
    if (x == T(0)) return T(0);
    T term = std::exp(-x + T(s) * std::log(x) - std::lgamma(T(s) + T(1)));
    T sum = term;
    for (int k = s + 1; k < s + 100000; ++k) {
        term *= x / T(k);
        sum += term;
        if (term <= sum * std::numeric_limits<T>::epsilon()) break;
    }
    return sum;
}

}  // namespace detail

// Regularized lower incomplete gamma P(s, x) for integer s >= 1.
template <std::floating_point T>
T regularized_lower_gamma(int s, T x) {
    detail::check_gamma_args(s, x);
    if (x < T(s)) return detail::poisson_tail(s, x);
    return T(1) - detail::poisson_head(s, x);
}

// Regularized upper incomplete gamma Q(s, x) for integer s >= 1.
template <std::floating_point T>
T regularized_upper_gamma(int s, T x) {
    detail::check_gamma_args(s, x);
    if (x < T(s)) return T(1) - detail::poisson_tail(s, x);
    return detail::poisson_head(s, x);
}

// Lower incomplete gamma Upsilon(s, x) = int_0^x t^{s-1} e^{-t} dt for integer s,
// through the finite Poisson-sum identity (s-1)! (1 - e^{-x} sum_{k<s} x^k/k!).
// Below x = s the equivalent tail series is summed instead so that small
// arguments keep full relative precision.
template <std::floating_point T>
T lower_inc_gamma_int(int s, T x) {
    return T(factorial(s - 1)) * regularized_lower_gamma(s, x);
}

// Upper incomplete gamma Gamma(s, x) = (s-1)! e^{-x} sum_{k<s} x^k/k!.
template <std::floating_point T>
T upper_inc_gamma_int(int s, T x) {
    return T(factorial(s - 1)) * regularized_upper_gamma(s, x);
}

// Probability that beam i carries a path while exactly j of the L paths fall
// on beams 1..i-1, for N_t beams and L uniformly placed paths:
//   C(i-1, j) C(N_t-i, L-j-1) / C(N_t, L).
// Requires 2 <= i <= N_t-1 and max(0, L-1-N_t+i) <= j <= min(i-1, L-1).
LogProb log_xi(int i, int j, int n_t, int paths);
double xi(int i, int j, int n_t, int paths);

// Admissible j range for xi at beam i.
struct XiBounds {
    int lower;
    int upper;
};
XiBounds xi_bounds(int i, int n_t, int paths);

// Density of the sum of the n_rf largest of `paths` i.i.d. exponential
// variables with rate `paths` (mean 1/paths), evaluated at x >= 0.
double ordered_partial_sum_pdf(double x, int n_rf, int paths);

// Neumaier-compensated accumulator in extended precision. Also tracks the
// sum of term magnitudes so callers can detect cancellation.
class CompensatedSum {
  public:
    void add(long double term) {
        const long double t = sum_ + term;
        if (std::fabs(sum_) >= std::fabs(term)) {
            comp_ += (sum_ - t) + term;
        } else {
            comp_ += (term - t) + sum_;
        }
        sum_ = t;
        magnitude_ += std::fabs(term);
    }

    long double value() const { return sum_ + comp_; }
    long double magnitude() const { return magnitude_; }

    // magnitude / |value|; 1 for an all-zero sum.
    long double cancellation_ratio() const {
        const long double v = std::fabs(value());
        if (magnitude_ == 0.0L) return 1.0L;
        if (v == 0.0L) return std::numeric_limits<long double>::infinity();
        return magnitude_ / v;
    }

  private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
    long double magnitude_ = 0.0L;
};

}  // namespace beamtrain::special
