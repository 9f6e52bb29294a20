#include "beamtrain/special_math.hpp"

#include <algorithm>
#include <string>

namespace beamtrain::special {

namespace {

// Below this many factors the binomial log is accumulated term by term; the
// log-gamma difference loses relative precision when k is small and n large.
constexpr std::uint64_t kDirectBinomialFactors = 512;

// e^{-a} - sum_{m<start} (-a)^m / m!, i.e. the exponential series of -a
// from index `start` on. Summed as a series for small a; for large a the
// explicit difference has no cancellation problem.
long double exp_series_tail(long double a, int start) {
    if (start == 0) return std::exp(-a);
    if (a < static_cast<long double>(start) + 1.0L) {
        long double term = 1.0L;
        for (int m = 1; m <= start; ++m) term *= -a / m;
        long double sum = term;
        for (int m = start + 1; m < start + 10000; ++m) {
            term *= -a / m;
            sum += term;
            if (std::fabs(term) <= std::fabs(sum) * std::numeric_limits<long double>::epsilon()) break;
        }
        return sum;
    }
    long double term = 1.0L;
    long double head = 1.0L;
    for (int m = 1; m < start; ++m) {
        term *= -a / m;
        head += term;
    }
    return std::exp(-a) - head;
}

}  // namespace

long double log_factorial(std::uint64_t n) {
    return std::lgamma(static_cast<long double>(n) + 1.0L);
}

long double factorial(int n) {
    if (n < 0) throw std::domain_error("factorial: negative argument");
    long double f = 1.0L;
    for (int k = 2; k <= n; ++k) f *= static_cast<long double>(k);
    return f;
}

long double log_binomial_ld(std::uint64_t n, std::uint64_t k) {
    if (k > n) {
        throw std::domain_error("log_binomial: k = " + std::to_string(k) +
                                " exceeds n = " + std::to_string(n));
    }
    const std::uint64_t kk = std::min(k, n - k);
    if (kk == 0) return 0.0L;
    if (kk <= kDirectBinomialFactors) {
        long double acc = 0.0L;
        const auto base = static_cast<long double>(n - kk);
        for (std::uint64_t m = 1; m <= kk; ++m) {
            acc += std::log1p(base / static_cast<long double>(m));
        }
        return acc;
    }
    return log_factorial(n) - log_factorial(kk) - log_factorial(n - kk);
}

double log_binomial(std::uint64_t n, std::uint64_t k) {
    return static_cast<double>(log_binomial_ld(n, k));
}

XiBounds xi_bounds(int i, int n_t, int paths) {
    return {std::max(0, paths - 1 - n_t + i), std::min(i - 1, paths - 1)};
}

LogProb log_xi(int i, int j, int n_t, int paths) {
    if (paths < 1 || paths > n_t) throw std::domain_error("xi: require 1 <= L <= N_t");
    if (i < 2 || i > n_t - 1) throw std::domain_error("xi: require 2 <= i <= N_t - 1");
    const XiBounds b = xi_bounds(i, n_t, paths);
    if (j < b.lower || j > b.upper) {
        throw std::domain_error("xi: j = " + std::to_string(j) + " outside [" +
                                std::to_string(b.lower) + ", " + std::to_string(b.upper) + "]");
    }
    const auto u = [](int v) { return static_cast<std::uint64_t>(v); };
    const long double value = log_binomial_ld(u(i - 1), u(j)) +
                              log_binomial_ld(u(n_t - i), u(paths - j - 1)) -
                              log_binomial_ld(u(n_t), u(paths));
    return {static_cast<double>(value)};
}

double xi(int i, int j, int n_t, int paths) { return log_xi(i, j, n_t, paths).probability(); }

double ordered_partial_sum_pdf(double x, int n_rf, int paths) {
    if (n_rf < 1) throw std::domain_error("ordered_partial_sum_pdf: N_RF must be >= 1");
    if (n_rf > paths) throw std::domain_error("ordered_partial_sum_pdf: N_RF exceeds L");
    if (x < 0.0) return 0.0;

    const long double lx = x;
    const long double rate = paths;
    const int k = n_rf;
    const int rest = paths - n_rf;

    // L! / ((L-k)! k!) e^{-Lx} [ L^k x^{k-1}/(k-1)! + L sum_l (...) ]
    const long double prefactor = std::exp(log_binomial_ld(paths, k) - rate * lx);
    long double leading;
    if (k == 1) {
        leading = rate;
    } else {
        leading = std::exp(k * std::log(rate) + (k - 1) * std::log(lx) - log_factorial(k - 1));
        if (x == 0.0) leading = 0.0L;
    }

    CompensatedSum series;
    for (int l = 1; l <= rest; ++l) {
        const long double arg = l * lx * rate / k;
        // e^{-arg} - A(l, x), where A holds the first k-1 series terms.
        const long double tail = exp_series_tail(arg, k - 1);
        const long double sign = ((k + l - 1) % 2 == 0) ? 1.0L : -1.0L;
        const long double coeff =
            std::exp(log_binomial_ld(rest, l) + (k - 1) * std::log(static_cast<long double>(k) / l));
        series.add(sign * coeff * tail);
    }
    return static_cast<double>(prefactor * (leading + rate * series.value()));
}

}  // namespace beamtrain::special
