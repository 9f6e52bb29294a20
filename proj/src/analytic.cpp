#include "beamtrain/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "beamtrain/special_math.hpp"

namespace beamtrain::analytic {

namespace sm = beamtrain::special;

namespace {

void check_common(int n_t, int paths, int n_rf, double alpha) {
    if (n_t < 1) throw std::domain_error("N_t must be >= 1");
    if (paths < 1 || paths > n_t) throw std::domain_error("require 1 <= L <= N_t");
    if (n_rf < 1) throw std::domain_error("N_RF must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw std::domain_error("alpha must be finite and non-negative");
    }
}

std::string describe(const std::string& what, int n_t, int paths, int n_rf, double alpha,
                     long double ratio) {
    std::ostringstream os;
    os << what << " cancellation ratio " << static_cast<double>(ratio) << " exceeds guard at N_t="
       << n_t << " L=" << paths << " N_RF=" << n_rf << " alpha=" << alpha;
    return os.str();
}

long double guarded(const sm::CompensatedSum& sum, const std::string& what, int n_t, int paths, int n_rf,
                    double alpha) {
    const long double ratio = sum.cancellation_ratio();
    if (ratio > kCancellationGuard) {
        throw NumericalValidityError(describe(what, n_t, paths, n_rf, alpha, ratio));
    }
    return sum.value();
}

long double upsilon(int s, long double x) { return sm::lower_inc_gamma_int<long double>(s, x); }

// C(n, k) by the multiplicative formula; every intermediate is an integer, so
// the value is exact while it fits the long double mantissa.
long double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0L;
    k = std::min(k, n - k);
    long double r = 1.0L;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// n! / (n - count)!
long double falling(int n, int count) {
    long double r = 1.0L;
    for (int q = n - count + 1; q <= n; ++q) r *= q;
    return r;
}

// A partial result with the total magnitude of the terms that produced it.
struct Accumulated {
    long double value = 0.0L;
    long double magnitude = 0.0L;
};

// Probability that, with j non-zero beams already trained and one more just
// found, training stops here: the strongest k of the first j stay at or below
// t = alpha/N_t while the strongest k of all j+1 exceed it. Case j >= k >= 2.
class StopProbability {
  public:
    StopProbability(int n_t, int paths, int k, double alpha)
        : n_t_(n_t), paths_(paths), k_(k), alpha_(alpha),
          a_(static_cast<long double>(paths) * alpha / n_t) {}

    Accumulated operator()(int j) const {
        const int k = k_;
        const long double rate = paths_;
        const long double ea = std::exp(-a_);
        // ((1-k)/L)^k times the L^k inside beta cancels, leaving
        //   (1-k)^k (-1)^l j! / ((j-k-l)! (k-1)! (k-2)! l!)
        //   = (1-k)^k (-1)^l C(j-k, l) j!/(j-k)! / ((k-1)! (k-2)!).
        const long double base = std::pow(static_cast<long double>(1 - k), k) * falling(j, k) /
                                 (sm::factorial(k - 1) * sm::factorial(k - 2));

        sm::CompensatedSum sum;
        for (int l = 0; l <= j - k; ++l) {
            const long double beta = base * binomial(j - k, l) * ((l % 2 == 0) ? 1.0L : -1.0L);
            const long double lp1 = l + 1;
            const long double upper = rate * alpha_ * lp1 / (static_cast<long double>(n_t_) * k);
            const long double inv_lk = std::pow(lp1, -static_cast<long double>(k));
            const long double ups_k = upsilon(k, upper);
            const long double shift = -rate * alpha_ * lp1 / n_t_;

            for (int m = 0; m <= k - 2; ++m) {
                const long double c_km = binomial(k - 2, m);
                const long double ups_inner = upsilon(k - 1 - m, upper);

                // First family: bracket F(upper) - F(0).
                const long double bracket1 = std::pow(upper, m + 1) * ups_inner - ups_k;
                const long double sign_m = (m % 2 == 0) ? 1.0L : -1.0L;
                sum.add(ea / (k - 1) * beta * c_km * sign_m * inv_lk * bracket1 / (m + 1));

                // Second family: bracket F(0) - F(upper).
                const long double pre2 = -ea / ((k - 1.0L) * (k - 1.0L)) * beta * c_km /
                                         std::pow(static_cast<long double>(k - 1), m) * inv_lk;
                long double shift_pow = 1.0L;
                for (int n = 0; n <= m; ++n) {
                    const long double bracket2 =
                        upsilon(k - n, upper) - std::pow(upper, m - n + 1) * ups_inner;
                    sum.add(pre2 * binomial(m, n) * shift_pow * bracket2 /
                            (m - n + 1));
                    shift_pow *= shift;
                }
            }
        }
        return {sum.value(), sum.magnitude()};
    }

  private:
    int n_t_;
    int paths_;
    int k_;
    double alpha_;
    long double a_;
};

// int_0^a e^{-x} [e^{-r x} - sum_{m<=k-2} (-r x)^m / m!] dx, the difference
// between the closed-form exponential integral and B(l) for r = l / k.
long double truncated_exp_integral(long double a, long double r, int k) {
    const long double ra = r * a;
    if (ra > k + 1.0L || k == 1) {
        long double b = 0.0L;
        long double coeff = 1.0L;
        for (int m = 0; m <= k - 2; ++m) {
            if (m > 0) coeff *= -r / m;
            b += coeff * upsilon(m + 1, a);
        }
        return -std::expm1(-(1.0L + r) * a) / (1.0L + r) - b;
    }
    // Series sum_{m>=k-1} (-r)^m / m! * Upsilon(m+1, a) = (-r)^m P(m+1, a).
    long double pow_r = 1.0L;
    for (int m = 1; m <= k - 1; ++m) pow_r *= -r;
    long double sum = 0.0L;
    for (int m = k - 1; m < k + 10000; ++m) {
        const long double term = pow_r * sm::regularized_lower_gamma<long double>(m + 1, a);
        sum += term;
        if (std::fabs(term) <= std::fabs(sum) * std::numeric_limits<long double>::epsilon() &&
            m > a) {
            break;
        }
        if (term == 0.0L) break;
        pow_r *= -r;
    }
    return sum;
}

}  // namespace

double TrainingLengthPmf::mean() const {
    sm::CompensatedSum sum;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        sum.add(static_cast<long double>(i + 1) * probabilities[i]);
    }
    return static_cast<double>(sum.value());
}

namespace {

// P_1 .. P_{N_t} in extended precision; the public PMF rounds these to double.
std::vector<long double> training_length_probabilities(int n_t, int paths, int k, double alpha) {
    const long double a = static_cast<long double>(paths) * alpha / n_t;
    const long double ea = std::exp(-a);

    std::vector<long double> probs(n_t, 0.0L);
    if (n_t == 1) {
        probs[0] = 1.0L;
        return probs;
    }

    // The stopping probability given j already-found paths does not depend
    // on i, so it is computed once per j.
    std::vector<Accumulated> stop(paths);
    if (k == 1) {
        const long double miss = -std::expm1(-a);
        for (int j = 0; j < paths; ++j) {
            const long double v = ea * std::pow(miss, j);
            stop[j] = {v, v};
        }
    } else {
        const StopProbability order_stat(n_t, paths, k, alpha);
        for (int j = 0; j < paths; ++j) {
            if (j <= k - 1) {
                const long double v =
                    j == 0 ? ea : ea * std::exp(j * std::log(a) - sm::log_factorial(j));
                stop[j] = {v, v};
            } else {
                stop[j] = order_stat(j);
            }
        }
    }

    sm::CompensatedSum total;
    probs[0] = static_cast<long double>(paths) / n_t * ea;
    total.add(probs[0]);
    for (int i = 2; i <= n_t - 1; ++i) {
        const sm::XiBounds b = sm::xi_bounds(i, n_t, paths);
        sm::CompensatedSum pi;
        long double magnitude = 0.0L;
        for (int j = b.lower; j <= b.upper; ++j) {
            const long double w = sm::xi(i, j, n_t, paths);
            pi.add(w * stop[j].value);
            magnitude += w * stop[j].magnitude;
        }
        const long double value = pi.value();
        // The PMF is a distribution of total mass one, so term magnitudes
        // are measured against that mass: a tiny P_i may lose relative
        // precision while its absolute error stays below ~1e-7.
        if (magnitude > kCancellationGuard) {
            throw NumericalValidityError(describe("training-length probability P_" +
                                                      std::to_string(i),
                                                  n_t, paths, k, alpha, magnitude));
        }
        if (value < -kProbabilitySlack) {
            throw NumericalValidityError("negative training-length probability at i=" +
                                         std::to_string(i));
        }
        probs[i - 1] = value;
        total.add(value);
    }
    const long double last = 1.0L - total.value();
    if (last < -kProbabilitySlack) {
        throw NumericalValidityError("training-length probabilities exceed one by " +
                                     std::to_string(static_cast<double>(-last)));
    }
    probs[n_t - 1] = last;
    return probs;
}

}  // namespace

TrainingLengthPmf pmf_training_length(int n_t, int paths, int n_rf, double alpha) {
    check_common(n_t, paths, n_rf, alpha);
    const int k = std::min(n_rf, paths);
    const auto probs = training_length_probabilities(n_t, paths, k, alpha);
    return {n_t, paths, k, alpha, std::vector<double>(probs.begin(), probs.end())};
}

double avg_training_length(int n_t, int paths, int n_rf, double alpha) {
    check_common(n_t, paths, n_rf, alpha);
    const auto probs = training_length_probabilities(n_t, paths, std::min(n_rf, paths), alpha);
    sm::CompensatedSum saved;
    for (int i = 1; i <= n_t - 1; ++i) {
        saved.add(static_cast<long double>(n_t - i) * probs[i - 1]);
    }
    return static_cast<double>(n_t - saved.value());
}

double avg_training_length_asymptotic(int n_t, int paths) {
    return static_cast<double>(n_t) / (paths + 1);
}

double outage_it_su(int n_t, int paths, int n_rf, double alpha) {
    check_common(n_t, paths, n_rf, alpha);
    const int k = std::min(n_rf, paths);
    const long double a = static_cast<long double>(alpha) * paths / n_t;

    sm::CompensatedSum sum;
    sum.add(sm::regularized_lower_gamma<long double>(k, a));
    for (int l = 1; l <= paths - k; ++l) {
        const long double sign = ((k + l - 1) % 2 == 0) ? 1.0L : -1.0L;
        const long double coeff = binomial(paths - k, l) *
                                  std::pow(static_cast<long double>(k) / l, k - 1);
        const long double r = static_cast<long double>(l) / k;
        sum.add(sign * coeff * truncated_exp_integral(a, r, k));
    }
    const long double inner = guarded(sum, "outage", n_t, paths, k, alpha);
    const long double value = binomial(paths, k) * inner;
    if (value < -kProbabilitySlack || value > 1.0L + kProbabilitySlack) {
        throw NumericalValidityError("outage probability " +
                                     std::to_string(static_cast<double>(value)) +
                                     " outside [0, 1]");
    }
    return std::clamp(static_cast<double>(value), 0.0, 1.0);
}

double outage_single_rf(int n_t, int paths, double alpha) {
    check_common(n_t, paths, 1, alpha);
    const double a = alpha * paths / n_t;
    return std::pow(-std::expm1(-a), paths);
}

double outage_single_rf_asymptote(int n_t, int paths, double alpha) {
    check_common(n_t, paths, 1, alpha);
    return std::pow(alpha * paths / n_t, paths);
}

double hierarchical_training_length(int n_t, int paths, int branching) {
    if (branching < 2) throw std::domain_error("hierarchical search needs M >= 2");
    if (paths < 1) throw std::domain_error("hierarchical search needs L >= 1");
    if (static_cast<long long>(paths) * branching > n_t) {
        throw std::domain_error("hierarchical search needs L <= N_t / M");
    }
    const double levels = std::log(static_cast<double>(n_t) / paths) / std::log(branching);
    return branching * static_cast<double>(paths) * paths * levels;
}

}  // namespace beamtrain::analytic
