#pragma once

// Closed-form training-length distribution and outage probability of the
// single-user interleaved scheme, plus the asymptotic and baseline formulas.
//
// All alternating sums are accumulated in long double with compensated
// summation. When the summed term magnitudes exceed the result by more than
// kCancellationGuard the evaluators throw NumericalValidityError instead of
// returning a number dominated by rounding noise.

#include <stdexcept>
#include <string>
#include <vector>

namespace beamtrain::analytic {

inline constexpr long double kCancellationGuard = 1e12L;
inline constexpr double kProbabilitySlack = 1e-9;

class NumericalValidityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TrainingLengthPmf {
    int n_t = 0;
    int paths = 0;
    int n_rf_effective = 0;
    double alpha = 0.0;
    // probabilities[i - 1] = P(training length = i), i = 1..N_t. The last
    // entry is the complement of the others.
    std::vector<double> probabilities;

    double mean() const;
};

// Requires 1 <= L <= N_t, N_RF >= 1, alpha >= 0. N_RF above L is evaluated
// as N_RF = L: extra RF chains cannot help once every path is usable.
TrainingLengthPmf pmf_training_length(int n_t, int paths, int n_rf, double alpha);

// N_t - sum_{i<N_t} (N_t - i) P_i.
double avg_training_length(int n_t, int paths, int n_rf, double alpha);

// Leading-order growth N_t / (L + 1) for fixed L.
double avg_training_length_asymptotic(int n_t, int paths);

// P(sum of the N_RF strongest path powers <= alpha / N_t).
double outage_it_su(int n_t, int paths, int n_rf, double alpha);

// Single RF chain: (1 - e^{-alpha L / N_t})^L.
double outage_single_rf(int n_t, int paths, double alpha);

// Fixed-L large-N_t behaviour of the single-RF outage: (alpha L / N_t)^L.
double outage_single_rf_asymptote(int n_t, int paths, double alpha);

// Training length M L^2 log_M(N_t / L) of hierarchical codebook search.
// Requires M >= 2 and L <= N_t / M.
double hierarchical_training_length(int n_t, int paths, int branching);

}  // namespace beamtrain::analytic
