#pragma once

// Multi-user beam training with beam assignment and zero-forcing baseband.
//
// A beam assignment gives each of the U users one distinct beam. With beams
// (n_1..n_U) the effective channel is the U x U matrix
//   H_hat[u][v] = sqrt(N_t) * h_bar_{u, n_v},
// ZF uses F_BB = lambda * H_hat^H (H_hat H_hat^H)^{-1}, and every user then
// sees post-ZF SNR (P/U) lambda^2. Outage means lambda^2 <= alpha_bar.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "beamtrain/channel_model.hpp"

namespace beamtrain {

enum class AssignmentMethod { exhaustive, maxmin };

std::string_view to_string(AssignmentMethod m);
AssignmentMethod parse_assignment_method(std::string_view name);

// Relative singular-value floor for declaring H_hat full rank.
inline constexpr double kRankTolerance = 1e-9;

struct MuSystemConfig {
    int n_rf = 1;
    int users = 1;
    double alpha_bar = 1.0;  // (2^R_th - 1) U / P
    double power = 1.0;      // linear, used for rates only
    // Exhaustive search refuses instances with more ordered tuples than this.
    std::size_t exhaustive_tuple_cap = 1'000'000;

    static MuSystemConfig from_alpha(int n_rf, int users, double alpha_bar, double power = 1.0);
    static MuSystemConfig from_rate(int n_rf, int users, double power, double rate_bits);

    void validate() const;
};

// Ordered U-tuple: beams[u] serves user u.
struct BeamAssignment {
    std::vector<int> beams;

    friend bool operator==(const BeamAssignment&, const BeamAssignment&) = default;
};

struct AssignmentResult {
    BeamAssignment assignment;
    double lambda_sq = 0.0;
};

// Non-zero beams reported so far, per user, plus their union (both sorted).
class KnownBeams {
  public:
    explicit KnownBeams(int users) : per_user_(users) {}

    // Records every non-zero entry of beam `beam`; true if anything was added.
    bool learn(const ChannelRealization& ch, int beam);

    const std::vector<int>& of_user(int user) const { return per_user_[user]; }
    const std::vector<int>& all() const { return union_; }
    int users() const { return static_cast<int>(per_user_.size()); }

    // Every user has a known non-zero beam and there are at least U beams.
    bool ready_for_assignment() const;

    static KnownBeams from_sets(std::vector<std::vector<int>> per_user);

  private:
    std::vector<std::vector<int>> per_user_;
    std::vector<int> union_;
};

struct MuEpisodeResult {
    int training_length = 0;
    bool outage = true;
    std::optional<BeamAssignment> assignment;  // the assignment used for data, if any
    double lambda_sq = 0.0;                    // of the last assignment attempted
    AssignmentMethod method = AssignmentMethod::exhaustive;
    double rate = 0.0;  // per-user bits/s/Hz delivered
};

Eigen::MatrixXcd effective_channel_matrix(const BeamAssignment& a, const ChannelRealization& ch);

// lambda^2 = U / ||H_hat^H (H_hat H_hat^H)^{-1}||_F^2; 0 when H_hat is rank
// deficient (which includes repeated beams). The analog columns are
// orthonormal, so F_RF does not change the Frobenius norm.
double zf_lambda_sq(const BeamAssignment& a, const ChannelRealization& ch);

// Full rank test: sigma_min > kRankTolerance * sigma_max.
bool check_feasible(const BeamAssignment& a, const ChannelRealization& ch);

struct ZfPrecoder {
    Eigen::MatrixXcd analog;    // N_t x U
    Eigen::MatrixXcd baseband;  // U x U, lambda * H_hat^{-1}
    double lambda = 0.0;
};

// Explicit hybrid ZF precoder. Throws std::domain_error for infeasible input.
ZfPrecoder zf_precoder(const BeamAssignment& a, const ChannelRealization& ch);

// Best lambda^2 over all ordered tuples of distinct beams from the known
// union; lexicographically first tuple wins ties. std::nullopt when no tuple
// is feasible. Throws std::length_error past cfg.exhaustive_tuple_cap.
std::optional<AssignmentResult> exhaustive_assignment(const KnownBeams& known,
                                                      const ChannelRealization& ch,
                                                      const MuSystemConfig& cfg);

// Lexicographic bottleneck assignment on |h_bar_{u,n}|: maximise the smallest
// assigned gain, fix that user/beam pair, and repeat on the rest. std::nullopt
// when no user->beam matching over non-zero gains exists.
std::optional<AssignmentResult> maxmin_assignment(const KnownBeams& known,
                                                  const ChannelRealization& ch,
                                                  const MuSystemConfig& cfg);

std::optional<AssignmentResult> find_assignment(AssignmentMethod method, const KnownBeams& known,
                                                const ChannelRealization& ch,
                                                const MuSystemConfig& cfg);

// Interleaved training: beams 1..U first, then one beam per step; assignment is
// attempted whenever new non-zero beams arrived and every user knows one.
MuEpisodeResult it_mu_episode(const ChannelRealization& ch, const MuSystemConfig& cfg,
                              AssignmentMethod method);

MuEpisodeResult nit_mu_full(const ChannelRealization& ch, const MuSystemConfig& cfg,
                            AssignmentMethod method);

// Beams 1..trained, then a single assignment; requires U <= trained <= N_t.
MuEpisodeResult nit_mu_partial(const ChannelRealization& ch, const MuSystemConfig& cfg, int trained,
                               AssignmentMethod method);

}  // namespace beamtrain
