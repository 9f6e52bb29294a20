#pragma once

// Beamspace channel model: each user sees L paths on uniformly drawn DFT beam
// directions with i.i.d. CN(0, 1/L) gains; all other beams are exactly zero.
//
// Beam indices are 1-based throughout (beam 1 .. beam N_t), matching the
// training order: training length i means beams 1..i were trained.

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "beamtrain/rng.hpp"

namespace beamtrain {

using cplx = std::complex<double>;

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Number of paths per user: a fixed count, or a fraction c of N_t.
class PathCount {
  public:
    static PathCount fixed(int paths);
    static PathCount linear_in_nt(double fraction);

    // L for a given N_t: the fixed value, or round-half-up(c * N_t) clamped to
    // [1, N_t]. A fixed L above N_t is a ConfigError.
    int resolve(int n_t) const;

    bool is_fixed() const { return fixed_; }
    int fixed_value() const { return paths_; }
    double fraction() const { return fraction_; }

    // "3" or "0.1Nt".
    std::string label() const;

    friend bool operator==(const PathCount&, const PathCount&) = default;

  private:
    bool fixed_ = true;
    int paths_ = 1;
    double fraction_ = 0.0;
};

struct ChannelConfig {
    int n_t = 2;
    PathCount paths = PathCount::fixed(1);
    int users = 1;

    int resolved_paths() const { return paths.resolve(n_t); }
    void validate() const;
};

// One draw of every user's beam-domain channel vector.
class ChannelRealization {
  public:
    // Builds a realization from dense per-user beam gains (length N_t each);
    // the path sets are the non-zero positions. Used for synthetic inputs.
    static ChannelRealization from_beam_gains(int n_t, std::vector<std::vector<cplx>> gains);

    int n_t() const { return n_t_; }
    int users() const { return static_cast<int>(gains_.size()); }

    // h_bar_{u,beam}; zero off the user's path set.
    cplx gain(int user, int beam) const { return gains_[checked_user(user)][checked_beam(beam) - 1]; }
    std::span<const cplx> gains(int user) const { return gains_[checked_user(user)]; }

    // Sorted 1-based beam indices carrying a path for `user`.
    std::span<const int> path_indices(int user) const { return paths_[checked_user(user)]; }

  private:
    friend ChannelRealization sample_channel(const ChannelConfig&, std::uint64_t, std::uint64_t,
                                             std::uint64_t);

    ChannelRealization(int n_t, std::vector<std::vector<cplx>> gains,
                       std::vector<std::vector<int>> paths);

    std::size_t checked_user(int user) const;
    int checked_beam(int beam) const;

    int n_t_ = 0;
    std::vector<std::vector<cplx>> gains_;
    std::vector<std::vector<int>> paths_;
};

// Draws one realization. User u uses substream (seed, point, trial, u), so the
// result depends only on those keys.
ChannelRealization sample_channel(const ChannelConfig& cfg, std::uint64_t seed,
                                  std::uint64_t point, std::uint64_t trial);

// sqrt(N_t) * h_bar_{u,beam}: what user u measures when beam `beam` is trained.
cplx effective_gain(const ChannelRealization& ch, int user, int beam);

// Codebook entry d*_beam / sqrt(N_t); unit norm, mutually orthogonal.
Eigen::VectorXcd dft_beam(int n_t, int beam);

// Column d_beam of the DFT matrix D (not normalized).
Eigen::VectorXcd dft_column(int n_t, int beam);

// Antenna-domain channel h_u = D h_bar_u.
Eigen::VectorXcd antenna_domain_vector(const ChannelRealization& ch, int user);

// Debug dump: one record per user {user, indices[], gains_re[], gains_im[]}.
nlohmann::json to_json(const ChannelRealization& ch);

}  // namespace beamtrain
