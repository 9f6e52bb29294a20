#include "beamtrain/mu_schemes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace beamtrain {

std::string_view to_string(AssignmentMethod m) {
    switch (m) {
        case AssignmentMethod::exhaustive:
            return "exhaustive";
        case AssignmentMethod::maxmin:
            return "maxmin";
    }
    return "unknown";
}

AssignmentMethod parse_assignment_method(std::string_view name) {
    if (name == "exhaustive") return AssignmentMethod::exhaustive;
    if (name == "maxmin") return AssignmentMethod::maxmin;
    throw ConfigError("unknown assignment method '" + std::string(name) + "'");
}

MuSystemConfig MuSystemConfig::from_alpha(int n_rf, int users, double alpha_bar, double power) {
    MuSystemConfig cfg;
    cfg.n_rf = n_rf;
    cfg.users = users;
    cfg.alpha_bar = alpha_bar;
    cfg.power = power;
    cfg.validate();
    return cfg;
}

MuSystemConfig MuSystemConfig::from_rate(int n_rf, int users, double power, double rate_bits) {
    if (!(power > 0.0)) throw ConfigError("transmit power must be positive");
    return from_alpha(n_rf, users, (std::exp2(rate_bits) - 1.0) * users / power, power);
}

void MuSystemConfig::validate() const {
    if (users < 1) throw ConfigError("user count must be >= 1");
    if (n_rf < 1) throw ConfigError("N_RF must be >= 1");
    if (users > n_rf) throw ConfigError("U must not exceed N_RF");
    if (!(alpha_bar >= 0.0)) throw ConfigError("alpha_bar must be non-negative");
    if (!(power > 0.0)) throw ConfigError("transmit power must be positive");
}

bool KnownBeams::learn(const ChannelRealization& ch, int beam) {
    bool added = false;
    for (int u = 0; u < users(); ++u) {
        if (ch.gain(u, beam) == cplx{}) continue;
        auto& set = per_user_[u];
        set.insert(std::upper_bound(set.begin(), set.end(), beam), beam);
        added = true;
    }
    if (added) {
        auto pos = std::lower_bound(union_.begin(), union_.end(), beam);
        if (pos == union_.end() || *pos != beam) union_.insert(pos, beam);
    }
    return added;
}

bool KnownBeams::ready_for_assignment() const {
    if (static_cast<int>(union_.size()) < users()) return false;
    return std::none_of(per_user_.begin(), per_user_.end(),
                        [](const std::vector<int>& s) { return s.empty(); });
}

KnownBeams KnownBeams::from_sets(std::vector<std::vector<int>> per_user) {
    KnownBeams kb(static_cast<int>(per_user.size()));
    for (auto& s : per_user) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        kb.union_.insert(kb.union_.end(), s.begin(), s.end());
    }
    std::sort(kb.union_.begin(), kb.union_.end());
    kb.union_.erase(std::unique(kb.union_.begin(), kb.union_.end()), kb.union_.end());
    kb.per_user_ = std::move(per_user);
    return kb;
}

Eigen::MatrixXcd effective_channel_matrix(const BeamAssignment& a, const ChannelRealization& ch) {
    const auto users = static_cast<Eigen::Index>(a.beams.size());
    if (users != ch.users()) {
        throw std::invalid_argument("assignment size differs from the user count");
    }
    const double scale = std::sqrt(static_cast<double>(ch.n_t()));
    Eigen::MatrixXcd h(users, users);
    for (Eigen::Index u = 0; u < users; ++u) {
        for (Eigen::Index v = 0; v < users; ++v) {
            h(u, v) = scale * ch.gain(static_cast<int>(u), a.beams[v]);
        }
    }
    return h;
}

namespace {

bool has_zero_row(const Eigen::MatrixXcd& h) {
    for (Eigen::Index u = 0; u < h.rows(); ++u) {
        if ((h.row(u).array() == cplx{}).all()) return true;
    }
    return false;
}

// Singular values in decreasing order, or empty for a structurally singular
// matrix (zero row).
Eigen::VectorXd singular_values(const Eigen::MatrixXcd& h) {
    if (has_zero_row(h)) return {};
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
    return svd.singularValues();
}

bool full_rank(const Eigen::VectorXd& sv) {
    if (sv.size() == 0) return false;
    const double largest = sv[0];
    return largest > 0.0 && sv[sv.size() - 1] > kRankTolerance * largest;
}

}  // namespace

double zf_lambda_sq(const BeamAssignment& a, const ChannelRealization& ch) {
    const Eigen::VectorXd sv = singular_values(effective_channel_matrix(a, ch));
    if (!full_rank(sv)) return 0.0;
    // ||H^H (H H^H)^{-1}||_F^2 = sum_i 1 / sigma_i^2 for square full-rank H.
    const double inverse_energy = sv.array().square().inverse().sum();
    return static_cast<double>(sv.size()) / inverse_energy;
}

bool check_feasible(const BeamAssignment& a, const ChannelRealization& ch) {
    return full_rank(singular_values(effective_channel_matrix(a, ch)));
}

ZfPrecoder zf_precoder(const BeamAssignment& a, const ChannelRealization& ch) {
    const Eigen::MatrixXcd h = effective_channel_matrix(a, ch);
    if (!full_rank(singular_values(h))) {
        throw std::domain_error("zf_precoder: beam assignment is infeasible");
    }
    const auto users = h.rows();
    Eigen::MatrixXcd analog(ch.n_t(), users);
    for (Eigen::Index v = 0; v < users; ++v) analog.col(v) = dft_beam(ch.n_t(), a.beams[v]);

    const Eigen::MatrixXcd direction = h.adjoint() * (h * h.adjoint()).inverse();
    const double lambda = std::sqrt(static_cast<double>(users) / (analog * direction).squaredNorm());
    return ZfPrecoder{std::move(analog), lambda * direction, lambda};
}

namespace {

double per_user_rate(const MuSystemConfig& cfg, double lambda_sq) {
    return std::log2(1.0 + cfg.power / cfg.users * lambda_sq);
}

// One assignment attempt; on success fills `r` and returns true.
bool attempt(MuEpisodeResult& r, AssignmentMethod method, const KnownBeams& known,
             const ChannelRealization& ch, const MuSystemConfig& cfg) {
    auto found = find_assignment(method, known, ch, cfg);
    if (!found) {
        r.lambda_sq = 0.0;
        return false;
    }
    r.lambda_sq = found->lambda_sq;
    if (!(found->lambda_sq > cfg.alpha_bar)) return false;
    r.assignment = std::move(found->assignment);
    r.outage = false;
    r.rate = per_user_rate(cfg, r.lambda_sq);
    return true;
}

void check_channel(const ChannelRealization& ch, const MuSystemConfig& cfg) {
    cfg.validate();
    if (ch.users() != cfg.users) throw ConfigError("realization user count differs from U");
    if (cfg.users > ch.n_t()) throw ConfigError("U must not exceed N_t");
}

}  // namespace

MuEpisodeResult it_mu_episode(const ChannelRealization& ch, const MuSystemConfig& cfg,
                              AssignmentMethod method) {
    check_channel(ch, cfg);
    MuEpisodeResult r;
    r.method = method;
    KnownBeams known(cfg.users);

    bool fresh = false;
    for (int beam = 1; beam <= cfg.users; ++beam) fresh = known.learn(ch, beam) || fresh;
    if (fresh && known.ready_for_assignment() && attempt(r, method, known, ch, cfg)) {
        r.training_length = cfg.users;
        return r;
    }
    for (int beam = cfg.users + 1; beam <= ch.n_t(); ++beam) {
        if (!known.learn(ch, beam) || !known.ready_for_assignment()) continue;
        if (attempt(r, method, known, ch, cfg)) {
            r.training_length = beam;
            return r;
        }
    }
    r.training_length = ch.n_t();
    r.outage = true;
    return r;
}

MuEpisodeResult nit_mu_partial(const ChannelRealization& ch, const MuSystemConfig& cfg, int trained,
                               AssignmentMethod method) {
    check_channel(ch, cfg);
    if (trained < cfg.users || trained > ch.n_t()) {
        throw ConfigError("trained beam count must lie in [U, N_t]");
    }
    MuEpisodeResult r;
    r.method = method;
    r.training_length = trained;
    KnownBeams known(cfg.users);
    for (int beam = 1; beam <= trained; ++beam) known.learn(ch, beam);
    if (!known.ready_for_assignment()) return r;

    auto found = find_assignment(method, known, ch, cfg);
    if (!found) return r;
    r.lambda_sq = found->lambda_sq;
    r.outage = !(found->lambda_sq > cfg.alpha_bar);
    // Without interleaving the BS transmits on whatever it found.
    r.rate = per_user_rate(cfg, r.lambda_sq);
    r.assignment = std::move(found->assignment);
    return r;
}

MuEpisodeResult nit_mu_full(const ChannelRealization& ch, const MuSystemConfig& cfg,
                            AssignmentMethod method) {
    return nit_mu_partial(ch, cfg, ch.n_t(), method);
}

}  // namespace beamtrain
