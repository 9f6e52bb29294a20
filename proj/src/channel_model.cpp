#include "beamtrain/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace beamtrain {

PathCount PathCount::fixed(int paths) {
    if (paths < 1) throw ConfigError("path count must be >= 1");
    PathCount p;
    p.fixed_ = true;
    p.paths_ = paths;
    return p;
}

PathCount PathCount::linear_in_nt(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("path fraction c must lie in (0, 1]");
    }
    PathCount p;
    p.fixed_ = false;
    p.fraction_ = fraction;
    return p;
}

int PathCount::resolve(int n_t) const {
    if (fixed_) {
        if (paths_ > n_t) {
            throw ConfigError("L = " + std::to_string(paths_) + " exceeds N_t = " +
                              std::to_string(n_t));
        }
        return paths_;
    }
    // Round half up; the small offset absorbs binary representation error in
    // products such as 0.1 * 80.
    const double scaled = fraction_ * n_t;
    int paths = static_cast<int>(std::floor(scaled + 0.5 + 1e-9));
    return std::clamp(paths, 1, n_t);
}

std::string PathCount::label() const {
    if (fixed_) return std::to_string(paths_);
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << fraction_ << "Nt";
    return os.str();
}

void ChannelConfig::validate() const {
    if (n_t < 2) throw ConfigError("N_t must be >= 2");
    if (users < 1) throw ConfigError("user count must be >= 1");
    (void)resolved_paths();
}

ChannelRealization::ChannelRealization(int n_t, std::vector<std::vector<cplx>> gains,
                                       std::vector<std::vector<int>> paths)
    : n_t_(n_t), gains_(std::move(gains)), paths_(std::move(paths)) {}

ChannelRealization ChannelRealization::from_beam_gains(int n_t,
                                                       std::vector<std::vector<cplx>> gains) {
    if (n_t < 1) throw ConfigError("N_t must be >= 1");
    if (gains.empty()) throw ConfigError("realization needs at least one user");
    std::vector<std::vector<int>> paths(gains.size());
    for (std::size_t u = 0; u < gains.size(); ++u) {
        if (static_cast<int>(gains[u].size()) != n_t) {
            throw ConfigError("beam gain vector length differs from N_t");
        }
        for (int b = 1; b <= n_t; ++b) {
            if (gains[u][b - 1] != cplx{}) paths[u].push_back(b);
        }
    }
    return ChannelRealization(n_t, std::move(gains), std::move(paths));
}

std::size_t ChannelRealization::checked_user(int user) const {
    if (user < 0 || user >= users()) throw std::out_of_range("user index out of range");
    return static_cast<std::size_t>(user);
}

int ChannelRealization::checked_beam(int beam) const {
    if (beam < 1 || beam > n_t_) throw std::out_of_range("beam index out of range");
    return beam;
}

ChannelRealization sample_channel(const ChannelConfig& cfg, std::uint64_t seed,
                                  std::uint64_t point, std::uint64_t trial) {
    cfg.validate();
    const int n_t = cfg.n_t;
    const int paths = cfg.resolved_paths();
    const double component_sd = std::sqrt(0.5 / paths);

    std::vector<std::vector<cplx>> gains(cfg.users, std::vector<cplx>(n_t));
    std::vector<std::vector<int>> indices(cfg.users);
    std::vector<int> pool(n_t);

    for (int u = 0; u < cfg.users; ++u) {
        SubstreamEngine engine(StreamKey{seed, point, trial, static_cast<std::uint64_t>(u)});

        // Partial Fisher-Yates: the first `paths` slots become a uniform L-subset.
        std::iota(pool.begin(), pool.end(), 1);
        for (int k = 0; k < paths; ++k) {
            std::uniform_int_distribution<int> pick(k, n_t - 1);
            std::swap(pool[k], pool[pick(engine)]);
        }

        std::normal_distribution<double> normal(0.0, component_sd);
        auto& row = gains[u];
        for (int k = 0; k < paths; ++k) {
            const double re = normal(engine);
            const double im = normal(engine);
            row[pool[k] - 1] = cplx(re, im);
        }
        indices[u].assign(pool.begin(), pool.begin() + paths);
        std::sort(indices[u].begin(), indices[u].end());
    }
    return ChannelRealization(n_t, std::move(gains), std::move(indices));
}

cplx effective_gain(const ChannelRealization& ch, int user, int beam) {
    return std::sqrt(static_cast<double>(ch.n_t())) * ch.gain(user, beam);
}

Eigen::VectorXcd dft_column(int n_t, int beam) {
    if (beam < 1 || beam > n_t) throw std::out_of_range("beam index out of range");
    Eigen::VectorXcd d(n_t);
    for (int n = 0; n < n_t; ++n) {
        // Reduce the phase index modulo N_t before scaling to keep it exact.
        const long long idx = (static_cast<long long>(beam - 1) * n) % n_t;
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(idx) / n_t;
        d[n] = std::polar(1.0, phase);
    }
    return d;
}

Eigen::VectorXcd dft_beam(int n_t, int beam) {
    return dft_column(n_t, beam).conjugate() / std::sqrt(static_cast<double>(n_t));
}

Eigen::VectorXcd antenna_domain_vector(const ChannelRealization& ch, int user) {
    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(ch.n_t());
    for (int beam : ch.path_indices(user)) {
        h += dft_column(ch.n_t(), beam) * ch.gain(user, beam);
    }
    return h;
}

nlohmann::json to_json(const ChannelRealization& ch) {
    nlohmann::json records = nlohmann::json::array();
    for (int u = 0; u < ch.users(); ++u) {
        nlohmann::json rec;
        rec["user"] = u;
        auto indices = ch.path_indices(u);
        rec["indices"] = std::vector<int>(indices.begin(), indices.end());
        std::vector<double> re, im;
        for (int beam : indices) {
            re.push_back(ch.gain(u, beam).real());
            im.push_back(ch.gain(u, beam).imag());
        }
        rec["gains_re"] = re;
        rec["gains_im"] = im;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace beamtrain
