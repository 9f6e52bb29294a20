#include "beamtrain/su_schemes.hpp"

#include <algorithm>
#include <cmath>

namespace beamtrain {

namespace {

// Keeps the `capacity` strongest beams seen so far, strongest first. Equal
// powers keep the earlier (lower-index) beam ahead.
class StrongestBeams {
  public:
    explicit StrongestBeams(int capacity) : capacity_(capacity) { beams_.reserve(capacity + 1); }

    void offer(int beam, double power) {
        auto pos = std::find_if(beams_.begin(), beams_.end(),
                                [power](const Entry& e) { return power > e.power; });
        if (pos == beams_.end() && static_cast<int>(beams_.size()) >= capacity_) return;
        beams_.insert(pos, Entry{beam, power});
        if (static_cast<int>(beams_.size()) > capacity_) beams_.pop_back();
    }

    double total_power() const {
        double total = 0.0;
        for (const auto& e : beams_) total += e.power;
        return total;
    }

    std::vector<int> indices() const {
        std::vector<int> out;
        out.reserve(beams_.size());
        for (const auto& e : beams_) out.push_back(e.beam);
        return out;
    }

  private:
    struct Entry {
        int beam;
        double power;
    };
    int capacity_;
    std::vector<Entry> beams_;
};

double threshold(const ChannelRealization& ch, const SuSystemConfig& cfg) {
    return cfg.alpha / ch.n_t();
}

void fill_transmission(SuEpisodeResult& r, const StrongestBeams& best, const ChannelRealization& ch,
                       const SuSystemConfig& cfg) {
    r.selected_beams = best.indices();
    r.beam_power = best.total_power();
    r.received_snr = cfg.power * ch.n_t() * r.beam_power;
}

SuEpisodeResult interleaved(const ChannelRealization& ch, const SuSystemConfig& cfg,
                            bool transmit_on_outage) {
    cfg.validate();
    const double target = threshold(ch, cfg);
    StrongestBeams best(cfg.n_rf);
    SuEpisodeResult r;
    for (int beam = 1; beam <= ch.n_t(); ++beam) {
        const cplx g = ch.gain(0, beam);
        if (g == cplx{}) continue;
        best.offer(beam, std::norm(g));
        if (best.total_power() > target) {
            r.training_length = beam;
            r.outage = false;
            fill_transmission(r, best, ch, cfg);
            r.rate = std::log2(1.0 + r.received_snr);
            return r;
        }
    }
    r.training_length = ch.n_t();
    r.outage = true;
    fill_transmission(r, best, ch, cfg);
    r.rate = transmit_on_outage ? std::log2(1.0 + r.received_snr) : 0.0;
    return r;
}

}  // namespace

SuSystemConfig SuSystemConfig::from_alpha(int n_rf, double alpha, double power) {
    SuSystemConfig cfg{n_rf, alpha, power};
    cfg.validate();
    return cfg;
}

SuSystemConfig SuSystemConfig::from_rate(int n_rf, double power, double rate_bits) {
    if (!(power > 0.0)) throw ConfigError("transmit power must be positive");
    return from_alpha(n_rf, (std::exp2(rate_bits) - 1.0) / power, power);
}

double SuSystemConfig::target_rate() const { return std::log2(1.0 + alpha * power); }

void SuSystemConfig::validate() const {
    if (n_rf < 1) throw ConfigError("N_RF must be >= 1");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
    if (!(power > 0.0)) throw ConfigError("transmit power must be positive");
}

SuEpisodeResult it_su_episode(const ChannelRealization& ch, const SuSystemConfig& cfg) {
    return interleaved(ch, cfg, false);
}

SuEpisodeResult su_rate_episode(const ChannelRealization& ch, const SuSystemConfig& cfg) {
    return interleaved(ch, cfg, true);
}

SuEpisodeResult nit_su_partial(const ChannelRealization& ch, const SuSystemConfig& cfg,
                               int trained) {
    cfg.validate();
    if (trained < 1 || trained > ch.n_t()) {
        throw ConfigError("trained beam count must lie in [1, N_t]");
    }
    StrongestBeams best(cfg.n_rf);
    for (int beam = 1; beam <= trained; ++beam) {
        const cplx g = ch.gain(0, beam);
        if (g != cplx{}) best.offer(beam, std::norm(g));
    }
    SuEpisodeResult r;
    r.training_length = trained;
    fill_transmission(r, best, ch, cfg);
    r.outage = !(r.beam_power > threshold(ch, cfg));
    r.rate = std::log2(1.0 + r.received_snr);
    return r;
}

SuEpisodeResult nit_su_full(const ChannelRealization& ch, const SuSystemConfig& cfg) {
    return nit_su_partial(ch, cfg, ch.n_t());
}

SuBeamformer su_beamformers(int n_t, std::span<const std::pair<int, cplx>> selected) {
    if (selected.empty()) throw std::invalid_argument("su_beamformers: empty beam selection");
    double power = 0.0;
    for (const auto& [beam, g] : selected) power += std::norm(g);
    if (!(power > 0.0)) throw std::invalid_argument("su_beamformers: selected gains are all zero");

    const auto ls = static_cast<Eigen::Index>(selected.size());
    SuBeamformer bf{Eigen::MatrixXcd(n_t, ls), Eigen::VectorXcd(ls)};
    const double norm = std::sqrt(power);
    for (Eigen::Index l = 0; l < ls; ++l) {
        bf.analog.col(l) = dft_beam(n_t, selected[l].first);
        bf.baseband[l] = std::conj(selected[l].second) / norm;
    }
    return bf;
}

}  // namespace beamtrain
