#pragma once

// Single-user beam training and transmission: the interleaved scheme that
// stops as soon as the trained beams can support the target rate, and the
// non-interleaved full/partial training baselines.
//
// Outage is an SNR-domain decision: with S the selected beams, the received
// SNR is P * N_t * sum_{l in S} |h_bar_l|^2 and outage means
// sum_{l in S} |h_bar_l|^2 <= alpha / N_t.

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "beamtrain/channel_model.hpp"

namespace beamtrain {

struct SuSystemConfig {
    int n_rf = 1;
    double alpha = 1.0;  // (2^R_th - 1) / P
    double power = 1.0;  // linear transmit power, used for rates only

    static SuSystemConfig from_alpha(int n_rf, double alpha, double power = 1.0);
    static SuSystemConfig from_rate(int n_rf, double power, double rate_bits);

    double target_rate() const;
    void validate() const;
};

struct SuEpisodeResult {
    int training_length = 0;
    bool outage = true;
    std::vector<int> selected_beams;  // strongest first
    double beam_power = 0.0;          // sum_{l in S} |h_bar_l|^2
    double received_snr = 0.0;        // P * N_t * beam_power
    double rate = 0.0;                // bits/s/Hz actually delivered
};

// Interleaved training: beams are trained in order 1..N_t and training stops
// at the first beam after which the strongest min(N_RF, |B|) known non-zero
// beams clear the threshold. On outage no data is sent, so rate = 0.
SuEpisodeResult it_su_episode(const ChannelRealization& ch, const SuSystemConfig& cfg);

// Same training as it_su_episode, but when all N_t beams are exhausted the BS
// still transmits on the best beams, so the rate is log2(1 + SNR) in every case.
SuEpisodeResult su_rate_episode(const ChannelRealization& ch, const SuSystemConfig& cfg);

// Non-interleaved training of all N_t beams, then transmission on the
// strongest min(N_RF, L) beams.
SuEpisodeResult nit_su_full(const ChannelRealization& ch, const SuSystemConfig& cfg);

// Non-interleaved training of beams 1..trained only.
SuEpisodeResult nit_su_partial(const ChannelRealization& ch, const SuSystemConfig& cfg,
                               int trained);

struct SuBeamformer {
    Eigen::MatrixXcd analog;    // N_t x L_s, columns d*_s / sqrt(N_t)
    Eigen::VectorXcd baseband;  // matched to the selected beam gains, unit norm
};

// Hybrid beamformer for the selected (beam, h_bar) pairs.
SuBeamformer su_beamformers(int n_t, std::span<const std::pair<int, cplx>> selected);

}  // namespace beamtrain
