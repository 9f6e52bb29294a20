#include "beamtrain/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "beamtrain/analytic.hpp"
#include "beamtrain/su_schemes.hpp"

namespace beamtrain {

using nlohmann::json;

std::string_view to_string(Mode m) { return m == Mode::su ? "su" : "mu"; }

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::it:
            return "it";
        case Scheme::nit_full:
            return "nit_full";
        case Scheme::nit_partial:
            return "nit_partial";
        case Scheme::rate_variant:
            return "rate_variant";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    if (name == "su") return Mode::su;
    if (name == "mu") return Mode::mu;
    throw ConfigError("unknown mode '" + std::string(name) + "'");
}

Scheme parse_scheme(std::string_view name) {
    if (name == "it") return Scheme::it;
    if (name == "nit_full") return Scheme::nit_full;
    if (name == "nit_partial") return Scheme::nit_partial;
    if (name == "rate_variant") return Scheme::rate_variant;
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

template <typename T>
std::vector<T> number_list(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<T>()};
    if (!v.is_array()) throw ConfigError(std::string("'") + key + "' must be a number or a list");
    std::vector<T> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(std::string("'") + key + "' entries must be numbers");
        out.push_back(e.get<T>());
    }
    return out;
}

PathCount parse_path_count(const json& e) {
    if (e.is_number_integer()) return PathCount::fixed(e.get<int>());
    if (e.is_object() && e.contains("c")) return PathCount::linear_in_nt(e.at("c").get<double>());
    throw ConfigError("'L' entries must be integers or {\"c\": fraction}");
}

TrainedLength parse_trained(const json& e) {
    if (e.is_number_integer()) return TrainedLength::fixed(e.get<int>());
    if (e.is_string() && e.get<std::string>() == "matched") return TrainedLength::matched();
    throw ConfigError("'L_trained' entries must be integers or \"matched\"");
}

void check_minimum(const std::vector<int>& v, const char* name, int minimum) {
    for (int x : v) {
        if (x < minimum) {
            throw ConfigError(std::string("'") + name + "' entries must be >= " +
                              std::to_string(minimum));
        }
    }
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("spec must be a JSON object");
    static const std::vector<std::string> known = {"mode", "scheme", "method", "N_t", "L",
                                                   "N_RF", "U", "alpha", "P_dB", "R_th",
                                                   "L_trained", "trials", "seed"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown spec field '" + key + "'");
        }
    }
    try {
        ExperimentSpec s;
        s.mode = parse_mode(j.value("mode", std::string("su")));
        s.scheme = parse_scheme(j.value("scheme", std::string("it")));
        if (j.contains("method")) s.method = parse_assignment_method(j.at("method").get<std::string>());
        s.n_t = number_list<int>(j, "N_t");
        if (j.contains("L")) {
            const json& l = j.at("L");
            if (l.is_array()) {
                for (const auto& e : l) s.paths.push_back(parse_path_count(e));
            } else {
                s.paths.push_back(parse_path_count(l));
            }
        }
        if (j.contains("N_RF")) s.n_rf = number_list<int>(j, "N_RF");
        if (j.contains("U")) s.users = number_list<int>(j, "U");
        s.alpha = number_list<double>(j, "alpha");
        s.power_db = number_list<double>(j, "P_dB");
        s.rate_th = number_list<double>(j, "R_th");
        if (j.contains("L_trained")) {
            const json& t = j.at("L_trained");
            if (t.is_array()) {
                for (const auto& e : t) s.trained.push_back(parse_trained(e));
            } else {
                s.trained.push_back(parse_trained(t));
            }
        }
        if (j.contains("trials")) {
            const json& t = j.at("trials");
            if (!t.is_number_integer() || t.get<long long>() < 1) {
                throw ConfigError("'trials' must be an integer >= 1");
            }
            s.trials = t.get<std::uint64_t>();
        }
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed spec: ") + e.what());
    }
}

json ExperimentSpec::to_json() const {
    json j;
    j["mode"] = std::string(to_string(mode));
    j["scheme"] = std::string(to_string(scheme));
    if (mode == Mode::mu) j["method"] = std::string(beamtrain::to_string(method));
    j["N_t"] = n_t;
    json l = json::array();
    for (const auto& p : paths) {
        if (p.is_fixed()) {
            l.push_back(p.fixed_value());
        } else {
            l.push_back({{"c", p.fraction()}});
        }
    }
    j["L"] = l;
    j["N_RF"] = n_rf;
    j["U"] = users;
    if (!alpha.empty()) j["alpha"] = alpha;
    if (!power_db.empty()) j["P_dB"] = power_db;
    if (!rate_th.empty()) j["R_th"] = rate_th;
    if (!trained.empty()) {
        json t = json::array();
        for (const auto& e : trained) {
            if (e.is_matched()) {
                t.push_back("matched");
            } else {
                t.push_back(*e.beams);
            }
        }
        j["L_trained"] = t;
    }
    j["trials"] = trials;
    j["seed"] = seed;
    return j;
}

std::vector<Threshold> ExperimentSpec::thresholds(int u) const {
    std::vector<Threshold> out;
    if (!alpha.empty()) {
        const std::vector<double> powers = power_db.empty() ? std::vector<double>{0.0} : power_db;
        for (double a : alpha) {
            for (double p : powers) out.push_back({a, db_to_linear(p)});
        }
        return out;
    }
    for (double p : power_db) {
        for (double r : rate_th) {
            const double linear = db_to_linear(p);
            out.push_back({(std::exp2(r) - 1.0) * u / linear, linear});
        }
    }
    return out;
}

void ExperimentSpec::validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    check_minimum(n_t, "N_t", 2);
    check_minimum(n_rf, "N_RF", 1);
    check_minimum(users, "U", 1);

    if (!alpha.empty()) {
        if (!rate_th.empty()) throw ConfigError("give either alpha or (P_dB, R_th), not both");
        for (double a : alpha) {
            if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alpha must be >= 0");
        }
    } else if (power_db.empty() || rate_th.empty()) {
        throw ConfigError("a threshold is required: alpha, or both P_dB and R_th");
    }
    for (double r : rate_th) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("R_th must be >= 0");
    }
    for (double p : power_db) {
        if (!std::isfinite(p)) throw ConfigError("P_dB must be finite");
    }

    if (mode == Mode::su) {
        for (int u : users) {
            if (u != 1) throw ConfigError("single-user mode requires U = 1");
        }
    } else if (scheme == Scheme::rate_variant) {
        throw ConfigError("the rate variant is defined for single-user mode only");
    }

    if (scheme == Scheme::nit_partial) {
        if (trained.empty()) throw ConfigError("nit_partial requires 'L_trained'");
    } else if (!trained.empty()) {
        throw ConfigError("'L_trained' applies to nit_partial only");
    }

    for (int nt : n_t) {
        for (const auto& p : paths) {
            ChannelConfig{nt, p, 1}.validate();
            for (int rf : n_rf) {
                for (int u : users) {
                    if (u > rf) throw ConfigError("U must not exceed N_RF");
                    if (u > nt) throw ConfigError("U must not exceed N_t");
                    for (const auto& t : trained) {
                        if (t.is_matched()) continue;
                        const int lo = mode == Mode::su ? 1 : u;
                        if (*t.beams < lo || *t.beams > nt) {
                            throw ConfigError("L_trained " + std::to_string(*t.beams) +
                                              " outside [" + std::to_string(lo) + ", " +
                                              std::to_string(nt) + "]");
                        }
                    }
                }
            }
        }
    }
}

bool PointSummary::has_flag(std::string_view prefix) const {
    return std::any_of(flags.begin(), flags.end(),
                       [prefix](const std::string& f) { return f.starts_with(prefix); });
}

std::vector<PointKey> enumerate_points(const ExperimentSpec& spec) {
    std::vector<PointKey> out;
    std::uint64_t index = 0;
    const std::vector<TrainedLength> trained =
        spec.trained.empty() ? std::vector<TrainedLength>{TrainedLength::fixed(0)} : spec.trained;
    for (int nt : spec.n_t) {
        for (const auto& p : spec.paths) {
            for (int rf : spec.n_rf) {
                for (int u : spec.users) {
                    for (const auto& th : spec.thresholds(u)) {
                        for (const auto& t : trained) {
                            PointKey key{nt, p, rf, u, th, std::nullopt, index++};
                            if (spec.scheme == Scheme::nit_partial && !t.is_matched()) {
                                key.trained = t.beams;
                            }
                            out.push_back(key);
                        }
                    }
                }
            }
        }
    }
    return out;
}

namespace {

TrialRecord run_trial(const ExperimentSpec& spec, Scheme scheme, const PointKey& key,
                      std::uint64_t trial) {
    const ChannelConfig ch_cfg{key.n_t, key.paths, key.users};
    const ChannelRealization ch = sample_channel(ch_cfg, spec.seed, key.index, trial);
    if (spec.mode == Mode::su) {
        const SuSystemConfig cfg{key.n_rf, key.threshold.alpha, key.threshold.power};
        SuEpisodeResult r;
        switch (scheme) {
            case Scheme::it:
                r = it_su_episode(ch, cfg);
                break;
            case Scheme::rate_variant:
                r = su_rate_episode(ch, cfg);
                break;
            case Scheme::nit_full:
                r = nit_su_full(ch, cfg);
                break;
            case Scheme::nit_partial:
                r = nit_su_partial(ch, cfg, *key.trained);
                break;
        }
        return {r.training_length, r.outage, r.rate};
    }
    MuSystemConfig cfg;
    cfg.n_rf = key.n_rf;
    cfg.users = key.users;
    cfg.alpha_bar = key.threshold.alpha;
    cfg.power = key.threshold.power;
    MuEpisodeResult r;
    switch (scheme) {
        case Scheme::it:
        case Scheme::rate_variant:
            r = it_mu_episode(ch, cfg, spec.method);
            break;
        case Scheme::nit_full:
            r = nit_mu_full(ch, cfg, spec.method);
            break;
        case Scheme::nit_partial:
            r = nit_mu_partial(ch, cfg, *key.trained, spec.method);
            break;
    }
    return {r.training_length, r.outage, r.rate};
}

std::vector<TrialRecord> run_trials(const ExperimentSpec& spec, Scheme scheme, const PointKey& key,
                                    unsigned threads) {
    const std::uint64_t n = spec.trials;
    std::vector<TrialRecord> out(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    constexpr std::uint64_t kChunk = 256;
    const auto workers = static_cast<unsigned>(std::min<std::uint64_t>(threads, (n + kChunk - 1) / kChunk));

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        try {
            for (;;) {
                const std::uint64_t begin = next.fetch_add(kChunk);
                if (begin >= n) return;
                const std::uint64_t end = std::min(n, begin + kChunk);
                for (std::uint64_t t = begin; t < end; ++t) out[t] = run_trial(spec, scheme, key, t);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(n);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Mean and standard error with the 1/n variance, so that for 0/1 samples the
// error is exactly sqrt(p (1 - p) / n).
template <typename F>
MeanSe mean_se(const std::vector<TrialRecord>& trials, F value) {
    const auto n = static_cast<long double>(trials.size());
    long double sum = 0.0L;
    for (const auto& t : trials) sum += value(t);
    const long double mean = sum / n;
    long double sq = 0.0L;
    for (const auto& t : trials) {
        const long double d = value(t) - mean;
        sq += d * d;
    }
    return {static_cast<double>(mean), static_cast<double>(std::sqrt(sq / n / n))};
}

int matched_length(const ExperimentSpec& spec, const PointKey& key, unsigned threads) {
    const auto trials = run_trials(spec, Scheme::it, key, threads);
    const MeanSe len = mean_se(trials, [](const TrialRecord& t) { return t.training_length; });
    const int lo = spec.mode == Mode::su ? 1 : key.users;
    return std::clamp(static_cast<int>(std::lround(len.mean)), lo, key.n_t);
}

void attach_analytic(PointSummary& p, Scheme scheme) {
    const bool length = scheme == Scheme::it || scheme == Scheme::rate_variant;
    const bool outage = length || scheme == Scheme::nit_full;
    if (!outage) return;
    try {
        std::optional<double> len;
        if (length) len = analytic::avg_training_length(p.n_t, p.paths, p.n_rf, p.alpha);
        const double out = analytic::outage_it_su(p.n_t, p.paths, p.n_rf, p.alpha);
        p.analytic_len = len;
        p.analytic_outage = out;
    } catch (const analytic::NumericalValidityError& e) {
        p.flags.push_back(std::string("analytic-invalid:") + e.what());
    }
}

}  // namespace

std::vector<TrialRecord> run_point_trials(const ExperimentSpec& spec, const PointKey& key,
                                          unsigned threads) {
    if (spec.scheme == Scheme::nit_partial && !key.trained) {
        throw ConfigError("partial training length not resolved");
    }
    return run_trials(spec, spec.scheme, key, threads);
}

ExperimentSummary run_experiment(const ExperimentSpec& spec, unsigned threads) {
    spec.validate();
    ExperimentSummary summary;
    for (PointKey key : enumerate_points(spec)) {
        const auto start = std::chrono::steady_clock::now();
        if (spec.scheme == Scheme::nit_partial && !key.trained) {
            key.trained = matched_length(spec, key, threads);
        }
        const auto trials = run_point_trials(spec, key, threads);

        PointSummary p;
        p.mode = spec.mode;
        p.scheme = spec.scheme;
        if (spec.mode == Mode::mu) p.method = spec.method;
        p.n_t = key.n_t;
        p.paths = key.paths.resolve(key.n_t);
        p.n_rf = key.n_rf;
        p.users = key.users;
        p.alpha = key.threshold.alpha;
        p.power = key.threshold.power;
        p.trained = key.trained;
        p.trials = spec.trials;

        const MeanSe len = mean_se(trials, [](const TrialRecord& t) { return t.training_length; });
        const MeanSe out = mean_se(trials, [](const TrialRecord& t) { return t.outage ? 1 : 0; });
        const MeanSe rate = mean_se(trials, [](const TrialRecord& t) { return t.rate; });
        p.mean_len = len.mean;
        p.se_len = len.se;
        p.outage = out.mean;
        p.se_outage = out.se;
        p.mean_rate = rate.mean;
        p.se_rate = rate.se;

        if (key.trained) p.flags.push_back("L_trained=" + std::to_string(*key.trained));
        if (spec.trials == 1) p.flags.push_back("se_undefined");
        const double events = p.outage * static_cast<double>(spec.trials);
        if (events < 100.0) p.flags.push_back("few_outage_events");
        if (spec.mode == Mode::su) attach_analytic(p, spec.scheme);

        p.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        summary.points.push_back(std::move(p));
    }
    return summary;
}

}  // namespace beamtrain
