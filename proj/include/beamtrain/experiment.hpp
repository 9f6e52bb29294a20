#pragma once

// Seeded Monte Carlo experiments over parameter grids, with analytic
// reference values attached to single-user points.
//
// A spec is a JSON object:
//   {
//     "mode": "su" | "mu",
//     "scheme": "it" | "nit_full" | "nit_partial" | "rate_variant",
//     "method": "exhaustive" | "maxmin",          (mu only, default maxmin)
//     "N_t": [..], "L": [3, {"c": 0.1}, ..], "N_RF": [..], "U": [..],
//     "alpha": [..]                 with optional "P_dB": [..] for rates, or
//     "P_dB": [..], "R_th": [..]    converted to alpha once at parse time,
//     "L_trained": [12, "matched"],               (nit_partial only)
//     "trials": 100000, "seed": 1
//   }
// Grid points are the Cartesian product in the order N_t, L, N_RF, U,
// threshold, L_trained. Trial t of point p uses channel substream (seed, p, t),
// so two specs with the same axes see the same channel realizations.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamtrain/channel_model.hpp"
#include "beamtrain/mu_schemes.hpp"

namespace beamtrain {

enum class Mode { su, mu };
enum class Scheme { it, nit_full, nit_partial, rate_variant };

std::string_view to_string(Mode m);
std::string_view to_string(Scheme s);
Mode parse_mode(std::string_view name);
Scheme parse_scheme(std::string_view name);

// One threshold setting: alpha (SU) or alpha_bar (MU) plus the linear power
// used for rates.
struct Threshold {
    double alpha = 1.0;
    double power = 1.0;
};

// A fixed partial-training length, or "matched": the rounded mean training
// length of the interleaved scheme at the same point and seeds.
struct TrainedLength {
    std::optional<int> beams;  // empty means matched

    static TrainedLength matched() { return {}; }
    static TrainedLength fixed(int n) { return {n}; }
    bool is_matched() const { return !beams.has_value(); }
};

struct ExperimentSpec {
    Mode mode = Mode::su;
    Scheme scheme = Scheme::it;
    AssignmentMethod method = AssignmentMethod::maxmin;
    std::vector<int> n_t;
    std::vector<PathCount> paths;
    std::vector<int> n_rf{1};
    std::vector<int> users{1};
    // Exactly one of alpha or (power_db with rate_th) drives the threshold.
    std::vector<double> alpha;
    std::vector<double> power_db;
    std::vector<double> rate_th;
    std::vector<TrainedLength> trained;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;

    static ExperimentSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    // Threshold settings in grid order, for a given user count.
    std::vector<Threshold> thresholds(int users) const;

    // Throws ConfigError for any invalid combination (checked for every
    // point before a single trial runs).
    void validate() const;
};

struct PointSummary {
    Mode mode = Mode::su;
    Scheme scheme = Scheme::it;
    std::optional<AssignmentMethod> method;  // mu only
    int n_t = 0;
    int paths = 0;
    int n_rf = 0;
    int users = 1;
    double alpha = 0.0;  // alpha (su) or alpha_bar (mu)
    double power = 1.0;
    std::optional<int> trained;
    std::uint64_t trials = 0;
    double mean_len = 0.0;
    double se_len = 0.0;
    double outage = 0.0;
    double se_outage = 0.0;
    double mean_rate = 0.0;
    double se_rate = 0.0;
    std::optional<double> analytic_len;
    std::optional<double> analytic_outage;
    std::vector<std::string> flags;
    double wall_time_s = 0.0;  // not part of emitted output unless requested

    bool has_flag(std::string_view prefix) const;
    friend bool operator==(const PointSummary&, const PointSummary&) = default;
};

struct ExperimentSummary {
    std::vector<PointSummary> points;

    friend bool operator==(const ExperimentSummary&, const ExperimentSummary&) = default;
};

// Runs every grid point. `threads` only changes speed: per-trial results are
// reduced in trial order.
ExperimentSummary run_experiment(const ExperimentSpec& spec, unsigned threads = 1);

// Per-trial values of one point, for paired comparisons across schemes.
struct TrialRecord {
    int training_length = 0;
    bool outage = false;
    double rate = 0.0;
};

struct PointKey {
    int n_t = 0;
    PathCount paths;
    int n_rf = 1;
    int users = 1;
    Threshold threshold;
    std::optional<int> trained;
    std::uint64_t index = 0;  // substream point index
};

std::vector<PointKey> enumerate_points(const ExperimentSpec& spec);

// Runs the experiment's scheme at one point and returns every trial. A matched
// trained length must already be resolved into key.trained.
std::vector<TrialRecord> run_point_trials(const ExperimentSpec& spec, const PointKey& key,
                                          unsigned threads = 1);

// Simulation versus closed form, one row per available quantity.
struct ComparisonRow {
    int n_t = 0;
    int paths = 0;
    int n_rf = 0;
    double alpha = 0.0;
    std::string quantity;  // "mean_len" or "outage"
    double simulated = 0.0;
    double standard_error = 0.0;
    std::optional<double> analytic;
    std::optional<double> abs_z;
    std::string flag;  // "", "z>3" or "analytic-invalid:<reason>"
};

// SU specs only (ConfigError otherwise). An empty grid yields an empty table.
std::vector<ComparisonRow> compare_report(const ExperimentSpec& spec, unsigned threads = 1);

enum class OutputFormat { csv, json };
OutputFormat parse_format(std::string_view name);

inline constexpr std::string_view kCsvHeader =
    "mode,scheme,method,N_t,L,N_RF,U,alpha,trials,mean_len,se_len,outage,se_outage,"
    "mean_rate,se_rate,analytic_len,analytic_outage,flags";

// Round-trip-safe rendering with 17 significant digits, '.' as the
// decimal point regardless of locale.
std::string format_number(double v);

void write_summary(std::ostream& os, const ExperimentSummary& s, OutputFormat f,
                   bool include_timing = false);
void write_comparison(std::ostream& os, const std::vector<ComparisonRow>& rows, OutputFormat f);

// Writes to `path`, or stdout for "-" / empty. Throws std::runtime_error when
// the file cannot be opened.
void emit(const ExperimentSummary& s, OutputFormat f, const std::string& path,
          bool include_timing = false);

// Inverse of the JSON form of write_summary.
ExperimentSummary summary_from_json(const nlohmann::json& j);

}  // namespace beamtrain
