// Command-line front end: run experiment specs, evaluate closed forms,
// compare the two, and dump channel draws.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamtrain/analytic.hpp"
#include "beamtrain/channel_model.hpp"
#include "beamtrain/experiment.hpp"

namespace bt = beamtrain;

namespace {

struct CommonOptions {
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::string out = "-";
    std::string format = "csv";
    unsigned threads = 1;
    bool timing = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_spec) {
    auto* spec = cmd->add_option("--spec", o.spec_path, "JSON experiment spec")->check(CLI::ExistingFile);
    if (needs_spec) spec->required();
    cmd->add_option("--seed", o.seed, "override the experiment seed");
    cmd->add_option("--trials", o.trials, "override the experiment trial count")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "output path, '-' for stdout");
    cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

bt::ExperimentSpec load_spec(const CommonOptions& o) {
    std::ifstream in(o.spec_path);
    if (!in) throw bt::ConfigError("cannot read spec '" + o.spec_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw bt::ConfigError("spec '" + o.spec_path + "' is not valid JSON: " + e.what());
    }
    auto spec = bt::ExperimentSpec::from_json(j);
    if (o.seed) spec.seed = *o.seed;
    if (o.trials) spec.trials = *o.trials;
    return spec;
}

template <typename Writer>
void write_output(const std::string& path, Writer&& writer) {
    if (path.empty() || path == "-") {
        writer(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    writer(out);
    if (!out.flush()) throw std::runtime_error("failed writing '" + path + "'");
}

// "40:20:160" expands to 40,60,...,160; anything else is a single integer.
std::vector<int> expand_ints(const std::vector<std::string>& items) {
    std::vector<int> out;
    for (const auto& item : items) {
        const auto first = item.find(':');
        if (first == std::string::npos) {
            out.push_back(std::stoi(item));
            continue;
        }
        const auto second = item.find(':', first + 1);
        if (second == std::string::npos) throw bt::ConfigError("range must be start:step:stop");
        const int start = std::stoi(item.substr(0, first));
        const int step = std::stoi(item.substr(first + 1, second - first - 1));
        const int stop = std::stoi(item.substr(second + 1));
        if (step <= 0) throw bt::ConfigError("range step must be positive");
        for (int v = start; v <= stop; v += step) out.push_back(v);
    }
    return out;
}

// "3" is a fixed path count; "0.1Nt" or "c=0.1" scales with N_t.
bt::PathCount parse_paths(const std::string& s) {
    if (s.starts_with("c=")) return bt::PathCount::linear_in_nt(std::stod(s.substr(2)));
    if (s.ends_with("Nt")) return bt::PathCount::linear_in_nt(std::stod(s.substr(0, s.size() - 2)));
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw bt::ConfigError("cannot parse path count '" + s + "'");
    return bt::PathCount::fixed(v);
}

int run_simulate(const CommonOptions& o) {
    const auto spec = load_spec(o);
    const auto summary = bt::run_experiment(spec, o.threads);
    bt::emit(summary, bt::parse_format(o.format), o.out, o.timing);
    return 0;
}

int run_compare(const CommonOptions& o) {
    const auto spec = load_spec(o);
    const auto rows = bt::compare_report(spec, o.threads);
    write_output(o.out, [&](std::ostream& os) {
        bt::write_comparison(os, rows, bt::parse_format(o.format));
    });
    return 0;
}

struct AnalyticOptions {
    std::vector<std::string> n_t;
    std::vector<std::string> paths;
    std::vector<std::string> n_rf;
    std::vector<double> alpha;
};

int run_analytic(const CommonOptions& o, const AnalyticOptions& a) {
    std::vector<int> n_t;
    std::vector<bt::PathCount> paths;
    std::vector<int> n_rf;
    std::vector<double> alpha;
    if (!o.spec_path.empty()) {
        const auto spec = load_spec(o);
        if (spec.mode != bt::Mode::su) throw bt::ConfigError("closed forms exist for su mode only");
        n_t = spec.n_t;
        paths = spec.paths;
        n_rf = spec.n_rf;
        for (const auto& th : spec.thresholds(1)) alpha.push_back(th.alpha);
    } else {
        n_t = expand_ints(a.n_t);
        for (const auto& p : a.paths) paths.push_back(parse_paths(p));
        n_rf = expand_ints(a.n_rf);
        alpha = a.alpha;
        if (n_t.empty() || paths.empty() || alpha.empty()) {
            throw bt::ConfigError("analytic needs --spec or --nt, --L and --alpha");
        }
        if (n_rf.empty()) n_rf = {1};
    }

    const bool json = bt::parse_format(o.format) == bt::OutputFormat::json;
    std::ostringstream body;
    if (!json) body << "N_t,L,N_RF,alpha,mean_len,asymptotic_len,outage,outage_single_rf,flags\n";
    nlohmann::json records = nlohmann::json::array();
    for (int nt : n_t) {
        for (const auto& pc : paths) {
            const int l = pc.resolve(nt);
            for (int rf : n_rf) {
                for (double al : alpha) {
                    std::string flag;
                    std::string len = "";
                    std::string out = "";
                    try {
                        len = bt::format_number(bt::analytic::avg_training_length(nt, l, rf, al));
                        out = bt::format_number(bt::analytic::outage_it_su(nt, l, rf, al));
                    } catch (const bt::analytic::NumericalValidityError& e) {
                        flag = std::string("analytic-invalid:") + e.what();
                    }
                    const std::string asym =
                        bt::format_number(bt::analytic::avg_training_length_asymptotic(nt, l));
                    const std::string single =
                        bt::format_number(bt::analytic::outage_single_rf(nt, l, al));
                    if (json) {
                        body << (records.empty() ? "[\n" : ",\n") << "  {\"N_t\": " << nt
                             << ", \"L\": " << l << ", \"N_RF\": " << rf
                             << ", \"alpha\": " << bt::format_number(al)
                             << ", \"mean_len\": " << (len.empty() ? "null" : len)
                             << ", \"asymptotic_len\": " << asym
                             << ", \"outage\": " << (out.empty() ? "null" : out)
                             << ", \"outage_single_rf\": " << single
                             << ", \"flags\": " << nlohmann::json(flag).dump() << "}";
                        records.push_back(nt);
                    } else {
                        body << nt << ',' << l << ',' << rf << ',' << bt::format_number(al) << ','
                             << len << ',' << asym << ',' << out << ',' << single << ','
                             << (flag.find(',') == std::string::npos ? flag : '"' + flag + '"')
                             << '\n';
                    }
                }
            }
        }
    }
    if (json) body << (records.empty() ? "[]\n" : "\n]\n");
    write_output(o.out, [&](std::ostream& os) { os << body.str(); });
    return 0;
}

struct SweepOptions {
    std::string mode = "su";
    std::string scheme = "it";
    std::string method = "maxmin";
    std::vector<std::string> n_t;
    std::vector<std::string> paths;
    std::vector<std::string> n_rf{"1"};
    std::vector<std::string> users{"1"};
    std::vector<double> alpha;
    std::vector<double> power_db;
    std::vector<double> rate_th;
    std::vector<std::string> trained;
};

int run_sweep(const CommonOptions& o, const SweepOptions& s) {
    nlohmann::json j;
    j["mode"] = s.mode;
    j["scheme"] = s.scheme;
    j["method"] = s.method;
    j["N_t"] = expand_ints(s.n_t);
    nlohmann::json l = nlohmann::json::array();
    for (const auto& p : s.paths) {
        const auto pc = parse_paths(p);
        if (pc.is_fixed()) {
            l.push_back(pc.fixed_value());
        } else {
            l.push_back({{"c", pc.fraction()}});
        }
    }
    j["L"] = l;
    j["N_RF"] = expand_ints(s.n_rf);
    j["U"] = expand_ints(s.users);
    if (!s.alpha.empty()) j["alpha"] = s.alpha;
    if (!s.power_db.empty()) j["P_dB"] = s.power_db;
    if (!s.rate_th.empty()) j["R_th"] = s.rate_th;
    if (!s.trained.empty()) {
        nlohmann::json t = nlohmann::json::array();
        for (const auto& e : s.trained) {
            if (e == "matched") {
                t.push_back(e);
            } else {
                t.push_back(std::stoi(e));
            }
        }
        j["L_trained"] = t;
    }
    j["trials"] = o.trials.value_or(1000);
    j["seed"] = o.seed.value_or(1);
    const auto spec = bt::ExperimentSpec::from_json(j);
    const auto summary = bt::run_experiment(spec, o.threads);
    bt::emit(summary, bt::parse_format(o.format), o.out, o.timing);
    return 0;
}

struct DumpOptions {
    int n_t = 16;
    std::string paths = "3";
    int users = 1;
    std::uint64_t seed = 1;
    std::uint64_t point = 0;
    std::uint64_t trial = 0;
    std::string out = "-";
};

int run_dump(const DumpOptions& d) {
    const bt::ChannelConfig cfg{d.n_t, parse_paths(d.paths), d.users};
    const auto ch = bt::sample_channel(cfg, d.seed, d.point, d.trial);
    const std::string text = bt::to_json(ch).dump(2) + "\n";
    write_output(d.out, [&](std::ostream& os) { os << text; });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interleaved beam training simulator and closed-form calculator"};
    app.require_subcommand(1);

    CommonOptions sim_opts;
    auto* simulate = app.add_subcommand("simulate", "run an experiment spec");
    add_common(simulate, sim_opts, true);
    simulate->add_flag("--timing", sim_opts.timing, "append per-point wall time");

    CommonOptions an_opts;
    AnalyticOptions an;
    auto* analytic = app.add_subcommand("analytic", "evaluate closed forms at grid points");
    add_common(analytic, an_opts, false);
    analytic->add_option("--nt", an.n_t, "antenna counts (list or start:step:stop)")->delimiter(',');
    analytic->add_option("--L", an.paths, "path counts, e.g. 3 or 0.1Nt")->delimiter(',');
    analytic->add_option("--nrf", an.n_rf, "RF chain counts")->delimiter(',');
    analytic->add_option("--alpha", an.alpha, "target normalized SNR values")->delimiter(',');

    CommonOptions cmp_opts;
    auto* compare = app.add_subcommand("compare", "simulation against closed forms");
    add_common(compare, cmp_opts, true);

    CommonOptions sw_opts;
    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "simulate a grid given on the command line");
    add_common(sweep, sw_opts, false);
    sweep->add_flag("--timing", sw_opts.timing, "append per-point wall time");
    sweep->add_option("--mode", sw.mode, "su or mu");
    sweep->add_option("--scheme", sw.scheme, "it, nit_full, nit_partial or rate_variant");
    sweep->add_option("--method", sw.method, "exhaustive or maxmin (mu)");
    sweep->add_option("--nt", sw.n_t, "antenna counts")->delimiter(',')->required();
    sweep->add_option("--L", sw.paths, "path counts, e.g. 3 or 0.1Nt")->delimiter(',')->required();
    sweep->add_option("--nrf", sw.n_rf, "RF chain counts")->delimiter(',');
    sweep->add_option("--users", sw.users, "user counts")->delimiter(',');
    sweep->add_option("--alpha", sw.alpha, "alpha or alpha_bar values")->delimiter(',');
    sweep->add_option("--pdb", sw.power_db, "transmit power in dB")->delimiter(',');
    sweep->add_option("--rth", sw.rate_th, "target rates in bits/s/Hz")->delimiter(',');
    sweep->add_option("--trained", sw.trained, "partial training lengths or 'matched'")
        ->delimiter(',');

    DumpOptions dump;
    auto* dump_cmd = app.add_subcommand("dump-channel", "print one channel draw as JSON");
    dump_cmd->add_option("--nt", dump.n_t, "antenna count");
    dump_cmd->add_option("--L", dump.paths, "path count, e.g. 3 or 0.1Nt");
    dump_cmd->add_option("--users", dump.users, "user count");
    dump_cmd->add_option("--seed", dump.seed, "run seed");
    dump_cmd->add_option("--point", dump.point, "sweep point index");
    dump_cmd->add_option("--trial", dump.trial, "trial index");
    dump_cmd->add_option("--out", dump.out, "output path, '-' for stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return run_simulate(sim_opts);
        if (*analytic) return run_analytic(an_opts, an);
        if (*compare) return run_compare(cmp_opts);
        if (*sweep) return run_sweep(sw_opts, sw);
        if (*dump_cmd) return run_dump(dump);
    } catch (const bt::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
