#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>

#include "beamtrain/experiment.hpp"

namespace beamtrain {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

OutputFormat parse_format(std::string_view name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "json") return OutputFormat::json;
    throw ConfigError("unknown output format '" + std::string(name) + "'");
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string join_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

std::vector<std::string> split_flags(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
        const std::size_t end = s.find(';', start);
        out.push_back(s.substr(start, end == std::string::npos ? std::string::npos : end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

std::string optional_number(const std::optional<double>& v, const char* missing) {
    return v ? format_number(*v) : std::string(missing);
}

std::string json_number(double v) { return std::isfinite(v) ? format_number(v) : "null"; }

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

std::string method_name(const PointSummary& p) {
    return p.method ? std::string(to_string(*p.method)) : std::string();
}

}  // namespace

namespace {

void write_summary_body(std::ostringstream& os, const ExperimentSummary& s, OutputFormat f,
                        bool include_timing) {
    if (f == OutputFormat::csv) {
        os << kCsvHeader;
        if (include_timing) os << ",wall_time_s";
        os << '\n';
        for (const auto& p : s.points) {
            os << to_string(p.mode) << ',' << to_string(p.scheme) << ',' << method_name(p) << ','
               << p.n_t << ',' << p.paths << ',' << p.n_rf << ',' << p.users << ','
               << format_number(p.alpha) << ',' << p.trials << ',' << format_number(p.mean_len)
               << ',' << format_number(p.se_len) << ',' << format_number(p.outage) << ','
               << format_number(p.se_outage) << ',' << format_number(p.mean_rate) << ','
               << format_number(p.se_rate) << ',' << optional_number(p.analytic_len, "") << ','
               << optional_number(p.analytic_outage, "") << ','
               << csv_field(join_flags(p.flags));
            if (include_timing) os << ',' << format_number(p.wall_time_s);
            os << '\n';
        }
        return;
    }
    os << "[";
    for (std::size_t k = 0; k < s.points.size(); ++k) {
        const auto& p = s.points[k];
        os << (k == 0 ? "\n" : ",\n") << "  {"
           << "\"mode\": " << json_string(to_string(p.mode))
           << ", \"scheme\": " << json_string(to_string(p.scheme))
           << ", \"method\": " << (p.method ? json_string(to_string(*p.method)) : "null")
           << ", \"N_t\": " << p.n_t << ", \"L\": " << p.paths << ", \"N_RF\": " << p.n_rf
           << ", \"U\": " << p.users << ", \"alpha\": " << json_number(p.alpha)
           << ", \"trials\": " << p.trials << ", \"mean_len\": " << json_number(p.mean_len)
           << ", \"se_len\": " << json_number(p.se_len)
           << ", \"outage\": " << json_number(p.outage)
           << ", \"se_outage\": " << json_number(p.se_outage)
           << ", \"mean_rate\": " << json_number(p.mean_rate)
           << ", \"se_rate\": " << json_number(p.se_rate)
           << ", \"analytic_len\": " << optional_number(p.analytic_len, "null")
           << ", \"analytic_outage\": " << optional_number(p.analytic_outage, "null")
           << ", \"flags\": " << json_string(join_flags(p.flags))
           << ", \"P\": " << json_number(p.power)
           << ", \"L_trained\": " << (p.trained ? std::to_string(*p.trained) : "null");
        if (include_timing) os << ", \"wall_time_s\": " << json_number(p.wall_time_s);
        os << "}";
    }
    os << (s.points.empty() ? "]\n" : "\n]\n");
}

}  // namespace

void write_summary(std::ostream& out, const ExperimentSummary& s, OutputFormat f,
                   bool include_timing) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    write_summary_body(os, s, f, include_timing);
    out << os.str();
}

ExperimentSummary summary_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("summary JSON must be an array");
    ExperimentSummary s;
    for (const auto& r : j) {
        PointSummary p;
        p.mode = parse_mode(r.at("mode").get<std::string>());
        p.scheme = parse_scheme(r.at("scheme").get<std::string>());
        if (!r.at("method").is_null()) {
            p.method = parse_assignment_method(r.at("method").get<std::string>());
        }
        p.n_t = r.at("N_t").get<int>();
        p.paths = r.at("L").get<int>();
        p.n_rf = r.at("N_RF").get<int>();
        p.users = r.at("U").get<int>();
        p.alpha = r.at("alpha").get<double>();
        p.trials = r.at("trials").get<std::uint64_t>();
        p.mean_len = r.at("mean_len").get<double>();
        p.se_len = r.at("se_len").get<double>();
        p.outage = r.at("outage").get<double>();
        p.se_outage = r.at("se_outage").get<double>();
        p.mean_rate = r.at("mean_rate").get<double>();
        p.se_rate = r.at("se_rate").get<double>();
        if (!r.at("analytic_len").is_null()) p.analytic_len = r.at("analytic_len").get<double>();
        if (!r.at("analytic_outage").is_null()) {
            p.analytic_outage = r.at("analytic_outage").get<double>();
        }
        p.flags = split_flags(r.at("flags").get<std::string>());
        p.power = r.value("P", 1.0);
        if (r.contains("L_trained") && !r.at("L_trained").is_null()) {
            p.trained = r.at("L_trained").get<int>();
        }
        p.wall_time_s = r.value("wall_time_s", 0.0);
        s.points.push_back(std::move(p));
    }
    return s;
}

void emit(const ExperimentSummary& s, OutputFormat f, const std::string& path,
          bool include_timing) {
    if (path.empty() || path == "-") {
        write_summary(std::cout, s, f, include_timing);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_summary(out, s, f, include_timing);
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<ComparisonRow> compare_report(const ExperimentSpec& spec, unsigned threads) {
    if (spec.mode != Mode::su) {
        throw ConfigError("comparison needs closed forms, which exist for single-user mode only");
    }
    const ExperimentSummary summary = run_experiment(spec, threads);
    std::vector<ComparisonRow> rows;
    for (const auto& p : summary.points) {
        auto add = [&](const char* quantity, double sim, double se, std::optional<double> an) {
            ComparisonRow row{p.n_t, p.paths, p.n_rf, p.alpha, quantity, sim, se, an,
                              std::nullopt, ""};
            if (an) {
                const double diff = std::fabs(sim - *an);
                const double z = se > 0.0 ? diff / se
                                 : diff <= 1e-12 ? 0.0
                                                 : std::numeric_limits<double>::infinity();
                row.abs_z = z;
                if (z > 3.0) row.flag = "z>3";
            } else {
                for (const auto& f : p.flags) {
                    if (f.starts_with("analytic-invalid")) row.flag = f;
                }
            }
            rows.push_back(std::move(row));
        };
        const bool has_len = p.scheme == Scheme::it || p.scheme == Scheme::rate_variant;
        const bool has_out = has_len || p.scheme == Scheme::nit_full;
        if (has_len) add("mean_len", p.mean_len, p.se_len, p.analytic_len);
        if (has_out) add("outage", p.outage, p.se_outage, p.analytic_outage);
    }
    return rows;
}

void write_comparison(std::ostream& out, const std::vector<ComparisonRow>& rows, OutputFormat f) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    if (f == OutputFormat::csv) {
        os << "N_t,L,N_RF,alpha,quantity,simulated,se,analytic,abs_z,flag\n";
        for (const auto& r : rows) {
            os << r.n_t << ',' << r.paths << ',' << r.n_rf << ',' << format_number(r.alpha) << ','
               << r.quantity << ',' << format_number(r.simulated) << ','
               << format_number(r.standard_error) << ',' << optional_number(r.analytic, "") << ','
               << optional_number(r.abs_z, "") << ',' << csv_field(r.flag) << '\n';
        }
        out << os.str();
        return;
    }
    os << "[";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        os << (k == 0 ? "\n" : ",\n") << "  {\"N_t\": " << r.n_t << ", \"L\": " << r.paths
           << ", \"N_RF\": " << r.n_rf << ", \"alpha\": " << json_number(r.alpha)
           << ", \"quantity\": " << json_string(r.quantity)
           << ", \"simulated\": " << json_number(r.simulated)
           << ", \"se\": " << json_number(r.standard_error) << ", \"analytic\": "
           << (r.analytic ? json_number(*r.analytic) : "null")
           << ", \"abs_z\": " << (r.abs_z ? json_number(*r.abs_z) : "null")
           << ", \"flag\": " << json_string(r.flag) << "}";
    }
    os << (rows.empty() ? "]\n" : "\n]\n");
    out << os.str();
}

}  // namespace beamtrain
