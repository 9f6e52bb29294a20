// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Each criterion also checks its own runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "beamtrain/analytic.hpp"
#include "beamtrain/experiment.hpp"
#include "beamtrain/special_math.hpp"
#include "beamtrain/su_schemes.hpp"
#include "oracles/assignment.hpp"
#include "oracles/exact.hpp"
#include "oracles/instances.hpp"
#include "oracles/quadrature.hpp"

using namespace beamtrain;
namespace an = beamtrain::analytic;
namespace sm = beamtrain::special;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;  // 0 means no budget
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        num += (x[k] - mx) * (y[k] - my);
        den += (x[k] - mx) * (x[k] - mx);
    }
    return num / den;
}

ExperimentSummary simulate(const json& j) { return run_experiment(ExperimentSpec::from_json(j), 0); }

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

Outcome length_slopes() {
    std::vector<double> nts;
    for (int n = 40; n <= 160; n += 20) nts.push_back(n);
    const std::vector<std::pair<int, double>> targets{{1, 0.50}, {3, 0.25}, {6, 0.14}};
    Outcome o{true, ""};
    for (auto [paths, target] : targets) {
        std::vector<double> len;
        for (double n : nts) len.push_back(an::avg_training_length(static_cast<int>(n), paths, 1, 4.0));
        const double s = fitted_slope(nts, len);
        o.pass = o.pass && std::fabs(s - target) <= 0.02;
        o.detail += fmt("L=%d slope %.4f (target %.2f) ", paths, s, target);
    }
    return o;
}

Outcome pmf_vs_monte_carlo() {
    struct Case {
        int n_t, paths, n_rf;
        double alpha;
    };
    Outcome o{true, ""};
    for (const Case c : {Case{32, 3, 1, 4.0}, Case{32, 4, 2, 4.0}, Case{64, 6, 3, 8.0}}) {
        const auto s = simulate({{"N_t", {c.n_t}}, {"L", {c.paths}}, {"N_RF", {c.n_rf}},
                                 {"alpha", {c.alpha}}, {"trials", 100000}, {"seed", 101}});
        const auto& p = s.points.at(0);
        const double exact = an::avg_training_length(c.n_t, c.paths, c.n_rf, c.alpha);
        const double z = std::fabs(p.mean_len - exact) / p.se_len;
        o.pass = o.pass && z <= 3.0;
        o.detail += fmt("(%d,%d,%d,%g) MC %.4f exact %.4f z=%.2f; ", c.n_t, c.paths, c.n_rf, c.alpha,
                        p.mean_len, exact, z);
    }
    return o;
}

Outcome hand_point() {
    const double exact = an::avg_training_length(4, 1, 1, 1.0);
    const auto s = simulate({{"N_t", {4}}, {"L", {1}}, {"N_RF", {1}}, {"alpha", {1.0}},
                             {"trials", 1000000}, {"seed", 303}});
    const auto& p = s.points.at(0);
    const double z = std::fabs(p.mean_len - exact) / p.se_len;
    return {std::fabs(exact - 2.8318) <= 1e-3 && z <= 3.0,
            fmt("analytic %.7f, MC %.5f (se %.5f, z=%.2f)", exact, p.mean_len, p.se_len, z)};
}

Outcome iid_bounds() {
    const double full_rf = an::avg_training_length(64, 64, 64, 4.0);
    const double single = an::avg_training_length(64, 64, 1, 4.0);
    const double closed = std::exp(4.0) * (1 - std::pow(1 - std::exp(-4.0), 64));
    return {full_rf <= 5.0 && std::fabs(single - closed) <= 1e-9,
            fmt("N_RF=L length %.6f <= 5; N_RF=1 length %.12f vs %.12f", full_rf, single, closed)};
}

Outcome su_outage_equivalence() {
    const ChannelConfig ch_cfg{32, PathCount::fixed(3), 1};
    const auto cfg = SuSystemConfig::from_alpha(2, 4.0);
    int mismatches = 0, outages = 0;
    for (int t = 0; t < 100000; ++t) {
        const auto ch = sample_channel(ch_cfg, 505, 0, t);
        const bool it = it_su_episode(ch, cfg).outage;
        mismatches += it != nit_su_full(ch, cfg).outage;
        outages += it;
    }
    return {mismatches == 0, fmt("%d mismatches over 100000 realizations (%d outages)", mismatches, outages)};
}

Outcome outage_closed_form() {
    const double closed = an::outage_it_su(32, 4, 2, 4.0);
    const double quad = oracle::integrate([](double x) { return sm::ordered_partial_sum_pdf(x, 2, 4); }, 0.0,
                                          4.0 / 32);
    const auto s = simulate({{"N_t", {32}}, {"L", {4}}, {"N_RF", {2}}, {"alpha", {4.0}},
                             {"trials", 1000000}, {"seed", 606}});
    const auto& p = s.points.at(0);
    const double z = std::fabs(p.outage - closed) / p.se_outage;
    double worst = 0.0;
    int lattice = 0;
    for (int n_t : {16, 32, 64, 128, 256}) {
        for (int paths : {1, 2, 4, 8}) {
            const double a = an::outage_it_su(n_t, paths, 1, 4.0);
            worst = std::max(worst, std::fabs(a - std::pow(-std::expm1(-4.0 * paths / n_t), paths)));
            ++lattice;
        }
    }
    return {std::fabs(closed - quad) <= 1e-6 && z <= 3.0 && worst <= 1e-10 && lattice == 20,
            fmt("closed %.9f quad %.9f; MC %.6f (z=%.2f); single-RF lattice max dev %.2e over %d points",
                closed, quad, p.outage, z, worst, lattice)};
}

json mu_spec(const char* scheme, const char* method, std::vector<int> n_t, json paths, double alpha_bar,
             int trials, std::uint64_t seed) {
    return {{"mode", "mu"}, {"scheme", scheme}, {"method", method}, {"N_t", n_t}, {"L", paths},
            {"N_RF", {3}},  {"U", {3}},         {"alpha", {alpha_bar}}, {"trials", trials},
            {"seed", seed}};
}

Outcome mu_plateau() {
    const auto s = simulate(mu_spec("it", "maxmin", {80, 120, 160, 200}, json::array({{{"c", 0.1}}}), 6.0,
                                    10000, 707));
    std::string trace;
    for (const auto& p : s.points) trace += fmt("%d:%.2f ", p.n_t, p.mean_len);
    const double last = s.points.back().mean_len;
    return {std::fabs(last - 23.9) <= 2.0, "mean length " + trace + "(target 23.9 +- 2.0 at N_t=200)"};
}

Outcome mu_slopes() {
    Outcome o{true, ""};
    const std::vector<std::pair<int, double>> targets{{1, 0.75}, {3, 0.38}};
    for (auto [paths, target] : targets) {
        const auto s = simulate(mu_spec("it", "maxmin", {80, 120, 160, 200}, json::array({paths}), 6.0, 10000, 808));
        std::vector<double> x, y;
        for (const auto& p : s.points) {
            x.push_back(p.n_t);
            y.push_back(p.mean_len);
        }
        const double sl = fitted_slope(x, y);
        o.pass = o.pass && std::fabs(sl - target) <= 0.05;
        o.detail += fmt("L=%d slope %.4f (target %.2f) ", paths, sl, target);
    }
    return o;
}

Outcome mu_outage() {
    // Operating point: N_t = 48, L = 3, U = N_RF = 3, alpha_bar = 12.
    const int n_t = 48, trials = 10000;
    const ChannelConfig ch_cfg{n_t, PathCount::fixed(3), 3};
    const auto cfg = MuSystemConfig::from_alpha(3, 3, 12.0);
    int mismatches = 0;
    for (int t = 0; t < trials; ++t) {
        const auto ch = sample_channel(ch_cfg, 909, 0, t);
        mismatches += it_mu_episode(ch, cfg, AssignmentMethod::exhaustive).outage !=
                      nit_mu_full(ch, cfg, AssignmentMethod::exhaustive).outage;
    }
    const auto ex = simulate(mu_spec("it", "exhaustive", {n_t}, json::array({3}), 12.0, trials, 909)).points.at(0);
    const auto mm = simulate(mu_spec("it", "maxmin", {n_t}, json::array({3}), 12.0, trials, 909)).points.at(0);
    auto partial_json = mu_spec("nit_partial", "exhaustive", {n_t}, json::array({3}), 12.0, trials, 909);
    partial_json["L_trained"] = {"matched"};
    const auto part = simulate(partial_json).points.at(0);

    const double margin = part.outage - ex.outage;
    const double se = combined(part.se_outage, ex.se_outage);
    const double gap = (mm.outage - ex.outage) / ex.outage;
    const bool pass = mismatches == 0 && margin > 3 * se && mm.outage >= ex.outage && gap <= 0.10;
    return {pass, fmt("%d mismatches; IT %.4f, partial(L_trained=%d) %.4f, margin %.4f > 3se %.4f; "
                      "max-min %.4f, relative gap %.3f",
                      mismatches, ex.outage, part.trained.value_or(-1), part.outage, margin, 3 * se, mm.outage,
                      gap)};
}

Outcome maxmin_optimality() {
    std::mt19937_64 gen(1010);
    int instances = 0, stage1 = 0, full = 0, both_none = 0;
    while (instances < 10000) {
        const int users = 1 + instances % 3;
        const int pool = users + static_cast<int>(gen() % (9 - users));
        auto inst = oracle::random_instance(gen, users, pool);
        const auto got = maxmin_assignment(inst.known, inst.channel, MuSystemConfig::from_alpha(3, users, 1.0));
        const auto ref = oracle::best_sorted_gains(inst.pool_gains);
        ++instances;
        if (!got && !ref) {
            ++stage1;
            ++full;
            ++both_none;
            continue;
        }
        if (!got || !ref) continue;
        std::vector<double> mine;
        for (int u = 0; u < users; ++u) mine.push_back(std::abs(inst.channel.gain(u, got->assignment.beams[u])));
        std::sort(mine.begin(), mine.end());
        stage1 += mine.front() == ref->front();
        full += mine == *ref;
    }
    return {stage1 == instances && full == instances,
            fmt("bottleneck exact on %d/%d, full vector on %d/%d (%d without any matching)", stage1, instances,
                full, instances, both_none)};
}

Outcome zf_contract() {
    std::mt19937_64 gen(1111);
    int feasible = 0, good = 0;
    double worst_off = 0.0, worst_diag = 0.0;
    while (feasible < 10000) {
        const int users = 1 + feasible % 3;
        auto inst = oracle::random_instance(gen, users, 8);
        const auto found = maxmin_assignment(inst.known, inst.channel, MuSystemConfig::from_alpha(3, users, 1.0));
        if (!found || !check_feasible(found->assignment, inst.channel)) continue;
        ++feasible;
        const auto zf = zf_precoder(found->assignment, inst.channel);
        const Eigen::MatrixXcd prod = effective_channel_matrix(found->assignment, inst.channel) * zf.baseband;
        double off = 0.0, diag = 0.0;
        for (int r = 0; r < users; ++r) {
            for (int c = 0; c < users; ++c) {
                if (r == c) {
                    diag = std::max(diag, std::abs(prod(r, c) - zf.lambda) / zf.lambda);
                } else {
                    off = std::max(off, std::abs(prod(r, c)) / zf.lambda);
                }
            }
        }
        worst_off = std::max(worst_off, off);
        worst_diag = std::max(worst_diag, diag);
        good += off <= 1e-9 && diag <= 1e-9;
    }
    return {good == feasible,
            fmt("%d/%d instances; worst off-diagonal %.2e lambda, worst diagonal error %.2e", good, feasible,
                worst_off, worst_diag)};
}

Outcome special_identities() {
    double worst_gamma = 0.0;
    for (int s = 1; s <= 20; ++s) {
        for (int step = 0; step <= 500; ++step) {
            const double x = 0.1 * step;
            const double full = static_cast<double>(sm::factorial(s - 1));
            worst_gamma = std::max(
                worst_gamma, std::fabs(sm::lower_inc_gamma_int(s, x) + sm::upper_inc_gamma_int(s, x) - full) / full);
        }
    }
    double worst_mass = 0.0;
    for (auto [k, paths] : {std::pair{1, 1}, {1, 4}, {2, 3}, {2, 4}, {3, 6}, {4, 10}, {5, 5}}) {
        const double mass = oracle::integrate_to_infinity(
            [k = k, paths = paths](double x) { return sm::ordered_partial_sum_pdf(x, k, paths); });
        worst_mass = std::max(worst_mass, std::fabs(mass - 1.0));
    }
    int xi_checked = 0, xi_exact = 0;
    for (int n_t = 3; n_t <= 8; ++n_t) {
        for (int paths = 1; paths <= n_t; ++paths) {
            for (int i = 2; i <= n_t - 1; ++i) {
                const auto b = sm::xi_bounds(i, n_t, paths);
                for (int j = b.lower; j <= b.upper; ++j) {
                    const auto f = oracle::xi_by_enumeration(i, j, n_t, paths);
                    const double scaled = sm::xi(i, j, n_t, paths) * static_cast<double>(f.den);
                    ++xi_checked;
                    xi_exact += std::llround(scaled) == static_cast<long long>(f.num) &&
                                std::fabs(scaled - static_cast<double>(f.num)) <= 1e-9;
                }
            }
        }
    }
    return {worst_gamma <= 1e-12 && worst_mass <= 1e-8 && xi_exact == xi_checked,
            fmt("complement max rel dev %.2e; pdf mass max dev %.2e; xi exact %d/%d", worst_gamma, worst_mass,
                xi_exact, xi_checked)};
}

Outcome rate_ordering() {
    auto run = [](const char* scheme) {
        json j{{"scheme", scheme}, {"N_t", {64}}, {"L", {3}}, {"N_RF", {3}}, {"alpha", {4.0}},
               {"P_dB", {10.0}},   {"trials", 100000}, {"seed", 1313}};
        if (std::string(scheme) == "nit_partial") j["L_trained"] = {"matched"};
        return simulate(j).points.at(0);
    };
    const auto rv = run("rate_variant");
    const auto full = run("nit_full");
    const auto part = run("nit_partial");
    const double up = full.mean_rate - rv.mean_rate;
    const double down = rv.mean_rate - part.mean_rate;
    const double se_up = combined(full.se_rate, rv.se_rate);
    const double se_down = combined(rv.se_rate, part.se_rate);
    return {up > 3 * se_up && down > 3 * se_down,
            fmt("partial(L_trained=%d) %.4f < rate variant %.4f < full %.4f; gaps %.4f (3se %.4f), %.4f (3se %.4f)",
                part.trained.value_or(-1), part.mean_rate, rv.mean_rate, full.mean_rate, down, 3 * se_down, up,
                3 * se_up)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "training-length slopes", 10, length_slopes},
        {2, "closed-form length vs Monte Carlo", 120, pmf_vs_monte_carlo},
        {3, "hand-derived point", 30, hand_point},
        {4, "fully populated bounds", 0, iid_bounds},
        {5, "single-user outage equivalence", 0, su_outage_equivalence},
        {6, "outage closed form", 180, outage_closed_form},
        {7, "multi-user plateau", 300, mu_plateau},
        {8, "multi-user slopes", 300, mu_slopes},
        {9, "multi-user outage equivalence and ordering", 0, mu_outage},
        {10, "max-min optimality", 0, maxmin_optimality},
        {11, "zero-forcing contract", 0, zf_contract},
        {12, "special-function identities", 0, special_identities},
        {13, "ergodic-rate ordering", 0, rate_ordering},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = c.budget_s == 0 || secs < c.budget_s;
        const bool pass = o.pass && in_budget;
        failures += !pass;
        std::string budget = c.budget_s == 0 ? "" : fmt(" / budget %.0fs", c.budget_s);
        std::printf("%s C%-2d %s: %s [%.1fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs,
                    budget.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
