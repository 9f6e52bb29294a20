#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "beamtrain/mu_schemes.hpp"
#include "beamtrain/su_schemes.hpp"
#include "oracles/assignment.hpp"
#include "oracles/instances.hpp"

using namespace beamtrain;

namespace {

ChannelRealization dense_channel(int n_t, std::vector<std::vector<std::pair<int, cplx>>> users) {
    std::vector<std::vector<cplx>> g(users.size(), std::vector<cplx>(n_t, cplx{}));
    for (std::size_t u = 0; u < users.size(); ++u) {
        for (auto [beam, gain] : users[u]) g[u][beam - 1] = gain;
    }
    return ChannelRealization::from_beam_gains(n_t, std::move(g));
}

ChannelRealization draw(int n_t, int paths, int users, std::uint64_t trial, std::uint64_t seed = 1) {
    return sample_channel(ChannelConfig{n_t, PathCount::fixed(paths), users}, seed, 0, trial);
}

std::vector<double> sorted_gains(const oracle::Instance& inst, const BeamAssignment& a) {
    std::vector<double> v;
    for (std::size_t u = 0; u < a.beams.size(); ++u) {
        v.push_back(std::abs(inst.channel.gain(static_cast<int>(u), a.beams[u])));
    }
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("system config") {
    CHECK_THROWS_AS(MuSystemConfig::from_alpha(2, 3, 1.0), ConfigError);
    CHECK_THROWS_AS(MuSystemConfig::from_alpha(3, 0, 1.0), ConfigError);
    CHECK_THROWS_AS(MuSystemConfig::from_alpha(3, 2, -1.0), ConfigError);
    const auto c = MuSystemConfig::from_rate(3, 3, 10.0, 1.0);
    CHECK(c.alpha_bar == doctest::Approx(0.3));
    CHECK(parse_assignment_method("maxmin") == AssignmentMethod::maxmin);
    CHECK(parse_assignment_method("exhaustive") == AssignmentMethod::exhaustive);
    CHECK(to_string(AssignmentMethod::maxmin) == "maxmin");
    CHECK_THROWS_AS(parse_assignment_method("greedy"), ConfigError);
}

TEST_CASE("known beams track per-user sets and their union") {
    const auto ch = dense_channel(6, {{{2, cplx(1, 0)}, {5, cplx(1, 0)}}, {{5, cplx(0, 1)}}});
    KnownBeams known(2);
    CHECK_FALSE(known.learn(ch, 1));
    CHECK(known.learn(ch, 2));
    CHECK_FALSE(known.ready_for_assignment());
    CHECK(known.learn(ch, 5));
    CHECK(known.ready_for_assignment());
    CHECK(known.all() == std::vector<int>{2, 5});
    CHECK(known.of_user(0) == std::vector<int>{2, 5});
    CHECK(known.of_user(1) == std::vector<int>{5});

    // Both users on a single beam: not enough beams for two users.
    const auto solo = KnownBeams::from_sets({{3}, {3}});
    CHECK_FALSE(solo.ready_for_assignment());
}

TEST_CASE("lambda squared for simple effective channels") {
    const int n_t = 4;
    SUBCASE("single user") {
        const auto ch = dense_channel(n_t, {{{3, cplx(0.6, 0.8)}}});
        CHECK(zf_lambda_sq({{3}}, ch) == doctest::Approx(n_t * 1.0));
    }
    SUBCASE("diagonal channel is the harmonic mean") {
        const auto ch = dense_channel(n_t, {{{1, cplx(0.5, 0)}}, {{2, cplx(0, 1.0)}}});
        const double g1 = n_t * 0.25, g2 = n_t * 1.0;
        CHECK(zf_lambda_sq({{1, 2}}, ch) == doctest::Approx(2.0 / (1 / g1 + 1 / g2)));
        CHECK(check_feasible({{1, 2}}, ch));
        // Swapping beams permutes the columns; the rank and lambda are unchanged.
        CHECK(check_feasible({{2, 1}}, ch));
        CHECK(zf_lambda_sq({{2, 1}}, ch) == doctest::Approx(zf_lambda_sq({{1, 2}}, ch)));
    }
    SUBCASE("repeated beam is infeasible") {
        const auto ch = dense_channel(n_t, {{{1, cplx(1, 0)}}, {{1, cplx(0, 1)}}});
        CHECK_FALSE(check_feasible({{1, 1}}, ch));
        CHECK(zf_lambda_sq({{1, 1}}, ch) == 0.0);
        CHECK_THROWS_AS(zf_precoder({{1, 1}}, ch), std::domain_error);
    }
    SUBCASE("parallel rows are infeasible") {
        const auto ch = dense_channel(n_t, {{{1, cplx(1, 0)}, {2, cplx(2, 0)}},
                                             {{1, cplx(0.5, 0)}, {2, cplx(1, 0)}}});
        CHECK_FALSE(check_feasible({{1, 2}}, ch));
    }
    const auto ch = dense_channel(n_t, {{{1, cplx(1, 0)}}, {{2, cplx(1, 0)}}});
    CHECK_THROWS_AS(effective_channel_matrix({{1}}, ch), std::invalid_argument);
}

TEST_CASE("lambda squared matches the antenna-domain ZF norm") {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 300; ++rep) {
        const int users = 1 + rep % 3;
        auto inst = oracle::random_instance(gen, users, 6);
        if (static_cast<int>(inst.known.all().size()) < users) continue;
        BeamAssignment a{std::vector<int>(inst.known.all().begin(), inst.known.all().begin() + users)};
        if (!check_feasible(a, inst.channel)) continue;
        std::vector<int> pos(users);
        for (int u = 0; u < users; ++u) pos[u] = u;
        const double ref = oracle::lambda_sq(inst.pool_gains, pos, inst.channel.n_t());
        CHECK(zf_lambda_sq(a, inst.channel) == doctest::Approx(ref).epsilon(1e-9));

        // Build the precoder in the antenna domain and check lambda^2 = U / ||F_RF F_BB'||^2.
        Eigen::MatrixXcd h(users, inst.channel.n_t());
        for (int u = 0; u < users; ++u) h.row(u) = antenna_domain_vector(inst.channel, u).transpose();
        Eigen::MatrixXcd f_rf(inst.channel.n_t(), users);
        for (int v = 0; v < users; ++v) f_rf.col(v) = dft_beam(inst.channel.n_t(), a.beams[v]);
        const Eigen::MatrixXcd h_hat = h * f_rf;
        const Eigen::MatrixXcd dir = h_hat.adjoint() * (h_hat * h_hat.adjoint()).inverse();
        const double antenna = users / (f_rf * dir).squaredNorm();
        CHECK(zf_lambda_sq(a, inst.channel) == doctest::Approx(antenna).epsilon(1e-9));
    }
}

TEST_CASE("zero-forcing precoder contract") {
    std::mt19937_64 gen(11);
    int checked = 0;
    for (int rep = 0; rep < 2000; ++rep) {
        const int users = 1 + rep % 3;
        auto inst = oracle::random_instance(gen, users, 8);
        const auto found = maxmin_assignment(inst.known, inst.channel, MuSystemConfig::from_alpha(3, users, 1.0));
        if (!found || !check_feasible(found->assignment, inst.channel)) continue;
        const auto zf = zf_precoder(found->assignment, inst.channel);
        const Eigen::MatrixXcd prod = effective_channel_matrix(found->assignment, inst.channel) * zf.baseband;
        for (int r = 0; r < users; ++r) {
            for (int c = 0; c < users; ++c) {
                if (r == c) {
                    CHECK(std::abs(prod(r, c) - zf.lambda) <= 1e-9 * zf.lambda);
                } else {
                    CHECK(std::abs(prod(r, c)) <= 1e-9 * zf.lambda);
                }
            }
        }
        CHECK((zf.analog * zf.baseband).squaredNorm() == doctest::Approx(users).epsilon(1e-10));
        CHECK(zf.lambda * zf.lambda == doctest::Approx(found->lambda_sq).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 1000);
}

TEST_CASE("exhaustive search finds the best tuple") {
    SUBCASE("single user takes the strongest beam") {
        const auto ch = dense_channel(6, {{{2, cplx(0.2, 0)}, {4, cplx(0.9, 0)}, {6, cplx(0.5, 0)}}});
        KnownBeams known(1);
        for (int b = 1; b <= 6; ++b) known.learn(ch, b);
        const auto r = exhaustive_assignment(known, ch, MuSystemConfig::from_alpha(1, 1, 1.0));
        REQUIRE(r);
        CHECK(r->assignment.beams == std::vector<int>{4});
        CHECK(r->lambda_sq == doctest::Approx(6 * 0.81));
    }
    SUBCASE("column permutations tie and the first tuple wins") {
        const auto ch = dense_channel(4, {{{3, cplx(1, 0)}}, {{1, cplx(1, 0)}}});
        const auto known = KnownBeams::from_sets({{3}, {1}});
        const auto r = exhaustive_assignment(known, ch, MuSystemConfig::from_alpha(2, 2, 1.0));
        REQUIRE(r);
        CHECK(r->assignment.beams == std::vector<int>{1, 3});
        CHECK(r->lambda_sq == doctest::Approx(4.0));
    }
    SUBCASE("ties go to the lexicographically first tuple") {
        const auto ch = dense_channel(4, {{{1, cplx(1, 0)}, {2, cplx(1, 0)}},
                                           {{1, cplx(1, 0)}, {2, cplx(-1, 0)}}});
        const auto known = KnownBeams::from_sets({{1, 2}, {1, 2}});
        const auto r = exhaustive_assignment(known, ch, MuSystemConfig::from_alpha(2, 2, 1.0));
        REQUIRE(r);
        CHECK(r->assignment.beams == std::vector<int>{1, 2});
    }
    SUBCASE("no feasible tuple") {
        const auto ch = dense_channel(4, {{{1, cplx(1, 0)}}, {{1, cplx(1, 0)}}});
        const auto known = KnownBeams::from_sets({{1}, {1}});
        CHECK_FALSE(exhaustive_assignment(known, ch, MuSystemConfig::from_alpha(2, 2, 1.0)));
    }
    SUBCASE("tuple cap") {
        std::vector<std::vector<int>> sets(3);
        for (int b = 1; b <= 30; ++b) sets[b % 3].push_back(b);
        std::vector<std::vector<cplx>> g(3, std::vector<cplx>(30, cplx{}));
        for (int u = 0; u < 3; ++u) {
            for (int b : sets[u]) g[u][b - 1] = cplx(1.0 / b, 0.1);
        }
        const auto ch = ChannelRealization::from_beam_gains(30, g);
        auto cfg = MuSystemConfig::from_alpha(3, 3, 1.0);
        cfg.exhaustive_tuple_cap = 1000;  // 30*29*28 tuples
        CHECK_THROWS_AS(exhaustive_assignment(KnownBeams::from_sets(sets), ch, cfg), std::length_error);
        cfg.exhaustive_tuple_cap = 30 * 29 * 28;
        CHECK(exhaustive_assignment(KnownBeams::from_sets(sets), ch, cfg));
    }
}

TEST_CASE("exhaustive search agrees with brute force") {
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 1500; ++rep) {
        const int users = 1 + rep % 3;
        auto inst = oracle::random_instance(gen, users, 2 + rep % 6);
        const auto got = exhaustive_assignment(inst.known, inst.channel, MuSystemConfig::from_alpha(3, users, 1.0));
        const auto ref = oracle::best_lambda(inst.pool_gains, inst.channel.n_t());
        REQUIRE(got.has_value() == ref.has_value());
        if (!ref) continue;
        CHECK(got->lambda_sq == doctest::Approx(ref->lambda_sq).epsilon(1e-9));
    }
}

TEST_CASE("max-min assignment is the lexicographic bottleneck optimum") {
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 3000; ++rep) {
        const int users = 1 + rep % 3;
        auto inst = oracle::random_instance(gen, users, 1 + rep % 8);
        const auto got = maxmin_assignment(inst.known, inst.channel, MuSystemConfig::from_alpha(3, users, 1.0));
        const auto ref = oracle::best_sorted_gains(inst.pool_gains);
        REQUIRE(got.has_value() == ref.has_value());
        if (!ref) continue;
        const auto mine = sorted_gains(inst, got->assignment);
        CHECK(mine.front() == ref->front());
        CHECK(mine == *ref);
        std::vector<int> beams = got->assignment.beams;
        std::sort(beams.begin(), beams.end());
        CHECK(std::adjacent_find(beams.begin(), beams.end()) == beams.end());
    }
}

TEST_CASE("exhaustive lambda is never below max-min lambda") {
    std::mt19937_64 gen(13);
    for (int rep = 0; rep < 2000; ++rep) {
        const int users = 1 + rep % 3;
        auto inst = oracle::random_instance(gen, users, 3 + rep % 6);
        const auto cfg = MuSystemConfig::from_alpha(3, users, 1.0);
        const auto ex = exhaustive_assignment(inst.known, inst.channel, cfg);
        const auto mm = maxmin_assignment(inst.known, inst.channel, cfg);
        if (!mm) continue;
        REQUIRE(ex);
        CHECK(ex->lambda_sq >= mm->lambda_sq * (1 - 1e-12));
    }
}

TEST_CASE("single-user interleaved MU equals single-RF SU") {
    for (int t = 0; t < 3000; ++t) {
        const auto ch = draw(32, 3, 1, t, 19);
        const double alpha_bar = 4.0;
        const auto mu = it_mu_episode(ch, MuSystemConfig::from_alpha(1, 1, alpha_bar), AssignmentMethod::maxmin);
        // lambda^2 = N_t |h_bar|^2 > alpha_bar  <=>  |h_bar|^2 > alpha_bar / N_t.
        const auto su = it_su_episode(ch, SuSystemConfig::from_alpha(1, alpha_bar));
        CHECK(mu.training_length == su.training_length);
        CHECK(mu.outage == su.outage);
        const auto mu_full = nit_mu_full(ch, MuSystemConfig::from_alpha(1, 1, alpha_bar), AssignmentMethod::exhaustive);
        CHECK(mu_full.outage == nit_su_full(ch, SuSystemConfig::from_alpha(1, alpha_bar)).outage);
    }
}

TEST_CASE("interleaved MU stops at the first supporting beam set") {
    // Two users, paths on beams 3 and 5; training must reach beam 5.
    const auto ch = dense_channel(8, {{{3, cplx(1, 0)}}, {{5, cplx(1, 0)}}});
    const auto r = it_mu_episode(ch, MuSystemConfig::from_alpha(2, 2, 1.0), AssignmentMethod::exhaustive);
    CHECK_FALSE(r.outage);
    CHECK(r.training_length == 5);
    REQUIRE(r.assignment);
    CHECK(r.assignment->beams == std::vector<int>{3, 5});
    CHECK(r.lambda_sq == doctest::Approx(8.0));
    CHECK(r.rate == doctest::Approx(std::log2(1.0 + 1.0 / 2 * 8.0)));

    // Success inside the initial block reports length U.
    const auto early = dense_channel(8, {{{1, cplx(1, 0)}}, {{2, cplx(1, 0)}}});
    CHECK(it_mu_episode(early, MuSystemConfig::from_alpha(2, 2, 1.0), AssignmentMethod::maxmin).training_length == 2);
}

TEST_CASE("users sharing one beam cannot be served") {
    const auto ch = dense_channel(8, {{{4, cplx(1, 0)}}, {{4, cplx(0, 1)}}});
    const auto cfg = MuSystemConfig::from_alpha(2, 2, 0.1);
    for (auto m : {AssignmentMethod::exhaustive, AssignmentMethod::maxmin}) {
        const auto it = it_mu_episode(ch, cfg, m);
        CHECK(it.outage);
        CHECK(it.training_length == 8);
        CHECK_FALSE(it.assignment);
        CHECK(it.rate == 0.0);
        CHECK(nit_mu_full(ch, cfg, m).outage);
    }
}

TEST_CASE("partial MU training") {
    const auto ch = dense_channel(8, {{{6, cplx(1, 0)}}, {{7, cplx(1, 0)}}});
    const auto cfg = MuSystemConfig::from_alpha(2, 2, 1.0);
    CHECK(nit_mu_partial(ch, cfg, 2, AssignmentMethod::maxmin).outage);
    CHECK(nit_mu_partial(ch, cfg, 6, AssignmentMethod::maxmin).outage);
    const auto ok = nit_mu_partial(ch, cfg, 7, AssignmentMethod::maxmin);
    CHECK_FALSE(ok.outage);
    CHECK(ok.training_length == 7);
    CHECK_THROWS_AS(nit_mu_partial(ch, cfg, 1, AssignmentMethod::maxmin), ConfigError);
    CHECK_THROWS_AS(nit_mu_partial(ch, cfg, 9, AssignmentMethod::maxmin), ConfigError);
    CHECK_THROWS_AS(nit_mu_full(ch, MuSystemConfig::from_alpha(3, 3, 1.0), AssignmentMethod::maxmin),
                    ConfigError);
}

TEST_CASE("MU episode invariants and outage equivalence") {
    const int n_t = 24, paths = 3, users = 3;
    const auto cfg = MuSystemConfig::from_alpha(3, users, 6.0, 10.0);
    int mismatches = 0;
    for (int t = 0; t < 1500; ++t) {
        const auto ch = draw(n_t, paths, users, t, 29);
        const auto it = it_mu_episode(ch, cfg, AssignmentMethod::exhaustive);
        const auto full = nit_mu_full(ch, cfg, AssignmentMethod::exhaustive);
        if (it.outage != full.outage) ++mismatches;
        for (const auto& r : {it, it_mu_episode(ch, cfg, AssignmentMethod::maxmin)}) {
            CHECK(r.training_length >= users);
            CHECK(r.training_length <= n_t);
            if (r.outage) {
                CHECK(r.training_length == n_t);
                CHECK(r.rate == 0.0);
            } else {
                REQUIRE(r.assignment);
                CHECK(check_feasible(*r.assignment, ch));
                CHECK(r.lambda_sq > cfg.alpha_bar);
                CHECK(r.rate > 0.0);
                for (int b : r.assignment->beams) CHECK(b <= r.training_length);
            }
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("max-min costs little extra training") {
    const int n_t = 80, users = 3, trials = 2000;
    const auto cfg = MuSystemConfig::from_alpha(3, users, 6.0);
    double ex = 0.0, mm = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto ch = draw(n_t, 8, users, t, 37);
        ex += it_mu_episode(ch, cfg, AssignmentMethod::exhaustive).training_length;
        mm += it_mu_episode(ch, cfg, AssignmentMethod::maxmin).training_length;
    }
    CHECK(mm >= ex);
    CHECK(mm <= 1.05 * ex);
}
