#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "beamtrain/mu_schemes.hpp"

namespace beamtrain {

namespace {

// Number of ordered k-tuples of distinct items from n, saturating at cap + 1.
std::size_t ordered_tuple_count(std::size_t n, std::size_t k, std::size_t cap) {
    if (k > n) return 0;
    std::size_t count = 1;
    for (std::size_t i = 0; i < k; ++i) {
        count *= (n - i);
        if (count > cap) return cap + 1;
    }
    return count;
}

struct ExhaustiveSearch {
    const ChannelRealization& ch;
    const std::vector<int>& pool;
    int users;
    std::vector<int> current;
    std::vector<char> used;
    std::optional<AssignmentResult> best;

    void descend(int depth) {
        if (depth == users) {
            BeamAssignment a{current};
            const double lsq = zf_lambda_sq(a, ch);
            if (lsq > 0.0 && (!best || lsq > best->lambda_sq)) {
                best = AssignmentResult{std::move(a), lsq};
            }
            return;
        }
        for (std::size_t k = 0; k < pool.size(); ++k) {
            if (used[k]) continue;
            used[k] = 1;
            current[depth] = pool[k];
            descend(depth + 1);
            used[k] = 0;
        }
    }
};

// Bipartite user -> beam matching on a dense boolean adjacency matrix
// (Kuhn's augmenting paths).
class Matcher {
  public:
    Matcher(int users, int beams) : users_(users), beams_(beams), adj_(users * beams, 0) {}

    void set_edge(int u, int b, bool on) { adj_[u * beams_ + b] = on ? 1 : 0; }

    // True if every user in `active_users` can be matched to a distinct beam in
    // `active_beams`.
    bool perfect(const std::vector<char>& active_users, const std::vector<char>& active_beams) {
        owner_.assign(beams_, -1);
        for (int u = 0; u < users_; ++u) {
            if (!active_users[u]) continue;
            seen_.assign(beams_, 0);
            if (!augment(u, active_beams)) return false;
        }
        return true;
    }

  private:
    bool augment(int u, const std::vector<char>& active_beams) {
        for (int b = 0; b < beams_; ++b) {
            if (!active_beams[b] || !adj_[u * beams_ + b] || seen_[b]) continue;
            seen_[b] = 1;
            if (owner_[b] < 0 || augment(owner_[b], active_beams)) {
                owner_[b] = u;
                return true;
            }
        }
        return false;
    }

    int users_;
    int beams_;
    std::vector<char> adj_;
    std::vector<int> owner_;
    std::vector<char> seen_;
};

}  // namespace

std::optional<AssignmentResult> exhaustive_assignment(const KnownBeams& known,
                                                      const ChannelRealization& ch,
                                                      const MuSystemConfig& cfg) {
    const auto& pool = known.all();
    const auto users = static_cast<std::size_t>(known.users());
    if (pool.size() < users) return std::nullopt;
    if (ordered_tuple_count(pool.size(), users, cfg.exhaustive_tuple_cap) >
        cfg.exhaustive_tuple_cap) {
        throw std::length_error("exhaustive assignment: " + std::to_string(pool.size()) +
                                " beams and " + std::to_string(users) +
                                " users exceed the tuple cap of " +
                                std::to_string(cfg.exhaustive_tuple_cap));
    }
    ExhaustiveSearch search{ch, pool, known.users(), std::vector<int>(users),
                            std::vector<char>(pool.size(), 0), std::nullopt};
    search.descend(0);
    return search.best;
}

std::optional<AssignmentResult> maxmin_assignment(const KnownBeams& known,
                                                  const ChannelRealization& ch,
                                                  const MuSystemConfig&) {
    const auto& pool = known.all();
    const int users = known.users();
    const int beams = static_cast<int>(pool.size());
    if (beams < users) return std::nullopt;

    std::vector<double> weight(static_cast<std::size_t>(users) * beams);
    for (int u = 0; u < users; ++u) {
        for (int b = 0; b < beams; ++b) weight[u * beams + b] = std::abs(ch.gain(u, pool[b]));
    }
    auto w = [&](int u, int b) { return weight[u * beams + b]; };

    std::vector<char> user_open(users, 1);
    std::vector<char> beam_open(beams, 1);
    Matcher matcher(users, beams);
    auto matchable_at = [&](double floor) {
        for (int u = 0; u < users; ++u) {
            for (int b = 0; b < beams; ++b) matcher.set_edge(u, b, w(u, b) > 0.0 && w(u, b) >= floor);
        }
        return matcher.perfect(user_open, beam_open);
    };

    std::vector<int> assigned(users, 0);
    for (int stage = 0; stage < users; ++stage) {
        std::vector<double> levels;
        for (int u = 0; u < users; ++u) {
            if (!user_open[u]) continue;
            for (int b = 0; b < beams; ++b) {
                if (beam_open[b] && w(u, b) > 0.0) levels.push_back(w(u, b));
            }
        }
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        if (levels.empty() || !matchable_at(levels.front())) return std::nullopt;

        // Largest level that still admits a perfect matching.
        std::size_t lo = 0, hi = levels.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (matchable_at(levels[mid])) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        const double bottleneck = levels[lo];

        // Fix a user/beam pair at the bottleneck level whose removal leaves the
        // rest matchable above it; lowest user, then lowest beam, first.
        bool fixed = false;
        for (int u = 0; u < users && !fixed; ++u) {
            if (!user_open[u]) continue;
            for (int b = 0; b < beams && !fixed; ++b) {
                if (!beam_open[b] || w(u, b) != bottleneck) continue;
                user_open[u] = 0;
                beam_open[b] = 0;
                if (matchable_at(bottleneck)) {
                    assigned[u] = pool[b];
                    fixed = true;
                } else {
                    user_open[u] = 1;
                    beam_open[b] = 1;
                }
            }
        }
        if (!fixed) return std::nullopt;  // unreachable when the matching exists
    }

    BeamAssignment a{assigned};
    const double lsq = zf_lambda_sq(a, ch);
    return AssignmentResult{std::move(a), lsq};
}

std::optional<AssignmentResult> find_assignment(AssignmentMethod method, const KnownBeams& known,
                                                const ChannelRealization& ch,
                                                const MuSystemConfig& cfg) {
    switch (method) {
        case AssignmentMethod::exhaustive:
            return exhaustive_assignment(known, ch, cfg);
        case AssignmentMethod::maxmin:
            return maxmin_assignment(known, ch, cfg);
    }
    throw std::logic_error("unknown assignment method");
}

}  // namespace beamtrain
