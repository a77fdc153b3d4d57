#pragma once

#include "rpf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <tuple>
#include <string>
#include <vector>

namespace rpf {

struct SimulationSpec {
    ModelConfig config;
    ModelParams params;
    SocialNetwork network;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    std::size_t max_events = 10'000'000;
    /// Abort when the dominating rate exceeds this.
    double intensity_ceiling = 1e12;
    /// Abort when max_v (total outgoing tau of v) / decay reaches this; warn from 1.
    double branching_abort = 2.0;
};

struct SimulationStats {
    std::size_t candidates = 0;
    std::size_t accepted = 0;
    /// Largest intensity / bound observed at a candidate; must stay <= 1.
    double max_acceptance_ratio = 0.0;
    /// max_v sum_{u follows v} tau_vu / decay.
    double branching_proxy = 0.0;
};

struct SimulationResult {
    EventHistory history;
    bool truncated = false;
    SimulationStats stats;
    std::vector<std::string> warnings;
};

namespace detail {

/// Index i with cum[i-1] <= r < cum[i] in an inclusive prefix-sum array.
inline std::size_t pick_cumulative(const std::vector<double> &cum, double r) {
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    if (it == cum.end()) --it;
    return static_cast<std::size_t>(it - cum.begin());
}

/**
 * Base-rate sampler for one piece of constant basis values: the total is
 * sum_k A_k B_k with A_k = sum_u a_uk, B_k = sum_p b_pk, so a pair (u, p)
 * is drawn as k ~ A_k B_k, u ~ a_uk, p ~ b_pk.
 */
class BaseSampler {
  public:
    BaseSampler(const ModelParams &params, const TimeBasis &basis) : params_(params), basis_(basis) {}

    void refresh(double t) {
        const std::size_t U = params_.num_users(), P = params_.num_items(), K = params_.K();
        std::vector<std::size_t> active_i, active_j;
        for (std::size_t i = 0; i < basis_.user_dim(); ++i)
            if (basis_.user_value(i, t) > 0.0) active_i.push_back(i);
        for (std::size_t j = 0; j < basis_.item_dim(); ++j)
            if (basis_.item_value(j, t) > 0.0) active_j.push_back(j);
        cum_user_.assign(K, std::vector<double>(U));
        cum_item_.assign(K, std::vector<double>(P));
        cum_k_.assign(K, 0.0);
        total_ = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double acc = 0.0;
            for (std::size_t u = 0; u < U; ++u) {
                for (std::size_t i : active_i) acc += params_.theta(u, k, i) * basis_.user_value(i, t);
                cum_user_[k][u] = acc;
            }
            double bcc = 0.0;
            for (std::size_t p = 0; p < P; ++p) {
                for (std::size_t j : active_j) bcc += params_.beta(p, k, j) * basis_.item_value(j, t);
                cum_item_[k][p] = bcc;
            }
            total_ += acc * bcc;
            cum_k_[k] = total_;
        }
    }

    double total() const { return total_; }

    template <typename Rng> std::pair<UserId, ItemId> draw(Rng &rng) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const std::size_t k = pick_cumulative(cum_k_, unif(rng) * total_);
        const UserId u = pick_cumulative(cum_user_[k], unif(rng) * cum_user_[k].back());
        const ItemId p = pick_cumulative(cum_item_[k], unif(rng) * cum_item_[k].back());
        return {u, p};
    }

  private:
    const ModelParams &params_;
    const TimeBasis &basis_;
    std::vector<std::vector<double>> cum_user_, cum_item_;
    std::vector<double> cum_k_;
    double total_ = 0.0;
};

} // namespace detail

/**
 * Ogata thinning on the superposition of all (u, p) processes.
 *
 * The triggered part of the total rate is sum_e W(u_e) exp(-w (t - t_e))
 * with W(v) the total outgoing tau of v; it only decays between events,
 * so (base rate of the current basis piece) + (triggered part now)
 * dominates the rate until the next event or basis change. Accepted
 * events are attributed to (u, p) in proportion to lambda_up(t).
 */
inline SimulationResult simulate(const SimulationSpec &spec) {
    const auto &config = spec.config;
    const auto &params = spec.params;
    const auto &net = spec.network;
    config.validate();
    config.validate_network(net);
    check_shapes(params, config, net);
    if (!(spec.horizon >= 0.0)) throw config_error("simulation horizon must be >= 0");
    if (spec.max_events == 0) throw config_error("max event cap must be positive");

    const std::size_t U = params.num_users(), P = params.num_items();
    const double decay = config.kernel.decay();
    SimulationResult result;

    std::vector<double> outflow(U, 0.0);
    for (std::size_t id = 0; id < net.num_edges(); ++id) outflow[net.edge(id).source] += params.tau[id];
    result.stats.branching_proxy = *std::max_element(outflow.begin(), outflow.end()) / decay;
    if (result.stats.branching_proxy >= spec.branching_abort)
        throw numerical_error("self-excitation far above the stable regime (branching proxy " +
                              std::to_string(result.stats.branching_proxy) + ")");
    if (result.stats.branching_proxy >= 1.0)
        result.warnings.push_back("branching proxy " + std::to_string(result.stats.branching_proxy) +
                                  " >= 1: process may be explosive");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Event> events;
    detail::BaseSampler base(params, config.basis);
    double t = 0.0;
    double next_piece = config.basis.next_change(t);
    base.refresh(piece_interior(t, next_piece));

    // Triggered rate at time t, and unnormalised source weights
    // W(u_e) exp(decay (t_e - t_ref)) whose ratios are time invariant.
    double triggered = 0.0;
    double t_ref = 0.0;
    std::vector<double> cum_weight;

    while (t < spec.horizon) {
        const double bound = base.total() + triggered;
        if (bound > spec.intensity_ceiling)
            throw numerical_error("total intensity " + std::to_string(bound) + " exceeds ceiling");
        const double wait = bound > 0.0 ? std::exponential_distribution<double>(bound)(rng)
                                         : std::numeric_limits<double>::infinity();
        const double candidate = t + wait;
        if (candidate >= next_piece) {
            if (next_piece >= spec.horizon) break;
            triggered *= std::exp(-decay * (next_piece - t));
            t = next_piece;
            next_piece = config.basis.next_change(t);
            base.refresh(piece_interior(t, next_piece));
            continue;
        }
        if (candidate >= spec.horizon) break;
        triggered *= std::exp(-decay * wait);
        t = candidate;
        const double rate = base.total() + triggered;
        ++result.stats.candidates;
        result.stats.max_acceptance_ratio = std::max(result.stats.max_acceptance_ratio, rate / bound);
        const double r = unif(rng) * bound;
        if (r >= rate) continue;

        Event ev;
        ev.time = t;
        if (r < base.total()) {
            std::tie(ev.user, ev.item) = base.draw(rng);
        } else {
            const double total_w = cum_weight.empty() ? 0.0 : cum_weight.back();
            if (!(total_w > 0.0)) continue;
            const std::size_t src = detail::pick_cumulative(cum_weight, unif(rng) * total_w);
            const UserId v = events[src].user;
            ev.item = events[src].item;
            auto followers = net.followers(v);
            if (followers.empty() || !(outflow[v] > 0.0)) continue;
            double acc = 0.0;
            const double target = unif(rng) * outflow[v];
            ev.user = followers.back().user;
            for (const auto &link : followers) {
                acc += params.tau[link.edge];
                if (target < acc) {
                    ev.user = link.user;
                    break;
                }
            }
        }
        events.push_back(ev);
        ++result.stats.accepted;

        triggered += outflow[ev.user];
        if (decay * (t - t_ref) > 500.0) {
            // rebase the weights to keep them finite
            const double scale = std::exp(-decay * (t - t_ref));
            double prev = 0.0;
            for (auto &c : cum_weight) {
                const double w = c - prev;
                prev = c;
                c = w * scale;
            }
            for (std::size_t n = 1; n < cum_weight.size(); ++n) cum_weight[n] += cum_weight[n - 1];
            t_ref = t;
        }
        const double w = outflow[ev.user] * std::exp(decay * (t - t_ref));
        cum_weight.push_back((cum_weight.empty() ? 0.0 : cum_weight.back()) + w);

        if (events.size() >= spec.max_events) {
            result.truncated = true;
            result.warnings.push_back("event cap reached; history truncated at t = " + std::to_string(t));
            break;
        }
    }
    result.history = EventHistory(std::move(events), spec.horizon, U, P);
    return result;
}

/**
 * Directed Erdos-Renyi follow graph: each ordered pair (u, v), u != v, is
 * an edge with probability avg_degree / (U - 1).
 */
inline SocialNetwork random_network(std::size_t num_users, double avg_degree, std::uint64_t seed,
                                    bool self_loops = true) {
    if (!(avg_degree >= 0.0) || (num_users > 0 && avg_degree >= static_cast<double>(num_users)))
        throw config_error("average degree must lie in [0, U)");
    std::vector<std::pair<UserId, UserId>> follows;
    if (num_users > 1 && avg_degree > 0.0) {
        const double prob = avg_degree / static_cast<double>(num_users - 1);
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution coin(prob);
        for (UserId u = 0; u < num_users; ++u)
            for (UserId v = 0; v < num_users; ++v)
                if (u != v && coin(rng)) follows.emplace_back(u, v);
    }
    return SocialNetwork(num_users, std::move(follows), self_loops);
}

} // namespace rpf
