#pragma once

#include "rpf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace rpf {

struct ScoredItem {
    ItemId item = 0;
    double score = 0.0;
};

/// Items for one user at one time, by non-increasing expected intensity.
struct RecommendationList {
    UserId user = 0;
    double time = 0.0;
    std::vector<ScoredItem> items;
};

/// E[lambda_up(t)] for every item p, given point estimates (variational means).
inline std::vector<double> item_scores(const ModelParams &params, const ModelConfig &config,
                                       const EventHistory &history, const SocialNetwork &net,
                                       UserId u, double t) {
    if (u >= history.num_users() || u >= params.num_users())
        throw data_error("unknown user " + std::to_string(u) + " (cold start is not supported)");
    const std::size_t P = params.num_items(), K = config.K;
    const auto h = config.basis.user_values(t);
    const auto l = config.basis.item_values(t);
    std::vector<double> a(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < config.I(); ++i) a[k] += params.theta(u, k, i) * h[i];
    std::vector<double> scores(P, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t k = 0; k < K; ++k) {
            double b = 0.0;
            for (std::size_t j = 0; j < config.J(); ++j) b += params.beta(p, k, j) * l[j];
            scores[p] += a[k] * b;
        }
    for (const auto &link : net.followees(u)) {
        auto events = history.user_events(link.user);
        const std::size_t end = history.count_before(events, t);
        const double weight = params.tau[link.edge];
        if (weight == 0.0) continue;
        for (std::size_t x = 0; x < end; ++x) {
            const Event &e = history[events[x]];
            scores[e.item] += weight * config.kernel.value(e.time, t);
        }
    }
    return scores;
}

/// Indices sorted by descending score; ties keep ascending index order.
inline std::vector<ItemId> rank_by_score(const std::vector<double> &scores) {
    std::vector<ItemId> order(scores.size());
    std::iota(order.begin(), order.end(), ItemId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](ItemId x, ItemId y) { return scores[x] > scores[y]; });
    return order;
}

/// Top-k items by E[lambda_up(t)].
inline RecommendationList recommend(const ModelParams &params, const ModelConfig &config,
                                    const EventHistory &history, const SocialNetwork &net, UserId u,
                                    double t, std::size_t k) {
    if (k > params.num_items()) throw config_error("k exceeds the number of items");
    const auto scores = item_scores(params, config, history, net, u, t);
    const auto order = rank_by_score(scores);
    RecommendationList out{u, t, {}};
    for (std::size_t r = 0; r < k; ++r) out.items.push_back({order[r], scores[order[r]]});
    return out;
}

struct ReturnTimeOptions {
    std::size_t n_samples = 1000;
    std::uint64_t seed = 1;
    /// Restrict to returns to this item instead of any item.
    std::optional<ItemId> item;
    /// Samples not returning within this wait count as "no return".
    double max_wait = 1e9;
    double intensity_ceiling = 1e12;
};

struct ReturnTimePrediction {
    /// Mean over the returned samples of the first event time after t0.
    double expected_time = std::numeric_limits<double>::infinity();
    double std_error = 0.0;
    std::size_t n_returned = 0;
    /// False when some sample did not return (zero or vanishing intensity).
    bool returned = false;
};

/**
 * Samples the first event after t0 of the process with intensity
 * sum_p E[lambda_up(t)] (or a single item) by thinning, conditioning on the
 * history up to and including t0. The rate after t0 is a piecewise-constant
 * base term plus C exp(-decay (t - t0)).
 */
inline ReturnTimePrediction predict_return_time(const ModelParams &params, const ModelConfig &config,
                                                const EventHistory &history, const SocialNetwork &net,
                                                UserId u, double t0, const ReturnTimeOptions &opts = {}) {
    if (u >= history.num_users() || u >= params.num_users())
        throw data_error("unknown user " + std::to_string(u) + " (cold start is not supported)");
    if (opts.n_samples == 0) throw config_error("n_samples must be >= 1");
    if (opts.item && *opts.item >= params.num_items()) throw std::out_of_range("item index out of range");
    const double decay = config.kernel.decay();
    const std::size_t K = config.K, P = params.num_items();

    double burst = 0.0; // trigger part at t0
    for (const auto &link : net.followees(u)) {
        auto events = history.user_events(link.user);
        const std::size_t end = history.count_before(events, std::nextafter(t0, std::numeric_limits<double>::infinity()));
        for (std::size_t x = 0; x < end; ++x) {
            const Event &e = history[events[x]];
            if (opts.item && e.item != *opts.item) continue;
            burst += params.tau[link.edge] * config.kernel.value(e.time, t0);
        }
    }
    auto base_at = [&](double t) {
        const auto h = config.basis.user_values(t);
        const auto l = config.basis.item_values(t);
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double a = 0.0, b = 0.0;
            for (std::size_t i = 0; i < config.I(); ++i) a += params.theta(u, k, i) * h[i];
            const std::size_t p_lo = opts.item ? *opts.item : 0, p_hi = opts.item ? *opts.item + 1 : P;
            for (std::size_t p = p_lo; p < p_hi; ++p)
                for (std::size_t j = 0; j < config.J(); ++j) b += params.beta(p, k, j) * l[j];
            total += a * b;
        }
        return total;
    };

    std::seed_seq seq{static_cast<std::uint64_t>(opts.seed), static_cast<std::uint64_t>(u)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const bool static_basis = config.basis.is_static();
    const double static_base = static_basis ? base_at(t0) : 0.0;

    ReturnTimePrediction out;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < opts.n_samples; ++s) {
        double t = t0;
        double piece_end = config.basis.next_change(t);
        double base = static_basis ? static_base : base_at(piece_interior(t, piece_end));
        bool done = false;
        while (!done) {
            if (t - t0 > opts.max_wait) break;
            const double trig = burst * std::exp(-decay * (t - t0));
            const double bound = base + trig;
            if (bound > opts.intensity_ceiling) throw numerical_error("return-time intensity exceeds ceiling");
            if (!(bound > 0.0) || (base == 0.0 && trig < 1e-300)) {
                if (!std::isfinite(piece_end)) break;
                t = piece_end;
                piece_end = config.basis.next_change(t);
                base = base_at(piece_interior(t, piece_end));
                continue;
            }
            const double candidate = t + std::exponential_distribution<double>(bound)(rng);
            if (candidate >= piece_end) {
                t = piece_end;
                piece_end = config.basis.next_change(t);
                base = base_at(piece_interior(t, piece_end));
                continue;
            }
            t = candidate;
            const double rate = base + burst * std::exp(-decay * (t - t0));
            if (unif(rng) * bound < rate) done = true;
        }
        if (done && t - t0 <= opts.max_wait) {
            ++out.n_returned;
            sum += t;
            sum_sq += t * t;
        }
    }
    out.returned = out.n_returned == opts.n_samples;
    if (out.n_returned > 0) {
        const double n = static_cast<double>(out.n_returned);
        out.expected_time = sum / n;
        const double var = std::max(0.0, sum_sq / n - out.expected_time * out.expected_time);
        out.std_error = std::sqrt(var / n);
    }
    return out;
}

struct TimelinePoint {
    double time = 0.0;
    double intensity = 0.0;
};

/// sum_u E[lambda_up(t)] on the given grid.
inline std::vector<TimelinePoint> item_intensity_timeline(const ModelParams &params,
                                                          const ModelConfig &config,
                                                          const EventHistory &history,
                                                          const SocialNetwork &net, ItemId p,
                                                          const std::vector<double> &grid) {
    if (p >= params.num_items()) throw std::out_of_range("item index out of range");
    const std::size_t U = params.num_users(), K = config.K;
    std::vector<double> outflow(U, 0.0);
    for (std::size_t id = 0; id < net.num_edges(); ++id) outflow[net.edge(id).source] += params.tau[id];
    auto on_item = history.item_events(p);
    std::vector<TimelinePoint> out;
    out.reserve(grid.size());
    for (double t : grid) {
        const auto h = config.basis.user_values(t);
        const auto l = config.basis.item_values(t);
        double value = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double a = 0.0, b = 0.0;
            for (std::size_t u = 0; u < U; ++u)
                for (std::size_t i = 0; i < config.I(); ++i) a += params.theta(u, k, i) * h[i];
            for (std::size_t j = 0; j < config.J(); ++j) b += params.beta(p, k, j) * l[j];
            value += a * b;
        }
        const std::size_t end = history.count_before(on_item, t);
        for (std::size_t x = 0; x < end; ++x) {
            const Event &e = history[on_item[x]];
            value += outflow[e.user] * config.kernel.value(e.time, t);
        }
        out.push_back({t, value});
    }
    return out;
}

} // namespace rpf
