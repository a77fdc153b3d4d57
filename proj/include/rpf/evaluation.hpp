#pragma once

#include "rpf/model.hpp"
#include "rpf/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <vector>

namespace rpf {

/// 1-based position of `item` in a full ranking.
inline std::size_t rank_of(const std::vector<ItemId> &ranking, ItemId item) {
    auto it = std::find(ranking.begin(), ranking.end(), item);
    if (it == ranking.end()) throw std::invalid_argument("item missing from ranking");
    return static_cast<std::size_t>(it - ranking.begin()) + 1;
}

/// Fraction of test events whose true item has rank <= k (ranks are 1-based).
inline double recall_at_k(const std::vector<std::size_t> &ranks, std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (ranks.empty()) throw std::invalid_argument("no test events");
    double hits = 0.0;
    for (auto r : ranks) hits += (r >= 1 && r <= k) ? 1.0 : 0.0;
    return hits / static_cast<double>(ranks.size());
}

/// Mean over test events of I(rank <= k) / log2(1 + rank).
inline double ndcg_at_k(const std::vector<std::size_t> &ranks, std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (ranks.empty()) throw std::invalid_argument("no test events");
    double total = 0.0;
    for (auto r : ranks)
        if (r >= 1 && r <= k) total += 1.0 / std::log2(1.0 + static_cast<double>(r));
    return total / static_cast<double>(ranks.size());
}

/// Expected NDCG@k when the true item sits at a uniformly random position among P.
inline double random_ndcg_at_k(std::size_t num_items, std::size_t k) {
    double total = 0.0;
    for (std::size_t r = 1; r <= std::min(k, num_items); ++r) total += 1.0 / std::log2(1.0 + static_cast<double>(r));
    return total / static_cast<double>(num_items);
}

inline double returning_time_mae(const std::vector<double> &predicted, const std::vector<double> &truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("prediction/truth size mismatch");
    if (predicted.empty()) throw std::invalid_argument("no returning-time predictions");
    double total = 0.0;
    for (std::size_t x = 0; x < predicted.size(); ++x) total += std::abs(predicted[x] - truth[x]);
    return total / static_cast<double>(predicted.size());
}

/// Compensator increments between consecutive events of each process, pooled.
struct RescaledIntervals {
    std::vector<double> values;
};

/// Which point process the compensator is taken over.
enum class RescaleScope {
    PerPair, ///< each (u, p) process with intensity lambda_up
    PerUser, ///< each user's process with intensity sum_p lambda_up
    Global,  ///< the superposition of all processes
};

namespace detail {

/// One event of a merged timeline: it may be a point of the target process
/// and/or a trigger source with weight `weight` (0 when not a source).
struct TimelineEntry {
    double time;
    bool target;
    double weight;
};

/**
 * Appends Lambda(t_{x+1}) - Lambda(t_x) over the target events of a merged
 * timeline. `base_integral(a, b)` integrates the base rate; triggers add
 * weight * G(t - t_e) for sources strictly before t.
 */
template <typename BaseIntegral>
void append_intervals(const std::vector<TimelineEntry> &timeline, double decay,
                      const BaseIntegral &base_integral, std::vector<double> &out) {
    // A = sum of weights, B = sum weight * exp(-decay (t - t_e)), so the
    // triggered compensator is (A - B) / decay.
    double A = 0.0, B = 0.0, last = 0.0;
    bool have_prev = false;
    double prev_time = 0.0, prev_trig = 0.0;
    for (const auto &entry : timeline) {
        B *= std::exp(-decay * (entry.time - last));
        last = entry.time;
        if (entry.target) {
            const double trig = (A - B) / decay;
            if (have_prev) out.push_back(std::max(0.0, base_integral(prev_time, entry.time) + trig - prev_trig));
            have_prev = true;
            prev_time = entry.time;
            prev_trig = trig;
        }
        A += entry.weight;
        B += entry.weight;
    }
}

/// sum_{i,j} coef_ij * int_a^b h_i l_j, skipping zero coefficients.
inline double weighted_basis_integral(const TimeBasis &basis, const std::vector<double> &coef, double a,
                                      double b) {
    const std::size_t I = basis.user_dim(), J = basis.item_dim();
    double total = 0.0;
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j)
            if (coef[i * J + j] != 0.0) total += coef[i * J + j] * basis.integral(i, j, a, b);
    return total;
}

} // namespace detail

/**
 * Lambda(t_{x+1}) - Lambda(t_x) between consecutive events of every process
 * in the chosen scope that has at least two events, pooled. The base term
 * uses exact basis integrals over [t_x, t_{x+1}], the triggered term kernel
 * integrals of every admissible earlier event.
 *
 * Intervals are taken inside the observation window only, so processes with
 * few events yield gaps biased towards zero; the per-user and global scopes
 * aggregate enough events to make that edge effect negligible.
 */
inline RescaledIntervals rescale(const ModelParams &params, const ModelConfig &config,
                                 const EventHistory &history, const SocialNetwork &net,
                                 RescaleScope scope = RescaleScope::PerPair) {
    check_shapes(params, config, net);
    const std::size_t U = history.num_users(), P = history.num_items(), K = config.K;
    const std::size_t I = config.I(), J = config.J();
    const double decay = config.kernel.decay();
    RescaledIntervals out;
    std::vector<double> coef(I * J, 0.0);
    std::vector<detail::TimelineEntry> timeline;
    auto base = [&](double a, double b) { return detail::weighted_basis_integral(config.basis, coef, a, b); };

    if (scope == RescaleScope::PerPair) {
        for (ItemId p = 0; p < P; ++p) {
            auto on_item = history.item_events(p);
            std::vector<std::size_t> per_user(U, 0);
            for (auto n : on_item) ++per_user[history[n].user];
            for (UserId u = 0; u < U; ++u) {
                if (per_user[u] < 2) continue;
                for (std::size_t i = 0; i < I; ++i)
                    for (std::size_t j = 0; j < J; ++j) {
                        double c = 0.0;
                        for (std::size_t k = 0; k < K; ++k) c += params.theta(u, k, i) * params.beta(p, k, j);
                        coef[i * J + j] = c;
                    }
                timeline.clear();
                for (auto n : on_item) {
                    const Event &e = history[n];
                    const auto edge = net.find_edge(e.user, u);
                    timeline.push_back({e.time, e.user == u, edge ? params.tau[*edge] : 0.0});
                }
                detail::append_intervals(timeline, decay, base, out.values);
            }
        }
        return out;
    }

    std::vector<double> beta_sum(K * J, 0.0);
    for (ItemId p = 0; p < P; ++p)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < J; ++j) beta_sum[k * J + j] += params.beta(p, k, j);

    if (scope == RescaleScope::PerUser) {
        for (UserId u = 0; u < U; ++u) {
            if (history.user_events(u).size() < 2) continue;
            for (std::size_t i = 0; i < I; ++i)
                for (std::size_t j = 0; j < J; ++j) {
                    double c = 0.0;
                    for (std::size_t k = 0; k < K; ++k) c += params.theta(u, k, i) * beta_sum[k * J + j];
                    coef[i * J + j] = c;
                }
            std::vector<std::size_t> idx(history.user_events(u).begin(), history.user_events(u).end());
            for (const auto &link : net.followees(u))
                if (link.user != u) idx.insert(idx.end(), history.user_events(link.user).begin(),
                                               history.user_events(link.user).end());
            std::sort(idx.begin(), idx.end());
            const auto self_edge = net.find_edge(u, u);
            timeline.clear();
            for (auto n : idx) {
                const Event &e = history[n];
                double w = 0.0;
                if (e.user == u)
                    w = self_edge ? params.tau[*self_edge] : 0.0;
                else
                    w = params.tau[*net.find_edge(e.user, u)];
                timeline.push_back({e.time, e.user == u, w});
            }
            detail::append_intervals(timeline, decay, base, out.values);
        }
        return out;
    }

    std::vector<double> theta_sum(K * I, 0.0);
    for (UserId u = 0; u < U; ++u)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < I; ++i) theta_sum[k * I + i] += params.theta(u, k, i);
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j) {
            double c = 0.0;
            for (std::size_t k = 0; k < K; ++k) c += theta_sum[k * I + i] * beta_sum[k * J + j];
            coef[i * J + j] = c;
        }
    std::vector<double> outflow(U, 0.0);
    for (std::size_t id = 0; id < net.num_edges(); ++id) outflow[net.edge(id).source] += params.tau[id];
    timeline.clear();
    for (const auto &e : history.events()) timeline.push_back({e.time, true, outflow[e.user]});
    detail::append_intervals(timeline, decay, base, out.values);
    return out;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double total = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        total += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * total, 0.0, 1.0);
}

/// One-sample KS test against the unit-rate exponential (Stephens' small-n correction).
inline KsResult ks_test_exponential(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("KS test needs at least one value");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t x = 0; x < values.size(); ++x) {
        const double cdf = -std::expm1(-values[x]);
        d = std::max({d, (static_cast<double>(x) + 1.0) / n - cdf, cdf - static_cast<double>(x) / n});
    }
    const double sq = std::sqrt(n);
    return {d, kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)};
}

struct QqPoint {
    double theoretical = 0.0;
    double empirical = 0.0;
};

/// Sorted values against Exp(1) quantiles at plotting positions (x - 0.5) / n.
inline std::vector<QqPoint> qq_exponential(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    std::vector<QqPoint> out(values.size());
    for (std::size_t x = 0; x < values.size(); ++x)
        out[x] = {-std::log1p(-(static_cast<double>(x) + 0.5) / n), values[x]};
    return out;
}

/// Least-squares slope (with intercept) of empirical on theoretical quantiles.
inline double qq_slope(const std::vector<QqPoint> &qq) {
    if (qq.size() < 2) throw std::invalid_argument("QQ slope needs at least two points");
    double mx = 0.0, my = 0.0;
    for (const auto &q : qq) {
        mx += q.theoretical;
        my += q.empirical;
    }
    mx /= static_cast<double>(qq.size());
    my /= static_cast<double>(qq.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto &q : qq) {
        sxy += (q.theoretical - mx) * (q.empirical - my);
        sxx += (q.theoretical - mx) * (q.theoretical - mx);
    }
    return sxy / sxx;
}

/// Dense U x U matrix, row-major.
struct SimilarityMatrix {
    std::size_t n = 0;
    std::vector<double> values;
    double operator()(std::size_t a, std::size_t b) const { return values[a * n + b]; }
};

struct SimilarityMatrices {
    SimilarityMatrix learned;
    SimilarityMatrix empirical;
};

/**
 * learned(u, v) = E[theta_u]^T E[theta_v] with theta summed over basis
 * dimensions; empirical(u, v) = Jaccard similarity of consumed item sets
 * (0 for users without events).
 */
inline SimilarityMatrices similarity_matrices(const ModelParams &params, const EventHistory &history) {
    const std::size_t U = params.num_users(), K = params.K(), I = params.theta.dim2();
    SimilarityMatrices out;
    out.learned = {U, std::vector<double>(U * U, 0.0)};
    out.empirical = {U, std::vector<double>(U * U, 0.0)};
    std::vector<double> agg(U * K, 0.0);
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < I; ++i) agg[u * K + k] += params.theta(u, k, i);
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t v = 0; v < U; ++v) {
            double dot = 0.0;
            for (std::size_t k = 0; k < K; ++k) dot += agg[u * K + k] * agg[v * K + k];
            out.learned.values[u * U + v] = dot;
        }
    std::vector<std::vector<ItemId>> items(U);
    for (std::size_t u = 0; u < U && u < history.num_users(); ++u) {
        for (auto n : history.user_events(u)) items[u].push_back(history[n].item);
        std::sort(items[u].begin(), items[u].end());
        items[u].erase(std::unique(items[u].begin(), items[u].end()), items[u].end());
    }
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t v = u; v < U; ++v) {
            if (items[u].empty() || items[v].empty()) continue;
            std::vector<ItemId> common;
            std::set_intersection(items[u].begin(), items[u].end(), items[v].begin(), items[v].end(),
                                  std::back_inserter(common));
            const double inter = static_cast<double>(common.size());
            const double uni = static_cast<double>(items[u].size() + items[v].size()) - inter;
            out.empirical.values[u * U + v] = out.empirical.values[v * U + u] = inter / uni;
        }
    return out;
}

/// Ranks with ties averaged (1-based).
inline std::vector<double> average_ranks(const std::vector<double> &x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t s = 0; s < order.size();) {
        std::size_t e = s;
        while (e + 1 < order.size() && x[order[e + 1]] == x[order[s]]) ++e;
        const double r = 0.5 * static_cast<double>(s + e) + 1.0;
        for (std::size_t q = s; q <= e; ++q) ranks[order[q]] = r;
        s = e + 1;
    }
    return ranks;
}

inline double spearman(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need paired samples");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t q = 0; q < rx.size(); ++q) {
        sxy += (rx[q] - mx) * (ry[q] - my);
        sxx += (rx[q] - mx) * (rx[q] - mx);
        syy += (ry[q] - my) * (ry[q] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Upper triangle (excluding the diagonal) as a flat vector.
inline std::vector<double> upper_triangle(const SimilarityMatrix &m) {
    std::vector<double> out;
    for (std::size_t a = 0; a < m.n; ++a)
        for (std::size_t b = a + 1; b < m.n; ++b) out.push_back(m(a, b));
    return out;
}

/// Temporal split: events before cutoff_fraction * T train, the rest test.
struct TemporalSplit {
    EventHistory train;
    double cutoff = 0.0;
    std::size_t first_test = 0; ///< index of the first test event in the full history
};

inline TemporalSplit temporal_split(const EventHistory &history, double cutoff_fraction) {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0))
        throw config_error("split fraction must lie in (0, 1)");
    TemporalSplit out;
    out.cutoff = cutoff_fraction * history.horizon();
    out.train = history.prefix(out.cutoff);
    out.train = EventHistory(std::vector<Event>(out.train.events().begin(), out.train.events().end()),
                             out.cutoff, history.num_users(), history.num_items());
    out.first_test = out.train.size();
    return out;
}

/**
 * 1-based rank of the true item for every test event (index >= first_test),
 * each ranked at its own timestamp using only strictly earlier events.
 */
inline std::vector<std::size_t> test_ranks(const ModelParams &params, const ModelConfig &config,
                                           const EventHistory &history, const SocialNetwork &net,
                                           std::size_t first_test, unsigned threads = 1) {
    const std::size_t count = history.size() > first_test ? history.size() - first_test : 0;
    std::vector<std::size_t> ranks(count, 0);
    parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t x = begin; x < end; ++x) {
            const Event &e = history[first_test + x];
            const auto scores = item_scores(params, config, history, net, e.user, e.time);
            // stable rank: items with strictly higher score, or equal score and lower index
            std::size_t r = 1;
            for (std::size_t p = 0; p < scores.size(); ++p)
                if (scores[p] > scores[e.item] || (scores[p] == scores[e.item] && p < e.item)) ++r;
            ranks[x] = r;
        }
    });
    return ranks;
}

struct ReturnTimeCase {
    UserId user = 0;
    double query_time = 0.0;  ///< time of the user's event the prediction starts from
    double actual_time = 0.0; ///< time of the user's next event
};

/// Consecutive pairs of a user's events where the later one is a test event.
inline std::vector<ReturnTimeCase> return_time_cases(const EventHistory &history, double cutoff,
                                                     std::size_t max_cases = 0) {
    std::vector<ReturnTimeCase> out;
    for (UserId u = 0; u < history.num_users(); ++u) {
        auto ev = history.user_events(u);
        for (std::size_t x = 1; x < ev.size(); ++x) {
            const double prev = history[ev[x - 1]].time, next = history[ev[x]].time;
            if (next >= cutoff && next > prev) out.push_back({u, prev, next});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
        return a.query_time != b.query_time ? a.query_time < b.query_time : a.user < b.user;
    });
    if (max_cases > 0 && out.size() > max_cases) {
        // evenly spaced subsample
        std::vector<ReturnTimeCase> sub;
        for (std::size_t x = 0; x < max_cases; ++x) sub.push_back(out[x * out.size() / max_cases]);
        out = std::move(sub);
    }
    return out;
}

/// Mean gap between consecutive events of the same user.
inline double mean_user_gap(const EventHistory &history) {
    double total = 0.0;
    std::size_t count = 0;
    for (UserId u = 0; u < history.num_users(); ++u) {
        auto ev = history.user_events(u);
        for (std::size_t x = 1; x < ev.size(); ++x) {
            total += history[ev[x]].time - history[ev[x - 1]].time;
            ++count;
        }
    }
    if (count == 0) throw data_error("no consecutive same-user events to average");
    return total / static_cast<double>(count);
}

} // namespace rpf
