#pragma once

#include "rpf/basis.hpp"
#include "rpf/common.hpp"
#include "rpf/events.hpp"
#include "rpf/kernel.hpp"
#include "rpf/network.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace rpf {

enum class Variant { HRPF, SRPF, DRPF, DSRPF };

inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::HRPF: return "HRPF";
    case Variant::SRPF: return "SRPF";
    case Variant::DRPF: return "DRPF";
    case Variant::DSRPF: return "DSRPF";
    }
    return "?";
}

inline Variant variant_from_string(const std::string &s) {
    if (s == "HRPF" || s == "hrpf") return Variant::HRPF;
    if (s == "SRPF" || s == "srpf") return Variant::SRPF;
    if (s == "DRPF" || s == "drpf") return Variant::DRPF;
    if (s == "DSRPF" || s == "dsrpf") return Variant::DSRPF;
    throw config_error("unknown variant '" + s + "'");
}

/// Variants whose triggers come from followees rather than the user alone.
inline bool is_social(Variant v) { return v == Variant::SRPF || v == Variant::DSRPF; }

/// Gamma hyperparameters (shape/rate). Defaults: shapes 0.3, rates 1.
struct Hyperparameters {
    double theta_shape = 0.3; ///< a^{theta,shp}
    double beta_shape = 0.3;  ///< a^{beta,shp}
    double eta_shape = 0.3;
    double eta_rate = 1.0;
    double xi_shape = 0.3;
    double xi_rate = 1.0;
    double tau_shape = 0.3;
    double mu_shape = 0.3;
    double mu_rate = 1.0;

    void validate() const {
        for (double v : {theta_shape, beta_shape, eta_shape, eta_rate, xi_shape, xi_rate, tau_shape,
                         mu_shape, mu_rate})
            if (!(v > 0.0) || !std::isfinite(v)) throw config_error("hyperparameters must be positive and finite");
    }
    bool operator==(const Hyperparameters &) const = default;
};

struct ModelConfig {
    Variant variant = Variant::DSRPF;
    std::size_t K = 5;
    TimeBasis basis;
    TriggerKernel kernel;
    Hyperparameters hyper;

    std::size_t I() const { return basis.user_dim(); }
    std::size_t J() const { return basis.item_dim(); }

    void validate() const {
        if (K == 0) throw config_error("latent dimension K must be positive");
        hyper.validate();
        if ((variant == Variant::HRPF || variant == Variant::SRPF) && !basis.is_static())
            throw config_error(to_string(variant) + " requires the static basis (I = J = 1)");
    }

    /// Variant constraints that involve the network.
    void validate_network(const SocialNetwork &net) const {
        if ((variant == Variant::HRPF || variant == Variant::DRPF) && !net.is_self_only())
            throw config_error(to_string(variant) + " requires a self-loop-only network");
    }

    bool operator==(const ModelConfig &) const = default;
};

/// Point values of all latent variables. tau is indexed by network edge id.
struct ModelParams {
    Array3<double> theta; ///< U x K x I
    Array3<double> beta;  ///< P x K x J
    std::vector<double> tau;
    std::vector<double> eta;
    std::vector<double> xi;
    std::vector<double> mu;

    ModelParams() = default;
    ModelParams(std::size_t U, std::size_t P, std::size_t K, std::size_t I, std::size_t J,
                std::size_t edges)
        : theta(U, K, I), beta(P, K, J), tau(edges), eta(U, 1.0), xi(P, 1.0), mu(U, 1.0) {}

    std::size_t num_users() const { return theta.dim0(); }
    std::size_t num_items() const { return beta.dim0(); }
    std::size_t K() const { return theta.dim1(); }

    bool operator==(const ModelParams &) const = default;
};

inline void check_shapes(const ModelParams &params, const ModelConfig &config,
                         const SocialNetwork &net) {
    if (params.K() != config.K || params.theta.dim2() != config.I() ||
        params.beta.dim1() != config.K || params.beta.dim2() != config.J())
        throw config_error("parameter shapes do not match the model configuration");
    if (params.tau.size() != net.num_edges() || params.num_users() != net.num_users())
        throw config_error("parameter shapes do not match the network");
}

/// Base factor (k, i, j) of the complete intensity.
struct BaseFactor {
    std::size_t k = 0, i = 0, j = 0;
};
/// Prior event (index into the history) acting as trigger.
struct EventFactor {
    std::size_t event = 0;
};
using TriggerSource = std::variant<BaseFactor, EventFactor>;

/// sum_{k,i,j} theta_uk^i beta_pk^j h_i(t) l_j(t)
inline double base_rate(const ModelParams &params, const TimeBasis &basis, UserId u, ItemId p,
                        double t) {
    const std::size_t K = params.K(), I = basis.user_dim(), J = basis.item_dim();
    const auto h = basis.user_values(t);
    const auto l = basis.item_values(t);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < I; ++i) a += params.theta(u, k, i) * h[i];
        for (std::size_t j = 0; j < J; ++j) b += params.beta(p, k, j) * l[j];
        total += a * b;
    }
    return total;
}

/// Triggered part: events on p strictly before t by users in N_u.
inline double trigger_rate(const ModelParams &params, const TriggerKernel &kernel,
                           const EventHistory &history, const SocialNetwork &net, UserId u,
                           ItemId p, double t) {
    auto on_item = history.item_events(p);
    const std::size_t end = history.count_before(on_item, t);
    double total = 0.0;
    for (std::size_t k = 0; k < end; ++k) {
        const Event &e = history[on_item[k]];
        if (auto edge = net.find_edge(e.user, u)) total += params.tau[*edge] * kernel.value(e.time, t);
    }
    return total;
}

inline void check_user_item(const EventHistory &history, UserId u, ItemId p) {
    if (u >= history.num_users() || p >= history.num_items())
        throw std::out_of_range("user or item index out of range");
}

/// lambda_up(t): base rate plus triggers from admissible prior events.
inline double intensity(const ModelParams &params, const ModelConfig &config,
                        const EventHistory &history, const SocialNetwork &net, UserId u, ItemId p,
                        double t) {
    check_user_item(history, u, p);
    return base_rate(params, config.basis, u, p, t) +
           trigger_rate(params, config.kernel, history, net, u, p, t);
}

/// Whether `source` is an admissible triggering factor for (u, p, t).
inline bool is_admissible(const ModelConfig &config, const EventHistory &history,
                          const SocialNetwork &net, UserId u, ItemId p, double t,
                          const TriggerSource &source) {
    if (const auto *b = std::get_if<BaseFactor>(&source))
        return b->k < config.K && b->i < config.I() && b->j < config.J();
    const auto &ev = std::get<EventFactor>(source);
    if (ev.event >= history.size()) return false;
    const Event &e = history[ev.event];
    return e.item == p && e.time < t && net.find_edge(e.user, u).has_value();
}

/// All admissible factors: K*I*J base factors then prior trigger events.
inline std::vector<TriggerSource> admissible_sources(const ModelConfig &config,
                                                     const EventHistory &history,
                                                     const SocialNetwork &net, UserId u, ItemId p,
                                                     double t) {
    std::vector<TriggerSource> out;
    for (std::size_t k = 0; k < config.K; ++k)
        for (std::size_t i = 0; i < config.I(); ++i)
            for (std::size_t j = 0; j < config.J(); ++j) out.push_back(BaseFactor{k, i, j});
    auto on_item = history.item_events(p);
    const std::size_t end = history.count_before(on_item, t);
    for (std::size_t k = 0; k < end; ++k)
        if (net.find_edge(history[on_item[k]].user, u)) out.push_back(EventFactor{on_item[k]});
    return out;
}

/// Summand of intensity() attributable to a single triggering factor.
inline double complete_intensity(const ModelParams &params, const ModelConfig &config,
                                 const EventHistory &history, const SocialNetwork &net, UserId u,
                                 ItemId p, double t, const TriggerSource &source) {
    check_user_item(history, u, p);
    if (!is_admissible(config, history, net, u, p, t, source))
        throw std::invalid_argument("inadmissible triggering factor");
    if (const auto *b = std::get_if<BaseFactor>(&source))
        return params.theta(u, b->k, b->i) * params.beta(p, b->k, b->j) *
               config.basis.user_value(b->i, t) * config.basis.item_value(b->j, t);
    const Event &e = history[std::get<EventFactor>(source).event];
    return params.tau[*net.find_edge(e.user, u)] * config.kernel.value(e.time, t);
}

/// sum_e G(T - t_e) per source user: the exposure multiplying every outgoing tau.
inline std::vector<double> kernel_exposure(const EventHistory &history, const TriggerKernel &kernel,
                                           double T) {
    std::vector<double> out(history.num_users(), 0.0);
    for (const auto &e : history.events()) out[e.user] += kernel.integral(T - e.time);
    return out;
}

/// Closed-form compensator sum_{u,p} int_0^T lambda_up(s) ds.
inline double survival(const ModelParams &params, const ModelConfig &config,
                       const EventHistory &history, const SocialNetwork &net,
                       const BasisIntegrals &F) {
    const std::size_t U = params.num_users(), P = params.num_items(), K = config.K;
    const std::size_t I = config.I(), J = config.J();
    // sum_p beta_pk^j
    std::vector<double> beta_sum(K * J, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < J; ++j) beta_sum[k * J + j] += params.beta(p, k, j);
    double base = 0.0;
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < I; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < J; ++j) s += F(i, j) * beta_sum[k * J + j];
                base += params.theta(u, k, i) * s;
            }
    const auto exposure = kernel_exposure(history, config.kernel, F.horizon());
    double triggered = 0.0;
    for (std::size_t id = 0; id < net.num_edges(); ++id)
        triggered += params.tau[id] * exposure[net.edge(id).source];
    return base + triggered;
}

/**
 * Point-process log-likelihood: sum of log intensities at the events minus
 * the compensator over [0, T]. Throws numerical_error when an observed
 * event has zero intensity.
 */
inline double log_likelihood(const ModelParams &params, const ModelConfig &config,
                             const EventHistory &history, const SocialNetwork &net) {
    check_shapes(params, config, net);
    double ll = 0.0;
    for (std::size_t n = 0; n < history.size(); ++n) {
        const Event &e = history[n];
        const double lam = intensity(params, config, history, net, e.user, e.item, e.time);
        if (!(lam > 0.0))
            throw numerical_error("zero intensity at observed event " + std::to_string(n) +
                                  " (log-likelihood is -infinity)");
        ll += std::log(lam);
    }
    const BasisIntegrals F(config.basis, history.horizon());
    return ll - survival(params, config, history, net, F);
}

/**
 * Draws eta, xi, mu from their hyperpriors, then theta ~ Gamma(a_theta, eta_u),
 * beta ~ Gamma(a_beta, xi_p), tau_vu ~ Gamma(tau_shape, mu_v). Deterministic
 * given the seed.
 */
inline ModelParams sample_params_from_prior(const ModelConfig &config, const SocialNetwork &net,
                                            std::size_t num_items, std::uint64_t seed) {
    config.validate();
    const auto &h = config.hyper;
    const std::size_t U = net.num_users(), P = num_items, K = config.K;
    const std::size_t I = config.I(), J = config.J();
    std::mt19937_64 rng(seed);
    auto gamma = [&rng](double shape, double rate) {
        return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
    };
    ModelParams out(U, P, K, I, J, net.num_edges());
    for (std::size_t u = 0; u < U; ++u) out.eta[u] = gamma(h.eta_shape, h.eta_rate);
    for (std::size_t p = 0; p < P; ++p) out.xi[p] = gamma(h.xi_shape, h.xi_rate);
    for (std::size_t u = 0; u < U; ++u) out.mu[u] = gamma(h.mu_shape, h.mu_rate);
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < I; ++i) out.theta(u, k, i) = gamma(h.theta_shape, out.eta[u]);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < J; ++j) out.beta(p, k, j) = gamma(h.beta_shape, out.xi[p]);
    for (std::size_t id = 0; id < net.num_edges(); ++id)
        out.tau[id] = gamma(h.tau_shape, out.mu[net.edge(id).source]);
    return out;
}

} // namespace rpf
