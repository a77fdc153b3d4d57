#pragma once

#include "rpf/model.hpp"
#include "rpf/special.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace rpf {

struct FitOptions {
    /// Stop when |elbo_t - elbo_{t-1}| <= epsilon * |elbo_{t-1}|.
    double epsilon = 1e-4;
    std::size_t max_iters = 500;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    /// Trigger candidates of an event lie within candidate_window / decay time
    /// units before it. Non-positive or infinite disables truncation.
    double candidate_window = 10.0;
    /// Lower clamp for every updated gamma rate.
    double rate_floor = 1e-12;
};

/**
 * Per-event support of the triggering-factor distribution, in CSR layout.
 *
 * For event n the support is the base factors (k, i, j) with h_i(t_n) and
 * l_j(t_n) nonzero, ordered k-major over the active user and item basis
 * indices, followed by the admissible prior events on the same item by
 * followees of u_n (strictly earlier, within the candidate window).
 */
class FactorSupport {
  public:
    FactorSupport() = default;

    FactorSupport(const EventHistory &history, const SocialNetwork &net, const ModelConfig &config,
                  double candidate_window)
        : K_(config.K) {
        const std::size_t M = history.size();
        const double max_lag = (candidate_window > 0.0 && std::isfinite(candidate_window))
                                   ? candidate_window / config.kernel.decay()
                                   : std::numeric_limits<double>::infinity();
        active_offsets_.reserve(M + 1);
        active_offsets_.push_back({0, 0});
        cand_offsets_.reserve(M + 1);
        cand_offsets_.push_back(0);
        resp_offsets_.reserve(M + 1);
        resp_offsets_.push_back(0);

        for (std::size_t n = 0; n < M; ++n) {
            const Event &e = history[n];
            for (std::size_t i = 0; i < config.I(); ++i)
                if (const double h = config.basis.user_value(i, e.time); h > 0.0) {
                    active_i_.push_back(i);
                    log_h_.push_back(std::log(h));
                }
            for (std::size_t j = 0; j < config.J(); ++j)
                if (const double l = config.basis.item_value(j, e.time); l > 0.0) {
                    active_j_.push_back(j);
                    log_l_.push_back(std::log(l));
                }
            active_offsets_.push_back({active_i_.size(), active_j_.size()});

            auto on_item = history.item_events(e.item);
            std::size_t k = history.count_before(on_item, e.time);
            while (k > 0) {
                --k;
                const Event &src = history[on_item[k]];
                if (e.time - src.time > max_lag) break;
                if (auto edge = net.find_edge(src.user, e.user)) {
                    cand_event_.push_back(on_item[k]);
                    cand_edge_.push_back(*edge);
                    cand_log_kernel_.push_back(-config.kernel.decay() * (e.time - src.time));
                }
            }
            cand_offsets_.push_back(cand_event_.size());
            const std::size_t width = K_ * num_active_i(n) * num_active_j(n) + num_candidates(n);
            if (width == 0)
                throw numerical_error("event " + std::to_string(n) + " has an empty triggering-factor support");
            resp_offsets_.push_back(resp_offsets_.back() + width);
        }
    }

    std::size_t num_events() const { return cand_offsets_.empty() ? 0 : cand_offsets_.size() - 1; }
    std::size_t K() const { return K_; }
    std::size_t num_active_i(std::size_t n) const { return active_offsets_[n + 1].first - active_offsets_[n].first; }
    std::size_t num_active_j(std::size_t n) const { return active_offsets_[n + 1].second - active_offsets_[n].second; }
    std::size_t active_i(std::size_t n, std::size_t a) const { return active_i_[active_offsets_[n].first + a]; }
    std::size_t active_j(std::size_t n, std::size_t b) const { return active_j_[active_offsets_[n].second + b]; }
    double log_h(std::size_t n, std::size_t a) const { return log_h_[active_offsets_[n].first + a]; }
    double log_l(std::size_t n, std::size_t b) const { return log_l_[active_offsets_[n].second + b]; }
    std::size_t num_base(std::size_t n) const { return K_ * num_active_i(n) * num_active_j(n); }

    std::size_t num_candidates(std::size_t n) const { return cand_offsets_[n + 1] - cand_offsets_[n]; }
    std::size_t candidate_event(std::size_t n, std::size_t c) const { return cand_event_[cand_offsets_[n] + c]; }
    std::size_t candidate_edge(std::size_t n, std::size_t c) const { return cand_edge_[cand_offsets_[n] + c]; }
    double candidate_log_kernel(std::size_t n, std::size_t c) const { return cand_log_kernel_[cand_offsets_[n] + c]; }
    std::size_t total_candidates() const { return cand_event_.size(); }

    std::size_t width(std::size_t n) const { return resp_offsets_[n + 1] - resp_offsets_[n]; }
    const std::vector<std::size_t> &resp_offsets() const { return resp_offsets_; }

    /// The support of event n as triggering factors, in layout order.
    std::vector<TriggerSource> sources(std::size_t n) const {
        std::vector<TriggerSource> out;
        for (std::size_t k = 0; k < K_; ++k)
            for (std::size_t a = 0; a < num_active_i(n); ++a)
                for (std::size_t b = 0; b < num_active_j(n); ++b)
                    out.push_back(BaseFactor{k, active_i(n, a), active_j(n, b)});
        for (std::size_t c = 0; c < num_candidates(n); ++c) out.push_back(EventFactor{candidate_event(n, c)});
        return out;
    }

  private:
    std::size_t K_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> active_offsets_;
    std::vector<std::size_t> active_i_, active_j_;
    std::vector<double> log_h_, log_l_;
    std::vector<std::size_t> cand_offsets_, cand_event_, cand_edge_;
    std::vector<double> cand_log_kernel_;
    std::vector<std::size_t> resp_offsets_;
};

/// Gamma surrogates for every latent variable plus trigger responsibilities.
struct VariationalState {
    Array3<GammaParams> theta; ///< U x K x I
    Array3<GammaParams> beta;  ///< P x K x J
    std::vector<GammaParams> tau;
    std::vector<GammaParams> eta;
    std::vector<GammaParams> xi;
    std::vector<GammaParams> mu;
    /// Flat responsibilities; event n owns [resp_offsets[n], resp_offsets[n+1]).
    std::vector<double> resp;
    std::vector<std::size_t> resp_offsets;

    std::span<const double> responsibilities(std::size_t n) const {
        return std::span<const double>(resp).subspan(resp_offsets[n], resp_offsets[n + 1] - resp_offsets[n]);
    }

    bool operator==(const VariationalState &) const = default;
};

/// Variational means as point estimates.
inline ModelParams expected_params(const VariationalState &s) {
    ModelParams out;
    out.theta = Array3<double>(s.theta.dim0(), s.theta.dim1(), s.theta.dim2());
    out.beta = Array3<double>(s.beta.dim0(), s.beta.dim1(), s.beta.dim2());
    for (std::size_t x = 0; x < s.theta.size(); ++x) out.theta.data()[x] = s.theta.data()[x].mean();
    for (std::size_t x = 0; x < s.beta.size(); ++x) out.beta.data()[x] = s.beta.data()[x].mean();
    auto means = [](const std::vector<GammaParams> &g) {
        std::vector<double> v(g.size());
        for (std::size_t x = 0; x < g.size(); ++x) v[x] = g[x].mean();
        return v;
    };
    out.tau = means(s.tau);
    out.eta = means(s.eta);
    out.xi = means(s.xi);
    out.mu = means(s.mu);
    return out;
}

/// ELBO split into the data term, the compensator and one term per latent
/// block (expected log prior plus entropy of q).
struct ElboTerms {
    double data = 0.0;     ///< E[sum_n ln lambda*(t_n, s_n)] + H(q(S))
    double survival = 0.0; ///< E[compensator]
    double theta = 0.0, beta = 0.0, tau = 0.0, eta = 0.0, xi = 0.0, mu = 0.0;

    double total() const { return data - survival + theta + beta + tau + eta + xi + mu; }
};

struct FitResult {
    ModelParams params;
    VariationalState state;
    std::vector<double> trace;
    bool converged = false;
    std::size_t iterations = 0;
};

/**
 * Coordinate-ascent mean-field inference for the dynamic social model,
 * which covers every variant (static basis and/or self-loop network).
 * Holds references to the data; they must outlive the object.
 */
class VariationalInference {
  public:
    VariationalInference(const EventHistory &history, const SocialNetwork &net,
                         const ModelConfig &config, FitOptions options = {})
        : history_(history), net_(net), config_(config), options_(options) {
        config_.validate();
        config_.validate_network(net_);
        if (net_.num_users() != history_.num_users())
            throw config_error("network and event log disagree on the number of users");
        F_ = BasisIntegrals(config_.basis, history_.horizon());
        exposure_ = kernel_exposure(history_, config_.kernel, history_.horizon());
        support_ = FactorSupport(history_, net_, config_, options_.candidate_window);
    }

    const FactorSupport &support() const { return support_; }
    const BasisIntegrals &integrals() const { return F_; }
    const FitOptions &options() const { return options_; }

    /// Prior hyperparameters perturbed by x Uniform(0.9, 1.1) per entry.
    VariationalState initial_state(std::uint64_t seed) const {
        const auto &h = config_.hyper;
        const std::size_t U = history_.num_users(), P = history_.num_items(), K = config_.K;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> jitter(0.9, 1.1);
        auto init = [&](double shape, double rate) { return GammaParams{shape * jitter(rng), rate * jitter(rng)}; };
        VariationalState s;
        s.eta.resize(U);
        s.xi.resize(P);
        s.mu.resize(U);
        for (auto &g : s.eta) g = init(h.eta_shape, h.eta_rate);
        for (auto &g : s.xi) g = init(h.xi_shape, h.xi_rate);
        for (auto &g : s.mu) g = init(h.mu_shape, h.mu_rate);
        s.theta = Array3<GammaParams>(U, K, config_.I());
        s.beta = Array3<GammaParams>(P, K, config_.J());
        for (std::size_t u = 0; u < U; ++u)
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i = 0; i < config_.I(); ++i)
                    s.theta(u, k, i) = init(h.theta_shape, h.eta_shape / h.eta_rate);
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t j = 0; j < config_.J(); ++j)
                    s.beta(p, k, j) = init(h.beta_shape, h.xi_shape / h.xi_rate);
        s.tau.resize(net_.num_edges());
        for (auto &g : s.tau) g = init(h.tau_shape, h.mu_shape / h.mu_rate);
        s.resp_offsets = support_.resp_offsets();
        s.resp.assign(s.resp_offsets.back(), 0.0);
        for (std::size_t n = 0; n < support_.num_events(); ++n) {
            const double w = 1.0 / static_cast<double>(support_.width(n));
            std::fill(s.resp.begin() + static_cast<std::ptrdiff_t>(s.resp_offsets[n]),
                      s.resp.begin() + static_cast<std::ptrdiff_t>(s.resp_offsets[n + 1]), w);
        }
        return s;
    }

    /**
     * Responsibilities: base factor (k, i, j) gets
     * exp(E ln theta_uki + E ln beta_pkj) h_i(t_n) l_j(t_n), candidate m gets
     * exp(E ln tau) g(t_m, t_n); normalised per event.
     */
    void local_step(VariationalState &s) const {
        const auto ln_theta = mean_logs(s.theta.data());
        const auto ln_beta = mean_logs(s.beta.data());
        const auto ln_tau = mean_logs(s.tau);
        const std::size_t K = config_.K, I = config_.I(), J = config_.J();
        parallel_for(history_.size(), options_.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                const Event &e = history_[n];
                double *r = s.resp.data() + s.resp_offsets[n];
                const std::size_t ai = support_.num_active_i(n), aj = support_.num_active_j(n);
                std::size_t x = 0;
                for (std::size_t k = 0; k < K; ++k)
                    for (std::size_t a = 0; a < ai; ++a) {
                        const double lt = ln_theta[(e.user * K + k) * I + support_.active_i(n, a)] + support_.log_h(n, a);
                        for (std::size_t b = 0; b < aj; ++b)
                            r[x++] = lt + ln_beta[(e.item * K + k) * J + support_.active_j(n, b)] + support_.log_l(n, b);
                    }
                for (std::size_t c = 0; c < support_.num_candidates(n); ++c)
                    r[x++] = ln_tau[support_.candidate_edge(n, c)] + support_.candidate_log_kernel(n, c);
                normalize_log(r, x);
            }
        });
    }

    /// Conjugate updates, in order: per user mu, eta, incoming tau, theta;
    /// then per item xi, beta.
    void global_step(VariationalState &s) const {
        const auto &h = config_.hyper;
        const std::size_t U = history_.num_users(), P = history_.num_items();
        const std::size_t K = config_.K, I = config_.I(), J = config_.J();
        const double floor = options_.rate_floor;

        Array3<double> theta_count(U, K, I), beta_count(P, K, J);
        std::vector<double> edge_count(net_.num_edges(), 0.0);
        for (std::size_t n = 0; n < history_.size(); ++n) {
            const Event &e = history_[n];
            const double *r = s.resp.data() + s.resp_offsets[n];
            const std::size_t ai = support_.num_active_i(n), aj = support_.num_active_j(n);
            std::size_t x = 0;
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t a = 0; a < ai; ++a)
                    for (std::size_t b = 0; b < aj; ++b, ++x) {
                        theta_count(e.user, k, support_.active_i(n, a)) += r[x];
                        beta_count(e.item, k, support_.active_j(n, b)) += r[x];
                    }
            for (std::size_t c = 0; c < support_.num_candidates(n); ++c, ++x)
                edge_count[support_.candidate_edge(n, c)] += r[x];
        }

        std::vector<double> beta_sum(K * J, 0.0);
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t j = 0; j < J; ++j) beta_sum[k * J + j] += s.beta(p, k, j).mean();

        for (std::size_t u = 0; u < U; ++u) {
            auto followers = net_.followers(u);
            double tau_out = 0.0;
            for (const auto &link : followers) tau_out += s.tau[link.edge].mean();
            s.mu[u] = {h.mu_shape + static_cast<double>(followers.size()) * h.tau_shape,
                       std::max(floor, h.mu_rate + tau_out)};

            double theta_total = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i = 0; i < I; ++i) theta_total += s.theta(u, k, i).mean();
            s.eta[u] = {h.eta_shape + static_cast<double>(K * I) * h.theta_shape,
                        std::max(floor, h.eta_rate + theta_total)};

            for (const auto &link : net_.followees(u))
                s.tau[link.edge] = {h.tau_shape + edge_count[link.edge],
                                    std::max(floor, exposure_[link.user] + s.mu[link.user].mean())};

            const double eta_mean = s.eta[u].mean();
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i = 0; i < I; ++i) {
                    double rate = eta_mean;
                    for (std::size_t j = 0; j < J; ++j) rate += F_(i, j) * beta_sum[k * J + j];
                    s.theta(u, k, i) = {h.theta_shape + theta_count(u, k, i), std::max(floor, rate)};
                }
        }

        std::vector<double> theta_sum(K * I, 0.0);
        for (std::size_t u = 0; u < U; ++u)
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i = 0; i < I; ++i) theta_sum[k * I + i] += s.theta(u, k, i).mean();

        for (std::size_t p = 0; p < P; ++p) {
            double beta_total = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t j = 0; j < J; ++j) beta_total += s.beta(p, k, j).mean();
            s.xi[p] = {h.xi_shape + static_cast<double>(K * J) * h.beta_shape,
                       std::max(floor, h.xi_rate + beta_total)};
            const double xi_mean = s.xi[p].mean();
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t j = 0; j < J; ++j) {
                    double rate = xi_mean;
                    for (std::size_t i = 0; i < I; ++i) rate += F_(i, j) * theta_sum[k * I + i];
                    s.beta(p, k, j) = {h.beta_shape + beta_count(p, k, j), std::max(floor, rate)};
                }
        }
    }

    ElboTerms elbo_terms(const VariationalState &s) const {
        const auto &h = config_.hyper;
        const std::size_t U = history_.num_users(), P = history_.num_items();
        const std::size_t K = config_.K, I = config_.I(), J = config_.J();
        const auto ln_theta = mean_logs(s.theta.data());
        const auto ln_beta = mean_logs(s.beta.data());
        const auto ln_tau = mean_logs(s.tau);
        ElboTerms t;

        std::vector<double> per_event(history_.size(), 0.0);
        parallel_for(history_.size(), options_.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                const Event &e = history_[n];
                const double *r = s.resp.data() + s.resp_offsets[n];
                const std::size_t ai = support_.num_active_i(n), aj = support_.num_active_j(n);
                double acc = 0.0;
                std::size_t x = 0;
                for (std::size_t k = 0; k < K; ++k)
                    for (std::size_t a = 0; a < ai; ++a)
                        for (std::size_t b = 0; b < aj; ++b, ++x) {
                            if (r[x] <= 0.0) continue;
                            const double lf = ln_theta[(e.user * K + k) * I + support_.active_i(n, a)] +
                                              ln_beta[(e.item * K + k) * J + support_.active_j(n, b)] +
                                              support_.log_h(n, a) + support_.log_l(n, b);
                            acc += r[x] * (lf - std::log(r[x]));
                        }
                for (std::size_t c = 0; c < support_.num_candidates(n); ++c, ++x) {
                    if (r[x] <= 0.0) continue;
                    const double lf = ln_tau[support_.candidate_edge(n, c)] + support_.candidate_log_kernel(n, c);
                    acc += r[x] * (lf - std::log(r[x]));
                }
                per_event[n] = acc;
            }
        });
        for (double v : per_event) t.data += v;

        std::vector<double> beta_sum(K * J, 0.0);
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t j = 0; j < J; ++j) beta_sum[k * J + j] += s.beta(p, k, j).mean();
        for (std::size_t u = 0; u < U; ++u)
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i = 0; i < I; ++i) {
                    double w = 0.0;
                    for (std::size_t j = 0; j < J; ++j) w += F_(i, j) * beta_sum[k * J + j];
                    t.survival += s.theta(u, k, i).mean() * w;
                }
        for (std::size_t id = 0; id < net_.num_edges(); ++id)
            t.survival += s.tau[id].mean() * exposure_[net_.edge(id).source];

        auto top_level = [](const GammaParams &q, double shape, double rate) {
            return expected_gamma_logpdf(shape, std::log(rate), rate, q.mean_log(), q.mean()) + q.entropy();
        };
        auto child = [](const GammaParams &q, double shape, const GammaParams &parent) {
            return expected_gamma_logpdf(shape, parent.mean_log(), parent.mean(), q.mean_log(), q.mean()) +
                   q.entropy();
        };
        for (std::size_t u = 0; u < U; ++u) {
            t.eta += top_level(s.eta[u], h.eta_shape, h.eta_rate);
            t.mu += top_level(s.mu[u], h.mu_shape, h.mu_rate);
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i = 0; i < I; ++i) t.theta += child(s.theta(u, k, i), h.theta_shape, s.eta[u]);
        }
        for (std::size_t p = 0; p < P; ++p) {
            t.xi += top_level(s.xi[p], h.xi_shape, h.xi_rate);
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t j = 0; j < J; ++j) t.beta += child(s.beta(p, k, j), h.beta_shape, s.xi[p]);
        }
        for (std::size_t id = 0; id < net_.num_edges(); ++id)
            t.tau += child(s.tau[id], h.tau_shape, s.mu[net_.edge(id).source]);
        return t;
    }

    double elbo(const VariationalState &s) const {
        const double v = elbo_terms(s).total();
        if (!std::isfinite(v)) throw numerical_error("non-finite ELBO");
        return v;
    }

    using IterationCallback = std::function<void(std::size_t iteration, const VariationalState &, double elbo)>;

    /// Alternates local and global steps until the relative ELBO change
    /// drops below epsilon or max_iters sweeps have run.
    FitResult fit(const IterationCallback &on_iteration = {}) const {
        if (history_.empty()) throw data_error("cannot fit an empty event history");
        FitResult out;
        out.state = initial_state(options_.seed);
        double previous = 0.0;
        for (std::size_t it = 1; it <= options_.max_iters; ++it) {
            local_step(out.state);
            global_step(out.state);
            const double value = elbo(out.state);
            out.trace.push_back(value);
            out.iterations = it;
            if (on_iteration) on_iteration(it, out.state, value);
            if (it > 1 && std::abs(value - previous) <= options_.epsilon * std::abs(previous)) {
                out.converged = true;
                break;
            }
            previous = value;
        }
        out.params = expected_params(out.state);
        return out;
    }

  private:
    static std::vector<double> mean_logs(const std::vector<GammaParams> &g) {
        std::vector<double> out(g.size());
        for (std::size_t x = 0; x < g.size(); ++x) out[x] = g[x].mean_log();
        return out;
    }

    static void normalize_log(double *r, std::size_t n) {
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n; ++x) hi = std::max(hi, r[x]);
        double total = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            r[x] = std::exp(r[x] - hi);
            total += r[x];
        }
        for (std::size_t x = 0; x < n; ++x) r[x] /= total;
    }

    const EventHistory &history_;
    const SocialNetwork &net_;
    ModelConfig config_;
    FitOptions options_;
    BasisIntegrals F_;
    std::vector<double> exposure_;
    FactorSupport support_;
};

inline FitResult fit(const EventHistory &history, const SocialNetwork &net, const ModelConfig &config,
                     const FitOptions &options = {},
                     const VariationalInference::IterationCallback &on_iteration = {}) {
    return VariationalInference(history, net, config, options).fit(on_iteration);
}

} // namespace rpf
