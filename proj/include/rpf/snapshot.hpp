#pragma once

#include "rpf/inference.hpp"
#include "rpf/model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace rpf {

using nlohmann::json;

// Snapshots are JSON documents of named arrays with explicit shapes.
// Doubles are written in shortest round-trip form, so load(save(x)) == x
// bit for bit.

namespace detail {

inline json indicator_to_json(const PeriodicIndicator &f) {
    return json{{"period", f.period}, {"start", f.start}, {"end", f.end}, {"phase", f.phase}};
}

inline PeriodicIndicator indicator_from_json(const json &j) {
    return {j.at("period").get<double>(), j.at("start").get<double>(), j.at("end").get<double>(),
            j.at("phase").get<double>()};
}

inline json array_json(const std::vector<std::size_t> &shape, const std::vector<double> &data) {
    return json{{"shape", shape}, {"data", data}};
}

inline std::vector<double> array_data(const json &doc, const std::string &name,
                                      const std::vector<std::size_t> &shape) {
    const auto &a = doc.at("arrays").at(name);
    if (a.at("shape").get<std::vector<std::size_t>>() != shape)
        throw data_error("snapshot array '" + name + "' has an unexpected shape");
    auto data = a.at("data").get<std::vector<double>>();
    std::size_t expected = 1;
    for (auto d : shape) expected *= d;
    if (data.size() != expected) throw data_error("snapshot array '" + name + "' has the wrong length");
    return data;
}

inline json gamma_array_json(const std::vector<std::size_t> &shape, const std::vector<GammaParams> &g) {
    std::vector<double> shp(g.size()), rte(g.size());
    for (std::size_t x = 0; x < g.size(); ++x) {
        shp[x] = g[x].shape;
        rte[x] = g[x].rate;
    }
    return json{{"shape", shape}, {"shp", shp}, {"rte", rte}};
}

inline std::vector<GammaParams> gamma_array(const json &doc, const std::string &name,
                                            const std::vector<std::size_t> &shape) {
    const auto &a = doc.at("arrays").at(name);
    if (a.at("shape").get<std::vector<std::size_t>>() != shape)
        throw data_error("state array '" + name + "' has an unexpected shape");
    const auto shp = a.at("shp").get<std::vector<double>>();
    const auto rte = a.at("rte").get<std::vector<double>>();
    std::size_t expected = 1;
    for (auto d : shape) expected *= d;
    if (shp.size() != expected || rte.size() != expected)
        throw data_error("state array '" + name + "' has the wrong length");
    std::vector<GammaParams> out(expected);
    for (std::size_t x = 0; x < expected; ++x) out[x] = {shp[x], rte[x]};
    return out;
}

} // namespace detail

inline json config_to_json(const ModelConfig &c) {
    json user = json::array(), item = json::array();
    for (std::size_t i = 0; i < c.I(); ++i) user.push_back(detail::indicator_to_json(c.basis.user_function(i)));
    for (std::size_t j = 0; j < c.J(); ++j) item.push_back(detail::indicator_to_json(c.basis.item_function(j)));
    const auto &h = c.hyper;
    return json{{"variant", to_string(c.variant)},
                {"K", c.K},
                {"decay", c.kernel.decay()},
                {"basis", {{"user", user}, {"item", item}}},
                {"hyper",
                 {{"theta_shape", h.theta_shape},
                  {"beta_shape", h.beta_shape},
                  {"eta_shape", h.eta_shape},
                  {"eta_rate", h.eta_rate},
                  {"xi_shape", h.xi_shape},
                  {"xi_rate", h.xi_rate},
                  {"tau_shape", h.tau_shape},
                  {"mu_shape", h.mu_shape},
                  {"mu_rate", h.mu_rate}}}};
}

inline ModelConfig config_from_json(const json &j) {
    ModelConfig c;
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.K = j.at("K").get<std::size_t>();
    c.kernel = TriggerKernel(j.at("decay").get<double>());
    std::vector<PeriodicIndicator> user, item;
    for (const auto &f : j.at("basis").at("user")) user.push_back(detail::indicator_from_json(f));
    for (const auto &f : j.at("basis").at("item")) item.push_back(detail::indicator_from_json(f));
    c.basis = TimeBasis(std::move(user), std::move(item));
    const auto &h = j.at("hyper");
    c.hyper = {h.at("theta_shape").get<double>(), h.at("beta_shape").get<double>(),
               h.at("eta_shape").get<double>(),   h.at("eta_rate").get<double>(),
               h.at("xi_shape").get<double>(),    h.at("xi_rate").get<double>(),
               h.at("tau_shape").get<double>(),   h.at("mu_shape").get<double>(),
               h.at("mu_rate").get<double>()};
    c.validate();
    return c;
}

inline json edges_to_json(const SocialNetwork &net) {
    json edges = json::array();
    for (const auto &e : net.edges()) edges.push_back({e.source, e.target});
    return edges;
}

/// Rebuilds a network from a snapshot edge list (edge ids are preserved).
inline SocialNetwork network_from_json(const json &doc) {
    const std::size_t U = doc.at("num_users").get<std::size_t>();
    std::vector<std::pair<UserId, UserId>> follows;
    bool self_loops = false;
    for (const auto &e : doc.at("edges")) {
        const auto source = e.at(0).get<UserId>(), target = e.at(1).get<UserId>();
        if (source == target)
            self_loops = true;
        else
            follows.emplace_back(target, source);
    }
    SocialNetwork net(U, std::move(follows), self_loops);
    if (edges_to_json(net) != doc.at("edges")) throw data_error("snapshot edge list is not in canonical order");
    return net;
}

struct ParamsSnapshot {
    ModelConfig config;
    SocialNetwork network;
    ModelParams params;
};

inline json params_to_json(const ModelParams &p, const ModelConfig &c, const SocialNetwork &net) {
    const std::size_t U = p.num_users(), P = p.num_items(), K = p.K();
    json arrays;
    arrays["theta"] = detail::array_json({U, K, p.theta.dim2()}, p.theta.data());
    arrays["beta"] = detail::array_json({P, K, p.beta.dim2()}, p.beta.data());
    arrays["tau"] = detail::array_json({p.tau.size()}, p.tau);
    arrays["eta"] = detail::array_json({U}, p.eta);
    arrays["xi"] = detail::array_json({P}, p.xi);
    arrays["mu"] = detail::array_json({U}, p.mu);
    return json{{"format", "rpf-params"}, {"version", 1},      {"config", config_to_json(c)},
                {"num_users", U},         {"num_items", P},    {"edges", edges_to_json(net)},
                {"arrays", arrays}};
}

inline ParamsSnapshot params_from_json(const json &doc) {
    if (doc.value("format", "") != "rpf-params") throw data_error("not a parameter snapshot");
    ParamsSnapshot out;
    out.config = config_from_json(doc.at("config"));
    out.network = network_from_json(doc);
    const std::size_t U = doc.at("num_users").get<std::size_t>(), P = doc.at("num_items").get<std::size_t>();
    const std::size_t K = out.config.K, I = out.config.I(), J = out.config.J();
    auto &p = out.params;
    p = ModelParams(U, P, K, I, J, out.network.num_edges());
    p.theta.data() = detail::array_data(doc, "theta", {U, K, I});
    p.beta.data() = detail::array_data(doc, "beta", {P, K, J});
    p.tau = detail::array_data(doc, "tau", {out.network.num_edges()});
    p.eta = detail::array_data(doc, "eta", {U});
    p.xi = detail::array_data(doc, "xi", {P});
    p.mu = detail::array_data(doc, "mu", {U});
    return out;
}

inline json state_to_json(const VariationalState &s, bool with_responsibilities = true) {
    json arrays;
    arrays["theta"] = detail::gamma_array_json({s.theta.dim0(), s.theta.dim1(), s.theta.dim2()}, s.theta.data());
    arrays["beta"] = detail::gamma_array_json({s.beta.dim0(), s.beta.dim1(), s.beta.dim2()}, s.beta.data());
    arrays["tau"] = detail::gamma_array_json({s.tau.size()}, s.tau);
    arrays["eta"] = detail::gamma_array_json({s.eta.size()}, s.eta);
    arrays["xi"] = detail::gamma_array_json({s.xi.size()}, s.xi);
    arrays["mu"] = detail::gamma_array_json({s.mu.size()}, s.mu);
    json doc{{"format", "rpf-state"}, {"version", 1}, {"arrays", arrays}};
    if (with_responsibilities) {
        doc["responsibilities"] = {{"offsets", s.resp_offsets}, {"values", s.resp}};
    }
    return doc;
}

inline VariationalState state_from_json(const json &doc) {
    if (doc.value("format", "") != "rpf-state") throw data_error("not a variational state snapshot");
    const auto &arrays = doc.at("arrays");
    auto shape_of = [&](const char *name) { return arrays.at(name).at("shape").get<std::vector<std::size_t>>(); };
    VariationalState s;
    const auto ts = shape_of("theta"), bs = shape_of("beta");
    if (ts.size() != 3 || bs.size() != 3) throw data_error("state factor arrays must be 3-dimensional");
    s.theta = Array3<GammaParams>(ts[0], ts[1], ts[2]);
    s.theta.data() = detail::gamma_array(doc, "theta", ts);
    s.beta = Array3<GammaParams>(bs[0], bs[1], bs[2]);
    s.beta.data() = detail::gamma_array(doc, "beta", bs);
    s.tau = detail::gamma_array(doc, "tau", shape_of("tau"));
    s.eta = detail::gamma_array(doc, "eta", shape_of("eta"));
    s.xi = detail::gamma_array(doc, "xi", shape_of("xi"));
    s.mu = detail::gamma_array(doc, "mu", shape_of("mu"));
    if (doc.contains("responsibilities")) {
        s.resp_offsets = doc["responsibilities"].at("offsets").get<std::vector<std::size_t>>();
        s.resp = doc["responsibilities"].at("values").get<std::vector<double>>();
    }
    return s;
}

inline json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw data_error("malformed JSON in '" + path + "': " + e.what());
    }
}

inline void write_json_file(const std::string &path, const json &doc) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << doc.dump(1) << '\n';
}

} // namespace rpf
