// rpf: simulate, fit, recommend, predict-return, evaluate, diagnose.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numerical failure.

#include "rpf/rpf.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rpf;

namespace {

/// Options bound per command, so a run's effective values can be written
/// back out at full precision.
class Recorder {
  public:
    template <typename T>
    CLI::Option *bind(CLI::App *cmd, const std::string &flag, T &value, const std::string &help = "") {
        auto *opt = cmd->add_option(flag, value, help)->capture_default_str();
        writers_[cmd].push_back([flag, &value](std::ostream &out) {
            if constexpr (std::is_same_v<T, std::optional<double>>)
                if (!value) return;
            out << flag.substr(2) << '=';
            write_value(out, value);
            out << '\n';
        });
        return opt;
    }

    CLI::Option *bind_flag(CLI::App *cmd, const std::string &flag, bool &value, const std::string &help = "") {
        auto *opt = cmd->add_flag(flag, value, help);
        writers_[cmd].push_back([flag, &value](std::ostream &out) {
            out << flag.substr(2) << '=' << (value ? "true" : "false") << '\n';
        });
        return opt;
    }

    void write(std::ostream &out, const CLI::App *cmd) const {
        out.precision(17);
        if (auto it = writers_.find(cmd); it != writers_.end())
            for (const auto &w : it->second) w(out);
    }

  private:
    template <typename T> static void write_value(std::ostream &out, const T &v) {
        if constexpr (std::is_same_v<T, std::string>)
            out << '"' << v << '"';
        else if constexpr (std::is_same_v<T, std::optional<double>>)
            out << *v;
        else if constexpr (std::is_same_v<T, std::vector<std::size_t>> ||
                             std::is_same_v<T, std::vector<std::string>>) {
            out << '"';
            for (std::size_t x = 0; x < v.size(); ++x) out << (x ? "," : "") << v[x];
            out << '"';
        } else
            out << v;
    }

    std::map<const CLI::App *, std::vector<std::function<void(std::ostream &)>>> writers_;
};

Recorder recorder;

struct CommonOpts {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string output = ".";
};

struct ModelOpts {
    std::string variant = "DSRPF";
    std::size_t K = 5;
    std::string user_basis = "static";
    std::string item_basis = "static";
    double seconds_per_unit = 86400.0;
    double epoch_offset = 0.0;
    double decay = std::numbers::ln2;
    Hyperparameters hyper;

    ModelConfig build() const {
        ModelConfig c;
        c.variant = variant_from_string(variant);
        c.K = K;
        c.basis = TimeBasis::make(basis_kind_from_string(user_basis), basis_kind_from_string(item_basis),
                                  seconds_per_unit, epoch_offset);
        c.kernel = TriggerKernel(decay);
        c.hyper = hyper;
        c.validate();
        return c;
    }
};

struct DataOpts {
    std::string events;
    std::string network;
    std::optional<double> horizon;
    bool string_ids = false;
};

void add_model_options(CLI::App *cmd, ModelOpts &m) {
    recorder.bind(cmd, "--variant", m.variant, "HRPF, SRPF, DRPF or DSRPF");
    recorder.bind(cmd, "--K", m.K, "latent dimension");
    recorder.bind(cmd, "--user-basis", m.user_basis, "static or hour_day");
    recorder.bind(cmd, "--item-basis", m.item_basis, "static or hour_day");
    recorder.bind(cmd, "--seconds-per-unit", m.seconds_per_unit, "seconds in one time unit");
    recorder.bind(cmd, "--epoch-offset", m.epoch_offset, "seconds since a Monday 00:00 at t = 0");
    recorder.bind(cmd, "--decay", m.decay, "kernel decay rate");
    auto &h = m.hyper;
    recorder.bind(cmd, "--theta-shape", h.theta_shape);
    recorder.bind(cmd, "--beta-shape", h.beta_shape);
    recorder.bind(cmd, "--eta-shape", h.eta_shape);
    recorder.bind(cmd, "--eta-rate", h.eta_rate);
    recorder.bind(cmd, "--xi-shape", h.xi_shape);
    recorder.bind(cmd, "--xi-rate", h.xi_rate);
    recorder.bind(cmd, "--tau-shape", h.tau_shape);
    recorder.bind(cmd, "--mu-shape", h.mu_shape);
    recorder.bind(cmd, "--mu-rate", h.mu_rate);
}

void add_data_options(CLI::App *cmd, DataOpts &d, bool need_events = true) {
    auto *ev = recorder.bind(cmd, "--events", d.events, "user_id,item_id,timestamp log");
    if (need_events) ev->required();
    recorder.bind(cmd, "--network", d.network, "follower_id,followee_id edge list");
    recorder.bind(cmd, "--horizon", d.horizon, "observation window end T (default: just past the last event)");
    recorder.bind_flag(cmd, "--string-ids", d.string_ids,
                  "intern ids in first-seen order instead of reading them as dense indices");
}

struct Dataset {
    LoadedEvents events;
    SocialNetwork network;
};

Dataset load_dataset(const DataOpts &d, Variant variant, std::size_t num_users = 0, std::size_t num_items = 0) {
    LoadOptions lo;
    lo.horizon = d.horizon;
    lo.dense_ids = !d.string_ids;
    lo.num_users = num_users;
    lo.num_items = num_items;
    Dataset out;
    out.events = load_events_file(d.events, lo);
    const std::size_t U = out.events.history.num_users();
    if (is_social(variant)) {
        if (d.network.empty()) throw config_error(to_string(variant) + " needs a --network file");
        out.network = load_network_file(d.network, U, d.string_ids ? &out.events.users : nullptr);
    } else {
        if (!d.network.empty())
            std::cerr << "warning: " << to_string(variant) << " ignores the network file\n";
        out.network = SocialNetwork::self_only(U);
    }
    return out;
}

fs::path output_dir(const CommonOpts &c) {
    fs::path dir(c.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw data_error("cannot create output directory '" + c.output + "'");
    return dir;
}

std::ofstream open_out(const fs::path &path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path.string() + "'");
    out.precision(17);
    return out;
}

/// Writes the common flags and the invoked subcommand's options; the file
/// can be passed back through --config to repeat the run.
void persist_config(const CLI::App &app, const fs::path &dir) {
    auto out = open_out(dir / "run.ini");
    recorder.write(out, app.get_parent());
    out << '[' << app.get_name() << "]\n";
    recorder.write(out, &app);
}

void write_map(const IndexMap &map, const fs::path &path, const char *header) {
    auto out = open_out(path);
    out << header << ",index\n";
    map.write(out);
}

ParamsSnapshot load_params(const std::string &path) { return params_from_json(read_json_file(path)); }

/// Loads the data a snapshot was fitted on and checks that the shapes agree.
Dataset load_for_snapshot(const DataOpts &d, const ParamsSnapshot &snap) {
    Dataset data = load_dataset(d, snap.config.variant, snap.params.num_users(), snap.params.num_items());
    const auto &h = data.events.history;
    if (h.num_users() != snap.params.num_users() || h.num_items() != snap.params.num_items())
        throw data_error("event log and parameter snapshot disagree on the number of users or items");
    if (!(data.network == snap.network))
        throw data_error("network differs from the one stored in the parameter snapshot");
    return data;
}

UserId resolve_user(const Dataset &d, const std::string &key) {
    auto id = d.events.users.find(key);
    if (!id) throw data_error("unknown user '" + key + "' (cold start is not supported)");
    return *id;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    ModelOpts model;
    std::size_t users = 50, items = 50;
    double horizon = 100.0;
    double avg_degree = 5.0;
    std::string network;
    std::string params;
    std::size_t max_events = 10'000'000;
    double branching_abort = 2.0;
};

int run_simulate(const CLI::App &app, const SimulateOpts &o, const CommonOpts &c) {
    SimulationSpec spec;
    SocialNetwork net;
    if (!o.params.empty()) {
        auto snap = load_params(o.params);
        spec.config = snap.config;
        spec.params = std::move(snap.params);
        net = std::move(snap.network);
    } else {
        spec.config = o.model.build();
        if (!is_social(spec.config.variant))
            net = SocialNetwork::self_only(o.users);
        else if (!o.network.empty())
            net = load_network_file(o.network, o.users, nullptr);
        else
            net = random_network(o.users, o.avg_degree, c.seed);
        spec.config.validate_network(net);
        spec.params = sample_params_from_prior(spec.config, net, o.items, c.seed);
    }
    spec.network = net;
    spec.horizon = o.horizon;
    spec.seed = c.seed;
    spec.max_events = o.max_events;
    spec.branching_abort = o.branching_abort;
    const auto result = simulate(spec);
    for (const auto &w : result.warnings) std::cerr << "warning: " << w << '\n';

    const auto dir = output_dir(c);
    {
        auto out = open_out(dir / "events.csv");
        write_events(out, result.history);
    }
    {
        auto out = open_out(dir / "network.csv");
        write_network(out, net);
    }
    auto truth = params_to_json(spec.params, spec.config, net);
    truth["horizon"] = spec.horizon;
    write_json_file((dir / "truth.json").string(), truth);
    persist_config(app, dir);
    std::cout << "events " << result.history.size() << "\ncandidates " << result.stats.candidates
              << "\nbranching_proxy " << result.stats.branching_proxy << "\ntruncated "
              << (result.truncated ? "yes" : "no") << '\n';
    return 0;
}

// --------------------------------------------------------------------- fit

struct FitCmdOpts {
    ModelOpts model;
    DataOpts data;
    FitOptions fit;
    double split = 0.0;
    bool save_responsibilities = false;
};

int run_fit(const CLI::App &app, FitCmdOpts o, const CommonOpts &c) {
    const ModelConfig config = o.model.build();
    Dataset data = load_dataset(o.data, config.variant);
    EventHistory train = data.events.history;
    if (o.split > 0.0) train = temporal_split(data.events.history, o.split).train;
    o.fit.seed = c.seed;
    o.fit.threads = c.threads;
    const auto dir = output_dir(c);
    auto trace = open_out(dir / "trace.csv");
    trace << "iteration,elbo\n";
    VariationalInference vi(train, data.network, config, o.fit);
    const auto result = vi.fit([&](std::size_t it, const VariationalState &, double elbo) {
        trace << it << ',' << elbo << '\n';
    });
    trace.flush();
    if (!result.converged)
        std::cerr << "warning: no convergence within " << o.fit.max_iters << " iterations\n";
    write_json_file((dir / "params.json").string(), params_to_json(result.params, config, data.network));
    write_json_file((dir / "state.json").string(), state_to_json(result.state, o.save_responsibilities));
    write_map(data.events.users, dir / "users.csv", "user_id");
    write_map(data.events.items, dir / "items.csv", "item_id");
    persist_config(app, dir);
    std::cout << "events " << train.size() << "\niterations " << result.iterations << "\nconverged "
              << (result.converged ? "yes" : "no") << "\nelbo " << result.trace.back() << '\n';
    return 0;
}

// --------------------------------------------------------------- recommend

struct RecommendOpts {
    DataOpts data;
    std::string params;
    std::string user;
    double time = 0.0;
    std::size_t k = 10;
};

int run_recommend(const RecommendOpts &o, const CommonOpts &c) {
    const auto snap = load_params(o.params);
    const Dataset data = load_for_snapshot(o.data, snap);
    const UserId u = resolve_user(data, o.user);
    const auto list = recommend(snap.params, snap.config, data.events.history, data.network, u, o.time, o.k);
    const auto dir = output_dir(c);
    auto out = open_out(dir / "recommendations.csv");
    out << "rank,item_id,score\n";
    std::cout << "rank,item_id,score\n";
    for (std::size_t r = 0; r < list.items.size(); ++r) {
        const auto &key = data.events.items.key(list.items[r].item);
        out << r + 1 << ',' << key << ',' << list.items[r].score << '\n';
        std::cout << r + 1 << ',' << key << ',' << list.items[r].score << '\n';
    }
    return 0;
}

// ---------------------------------------------------------- predict-return

struct PredictOpts {
    DataOpts data;
    std::string params;
    std::string user;
    std::string item;
    double time = 0.0;
    std::size_t samples = 1000;
};

int run_predict(const PredictOpts &o, const CommonOpts &c) {
    const auto snap = load_params(o.params);
    const Dataset data = load_for_snapshot(o.data, snap);
    ReturnTimeOptions ro;
    ro.n_samples = o.samples;
    ro.seed = c.seed;
    if (!o.item.empty()) {
        auto p = data.events.items.find(o.item);
        if (!p) throw data_error("unknown item '" + o.item + "'");
        ro.item = *p;
    }
    const UserId u = resolve_user(data, o.user);
    const auto pred = predict_return_time(snap.params, snap.config, data.events.history, data.network, u, o.time, ro);
    std::cout << "expected_time " << pred.expected_time << "\nstd_error " << pred.std_error << "\nreturned "
              << pred.n_returned << '/' << o.samples << '\n';
    if (!pred.returned) std::cerr << "warning: some samples did not return\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
    DataOpts data;
    std::string params;
    double split = 0.8;
    std::vector<std::size_t> ks{1, 5, 10, 20};
    std::string ranker = "model";
    std::size_t return_cases = 200;
    std::size_t return_samples = 200;
};

std::vector<std::size_t> ranks_for(const std::string &ranker, const ParamsSnapshot &snap, const Dataset &data,
                                   std::size_t first_test, const CommonOpts &c) {
    const auto &h = data.events.history;
    if (ranker == "model") return test_ranks(snap.params, snap.config, h, data.network, first_test, c.threads);
    std::vector<std::size_t> ranks(h.size() - first_test, 1);
    if (ranker == "random") {
        std::mt19937_64 rng(c.seed);
        std::uniform_int_distribution<std::size_t> pos(1, h.num_items());
        for (auto &r : ranks) r = pos(rng);
    }
    return ranks;
}

int run_evaluate(const CLI::App &app, const EvaluateOpts &o, const CommonOpts &c) {
    const auto snap = load_params(o.params);
    const Dataset data = load_for_snapshot(o.data, snap);
    const auto &h = data.events.history;
    const auto split = temporal_split(h, o.split);
    if (split.first_test >= h.size()) throw data_error("no test events after the split");
    const auto ranks = ranks_for(o.ranker, snap, data, split.first_test, c);

    const auto dir = output_dir(c);
    auto out = open_out(dir / "metrics.csv");
    out << "method,variant,k,metric,value\n";
    const std::string variant = to_string(snap.config.variant);
    for (auto k : o.ks) {
        out << o.ranker << ',' << variant << ',' << k << ",recall," << recall_at_k(ranks, k) << '\n';
        out << o.ranker << ',' << variant << ',' << k << ",ndcg," << ndcg_at_k(ranks, k) << '\n';
        out << "random_expected," << variant << ',' << k << ",ndcg," << random_ndcg_at_k(h.num_items(), k) << '\n';
    }

    if (o.return_cases > 0) {
        const auto cases = return_time_cases(h, split.cutoff, o.return_cases);
        if (!cases.empty()) {
            const double gap = mean_user_gap(split.train);
            std::vector<double> model, constant, actual;
            ReturnTimeOptions ro;
            ro.n_samples = o.return_samples;
            ro.seed = c.seed;
            for (const auto &rc : cases) {
                const auto pred = predict_return_time(snap.params, snap.config, h, data.network, rc.user,
                                                      rc.query_time, ro);
                model.push_back(pred.expected_time - rc.query_time);
                constant.push_back(gap);
                actual.push_back(rc.actual_time - rc.query_time);
            }
            out << "model," << variant << ",0,return_time_mae," << returning_time_mae(model, actual) << '\n';
            out << "mean_gap," << variant << ",0,return_time_mae," << returning_time_mae(constant, actual) << '\n';
        }
    }

    const auto intervals = rescale(snap.params, snap.config, split.train, data.network, RescaleScope::PerUser);
    const auto qq = qq_exponential(intervals.values);
    {
        auto q = open_out(dir / "qq.csv");
        q << "theoretical_quantile,empirical_quantile\n";
        for (const auto &p : qq) q << p.theoretical << ',' << p.empirical << '\n';
    }
    if (qq.size() >= 2) {
        const auto ks = ks_test_exponential(intervals.values);
        out << "model," << variant << ",0,qq_slope," << qq_slope(qq) << '\n';
        out << "model," << variant << ",0,ks_statistic," << ks.statistic << '\n';
        out << "model," << variant << ",0,ks_p_value," << ks.p_value << '\n';
    }
    out.flush();
    persist_config(app, dir);
    std::ifstream back(dir / "metrics.csv");
    std::cout << back.rdbuf();
    return 0;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseOpts {
    DataOpts data;
    std::string params;
    std::string scope = "user";
    std::vector<std::string> items;
    std::size_t grid_points = 200;
};

RescaleScope scope_from_string(const std::string &s) {
    if (s == "pair") return RescaleScope::PerPair;
    if (s == "user") return RescaleScope::PerUser;
    if (s == "global") return RescaleScope::Global;
    throw config_error("unknown rescale scope '" + s + "'");
}

void write_matrix(const SimilarityMatrix &m, const fs::path &path) {
    auto out = open_out(path);
    for (std::size_t a = 0; a < m.n; ++a) {
        for (std::size_t b = 0; b < m.n; ++b) out << (b ? "," : "") << m(a, b);
        out << '\n';
    }
}

int run_diagnose(const CLI::App &app, const DiagnoseOpts &o, const CommonOpts &c) {
    const auto snap = load_params(o.params);
    const Dataset data = load_for_snapshot(o.data, snap);
    const auto &h = data.events.history;
    const auto dir = output_dir(c);

    const auto intervals = rescale(snap.params, snap.config, h, data.network, scope_from_string(o.scope));
    const auto qq = qq_exponential(intervals.values);
    {
        auto q = open_out(dir / "qq.csv");
        q << "theoretical_quantile,empirical_quantile\n";
        for (const auto &p : qq) q << p.theoretical << ',' << p.empirical << '\n';
    }
    if (qq.size() >= 2) {
        const auto ks = ks_test_exponential(intervals.values);
        std::cout << "intervals " << intervals.values.size() << "\nqq_slope " << qq_slope(qq) << "\nks_statistic "
                  << ks.statistic << "\nks_p_value " << ks.p_value << '\n';
    } else {
        std::cout << "intervals 0\n";
    }

    const auto sim = similarity_matrices(snap.params, h);
    write_matrix(sim.learned, dir / "similarity_learned.csv");
    write_matrix(sim.empirical, dir / "similarity_empirical.csv");
    if (sim.learned.n >= 3)
        std::cout << "similarity_spearman " << spearman(upper_triangle(sim.learned), upper_triangle(sim.empirical))
                  << '\n';

    if (o.grid_points < 2) throw config_error("grid-points must be at least 2");
    std::vector<double> grid(o.grid_points);
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid[g] = h.horizon() * static_cast<double>(g) / static_cast<double>(grid.size() - 1);
    for (const auto &key : o.items) {
        auto p = data.events.items.find(key);
        if (!p) throw data_error("unknown item '" + key + "'");
        const auto timeline = item_intensity_timeline(snap.params, snap.config, h, data.network, *p, grid);
        auto out = open_out(dir / ("timeline_" + key + ".csv"));
        out << "t,intensity\n";
        for (const auto &pt : timeline) out << pt.time << ',' << pt.intensity << '\n';
    }
    persist_config(app, dir);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Recurrent Poisson factorization: simulate, fit and evaluate temporal recommenders"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML run configuration; command-line flags override it");
    CommonOpts common;
    recorder.bind(&app, "--seed", common.seed, "random seed");
    recorder.bind(&app, "--threads", common.threads, "worker threads");
    recorder.bind(&app, "--output", common.output, "output directory");
    app.fallthrough();

    SimulateOpts sim;
    auto *simulate_cmd = app.add_subcommand("simulate", "generate an event log from the model");
    add_model_options(simulate_cmd, sim.model);
    recorder.bind(simulate_cmd, "--users", sim.users);
    recorder.bind(simulate_cmd, "--items", sim.items);
    recorder.bind(simulate_cmd, "--horizon", sim.horizon);
    recorder.bind(simulate_cmd, "--avg-degree", sim.avg_degree, "random follow network degree");
    recorder.bind(simulate_cmd, "--network", sim.network, "use this follow network instead of a random one");
    recorder.bind(simulate_cmd, "--params", sim.params, "simulate from a parameter snapshot instead of the prior");
    recorder.bind(simulate_cmd, "--max-events", sim.max_events);
    recorder.bind(simulate_cmd, "--branching-abort", sim.branching_abort);

    FitCmdOpts fit_opts;
    auto *fit_cmd = app.add_subcommand("fit", "variational inference");
    add_model_options(fit_cmd, fit_opts.model);
    add_data_options(fit_cmd, fit_opts.data);
    recorder.bind(fit_cmd, "--max-iters", fit_opts.fit.max_iters);
    recorder.bind(fit_cmd, "--epsilon", fit_opts.fit.epsilon, "relative ELBO change to stop at");
    recorder.bind(fit_cmd, "--candidate-window", fit_opts.fit.candidate_window,
                        "trigger candidates within this many kernel time constants")
        ->capture_default_str();
    recorder.bind(fit_cmd, "--split", fit_opts.split, "fit only events before this fraction of T");
    recorder.bind_flag(fit_cmd, "--save-responsibilities", fit_opts.save_responsibilities);

    RecommendOpts rec;
    auto *rec_cmd = app.add_subcommand("recommend", "top-k items for a user at a time");
    add_data_options(rec_cmd, rec.data);
    recorder.bind(rec_cmd, "--params", rec.params)->required();
    recorder.bind(rec_cmd, "--user", rec.user)->required();
    recorder.bind(rec_cmd, "--time", rec.time)->required();
    recorder.bind(rec_cmd, "--k", rec.k);

    PredictOpts pred;
    auto *pred_cmd = app.add_subcommand("predict-return", "expected time of a user's next event");
    add_data_options(pred_cmd, pred.data);
    recorder.bind(pred_cmd, "--params", pred.params)->required();
    recorder.bind(pred_cmd, "--user", pred.user)->required();
    recorder.bind(pred_cmd, "--time", pred.time)->required();
    recorder.bind(pred_cmd, "--item", pred.item, "only returns to this item");
    recorder.bind(pred_cmd, "--samples", pred.samples);

    EvaluateOpts ev;
    auto *eval_cmd = app.add_subcommand("evaluate", "held-out ranking, returning time and QQ diagnostics");
    add_data_options(eval_cmd, ev.data);
    recorder.bind(eval_cmd, "--params", ev.params)->required();
    recorder.bind(eval_cmd, "--split", ev.split);
    recorder.bind(eval_cmd, "--ks", ev.ks, "cutoffs for Recall@k and NDCG@k")->delimiter(',');
    recorder.bind(eval_cmd, "--ranker", ev.ranker)
        ->check(CLI::IsMember({"model", "random", "oracle"}))
        ->capture_default_str();
    recorder.bind(eval_cmd, "--return-cases", ev.return_cases, "returning-time cases (0 skips)");
    recorder.bind(eval_cmd, "--return-samples", ev.return_samples);

    DiagnoseOpts diag;
    auto *diag_cmd = app.add_subcommand("diagnose", "QQ data, similarity matrices and item timelines");
    add_data_options(diag_cmd, diag.data);
    recorder.bind(diag_cmd, "--params", diag.params)->required();
    recorder.bind(diag_cmd, "--scope", diag.scope, "pair, user or global");
    recorder.bind(diag_cmd, "--items", diag.items, "items to write intensity timelines for")->delimiter(',');
    recorder.bind(diag_cmd, "--grid-points", diag.grid_points);

    // a [section] in a --config file selects its subcommand
    for (auto *sub : app.get_subcommands({})) sub->configurable();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::Error &e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*simulate_cmd) return run_simulate(*simulate_cmd, sim, common);
        if (*fit_cmd) return run_fit(*fit_cmd, fit_opts, common);
        if (*rec_cmd) return run_recommend(rec, common);
        if (*pred_cmd) return run_predict(pred, common);
        if (*eval_cmd) return run_evaluate(*eval_cmd, ev, common);
        if (*diag_cmd) return run_diagnose(*diag_cmd, diag, common);
    } catch (const config_error &e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const data_error &e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const numerical_error &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::out_of_range &e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument &e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
