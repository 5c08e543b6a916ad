#include "banditfit/banditfit.hpp"
#include "banditfit/io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace banditfit;

namespace {

struct Common {
    std::size_t jobs = 0;
};

struct SimulateArgs {
    std::string setup = "BSC";
    std::string size = "2AB";
    std::size_t n = 200;
    std::size_t episodes = 100;
    std::uint64_t seed = 0;
    std::string out;
};

struct FitArgs {
    std::string data;
    std::string out;
    std::size_t horizon = 0;
    std::optional<bool> shared;
    std::vector<double> w{1.0};
    int max_iters = SolverOptions{}.max_iters;
    double tol_rel_obj = SolverOptions{}.tol_rel_obj;
    double tol_pg = SolverOptions{}.tol_pg;
    bool cap_first_lag = false;
};

struct RecoverArgs {
    std::string solution;
    std::string out;
    int restarts = 5;
    std::uint64_t seed = 0;
    std::string method = "direct";
    std::vector<double> beta_max;
};

struct PredictArgs {
    std::string data;
    std::string solution;
    std::string params;
    std::string out;
};

struct BenchArgs {
    std::string data;
    std::vector<std::string> methods;
    std::size_t horizon_t = 5;
    int restarts = 5;
    std::uint64_t seed = 0;
    bool no_cap = false;
    std::string csv;
    std::string json;
};

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        io::write_text(path, text);
}

ModelConfig fit_config(const io::DatasetFile& ds, const io::FitSettings& s) {
    ModelConfig cfg = ds.config();
    cfg.shared = s.shared;
    cfg.w = s.w;
    cfg.horizon = s.horizon;
    cfg.validate();
    return cfg;
}

int cmd_simulate(const SimulateArgs& a, const Common& c) {
    auto spec = EnvSpec::preset(parse_setup(a.setup), parse_size(a.size), a.n, a.seed);
    spec.validate();
    const auto ds = make_dataset(spec, a.episodes, c.jobs);
    io::write_json(a.out, io::dataset_to_json(ds));
    std::cerr << "simulated " << a.episodes << " episodes (" << a.setup << "/" << a.size << ", n=" << a.n << ") -> "
              << a.out << "\n";
    return 0;
}

int cmd_fit(const FitArgs& a, const Common& c) {
    const auto ds = io::read_dataset(a.data);
    io::FitSettings s;
    s.horizon = a.horizon == 0 ? ds.spec.n : a.horizon;
    s.shared = a.shared.value_or(ds.spec.shared());
    s.w = RLFit::broadcast_weights(a.w, ds.spec.signals());
    s.beta_box = ds.spec.beta_box;
    const auto cfg = fit_config(ds, s);

    SolverOptions opt;
    opt.max_iters = a.max_iters;
    opt.tol_rel_obj = a.tol_rel_obj;
    opt.tol_pg = a.tol_pg;
    if (a.cap_first_lag)
        for (const auto& b : s.beta_box) opt.beta_cap.push_back(b.hi);
    opt.validate();

    io::SolutionFile out;
    out.settings = s;
    out.episodes.resize(ds.episodes.size());
    parallel_for(ds.episodes.size(), c.jobs, [&](std::size_t e) {
        out.episodes[e] = solve_surrogate(SurrogateProblem::from_episode(ds.episodes[e].data, cfg, opt));
    });
    std::size_t capped = 0;
    for (const auto& sol : out.episodes) capped += sol.status == SolveStatus::MaxIters;
    io::write_json(a.out, io::solution_file_to_json(out));
    std::cerr << "fit " << out.episodes.size() << " episodes (horizon " << s.horizon << ", "
              << (s.shared ? "shared" : "per-action") << ")";
    if (capped) std::cerr << ", " << capped << " stopped at max_iters";
    std::cerr << " -> " << a.out << "\n";
    return 0;
}

int cmd_recover(const RecoverArgs& a, const Common& c) {
    const auto sf = io::solution_file_from_json(io::read_json(a.solution), a.solution);
    RecoveryOptions opt;
    opt.restarts = a.restarts;
    opt.beta_box = sf.settings.beta_box;
    if (!a.beta_max.empty()) {
        if (a.beta_max.size() != opt.beta_box.size())
            throw ShapeError("--beta-max needs " + std::to_string(opt.beta_box.size()) + " values");
        for (std::size_t i = 0; i < a.beta_max.size(); ++i) opt.beta_box[i].hi = a.beta_max[i];
    }
    if (a.method == "logls")
        opt.method = RecoveryMethod::LogLS;
    else if (a.method != "direct")
        throw DomainError("unknown recovery method '" + a.method + "' (expected direct or logls)");
    opt.validate();

    io::ParamsFile out;
    out.settings = sf.settings;
    out.settings.beta_box = opt.beta_box;
    out.episodes.resize(sf.episodes.size());
    parallel_for(sf.episodes.size(), c.jobs, [&](std::size_t e) {
        auto o = opt;
        o.seed = derive_seed(a.seed, e);
        out.episodes[e] = recover_all(sf.episodes[e].G, o);
    });
    io::write_json(a.out, io::params_file_to_json(out));
    std::cerr << "recovered parameters for " << out.episodes.size() << " episodes -> " << a.out << "\n";
    return 0;
}

/// Models per episode for predict / score: recovered parameters when a
/// params file is given, fitted kernels otherwise.
std::vector<RLFit> load_models(const PredictArgs& a, io::FitSettings& settings, std::size_t episodes) {
    std::vector<RLFit> models;
    if (!a.params.empty()) {
        const auto pf = io::params_file_from_json(io::read_json(a.params), a.params);
        settings = pf.settings;
        if (pf.episodes.size() != episodes)
            throw ShapeError("params file has " + std::to_string(pf.episodes.size()) + " episodes, dataset has " +
                             std::to_string(episodes));
        for (const auto& r : pf.episodes) {
            RLFit m(settings.horizon, r.params.shared);
            m.set_params(r);
            models.push_back(std::move(m));
        }
        return models;
    }
    if (a.solution.empty()) throw DomainError("need --solution or --params");
    const auto sf = io::solution_file_from_json(io::read_json(a.solution), a.solution);
    settings = sf.settings;
    if (sf.episodes.size() != episodes)
        throw ShapeError("solution file has " + std::to_string(sf.episodes.size()) + " episodes, dataset has " +
                         std::to_string(episodes));
    for (const auto& s : sf.episodes) {
        RLFit m(settings.horizon, settings.shared);
        m.set_solution(s);
        models.push_back(std::move(m));
    }
    return models;
}

int cmd_predict(const PredictArgs& a, const Common& c) {
    const auto ds = io::read_dataset(a.data);
    io::FitSettings s;
    const auto models = load_models(a, s, ds.episodes.size());
    std::vector<Prediction> preds(ds.episodes.size());
    parallel_for(preds.size(), c.jobs, [&](std::size_t e) { preds[e] = models[e].predict(ds.episodes[e].data.rewards, s.w); });
    io::json eps = io::json::array();
    for (const auto& p : preds) eps.push_back(io::prediction_to_json(p));
    const io::json j = {{"schema", io::kSchema}, {"kind", "prediction"}, {"episodes", eps}};
    emit(a.out, j.dump(1) + "\n");
    return 0;
}

int cmd_score(const PredictArgs& a, const Common& c) {
    const auto ds = io::read_dataset(a.data);
    io::FitSettings s;
    const auto models = load_models(a, s, ds.episodes.size());
    std::vector<double> ll(ds.episodes.size());
    parallel_for(ll.size(), c.jobs, [&](std::size_t e) {
        ll[e] = models[e].score(ds.episodes[e].data.rewards, ds.episodes[e].data.actions, s.w);
    });
    std::ostringstream os;
    os.precision(12);
    os << "episode_id,nll,log_likelihood\n";
    for (std::size_t e = 0; e < ll.size(); ++e) os << e << ',' << -ll[e] << ',' << ll[e] << '\n';
    emit(a.out, os.str());
    return 0;
}

std::string format_summary(const Summary& s, int digits) {
    if (s.count == 0) return "--";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << s.median << " (" << s.q25 << "-" << s.q75 << ")";
    return os.str();
}

int cmd_benchmark(const BenchArgs& a, const Common& c) {
    const auto file = io::read_dataset(a.data);
    const auto ds = file.simulated();
    BenchmarkOptions opt;
    if (!a.methods.empty()) {
        opt.methods.clear();
        for (const auto& m : a.methods) opt.methods.push_back(parse_method(m));
    }
    opt.truncated_horizon = a.horizon_t;
    opt.recovery_restarts = a.restarts;
    opt.dloc.restarts = a.restarts;
    opt.seed = a.seed;
    opt.cap_first_lag = !a.no_cap;
    opt.jobs = c.jobs;
    if (opt.truncated_horizon < 1) throw DomainError("--horizon-t must be >= 1");

    const auto res = run_benchmark(ds, opt);
    if (!a.csv.empty()) {
        std::ostringstream os;
        write_reports_csv(os, res.reports);
        io::write_text(a.csv, os.str());
    }
    if (!a.json.empty()) io::write_json(a.json, io::benchmark_to_json(res, ds.spec));

    auto cell = [](std::string text, std::size_t width) {
        if (text.size() < width) text.resize(width, ' ');
        return text + "  ";
    };
    std::cout << cell("method", 10) << cell("mean KL", 24) << cell("|alpha err|", 21) << cell("|beta err|", 21)
              << cell("gap", 21) << "ms\n";
    for (const auto& m : res.table) {
        std::cout << cell(to_string(m.method), 10) << cell(format_summary(m.mean_kl, 4), 24)
                  << cell(format_summary(m.alpha_err, 3), 21) << cell(format_summary(m.beta_err, 3), 21)
                  << cell(format_summary(m.gap, 3), 21) << format_summary(m.wall_ms, 1);
        if (m.failures) std::cout << "  [" << m.failures << " failed]";
        std::cout << "\n";
    }
    return 0;
}

int fail(const std::string& kind, int code, const std::string& msg) {
    std::string flat = msg;
    for (auto& ch : flat)
        if (ch == '\n') ch = ' ';
    std::cerr << "error: kind=" << kind << " code=" << code << " message=" << flat << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fit forgetting Q-learning models to bandit choice data"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags win");
    Common common;
    app.add_option("-j,--jobs", common.jobs, "Worker threads (0 = all cores)")->capture_default_str();

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Simulate a dataset of bandit episodes");
    s->add_option("--setup", sim.setup, "BSC, IND or SUB")->check(CLI::IsMember({"BSC", "IND", "SUB"}))->capture_default_str();
    s->add_option("--size", sim.size, "2AB or 10AB")->check(CLI::IsMember({"2AB", "10AB"}))->capture_default_str();
    s->add_option("-n,--steps", sim.n, "Trials per episode")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("-e,--episodes", sim.episodes, "Number of episodes")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    s->add_option("-o,--out", sim.out, "Output dataset JSON")->required();

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Solve the relaxed convex fit for every episode");
    f->add_option("-d,--data", fit.data, "Dataset JSON")->required();
    f->add_option("-o,--out", fit.out, "Output solution JSON")->required();
    f->add_option("-p,--horizon", fit.horizon, "Reward lags kept (0 = episode length)")->capture_default_str();
    f->add_flag("--shared,!--no-shared", fit.shared, "Tie parameters across actions (default: from dataset)");
    f->add_option("-w,--weights", fit.w, "Signal weights (one value is repeated)")->capture_default_str();
    f->add_option("--max-iters", fit.max_iters)->check(CLI::PositiveNumber)->capture_default_str();
    f->add_option("--tol-rel-obj", fit.tol_rel_obj)->check(CLI::PositiveNumber)->capture_default_str();
    f->add_option("--tol-pg", fit.tol_pg)->check(CLI::PositiveNumber)->capture_default_str();
    f->add_flag("--cap-first-lag", fit.cap_first_lag, "Bound the first kernel column by the dataset's beta max");

    RecoverArgs rec;
    auto* r = app.add_subcommand("recover", "Recover native parameters from fitted kernels");
    r->add_option("-s,--solution", rec.solution, "Solution JSON from fit")->required();
    r->add_option("-o,--out", rec.out, "Output params JSON")->required();
    r->add_option("--restarts", rec.restarts)->check(CLI::PositiveNumber)->capture_default_str();
    r->add_option("--seed", rec.seed)->capture_default_str();
    r->add_option("--method", rec.method, "direct or logls")->check(CLI::IsMember({"direct", "logls"}))->capture_default_str();
    r->add_option("--beta-max", rec.beta_max, "Override the upper beta bound per signal");

    PredictArgs pred;
    auto* p = app.add_subcommand("predict", "Choice probabilities and values for a dataset");
    p->add_option("-d,--data", pred.data, "Dataset JSON")->required();
    p->add_option("-s,--solution", pred.solution, "Solution JSON (kernel-based prediction)");
    p->add_option("--params", pred.params, "Params JSON (takes precedence over --solution)");
    p->add_option("-o,--out", pred.out, "Output JSON (default stdout)");

    PredictArgs score;
    auto* sc = app.add_subcommand("score", "Per-episode negative log-likelihood as CSV");
    sc->add_option("-d,--data", score.data, "Dataset JSON")->required();
    sc->add_option("-s,--solution", score.solution, "Solution JSON");
    sc->add_option("--params", score.params, "Params JSON (takes precedence over --solution)");
    sc->add_option("-o,--out", score.out, "Output CSV (default stdout)");

    BenchArgs bench;
    auto* b = app.add_subcommand("benchmark", "Compare fitting methods on simulated data");
    b->add_option("-d,--data", bench.data, "Simulated dataset JSON")->required();
    b->add_option("-m,--methods", bench.methods, "Subset of CVX, CVX-T, CVX-LOC, CVX-LOC-T, D-LOC");
    b->add_option("--horizon-t", bench.horizon_t, "Horizon of the truncated variants")->capture_default_str();
    b->add_option("--restarts", bench.restarts, "Multistart count for recovery and D-LOC")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    b->add_option("--seed", bench.seed)->capture_default_str();
    b->add_flag("--no-cap", bench.no_cap, "Do not bound the first kernel column by beta max");
    b->add_option("--csv", bench.csv, "Per-episode report CSV");
    b->add_option("--json", bench.json, "Aggregate table JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::FileError& e) {
        return fail("io", 2, e.what());
    } catch (const CLI::ParseError& e) {
        return fail("config", 3, e.what());
    }

    try {
        if (*s) return cmd_simulate(sim, common);
        if (*f) return cmd_fit(fit, common);
        if (*r) return cmd_recover(rec, common);
        if (*p) return cmd_predict(pred, common);
        if (*sc) return cmd_score(score, common);
        if (*b) return cmd_benchmark(bench, common);
    } catch (const Error& e) {
        return fail(e.kind(), e.code(), e.what());
    } catch (const std::exception& e) {
        return fail("numeric", 4, e.what());
    }
    return 0;
}
