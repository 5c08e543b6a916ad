#pragma once

#include "banditfit/benchmark.hpp"
#include "banditfit/core_model.hpp"
#include "banditfit/model.hpp"
#include "banditfit/recovery.hpp"
#include "banditfit/simulator.hpp"
#include "banditfit/surrogate.hpp"
#include "banditfit/types.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace banditfit::io {

using json = nlohmann::json;

inline constexpr const char* kSchema = "banditfit/1";

// ---- primitive conversions -------------------------------------------------

inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw IoError(what + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw IoError(what + ": ragged row " + std::to_string(r));
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw IoError(what + ": non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw IoError(what + ": expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw IoError(what + ": non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline json to_json(const RLParams& p) {
    json a = json::array(), b = json::array();
    for (const auto& v : p.alpha) a.push_back(to_json(v));
    for (const auto& v : p.beta) b.push_back(to_json(v));
    return {{"alpha", a}, {"beta", b}, {"shared", p.shared}};
}

inline RLParams params_from_json(const json& j) {
    if (!j.is_object() || !j.contains("alpha") || !j.contains("beta"))
        throw IoError("params: expected object with alpha and beta");
    RLParams p;
    p.shared = j.value("shared", false);
    for (const auto& v : j.at("alpha")) p.alpha.push_back(vector_from_json(v, "alpha"));
    for (const auto& v : j.at("beta")) p.beta.push_back(vector_from_json(v, "beta"));
    if (p.alpha.size() != p.beta.size()) throw IoError("params: alpha and beta signal counts differ");
    return p;
}

// ---- file helpers ----------------------------------------------------------

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("'" + path + "': invalid JSON: " + e.what());
    }
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

inline void expect_kind(const json& j, const std::string& kind, const std::string& path) {
    if (!j.is_object() || j.value("schema", "") != kSchema)
        throw IoError("'" + path + "': missing or unsupported schema (expected " + std::string(kSchema) + ")");
    if (j.value("kind", "") != kind)
        throw IoError("'" + path + "': expected a " + kind + " file, found '" + j.value("kind", "") + "'");
}

// ---- dataset ---------------------------------------------------------------

inline json to_json(const EnvSpec& s) {
    json boxes = json::array();
    for (const auto& b : s.beta_box) boxes.push_back({b.lo, b.hi});
    return {{"setup", to_string(s.setup)},
            {"m", s.m},
            {"n", s.n},
            {"reward_probs", s.reward_probs},
            {"shuffle_prob", s.shuffle_prob},
            {"alpha_box", {s.alpha_box.lo, s.alpha_box.hi}},
            {"beta_box", boxes},
            {"seed", s.seed}};
}

inline EnvSpec spec_from_json(const json& j) {
    try {
        EnvSpec s;
        s.setup = parse_setup(j.at("setup").get<std::string>());
        s.m = j.at("m").get<std::size_t>();
        s.n = j.at("n").get<std::size_t>();
        s.reward_probs = j.at("reward_probs").get<std::vector<double>>();
        s.shuffle_prob = j.at("shuffle_prob").get<double>();
        const auto ab = j.at("alpha_box").get<std::vector<double>>();
        if (ab.size() != 2) throw IoError("spec: alpha_box must have two entries");
        s.alpha_box = {ab[0], ab[1]};
        s.beta_box.clear();
        for (const auto& b : j.at("beta_box")) {
            const auto v = b.get<std::vector<double>>();
            if (v.size() != 2) throw IoError("spec: beta_box entries must have two entries");
            s.beta_box.push_back({v[0], v[1]});
        }
        s.seed = j.value("seed", std::uint64_t{0});
        return s;
    } catch (const json::exception& e) {
        throw IoError(std::string("spec: ") + e.what());
    }
}

/// Dataset episodes read from disk; ground truth is present only for
/// simulated data.
struct EpisodeRecord {
    Episode data;
    std::optional<RLParams> true_params;
    std::optional<Matrix> true_x;
};

struct DatasetFile {
    EnvSpec spec;
    std::vector<EpisodeRecord> episodes;

    ModelConfig config() const {
        ModelConfig cfg = model_config(spec);
        return cfg;
    }

    /// Simulator view for benchmarking; requires ground truth on every episode.
    Dataset simulated() const {
        Dataset ds;
        ds.spec = spec;
        for (std::size_t e = 0; e < episodes.size(); ++e) {
            const auto& r = episodes[e];
            if (!r.true_params || !r.true_x)
                throw IoError("dataset episode " + std::to_string(e) + " has no ground truth");
            SimEpisode s;
            s.data = r.data;
            s.true_params = *r.true_params;
            s.true_x = *r.true_x;
            s.true_pi = policy_trace(*r.true_x);
            ds.episodes.push_back(std::move(s));
        }
        return ds;
    }
};

inline json episode_to_json(const Episode& ep, const RLParams* truth, const Matrix* true_x) {
    json rewards = json::array();
    for (const auto& u : ep.rewards) rewards.push_back(to_json(u));
    json j = {{"actions", ep.actions}, {"rewards", rewards}};
    if (truth) j["true_params"] = to_json(*truth);
    if (true_x) j["true_x"] = to_json(*true_x);
    return j;
}

inline json dataset_to_json(const Dataset& ds) {
    json eps = json::array();
    for (const auto& e : ds.episodes) eps.push_back(episode_to_json(e.data, &e.true_params, &e.true_x));
    return {{"schema", kSchema}, {"kind", "dataset"}, {"spec", to_json(ds.spec)}, {"episodes", eps}};
}

inline DatasetFile dataset_from_json(const json& j, const std::string& path = "<memory>") {
    expect_kind(j, "dataset", path);
    DatasetFile ds;
    ds.spec = spec_from_json(j.at("spec"));
    ds.spec.validate();
    const auto cfg = model_config(ds.spec);
    try {
        for (const auto& je : j.at("episodes")) {
            EpisodeRecord rec;
            rec.data.actions = je.at("actions").get<std::vector<int>>();
            for (const auto& ju : je.at("rewards")) rec.data.rewards.push_back(matrix_from_json(ju, "rewards"));
            if (je.contains("true_params")) rec.true_params = params_from_json(je.at("true_params"));
            if (je.contains("true_x")) rec.true_x = matrix_from_json(je.at("true_x"), "true_x");
            check_episode(rec.data, cfg);
            ds.episodes.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw IoError("'" + path + "': " + e.what());
    } catch (const ShapeError& e) {
        throw IoError("'" + path + "': " + e.what());
    }
    return ds;
}

inline DatasetFile read_dataset(const std::string& path) { return dataset_from_json(read_json(path), path); }

// ---- fit settings shared by solution / params files -------------------------

struct FitSettings {
    std::size_t horizon = 0;
    bool shared = false;
    Vector w = Vector::Ones(1);
    std::vector<Interval> beta_box;
};

inline json to_json(const FitSettings& s) {
    json boxes = json::array();
    for (const auto& b : s.beta_box) boxes.push_back({b.lo, b.hi});
    return {{"horizon", s.horizon}, {"shared", s.shared}, {"w", to_json(s.w)}, {"beta_box", boxes}};
}

inline FitSettings settings_from_json(const json& j) {
    FitSettings s;
    s.horizon = j.at("horizon").get<std::size_t>();
    s.shared = j.at("shared").get<bool>();
    s.w = vector_from_json(j.at("w"), "w");
    for (const auto& b : j.at("beta_box")) {
        const auto v = b.get<std::vector<double>>();
        if (v.size() != 2) throw IoError("beta_box entries must have two entries");
        s.beta_box.push_back({v[0], v[1]});
    }
    return s;
}

// ---- solution --------------------------------------------------------------

inline json solution_to_json(const SurrogateSolution& sol) {
    json G = json::array();
    for (const auto& g : sol.G) G.push_back(to_json(g));
    return {{"G", G},
            {"x_star", to_json(sol.x)},
            {"pi_star", to_json(sol.pi)},
            {"J_lb", sol.J_lb},
            {"iters", sol.iters},
            {"status", to_string(sol.status)},
            {"pg_norm", sol.pg_norm}};
}

inline SurrogateSolution solution_from_json(const json& j) {
    SurrogateSolution s;
    for (const auto& g : j.at("G")) s.G.push_back(matrix_from_json(g, "G"));
    s.x = matrix_from_json(j.at("x_star"), "x_star");
    s.pi = matrix_from_json(j.at("pi_star"), "pi_star");
    s.J_lb = j.at("J_lb").get<double>();
    s.iters = j.value("iters", 0);
    s.status = j.value("status", "converged") == "converged" ? SolveStatus::Converged : SolveStatus::MaxIters;
    s.pg_norm = j.value("pg_norm", 0.0);
    return s;
}

struct SolutionFile {
    FitSettings settings;
    std::vector<SurrogateSolution> episodes;
};

inline json solution_file_to_json(const SolutionFile& f) {
    json eps = json::array();
    for (const auto& s : f.episodes) eps.push_back(solution_to_json(s));
    return {{"schema", kSchema}, {"kind", "solution"}, {"settings", to_json(f.settings)}, {"episodes", eps}};
}

inline SolutionFile solution_file_from_json(const json& j, const std::string& path = "<memory>") {
    expect_kind(j, "solution", path);
    try {
        SolutionFile f;
        f.settings = settings_from_json(j.at("settings"));
        for (const auto& e : j.at("episodes")) f.episodes.push_back(solution_from_json(e));
        return f;
    } catch (const json::exception& e) {
        throw IoError("'" + path + "': " + e.what());
    }
}

// ---- params ----------------------------------------------------------------

inline json recovery_to_json(const RecoveryResult& r) {
    json j = to_json(r.params);
    json res = json::array(), exact = json::array();
    for (const auto& v : r.residuals) res.push_back(to_json(v));
    for (const auto& v : r.fits_exact) exact.push_back(v);
    j["residuals"] = res;
    j["fits_exact"] = exact;
    return j;
}

inline RecoveryResult recovery_from_json(const json& j) {
    RecoveryResult r;
    r.params = params_from_json(j);
    if (j.contains("residuals"))
        for (const auto& v : j.at("residuals")) r.residuals.push_back(vector_from_json(v, "residuals"));
    if (j.contains("fits_exact"))
        for (const auto& v : j.at("fits_exact")) r.fits_exact.push_back(v.get<std::vector<bool>>());
    return r;
}

struct ParamsFile {
    FitSettings settings;
    std::vector<RecoveryResult> episodes;
};

inline json params_file_to_json(const ParamsFile& f) {
    json eps = json::array();
    for (const auto& r : f.episodes) eps.push_back(recovery_to_json(r));
    return {{"schema", kSchema}, {"kind", "params"}, {"settings", to_json(f.settings)}, {"episodes", eps}};
}

inline ParamsFile params_file_from_json(const json& j, const std::string& path = "<memory>") {
    expect_kind(j, "params", path);
    try {
        ParamsFile f;
        f.settings = settings_from_json(j.at("settings"));
        for (const auto& e : j.at("episodes")) f.episodes.push_back(recovery_from_json(e));
        return f;
    } catch (const json::exception& e) {
        throw IoError("'" + path + "': " + e.what());
    }
}

// ---- predictions and reports -------------------------------------------------

inline json prediction_to_json(const Prediction& p) {
    json z = json::array();
    for (const auto& m : p.z) z.push_back(to_json(m));
    return {{"pi", to_json(p.pi)}, {"x", to_json(p.x)}, {"z", z}};
}

inline json summary_to_json(const Summary& s) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"median", num(s.median)}, {"q25", num(s.q25)}, {"q75", num(s.q75)}, {"count", s.count}};
}

inline json benchmark_to_json(const BenchmarkResult& r, const EnvSpec& spec) {
    json rows = json::array();
    for (const auto& m : r.table) {
        rows.push_back({{"method", to_string(m.method)},
                        {"mean_kl", summary_to_json(m.mean_kl)},
                        {"alpha_err", summary_to_json(m.alpha_err)},
                        {"beta_err", summary_to_json(m.beta_err)},
                        {"nll", summary_to_json(m.nll)},
                        {"gap", summary_to_json(m.gap)},
                        {"wall_ms", summary_to_json(m.wall_ms)},
                        {"failures", m.failures}});
    }
    return {{"schema", kSchema}, {"kind", "report"}, {"spec", to_json(spec)}, {"table", rows}};
}

}  // namespace banditfit::io
