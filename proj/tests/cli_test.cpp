#include "banditfit/io.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace banditfit;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(BANDITFIT_CLI) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf{};
    while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() / ("banditfit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::vector<double> score_column(const std::string& csv, int col) {
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    std::vector<double> out;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string cell;
        for (int c = 0; c <= col; ++c) std::getline(ls, cell, ',');
        out.push_back(std::stod(cell));
    }
    return out;
}

}  // namespace

TEST_F(Cli, SimulateFitScoreRoundTrip) {
    ASSERT_EQ(run("simulate --setup BSC --size 2AB -n 120 -e 3 --seed 4 -o " + path("ds.json")).code, 0);
    ASSERT_EQ(run("fit -d " + path("ds.json") + " -o " + path("sol.json")).code, 0);
    const auto r = run("score -d " + path("ds.json") + " -s " + path("sol.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto nll = score_column(r.out, 1);
    ASSERT_EQ(nll.size(), 3u);
    for (double v : nll) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_LE(v, 120.0 * std::log(2.0) + 1e-9);
    }
}

TEST_F(Cli, RecoverThenPredictUsesParameters) {
    ASSERT_EQ(run("simulate --setup IND -n 80 -e 2 --seed 5 -o " + path("ds.json")).code, 0);
    ASSERT_EQ(run("fit -d " + path("ds.json") + " -o " + path("sol.json")).code, 0);
    ASSERT_EQ(run("recover -s " + path("sol.json") + " -o " + path("par.json") + " --seed 2").code, 0);
    ASSERT_EQ(run("predict -d " + path("ds.json") + " --params " + path("par.json") + " -o " + path("pred.json")).code, 0);
    const auto ds = io::read_dataset(path("ds.json"));
    const auto pf = io::params_file_from_json(io::read_json(path("par.json")));
    const auto pred = io::read_json(path("pred.json"));
    ASSERT_EQ(pred.at("kind"), "prediction");
    for (std::size_t e = 0; e < 2; ++e) {
        const Matrix x = io::matrix_from_json(pred.at("episodes")[e].at("x"), "x");
        const auto via = kernel_values(transform_F(pf.episodes[e].params, 80),
                                       LaggedRewards(ds.episodes[e].data.rewards, 80), Vector::Ones(1));
        EXPECT_LE((x - via.x).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST_F(Cli, Deterministic) {
    ASSERT_EQ(run("simulate --setup SUB -n 50 -e 2 --seed 9 -o " + path("a.json")).code, 0);
    ASSERT_EQ(run("simulate --setup SUB -n 50 -e 2 --seed 9 -j 2 -o " + path("b.json")).code, 0);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(Cli, BenchmarkWritesReports) {
    ASSERT_EQ(run("simulate -n 60 -e 2 --seed 1 -o " + path("ds.json")).code, 0);
    const auto r = run("benchmark -d " + path("ds.json") + " -m CVX D-LOC --csv " + path("r.csv") + " --json " +
                       path("r.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("D-LOC"), std::string::npos);
    const auto j = io::read_json(path("r.json"));
    EXPECT_EQ(j.at("schema"), "banditfit/1");
    EXPECT_EQ(j.at("table").size(), 2u);
    std::ifstream csv(path("r.csv"));
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "episode_id,method,mean_kl,alpha_err,beta_err,nll,j_lb,gap,wall_ms");
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
    {
        std::ofstream cfg(path("run.toml"));
        cfg << "[simulate]\nsteps = 30\nepisodes = 2\nsetup = \"IND\"\n";
    }
    ASSERT_EQ(run("--config " + path("run.toml") + " simulate -e 1 -o " + path("ds.json")).code, 0);
    const auto ds = io::read_dataset(path("ds.json"));
    EXPECT_EQ(ds.spec.n, 30u);
    EXPECT_EQ(ds.spec.setup, Setup::IND);
    EXPECT_EQ(ds.episodes.size(), 1u);
}

TEST_F(Cli, ExitCodes) {
    auto missing = run("fit -d " + path("nope.json") + " -o " + path("sol.json"));
    EXPECT_EQ(missing.code, 2);
    EXPECT_EQ(missing.out.rfind("error: kind=io code=2 message=", 0), 0u) << missing.out;

    ASSERT_EQ(run("simulate -n 20 -e 1 -o " + path("ds.json")).code, 0);
    auto bad_horizon = run("fit -d " + path("ds.json") + " -o " + path("sol.json") + " -p 50");
    EXPECT_EQ(bad_horizon.code, 3);
    EXPECT_NE(bad_horizon.out.find("kind=domain"), std::string::npos);

    EXPECT_EQ(run("simulate --setup XYZ -o " + path("x.json")).code, 3);
    EXPECT_EQ(run("--help").code, 0);

    {
        std::ofstream bad(path("bad.json"));
        bad << "{\"schema\": \"banditfit/1\", \"kind\": \"solution\"}";
    }
    EXPECT_EQ(run("benchmark -d " + path("bad.json")).code, 2);
}
