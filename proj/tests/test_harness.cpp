#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dqpe/harness/config.hpp"
#include "dqpe/harness/experiments.hpp"
#include "dqpe/harness/output.hpp"
#include "dqpe/harness/pool.hpp"

using namespace dqpe;
using namespace dqpe::harness;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("dqpe_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

/// A sweep small enough for unit tests: two shunt factors, 2 x 2 GRAPE budgets, 2 counting qubits.
const char* tiny_sweep = R"(
[experiment]
kind = sweep
seed = 5

[sweep]
zeta = [100, 1000]

[grape]
iterations = [2, 4]
time_steps = [10, 12]

[qpe]
n_counting = 2
flux_counting = 1
shots = 3
phi_true = 0.25
)";

}  // namespace

// ---------------------------------------------------------------------------
// config

TEST(Config, ParsesTypedScalarsListsAndComments) {
    const auto c = parse_config(R"(
[experiment]
kind = sweep   ; trailing comment
seed = 42
workers = 3

[sweep]
zeta = [10, 100 , 1000]

[grape]
mode = qn
iterations = [100, 200]
time_steps = 150
noise = false

[flux]
delta_ghz = 0.5
)");
    EXPECT_EQ(c.kind, ExperimentKind::sweep);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.workers, 3);
    EXPECT_EQ(c.zeta, (std::vector<double>{10, 100, 1000}));
    EXPECT_EQ(c.grape.iterations, (std::vector<int>{100, 200}));
    EXPECT_EQ(c.grape.time_steps, (std::vector<int>{150}));
    EXPECT_EQ(c.grape.mode, GrapeMode::quasi_newton);
    EXPECT_FALSE(c.grape.noise);
    EXPECT_NEAR(c.flux.params.delta, 2.0 * pi * 0.5, 1e-15);
}

TEST(Config, RejectsMalformedInput) {
    const std::vector<std::string> bad{
        "[experiment]\nseed = 1\n",                              // no kind
        "[experiment]\nkind = teleport\n",                       // unknown kind
        "[experiment]\nkind = ghz\ncolour = red\n",              // unknown key
        "[experiment]\nkind = ghz\n[extras]\na = 1\n",           // unknown section
        "[experiment]\nkind = sweep\n[sweep]\nzeta = [1, 2\n",   // unterminated list
        "[experiment]\nkind = sweep\n[grape]\niterations = [a]\n",
        "[experiment]\nkind = sweep\n[grape]\nx_min = 2\n",
        "[experiment]\nkind = sweep\n[grape]\nmode = newton\n",
        "[experiment]\nkind = sweep\n[sweep]\nzeta = [0.5]\n",
        "[experiment]\nkind = qpe\n[qpe]\nshots = 0\n",
        "[experiment]\nkind = qpe\n[qpe]\nmeasurement = weak\n",
        "[experiment]\nkind = ghz\n[ghz]\ndt = -1\n",
        "[experiment]\nkind = gate-trace\n[gate_trace]\niterations = [100]\n",
        "[experiment]\nkind = ghz\n[hybrid]\nq_factor = 0\n",
        "[experiment]\nkind = ghz\n[grape]\nnoise = maybe\n",
        "[experiment\nkind = ghz\n",
        "[grape]\niterations = 3\n",
    };
    for (const auto& text : bad) EXPECT_THROW(parse_config(text), ConfigError) << text;
}

TEST(Config, ShippedExamplesAllParse) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(fs::path(DQPE_SOURCE_DIR) / "configs")) {
        if (e.path().extension() != ".ini") continue;
        EXPECT_NO_THROW(load_config(e.path())) << e.path();
        ++n;
    }
    EXPECT_EQ(n, 6);
}

// ---------------------------------------------------------------------------
// output

TEST(Output, NumberFormatRoundTrips) {
    for (double x : {0.1, 1.0 / 3.0, 1e-9, 123456.0, -2.5e300}) EXPECT_EQ(std::strtod(fmt(x).c_str(), nullptr), x);
    EXPECT_EQ(fmt(0.5), "0.5");
    EXPECT_EQ(fmt(10.0), "10");
    EXPECT_EQ(fmt(1000.0), "1000");
    EXPECT_EQ(fmt(std::nan("")), "nan");
}

TEST(Output, CsvSortsNumericallyAndChecksWidth) {
    CsvTable t({"a", "b"});
    t.row(10, std::string("x"));
    t.row(9, std::string("y"));
    t.row(9, std::string("b"));
    t.sort_rows();
    EXPECT_EQ(t.str(), "a,b\n9,b\n9,y\n10,x\n");
    EXPECT_THROW(t.row(1), StructuralError);
}

TEST(Output, HeatmapReadsOnlyTheTable) {
    CsvTable t({"x", "y", "v"});
    t.row(1, 10, 0.5);
    t.row(2, 10, 0.25);
    t.row(1, 20, 1.0);
    const std::string svg = heatmap_from_csv(t, "x", "y", "v", "demo");
    std::size_t rects = 0;
    for (std::size_t pos = svg.find("<rect"); pos != std::string::npos; pos = svg.find("<rect", pos + 1)) ++rects;
    EXPECT_EQ(rects, 4u);  // 2 x 2 grid, one cell missing renders as NaN
    EXPECT_NE(svg.find(">-<"), std::string::npos);
    EXPECT_THROW(heatmap_from_csv(t, "x", "nope", "v", ""), StructuralError);
    EXPECT_EQ(colormap(std::nan("")).r, 160);
}

// ---------------------------------------------------------------------------
// pool

TEST(Pool, VisitsEveryIndexOnceAndRethrows) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericalError("x"); }), NumericalError);
}

// ---------------------------------------------------------------------------
// experiments

TEST(Sweep, ResultsIndependentOfWorkerCount) {
    const auto c = parse_config(tiny_sweep);
    std::ostringstream log;
    const auto one = cmd_sweep(c, 1, log), three = cmd_sweep(c, 3, log);
    EXPECT_EQ(one.files.at("sweep.csv"), three.files.at("sweep.csv"));
    EXPECT_EQ(one.files.at("shots.csv"), three.files.at("shots.csv"));
    EXPECT_EQ(one.files.at("sweep.csv").substr(0, one.files.at("sweep.csv").find('\n')),
              "zeta,grape_iterations,time_steps,shots,correct,accuracy,seconds");
}

TEST(Sweep, IdealGatesAreAlwaysCorrect) {
    auto c = parse_config(tiny_sweep);
    c.qpe.ideal_gates = true;
    std::ostringstream log;
    for (const auto& p : run_sweep(c, 1, log)) {
        EXPECT_EQ(p.correct, p.shots);
        EXPECT_GT(p.seconds, 0.0);
    }
}

TEST(Experiments, RerunsAreByteIdentical) {
    std::vector<std::string> texts{
        tiny_sweep,
        "[experiment]\nkind = potential\n[potential]\ngrid = 21\ncut_points = 201\n",
        "[experiment]\nkind = ghz\n[ghz]\nt_max = 5\ndt = 0.5\n",
        "[experiment]\nkind = qpe\nseed = 3\n[qpe]\nphi_true = 0.3\nn_counting = 3\nshots = 20\ngates = ideal\n",
        "[experiment]\nkind = gate-trace\nseed = 2\n[gate_trace]\ntime_steps = 20\niterations = [5, 30]\n",
        "[experiment]\nkind = tomography\n[tomography]\ngate = H\n[grape]\niterations = [3, 6]\ntime_steps = [20]\n",
    };
    for (const auto& t : texts) {
        const auto c = parse_config(t);
        std::ostringstream log;
        const auto a = run_experiment(c, 2, log), b = run_experiment(c, 1, log);
        ASSERT_FALSE(a.files.empty()) << t;
        EXPECT_EQ(a.files, b.files) << t;
    }
}

TEST(Potential, MinimaMatchDenseScan) {
    for (double f : {0.5, 0.53}) {
        const auto mins = potential_cut_minima(0.8, f, 2001);
        ASSERT_EQ(mins.size(), 2u) << f;
        const int n = 200000;
        for (const auto& m : mins) {
            // brute-force argmin over the half-period holding this minimum
            double best = 1e9, arg = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double x = (m.phi_star < 0 ? -pi : 0.0) + pi * i / n;
                const double u = 2.0 + 0.8 - 2.0 * std::cos(x) - 0.8 * std::cos(2.0 * pi * f + 2.0 * x);
                if (u < best) best = u, arg = x;
            }
            EXPECT_NEAR(m.phi_star, arg, 2.0 * pi / n);
            EXPECT_NEAR(m.u, best, 1e-9);
        }
        if (f == 0.5) {
            EXPECT_NEAR(mins[0].u, mins[1].u, 1e-12);
            EXPECT_NEAR(mins[0].phi_star, -mins[1].phi_star, 1e-7);
        } else {
            EXPECT_GT(std::abs(mins[0].u - mins[1].u), 0.1);
        }
    }
}

TEST(GateTrace, LowBudgetTraceIsPrefixOfHighBudget) {
    auto c = parse_config("[experiment]\nkind = gate-trace\nseed = 4\n[gate_trace]\ntime_steps = 20\niterations = [10, 40]\n");
    c.grape.x_min = 1e-12;
    const auto runs = run_gate_trace(c);
    ASSERT_EQ(runs.size(), 2u);
    ASSERT_EQ(runs[0].fidelity_trace.size(), 11u);
    for (std::size_t i = 0; i < runs[0].fidelity_trace.size(); ++i) EXPECT_EQ(runs[0].fidelity_trace[i], runs[1].fidelity_trace[i]);
    EXPECT_EQ(runs[0].time_curve.size(), 21u);
    EXPECT_NEAR(runs[1].time_curve.back(), runs[1].final_fidelity, 1e-12);
}

TEST(GateTrace, NoiselessHadamardReachesTarget) {
    auto c = parse_config("[experiment]\nkind = gate-trace\n[grape]\nnoise = false\n[gate_trace]\ntime_steps = 20\niterations = [100, 500]\n");
    const auto runs = run_gate_trace(c);
    EXPECT_GE(runs.back().final_fidelity, 0.999);
}

// ---------------------------------------------------------------------------
// CLI

namespace {

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" + std::string(DQPE_CLI) + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const fs::path d = scratch_dir("cli_codes");
    const auto ok = write_config(d, "ok.ini", "[experiment]\nkind = potential\n[potential]\ngrid = 5\ncut_points = 11\n");
    const auto bad = write_config(d, "bad.ini", "[experiment]\nkind = potential\n[potential]\ngrid = x\n");
    const auto nan = write_config(d, "nan.ini", "[experiment]\nkind = ghz\n[hybrid]\ng_a = nan\n");
    const auto huge = write_config(d, "huge.ini", "[experiment]\nkind = ghz\n[hybrid]\nomega0_ghz = 1e300\n[ghz]\nt_max = 1\n");
    EXPECT_EQ(run_cli("potential --config " + ok.string() + " --out " + (d / "o").string()), 0);
    EXPECT_TRUE(fs::exists(d / "o" / "manifest.json"));
    EXPECT_EQ(run_cli("potential --config " + bad.string()), 2);
    EXPECT_EQ(run_cli("ghz --config " + ok.string()), 2);  // kind mismatch
    EXPECT_EQ(run_cli("potential --config " + (d / "missing.ini").string()), 2);
    EXPECT_EQ(run_cli("potential"), 2);
    EXPECT_EQ(run_cli("frobnicate --config " + ok.string()), 2);
    EXPECT_EQ(run_cli("ghz --config " + nan.string()), 2);
    EXPECT_EQ(run_cli("ghz --config " + huge.string() + " --out " + (d / "n").string()), 3);  // exponential overflows
}

TEST(Cli, OverridePrecedenceAndManifest) {
    const fs::path d = scratch_dir("cli_override");
    const auto cfg = write_config(d, "q.ini",
                                  "[experiment]\nkind = qpe\nseed = 1\nout = " + (d / "from_config").string() +
                                      "\n[qpe]\ngates = ideal\nshots = 4\nn_counting = 2\n");
    EXPECT_EQ(run_cli("qpe --config " + cfg.string(), "DQPE_OUT=" + (d / "from_env").string()), 0);
    EXPECT_TRUE(fs::exists(d / "from_env" / "qpe_shots.csv"));
    EXPECT_FALSE(fs::exists(d / "from_config"));
    EXPECT_EQ(run_cli("qpe --config " + cfg.string() + " --seed 99 --out " + (d / "flag").string(), "DQPE_OUT=" + (d / "from_env2").string()), 0);
    EXPECT_TRUE(fs::exists(d / "flag" / "qpe_shots.csv"));
    const auto manifest = nlohmann::json::parse(read_file(d / "flag" / "manifest.json"));
    EXPECT_EQ(manifest["seed"], 99);
    EXPECT_EQ(manifest["experiment"], "qpe");
    EXPECT_TRUE(manifest["config"].get<std::string>().find("gates = ideal") != std::string::npos);
    EXPECT_EQ(run_cli("qpe --config " + cfg.string() + " --out " + (d / "w").string(), "DQPE_WORKERS=0"), 2);
}

TEST(Cli, RerunProducesIdenticalCsv) {
    const fs::path d = scratch_dir("cli_rerun");
    const auto cfg = write_config(d, "g.ini", "[experiment]\nkind = ghz\n[ghz]\nt_max = 4\ndt = 0.25\n");
    ASSERT_EQ(run_cli("ghz --config " + cfg.string() + " --out " + (d / "a").string()), 0);
    ASSERT_EQ(run_cli("ghz --config " + cfg.string() + " --out " + (d / "b").string()), 0);
    EXPECT_EQ(read_file(d / "a" / "ghz.csv"), read_file(d / "b" / "ghz.csv"));
}
