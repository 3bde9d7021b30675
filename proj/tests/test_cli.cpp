// End-to-end tests of the qlump binary: flag handling, file formats and the
// 0/2/3 exit-code contract.
#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qlump/chain_file.hpp"
#include "qlump/chain_gen.hpp"
#include "qlump/lumpability.hpp"
#include "qlump/trace_io.hpp"

using namespace qlump;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() /
                 ("qlump_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path log = work_dir() / ("out_" + std::to_string(counter++) + ".log");
    const std::string cmd =
        std::string(QLUMP_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = slurp(log);
    return r;
}

const std::string kRefFlags =
    "--n 100 --a-size 50 --p0 0.25 --q0 0.25 --epsilon 0.1 --seed 7 --kind two-block";

fs::path reference_chain() {
    static const fs::path path = [] {
        const fs::path p = work_dir() / "reference.json";
        REQUIRE(run_cli("generate " + kRefFlags + " -o " + p.string()).exit_code == 0);
        return p;
    }();
    return path;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    REQUIRE(run_cli("").exit_code == 2);
    REQUIRE(run_cli("frobnicate").exit_code == 2);
    REQUIRE(run_cli("generate --n 10 -o /tmp/x.json").exit_code == 2);  // missing p0/q0
    REQUIRE(run_cli("simulate nope.json --bound quux -o /tmp/x.csv").exit_code == 2);
    REQUIRE(run_cli("--help").exit_code == 0);
}

TEST_CASE("generate") {
    SECTION("writes a valid, reproducible chain file") {
        const fs::path a = work_dir() / "gen_a.json";
        const fs::path b = work_dir() / "gen_b.json";
        REQUIRE(run_cli("generate " + kRefFlags + " -o " + a.string()).exit_code == 0);
        REQUIRE(run_cli("generate " + kRefFlags + " -o " + b.string()).exit_code == 0);
        REQUIRE(slurp(a) == slurp(b));

        const ChainFile cf = load_chain_file(a.string());
        REQUIRE(cf.P.dim == 100);
        REQUIRE(cf.partition.block_count() == 2);
        REQUIRE(cf.partition.block(0).size() == 50);
        REQUIRE(cf.metadata["seed"] == 7);
        REQUIRE(tight_epsilon(cf.P, cf.partition) <= 0.1 + 1e-12);
    }
    SECTION("degenerate parameters are refused, naming the inequality") {
        const auto r = run_cli("generate --n 10 --p0 0.95 --q0 0.2 --epsilon 0.1 --seed 1 -o " +
                               (work_dir() / "bad.json").string());
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.output.find("p0 + epsilon") != std::string::npos);
    }
    SECTION("lumpable kind insists on epsilon zero") {
        const auto r = run_cli("generate --kind lumpable --n 10 --p0 0.3 --q0 0.2 --epsilon 0.1 "
                               "--seed 1 -o " + (work_dir() / "lump_bad.json").string());
        REQUIRE(r.exit_code == 2);
    }
    SECTION("perturbed kind produces a quasi-lumpable chain within budget") {
        const fs::path p = work_dir() / "perturbed.json";
        REQUIRE(run_cli("generate --kind perturbed --n 20 --a-size 8 --p0 0.3 --q0 0.2 "
                        "--epsilon 0.08 --seed 5 -o " + p.string()).exit_code == 0);
        const ChainFile cf = load_chain_file(p.string());
        const double eps = tight_epsilon(cf.P, cf.partition);
        REQUIRE(eps <= 0.08 + 1e-12);
        REQUIRE(eps > 1e-6);  // genuinely perturbed
    }
}

TEST_CASE("analyze") {
    SECTION("reports the reference fixture consistently with the library") {
        const fs::path json = work_dir() / "analyze.json";
        const auto r = run_cli("analyze " + reference_chain().string() + " --json " +
                               json.string());
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.output.find("exactly lumpable:   no") != std::string::npos);
        REQUIRE(r.output.find("valid bound parameters") != std::string::npos);

        // The machine-readable report must match a fresh library computation.
        const ChainFile cf = load_chain_file(reference_chain().string());
        const LumpabilityReport rep = analyze_lumpability(cf.P, cf.partition);
        nlohmann::json j;
        std::ifstream(json) >> j;
        REQUIRE(j["m"] == 2);
        REQUIRE(j["epsilon"].get<double>() == rep.epsilon);
        REQUIRE(j["rho_L"].get<double>() == rep.rho_lower);
        REQUIRE(j["epsilon"].get<double>() <= 0.1 + 1e-12);
        REQUIRE(j["valid"] == true);
        REQUIRE(j["exactly_lumpable"] == false);
        const BoundParams params{rep.rho_lower, rep.epsilon, 2};
        REQUIRE(j["limit_l1_sum"].get<double>() == aggregate_deviation_limit(params));
    }
    SECTION("verdict flips on an exactly lumpable fixture") {
        const fs::path p = work_dir() / "lumpable.json";
        REQUIRE(run_cli("generate --kind lumpable --n 12 --p0 0.3 --q0 0.2 --seed 3 -o " +
                        p.string()).exit_code == 0);
        const auto r = run_cli("analyze " + p.string());
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.output.find("exactly lumpable:   yes") != std::string::npos);
    }
    SECTION("invalid files exit 2 with a diagnostic") {
        const fs::path bad = work_dir() / "bad_chain.json";
        std::ofstream(bad) << R"({"n": 2, "P": [[0.5, 0.5], [1.0]], "partition": [[0, 1]]})";
        const auto r = run_cli("analyze " + bad.string());
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.output.find("expected 2") != std::string::npos);
        REQUIRE(run_cli("analyze " + (work_dir() / "nothere.json").string()).exit_code == 2);
    }
}

TEST_CASE("simulate") {
    SECTION("exact mode with the two-block bound dominates on the reference fixture") {
        const fs::path csv = work_dir() / "sim_exact.csv";
        const auto r = run_cli("simulate " + reference_chain().string() +
                               " --mode exact --horizon 200 --bound two-block -o " + csv.string());
        REQUIRE(r.exit_code == 0);
        std::ifstream in(csv);
        const auto rows = read_trace_csv(in);
        REQUIRE(rows.size() == 201);
        REQUIRE(rows[0].norm == NormTag::none);   // curve starts at t = 1
        for (std::size_t i = 1; i < rows.size(); ++i) {
            REQUIRE(rows[i].norm == NormTag::tv);
            REQUIRE(rows[i].deviation <= rows[i].bound + 1e-9);
        }
    }
    SECTION("aggregate bound also holds") {
        const fs::path csv = work_dir() / "sim_thm2.csv";
        REQUIRE(run_cli("simulate " + reference_chain().string() +
                        " --horizon 100 --bound thm2 -o " + csv.string()).exit_code == 0);
        std::ifstream in(csv);
        REQUIRE(read_trace_csv(in)[1].norm == NormTag::l1_sum);
    }
    SECTION("Monte Carlo traces are reproducible") {
        const fs::path a = work_dir() / "mc_a.csv";
        const fs::path b = work_dir() / "mc_b.csv";
        const std::string flags = " --mode mc --walkers 2000 --seed 11 --horizon 40 -o ";
        REQUIRE(run_cli("simulate " + reference_chain().string() + flags + a.string())
                    .exit_code == 0);
        REQUIRE(run_cli("simulate " + reference_chain().string() + flags + b.string())
                    .exit_code == 0);
        REQUIRE(slurp(a) == slurp(b));
    }
    SECTION("two-block bound on a 3-block chain is a usage error") {
        SeededRng rng(71);
        const StatePartition q({{0, 1}, {2, 3}, {4, 5}}, 6);
        Matrix target(3, 1.0 / 3.0);
        const Matrix p = generate_exactly_lumpable(6, q, target, 9);
        const fs::path file = work_dir() / "three_block.json";
        save_chain_file({p, q, {}}, file.string());
        const auto r = run_cli("simulate " + file.string() + " --bound two-block -o " +
                               (work_dir() / "x.csv").string());
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.output.find("2-block") != std::string::npos);
    }
    SECTION("lumped-chain bound requires exact lumpability") {
        const auto r = run_cli("simulate " + reference_chain().string() + " --bound cor1 -o " +
                               (work_dir() / "x.csv").string());
        REQUIRE(r.exit_code == 2);

        const fs::path p = work_dir() / "lumpable2.json";
        REQUIRE(run_cli("generate --kind lumpable --n 12 --p0 0.35 --q0 0.15 --seed 13 -o " +
                        p.string()).exit_code == 0);
        REQUIRE(run_cli("simulate " + p.string() + " --bound cor1 --horizon 60 -o " +
                        (work_dir() / "cor1.csv").string()).exit_code == 0);
    }
    SECTION("a chain violating its declared parameters exits 3") {
        // Real spread is ~0.3 but the metadata claims a nearly lumpable chain.
        const GeneratedChain g = generate_two_block_chain({20, 10, {}, 0.1, 0.1, 0.3, 41});
        ChainFile cf{g.P, g.Q, {{"kind", "two-block"},
                                {"p0", 0.49},
                                {"q0", 0.49},
                                {"epsilon", 1e-6}}};
        const fs::path file = work_dir() / "doctored.json";
        save_chain_file(cf, file.string());
        const auto r = run_cli("simulate " + file.string() +
                               " --mode exact --horizon 50 --bound two-block -o " +
                               (work_dir() / "doctored.csv").string());
        REQUIRE(r.exit_code == 3);
        REQUIRE(r.output.find("bound violated") != std::string::npos);
    }
}

TEST_CASE("reproduce-paper") {
    SECTION("small run passes all gates and emits the expected files") {
        const fs::path dir = work_dir() / "repro";
        const auto r = run_cli("reproduce-paper --seeds 2 --walkers 2000 -o " + dir.string());
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.output.find("2/2 seeds passed") != std::string::npos);
        for (int seed : {1, 2}) {
            const std::string prefix = "seed" + std::to_string(seed);
            REQUIRE(fs::exists(dir / (prefix + "_chain.json")));
            REQUIRE(fs::exists(dir / (prefix + "_fig1.csv")));
            REQUIRE(fs::exists(dir / (prefix + "_fig2.csv")));
            REQUIRE(fs::exists(dir / (prefix + "_exact.csv")));
            REQUIRE(fs::exists(dir / (prefix + "_mc.csv")));
        }
        REQUIRE(fs::exists(dir / "summary.csv"));

        // The asymptote column of the figure CSVs is the constant 0.2.
        std::ifstream fig1(dir / "seed1_fig1.csv");
        std::string header, line;
        std::getline(fig1, header);
        REQUIRE(header == "t,mc_mass_a,exact_mass_a,mc_deviation,exact_deviation,bound,asymptote");
        while (std::getline(fig1, line))
            REQUIRE(line.substr(line.rfind(',') + 1) == "0.2");
    }
    SECTION("degenerate sampling flags a caveat instead of asserting") {
        const fs::path dir = work_dir() / "repro_tiny";
        const auto r = run_cli("reproduce-paper --seeds 1 --walkers 1 -o " + dir.string());
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.output.find("caveat") != std::string::npos);
        REQUIRE(r.output.find("MC checks skipped") != std::string::npos);
    }
}
