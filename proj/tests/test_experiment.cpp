#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "ksv/experiment.hpp"
#include "oracles.hpp"

using namespace ksv;
using oracle::kPi;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ksv_experiment_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_SUITE("experiment") {
    TEST_CASE("configuration round trip") {
        const auto c = parse(
            "[run]\ncommand = sweep\nseed = 99\n"
            "[spec]\nn = 2\nA = 1, 0.5, 0.5, 2\nbeta = 4pi, 0.1\nv = -1, 0, 1, 0.25\n"
            "[grid]\nL = 9.5\nN = 96\n"
            "[solver]\ntol_fp = 3e-10\ninit = random\nt_end = 2.5\n"
            "[sweep]\naxis = mass\nfrom = 0.1\nto = 0.9\ncount = 5\n"
            "[output]\ndir = somewhere\ndump_fields = true\n");
        CHECK(c.spec.beta[0] == doctest::Approx(4 * kPi));
        CHECK(c.sweep.points().size() == 5);
        CHECK(c.sweep.points().back() == doctest::Approx(0.9));
        const auto again = parse(serialize_config(c));
        CHECK(again == c);
    }

    TEST_CASE("defaults and coordinates") {
        const auto c = parse("[run]\ncommand = classify\n[spec]\nn = 1\nA = 2\nbeta = 1\n");
        CHECK(c.grid.half_width == 12.0);
        CHECK(c.grid.cells_per_side == 256);
        CHECK(c.spec.centers.size() == 1);
        CHECK(c.spec.centers[0].x == 0.0);
    }

    TEST_CASE("errors name the offending line") {
        CHECK(error_line("[run]\ncommand = classify\n[spec]\nn = 1\nA = 1\nbeta = -3\n") == 6);
        CHECK(error_line("[run]\ncommand = classify\n[spec]\nn = 2\nA = 1, 2, 3, 1\nbeta = 1, 1\n") == 5);
        CHECK(error_line("[run]\ncommand = frobnicate\n[spec]\nn = 1\nA = 1\nbeta = 1\n") == 2);
        CHECK(error_line("[run]\ncommand = classify\nmystery = 1\n[spec]\nn = 1\nA = 1\nbeta = 1\n") == 3);
        CHECK(error_line("[run]\ncommand = classify\n[spec]\nn = 1\nA = 1\nbeta = 1\n[grid]\nN = 7\n") == 8);
        CHECK_THROWS_AS(parse("[spec]\nn = 1\nA = 1\nbeta = 1\n"), ConfigError);
    }

    TEST_CASE("classify lists every nonempty subset") {
        auto c = parse("[run]\ncommand = classify\n[spec]\nn = 2\nA = 1, 1, 1, 1\nbeta = 4pi, 4pi\n");
        c.output.dir = scratch("classify").string();
        const auto out = run(c);
        CHECK(out.exit_code == kExitOk);
        const auto doc = read_json(out.result_path);
        CHECK(doc["result"]["lambda_table"].size() == 3);
        CHECK(doc["result"]["class"] == "critical");
        CHECK(doc["status"]["exit_code"] == 0);
        fs::remove_all(c.output.dir);
    }

    TEST_CASE("decoupled minimization through the runner") {
        auto c = parse("[run]\ncommand = minimize\n[spec]\nn = 2\nA = 0, 0, 0, 0\nbeta = 1, 2\nv = -2, 0, 2, 1\n");
        c.output.dir = scratch("minimize").string();
        const auto out = run(c);
        CHECK(out.exit_code == kExitOk);
        const auto doc = read_json(out.result_path);
        const double expected = std::log(1 / (2 * kPi)) + 2 * std::log(2 / (2 * kPi));
        CHECK(std::abs(doc["result"]["final_energy"]["total"].get<double>() - expected) <= 1e-3 * 3);
        CHECK(doc["result"]["verdict"] == "minimizer");
        CHECK(fs::exists(fs::path(c.output.dir) / "trace.csv"));
        fs::remove_all(c.output.dir);
    }

    TEST_CASE("module errors map to exit codes") {
        auto c = parse("[run]\ncommand = minimize\n[spec]\nn = 1\nA = 1\nbeta = 9pi\n[grid]\nL = 6\nN = 32\n");
        c.output.dir = scratch("inadmissible").string();
        CHECK(run(c).exit_code == kExitConfig);
        c = parse("[run]\ncommand = minimize\n[spec]\nn = 1\nA = 1\nbeta = 8pi\n[grid]\nL = 12\nN = 128\n");
        c.output.dir = scratch("critical").string();
        const auto out = run(c);
        CHECK(out.exit_code == kExitSignal);
        CHECK(out.classification == "concentration");
        c = parse("[run]\ncommand = minimize\n[spec]\nn = 1\nA = 1\nbeta = 6pi\n[grid]\nL = 12\nN = 64\n[solver]\nmax_iterations = 1\n");
        c.output.dir = scratch("budget").string();
        CHECK(run(c).exit_code == kExitConvergence);
        for (auto d : {"inadmissible", "critical", "budget"}) fs::remove_all(scratch(d));
    }

    TEST_CASE("command line runs are reproducible") {
        const fs::path dir = scratch("cli");
        fs::create_directories(dir);
        {
            std::ofstream cfg(dir / "run.ini");
            cfg << "[run]\ncommand = minimize\nseed = 7\n[spec]\nn = 2\nA = 1, 0.5, 0.5, 1\nbeta = 3, 4\n"
                   "v = -1, 0, 1, 0\n[grid]\nL = 8\nN = 64\n[solver]\ninit = random\n";
        }
        auto invoke = [&](const std::string& out) {
            const std::string cmd = std::string(KSV_CLI_PATH) + " --config " + (dir / "run.ini").string() +
                                    " --threads 1 --out " + (dir / out).string() + " > /dev/null";
            return std::system(cmd.c_str());
        };
        CHECK(invoke("a") == 0);
        CHECK(invoke("b") == 0);
        const auto ta = slurp(dir / "a" / "trace.csv");
        CHECK(!ta.empty());
        CHECK(ta == slurp(dir / "b" / "trace.csv"));
        fs::remove_all(dir);
    }
}
