#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "memtutor/csv.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = MEMTUTOR_CLI_PATH;
const std::string kRoot = "/tmp/memtutor_test_cli";

int run_cmd(const std::string& args) {
    const std::string cmd = kBin + " " + args + " >" + kRoot + "/stdout.txt 2>" + kRoot +
                            "/stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string captured(const std::string& which) {
    return memtutor::read_file(kRoot + "/" + which + ".txt");
}

std::string only_run_dir(const std::string& under) {
    std::string found;
    for (const auto& e : fs::directory_iterator(under)) {
        REQUIRE(found.empty());
        found = e.path().string();
    }
    REQUIRE_FALSE(found.empty());
    return found;
}

}  // namespace

TEST_CASE("cli surface") {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);

    SECTION("help exits cleanly") {
        REQUIRE(run_cmd("--help") == 0);
        REQUIRE(run_cmd("run --help") == 0);
    }
    SECTION("a subcommand is required") {
        REQUIRE(run_cmd("") == 2);
    }
    SECTION("unknown tutor fails with usage guidance") {
        REQUIRE(run_cmd("run --tutor supermemo --seeds 0 --out " + kRoot + "/u") == 2);
        REQUIRE(captured("stderr").find("usage") != std::string::npos);
    }
    SECTION("rl without priors is a config error with a way out") {
        REQUIRE(run_cmd("run --tutor rl --seeds 0 --out " + kRoot + "/u") == 2);
        REQUIRE(captured("stderr").find("pretrain") != std::string::npos);
    }
    SECTION("seeds are mandatory and validated for run") {
        REQUIRE(run_cmd("run --tutor random --out " + kRoot + "/u") == 2);
        REQUIRE(run_cmd("run --tutor random --seeds junk --out " + kRoot + "/u") == 2);
        REQUIRE(run_cmd("run --tutor random --seeds 3..1 --out " + kRoot + "/u") == 2);
    }
    SECTION("missing config file is a usage error") {
        REQUIRE(run_cmd("run --config /nonexistent.cfg --tutor random --seeds 0 --out " +
                        kRoot + "/u") == 2);
    }
}

TEST_CASE("cli run is reproducible and well-formed") {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    const std::string out = kRoot + "/runs";

    REQUIRE(run_cmd("run --tutor random --seeds 0..2 --out " + out) == 0);
    const std::string dir = only_run_dir(out);
    REQUIRE(dir.find("random-") != std::string::npos);
    for (const char* f : {"curve.csv", "events.csv", "plot.svg", "config.txt"})
        REQUIRE(fs::exists(dir + "/" + f));

    const auto events = memtutor::read_lines(dir + "/events.csv");
    REQUIRE(events.size() == 1 + 3 * 300);
    const auto curve = memtutor::read_lines(dir + "/curve.csv");
    REQUIRE(curve.size() == 1 + 30);

    const std::string curve_before = memtutor::read_file(dir + "/curve.csv");
    const std::string events_before = memtutor::read_file(dir + "/events.csv");
    const std::string svg_before = memtutor::read_file(dir + "/plot.svg");

    SECTION("rerun lands in the same directory with identical bytes") {
        REQUIRE(run_cmd("run --tutor random --seeds 0..2 --out " + out) == 0);
        REQUIRE(only_run_dir(out) == dir);
        REQUIRE(memtutor::read_file(dir + "/curve.csv") == curve_before);
        REQUIRE(memtutor::read_file(dir + "/events.csv") == events_before);
        REQUIRE(memtutor::read_file(dir + "/plot.svg") == svg_before);
    }
    SECTION("thread cap does not change results") {
        fs::remove_all(dir);
        const std::string cmd = "MEMTUTOR_THREADS=3 " + kBin + " run --tutor random --seeds 0..2 --out " +
                                out + " >/dev/null 2>&1";
        REQUIRE(std::system(cmd.c_str()) == 0);
        REQUIRE(memtutor::read_file(dir + "/curve.csv") == curve_before);
        REQUIRE(memtutor::read_file(dir + "/events.csv") == events_before);
    }
    SECTION("seed and override changes relocate the run directory") {
        REQUIRE(run_cmd("run --tutor random --seeds 5 --out " + out) == 0);
        REQUIRE(run_cmd("run --tutor random --seeds 0..2 --set fit.epochs=5 --out " + out) == 0);
        int dirs = 0;
        for (const auto& e : fs::directory_iterator(out)) {
            (void)e;
            ++dirs;
        }
        REQUIRE(dirs == 3);
    }
}

TEST_CASE("cli pretrain, compare, and plot chain") {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    const std::string pre = kRoot + "/pre";

    REQUIRE(run_cmd("pretrain --seeds 0 --set pretrain.population=10 --set pretrain.epochs=40 --out " +
                    pre) == 0);
    REQUIRE(fs::exists(pre + "/priors.csv"));
    REQUIRE(fs::exists(pre + "/params.csv"));
    const auto prior_lines = memtutor::read_lines(pre + "/priors.csv");
    REQUIRE(prior_lines.size() == 5);  // one line per family
    REQUIRE(memtutor::split_csv_line(prior_lines[0])[0] == "alpha");
    REQUIRE(memtutor::split_csv_line(prior_lines[4])[0] == "phi");
    const std::string stdout_text = captured("stdout");
    for (const char* fam : {"alpha", "delta", "beta", "theta", "phi"})
        REQUIRE(stdout_text.find(fam) != std::string::npos);

    const std::string before = memtutor::read_file(pre + "/priors.csv");
    REQUIRE(run_cmd("pretrain --seeds 0 --set pretrain.population=10 --set pretrain.epochs=40 --out " +
                    pre) == 0);
    REQUIRE(memtutor::read_file(pre + "/priors.csv") == before);

    REQUIRE(run_cmd("run --tutor random --seeds 0,1 --out " + kRoot + "/a") == 0);
    const std::string dir_a = only_run_dir(kRoot + "/a");
    REQUIRE(run_cmd("run --tutor leitner --seeds 0,1 --out " + kRoot + "/b") == 0);
    const std::string dir_b = only_run_dir(kRoot + "/b");

    SECTION("compare overlays two runs") {
        REQUIRE(run_cmd("compare " + dir_a + " " + dir_b + " --out " + kRoot + "/cmp") == 0);
        REQUIRE(fs::exists(kRoot + "/cmp/compare.svg"));
        const auto table = memtutor::read_lines(kRoot + "/cmp/table.csv");
        REQUIRE(table.size() == 1 + 2);
        REQUIRE(table[0] == "tutor,final_mean,final_std,source");
        // table finals equal the curve files' last rows
        const auto curve_a = memtutor::read_lines(dir_a + "/curve.csv");
        const auto last = memtutor::split_csv_line(curve_a.back());
        const auto row = memtutor::split_csv_line(table[1]);
        REQUIRE(row[0] == "random");
        REQUIRE(row[1] == last[2]);
        REQUIRE(row[2] == last[3]);
    }
    SECTION("comparing a run with itself shows a zero gap") {
        REQUIRE(run_cmd("compare " + dir_a + " " + dir_a + " --out " + kRoot + "/self") == 0);
        const auto table = memtutor::read_lines(kRoot + "/self/table.csv");
        REQUIRE(table.size() == 1 + 2);
        const auto r1 = memtutor::split_csv_line(table[1]);
        const auto r2 = memtutor::split_csv_line(table[2]);
        REQUIRE(r1[1] == r2[1]);
        REQUIRE(r1[2] == r2[2]);
    }
    SECTION("compare needs two directories") {
        REQUIRE(run_cmd("compare " + dir_a + " --out " + kRoot + "/cmp") == 2);
        REQUIRE(run_cmd("compare " + dir_a + " " + kRoot + "/missing --out " + kRoot + "/cmp") ==
                2);
    }
    SECTION("plot re-renders from the curve file") {
        fs::remove(dir_a + "/plot.svg");
        REQUIRE(run_cmd("plot " + dir_a) == 0);
        REQUIRE(fs::exists(dir_a + "/plot.svg"));
        REQUIRE(run_cmd("plot " + dir_a + "/curve.csv --out " + kRoot + "/alt.svg") == 0);
        REQUIRE(fs::exists(kRoot + "/alt.svg"));
    }
}

TEST_CASE("cli selftest passes") {
    fs::create_directories(kRoot);
    REQUIRE(run_cmd("selftest") == 0);
    const std::string text = captured("stdout");
    REQUIRE(text.find("bandit") != std::string::npos);
    REQUIRE(text.find("FAIL") == std::string::npos);
}
