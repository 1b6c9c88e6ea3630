#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path scratch_dir()
{
    const auto dir = fs::temp_directory_path() / ("r0fde_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args)
{
    const auto err_path = scratch_dir() / "stderr.txt";
    const std::string cmd = std::string("'") + R0FDE_CLI_PATH + "' " + args + " 2>'" + err_path.string() + "'";
    RunResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) {
        r.out.append(buf, got);
    }
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
}

std::string data(const std::string& name) { return std::string("'") + R0FDE_DATA_DIR + "/" + name + "'"; }

fs::path write_scratch(const std::string& name, const std::string& text)
{
    const auto p = scratch_dir() / name;
    std::ofstream(p) << text;
    return p;
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header)
{
    std::istringstream in(text);
    std::string line;
    std::getline(in, *header);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST(CliR0, ScalarSpec)
{
    const auto r = run("r0 " + data("scalar_beta2.json"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["r0_direct"].get<double>(), 2.0);
    EXPECT_NEAR(j["r0_bisection"].get<double>(), 2.0, 1e-3);
    EXPECT_NEAR(j["lambda_star"].get<double>(), 0.374822528183623381617837317112, 1e-9);
    EXPECT_EQ(j["regime"], "above");
    EXPECT_TRUE(j["consistency"]["all"].get<bool>());
    EXPECT_EQ(j["t0"], 1.0);
    EXPECT_EQ(j["n"], 128);
}

TEST(CliR0, TickSpecMatchesClosedForm)
{
    const auto r = run("r0 --method direct " + data("r0_above.json"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_NEAR(j["r0_direct"].get<double>(), j["r0_closed_form"].get<double>(), 1e-12);
    EXPECT_NEAR(j["r0_closed_form"].get<double>(), 1.5, 1e-12);
    EXPECT_TRUE(j["r0_bisection"].is_null());
}

TEST(CliR0, NegativeFIsRejectedNamingAssumption)
{
    const auto r = run("r0 " + data("negative_f.json"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("(A1)"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(CliR0, ForcedRunOnInvalidModelWarns)
{
    const auto r = run("r0 --force --method direct " + data("negative_f.json"));
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.err.find("--force"), std::string::npos) << r.err;
    EXPECT_FALSE(json::parse(r.out)["consistency"]["a1_positive"].get<bool>());
}

TEST(CliR0, NumericalFailureExitsThree)
{
    // M(-1) = e * 1e308 overflows during the lower bracket search.
    const auto spec = write_scratch("overflow.json",
        R"({"m": 1, "F": {"A0": [[0]], "delayed": [{"tau": 1, "A": [[1e308]]}]}, "V": {"A0": [[1]]}})");
    const auto r = run("stability '" + spec.string() + "'");
    EXPECT_EQ(r.exit_code, 3) << r.out << r.err;
}

TEST(CliR0, MalformedSpecIsSchemaError)
{
    const auto bad = write_scratch("bad.json", "{\"m\": 1, \"F\": {\"A0\": [[0]]}, \"V\": {\"A0\": [[1, 2]]}}");
    const auto r = run("r0 '" + bad.string() + "'");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("$.V.A0[0]"), std::string::npos) << r.err;

    const auto broken = write_scratch("broken.json", "{\n\"m\": 1,\n");
    EXPECT_EQ(run("r0 '" + broken.string() + "'").exit_code, 2);
    EXPECT_EQ(run("r0 /nonexistent/spec.json").exit_code, 2);
}

TEST(CliStability, MirrorsSpectralExamples)
{
    const auto critical = json::parse(run("stability " + data("scalar_critical.json")).out);
    EXPECT_NEAR(critical["s_L"].get<double>(), 0.0, 1e-10);
    EXPECT_TRUE(critical["consistent"].get<bool>());

    const auto growing = json::parse(run("stability " + data("scalar_beta2.json")).out);
    EXPECT_NEAR(growing["s_hat"].get<double>(), 1.0, 1e-14);
    EXPECT_GT(growing["s_L"].get<double>(), 0.0);
    EXPECT_TRUE(growing["consistent"].get<bool>());

    const auto decaying = write_scratch("decay.json",
        R"({"m": 1, "F": {"A0": [[0]], "delayed": [{"tau": 1, "A": [[1]]}]}, "V": {"A0": [[2]]}})");
    const auto d = json::parse(run("stability '" + decaying.string() + "'").out);
    EXPECT_NEAR(d["s_hat"].get<double>(), -1.0, 1e-14);
    EXPECT_NEAR(d["s_L"].get<double>(), -0.442854401002388583141327999999, 1e-9);
    EXPECT_TRUE(d["consistent"].get<bool>());
}

TEST(CliSimulate, ZeroInitGivesZeroCsv)
{
    const auto csv = scratch_dir() / "zero.csv";
    const auto r = run("simulate --init const:0 --T 5 --out '" + csv.string() + "' " + data("two_stage.json"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    std::string header;
    const auto rows = parse_csv(slurp(csv), &header);
    EXPECT_EQ(header, "t,u1,u2");
    ASSERT_FALSE(rows.empty());
    EXPECT_DOUBLE_EQ(rows.back()[0], 5.0);
    for (const auto& row : rows) {
        EXPECT_EQ(row[1], 0.0);
        EXPECT_EQ(row[2], 0.0);
    }
}

TEST(CliSimulate, TickAboveReachesEquilibrium)
{
    const auto csv = scratch_dir() / "tick.csv";
    const auto svg = scratch_dir() / "tick.svg";
    const auto r = run("simulate --init const:1 --T 400 --stride 50 --out '" + csv.string() + "' --plot '" +
                       svg.string() + "' " + data("r0_above.json"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto eq = json::parse(run("tick-equilibrium " + data("r0_above.json")).out);
    const auto u_star = eq["equilibrium"];
    const std::vector<double> target{u_star["L"], u_star["N"], u_star["A_q"], u_star["A_f"]};
    std::string header;
    const auto rows = parse_csv(slurp(csv), &header);
    EXPECT_EQ(header, "t,u1,u2,u3,u4");
    const auto& last = rows.back();
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(last[i + 1], target[i], 1e-4 * target[0]);
    }
    const auto plot = slurp(svg);
    EXPECT_EQ(plot.rfind("<svg", 0), 0u);
    EXPECT_NE(plot.find("<polyline"), std::string::npos);
    EXPECT_NE(plot.find("A_f"), std::string::npos);
}

TEST(CliSimulate, HalvedStepConvergesAtFourthOrder)
{
    auto final_value = [](const std::string& step) {
        const auto r = run("simulate --init const:1 --T 3 --step " + step + " " + data("two_stage.json"));
        EXPECT_EQ(r.exit_code, 0) << r.err;
        return json::parse(r.out)["final_state"].get<std::vector<double>>();
    };
    const auto a = final_value("0.1");
    const auto b = final_value("0.05");
    const auto c = final_value("0.025");
    double previous = 0.0, current = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        previous = std::max(previous, std::abs(a[i] - b[i]));
        current = std::max(current, std::abs(b[i] - c[i]));
    }
    EXPECT_LT(current, previous / 8.0);
}

TEST(CliSimulate, HistoryFileInit)
{
    const auto hist = write_scratch("hist.json", R"({"tau": 1, "values": [[1], [1], [1], [1], [1]]})");
    const auto r = run("simulate --init '" + hist.string() + "' --T 1 --step 0.25 " + data("scalar_critical.json"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    // u' = -u + u(t-1) with u = 1 on [-1, 0] stays at 1.
    EXPECT_NEAR(json::parse(r.out)["final_state"][0].get<double>(), 1.0, 1e-14);
}

TEST(CliVerify, TickSpecAllSuitesPass)
{
    const auto r = run("verify --suite all --count 20 " + data("r0_above.json"));
    ASSERT_EQ(r.exit_code, 0) << r.out << r.err;
    const auto j = json::parse(r.out);
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_EQ(j["seed"], 0);
}

TEST(CliVerify, RandomBatchIsDeterministic)
{
    const auto a = run("verify --suite theorem2.1 --seed 7 --count 30 " + data("scalar_beta2.json"));
    const auto b = run("verify --suite theorem2.1 --seed 7 --count 30 " + data("scalar_beta2.json"));
    ASSERT_EQ(a.exit_code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_TRUE(json::parse(a.out)["pass"].get<bool>());
}

TEST(CliVerify, MalformedSpecExitsTwo)
{
    const auto bad = write_scratch("bad_verify.json", R"({"m": 1, "F": {"A0": [[0]]}})");
    const auto r = run("verify '" + bad.string() + "'");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("missing field"), std::string::npos) << r.err;
}

TEST(CliTickEquilibrium, BelowThresholdHasNone)
{
    const auto j = json::parse(run("tick-equilibrium " + data("r0_below.json")).out);
    EXPECT_TRUE(j["equilibrium"].is_null());
    EXPECT_NEAR(j["r0"].get<double>(), 0.8, 1e-12);
}

TEST(CliCanonicalize, DataFilesAreCanonical)
{
    for (const auto& entry : fs::directory_iterator(R0FDE_DATA_DIR)) {
        if (entry.path().extension() != ".json") {
            continue;
        }
        const auto r = run("canonicalize '" + entry.path().string() + "'");
        ASSERT_EQ(r.exit_code, 0) << entry.path() << r.err;
        EXPECT_EQ(r.out, slurp(entry.path())) << entry.path();
    }
}
