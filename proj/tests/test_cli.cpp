#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "momdp/exact.hpp"
#include "momdp/io.hpp"
#include "support/fixtures.hpp"

using namespace momdp;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "momdp_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("momdp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    static std::string world(const std::string& name) { return std::string(MOMDP_WORLDS_DIR) + "/" + name; }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SynthEvalOnModelFile) {
    io::write_file(path("toy.json"), io::write_model(fixtures::toy_model(2)));
    auto r = run_cli({"synth", "--model", path("toy.json"), "--exact", "--out", path("stack.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto e = run_cli({"eval", "--stack", path("stack.json"), "--state", "0", "--belief", "0.5,0.5"});
    ASSERT_EQ(e.code, 0) << e.err;
    GammaStack st = exact_synth(fixtures::toy_model(2));
    auto v = lexicographic_value(st.at(0, 0), Belief({0.5, 0.5}));
    std::istringstream in(e.out);
    std::string key;
    double V, J, fb;
    in >> key >> V >> key >> J >> key >> fb;
    EXPECT_EQ(V, v.value);
    EXPECT_EQ(J, v.constraint);
    EXPECT_EQ(fb, 1.0 - v.constraint);
}

TEST_F(CliTest, PointBasedVariantsAndTo) {
    for (std::string variant : {"toq", "q", "to"}) {
        auto r = run_cli({"synth", "--grid", world("gate_1x3.json"), "--variant", variant, "--points", "6", "--out",
                          path(variant + ".json"), "--quiet"});
        ASSERT_EQ(r.code, 0) << r.err;
        auto st = io::read_stack(io::read_file(path(variant + ".json")));
        EXPECT_EQ(to_string(st.variant), variant);
    }
    auto e = run_cli({"eval", "--stack", path("to.json"), "--state", "0", "--belief", "0.1,0.9"});
    ASSERT_EQ(e.code, 0);
    EXPECT_NE(e.out.find("failure_bound N/A"), std::string::npos);
    auto q = run_cli({"eval", "--stack", path("toq.json"), "--state", "0", "--belief", "0.1,0.9"});
    EXPECT_NE(q.out.find("J 0.9"), std::string::npos);
}

TEST_F(CliTest, SimulateWritesTrace) {
    ASSERT_EQ(run_cli({"synth", "--grid", world("gate_1x3.json"), "--points", "6", "--out", path("s.json"), "--quiet"}).code, 0);
    auto r = run_cli({"simulate", "--stack", path("s.json"), "--grid", world("gate_1x3.json"), "--rollouts", "50",
                      "--seed", "3", "--trace-out", path("trace.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("failure_rate"), std::string::npos);
    std::string trace = io::read_file(path("trace.csv"));
    EXPECT_EQ(trace.substr(0, trace.find('\n')), "rollout_id,k,s,a,z,b0,b1,outcome");
    EXPECT_NE(trace.find("SUCCESS"), std::string::npos);
    auto again = run_cli({"simulate", "--stack", path("s.json"), "--grid", world("gate_1x3.json"), "--rollouts", "50",
                          "--seed", "3", "--stored-tags"});
    EXPECT_EQ(again.code, 0);
}

TEST_F(CliTest, CompareCsvIsDeterministic) {
    std::vector<std::string> args{"compare", "--grid", world("gate_1x3.json"), "--points", "6", "--rollouts", "300",
                                  "--seed", "11", "--format", "csv"};
    auto a = run_cli(args), b = run_cli(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    std::istringstream in(a.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "grid_world,policy,exp_time,prob_failure,failure_bound,rollouts,failure_halfwidth,time_halfwidth");
    std::vector<std::string> policies;
    while (std::getline(in, line)) policies.push_back(line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1));
    EXPECT_EQ(policies, (std::vector<std::string>{"TO", "Q", "TOQ"}));
    auto table = run_cli({"compare", "--grid", world("gate_1x3.json"), "--points", "6", "--rollouts", "100"});
    EXPECT_NE(table.out.find("Exp.Time"), std::string::npos);
    auto ascii = run_cli({"compare", "--grid", world("grid_5x5_3.txt"), "--sidecar", world("grid_5x5_3.sidecar.json"),
                          "--points", "4", "--rollouts", "20", "--format", "csv", "--timing"});
    ASSERT_EQ(ascii.code, 0) << ascii.err;
    EXPECT_NE(ascii.out.find("total_time_s,backup_time_ms"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run_cli({}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"synth", "--grid", world("gate_1x3.json")}).code, cli::kUsage);  // missing --out
    EXPECT_EQ(run_cli({"synth", "--grid", world("gate_1x3.json"), "--variant", "zz", "--out", path("x")}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"synth", "--grid", path("missing.json"), "--out", path("x")}).code, cli::kUsage);
    io::write_file(path("toy.json"), io::write_model(fixtures::toy_model(6)));
    auto big = run_cli({"synth", "--model", path("toy.json"), "--exact", "--pair-cap", "2", "--out", path("x")});
    EXPECT_EQ(big.code, cli::kIntractable);
    EXPECT_NE(big.err.find("intractable"), std::string::npos);
    io::write_file(path("toy.json"), io::write_model(fixtures::toy_model(3)));
    ASSERT_EQ(run_cli({"synth", "--model", path("toy.json"), "--exact", "--out", path("ok.json")}).code, 0);
    EXPECT_EQ(run_cli({"eval", "--stack", path("ok.json"), "--state", "0", "--belief", "0.5,0.6"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"eval", "--stack", path("ok.json"), "--state", "9", "--belief", "0.5,0.5"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"eval", "--stack", path("ok.json"), "--state", "0", "--belief", "0.5,0.5", "--stage", "9"}).code,
              cli::kUsage);
    io::write_file(path("bad.json"), "{\"nope\": 1}");
    EXPECT_EQ(run_cli({"synth", "--model", path("bad.json"), "--out", path("x")}).code, cli::kFailure);
    EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
}
