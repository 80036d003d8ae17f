#include "run_cli.hpp"

#include "unichain/fixtures.hpp"
#include "unichain/instance_file.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>

using unichain::oracle::run_cli;

namespace {

std::string temp(const std::string& name) { return ::testing::TempDir() + "/unichain_cli_" + name; }

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    return nlohmann::json::parse(in);
}

} // namespace

TEST(Cli, EvalFixture) {
    const auto report = temp("eval.json");
    const auto run = run_cli("--report " + report + " eval fixture:example-4-1 --policy '1,1;0,1;1,0;0,0'");
    ASSERT_EQ(run.exit_code, 0) << run.output;
    EXPECT_NE(run.output.find("V(1,1) = 1"), std::string::npos) << run.output;
    const auto doc = read_json(report);
    ASSERT_EQ(doc["report"]["results"].size(), 4u);
    EXPECT_EQ(doc["report"]["results"][1]["gain"]["value"].get<double>(), 0.5);
    EXPECT_EQ(doc["exit_code"].get<int>(), 0);
}

TEST(Cli, EvalReducibleFallsBackToCesaro) {
    const auto run = run_cli("eval fixture:example-4-2 --policy 0,0");
    ASSERT_EQ(run.exit_code, 0) << run.output;
    EXPECT_NE(run.output.find("[cesaro]"), std::string::npos) << run.output;
}

TEST(Cli, ValidateReportsMultichainWitness) {
    const auto run = run_cli("validate fixture:example-4-2");
    EXPECT_EQ(run.exit_code, 0);
    EXPECT_NE(run.output.find("unichain: no"), std::string::npos);
    EXPECT_NE(run.output.find("reducible policy (0,0)"), std::string::npos) << run.output;
}

TEST(Cli, SolveMethods) {
    const auto brute = run_cli("solve fixture:example-4-1");
    EXPECT_EQ(brute.exit_code, 0);
    EXPECT_NE(brute.output.find("optimal gain 1,"), std::string::npos) << brute.output;
    const auto pi = run_cli("solve random:4,2,0.05,3 --method pi");
    EXPECT_EQ(pi.exit_code, 0) << pi.output;
    EXPECT_EQ(run_cli("solve fixture:example-4-1 --method simplex").exit_code, 2);
}

TEST(Cli, SolveOnMultichainIsInputError) {
    const auto run = run_cli("solve fixture:example-4-2");
    EXPECT_EQ(run.exit_code, 2);
    EXPECT_NE(run.output.find("reducible-policy-found"), std::string::npos) << run.output;
    EXPECT_NE(run.output.find("witness policy (0,0)"), std::string::npos) << run.output;
}

TEST(Cli, ClosurePassAndFail) {
    EXPECT_EQ(run_cli("closure random:4,2,0.05,11").exit_code, 0);
    const auto fail = run_cli("closure fixture:example-4-1 --policies '0,1;1,0'");
    EXPECT_EQ(fail.exit_code, 1);
    EXPECT_NE(fail.output.find("witness (1,1) value 1 vs 0.5"), std::string::npos) << fail.output;
}

TEST(Cli, GenerateThenValidateAndSimulate) {
    const auto file = temp("gen.json");
    ASSERT_EQ(run_cli("gen --states 3 --actions 2 --min-prob 0.05 --seed 7 --ties 2 --out " + file).exit_code, 0);
    const auto model = unichain::read_instance_file(file);
    EXPECT_EQ(model.num_states(), 3u);
    EXPECT_EQ(run_cli("validate " + file).exit_code, 0);
    EXPECT_EQ(run_cli("mix-check " + file + " --samples 40 --seed 3").exit_code, 0);

    const auto csv = temp("snap.csv");
    const auto sim = run_cli("simulate " + file + " --schedule optimal-blocks --steps 1000 --seed 1 --snapshots " + csv);
    EXPECT_EQ(sim.exit_code, 0) << sim.output;
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "step,running_average,visits_0,visits_1,visits_2");
}

TEST(Cli, ChainCommand) {
    const auto run = run_cli("chain random:4,2,0.05,5 --from 0,0,0,0 --to 1,1,1,1");
    EXPECT_NE(run.output.find("(1,1,1,1)"), std::string::npos) << run.output;
}

TEST(Cli, EvalMixed) {
    const auto run = run_cli("eval-mixed fixture:example-4-1 --weights '0.5,0.5;0,1'");
    EXPECT_EQ(run.exit_code, 0);
    EXPECT_NE(run.output.find("V = 0.75"), std::string::npos) << run.output;
}

TEST(Cli, FixtureFileMatchesCanonicalText) {
    const auto file = temp("fixture.json");
    ASSERT_EQ(run_cli("fixture example-4-2 --out " + file).exit_code, 0);
    std::ifstream in(file);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(text, unichain::write_instance(unichain::multichain_fixture()));
}

TEST(Cli, InputErrors) {
    EXPECT_EQ(run_cli("eval /nonexistent.json --policy 0").exit_code, 2);
    EXPECT_EQ(run_cli("eval fixture:nope --policy 0").exit_code, 2);
    EXPECT_EQ(run_cli("eval fixture:example-4-1 --policy 0,x").exit_code, 2);
    EXPECT_EQ(run_cli("eval fixture:example-4-1 --policy 0,5").exit_code, 2);
    EXPECT_EQ(run_cli("gen --states 4 --actions 2 --min-prob 0.3 --out /dev/null").exit_code, 2);
    EXPECT_EQ(run_cli("").exit_code, 2);
}
