#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support/golden_cases.hpp"

namespace fs = std::filesystem;
namespace pt = plkan::testing;

namespace {

using Result = pt::CliRun;

Result cli(const std::vector<std::string>& args) { return pt::run_cli(args); }
std::string model(const std::string& name) { return pt::model_file(name); }
std::string fixture(const std::string& name) { return pt::fixture_file(name); }
std::string golden(const std::string& name) { return pt::golden_file(name); }
std::string read_file(const std::string& p) { return pt::read_text(p); }

class CliTemp : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("plkan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string tmp(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(CliGolden, JsonReports) {
  for (const auto& c : pt::report_goldens()) {
    SCOPED_TRACE(c.golden);
    const Result r = cli(c.args);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, read_file(golden(c.golden)));
  }
}

TEST_F(CliTemp, ConvertGoldens) {
  for (auto c : pt::convert_goldens()) {
    SCOPED_TRACE(c.golden);
    c.args.push_back(tmp(c.golden));
    const Result r = cli(c.args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_file(tmp(c.golden)), read_file(golden(c.golden)));
  }
}

TEST(Cli, EvalText) {
  const Result r = cli({"eval", model("fstar_kan.json"), "--input", "2"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "3.5\n");
  EXPECT_EQ(cli({"eval", model("hidden32_mlp.json"), "--input", "1,-2"}).code, 0);
  EXPECT_EQ(cli({"eval", model("fstar_kan.json"), "--input", "1,2"}).code, 2);
  EXPECT_EQ(cli({"eval", model("fstar_kan.json"), "--input", "abc"}).code, 2);
}

TEST_F(CliTemp, ConvertThenVerify) {
  for (const std::string name : {"fstar_kan.json", "kan_1_2_1.json", "identity_kan_2d.json", "pyramid_kan_2d.json"}) {
    SCOPED_TRACE(name);
    for (const std::string mode : {"exact", "paper"}) {
      const std::string mlp = tmp(mode + "_" + name);
      ASSERT_EQ(cli({"convert", "--to", "mlp", "--mode", mode, model(name), mlp}).code, 0);
      if (mode == "exact") {
        const Result r = cli({"verify", model(name), mlp});
        EXPECT_EQ(r.code, 0) << r.out << r.err;
        EXPECT_EQ(r.out.rfind("PASS mode=sampled", 0), 0U) << r.out;
      } else if (name != "kan_1_2_1.json") {
        // Paper lowering of a single layer holds on the non-negative orthant.
        EXPECT_EQ(cli({"verify", "--box", "0", "4", model(name), mlp}).code, 0);
      }
    }
  }
  const std::string back = tmp("back.json");
  ASSERT_EQ(cli({"convert", "--to", "kan", model("hidden32_mlp.json"), back}).code, 0);
  EXPECT_EQ(cli({"verify", "--samples", "5000", "--box", "-10", "10", model("hidden32_mlp.json"), back}).code, 0);
}

TEST(Cli, VerifyExact1D) {
  const Result ok = cli({"verify", "--exact-1d", model("fstar_kan.json"), golden("fstar_mlp_exact.json")});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.out.rfind("PASS mode=exact_1d", 0), 0U) << ok.out;
  const Result bad = cli({"verify", "--exact-1d", model("fstar_kan.json"), model("abs_mlp.json")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.out.rfind("FAIL", 0), 0U);
  const Result json = cli({"--json", "verify", "--exact-1d", model("fstar_kan.json"), model("abs_mlp.json")});
  EXPECT_NE(json.out.find("\"max_rel_error\": \"inf\""), std::string::npos) << json.out;
}

TEST(Cli, VerifyMismatchFails) {
  const Result r = cli({"verify", model("fstar_kan.json"), model("abs_mlp.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out.rfind("FAIL", 0), 0U);
  // Seeds change the sample set but not the verdict.
  EXPECT_EQ(cli({"--seed", "7", "verify", model("fstar_kan.json"), model("abs_mlp.json")}).code, 1);
  EXPECT_EQ(cli({"verify", model("fstar_kan.json"), model("identity_kan_2d.json")}).code, 2);
}

TEST(Cli, RegionsRejectsTwoInputs) {
  const Result r = cli({"regions", model("pyramid_kan_2d.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unsupported dimension"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"fingerprint", model("fstar_kan.json")}).code, 2);
}

TEST_F(CliTemp, RegionsAndFingerprintFiles) {
  const std::string rj = tmp("regions.json");
  const Result r = cli({"regions", model("abs_mlp.json"), "--out", rj});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "regions 2\n");
  EXPECT_NE(read_file(rj).find("\"regions\": 2"), std::string::npos);
  const std::string csv = tmp("grid.csv");
  const Result f = cli({"fingerprint", model("pyramid_kan_2d.json"), "--res", "8", "--out", csv});
  EXPECT_EQ(f.code, 0);
  EXPECT_EQ(f.out, "estimated_regions 4\n");
  const std::string text = read_file(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 65);
}

TEST(Cli, ParamsAndBoundsText) {
  const Result p = cli({"params", model("abs_mlp.json"), "--paper-formula"});
  EXPECT_EQ(p.code, 0);
  EXPECT_NE(p.out.find("total_entries 7\n"), std::string::npos) << p.out;
  const Result b = cli({"bounds", model("kan_1_2_1.json")});
  EXPECT_EQ(b.code, 0);
  EXPECT_NE(b.out.find("upper_bound 81\n"), std::string::npos) << b.out;
  EXPECT_EQ(cli({"params", model("square_spline.json")}).code, 2);
}

TEST(Cli, EmbedCheck) {
  const Result r = cli({"embed-check", model("kan_1_2_1.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("PASS", 0), 0U);
  EXPECT_EQ(cli({"embed-check", model("abs_mlp.json")}).code, 2);
}

TEST(Cli, ExitCodesOnBadInput) {
  const std::vector<std::pair<std::string, int>> cases{
      {fixture("relu_last_mlp.json"), 1},          {fixture("malformed.json"), 1},
      {fixture("missing_slopes.json"), 1},         {fixture("bad_shape_kan.json"), 1},
      {fixture("unsorted_breakpoints_kan.json"), 1}, {fixture("wrong_version.json"), 1},
      {fixture("does_not_exist.json"), 2},
  };
  for (const auto& [path, code] : cases) {
    SCOPED_TRACE(path);
    const Result r = cli({"params", path});
    EXPECT_EQ(r.code, code);
    EXPECT_EQ(r.err.rfind("error: ", 0), 0U) << r.err;
  }
  const Result relu = cli({"eval", fixture("relu_last_mlp.json"), "--input", "1"});
  EXPECT_NE(relu.err.find("$.payload.layers"), std::string::npos) << relu.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"convert", "--to", "cnn", model("fstar_kan.json"), "x.json"}).code, 2);
  EXPECT_EQ(cli({"convert", "--to", "monomial_relu", model("fstar_kan.json"), "x.json"}).code, 2);
  EXPECT_EQ(cli({"verify", "--samples", "0", model("fstar_kan.json"), model("fstar_kan.json")}).code, 2);
  EXPECT_EQ(cli({"fingerprint", model("pyramid_kan_2d.json"), "--res", "4"}).code, 2);
  const Result help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("embed-check"), std::string::npos);
}
