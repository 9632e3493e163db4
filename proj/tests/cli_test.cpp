#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ipi/cli.hpp"
#include "support/checks.hpp"

namespace ipi { namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ipi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  Result cli(std::vector<std::string> args) const {
    args.insert(args.begin(), "ipi_tool");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
  }

  void write_config(const std::string& name, const SimConfig& cfg) const {
    write(name, to_json(cfg).dump());
  }

  fs::path dir_;
};

std::size_t lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

TEST_F(Cli, GenScriptAndVerify) {
  for (const char* name : {"fig1a", "fig1b"}) {
    auto r = cli({"gen", "--script", name, "-o", path("t.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli({"verify", path("t.txt")});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("verified: ", 0), 0u);
  }
  EXPECT_EQ(lines(read("t.txt")), 12u);
}

TEST_F(Cli, GenFig1aHasTenEvents) {
  auto r = cli({"gen", "--script", "fig1a", "-o", path("a.txt")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "events: 10\n");
  EXPECT_EQ(lines(read("a.txt")), 10u);
}

TEST_F(Cli, GenFromConfigIsDeterministic) {
  write_config("cfg.json", testing::corpus_config(3));
  ASSERT_EQ(cli({"gen", "--config", path("cfg.json"), "-o", path("a.txt")}).code, 0);
  ASSERT_EQ(cli({"gen", "--config", path("cfg.json"), "-o", path("b.txt")}).code, 0);
  EXPECT_EQ(read("a.txt"), read("b.txt"));
  ASSERT_EQ(cli({"gen", "--config", path("cfg.json"), "--seed", "99", "-o", path("c.txt")}).code, 0);
  EXPECT_NE(read("a.txt"), read("c.txt"));
}

TEST_F(Cli, UsageAndConfigErrorsExitTwo) {
  EXPECT_EQ(cli({"gen", "--script", "nosuch", "-o", path("x.txt")}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"identify"}).code, 2);
  EXPECT_EQ(cli({"identify", path("missing.txt"), "-o", path("x.txt")}).code, 2);
  EXPECT_EQ(cli({"identify", path("x.txt"), "--algo", "old", "-o", path("y.txt")}).code, 2);
  write("bad.json", R"({"post_prob": 3})");
  auto r = cli({"gen", "--config", path("bad.json"), "-o", path("x.txt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("post_prob"), std::string::npos);
  write("broken.json", "{");
  EXPECT_EQ(cli({"gen", "--config", path("broken.json"), "-o", path("x.txt")}).code, 2);
}

TEST_F(Cli, IdentifyReportsInstancesAndMetrics) {
  ASSERT_EQ(cli({"gen", "--script", "fig1a", "-o", path("a.txt")}).code, 0);
  auto r = cli({"identify", path("a.txt"), "-o", path("l.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("instances: 2\n"), std::string::npos);
  EXPECT_NE(r.out.find("metrics: {\"stack_depth_max\":2"), std::string::npos);
  auto labeled = parse_labeled_trace(read("l.txt"));
  for (std::size_t i = 0; i < labeled.size(); ++i) EXPECT_EQ(labeled[i].label, labeled[i].truth);
  // Stored labels now agree with truth.
  EXPECT_EQ(cli({"verify", path("l.txt")}).code, 0);
}

TEST_F(Cli, IdentifyEmptyAndPrefixTraces) {
  write("empty.txt", "");
  auto r = cli({"identify", path("empty.txt"), "-o", path("l.txt")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("instances: 0"), std::string::npos);
  write("prefix.txt", "IHEntry irq=1\nPostTaskEntry task=T1\nIHEntry irq=2\n");
  EXPECT_EQ(cli({"identify", path("prefix.txt"), "-o", path("l.txt")}).code, 0);
  EXPECT_EQ(cli({"identify", path("prefix.txt"), "--algo", "legacy", "-o", path("l.txt")}).code, 0);
}

TEST_F(Cli, MalformedTracesExitThree) {
  write("junk.txt", "IHEntry irq=1\nBogus\n");
  auto r = cli({"identify", path("junk.txt"), "-o", path("l.txt")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  write("unbalanced.txt", "IHExit irq=1\n");
  EXPECT_EQ(cli({"identify", path("unbalanced.txt"), "-o", path("l.txt")}).code, 3);
  write("undrained.txt", "IHEntry irq=1\nPostTaskEntry task=T\nPostOk task=T\nIHExit irq=1\n");
  EXPECT_EQ(cli({"oracle", path("undrained.txt"), "-o", path("l.txt")}).code, 3);
}

TEST_F(Cli, VerifyDetectsMismatches) {
  write_config("cfg.json", testing::corpus_config(10));
  ASSERT_EQ(cli({"gen", "--config", path("cfg.json"), "-o", path("t.txt")}).code, 0);
  EXPECT_EQ(cli({"verify", path("t.txt")}).code, 0);

  ASSERT_EQ(cli({"gen", "--script", "fig1b", "-o", path("b.txt")}).code, 0);
  auto r = cli({"verify", path("b.txt"), "--algo", "legacy"});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("seq=8 RunTaskEntry task=T2"), std::string::npos) << r.err;

  std::string text = read("b.txt");
  auto at = text.find("truth=2:2:END");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 13, "truth=2:2:INTERM");
  write("corrupt.txt", text);
  EXPECT_EQ(cli({"verify", path("corrupt.txt")}).code, 4);

  write("plain.txt", "IHEntry irq=1\nIHExit irq=1\n");
  EXPECT_EQ(cli({"verify", path("plain.txt")}).code, 2);
}

TEST_F(Cli, ProfileCsvAndJson) {
  ASSERT_EQ(cli({"gen", "--script", "fig1a", "-o", path("a.txt")}).code, 0);
  ASSERT_EQ(cli({"identify", path("a.txt"), "-o", path("l.txt")}).code, 0);
  auto r = cli({"profile", path("l.txt"), "-o", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(read("p.csv")), 3u);
  ASSERT_EQ(cli({"profile", path("l.txt"), "-o", path("p.json")}).code, 0);
  EXPECT_EQ(nlohmann::json::parse(read("p.json")).size(), 2u);
  // Truth alone is not enough to profile.
  EXPECT_EQ(cli({"profile", path("a.txt"), "-o", path("p.csv")}).code, 3);
}

TEST_F(Cli, BenchWritesOneRowPerLengthAndAlgo) {
  write_config("cfg.json", SimConfig{});
  auto r = cli({"bench", "-c", path("cfg.json"), "--lengths", "1000,2000", "--reps", "1", "-o",
                path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(read("b.csv")), 5u);
  ASSERT_EQ(cli({"bench", "-c", path("cfg.json"), "--lengths", "1000", "--reps", "1", "-o",
                 path("b.json")})
                .code,
            0);
  EXPECT_EQ(nlohmann::json::parse(read("b.json")).size(), 2u);
  EXPECT_EQ(cli({"bench", "-c", path("cfg.json"), "--lengths", "10,x", "-o", path("b.csv")}).code, 2);
}

}}  // namespace ipi::
