#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(VTSNN_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[512];
  while (fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vtsnn_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST(Cli, GenerateIsByteIdenticalForASeed) {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  ASSERT_EQ(run("generate --preset slip-toy --samples 6 --seed 7 --out " + a.string()).code, 0);
  ASSERT_EQ(run("generate --preset slip-toy --samples 6 --seed 7 --out " + b.string()).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 6u);
  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["config"]["preset"], "slip-toy");
}

TEST(Cli, TrainThenPredict) {
  const auto data = scratch("train_data"), model = scratch("train_model");
  ASSERT_EQ(run("generate --preset disjoint --samples 20 --seed 1 --out " + data.string()).code, 0);
  const auto r = run("train --data " + data.string() +
                     " --model tact --epochs 2 --seed 3 --threads 1 --out " + model.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(model / "weights.snnw"));
  EXPECT_TRUE(fs::exists(model / "architecture.txt"));
  const auto metrics = slurp(model / "metrics.csv");
  EXPECT_EQ(metrics.rfind("epoch,train_loss,train_acc,test_acc\n1,", 0), 0u);
  const auto m = nlohmann::json::parse(slurp(model / "manifest.json"));
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["config"]["epochs"], 2);
  EXPECT_EQ(m["config"]["true_count"], 30);
  EXPECT_EQ(m["config"]["false_count"], 3);

  fs::path sample;
  for (const auto& e : fs::directory_iterator(data))
    if (e.is_directory()) sample = e.path();
  const auto p = run("predict --model-dir " + model.string() + " --sample " + sample.string());
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_TRUE(p.out == "0\n" || p.out == "1\n") << p.out;

  const auto ev = run("eval --model-dir " + model.string() + " --data " + data.string() +
                      " --out " + (model / "eval").string());
  ASSERT_EQ(ev.code, 0) << ev.out;
  EXPECT_EQ(slurp(model / "eval" / "eval.csv").rfind("n_samples,accuracy\n4,", 0), 0u);

  // A sample with the wrong tactile channel count is a shape mismatch.
  std::ofstream(sample / "four.csv") << "timestamp_us,channel,polarity\n10,2,1\n";
  ASSERT_EQ(run("convert --input " + (sample / "four.csv").string() + " --channels 4 --out " +
                sample.string())
                .code,
            0);
  fs::rename(sample / "four.evst", sample / "tact.evst");
  const auto bad = run("predict --model-dir " + model.string() + " --sample " + sample.string());
  EXPECT_EQ(bad.code, 6) << bad.out;
  EXPECT_NE(bad.out.find("kind=shape"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = run("generate --bogus 3");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.out.rfind("error: kind=usage code=2", 0), 0u) << r.out;
}

TEST(Cli, MissingFileIsIoError) {
  const auto r = run("annotate --poses /nonexistent/pose.csv --out " + scratch("io").string());
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST(Cli, HelpListsExitCodes) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Exit codes"), std::string::npos);
}
