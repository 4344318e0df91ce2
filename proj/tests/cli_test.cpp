// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <json.hpp>

#include <fstream>
#include <regex>
#include <set>
#include <variant>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "tinyeats/file_io.hpp"
#include "tinyeats/model_store.hpp"

namespace tinyeats {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome tinyeats_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tinyeats");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream f(p);
  std::size_t n = 0;
  for (std::string line; std::getline(f, line);) ++n;
  return n;
}

// One shared corpus and trained pair for the whole suite.
class CliFlow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = oracle::scratch_dir("cli");
    const auto r = tinyeats_cli({"synth", "--out", (dir_ / "corpus").string(), "--n-eat", "3",
                                 "--n-noneat", "4", "--seed", "11"});
    ASSERT_EQ(r.code, 0) << r.err;
    manifest_ = (dir_ / "corpus" / "manifest.csv").string();
    const auto t = tinyeats_cli({"train", "--manifest", manifest_, "--out", model("float"), "--seed", "3",
                                 "--history", (dir_ / "history.csv").string()});
    ASSERT_EQ(t.code, 0) << t.err;
    const auto q = tinyeats_cli({"quantize", "--in", model("float"), "--out", model("quant")});
    ASSERT_EQ(q.code, 0) << q.err;
  }

  static std::string model(const std::string& name) { return (dir_ / (name + ".tegm")).string(); }

  static inline fs::path dir_;
  static inline std::string manifest_;
};

TEST_F(CliFlow, SynthWritesManifestAndIsDeterministic) {
  EXPECT_TRUE(fs::exists(manifest_));
  EXPECT_EQ(count_lines(manifest_), 1u + 7u);
  const auto r = tinyeats_cli({"synth", "--out", (dir_ / "again").string(), "--n-eat", "3", "--n-noneat",
                               "4", "--seed", "11"});
  ASSERT_EQ(r.code, 0);
  for (const auto& e : fs::directory_iterator(dir_ / "corpus")) {
    EXPECT_EQ(read_file_bytes(e.path()), read_file_bytes(dir_ / "again" / e.path().filename()));
  }
}

TEST_F(CliFlow, UsageErrors) {
  EXPECT_EQ(tinyeats_cli({"synth", "--out", (dir_ / "x").string(), "--n-eat", "0", "--n-noneat", "3",
                          "--seed", "1"}).code, 1);
  EXPECT_EQ(tinyeats_cli({}).code, 1);
  EXPECT_EQ(tinyeats_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(tinyeats_cli({"train", "--manifest", manifest_}).code, 1);
  EXPECT_EQ(tinyeats_cli({"export", "--in", model("quant"), "--out", (dir_ / "x.c").string(), "--symbol",
                          "9bad"}).code, 2);
}

TEST_F(CliFlow, DataErrors) {
  EXPECT_EQ(tinyeats_cli({"quantize", "--in", model("missing"), "--out", model("x")}).code, 2);
  EXPECT_EQ(tinyeats_cli({"quantize", "--in", model("quant"), "--out", model("x")}).code, 2);
  EXPECT_EQ(tinyeats_cli({"infer", "--model", model("quant"), "--wav", "/nonexistent.wav"}).code, 2);
}

TEST_F(CliFlow, TrainDefaultsAndHistory) {
  EXPECT_EQ(count_lines(dir_ / "history.csv"), 1u + 100u);
  std::ifstream f(dir_ / "history.csv");
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "epoch,train_loss,val_loss,val_accuracy");
  const auto again = tinyeats_cli({"train", "--manifest", manifest_, "--out", model("float2"), "--seed", "3"});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(read_file_bytes(model("float")), read_file_bytes(model("float2")));
}

TEST_F(CliFlow, QatDefaultsToTwoHundredEpochs) {
  const auto r = tinyeats_cli({"train", "--manifest", manifest_, "--out", model("qat"), "--seed", "3",
                               "--qat", "--history", (dir_ / "qat.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(dir_ / "qat.csv"), 1u + 200u);
  EXPECT_NE(r.out.find("mode=qat"), std::string::npos);
}

TEST_F(CliFlow, QuantizeWithinBudgetAndIdempotent) {
  const auto bytes = read_file_bytes(model("quant"));
  EXPECT_LE(bytes.size(), 12288u);
  EXPECT_TRUE(std::holds_alternative<QuantModel>(load_model(model("quant"))));
  ASSERT_EQ(tinyeats_cli({"quantize", "--in", model("float"), "--out", model("quant2")}).code, 0);
  EXPECT_EQ(read_file_bytes(model("quant2")), bytes);
}

TEST_F(CliFlow, EvalReportsForBothKinds) {
  for (const char* kind : {"float", "quant"}) {
    const auto report = dir_ / (std::string(kind) + ".json");
    const auto r = tinyeats_cli({"eval", "--model", model(kind), "--manifest", manifest_, "--report",
                                 report.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream f(report);
    const auto j = nlohmann::json::parse(f);
    std::set<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.insert(k);
    EXPECT_EQ(keys, (std::set<std::string>{"accuracy", "precision", "recall", "f1", "tp", "fp", "fn", "tn"}));
    const double tp = j["tp"], fp = j["fp"], fn = j["fn"], tn = j["tn"];
    EXPECT_EQ(tp + fp + fn + tn, 210.0);
    EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), (tp + tn) / (tp + fp + fn + tn));
    EXPECT_DOUBLE_EQ(j["precision"].get<double>(), tp / (tp + fp));
    EXPECT_DOUBLE_EQ(j["recall"].get<double>(), tp / (tp + fn));
  }
}

TEST_F(CliFlow, InferOneLinePerWindowAndDeterministic) {
  const std::string wav = (dir_ / "corpus" / "eating_000.wav").string();
  const auto a = tinyeats_cli({"infer", "--model", model("quant"), "--wav", wav});
  const auto b = tinyeats_cli({"infer", "--model", model("quant"), "--wav", wav});
  ASSERT_EQ(a.code, 0) << a.err;
  auto strip = [](const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
      if (!line.starts_with("#")) lines.push_back(line);
    return lines;
  };
  const auto la = strip(a.out);
  EXPECT_EQ(la.size(), 30u);
  EXPECT_EQ(la, strip(b.out));
  const std::regex row("\\d+,[01],-?\\d+,-?\\d+");
  for (const auto& l : la) EXPECT_TRUE(std::regex_match(l, row)) << l;
  std::smatch m;
  ASSERT_TRUE(std::regex_search(a.out, m, std::regex("time_per_window_us=([0-9.]+)")));
  EXPECT_LE(std::stod(m[1]), 1000.0);
}

TEST_F(CliFlow, ExportMatchesContainerBytes) {
  const auto out = dir_ / "model.c";
  ASSERT_EQ(tinyeats_cli({"export", "--in", model("quant"), "--out", out.string(), "--symbol",
                          "tiny_eats_model"}).code, 0);
  std::ifstream f(out);
  const std::string text((std::istreambuf_iterator<char>(f)), {});
  const auto q = std::get<QuantModel>(load_model(model("quant")));
  EXPECT_EQ(text, export_firmware_array(q, "tiny_eats_model"));
  std::string body = text.substr(text.find('{') + 1);
  body = body.substr(0, body.find('}'));
  for (char& c : body)
    if (c == ',') c = ' ';
  std::istringstream in(body);
  std::vector<std::uint8_t> parsed;
  for (int v; in >> v;) parsed.push_back(static_cast<std::uint8_t>(v));
  EXPECT_EQ(parsed, read_file_bytes(model("quant")));
}

TEST_F(CliFlow, CompareReportsAgreement) {
  const auto r = tinyeats_cli({"compare", "--float", model("float"), "--quant", model("quant"),
                               "--manifest", manifest_});
  ASSERT_EQ(r.code, 0) << r.err;
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.out, m, std::regex("windows=(\\d+) agreement=([0-9.]+)")));
  EXPECT_EQ(std::stoul(m[1]), 210u);
  const double agree = std::stod(m[2]);
  EXPECT_GE(agree, 0.95);
  EXPECT_LE(agree, 1.0);
}

TEST_F(CliFlow, FeaturesWritesFeatureFile) {
  const auto out = dir_ / "features.tefw";
  const auto r = tinyeats_cli({"features", "--manifest", manifest_, "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "windows=210\n");
  EXPECT_EQ(fs::file_size(out), 14u + 210u * 975 * 4 + 4);
}

}  // namespace
}  // namespace tinyeats
