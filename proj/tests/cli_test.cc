#include "filterstab/cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "filterstab/error.h"
#include "filterstab/model_io.h"

namespace filterstab {
namespace {

const std::string kData = FILTERSTAB_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

TEST(ModelIoTest, RoundTripAndValidation) {
  const FinitePomp model = LoadModel(kData + "/four_state.json");
  EXPECT_EQ(model.transition(), FourStateExample().transition());
  EXPECT_EQ(model.channel(), FourStateExample().channel());
  const FinitePomp again = ModelFromJson(ModelToJson(model));
  EXPECT_EQ(again.channel(), model.channel());

  nlohmann::json doc = ModelToJson(model);
  doc["B"] = {{0, 1}, {0, 1}, {1, 0}, {0.5, 0.5}};
  EXPECT_THROW(ModelFromJson(doc), ValidationError);
  doc = ModelToJson(model);
  doc["n"] = 5;
  EXPECT_THROW(ModelFromJson(doc), DimensionMismatch);
  EXPECT_THROW(LoadModel(kData + "/missing.json"), ValidationError);
}

TEST(ModelIoTest, PriorSpecs) {
  EXPECT_EQ(ParseFinitePrior("uniform", 4).probs(), FiniteDist::Uniform(4).probs());
  EXPECT_NEAR(ParseFinitePrior("0.7,0.1,0.1,0.1", 4)[0], 0.7, 0);
  EXPECT_NEAR(ParseFinitePrior("[0.5, 0.5]", 2)[1], 0.5, 0);
  EXPECT_EQ(ParseFinitePrior({{"point", 2}}, 3)[2], 1.0);
  EXPECT_THROW(ParseFinitePrior("0.7,x", 2), ValidationError);
  EXPECT_THROW(ParseFinitePrior("0.5,0.5", 3), DimensionMismatch);
  EXPECT_THROW(ParseFinitePrior("0.5,0.6", 2), ValidationError);
}

TEST(CliTest, ReproduceGoldenValues) {
  const Result r = Invoke({"reproduce-paper"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS verdict = NStepObservable(2)"), std::string::npos);
}

TEST(CliTest, ObservabilityJson) {
  const Result r = Invoke({"observability", "--model", kData + "/four_state.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["verdict"], "NStepObservable(2)");
  EXPECT_EQ(doc["rank_M"], 3);
  EXPECT_EQ(doc["meta"]["tool"], "filterstab");
  EXPECT_EQ(Invoke({"observability", "--model", kData + "/not_observable.json",
                 "--nmax", "2"})
                .code,
            0);
}

TEST(CliTest, MergingCsvSchema) {
  const Result r = Invoke({"merging", "--model", kData + "/four_state.json", "--nu",
                        "0.7,0.1,0.1,0.1", "--horizon", "5", "--trials", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string meta, header, row;
  std::getline(lines, meta);
  std::getline(lines, header);
  EXPECT_EQ(meta.rfind("# {", 0), 0u);
  EXPECT_NE(meta.find("\"bank_version\":1"), std::string::npos);
  EXPECT_EQ(header,
            "step,mean_tv_filter,se_tv_filter,mean_tv_predictor,mean_kl_filter,"
            "se_kl_filter,weak_gap,bl_gap,mean_tv_pred_meas");
  int rows = 0;
  while (std::getline(lines, row)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(CliTest, ConfigFileAndOverrides) {
  const std::string config = TempPath("filterstab_cli_config.json");
  WriteFile(config, R"({"model": ")" + kData +
                        R"(/four_state.json", "nu": [0.7, 0.1, 0.1, 0.1],
                        "horizon": 3, "trials": 10, "seed": 4})");
  const Result from_file = Invoke({"merging", "--config", config});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  const Result same = Invoke({"merging", "--config", config, "--threads", "3"});
  EXPECT_EQ(from_file.out, same.out);
  const Result other_seed = Invoke({"merging", "--config", config, "--seed", "5"});
  EXPECT_NE(from_file.out, other_seed.out);

  WriteFile(config, R"({"horizon": "long"})");
  const Result bad_type = Invoke({"merging", "--config", config});
  EXPECT_EQ(bad_type.code, 1);
  EXPECT_NE(bad_type.err.find("horizon"), std::string::npos);
  WriteFile(config, R"({"horizn": 3})");
  EXPECT_EQ(Invoke({"merging", "--config", config}).code, 1);
  WriteFile(config, "{ not json");
  EXPECT_EQ(Invoke({"merging", "--config", config}).code, 1);
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(Invoke({}).code, 1);
  EXPECT_EQ(Invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(Invoke({"merging", "--bogus"}).code, 1);
  EXPECT_EQ(Invoke({"merging"}).code, 1);  // no model
  EXPECT_EQ(Invoke({"merging", "--model", kData + "/four_state.json", "--nu",
                 "0.25,0.25,0.5"})
                .code,
            1);
  // Runtime failure: nu puts no mass where mu does.
  EXPECT_EQ(Invoke({"merging", "--model", kData + "/four_state.json", "--nu",
                 "1,0,0,0", "--horizon", "2", "--trials", "2"})
                .code,
            2);
  EXPECT_EQ(Invoke({"harris", "--model", kData + "/two_state_chain.json",
                 "--format", "xml"})
                .code,
            1);
  EXPECT_EQ(Invoke({"--help"}).code, 0);
}

TEST(CliTest, OutputFile) {
  const std::string path = TempPath("filterstab_cli_harris.csv");
  const Result r = Invoke({"harris", "--model", kData + "/two_state_chain.json",
                        "--mu", "1,0", "--horizon", "10", "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::string meta, header, first;
  std::getline(in, meta);
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "step,divergence");
  EXPECT_EQ(first.rfind("0,0.693147180559945", 0), 0u);
}

TEST(CliTest, ChannelsVerify) {
  for (const char* name : {"affine", "indicator", "two_point", "direct"}) {
    const Result r = Invoke({"channels-verify", "--model",
                          kData + "/" + name + "_channel.json"});
    ASSERT_EQ(r.code, 0) << name << ": " << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_TRUE(doc["pass"].get<bool>()) << name;
  }
}

TEST(CliTest, WalkDeterministic) {
  const std::vector<std::string> args{
      "walk", "--mu", R"({"kind":"normal","mean":0,"std":1})", "--nu",
      R"({"kind":"normal","mean":5,"std":2})", "--horizon", "10", "--trials", "30"};
  const Result a = Invoke(args);
  ASSERT_EQ(a.code, 0) << a.err;
  auto threaded = args;
  threaded.insert(threaded.end(), {"--threads", "8"});
  EXPECT_EQ(a.out, Invoke(threaded).out);
  EXPECT_EQ(a.out, Invoke(args).out);
}

TEST(CliTest, Sha256KnownAnswer) {
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace filterstab
