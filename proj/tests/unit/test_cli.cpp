#include <gtest/gtest.h>

#include "cli_fixture.hpp"
#include "oracles.hpp"
#include "vdp/serialize.hpp"

using namespace vdp::testing;
using vdp::Json;

namespace {

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("vdpcli");
    write_recording(*dir_ / "rec.csv", 12, 600, 1);
    write_config(*dir_ / "quick.json", vdpcli::config_to_json(quick_config()));
    ASSERT_EQ(run_cli({"svd", (*dir_ / "rec.csv").string(), "-m", "2", "--out",
                       (*dir_ / "comps").string()})
                  .code,
              0);
    fit_ = (*dir_ / "fit.json").string();
    const CliResult r = run_cli({"fit", (*dir_ / "comps").string(), "--config",
                                 (*dir_ / "quick.json").string(), "--out", fit_});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static void write_config(const std::filesystem::path& p, const Json& j) {
    vdp::write_json(p, j);
  }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  static TempDir* dir_;
  static std::string fit_;
};

TempDir* Cli::dir_ = nullptr;
std::string Cli::fit_;

}  // namespace

TEST_F(Cli, SvdWritesComponentsAndEcho) {
  EXPECT_TRUE(std::filesystem::exists(path("comps/temporal.csv")));
  EXPECT_TRUE(std::filesystem::exists(path("comps/run.json")));
  const Json echo = vdp::read_json(path("comps/run.json"));
  EXPECT_EQ(echo.at("command"), "svd");
  EXPECT_EQ(echo.at("inputs").at("components"), 2);
}

TEST_F(Cli, SvdRejectsTooManyComponents) {
  const CliResult r = run_cli({"svd", path("rec.csv"), "-m", "13", "--out", path("bad")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("min(P, T) = 12"), std::string::npos) << r.err;
}

TEST_F(Cli, FitDocumentCarriesConfigEcho) {
  const Json j = vdp::read_json(fit_);
  EXPECT_EQ(j.at("alpha").size(), 2u);
  EXPECT_EQ(j.at("config_echo").at("command"), "fit");
  EXPECT_EQ(j.at("config_echo").at("config").at("search").at("max_rounds"), 3);
  EXPECT_LE(j.at("search").at("rounds").get<int>(), 3);
}

TEST_F(Cli, MissingConfigKeyIsUsageError) {
  Json cfg = vdpcli::config_to_json(quick_config());
  cfg["penalty"].erase("outer_step");
  write_config(path("missing.json"), cfg);
  const CliResult r = run_cli({"fit", path("comps"), "--config", path("missing.json"),
                               "--out", path("never.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("penalty.outer_step"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(path("never.json")));
}

TEST_F(Cli, UnknownConfigKeyIsUsageError) {
  Json cfg = vdpcli::config_to_json(quick_config());
  cfg["search"]["temperature"] = 1.0;
  write_config(path("unknown.json"), cfg);
  const CliResult r = run_cli({"fit", path("comps"), "--config", path("unknown.json"),
                               "--out", path("never.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("search.temperature"), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigDumpRoundTrips) {
  ASSERT_EQ(run_cli({"config", "--dump", "--out", path("dump.json")}).code, 0);
  const vdpcli::RunConfig cfg = vdpcli::load_config(path("dump.json"));
  EXPECT_EQ(vdpcli::config_to_json(cfg).dump(), vdp::read_json(path("dump.json")).dump());
  EXPECT_EQ(vdpcli::config_to_json(cfg).dump(), vdpcli::config_to_json({}).dump());
}

TEST_F(Cli, VpOnlySkipsSearch) {
  const CliResult r = run_cli({"fit", path("comps"), "--config", path("quick.json"),
                               "--vp-only", "--segment", "1", "--out", path("vp.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = vdp::read_json(path("vp.json"));
  EXPECT_EQ(j.at("search").at("rounds"), 0);
  EXPECT_EQ(j.at("config_echo").at("inputs").at("range"), Json::array({120, 220}));
  EXPECT_EQ(j.at("observations").size(), 100u);
}

TEST_F(Cli, UnknownForecastMethodListsAvailable) {
  const CliResult r = run_cli({"forecast", path("comps"), "--config", path("quick.json"),
                               "--methods", "var,lstm", "--out", path("fc_bad")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lstm"), std::string::npos);
  EXPECT_NE(r.err.find("oracle"), std::string::npos) << r.err;
}

TEST_F(Cli, VdpForecastNeedsOneFitPerSegment) {
  const CliResult r = run_cli({"forecast", path("comps"), "--config", path("quick.json"),
                               "--methods", "vdp", "--fit", fit_, "--out", path("fc_vdp")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, ShortForecastWritesReport) {
  const CliResult r = run_cli({"forecast", path("comps"), "--config", path("quick.json"),
                               "--methods", "var,oracle", "--out", path("fc")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = vdp::read_json(path("fc/report.json"));
  EXPECT_EQ(rep.at("protocol"), "short");
  EXPECT_EQ(rep.at("methods")[0].at("windows"), 5);
  EXPECT_EQ(rep.at("methods")[1].at("horizons")[0].at("median_rmse"), 0.0);
  EXPECT_TRUE(std::filesystem::exists(path("fc/samples.csv")));
  EXPECT_TRUE(std::filesystem::exists(path("fc/metrics.csv")));
}

TEST_F(Cli, RatLayoutLongProtocol) {
  write_recording(path("rat.csv"), 8, 276, 2);
  ASSERT_EQ(run_cli({"svd", path("rat.csv"), "-m", "3", "--out", path("rat")}).code, 0);
  vdpcli::RunConfig cfg = quick_config();
  cfg.segments.train_len = 100;
  cfg.segments.test_len = 176;
  cfg.segments.n_segments = 1;
  write_config(path("rat.json"), vdpcli::config_to_json(cfg));
  const CliResult r = run_cli({"forecast", path("rat"), "--config", path("rat.json"),
                               "--protocol", "long", "--methods", "var", "--out",
                               path("rat_fc")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = vdp::read_json(path("rat_fc/report.json"));
  EXPECT_EQ(rep.at("protocol"), "long");
  EXPECT_EQ(rep.at("methods")[0].at("windows"), 168);
}

TEST_F(Cli, ConnectivityWritesEdges) {
  const CliResult r = run_cli({"connectivity", path("comps"), "--fit", fit_, "--top-k", "5",
                               "--out", path("edges.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file(path("edges.csv"));
  EXPECT_EQ(csv.rfind("src,dst,weight,polarity\n", 0), 0u);
}

TEST_F(Cli, ConnectivityRejectsComponentMismatch) {
  ASSERT_EQ(run_cli({"svd", path("rec.csv"), "-m", "3", "--out", path("comps3")}).code, 0);
  const CliResult r = run_cli({"connectivity", path("comps3"), "--fit", fit_, "--out",
                               path("edges3.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("m = 2"), std::string::npos) << r.err;
}

TEST_F(Cli, ExportWithZeroSeriesWritesEmptyManifest) {
  const CliResult r = run_cli({"export-sim", "--fit", fit_, "--config", path("quick.json"),
                               "--n", "0", "--out", path("corpus0")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json m = vdp::read_json(path("corpus0/manifest.json"));
  EXPECT_EQ(m.at("n_series"), 0);
  EXPECT_TRUE(m.at("simulated").empty());
  EXPECT_TRUE(m.at("noisy").empty());
}

TEST_F(Cli, ExportIsByteIdenticalForFixedSeed) {
  for (const char* d : {"corpusA", "corpusB"}) {
    ASSERT_EQ(run_cli({"export-sim", "--fit", fit_, "--config", path("quick.json"), "--n",
                       "6", "--len", "40", "--seed", "5", "--out", path(d)})
                  .code,
              0);
  }
  EXPECT_EQ(snapshot(path("corpusA")), snapshot(path("corpusB")));
}

TEST(CliArgs, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
}
