#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lethe/cli.hpp"
#include "lethe/snapshot.hpp"
#include "support.hpp"

using namespace lethe;
using lethe::testing::TempDir;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run({"seed", "--concepts", "50", "--facts", "200", "--seed", "42", "--out", dir()}).code,
              kExitOk);
  }
  std::string dir() const { return dir_.path().string(); }
  TempDir dir_;
};

}  // namespace

TEST_F(CliTest, SeedMatchesLibraryModel) {
  const auto model = load_model(dir_ / "model.json");
  EXPECT_EQ(model.embeddings(), lethe::testing::reference_model().embeddings());
}

TEST_F(CliTest, ForgetPrintsReportJson) {
  const CliRun r = run({"--data-dir", dir(), "--now", "1000", "forget", "--concept", "c17"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc["status"], "COMPLETED");
  EXPECT_EQ(doc["reports"][0]["concept"], "c17");
  EXPECT_EQ(doc["reports"][0]["converged"], true);
  EXPECT_EQ(doc["reports"][0]["stop_reason"], "CONVERGED");
  const CliRun audit = run({"--data-dir", dir(), "audit", "--verify"});
  EXPECT_EQ(audit.code, kExitOk);
  EXPECT_EQ(audit.out, "valid, 3 entries\n");
}

TEST_F(CliTest, AuditVerifyExitsThreeOnTamper) {
  run({"--data-dir", dir(), "forget", "--concept", "c17"});
  std::string text = read_file(dir_ / "ledger.jsonl");
  text[text.find("UNLEARN_STARTED")] = 'X';
  std::ofstream(dir_ / "ledger.jsonl", std::ios::binary) << text;
  const CliRun r = run({"--data-dir", dir(), "audit", "--verify"});
  EXPECT_EQ(r.code, kExitAuditInvalid);
  EXPECT_EQ(r.out, "invalid at index 1, 3 entries\n");
  EXPECT_EQ(run({"--data-dir", dir(), "--format", "json", "audit", "--verify"}).code,
            kExitAuditInvalid);
}

TEST_F(CliTest, ExitCodes) {
  const CliRun unknown = run({"--data-dir", dir(), "forget", "--concept", "nope"});
  EXPECT_EQ(unknown.code, kExitValidation);
  EXPECT_NE(unknown.err.find("nope"), std::string::npos);
  EXPECT_EQ(run({"--data-dir", dir(), "probe", "--concept", "nope"}).code, kExitValidation);
  const CliRun bad_flag = run({"--data-dir", dir(), "report", "--bogus"});
  EXPECT_EQ(bad_flag.code, kExitValidation);
  EXPECT_NE(bad_flag.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(run({}).code, kExitValidation);
  const CliRun conflict =
      run({"--data-dir", dir(), "--conflict-floor", "1.01", "forget", "--concept", "c17"});
  EXPECT_EQ(conflict.code, kExitRuntime);
  EXPECT_NE(conflict.err.find("ConflictUnresolved"), std::string::npos);
  EXPECT_EQ(run({"--data-dir", (dir_ / "missing").string(), "report"}).code, kExitRuntime);
}

TEST_F(CliTest, ReportProbeConflictSweep) {
  const CliRun report = run({"--data-dir", dir(), "report"});
  ASSERT_EQ(report.code, kExitOk);
  EXPECT_NE(report.out.find("c17"), std::string::npos);
  const Json doc = Json::parse(run({"--data-dir", dir(), "--format", "json", "report"}).out);
  EXPECT_EQ(doc["concepts"].size(), 50u);
  const Json probe = Json::parse(run({"--data-dir", dir(), "--format", "json", "probe", "--concept", "c17"}).out);
  EXPECT_EQ(probe["forget"].size(), 8u);
  const Json conflict =
      Json::parse(run({"--data-dir", dir(), "--format", "json", "conflict", "--concept", "c17"}).out);
  EXPECT_EQ(conflict["conflict"]["score"], "1");
  const CliRun sweep = run({"--data-dir", dir(), "--now", "100", "sweep"});
  EXPECT_EQ(sweep.code, kExitOk);
}

TEST_F(CliTest, IngestFromFile) {
  std::ofstream(dir_ / "sample.json")
      << R"({"subject_id":"bob","features":[2.0,0.1],"tokens":[[0,"email"]]})";
  const CliRun r = run({"--data-dir", dir(), "ingest", "--file", (dir_ / "sample.json").string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("REJECT"), std::string::npos);
  const CliRun audit = run({"--data-dir", dir(), "audit", "--verify"});
  EXPECT_EQ(audit.out, "valid, 1 entries\n");
}
