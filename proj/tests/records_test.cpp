#include <gtest/gtest.h>

#include <sstream>

#include "multiridge/config.hpp"
#include "multiridge/records.hpp"

namespace mr = multiridge;

TEST(ExperimentRecord, JsonRoundTripIsLossless) {
  mr::ExperimentRecord record;
  record.experiment_id = "experiment1/D=100/seed=3";
  record.config = {{"n_train", 1000}, {"snr_db", 20.0}};
  record.seeds = {3, 17, 29};
  mr::MethodOutcome ridge;
  ridge.method = "ridge";
  ridge.hyperparams = {{"alpha", 0.1234567890123456789}};
  ridge.r2 = 0.987654321987654321;
  ridge.seconds = 1.5e-3;
  record.methods.push_back(ridge);
  mr::MethodOutcome broken;
  broken.method = "enet";
  broken.status = "error: every candidate failed";
  broken.r2 = std::numeric_limits<double>::quiet_NaN();
  record.methods.push_back(broken);
  record.optimizer_history = {{0.5, 1e-3, 350.0}, {0.4999, 9.7e-4, 349.65}};

  nlohmann::json j = record;
  const std::string text = j.dump();
  mr::ExperimentRecord back = nlohmann::json::parse(text).get<mr::ExperimentRecord>();

  // NaN does not compare equal; check it separately and then splice it out.
  ASSERT_TRUE(std::isnan(back.methods[1].r2));
  back.methods[1].r2 = 0.0;
  record.methods[1].r2 = 0.0;
  EXPECT_EQ(record, back);
}

TEST(IniConfig, ParsesSectionsListsAndComments) {
  const std::string text = R"(
# top comment
[experiment1]
feature_counts = 100, 400, 800   ; trailing comment
replications = 5
snr_db = 20.0
methods = oracle, ridge

[multiridge]
learning_rate = 350
record = true
)";
  auto cfg = mr::IniConfig::parse_string(text);
  EXPECT_EQ(cfg.get_int("experiment1", "replications", 0), 5);
  EXPECT_DOUBLE_EQ(cfg.get_double("experiment1", "snr_db", 0.0), 20.0);
  EXPECT_DOUBLE_EQ(cfg.get_double("multiridge", "learning_rate", 0.0), 350.0);
  EXPECT_TRUE(cfg.get_bool("multiridge", "record", false));
  auto counts = cfg.get_double_list("experiment1", "feature_counts", {});
  ASSERT_EQ(counts.size(), 3u);
  EXPECT_DOUBLE_EQ(counts[1], 400.0);
  auto methods = cfg.get_string_list("experiment1", "methods", {});
  ASSERT_EQ(methods.size(), 2u);
  EXPECT_EQ(methods[0], "oracle");
  EXPECT_EQ(methods[1], "ridge");

  // Defaults pass through untouched.
  EXPECT_EQ(cfg.get_int("experiment1", "missing", 42), 42);
  EXPECT_EQ(cfg.get_string("nowhere", "key", "fallback"), "fallback");
}

TEST(IniConfig, RejectsMalformedInput) {
  EXPECT_THROW(mr::IniConfig::parse_string("not a key value line"), mr::InvalidInputError);
  EXPECT_THROW(mr::IniConfig::parse_string("[unterminated\nkey = 1"), mr::InvalidInputError);
  EXPECT_THROW(mr::IniConfig::parse_string("= value"), mr::InvalidInputError);
  auto cfg = mr::IniConfig::parse_string("[s]\nk = banana");
  EXPECT_THROW(cfg.get_double("s", "k", 0.0), mr::InvalidInputError);
  EXPECT_THROW(cfg.get_int("s", "k", 0), mr::InvalidInputError);
  EXPECT_THROW(cfg.get_bool("s", "k", false), mr::InvalidInputError);
}

TEST(IniConfig, JsonSnapshotCoversAllSections) {
  auto cfg = mr::IniConfig::parse_string("[a]\nx = 1\n[b]\ny = two");
  auto j = cfg.to_json();
  EXPECT_EQ(j["a"]["x"], "1");
  EXPECT_EQ(j["b"]["y"], "two");
}
