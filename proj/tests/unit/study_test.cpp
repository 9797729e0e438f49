#include "ncdr/study.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ncdr;

TEST(Config, ParsesKnownFields) {
  StudyConfig c;
  apply_config_json(R"({"test": "layer", "method": "both", "epsilon": [1e-6], "levels": [2, 4],
                        "format": ["csv", "json"], "serial": true,
                        "solver": {"saddle_backend": "reduced"}})",
                    c);
  EXPECT_EQ(c.tests, std::vector<std::string>{"layer"});
  EXPECT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.levels, (std::vector<int>{2, 4}));
  EXPECT_EQ(c.formats.size(), 2u);
  EXPECT_TRUE(c.serial);
  EXPECT_EQ(c.solver.saddle_backend, SaddleBackend::Reduced);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownFieldIsRejected) {
  StudyConfig c;
  try {
    apply_config_json(R"({"levles": [4]})", c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("levles"), std::string::npos);
  }
}

TEST(Config, WrongTypeIsRejected) {
  StudyConfig c;
  EXPECT_THROW(apply_config_json(R"({"serial": "yes"})", c), ConfigError);
  EXPECT_THROW(apply_config_json(R"({"levels": ["four"]})", c), ConfigError);
  EXPECT_THROW(apply_config_json(R"({"method": "mixed"})", c), ConfigError);
}

TEST(Config, ParseErrorReportsLine) {
  StudyConfig c;
  try {
    apply_config_json("{\n  \"levels\": [4,\n  8\n", c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Config, LevelValidation) {
  StudyConfig c;
  c.levels = {3, 6};
  EXPECT_THROW(c.validate(), ConfigError);
  c.levels = {8, 4};
  EXPECT_THROW(c.validate(), ConfigError);
  c.levels = {4, 4};
  EXPECT_THROW(c.validate(), ConfigError);
  c.levels = {2, 4, 8};
  EXPECT_NO_THROW(c.validate());
  c.epsilons = {0.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Study, SerialRunIsDeterministic) {
  StudyConfig c;
  c.tests = {"smooth", "layer"};
  c.methods = {Method::Interp, Method::NoInterp};
  c.epsilons = {1.0, 1e-6};
  c.levels = {1, 2};
  c.serial = true;
  c.solver.exec.serial = true;
  auto csv = [&] {
    const auto res = run_study(c);
    EXPECT_TRUE(res.ok());
    std::ostringstream os;
    write_csv(os, res.rows);
    return os.str();
  };
  const std::string a = csv(), b = csv();
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 2 * 2 * 2 * 2);
}

TEST(Study, RowsCarryRatesAndCounts) {
  StudyConfig c;
  c.epsilons = {1.0};
  c.levels = {1, 2};
  c.serial = true;
  const auto res = run_study(c);
  ASSERT_EQ(res.rows.size(), 2u);
  EXPECT_FALSE(res.rows[0].rate_phi);
  EXPECT_TRUE(res.rows[1].rate_phi);
  const auto& r = res.rows[1];
  EXPECT_GT(r.dof_total, r.dof_phi);
  EXPECT_FALSE(r.solve_seconds);
  const auto j = study_json(res);
  EXPECT_EQ(j["rows"].size(), 2u);
}
