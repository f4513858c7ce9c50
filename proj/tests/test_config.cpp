#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "pqpan/config.hpp"
#include "pqpan/errors.hpp"

using namespace pqpan;
namespace fs = std::filesystem;

namespace {

class ConfigTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pqpan_config_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(ConfigTest, TomlSubset) {
  const auto p = write("profile.toml",
                       "# bench profile\n"
                       "[profile]\n"
                       "voltage = 3.3\n"
                       "i_tx = 0.0061  # amperes\n"
                       "i_rx = 0.0055\n"
                       "i_ifs = 0.002\n"
                       "i_mcu = 0.004\n"
                       "ifs_slots = 1\n"
                       "gamma_comm = 1.0\n"
                       "gamma_keygen = [1.0, 1.1, 1.2]\n"
                       "kem_backend = \"stub\"\n"
                       "provenance = \"bench #3\"\n");
  const ModelConfig c = load_model_config(p);
  EXPECT_DOUBLE_EQ(c.profile.voltage_v, 3.3);
  EXPECT_DOUBLE_EQ(c.profile.i_tx_a, 0.0061);
  EXPECT_DOUBLE_EQ(c.profile.i_mcu_a, 0.004);
  EXPECT_EQ(c.ifs_slots, 1);
  EXPECT_DOUBLE_EQ(c.gamma.comm, 1.0);
  EXPECT_DOUBLE_EQ(c.gamma.gamma_keygen(5), 1.2);
  EXPECT_DOUBLE_EQ(c.gamma.gamma_decap(1), 1.12);
}

TEST_F(ConfigTest, JsonWithNestedProfile) {
  const auto p = write("fit.json",
                       R"({"profile": {"i_tx": 0.007, "i_rx": 0.006, "i_ifs": 0.003,
                           "i_mcu": 0.005, "voltage": 3.0, "f_mcu": 64000000, "ifs_slots": 2},
                           "residuals": []})");
  const ModelConfig c = load_model_config(p);
  EXPECT_DOUBLE_EQ(c.profile.i_tx_a, 0.007);
  EXPECT_EQ(c.ifs_slots, 2);
}

TEST_F(ConfigTest, RelativeCyclesPath) {
  write("cyc.csv",
        "scheme,keygen,encap,decap\nML-KEM-512,1,2,3\nML-KEM-768,4,5,6\nML-KEM-1024,7,8,9\n");
  const auto p = write("p.toml", "cycles = \"cyc.csv\"\n");
  const ModelConfig c = load_model_config(p);
  ASSERT_TRUE(c.cycles_path.has_value());
  EXPECT_EQ(c.load_cycles().at("ML-KEM-768").encap, 5u);
}

TEST_F(ConfigTest, Rejections) {
  EXPECT_THROW(load_model_config(write("a.toml", "i_tx = -1\n")), InvalidProfile);
  EXPECT_THROW(load_model_config(write("b.toml", "colour = 3\n")), InvalidConfig);
  EXPECT_THROW(load_model_config(write("c.toml", "ifs_slots = 3\n")), InvalidConfig);
  EXPECT_THROW(load_model_config(write("d.toml", "gamma_keygen = [1, 2]\n")), InvalidConfig);
  EXPECT_THROW(load_model_config(write("e.toml", "just words\n")), ParseError);
  EXPECT_THROW(load_model_config(write("f.json", "{nope")), ParseError);
  EXPECT_THROW(load_model_config(dir_ / "missing.toml"), IoError);
}

TEST_F(ConfigTest, EnvironmentFallback) {
  const auto p = write("env.toml", "i_mcu = 0.0042\n");
  ::setenv(kProfileEnvVar, p.c_str(), 1);
  EXPECT_DOUBLE_EQ(resolve_model_config(std::nullopt).profile.i_mcu_a, 0.0042);
  const auto q = write("explicit.toml", "i_mcu = 0.0043\n");
  EXPECT_DOUBLE_EQ(resolve_model_config(q).profile.i_mcu_a, 0.0043);
  ::unsetenv(kProfileEnvVar);
  EXPECT_DOUBLE_EQ(resolve_model_config(std::nullopt).profile.i_mcu_a,
                   RadioProfile::fitted_default().i_mcu_a);
}

TEST(BundledProfile, MatchesBuiltinDefaults) {
  const ModelConfig c = load_model_config(fs::path(PQPAN_DATA_DIR) / "profile.toml");
  const RadioProfile d = RadioProfile::fitted_default();
  EXPECT_DOUBLE_EQ(c.profile.i_tx_a, d.i_tx_a);
  EXPECT_DOUBLE_EQ(c.profile.i_rx_a, d.i_rx_a);
  EXPECT_DOUBLE_EQ(c.profile.i_ifs_a, d.i_ifs_a);
  EXPECT_DOUBLE_EQ(c.profile.i_mcu_a, d.i_mcu_a);
  EXPECT_EQ(c.ifs_slots, 2);
  EXPECT_EQ(c.load_cycles().at("ML-KEM-512").keygen,
            CycleTable::builtin().at("ML-KEM-512").keygen);
}
