#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "fanet/config.hpp"

using namespace fanet;

namespace {

std::string key_of(const std::string &text) {
  try {
    config::parse(text);
  } catch (const ConfigError &e) {
    return e.key();
  }
  return "<accepted>";
}

} // namespace

TEST(ConfigFile, EmptyObjectKeepsDefaults) {
  const auto cfg = config::parse("{}");
  const ExperimentConfig def;
  EXPECT_EQ(cfg.densities, def.densities);
  EXPECT_EQ(cfg.antennas, def.antennas);
  EXPECT_EQ(cfg.n_networks, def.n_networks);
  EXPECT_EQ(cfg.channel.carrier_hz, 28e9);
  EXPECT_EQ(cfg.channel.max_distance_m, 100.0);
}

TEST(ConfigFile, AppliesEverySection) {
  const auto cfg = config::parse(R"({
    "experiment": {"densities": [30000, 60000], "networks": 7, "master_seed": 42,
                   "protocols": ["BA-SMURF"], "variants": ["T"], "threads": 1},
    "channel": {"carrier_hz": 6e10, "path_loss_exponent": 2.5, "noise_psd_dbm_per_hz": -170},
    "antenna": {"elements": [4, 8], "gain_model": "array"},
    "mobility": {"box_m": [300, 300, 20], "model": "random-waypoint", "speed_max": 10},
    "tracker": {"measurement_noise_m": 0.5, "attitude": "noisy", "attitude_noise_rad": 0.1, "along_track_ratio": 2},
    "routing": {"samples": 200, "dbr_metric": "capacity"},
    "output": {"dir": "out"}
  })");
  EXPECT_EQ(cfg.densities, (std::vector<double>{30000, 60000}));
  EXPECT_EQ(cfg.n_networks, 7u);
  EXPECT_EQ(cfg.master_seed, 42u);
  EXPECT_EQ(cfg.protocols, (std::vector<Protocol>{Protocol::basmurf}));
  EXPECT_EQ(cfg.variants, (std::vector<Variant>{Variant::tracked}));
  EXPECT_EQ(cfg.channel.carrier_hz, 6e10);
  EXPECT_NEAR(cfg.channel.noise_psd_w_per_hz, 1e-20, 1e-30);
  EXPECT_EQ(cfg.antennas, (std::vector<std::size_t>{4, 8}));
  EXPECT_EQ(cfg.gain_model, GainModel::array);
  EXPECT_EQ(cfg.mobility.box, Vec3(300, 300, 20));
  EXPECT_EQ(cfg.mobility.model, MobilityModel::random_waypoint);
  EXPECT_EQ(cfg.tracker.measurement_noise, 0.5);
  EXPECT_EQ(cfg.attitude, AttitudeSource::noisy);
  EXPECT_EQ(cfg.attitude_noise, 0.1);
  EXPECT_EQ(cfg.tracker.along_track_ratio, 2.0);
  EXPECT_EQ(cfg.mc_samples, 200u);
  EXPECT_EQ(cfg.dbr_metric, DbrMetric::capacity);
  EXPECT_EQ(cfg.output_dir, "out");
}

TEST(ConfigFile, ErrorsNameTheKey) {
  EXPECT_EQ(key_of(R"({"channel": {"carier_hz": 1}})"), "channel.carier_hz");
  EXPECT_EQ(key_of(R"({"chanel": {}})"), "chanel");
  EXPECT_EQ(key_of(R"({"experiment": {"networks": -3}})"), "experiment.networks");
  EXPECT_EQ(key_of(R"({"experiment": {"networks": "ten"}})"), "experiment.networks");
  EXPECT_EQ(key_of(R"({"experiment": {"densities": [1, "x"]}})"), "experiment.densities[1]");
  EXPECT_EQ(key_of(R"({"experiment": {"protocols": ["OLSR"]}})"), "experiment.protocols[0]");
  EXPECT_EQ(key_of(R"({"mobility": {"box_m": [1, 2]}})"), "mobility.box_m");
  EXPECT_EQ(key_of(R"({"experiment": {"densities": []}})"), "experiment.densities");
  EXPECT_EQ(key_of(R"({"tracker": 3})"), "tracker");
  EXPECT_EQ(key_of("{not json"), "");
  EXPECT_EQ(key_of("[]"), "");
}

TEST(ConfigFile, UnknownKeyListsAlternatives) {
  try {
    config::parse(R"({"routing": {"sample": 10}})");
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("samples"), std::string::npos);
  }
}

TEST(ConfigFile, LoadFromDisk) {
  const auto path = std::filesystem::temp_directory_path() / "fanet_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"experiment": {"networks": 12}})";
  }
  EXPECT_EQ(config::load(path).n_networks, 12u);
  std::filesystem::remove(path);
  EXPECT_THROW(config::load(path), ConfigError);
}
