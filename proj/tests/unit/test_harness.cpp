#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "fanet/harness.hpp"

using namespace fanet;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.densities = {37500.0, 50000.0};
  cfg.antennas = {1, 16};
  cfg.n_networks = 3;
  cfg.mc_samples = 50;
  cfg.warmup_s = 2.0;
  cfg.tracker.measurement_interval = 1.0;
  cfg.threads = 2;
  return cfg;
}

std::string csv(const std::vector<RunRecord> &records) {
  std::ostringstream os;
  write_runs_csv(os, records, false);
  return os.str();
}

} // namespace

TEST(Harness, UavCount) {
  const Vec3 box(200, 200, 10);
  EXPECT_EQ(uav_count(50000, box), 20u);
  EXPECT_EQ(uav_count(25000, box), 10u);
  EXPECT_EQ(uav_count(75000, box), 30u);
}

TEST(Harness, GenerateNetworkIsReproducibleAndInsideBox) {
  MobilityParams mp;
  const auto a = generate_network(62500, mp, 5);
  const auto b = generate_network(62500, mp, 5);
  ASSERT_EQ(a.size(), 25u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].position, b[k].position);
    EXPECT_GE(a[k].position.minCoeff(), 0.0);
    EXPECT_LE(a[k].position.z(), mp.box.z());
    const double speed = a[k].velocity.norm();
    EXPECT_GE(speed, mp.speed_min - 1e-12);
    EXPECT_LE(speed, mp.speed_max + 1e-12);
  }
  EXPECT_THROW(generate_network(0.0, mp, 1), InvalidArgument);
}

TEST(Harness, RangeGraphConnectivity) {
  EXPECT_TRUE(range_graph_connected({Vec3(0, 0, 0), Vec3(90, 0, 0), Vec3(180, 0, 0)}, 100));
  EXPECT_FALSE(range_graph_connected({Vec3(0, 0, 0), Vec3(90, 0, 0), Vec3(191, 0, 0)}, 100));
}

TEST(Harness, ScenarioIsConnectedAndDeterministic) {
  auto cfg = small_config();
  cfg.attitude = AttitudeSource::exact;
  const auto a = build_scenario(cfg, 37500, 2);
  const auto b = build_scenario(cfg, 37500, 2);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_TRUE(range_graph_connected(realization_of(a.truth).positions, cfg.channel.max_distance_m));
  EXPECT_NE(a.source, a.dest);
  for (std::size_t k = 0; k < a.truth.size(); ++k) {
    EXPECT_EQ(a.tracked.estimates[k].mean, b.tracked.estimates[k].mean);
    EXPECT_EQ(a.tracked.estimates[k].attitude.yaw, a.truth[k].attitude.yaw);
  }
  EXPECT_NE(build_scenario(cfg, 37500, 3).seed, a.seed);
}

TEST(Harness, NoisyAttitudeCarriesItsSpread) {
  auto cfg = small_config();
  cfg.attitude = AttitudeSource::noisy;
  cfg.attitude_noise = 0.05;
  const auto sc = build_scenario(cfg, 50000, 0);
  double sq = 0.0;
  for (std::size_t k = 0; k < sc.truth.size(); ++k) {
    EXPECT_EQ(sc.tracked.estimates[k].attitude_sigma, 0.05);
    sq += std::pow(sc.tracked.estimates[k].attitude.pitch - sc.truth[k].attitude.pitch, 2);
  }
  const double rms = std::sqrt(sq / sc.truth.size());
  EXPECT_GT(rms, 0.02);
  EXPECT_LT(rms, 0.1);
}

TEST(Harness, IdealVariantIsFlatInArraySize) {
  auto cfg = small_config();
  cfg.variants = {Variant::ideal};
  cfg.antennas = {1, 4, 16, 64};
  const auto records = run_experiment(cfg);
  const std::size_t nn = cfg.n_networks, nm = cfg.antennas.size();
  for (std::size_t cell = 0; cell < records.size() / (nn * nm); ++cell)
    for (std::size_t n = 0; n < nn; ++n) {
      const auto &ref = records[cell * nn * nm + n];
      for (std::size_t m = 1; m < nm; ++m) {
        const auto &r = records[(cell * nm + m) * nn + n];
        EXPECT_EQ(r.route, ref.route);
        EXPECT_NEAR(r.throughput_bps, ref.throughput_bps, 1e-9 * ref.throughput_bps);
      }
    }
}

TEST(Harness, RunsAreOrderedAndReproducible) {
  auto cfg = small_config();
  const auto a = run_experiment(cfg);
  cfg.threads = 1;
  const auto b = run_experiment(cfg);
  ASSERT_EQ(a.size(), 3u * 2 * 2 * 2 * 3);
  EXPECT_EQ(csv(a), csv(b));
  EXPECT_EQ(a.front().protocol, Protocol::dbr);
  EXPECT_EQ(a.back().protocol, Protocol::basmurf);
  EXPECT_EQ(a.back().variant, Variant::ideal);
  // Seeds do not depend on protocol, variant or array size.
  EXPECT_EQ(a.front().seed, a[a.size() - 3 * 2 * 2].seed);
  for (const auto &r : a) {
    EXPECT_GE(r.throughput_bps, 0.0);
    EXPECT_EQ(r.uavs, uav_count(r.density, cfg.mobility.box));
  }
}

TEST(Harness, ParallelForRethrows) {
  std::vector<int> hit(20, 0);
  parallel_for(20, 3, [&](std::size_t k) { hit[k] = 1; });
  for (int h : hit)
    EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 2, [](std::size_t k) {
                 if (k == 7)
                   throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Output, FormatNumber) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Output, SummaryStatistics) {
  std::vector<RunRecord> rs;
  for (int k = 1; k <= 5; ++k) {
    RunRecord r;
    r.protocol = Protocol::smurf;
    r.density = 50000;
    r.antennas = 4;
    r.throughput_bps = 10.0 * k;
    if (k == 1) {
      r.route.clear();
    } else {
      r.route = {0, 1, 2};
      r.interference_db = static_cast<double>(k);
    }
    rs.push_back(r);
  }
  const auto cells = summarize(rs);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].runs, 5u);
  EXPECT_EQ(cells[0].failures, 1u);
  EXPECT_DOUBLE_EQ(cells[0].mean, 30.0);
  EXPECT_DOUBLE_EQ(cells[0].p25, 20.0);
  EXPECT_DOUBLE_EQ(cells[0].p50, 30.0);
  EXPECT_DOUBLE_EQ(cells[0].p75, 40.0);
  EXPECT_DOUBLE_EQ(cells[0].interference_db_mean, 3.5);
  EXPECT_DOUBLE_EQ(cells[0].path_len_mean, 1.6);

  std::ostringstream os;
  write_runs_csv(os, rs);
  const std::string text = os.str();
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header, "protocol,variant,density,antennas,seed,K,path_len,throughput_bps,interference_db,runtime_s");
}

TEST(Output, WritesBothFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "fanet_harness_test";
  std::filesystem::remove_all(dir);
  auto cfg = small_config();
  cfg.densities = {50000};
  cfg.antennas = {4};
  cfg.n_networks = 1;
  write_results(dir, run_experiment(cfg));
  EXPECT_TRUE(std::filesystem::exists(dir / "runs.csv"));
  std::ifstream summary(dir / "summary.csv");
  std::string line;
  int lines = 0;
  while (std::getline(summary, line))
    ++lines;
  EXPECT_EQ(lines, 1 + 3 * 2);
  std::filesystem::remove_all(dir);
}

TEST(Config, ValidateNamesTheKey) {
  ExperimentConfig cfg;
  cfg.densities = {};
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_EQ(e.key(), "experiment.densities");
  }
  cfg = {};
  cfg.cross_traffic = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
