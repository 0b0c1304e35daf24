#include <cmath>

#include <gtest/gtest.h>

#include "fanet/channel.hpp"

using namespace fanet;

TEST(PathLoss, ReferenceDistanceIsUnity) {
  ChannelParams p;
  const double d0 = kSpeedOfLight / (4 * kPi * p.carrier_hz);
  EXPECT_NEAR(path_loss(d0, p), 1.0, 1e-12);
}

TEST(PathLoss, FreeSpaceAt100m) {
  ChannelParams p;
  // Textbook FSPL in dB: 20 log10(d) + 20 log10(f) - 147.55.
  const double fspl_db = 20 * std::log10(100.0) + 20 * std::log10(28e9) + 20 * std::log10(4 * kPi / 299792458.0);
  EXPECT_NEAR(fspl_db, 101.39, 0.01);
  EXPECT_NEAR(path_loss(100.0, p), std::pow(10.0, -fspl_db / 10), 1e-20);
  EXPECT_NEAR(path_loss(100.0, p), 7.26e-11, 0.01e-11);
}

TEST(PathLoss, InverseSquareAndMonotone) {
  ChannelParams p;
  for (double d : {1.0, 10.0, 37.0, 99.0}) {
    EXPECT_NEAR(path_loss(d, p) / path_loss(2 * d, p), 4.0, 1e-12);
    EXPECT_GT(path_loss(d, p), path_loss(d * 1.001, p));
  }
  p.path_loss_exponent = 3.0;
  EXPECT_NEAR(received_power(1.0, 10.0, p) / received_power(1.0, 20.0, p), 8.0, 1e-12);
}

TEST(PathLoss, RejectsNonPositiveDistance) {
  ChannelParams p;
  EXPECT_THROW(path_loss(0.0, p), InvalidArgument);
  EXPECT_THROW(path_loss(-1.0, p), InvalidArgument);
}

TEST(ReceivedPower, Examples) {
  ChannelParams p;
  const double d0 = kSpeedOfLight / (4 * kPi * p.carrier_hz);
  EXPECT_NEAR(received_power(1.0, d0, p), 1.0, 1e-12);
  EXPECT_EQ(received_power(0.0, 50.0, p), 0.0);
  EXPECT_NEAR(received_power(16.0, 100.0, p), 1.86e-8, 0.01e-8);
  EXPECT_THROW(received_power(-1.0, 10.0, p), InvalidArgument);
}

TEST(SinrCapacity, Examples) {
  ChannelParams p;
  const double n = p.noise_power_w();
  EXPECT_NEAR(sinr_capacity(n, 0.0, p), p.bandwidth_hz, 1e-3);
  EXPECT_EQ(sinr_capacity(0.0, 1.0, p), 0.0);
  for (double i : {0.0, 1e-13, 1e-9})
    EXPECT_NEAR(sinr_capacity(3 * (n + i), i, p), 2 * p.bandwidth_hz, 1e-3);
}

TEST(SinrCapacity, DecreasingInInterference) {
  ChannelParams p;
  double prev = sinr_capacity(1e-9, 0.0, p);
  for (double i = 1e-14; i < 1e-6; i *= 3) {
    const double c = sinr_capacity(1e-9, i, p);
    EXPECT_LT(c, prev);
    EXPECT_TRUE(std::isfinite(c));
    prev = c;
  }
  EXPECT_THROW(sinr_capacity(-1.0, 0.0, p), InvalidArgument);
}

TEST(Units, NoiseFloor) {
  ChannelParams p;
  EXPECT_NEAR(to_db(p.noise_power_w() / dbm_to_watts(-94.0)), 0.0, 1e-9);
  EXPECT_EQ(to_db(0.0), -std::numeric_limits<double>::infinity());
}
