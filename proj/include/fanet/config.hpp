#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fanet/errors.hpp"
#include "fanet/harness.hpp"

namespace fanet {

/// JSON experiment files. Every section is optional; keys left out keep
/// their defaults. Unknown keys and wrong types are errors that name the
/// offending key path.
namespace config {

using Json = nlohmann::json;

namespace detail {

inline std::string type_name(const Json &j) { return j.type_name(); }

inline double as_number(const Json &j, const std::string &key) {
  if (!j.is_number())
    throw ConfigError(key, "expected a number, got " + type_name(j));
  return j.get<double>();
}

inline std::uint64_t as_unsigned(const Json &j, const std::string &key) {
  if (!j.is_number_unsigned())
    throw ConfigError(key, "expected a nonnegative integer, got " + (j.is_number() ? j.dump() : type_name(j)));
  return j.get<std::uint64_t>();
}

inline bool as_bool(const Json &j, const std::string &key) {
  if (!j.is_boolean())
    throw ConfigError(key, "expected true or false, got " + type_name(j));
  return j.get<bool>();
}

inline std::string as_string(const Json &j, const std::string &key) {
  if (!j.is_string())
    throw ConfigError(key, "expected a string, got " + type_name(j));
  return j.get<std::string>();
}

template <class T, class Fn> std::vector<T> as_list(const Json &j, const std::string &key, Fn &&item) {
  if (!j.is_array())
    throw ConfigError(key, "expected a list, got " + type_name(j));
  std::vector<T> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(item(j[k], key + "[" + std::to_string(k) + "]"));
  return out;
}

template <class E> E as_enum(const Json &j, const std::string &key, const std::map<std::string, E> &names) {
  const auto s = as_string(j, key);
  const auto it = names.find(s);
  if (it != names.end())
    return it->second;
  std::string expected;
  for (const auto &[name, value] : names)
    expected += (expected.empty() ? "" : ", ") + name;
  throw ConfigError(key, "unknown value '" + s + "', expected one of: " + expected);
}

inline Protocol as_protocol(const Json &j, const std::string &key) {
  return as_enum<Protocol>(j, key, {{"DBR", Protocol::dbr}, {"SMURF", Protocol::smurf}, {"BA-SMURF", Protocol::basmurf}});
}

inline Variant as_variant(const Json &j, const std::string &key) {
  return as_enum<Variant>(j, key, {{"T", Variant::tracked}, {"I", Variant::ideal}});
}

using Setter = std::function<void(const Json &, const std::string &)>;

inline void apply_section(const Json &root, const std::string &section, const std::map<std::string, Setter> &keys) {
  if (!root.contains(section))
    return;
  const Json &s = root[section];
  if (!s.is_object())
    throw ConfigError(section, "expected a section (object), got " + type_name(s));
  for (const auto &[name, value] : s.items()) {
    const std::string key = section + "." + name;
    const auto it = keys.find(name);
    if (it == keys.end()) {
      std::string expected;
      for (const auto &[known, setter] : keys)
        expected += (expected.empty() ? "" : ", ") + known;
      throw ConfigError(key, "unknown key, expected one of: " + expected);
    }
    it->second(value, key);
  }
}

} // namespace detail

/// Applies the entries of `root` on top of `cfg`.
inline void merge(ExperimentConfig &cfg, const Json &root) {
  using namespace detail;
  if (!root.is_object())
    throw ConfigError("", "config root must be an object");
  static const char *kSections[] = {"experiment", "channel", "antenna", "mobility", "tracker", "routing", "output"};
  for (const auto &[name, value] : root.items())
    if (std::find(std::begin(kSections), std::end(kSections), name) == std::end(kSections))
      throw ConfigError(name, "unknown section, expected experiment, channel, antenna, mobility, tracker, routing or output");

  auto number = [](double &field) { return [&field](const Json &j, const std::string &k) { field = as_number(j, k); }; };
  auto count = [](std::size_t &field) {
    return [&field](const Json &j, const std::string &k) { field = static_cast<std::size_t>(as_unsigned(j, k)); };
  };
  auto flag = [](bool &field) { return [&field](const Json &j, const std::string &k) { field = as_bool(j, k); }; };

  apply_section(root, "experiment",
                {{"densities", [&](const Json &j, const std::string &k) { cfg.densities = as_list<double>(j, k, as_number); }},
                 {"networks", count(cfg.n_networks)},
                 {"master_seed", [&](const Json &j, const std::string &k) { cfg.master_seed = as_unsigned(j, k); }},
                 {"protocols", [&](const Json &j, const std::string &k) { cfg.protocols = as_list<Protocol>(j, k, as_protocol); }},
                 {"variants", [&](const Json &j, const std::string &k) { cfg.variants = as_list<Variant>(j, k, as_variant); }},
                 {"require_connected", flag(cfg.require_connected)},
                 {"max_attempts", count(cfg.max_attempts)},
                 {"floor_throughput_bps", number(cfg.floor_throughput)},
                 {"endpoints", [&](const Json &j, const std::string &k) {
                    cfg.endpoints = as_enum<EndpointRule>(j, k, {{"farthest_estimated", EndpointRule::farthest_estimated}});
                  }},
                 {"threads", count(cfg.threads)}});

  apply_section(root, "channel",
                {{"carrier_hz", number(cfg.channel.carrier_hz)},
                 {"path_loss_exponent", number(cfg.channel.path_loss_exponent)},
                 {"bandwidth_hz", number(cfg.channel.bandwidth_hz)},
                 {"noise_psd_dbm_per_hz",
                  [&](const Json &j, const std::string &k) { cfg.channel.noise_psd_w_per_hz = dbm_to_watts(as_number(j, k)); }},
                 {"tx_power_w", number(cfg.channel.tx_power_w)},
                 {"max_distance_m", number(cfg.channel.max_distance_m)}});

  apply_section(root, "antenna",
                {{"elements", [&](const Json &j, const std::string &k) {
                    cfg.antennas = as_list<std::size_t>(j, k, [](const Json &v, const std::string &vk) {
                      return static_cast<std::size_t>(as_unsigned(v, vk));
                    });
                  }},
                 {"gain_model", [&](const Json &j, const std::string &k) {
                    cfg.gain_model = as_enum<GainModel>(j, k, {{"normalized", GainModel::normalized}, {"array", GainModel::array}});
                  }}});

  apply_section(root, "mobility",
                {{"box_m", [&](const Json &j, const std::string &k) {
                    const auto v = as_list<double>(j, k, as_number);
                    if (v.size() != 3)
                      throw ConfigError(k, "expected three side lengths [x, y, z]");
                    cfg.mobility.box = {v[0], v[1], v[2]};
                  }},
                 {"model", [&](const Json &j, const std::string &k) {
                    cfg.mobility.model = as_enum<MobilityModel>(
                        j, k, {{"gauss-markov", MobilityModel::gauss_markov}, {"random-waypoint", MobilityModel::random_waypoint}});
                  }},
                 {"speed_min", number(cfg.mobility.speed_min)},
                 {"speed_max", number(cfg.mobility.speed_max)},
                 {"update_interval_s", number(cfg.mobility.update_interval)},
                 {"memory", number(cfg.mobility.memory)},
                 {"speed_sigma", number(cfg.mobility.speed_sigma)},
                 {"yaw_sigma", number(cfg.mobility.yaw_sigma)},
                 {"pitch_sigma", number(cfg.mobility.pitch_sigma)},
                 {"max_pitch", number(cfg.mobility.max_pitch)}});

  apply_section(root, "tracker",
                {{"process_noise", number(cfg.tracker.process_noise)},
                 {"measurement_noise_m", number(cfg.tracker.measurement_noise)},
                 {"measurement_interval_s", number(cfg.tracker.measurement_interval)},
                 {"initial_velocity_sigma", number(cfg.tracker.initial_velocity_sigma)},
                 {"ukf_alpha", number(cfg.tracker.ukf.alpha)},
                 {"ukf_beta", number(cfg.tracker.ukf.beta)},
                 {"ukf_kappa", number(cfg.tracker.ukf.kappa)},
                 {"warmup_s", number(cfg.warmup_s)},
                 {"attitude", [&](const Json &j, const std::string &k) {
                    cfg.attitude = as_enum<AttitudeSource>(j, k, {{"exact", AttitudeSource::exact}, {"velocity", AttitudeSource::velocity}, {"noisy", AttitudeSource::noisy}});
                  }},
                 {"attitude_noise_rad", number(cfg.attitude_noise)},
                 {"along_track_ratio", number(cfg.tracker.along_track_ratio)}});

  apply_section(root, "routing",
                {{"samples", count(cfg.mc_samples)},
                 {"cross_traffic", number(cfg.cross_traffic)},
                 {"dbr_metric", [&](const Json &j, const std::string &k) {
                    cfg.dbr_metric = as_enum<DbrMetric>(j, k, {{"capacity", DbrMetric::capacity}, {"hop_count", DbrMetric::hop_count}});
                  }}});

  apply_section(root, "output", {{"dir", [&](const Json &j, const std::string &k) { cfg.output_dir = as_string(j, k); }}});
}

/// Parses and validates a config document.
inline ExperimentConfig parse(const std::string &text, ExperimentConfig base = {}) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  merge(base, root);
  try {
    base.validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError("", e.what());
  }
  return base;
}

inline ExperimentConfig load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("", "config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

} // namespace config
} // namespace fanet
