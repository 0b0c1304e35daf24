// fanet: run routing experiments and single routing queries on simulated
// UAV swarms.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fanet/fanet.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr const char *kOutputEnv = "FANET_OUTPUT_DIR";

struct Overrides {
  std::string config_path;
  std::vector<double> densities;
  std::vector<std::size_t> antennas;
  std::vector<std::string> protocols;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::string output;
};

void add_common(CLI::App &cmd, Overrides &o) {
  cmd.add_option("-c,--config", o.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd.add_option("--density", o.densities, "replace the density list (UAVs/km^3)");
  cmd.add_option("--antennas", o.antennas, "replace the antenna element counts");
  cmd.add_option("--protocol", o.protocols, "replace the protocol list (DBR, SMURF, BA-SMURF)");
  cmd.add_option("--seed", o.seed, "master seed");
  cmd.add_option("--samples", o.samples, "Monte Carlo samples per link");
  cmd.add_option("-o,--output", o.output, std::string("output directory (default: $") + kOutputEnv + ", then config)");
}

fanet::ExperimentConfig resolve(const Overrides &o) {
  fanet::ExperimentConfig cfg = o.config_path.empty() ? fanet::ExperimentConfig{} : fanet::config::load(o.config_path);
  if (!o.densities.empty())
    cfg.densities = o.densities;
  if (!o.antennas.empty())
    cfg.antennas = o.antennas;
  if (!o.protocols.empty()) {
    cfg.protocols.clear();
    for (const auto &name : o.protocols) {
      const auto p = fanet::parse_protocol(name);
      if (!p)
        throw fanet::ConfigError("--protocol", "unknown protocol '" + name + "', expected DBR, SMURF or BA-SMURF");
      cfg.protocols.push_back(*p);
    }
  }
  if (o.seed)
    cfg.master_seed = *o.seed;
  if (o.samples)
    cfg.mc_samples = *o.samples;
  if (!o.output.empty())
    cfg.output_dir = o.output;
  else if (cfg.output_dir.empty()) {
    const char *env = std::getenv(kOutputEnv);
    cfg.output_dir = env && *env ? env : "results";
  }
  cfg.validate();
  return cfg;
}

void print_config(const fanet::ExperimentConfig &cfg) {
  std::printf("map box        %g x %g x %g m\n", cfg.mobility.box.x(), cfg.mobility.box.y(), cfg.mobility.box.z());
  std::printf("densities     ");
  for (double d : cfg.densities)
    std::printf(" %g (K=%zu)", d, fanet::uav_count(d, cfg.mobility.box));
  std::printf("\nantennas      ");
  for (auto m : cfg.antennas)
    std::printf(" %zu", m);
  std::printf("\nprotocols     ");
  for (auto p : cfg.protocols)
    std::printf(" %s", std::string(fanet::protocol_name(p)).c_str());
  static const char *attitude[] = {"exact", "velocity", "noisy"};
  std::printf("\ntracker        r=%g m every %g s, q=%g, attitude %s (%g rad)", cfg.tracker.measurement_noise,
              cfg.tracker.measurement_interval, cfg.tracker.process_noise,
              attitude[static_cast<int>(cfg.attitude)], cfg.attitude_noise);
  std::printf("\nnetworks       %zu\nmc samples     %zu\nmaster seed    %llu\noutput dir     %s\n", cfg.n_networks,
              cfg.mc_samples, static_cast<unsigned long long>(cfg.master_seed), cfg.output_dir.c_str());
}

int cmd_run(const fanet::ExperimentConfig &cfg) {
  const auto records = fanet::run_experiment(cfg);
  fanet::write_results(cfg.output_dir, records);
  const auto cells = fanet::summarize(records);
  std::printf("%-12s %9s %8s %14s %14s %10s\n", "protocol", "density", "antennas", "mean_bps", "p50_bps", "intf_db");
  for (const auto &c : cells)
    std::printf("%-12s %9g %8zu %14.6g %14.6g %10.3f\n", fanet::protocol_label(c.protocol, c.variant).c_str(),
                c.density, c.antennas, c.mean, c.p50, c.interference_db_mean);
  std::printf("wrote %zu runs to %s\n", records.size(), (std::filesystem::path(cfg.output_dir) / "runs.csv").c_str());
  return kOk;
}

struct Query {
  std::size_t network = 0;
  std::string variant = "T";
  std::optional<std::size_t> source;
  std::optional<std::size_t> dest;
  std::size_t i = 0;
  std::size_t j = 1;
};

struct QueryContext {
  fanet::Scenario scenario;
  fanet::NetworkBelief net;
  std::uint64_t mc_seed = 0;
};

QueryContext prepare(const fanet::ExperimentConfig &cfg, const Query &q) {
  if (q.variant != "T" && q.variant != "I")
    throw fanet::ConfigError("--variant", "expected T or I");
  QueryContext ctx;
  ctx.scenario = fanet::build_scenario(cfg, cfg.densities.front(), q.network);
  const auto &sc = ctx.scenario;
  const auto belief = q.variant == "T" ? sc.tracked : fanet::exact_belief(sc.truth, sc.tracked.timestamp);
  ctx.net = fanet::network_belief(cfg, belief, cfg.antennas.front());
  ctx.mc_seed = fanet::derive_seed(sc.seed, {fanet::detail::kMonteCarlo, cfg.antennas.front()});
  return ctx;
}

int cmd_route(const fanet::ExperimentConfig &cfg, const Query &q) {
  const auto ctx = prepare(cfg, q);
  const auto &sc = ctx.scenario;
  const std::size_t s = q.source.value_or(sc.source), d = q.dest.value_or(sc.dest);
  const auto route = fanet::compute_route(cfg.protocols.front(), ctx.net, s, d, cfg, ctx.mc_seed);
  const auto ev = fanet::evaluate_route(route, fanet::realization_of(sc.truth), ctx.net);

  std::printf("%s-%s  density %g  K=%zu  M=%zu  network %zu\n", std::string(fanet::protocol_name(route.protocol)).c_str(),
              q.variant.c_str(), cfg.densities.front(), sc.truth.size(), cfg.antennas.front(), q.network);
  std::printf("path:");
  for (auto id : route.path)
    std::printf(" %zu", id);
  std::printf("\nbottleneck capacity (estimated)  %.9g bit/s\n", route.bottleneck_capacity);
  std::printf("achieved throughput (true state) %.9g bit/s\n", ev.throughput);
  std::printf("%6s %6s %16s %16s %10s %10s %10s %10s\n", "tx", "rx", "est_bps", "true_bps", "tx_az", "tx_el", "rx_az",
              "rx_el");
  for (std::size_t k = 0; k < route.beams.size(); ++k) {
    const auto &b = route.beams[k];
    std::printf("%6zu %6zu %16.9g %16.9g %10.4f %10.4f %10.4f %10.4f\n", b.tx, b.rx, route.links[k].expected_capacity,
                ev.hop_capacity[k], b.tx_aim.azimuth, b.tx_aim.elevation, b.rx_aim.azimuth, b.rx_aim.elevation);
  }
  return kOk;
}

int cmd_probe(const fanet::ExperimentConfig &cfg, const Query &q) {
  const auto ctx = prepare(cfg, q);
  const auto w = fanet::expected_link_capacity(ctx.net, q.i, q.j, cfg.mc_samples, ctx.mc_seed);
  std::printf("link %zu -> %zu  (density %g, M=%zu, network %zu, %s)\n", w.i, w.j, cfg.densities.front(),
              cfg.antennas.front(), q.network, q.variant.c_str());
  std::printf("expected capacity      %.9g bit/s\n", w.expected_capacity);
  std::printf("existence probability  %.9g\n", w.existence_probability);
  std::printf("MC standard error      %.9g bit/s\n", w.mc_std_error);
  std::printf("samples                %zu\n", w.samples);
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Beam-aware stochastic multihop routing for UAV swarms"};
  app.require_subcommand(1);

  Overrides run_o, route_o, probe_o, check_o;
  Query route_q, probe_q;

  auto *run = app.add_subcommand("run", "run the full experiment sweep and write CSV results");
  add_common(*run, run_o);

  auto *route = app.add_subcommand("route", "compute one route on one generated network");
  add_common(*route, route_o);
  route->add_option("--network", route_q.network, "network index within the density cell");
  route->add_option("--variant", route_q.variant, "T (tracked belief) or I (true positions)");
  route->add_option("--source", route_q.source, "source UAV (default: farthest estimated pair)");
  route->add_option("--dest", route_q.dest, "destination UAV");

  auto *probe = app.add_subcommand("probe-link", "estimate one link's capacity and existence probability");
  add_common(*probe, probe_o);
  probe->add_option("--network", probe_q.network, "network index within the density cell");
  probe->add_option("--variant", probe_q.variant, "T (tracked belief) or I (true positions)");
  probe->add_option("-i", probe_q.i, "transmitting UAV")->required();
  probe->add_option("-j", probe_q.j, "receiving UAV")->required();

  auto *check = app.add_subcommand("validate-config", "check a config file and print the resolved experiment");
  add_common(*check, check_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kConfigError;
  }

  fanet::ExperimentConfig cfg;
  try {
    if (run->parsed())
      cfg = resolve(run_o);
    else if (route->parsed())
      cfg = resolve(route_o);
    else if (probe->parsed())
      cfg = resolve(probe_o);
    else
      cfg = resolve(check_o);
  } catch (const fanet::ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const fanet::Error &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  }

  try {
    if (check->parsed()) {
      print_config(cfg);
      std::printf("config ok\n");
      return kOk;
    }
    if (run->parsed())
      return cmd_run(cfg);
    if (route->parsed())
      return cmd_route(cfg, route_q);
    return cmd_probe(cfg, probe_q);
  } catch (const fanet::ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
}
