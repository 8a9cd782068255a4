// fluidlab: analytic tables, loss-product trajectories and simulations from the
// command line.
//
// Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical-consistency failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fluid/analytics.hpp"
#include "fluid/netsim.hpp"
#include "fluid/params.hpp"
#include "fluid/report.hpp"
#include "fluid/scenario_io.hpp"

namespace {

using namespace fluid;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct UsageError : Error {
  using Error::Error;
};

enum class Format { table, csv };

struct Output {
  Format format = Format::table;
  std::string path;

  /// Writes `text` to the --out file, or stdout when none was given.
  void emit(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out.flush()) throw IoError("write to '" + path + "' failed");
  }
};

void add_output_options(CLI::App* cmd, Output& out) {
  cmd->add_option("--format", out.format, "table or csv")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"table", Format::table}, {"csv", Format::csv}}))
      ->option_text("table|csv [table]");
  cmd->add_option("--out", out.path, "write output to this file instead of stdout");
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::vector<double> split_reals(const std::vector<std::string>& items) {
  std::vector<double> out;
  try {
    for (const auto& item : items) {
      for (double v : parse_real_list(item)) out.push_back(v);
    }
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// table1
// ---------------------------------------------------------------------------

struct Table1Args {
  std::uint32_t n = 100;
  double epsilon = 0.10;
  std::vector<std::string> loss{"0.1,0.2,0.5,1,2,5,10,20,50"};
  std::uint32_t max_round = 9;
  Output out;
};

int cmd_table1(const Table1Args& a) {
  std::vector<double> rates;
  for (double percent : split_reals(a.loss)) rates.push_back(percent / 100.0);
  const auto rows = compute_table1(rates, a.n, a.epsilon, a.max_round);
  if (a.out.format == Format::csv) {
    std::ostringstream os;
    write_table1_csv(os, rows);
    a.out.emit(os.str());
  } else {
    a.out.emit(render_table1(rows));
  }
  int status = 0;
  for (const auto& row : rows) {
    if (row.dist) continue;
    std::cerr << "loss " << row.loss_rate * 100 << "% " << to_string(row.scheme) << ": " << row.error << '\n';
    if (row.numerical_failure) status = kExitNumerical;
  }
  return status;
}

// ---------------------------------------------------------------------------
// trajectory
// ---------------------------------------------------------------------------

struct TrajectoryArgs {
  std::uint32_t n = 100;
  std::optional<std::uint32_t> k;
  double epsilon = 0.10;
  std::vector<std::string> rounds;
  Output out;
};

std::string round_text(const std::optional<std::uint32_t>& r) { return r ? std::to_string(*r) : "undelivered"; }

int cmd_trajectory(const TrajectoryArgs& a) {
  const std::vector<double> fractions = split_reals(a.rounds);
  RoundTrace trace;
  try {
    trace = loss_product_trajectory(a.n, fractions);
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  const std::uint32_t k = a.k ? *a.k : source_count_for_budget(a.n, a.epsilon);
  const BlockSpec spec = BlockSpec::from_budget(a.n, k);
  const auto fluid_round = fluid_delivery_round(trace, a.epsilon);
  const auto exact_round = fluid_delivery_round(trace, a.epsilon, spec.slack_fraction());
  const auto arq_round = arq_delivery_round(trace);

  std::ostringstream os;
  if (a.out.format == Format::csv) {
    write_trace_csv(os, trace, spec.s);
    a.out.emit(os.str());
    std::cerr << "FLUID delivery round: " << round_text(fluid_round) << "\nARQ delivery round: "
              << round_text(arq_round) << '\n';
    return 0;
  }
  os << "N = " << a.n << ", K = " << k << ", S = " << spec.s << ", epsilon = " << a.epsilon << "\n\n";
  os << "round        f_r       pi_r          L_r\n";
  os << "    0          -   " << fixed(1.0, 6) << "   " << fixed(a.n, 6) << '\n';
  for (std::size_t r = 1; r <= trace.rounds(); ++r) {
    char line[128];
    std::snprintf(line, sizeof line, "%5zu   %8.6f   %8.6f   %10.6f\n", r, trace.fractions[r - 1], trace.product(r),
                  trace.loss(r));
    os << line;
  }
  os << "\nFLUID delivery round: " << round_text(fluid_round) << " (pi <= " << a.epsilon << ")\n";
  os << "FLUID delivery round with exact slack S/N = " << spec.slack_fraction() << ": " << round_text(exact_round)
     << '\n';
  os << "ARQ delivery round: " << round_text(arq_round) << '\n';
  a.out.emit(os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// simulate / compare
// ---------------------------------------------------------------------------

struct SimArgs {
  std::string scenario_file;
  std::optional<std::uint32_t> n;
  std::optional<std::uint32_t> k;
  std::optional<double> epsilon;
  std::string loss;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> rtt;
  std::optional<double> tx_interval;
  std::string mode;
  std::string protocol;
  bool extend_to_budget = false;
  std::uint32_t max_round = 30;
  unsigned threads = 0;
  std::string per_trial;
  Output out;
};

ScenarioFile build_scenario(const SimArgs& a) {
  ScenarioFile f;
  if (!a.scenario_file.empty()) f = load_scenario(a.scenario_file);
  Scenario& s = f.scenario;
  try {
    if (a.n || a.k || a.epsilon) s.spec = resolve_block_spec(a.n, a.k, a.epsilon);
    if (!a.loss.empty()) s.loss = parse_loss_model(a.loss);
    if (a.seed) s.seed = *a.seed;
    if (a.rtt) s.rtt = *a.rtt;
    if (a.tx_interval) s.packet_tx_interval = *a.tx_interval;
    if (a.extend_to_budget) s.extend_to_budget = true;
    if (a.mode == "realistic") s.mode = SimMode::realistic;
    if (a.mode == "comparison") s.mode = SimMode::comparison;
    if (a.trials) f.trials = *a.trials;
    if (a.protocol == "fluid") f.protocol = ProtocolChoice::fluid;
    if (a.protocol == "arq") f.protocol = ProtocolChoice::arq;
    if (a.protocol == "both") f.protocol = ProtocolChoice::both;
    validate(s, f.protocol == ProtocolChoice::fluid || !f.protocol ? Protocol::fluid : Protocol::arq);
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  if (f.trials && *f.trials == 0) throw UsageError("trials must be at least 1");
  return f;
}

std::optional<DeliveryDistribution> exact_overlay(const Scenario& s, Protocol protocol, std::uint32_t max_round) {
  const auto* b = std::get_if<BernoulliLoss>(&s.loss);
  if (b == nullptr || s.mode != SimMode::comparison) return std::nullopt;
  return round_distribution(s.spec.n, protocol == Protocol::fluid ? s.spec.k : s.spec.n, b->p, max_round);
}

void summarize_text(std::ostream& os, const EmpiricalDistribution& d, const std::optional<DeliveryDistribution>& exact) {
  const char* name = to_string(d.protocol);
  const std::uint64_t n = d.trials();
  os << name << ": " << n << " trials, " << (n - d.undelivered) << " delivered, " << d.undelivered
     << " undelivered\n";
  std::uint32_t rounds = d.max_round();
  for (std::uint32_t r = 1; r <= rounds; ++r) {
    os << name << " round " << r << ": " << d.round_counts[r - 1] << '/' << n << " (" << fixed(100 * d.frequency(r), 2)
       << "%";
    if (exact) os << ", exact " << fixed(100 * (r <= exact->max_round() ? exact->at(r) : 0.0), 2) << "%";
    os << ")\n";
  }
  if (n - d.undelivered > 0) {
    os << name << " mean round " << fixed(d.mean_round(), 4) << ", p99 round " << d.percentile_round(0.99)
       << ", mean latency " << fixed(d.mean_latency(), 4) << ", p99 latency " << fixed(d.percentile_latency(0.99), 4)
       << ", mean transmissions " << fixed(d.mean_transmissions(), 2) << '\n';
  }
}

std::string single_line(const TrialOutcome& o, Protocol p) {
  std::ostringstream os;
  os << to_string(p) << ' ';
  if (o.delivered) {
    os << "delivered round " << o.delivery_round << " time " << format_real(o.delivery_time);
  } else {
    os << "undelivered";
  }
  os << " transmissions " << o.transmissions << " received " << o.received << '\n';
  return os.str();
}

void write_per_trial(const std::string& path, const std::vector<const EmpiricalDistribution*>& runs) {
  Output file{Format::csv, path};
  std::ostringstream os;
  write_trials_csv(os, runs);
  file.emit(os.str());
}

int cmd_simulate(const SimArgs& a, bool compare) {
  ScenarioFile f = build_scenario(a);
  const Scenario& s = f.scenario;
  const std::uint64_t trials = f.trials.value_or(compare ? 10000 : 1000);
  const ProtocolChoice choice = compare ? ProtocolChoice::both : f.protocol.value_or(ProtocolChoice::fluid);

  std::vector<EmpiricalDistribution> runs;
  std::optional<PairedSummary> paired;
  if (choice == ProtocolChoice::both) {
    try {
      validate(s, Protocol::arq);
    } catch (const InvalidParameter& e) {
      throw UsageError(e.what());
    }
    paired = monte_carlo_pairs(s, trials, a.threads);
    runs.push_back(paired->fluid);
    runs.push_back(paired->arq);
  } else {
    runs.push_back(monte_carlo(s, choice == ProtocolChoice::fluid ? Protocol::fluid : Protocol::arq, trials, a.threads));
  }

  std::vector<const EmpiricalDistribution*> ptrs;
  for (const auto& r : runs) ptrs.push_back(&r);
  if (!a.per_trial.empty()) write_per_trial(a.per_trial, ptrs);

  std::ostringstream os;
  if (a.out.format == Format::csv) {
    bool header = true;
    for (const auto& r : runs) {
      write_empirical_csv(os, r, exact_overlay(s, r.protocol, a.max_round), header);
      header = false;
    }
    a.out.emit(os.str());
    return 0;
  }

  if (trials == 1 && !paired) {
    a.out.emit(single_line(runs[0].outcomes[0], runs[0].protocol));
    return 0;
  }
  os << "scenario: N = " << s.spec.n << ", K = " << s.spec.k << ", loss " << format_loss_model(s.loss) << ", rtt "
     << s.rtt << ", tx_interval " << s.packet_tx_interval << ", seed " << s.seed
     << (s.extend_to_budget ? ", extend_to_budget" : "")
     << (s.mode == SimMode::realistic ? ", realistic feedback" : "") << "\n";
  for (const auto& r : runs) summarize_text(os, r, exact_overlay(s, r.protocol, a.max_round));
  if (paired) {
    os << "paired: transmission mismatches: " << paired->transmission_mismatches
       << ", dominance violations: " << paired->dominance_violations << '\n';
  }
  a.out.emit(os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsArgs {
  std::uint32_t k = 90;
  double epsilon = 0.10;
  double rtt = 50.0;
  double tx_interval = 0.01;
  std::uint32_t max_round = 5;
  Output out;
};

int cmd_bounds(const BoundsArgs& a) {
  BlockSpec spec;
  try {
    spec = BlockSpec::from_epsilon(a.k, a.epsilon);
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  const auto eff = efficiency_bound(a.k, a.epsilon);
  const auto cost = cost_ratio(a.k, a.epsilon);
  const double t = spec.n * a.tx_interval;

  std::ostringstream os;
  if (a.out.format == Format::csv) {
    os << "quantity,value,bound\n";
    os << "N," << spec.n << ",\n";
    os << "S," << spec.s << ',' << format_real(a.epsilon * spec.n) << '\n';
    os << "efficiency," << format_real(eff.actual) << ',' << format_real(eff.bound) << '\n';
    os << "cost_ratio," << format_real(cost.actual) << ',' << format_real(cost.bound) << '\n';
    for (std::uint32_t l = 1; l <= a.max_round; ++l) {
      const auto lb = latency_bounds(t, a.rtt, l, spec.k, spec.n);
      os << "latency_round_" << l << ',' << format_real(lb.lower) << ',' << format_real(lb.upper) << '\n';
    }
    a.out.emit(os.str());
    return 0;
  }
  os << "K = " << spec.k << ", epsilon = " << a.epsilon << ", lambda = " << spec.lambda << '\n';
  os << "N = " << spec.n << ", S = " << spec.s << " (S >= eps N = " << a.epsilon * spec.n << ")\n";
  os << "efficiency K/N = " << fixed(eff.actual, 6) << " >= (1 - eps) K / (K + 1) = " << fixed(eff.bound, 6) << '\n';
  os << "cost ratio N/K = " << fixed(cost.actual, 6) << " <= 1 / (1 - eps) + 1 / K = " << fixed(cost.bound, 6) << '\n';
  os << "latency with T = " << t << ", RTT = " << a.rtt << ":\n";
  for (std::uint32_t l = 1; l <= a.max_round; ++l) {
    const auto lb = latency_bounds(t, a.rtt, l, spec.k, spec.n);
    os << "  round " << l << ": " << lb.lower << " <= delivery time <= " << lb.upper << '\n';
  }
  a.out.emit(os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FLUID and ARQ block-delivery laboratory"};
  app.require_subcommand(1);

  Table1Args t1;
  auto* table1 = app.add_subcommand("table1", "delivery-round distribution table under independent loss");
  table1->add_option("--n", t1.n, "block budget N")->capture_default_str();
  table1->add_option("--epsilon", t1.epsilon, "slack parameter")->capture_default_str();
  table1->add_option("--loss", t1.loss, "loss rates in percent, comma separated")->capture_default_str();
  table1->add_option("--max-round", t1.max_round, "last round shown separately")->capture_default_str();
  add_output_options(table1, t1.out);

  TrajectoryArgs tr;
  auto* trajectory = app.add_subcommand("trajectory", "loss-product trajectory for given per-round loss fractions");
  trajectory->add_option("--n", tr.n, "block budget N")->capture_default_str();
  trajectory->add_option("--k", tr.k, "source packets K (default: largest that fits N at epsilon)");
  trajectory->add_option("--epsilon", tr.epsilon, "slack parameter")->capture_default_str();
  trajectory->add_option("--rounds", tr.rounds, "loss fractions f_1,f_2,...")->required();
  add_output_options(trajectory, tr.out);

  SimArgs sim;
  const auto add_sim_options = [&sim](CLI::App* cmd, bool with_protocol) {
    cmd->add_option("scenario", sim.scenario_file, "scenario file (key = value lines)");
    cmd->add_option("--n", sim.n, "block budget N");
    cmd->add_option("--k", sim.k, "source packets K");
    cmd->add_option("--epsilon", sim.epsilon, "slack parameter");
    cmd->add_option("--loss", sim.loss, "loss model: bernoulli:p | rounds:f1,f2 | ge:pg,pb,g2b,b2g");
    cmd->add_option("--trials", sim.trials, "number of seeded trials");
    cmd->add_option("--seed", sim.seed, "experiment seed");
    cmd->add_option("--rtt", sim.rtt, "round-trip time");
    cmd->add_option("--tx-interval", sim.tx_interval, "spacing of round-1 packets");
    cmd->add_option("--mode", sim.mode, "comparison or realistic")->check(CLI::IsMember({"comparison", "realistic"}));
    cmd->add_flag("--extend-to-budget", sim.extend_to_budget, "keep sending until N packets are received");
    cmd->add_option("--max-round", sim.max_round, "rounds in the exact overlay")->capture_default_str();
    cmd->add_option("--threads", sim.threads, "worker threads, 0 = all cores");
    cmd->add_option("--per-trial", sim.per_trial, "also write per-trial CSV to this file");
    if (with_protocol) {
      cmd->add_option("--protocol", sim.protocol, "fluid, arq or both")->check(CLI::IsMember({"fluid", "arq", "both"}));
    }
    add_output_options(cmd, sim.out);
  };
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo simulation of one scenario");
  add_sim_options(simulate, true);
  auto* compare = app.add_subcommand("compare", "aligned FLUID/ARQ runs over the same loss realizations");
  add_sim_options(compare, false);

  BoundsArgs bd;
  auto* bounds = app.add_subcommand("bounds", "budget, efficiency, cost and latency bounds");
  bounds->add_option("--k", bd.k, "source packets K")->capture_default_str();
  bounds->add_option("--epsilon", bd.epsilon, "slack parameter")->capture_default_str();
  bounds->add_option("--rtt", bd.rtt, "round-trip time")->capture_default_str();
  bounds->add_option("--tx-interval", bd.tx_interval, "spacing of round-1 packets")->capture_default_str();
  bounds->add_option("--max-round", bd.max_round, "rounds to tabulate")->capture_default_str();
  add_output_options(bounds, bd.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*table1) return cmd_table1(t1);
    if (*trajectory) return cmd_trajectory(tr);
    if (*simulate) return cmd_simulate(sim, false);
    if (*compare) return cmd_simulate(sim, true);
    if (*bounds) return cmd_bounds(bd);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
