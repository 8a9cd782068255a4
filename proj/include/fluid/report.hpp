#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fluid/analytics.hpp"
#include "fluid/error.hpp"
#include "fluid/loss_model.hpp"
#include "fluid/netsim.hpp"
#include "fluid/protocol.hpp"
#include "fluid/text.hpp"

namespace fluid {

// CSV layouts. Reals are written with 17 significant digits so every double reads
// back unchanged.
//
//   distribution:  n,m,p,round,probability        one row per round, then round=tail
//   trace:         round,f,pi,L,S                 round 0 carries pi=1, L=N, empty f
//   table1:        loss_rate,scheme,n,m,round_1..round_R,round_R+1_plus
//   trials:        trial,protocol,delivered,delivery_round,delivery_time,transmissions,received
//   empirical:     protocol,round,count,frequency,exact   last row round=undelivered
//   block trace:   round,sent,lost,received,f,pi

/// Percentage cell as printed in the round-distribution table: two decimals, "--"
/// where the value rounds to 0.00.
inline std::string format_percent_cell(double probability) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * probability);
  const std::string s = buf;
  if (s == "0.00" || s == "-0.00") return "--";
  return s;
}

// ---------------------------------------------------------------------------
// Delivery distributions
// ---------------------------------------------------------------------------

inline void write_distribution_csv(std::ostream& os, const std::vector<DeliveryDistribution>& dists,
                                   bool header = true) {
  if (header) os << "n,m,p,round,probability\n";
  for (const auto& d : dists) {
    const std::string prefix = std::to_string(d.n) + ',' + std::to_string(d.m) + ',' + format_real(d.p) + ',';
    for (std::uint32_t r = 1; r <= d.max_round(); ++r) os << prefix << r << ',' << format_real(d.at(r)) << '\n';
    os << prefix << "tail," << format_real(d.tail) << '\n';
  }
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  while (true) {
    const auto comma = line.find(',');
    cells.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return cells;
}

inline std::uint32_t parse_u32(std::string_view text) {
  std::uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace detail

/// Reads the layout written by write_distribution_csv.
inline std::vector<DeliveryDistribution> read_distribution_csv(std::string_view text) {
  std::vector<DeliveryDistribution> out;
  bool open = false;
  bool first = true;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "n,m,p,round,probability") continue;
    }
    const auto cells = detail::split_csv(line);
    if (cells.size() != 5) throw FormatError("distribution row needs 5 columns");
    const std::uint32_t n = detail::parse_u32(cells[0]);
    const std::uint32_t m = detail::parse_u32(cells[1]);
    double p = 0.0;
    double value = 0.0;
    try {
      p = detail::parse_double(cells[2]);
      value = detail::parse_double(cells[4]);
    } catch (const InvalidParameter& e) {
      throw FormatError(e.what());
    }
    if (!open) {
      out.push_back(DeliveryDistribution{n, m, p, {}, 0.0});
      open = true;
    }
    DeliveryDistribution& d = out.back();
    if (d.n != n || d.m != m || d.p != p) throw FormatError("distribution rows interleave");
    if (cells[3] == "tail") {
      d.tail = value;
      open = false;
      continue;
    }
    if (detail::parse_u32(cells[3]) != d.rounds.size() + 1) throw FormatError("rounds out of order");
    d.rounds.push_back(value);
  }
  if (open) throw FormatError("distribution without a tail row");
  return out;
}

// ---------------------------------------------------------------------------
// Round-distribution table
// ---------------------------------------------------------------------------

struct Table1Row {
  double loss_rate = 0.0;
  Protocol scheme = Protocol::fluid;
  std::optional<DeliveryDistribution> dist;
  std::string error;
  /// The row failed an internal consistency check rather than input validation.
  bool numerical_failure = false;
};

/// FLUID (M = K) and ARQ (M = N) delivery-round distributions for each loss rate.
/// A bad rate produces rows carrying an error instead of a distribution.
inline std::vector<Table1Row> compute_table1(const std::vector<double>& loss_rates, std::uint32_t n, double epsilon,
                                             std::uint32_t max_round) {
  const std::uint32_t k = source_count_for_budget(n, epsilon);
  std::vector<Table1Row> rows;
  for (double rate : loss_rates) {
    for (Protocol scheme : {Protocol::fluid, Protocol::arq}) {
      Table1Row row;
      row.loss_rate = rate;
      row.scheme = scheme;
      try {
        row.dist = round_distribution(n, scheme == Protocol::fluid ? k : n, rate, max_round);
      } catch (const NumericalError& e) {
        row.error = e.what();
        row.numerical_failure = true;
      } catch (const Error& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string format_loss_percent(double rate) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * rate << '%';
  return os.str();
}

/// The table as text: one row per (loss rate, scheme), percentages per round and an
/// aggregate column for every round past max_round.
inline std::string render_table1(const std::vector<Table1Row>& rows) {
  std::uint32_t max_round = 0;
  for (const auto& r : rows) {
    if (r.dist) max_round = std::max(max_round, r.dist->max_round());
  }
  std::ostringstream os;
  os << std::left << std::setw(8) << "% Loss" << std::setw(7) << "Scheme";
  for (std::uint32_t l = 1; l <= max_round; ++l) os << std::right << std::setw(8) << l;
  os << std::right << std::setw(8) << (std::to_string(max_round + 1) + "+") << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << format_loss_percent(r.loss_rate) << std::setw(7) << to_string(r.scheme);
    if (!r.dist) {
      os << "error: " << r.error << '\n';
      continue;
    }
    for (std::uint32_t l = 1; l <= max_round; ++l) {
      os << std::right << std::setw(8) << (l <= r.dist->max_round() ? format_percent_cell(r.dist->at(l)) : "--");
    }
    os << std::right << std::setw(8) << format_percent_cell(r.dist->tail) << '\n';
  }
  return os.str();
}

inline void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows) {
  std::uint32_t max_round = 0;
  for (const auto& r : rows) {
    if (r.dist) max_round = std::max(max_round, r.dist->max_round());
  }
  os << "loss_rate,scheme,n,m";
  for (std::uint32_t l = 1; l <= max_round; ++l) os << ",round_" << l;
  os << ",round_" << max_round + 1 << "_plus\n";
  for (const auto& r : rows) {
    if (!r.dist) continue;
    os << format_real(r.loss_rate) << ',' << to_string(r.scheme) << ',' << r.dist->n << ',' << r.dist->m;
    for (std::uint32_t l = 1; l <= max_round; ++l) os << ',' << format_real(r.dist->at(l));
    os << ',' << format_real(r.dist->tail) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Loss-product trajectories
// ---------------------------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const RoundTrace& trace, double slack_packets) {
  os << "round,f,pi,L,S\n";
  os << "0,," << format_real(1.0) << ',' << format_real(trace.n) << ',' << format_real(slack_packets) << '\n';
  for (std::size_t i = 0; i < trace.rounds(); ++i) {
    os << i + 1 << ',' << format_real(trace.fractions[i]) << ',' << format_real(trace.products[i]) << ','
       << format_real(trace.losses[i]) << ',' << format_real(slack_packets) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Simulation output
// ---------------------------------------------------------------------------

inline void write_trials_csv(std::ostream& os, const std::vector<const EmpiricalDistribution*>& runs) {
  os << "trial,protocol,delivered,delivery_round,delivery_time,transmissions,received\n";
  for (const auto* d : runs) {
    for (std::size_t i = 0; i < d->outcomes.size(); ++i) {
      const auto& o = d->outcomes[i];
      os << i << ',' << to_string(d->protocol) << ',' << (o.delivered ? 1 : 0) << ',' << o.delivery_round << ','
         << format_real(o.delivery_time) << ',' << o.transmissions << ',' << o.received << '\n';
    }
  }
}

/// Empirical per-round frequencies; `exact`, when given, is overlaid per round.
inline void write_empirical_csv(std::ostream& os, const EmpiricalDistribution& d,
                                const std::optional<DeliveryDistribution>& exact, bool header = true) {
  if (header) os << "protocol,round,count,frequency,exact\n";
  std::uint32_t rounds = d.max_round();
  if (exact) rounds = std::max(rounds, exact->max_round());
  for (std::uint32_t r = 1; r <= rounds; ++r) {
    const std::uint64_t count = r <= d.max_round() ? d.round_counts[r - 1] : 0;
    os << to_string(d.protocol) << ',' << r << ',' << count << ',' << format_real(d.frequency(r)) << ',';
    if (exact) os << format_real(r <= exact->max_round() ? exact->at(r) : 0.0);
    os << '\n';
  }
  os << to_string(d.protocol) << ",undelivered," << d.undelivered << ',' << format_real(d.undelivered_frequency())
     << ",\n";
}

inline void write_block_trace_csv(std::ostream& os, const BlockResult& r) {
  os << "round,sent,lost,received,f,pi\n";
  for (std::size_t i = 0; i < r.round_trace.size(); ++i) {
    const auto& s = r.round_trace[i];
    os << i + 1 << ',' << s.sent << ',' << s.lost << ',' << s.received << ',' << format_real(s.fraction) << ','
       << format_real(s.product) << '\n';
  }
}

}  // namespace fluid
