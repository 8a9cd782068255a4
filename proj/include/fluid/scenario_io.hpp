#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "fluid/error.hpp"
#include "fluid/loss_model.hpp"
#include "fluid/netsim.hpp"
#include "fluid/params.hpp"
#include "fluid/text.hpp"

namespace fluid {

// Scenario files are flat `key = value` text, one pair per line. Blank lines and
// lines starting with '#' are ignored. Recognised keys:
//
//   n, k, epsilon, lambda, block_id      block parameters (two of n/k/epsilon|lambda)
//   loss                                 bernoulli:p | rounds:f1,f2,... | ge:pg,pb,g2b,b2g
//   rtt, tx_interval                     time units
//   seed, mode (comparison|realistic), extend_to_budget (true|false)
//   block_timer, feedback_interval, max_transmissions
//   trials, protocol (fluid|arq|both)    experiment settings

enum class ProtocolChoice { fluid, arq, both };

struct ScenarioFile {
  Scenario scenario;
  std::optional<std::uint64_t> trials;
  std::optional<ProtocolChoice> protocol;
};

/// Block parameters from any consistent subset of N, K and epsilon.
/// (K, eps) -> N = budget; (N, eps) -> largest K that fits; (N, K) -> eps = S/N;
/// all three must agree. With only one given, the missing ones default to N = 100
/// and epsilon = 0.10.
inline BlockSpec resolve_block_spec(std::optional<std::uint32_t> n, std::optional<std::uint32_t> k,
                                    std::optional<double> epsilon, std::uint64_t block_id = 0) {
  if (n && k && epsilon) {
    BlockSpec b = BlockSpec::from_epsilon(*k, *epsilon, block_id);
    if (b.n != *n) {
      throw InvalidParameter("N = " + std::to_string(*n) + " disagrees with K and epsilon (budget " +
                             std::to_string(b.n) + ")");
    }
    return b;
  }
  if (n && k) return BlockSpec::from_budget(*n, *k, block_id);
  if (k) return BlockSpec::from_epsilon(*k, epsilon.value_or(0.10), block_id);
  const std::uint32_t budget = n.value_or(100);
  const double eps = epsilon.value_or(0.10);
  return BlockSpec::from_epsilon(source_count_for_budget(budget, eps), eps, block_id);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_unsigned(std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidParameter("not a non-negative integer: '" + std::string(text) + "'");
  }
  return value;
}

inline double parse_non_negative(std::string_view text) {
  const double v = parse_double(text);
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter("expected a finite value >= 0");
  return v;
}

inline bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidParameter("not a boolean: '" + std::string(text) + "'");
}

}  // namespace detail

inline ScenarioFile parse_scenario(std::string_view text) {
  ScenarioFile out;
  std::map<std::string, std::size_t> seen;
  std::optional<std::uint32_t> n;
  std::optional<std::uint32_t> k;
  std::optional<double> epsilon;
  std::uint64_t block_id = 0;
  std::size_t block_line = 0;

  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);

    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ScenarioError(line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ScenarioError(line_no, "missing key");
    if (value.empty()) throw ScenarioError(line_no, "missing value for '" + key + "'");
    if (!seen.emplace(key, line_no).second) throw ScenarioError(line_no, "duplicate key '" + key + "'");

    Scenario& s = out.scenario;
    try {
      if (key == "n") {
        n = detail::parse_unsigned<std::uint32_t>(value);
        block_line = line_no;
      } else if (key == "k") {
        k = detail::parse_unsigned<std::uint32_t>(value);
        block_line = line_no;
      } else if (key == "epsilon") {
        if (seen.count("lambda")) throw InvalidParameter("give epsilon or lambda, not both");
        epsilon = detail::parse_double(value);
        block_line = line_no;
      } else if (key == "lambda") {
        if (seen.count("epsilon")) throw InvalidParameter("give epsilon or lambda, not both");
        epsilon = epsilon_from_lambda(detail::parse_double(value));
        block_line = line_no;
      } else if (key == "block_id") {
        block_id = detail::parse_unsigned<std::uint64_t>(value);
      } else if (key == "loss") {
        s.loss = parse_loss_model(value);
      } else if (key == "rtt") {
        s.rtt = detail::parse_non_negative(value);
      } else if (key == "tx_interval") {
        s.packet_tx_interval = detail::parse_non_negative(value);
      } else if (key == "seed") {
        s.seed = detail::parse_unsigned<std::uint64_t>(value);
      } else if (key == "mode") {
        if (value == "comparison") {
          s.mode = SimMode::comparison;
        } else if (value == "realistic") {
          s.mode = SimMode::realistic;
        } else {
          throw InvalidParameter("mode must be comparison or realistic");
        }
      } else if (key == "extend_to_budget") {
        s.extend_to_budget = detail::parse_bool(value);
      } else if (key == "block_timer") {
        s.block_timer = detail::parse_non_negative(value);
      } else if (key == "feedback_interval") {
        s.feedback_interval = detail::parse_non_negative(value);
      } else if (key == "max_transmissions") {
        s.max_transmissions = detail::parse_unsigned<std::uint32_t>(value);
      } else if (key == "trials") {
        out.trials = detail::parse_unsigned<std::uint64_t>(value);
      } else if (key == "protocol") {
        if (value == "fluid") {
          out.protocol = ProtocolChoice::fluid;
        } else if (value == "arq") {
          out.protocol = ProtocolChoice::arq;
        } else if (value == "both") {
          out.protocol = ProtocolChoice::both;
        } else {
          throw InvalidParameter("protocol must be fluid, arq or both");
        }
      } else {
        throw InvalidParameter("unknown key '" + key + "'");
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      throw ScenarioError(line_no, e.what());
    }
  }

  try {
    out.scenario.spec = resolve_block_spec(n, k, epsilon, block_id);
    validate(out.scenario);
  } catch (const Error& e) {
    throw ScenarioError(block_line, e.what());
  }
  return out;
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

/// Writes every field explicitly; parse_scenario(format_scenario(f)) reproduces f.
inline std::string format_scenario(const ScenarioFile& f) {
  const Scenario& s = f.scenario;
  std::ostringstream os;
  os << "n = " << s.spec.n << '\n'
     << "k = " << s.spec.k << '\n'
     << "epsilon = " << format_real(s.spec.epsilon) << '\n'
     << "block_id = " << s.spec.block_id << '\n'
     << "loss = " << format_loss_model(s.loss) << '\n'
     << "rtt = " << format_real(s.rtt) << '\n'
     << "tx_interval = " << format_real(s.packet_tx_interval) << '\n'
     << "seed = " << s.seed << '\n'
     << "mode = " << (s.mode == SimMode::comparison ? "comparison" : "realistic") << '\n'
     << "extend_to_budget = " << (s.extend_to_budget ? "true" : "false") << '\n';
  if (s.block_timer) os << "block_timer = " << format_real(*s.block_timer) << '\n';
  if (s.feedback_interval) os << "feedback_interval = " << format_real(*s.feedback_interval) << '\n';
  if (s.max_transmissions != 0) os << "max_transmissions = " << s.max_transmissions << '\n';
  if (f.trials) os << "trials = " << *f.trials << '\n';
  if (f.protocol) {
    os << "protocol = "
       << (*f.protocol == ProtocolChoice::fluid ? "fluid" : *f.protocol == ProtocolChoice::arq ? "arq" : "both")
       << '\n';
  }
  return os.str();
}

}  // namespace fluid
