#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <queue>
#include <thread>
#include <utility>
#include <vector>

#include "fluid/codec.hpp"
#include "fluid/error.hpp"
#include "fluid/loss_model.hpp"
#include "fluid/params.hpp"
#include "fluid/protocol.hpp"
#include "fluid/rng.hpp"

namespace fluid {

/// comparison: every loss is reported the moment it happens and reaches the sender
/// one RTT later. realistic: the receiver reports counts on a fixed interval and
/// losses only show up as gaps below the highest received sequence number.
enum class SimMode { comparison, realistic };

/// Everything needed to replay one block delivery. Times are in arbitrary units.
struct Scenario {
  BlockSpec spec = BlockSpec::from_epsilon(90, 0.10);
  LossModel loss = BernoulliLoss{0.0};
  double rtt = 50.0;
  /// Round-1 packet i (1-based) goes out at i * packet_tx_interval, so T = N * interval.
  double packet_tx_interval = 0.01;
  std::uint64_t seed = 1;
  SimMode mode = SimMode::comparison;
  bool extend_to_budget = false;
  /// Block timer measured from the first transmission; default T + 10 RTT.
  std::optional<double> block_timer;
  /// Realistic-mode report period; default RTT / 4.
  std::optional<double> feedback_interval;
  /// Hard stop on transmissions for one block; 0 means 1000 N.
  std::uint32_t max_transmissions = 0;

  double round1_time() const noexcept { return spec.n * packet_tx_interval; }
  double first_transmission_time() const noexcept { return packet_tx_interval; }
  double timer_length() const noexcept { return block_timer.value_or(round1_time() + 10.0 * rtt); }
  double report_period() const noexcept { return feedback_interval.value_or(rtt / 4.0); }
  std::uint32_t transmission_cap() const noexcept {
    return max_transmissions != 0 ? max_transmissions : 1000U * spec.n;
  }
};

inline void validate(const Scenario& s, Protocol protocol = Protocol::fluid) {
  if (s.spec.k < 1 || s.spec.n < s.spec.k) throw InvalidParameter("scenario needs 1 <= K <= N");
  if (!(s.rtt >= 0.0) || !std::isfinite(s.rtt)) throw InvalidParameter("rtt must be finite and >= 0");
  if (!(s.packet_tx_interval >= 0.0) || !std::isfinite(s.packet_tx_interval)) {
    throw InvalidParameter("packet_tx_interval must be finite and >= 0");
  }
  if (s.block_timer && !(*s.block_timer >= 0.0)) throw InvalidParameter("block_timer must be >= 0");
  validate(s.loss);
  if (s.mode == SimMode::realistic) {
    if (!(s.report_period() > 0.0)) throw InvalidParameter("realistic mode needs a positive feedback interval");
    if (protocol == Protocol::arq) throw InvalidParameter("ARQ is only modelled in comparison mode");
  }
}

struct RoundStats {
  std::uint32_t sent = 0;
  std::uint32_t lost = 0;
  std::uint32_t received = 0;
  /// f_r = lost / sent.
  double fraction = 0.0;
  /// pi_r = f_1 ... f_r.
  double product = 0.0;

  friend bool operator==(const RoundStats&, const RoundStats&) = default;
};

struct BlockResult {
  Protocol protocol = Protocol::fluid;
  /// Packets the receiver needed: K for FLUID, N for ARQ, the count at decode for a real decoder.
  std::uint32_t threshold = 0;
  bool delivered = false;
  /// Causal delivery round: the least l such that at least `threshold` received
  /// packets belong to rounds 1..l.
  std::optional<std::uint32_t> delivery_round;
  std::optional<double> delivery_time;
  std::uint32_t transmissions_total = 0;
  std::uint32_t received_total = 0;
  bool timed_out = false;
  double end_time = 0.0;
  std::vector<RoundStats> round_trace;

  friend bool operator==(const BlockResult&, const BlockResult&) = default;
};

struct CodedBlockResult {
  BlockResult result;
  std::optional<SourceBlock> decoded;
};

namespace detail {

class BlockSimulation {
 public:
  BlockSimulation(const Scenario& scenario, Protocol protocol, const SourceBlock* payload, CodecMode codec_mode)
      : sc_(scenario),
        protocol_(protocol),
        payload_(payload),
        codec_mode_(codec_mode),
        loss_(scenario.loss, scenario.seed, scenario.spec.n) {
    validate(scenario, protocol);
    SenderOptions opts;
    opts.extend_to_budget = scenario.extend_to_budget;
    opts.block_timer_deadline = scenario.first_transmission_time() + scenario.timer_length();
    sender_ = make_sender(scenario.spec, protocol, opts);
    if (payload_ != nullptr) {
      if (protocol != Protocol::fluid) throw InvalidParameter("payload delivery is simulated for FLUID only");
      validate(*payload_);
      if (payload_->k() != scenario.spec.k || payload_->block_id != scenario.spec.block_id) {
        throw InvalidParameter("payload block does not match the scenario's block spec");
      }
      receiver_ = make_coded_receiver(scenario.spec, payload_->symbol_size(), codec_mode_);
    } else {
      receiver_ = make_receiver(scenario.spec, protocol);
    }
  }

  BlockResult run() {
    const double first = sc_.first_transmission_time();
    push(first, Kind::initial, {});
    push(sender_.block_timer_deadline(), Kind::timer, {});
    if (sc_.mode == SimMode::realistic) push(first + sc_.report_period(), Kind::report_tick, {});

    while (!queue_.empty() && !sender_.terminated) {
      const Event e = queue_.top();
      queue_.pop();
      now_ = e.time;
      switch (e.kind) {
        case Kind::initial:
          if (auto tx = sender_next_initial(sender_)) {
            transmit(*tx);
            if (sender_.initial_sent < sc_.spec.n) {
              push(static_cast<double>(sender_.initial_sent + 1) * sc_.packet_tx_interval, Kind::initial, {});
            }
          }
          break;
        case Kind::feedback:
          for (const auto& action : sender_apply_feedback(sender_, e.report)) {
            if (const auto* tx = std::get_if<TransmitAction>(&action)) transmit(*tx);
            if (sender_.terminated) break;
          }
          break;
        case Kind::report_tick: {
          const FeedbackReport report = receiver_report(receiver_, now_);
          if (!last_tick_report_ || report.received_count != last_tick_report_->received_count ||
              report.highest_seq != last_tick_report_->highest_seq || report.recovered != last_tick_report_->recovered) {
            last_tick_report_ = report;
            push(now_ + sc_.rtt, Kind::feedback, report);
          }
          push(now_ + sc_.report_period(), Kind::report_tick, {});
          break;
        }
        case Kind::timer:
          if (sender_apply_timer(sender_, now_)) timed_out_ = true;
          break;
      }
    }
    return finish();
  }

  std::optional<SourceBlock> decoded() const {
    return receiver_.decoder ? receiver_.decoder->decoded() : std::nullopt;
  }

 private:
  // Ties at equal times: scheduling order, which is seq_no order for packets and
  // their feedback; the block timer goes last.
  enum class Kind : std::uint8_t { initial, feedback, report_tick, timer };

  struct Event {
    double time;
    std::uint64_t order;
    Kind kind;
    FeedbackReport report;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      const bool at = a.kind == Kind::timer;
      const bool bt = b.kind == Kind::timer;
      if (at != bt) return at;
      return a.order > b.order;
    }
  };

  void push(double time, Kind kind, const FeedbackReport& report) {
    queue_.push(Event{time, next_order_++, kind, report});
  }

  void transmit(const TransmitAction& tx) {
    if (transmissions_ >= sc_.transmission_cap()) {
      sender_.terminated = true;
      timed_out_ = true;
      return;
    }
    ++transmissions_;
    if (rounds_.size() < tx.round) rounds_.resize(tx.round);
    RoundStats& round = rounds_[tx.round - 1];
    const std::uint32_t index = round.sent++;

    if (loss_.lost(tx.seq_no, tx.round, index)) {
      ++round.lost;
      if (sc_.mode == SimMode::comparison) {
        push(now_ + sc_.rtt, Kind::feedback, receiver_apply_loss(receiver_, tx.seq_no, now_));
      }
      return;
    }

    ++round.received;
    ++received_;
    const bool was_recovered = receiver_.recovered;
    std::optional<EncodedSymbol> symbol;
    if (payload_ != nullptr) symbol = encode(*payload_, tx.seq_no, codec_mode_);
    const FeedbackReport report =
        receiver_apply_packet(receiver_, tx.seq_no, tx.position, now_, symbol ? &*symbol : nullptr);
    if (!was_recovered && receiver_.recovered) {
      delivery_time_ = now_;
      received_at_recovery_ = receiver_.received_count;
    }
    if (sc_.mode == SimMode::comparison) push(now_ + sc_.rtt, Kind::feedback, report);
  }

  BlockResult finish() {
    BlockResult r;
    r.protocol = protocol_;
    r.threshold = payload_ != nullptr ? received_at_recovery_
                                      : (protocol_ == Protocol::arq ? sc_.spec.n : sc_.spec.k);
    r.delivered = receiver_.recovered;
    r.delivery_time = delivery_time_;
    r.transmissions_total = transmissions_;
    r.received_total = received_;
    r.timed_out = timed_out_ && !r.delivered;
    r.end_time = now_;

    double product = 1.0;
    for (auto& round : rounds_) {
      round.fraction = round.sent == 0 ? 0.0 : static_cast<double>(round.lost) / round.sent;
      product *= round.fraction;
      round.product = product;
    }
    if (r.delivered) {
      std::uint32_t cumulative = 0;
      for (std::size_t i = 0; i < rounds_.size(); ++i) {
        cumulative += rounds_[i].received;
        if (cumulative >= r.threshold) {
          r.delivery_round = static_cast<std::uint32_t>(i + 1);
          break;
        }
      }
    }
    r.round_trace = std::move(rounds_);
    return r;
  }

  const Scenario& sc_;
  Protocol protocol_;
  const SourceBlock* payload_;
  CodecMode codec_mode_;
  LossRealization loss_;
  SenderState sender_;
  ReceiverState receiver_;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_order_ = 0;
  double now_ = 0.0;
  std::vector<RoundStats> rounds_;
  std::uint32_t transmissions_ = 0;
  std::uint32_t received_ = 0;
  std::uint32_t received_at_recovery_ = 0;
  std::optional<double> delivery_time_;
  std::optional<FeedbackReport> last_tick_report_;
  bool timed_out_ = false;
};

}  // namespace detail

/// Simulates one block under `scenario`. Identical scenarios give identical results.
inline BlockResult run_block(const Scenario& scenario, Protocol protocol) {
  return detail::BlockSimulation(scenario, protocol, nullptr, CodecMode::systematic).run();
}

/// FLUID delivery of real data through the GF(256) codec; recovery means decoder rank K.
inline CodedBlockResult run_block_coded(const Scenario& scenario, const SourceBlock& block,
                                        CodecMode mode = CodecMode::systematic) {
  detail::BlockSimulation sim(scenario, Protocol::fluid, &block, mode);
  CodedBlockResult out;
  out.result = sim.run();
  out.decoded = sim.decoded();
  return out;
}

struct AlignedPair {
  BlockResult fluid;
  BlockResult arq;
};

/// FLUID and ARQ driven by the same loss realization: transmission event i is lost
/// in one run iff it is lost in the other.
inline AlignedPair run_aligned_pair(const Scenario& scenario) {
  return {run_block(scenario, Protocol::fluid), run_block(scenario, Protocol::arq)};
}

/// Delivery succeeded within the latency bounds:
/// threshold * packet_tx_interval <= delivery_time <= T + l * RTT.
inline bool latency_check(const BlockResult& result, const Scenario& scenario) {
  if (!result.delivered || !result.delivery_time || !result.delivery_round) {
    throw InvalidParameter("latency_check needs a delivered block");
  }
  const double lower = result.threshold * scenario.packet_tx_interval;
  const double upper = scenario.round1_time() + *result.delivery_round * scenario.rtt;
  return lower <= *result.delivery_time && *result.delivery_time <= upper;
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Seed of trial `index` of an experiment seeded with `seed`.
constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) noexcept { return split(seed, index); }

struct TrialOutcome {
  bool delivered = false;
  std::uint32_t delivery_round = 0;  // 0 when not delivered
  double delivery_time = 0.0;
  std::uint32_t transmissions = 0;
  std::uint32_t received = 0;

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

inline TrialOutcome summarize(const BlockResult& r) {
  return {r.delivered, r.delivery_round.value_or(0), r.delivery_time.value_or(0.0), r.transmissions_total,
          r.received_total};
}

struct EmpiricalDistribution {
  Protocol protocol = Protocol::fluid;
  std::vector<TrialOutcome> outcomes;
  /// Index 0 is round 1.
  std::vector<std::uint64_t> round_counts;
  std::uint64_t undelivered = 0;

  std::uint64_t trials() const noexcept { return outcomes.size(); }
  std::uint32_t max_round() const noexcept { return static_cast<std::uint32_t>(round_counts.size()); }

  double frequency(std::uint32_t round) const {
    if (round == 0 || round > round_counts.size() || outcomes.empty()) return 0.0;
    return static_cast<double>(round_counts[round - 1]) / outcomes.size();
  }
  double undelivered_frequency() const {
    return outcomes.empty() ? 0.0 : static_cast<double>(undelivered) / outcomes.size();
  }
  /// Fraction of trials delivered after `round` (not delivered counts as later).
  double frequency_after(std::uint32_t round) const {
    std::uint64_t later = undelivered;
    for (std::size_t i = round; i < round_counts.size(); ++i) later += round_counts[i];
    return outcomes.empty() ? 0.0 : static_cast<double>(later) / outcomes.size();
  }

  double mean_round() const { return mean_of([](const TrialOutcome& o) { return double(o.delivery_round); }); }
  double mean_latency() const { return mean_of([](const TrialOutcome& o) { return o.delivery_time; }); }
  double mean_transmissions() const {
    if (outcomes.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& o : outcomes) sum += o.transmissions;
    return sum / outcomes.size();
  }

  /// Nearest-rank percentile over delivered trials, q in (0, 1].
  double percentile_round(double q) const {
    return percentile_of(q, [](const TrialOutcome& o) { return double(o.delivery_round); });
  }
  double percentile_latency(double q) const {
    return percentile_of(q, [](const TrialOutcome& o) { return o.delivery_time; });
  }

 private:
  template <typename F>
  double mean_of(F f) const {
    double sum = 0.0;
    std::uint64_t count = 0;
    for (const auto& o : outcomes) {
      if (!o.delivered) continue;
      sum += f(o);
      ++count;
    }
    return count == 0 ? 0.0 : sum / count;
  }

  template <typename F>
  double percentile_of(double q, F f) const {
    std::vector<double> values;
    for (const auto& o : outcomes) {
      if (o.delivered) values.push_back(f(o));
    }
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * values.size()));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
  }
};

inline EmpiricalDistribution tally(Protocol protocol, std::vector<TrialOutcome> outcomes) {
  EmpiricalDistribution d;
  d.protocol = protocol;
  d.outcomes = std::move(outcomes);
  for (const auto& o : d.outcomes) {
    if (!o.delivered) {
      ++d.undelivered;
      continue;
    }
    if (d.round_counts.size() < o.delivery_round) d.round_counts.resize(o.delivery_round, 0);
    ++d.round_counts[o.delivery_round - 1];
  }
  return d;
}

namespace detail {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware).
/// Each index is handled exactly once, so results written per index do not depend
/// on the thread count.
template <typename Body>
void parallel_for(std::uint64_t count, unsigned threads, Body body) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(count, 1)));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::uint64_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Runs `trials` independent blocks; trial i uses seed trial_seed(scenario.seed, i).
inline EmpiricalDistribution monte_carlo(const Scenario& scenario, Protocol protocol, std::uint64_t trials,
                                         unsigned threads = 0) {
  if (trials < 1) throw InvalidParameter("monte_carlo needs at least one trial");
  validate(scenario, protocol);
  std::vector<TrialOutcome> outcomes(trials);
  detail::parallel_for(trials, threads, [&](std::uint64_t i) {
    Scenario s = scenario;
    s.seed = trial_seed(scenario.seed, i);
    outcomes[i] = summarize(run_block(s, protocol));
  });
  return tally(protocol, std::move(outcomes));
}

struct PairedSummary {
  EmpiricalDistribution fluid;
  EmpiricalDistribution arq;
  /// Trials where the two runs sent a different number of packets.
  std::uint64_t transmission_mismatches = 0;
  /// Trials where FLUID finished in a later round than ARQ (undelivered = never).
  std::uint64_t dominance_violations = 0;
};

/// Aligned FLUID/ARQ pairs over `trials` seeds derived as in monte_carlo.
inline PairedSummary monte_carlo_pairs(const Scenario& scenario, std::uint64_t trials, unsigned threads = 0) {
  if (trials < 1) throw InvalidParameter("monte_carlo needs at least one trial");
  validate(scenario, Protocol::arq);
  std::vector<TrialOutcome> fluid(trials);
  std::vector<TrialOutcome> arq(trials);
  detail::parallel_for(trials, threads, [&](std::uint64_t i) {
    Scenario s = scenario;
    s.seed = trial_seed(scenario.seed, i);
    const AlignedPair pair = run_aligned_pair(s);
    fluid[i] = summarize(pair.fluid);
    arq[i] = summarize(pair.arq);
  });
  PairedSummary out;
  for (std::uint64_t i = 0; i < trials; ++i) {
    if (fluid[i].transmissions != arq[i].transmissions) ++out.transmission_mismatches;
    const auto rank = [](const TrialOutcome& o) {
      return o.delivered ? static_cast<std::uint64_t>(o.delivery_round) : ~std::uint64_t{0};
    };
    if (rank(fluid[i]) > rank(arq[i])) ++out.dominance_violations;
  }
  out.fluid = tally(Protocol::fluid, std::move(fluid));
  out.arq = tally(Protocol::arq, std::move(arq));
  return out;
}

}  // namespace fluid
