#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fluid/codec.hpp"
#include "fluid/error.hpp"
#include "fluid/params.hpp"

namespace fluid {

enum class Protocol { fluid, arq };

inline const char* to_string(Protocol p) noexcept { return p == Protocol::fluid ? "FLUID" : "ARQ"; }

/// Receiver to sender report. Count based: no packet identities are carried.
struct FeedbackReport {
  std::uint64_t block_id = 0;
  std::uint32_t received_count = 0;
  /// Highest sequence number accounted for by the receiver, 0 before anything arrives.
  std::uint32_t highest_seq = 0;
  bool recovered = false;
  double emit_time = 0.0;

  /// Losses implied by the report: packets up to highest_seq that were not received.
  std::uint32_t implied_losses() const noexcept { return highest_seq - received_count; }

  friend bool operator==(const FeedbackReport&, const FeedbackReport&) = default;
};

/// Send one packet. `position` is the round-1 slot the packet descends from; for ARQ
/// it is the source packet being (re)transmitted, for FLUID it is bookkeeping only and
/// is 0 when feedback did not pin down which packet was lost.
struct TransmitAction {
  std::uint32_t seq_no = 0;
  std::uint32_t round = 1;
  std::uint32_t position = 0;

  friend bool operator==(const TransmitAction&, const TransmitAction&) = default;
};

struct StopAction {
  friend bool operator==(const StopAction&, const StopAction&) = default;
};

using SenderAction = std::variant<TransmitAction, StopAction>;

struct SenderOptions {
  /// Keep sending until feedback shows N packets received (analytical extension).
  bool extend_to_budget = false;
  double block_timer_deadline = std::numeric_limits<double>::infinity();

  friend bool operator==(const SenderOptions&, const SenderOptions&) = default;
};

struct SentPacket {
  std::uint32_t round = 1;
  std::uint32_t position = 0;

  friend bool operator==(const SentPacket&, const SentPacket&) = default;
};

// ---------------------------------------------------------------------------
// Sender
// ---------------------------------------------------------------------------

/// Transmit-credit accounting for one block.
///
/// credit = N + reported_lost - sent_count at all times. The first N packets are
/// released one at a time by the caller's pacer through sender_next_initial; every
/// newly reported loss releases exactly one further packet immediately.
struct SenderState {
  BlockSpec spec;
  Protocol protocol = Protocol::fluid;
  SenderOptions options;

  std::uint32_t sent_count = 0;
  std::uint32_t initial_sent = 0;
  std::uint32_t reported_lost = 0;
  std::uint32_t credit = 0;
  bool terminated = false;

  std::optional<FeedbackReport> last_report;
  /// Indexed by seq_no - 1.
  std::vector<SentPacket> sent;

  double block_timer_deadline() const noexcept { return options.block_timer_deadline; }

  friend bool operator==(const SenderState&, const SenderState&) = default;
};

inline SenderState make_sender(const BlockSpec& spec, Protocol protocol, SenderOptions options = {}) {
  SenderState s;
  s.spec = spec;
  s.protocol = protocol;
  s.options = options;
  s.credit = spec.n;
  return s;
}

/// Releases the next round-1 packet, or nothing once N have gone out or the sender stopped.
inline std::optional<TransmitAction> sender_next_initial(SenderState& s) {
  if (s.terminated || s.initial_sent >= s.spec.n || s.credit == 0) return std::nullopt;
  TransmitAction tx{++s.sent_count, 1, ++s.initial_sent};
  --s.credit;
  s.sent.push_back({tx.round, tx.position});
  return tx;
}

namespace detail {

inline bool is_stale(const FeedbackReport& prev, const FeedbackReport& next) {
  if (next.received_count < prev.received_count || next.highest_seq < prev.highest_seq) return true;
  return next.received_count == prev.received_count && next.highest_seq == prev.highest_seq &&
         next.recovered == prev.recovered;
}

inline TransmitAction release(SenderState& s, std::uint32_t round, std::uint32_t position) {
  TransmitAction tx{++s.sent_count, round, position};
  --s.credit;
  s.sent.push_back({round, position});
  return tx;
}

}  // namespace detail

/// Applies one report in place and returns the resulting actions.
///
/// Stale or duplicate reports are dropped. Recovery (or, with the analytical
/// extension, N packets received) terminates the sender; recovery wins over losses
/// carried in the same report. Otherwise each newly implied loss yields one
/// TransmitAction tagged with the round after the lost packet's round.
inline std::vector<SenderAction> sender_apply_feedback(SenderState& s, const FeedbackReport& report) {
  if (report.block_id != s.spec.block_id) throw InvalidParameter("feedback for another block");
  if (s.terminated) return {};
  if (s.last_report && detail::is_stale(*s.last_report, report)) return {};
  if (report.received_count > report.highest_seq) throw InvalidParameter("received_count exceeds highest_seq");
  if (report.highest_seq > s.sent_count) throw InvalidParameter("feedback refers to packets never sent");

  const std::uint32_t prev_highest = s.last_report ? s.last_report->highest_seq : 0;
  s.last_report = report;

  const bool done = s.options.extend_to_budget ? report.received_count >= s.spec.n : report.recovered;
  if (done || (s.protocol == Protocol::arq && report.recovered)) {
    s.terminated = true;
    return {StopAction{}};
  }

  const std::uint32_t implied = report.implied_losses();
  if (implied <= s.reported_lost) return {};
  const std::uint32_t fresh = implied - s.reported_lost;
  s.reported_lost = implied;
  s.credit += fresh;

  std::vector<SenderAction> actions;
  actions.reserve(fresh);
  const std::uint32_t window = report.highest_seq - prev_highest;
  if (window == fresh) {
    // Every packet in (prev_highest, highest_seq] was lost: attribution is exact.
    for (std::uint32_t seq = prev_highest + 1; seq <= report.highest_seq; ++seq) {
      const SentPacket lost = s.sent[seq - 1];
      actions.emplace_back(detail::release(s, lost.round + 1, lost.position));
    }
    return actions;
  }

  // Batched report: the lost packets are somewhere in the window but not identified.
  if (s.protocol == Protocol::arq) {
    throw InvalidParameter("ARQ needs one report per inferred loss to know what to retransmit");
  }
  std::uint32_t round = 1;
  for (std::uint32_t seq = prev_highest + 1; seq <= report.highest_seq; ++seq) {
    round = std::max(round, s.sent[seq - 1].round);
  }
  for (std::uint32_t i = 0; i < fresh; ++i) actions.emplace_back(detail::release(s, round + 1, 0));
  return actions;
}

struct SenderStep {
  SenderState state;
  std::vector<SenderAction> actions;
};

inline SenderStep sender_on_feedback(SenderState state, const FeedbackReport& report) {
  auto actions = sender_apply_feedback(state, report);
  return {std::move(state), std::move(actions)};
}

inline SenderStep arq_sender_on_feedback(SenderState state, const FeedbackReport& report) {
  if (state.protocol != Protocol::arq) throw InvalidParameter("not an ARQ sender");
  return sender_on_feedback(std::move(state), report);
}

/// Returns true when this call stopped the sender.
inline bool sender_apply_timer(SenderState& s, double now) {
  if (s.terminated || now < s.options.block_timer_deadline) return false;
  s.terminated = true;
  return true;
}

inline std::pair<SenderState, std::optional<StopAction>> sender_on_timer(SenderState state, double now) {
  const bool stopped = sender_apply_timer(state, now);
  return {std::move(state), stopped ? std::optional<StopAction>{StopAction{}} : std::nullopt};
}

// ---------------------------------------------------------------------------
// Receiver
// ---------------------------------------------------------------------------

/// Per-block receiver. FLUID recovers at K packets (or decoder rank K when a real
/// decoder is attached); ARQ recovers once every one of the N source packets arrived.
struct ReceiverState {
  std::uint64_t block_id = 0;
  Protocol protocol = Protocol::fluid;
  std::uint32_t k = 1;
  std::uint32_t n = 1;

  std::uint32_t received_count = 0;
  std::uint32_t highest_seq = 0;
  bool recovered = false;

  std::vector<bool> seen_seq;       // by seq_no - 1
  std::vector<bool> seen_position;  // ARQ, by position - 1
  std::uint32_t distinct_positions = 0;
  std::optional<DecoderState> decoder;

  friend bool operator==(const ReceiverState&, const ReceiverState&) = default;
};

inline ReceiverState make_receiver(const BlockSpec& spec, Protocol protocol) {
  ReceiverState r;
  r.block_id = spec.block_id;
  r.protocol = protocol;
  r.k = spec.k;
  r.n = spec.n;
  if (protocol == Protocol::arq) r.seen_position.assign(spec.n, false);
  return r;
}

/// FLUID receiver that decodes real payloads; recovery then means decoder rank K.
inline ReceiverState make_coded_receiver(const BlockSpec& spec, std::size_t symbol_size,
                                         CodecMode mode = CodecMode::systematic) {
  ReceiverState r = make_receiver(spec, Protocol::fluid);
  r.decoder.emplace(spec.block_id, spec.k, symbol_size, mode);
  return r;
}

inline FeedbackReport receiver_report(const ReceiverState& r, double now) {
  return {r.block_id, r.received_count, r.highest_seq, r.recovered, now};
}

/// Records an arrival in place. Duplicates leave the state untouched.
inline FeedbackReport receiver_apply_packet(ReceiverState& r, std::uint32_t seq_no, std::uint32_t position,
                                            double now, const EncodedSymbol* symbol = nullptr) {
  if (seq_no == 0) throw InvalidParameter("seq_no starts at 1");
  if (r.seen_seq.size() < seq_no) r.seen_seq.resize(seq_no, false);
  if (r.seen_seq[seq_no - 1]) return receiver_report(r, now);
  r.seen_seq[seq_no - 1] = true;
  ++r.received_count;
  r.highest_seq = std::max(r.highest_seq, seq_no);

  if (r.protocol == Protocol::arq) {
    if (position == 0 || position > r.n) throw InvalidParameter("ARQ packet without a valid source position");
    if (!r.seen_position[position - 1]) {
      r.seen_position[position - 1] = true;
      ++r.distinct_positions;
    }
    r.recovered = r.distinct_positions == r.n;
  } else if (r.decoder) {
    if (symbol == nullptr) throw InvalidParameter("coded receiver needs the encoded symbol");
    r.decoder->ingest(*symbol);
    r.recovered = r.decoder->complete();
  } else {
    r.recovered = ideal_ingest(r.received_count, r.k);
  }
  return receiver_report(r, now);
}

/// Comparison-model loss inference: the receiver accounts for packet `seq_no` as lost
/// the moment it is lost, so the next report carries it in highest_seq.
inline FeedbackReport receiver_apply_loss(ReceiverState& r, std::uint32_t seq_no, double now) {
  if (seq_no == 0) throw InvalidParameter("seq_no starts at 1");
  if (r.seen_seq.size() < seq_no) r.seen_seq.resize(seq_no, false);
  if (!r.seen_seq[seq_no - 1]) r.highest_seq = std::max(r.highest_seq, seq_no);
  return receiver_report(r, now);
}

struct ReceiverStep {
  ReceiverState state;
  FeedbackReport report;
};

inline ReceiverStep receiver_on_packet(ReceiverState state, std::uint32_t seq_no, double now = 0.0,
                                       const EncodedSymbol* symbol = nullptr) {
  auto report = receiver_apply_packet(state, seq_no, 0, now, symbol);
  return {std::move(state), report};
}

inline ReceiverStep arq_receiver_on_packet(ReceiverState state, std::uint32_t seq_no, std::uint32_t source_id,
                                           double now = 0.0) {
  if (state.protocol != Protocol::arq) throw InvalidParameter("not an ARQ receiver");
  auto report = receiver_apply_packet(state, seq_no, source_id, now);
  return {std::move(state), report};
}

}  // namespace fluid
