#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "fluid/error.hpp"
#include "fluid/rng.hpp"
#include "fluid/text.hpp"

namespace fluid {

/// Every transmission is lost independently with probability p.
struct BernoulliLoss {
  double p = 0.0;
  friend bool operator==(const BernoulliLoss&, const BernoulliLoss&) = default;
};

/// Round r loses exactly round_loss_count(f_r, size of round r) of its packets;
/// rounds past the end of the list are lossless.
struct RoundFractionsLoss {
  std::vector<double> fractions;
  friend bool operator==(const RoundFractionsLoss&, const RoundFractionsLoss&) = default;
};

/// Two-state burst channel. The chain starts in the good state, decides the loss of
/// each transmission from the current state, then moves.
struct GilbertElliottLoss {
  double p_good_loss = 0.0;
  double p_bad_loss = 1.0;
  double p_g2b = 0.0;
  double p_b2g = 1.0;
  friend bool operator==(const GilbertElliottLoss&, const GilbertElliottLoss&) = default;
};

using LossModel = std::variant<BernoulliLoss, RoundFractionsLoss, GilbertElliottLoss>;

namespace detail {

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter(std::string(what) + " must lie in [0, 1]");
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidParameter("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

/// Parses a comma separated list of reals, e.g. "0.70,0.14".
inline std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(detail::parse_double(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

inline void validate(const LossModel& model) {
  std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, BernoulliLoss>) {
          detail::check_probability(m.p, "loss probability");
        } else if constexpr (std::is_same_v<M, RoundFractionsLoss>) {
          for (double f : m.fractions) detail::check_probability(f, "round loss fraction");
        } else {
          detail::check_probability(m.p_good_loss, "good-state loss probability");
          detail::check_probability(m.p_bad_loss, "bad-state loss probability");
          detail::check_probability(m.p_g2b, "good-to-bad probability");
          detail::check_probability(m.p_b2g, "bad-to-good probability");
        }
      },
      model);
}

/// Text form: `bernoulli:0.1`, `rounds:0.70,0.14`, `ge:p_good_loss,p_bad_loss,p_g2b,p_b2g`.
inline LossModel parse_loss_model(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidParameter("loss model needs a 'kind:' prefix");
  const std::string_view kind = text.substr(0, colon);
  const std::string_view args = text.substr(colon + 1);
  LossModel model;
  if (kind == "bernoulli") {
    model = BernoulliLoss{detail::parse_double(args)};
  } else if (kind == "rounds") {
    model = RoundFractionsLoss{args.empty() ? std::vector<double>{} : parse_real_list(args)};
  } else if (kind == "ge") {
    const auto v = parse_real_list(args);
    if (v.size() != 4) throw InvalidParameter("ge loss model takes four probabilities");
    model = GilbertElliottLoss{v[0], v[1], v[2], v[3]};
  } else {
    throw InvalidParameter("unknown loss model '" + std::string(kind) + "'");
  }
  validate(model);
  return model;
}

inline std::string format_loss_model(const LossModel& model) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, BernoulliLoss>) {
          os << "bernoulli:" << format_real(m.p);
        } else if constexpr (std::is_same_v<M, RoundFractionsLoss>) {
          os << "rounds:";
          for (std::size_t i = 0; i < m.fractions.size(); ++i) os << (i ? "," : "") << format_real(m.fractions[i]);
        } else {
          os << "ge:" << format_real(m.p_good_loss) << ',' << format_real(m.p_bad_loss) << ',' << format_real(m.p_g2b) << ','
             << format_real(m.p_b2g);
        }
      },
      model);
  return os.str();
}

/// Whole packets lost in a round of `size` packets at fraction f: f * size rounded
/// half up. Products within 1e-9 below a half are treated as the half, so decimal
/// fractions round as written (0.35 * 10 gives 4).
inline std::uint32_t round_loss_count(double f, std::uint32_t size) {
  const double exact = f * static_cast<double>(size);
  const auto count = static_cast<std::uint32_t>(std::floor(exact + 0.5 + 1e-9));
  return count > size ? size : count;
}

/// One seeded draw of the loss process, queried per transmission event.
///
/// Sub-streams of the seed: 1 drives Bernoulli draws (value at index seq_no),
/// 2 keys one permutation stream per round for RoundFractions, 3 drives the
/// Gilbert-Elliott chain (two draws per transmission, loss first).
class LossRealization {
 public:
  LossRealization(LossModel model, std::uint64_t seed, std::uint32_t n)
      : model_(std::move(model)), seed_(seed), n_(n), ge_rng_(split(seed, 3)) {
    validate(model_);
  }

  /// Loss of transmission `seq_no` (1-based, transmission order), which is packet
  /// `index_in_round` (0-based) of causal round `round`.
  bool lost(std::uint32_t seq_no, std::uint32_t round, std::uint32_t index_in_round) {
    if (const auto* b = std::get_if<BernoulliLoss>(&model_)) {
      return to_unit(stream_at(split(seed_, 1), seq_no)) < b->p;
    }
    if (const auto* rf = std::get_if<RoundFractionsLoss>(&model_)) return round_lost(*rf, round, index_in_round);
    return ge_lost(std::get<GilbertElliottLoss>(model_), seq_no);
  }

  const LossModel& model() const noexcept { return model_; }

 private:
  bool round_lost(const RoundFractionsLoss& rf, std::uint32_t round, std::uint32_t index) {
    if (round == 0 || round > rf.fractions.size()) return false;
    while (round_flags_.size() < round) {
      const std::size_t r = round_flags_.size();  // 0-based round being built
      const std::uint32_t size = r == 0 ? n_ : round_lost_count_.back();
      const std::uint32_t lost = round_loss_count(rf.fractions[r], size);
      std::vector<std::uint32_t> order(size);
      for (std::uint32_t i = 0; i < size; ++i) order[i] = i;
      SplitMix64 gen(split(split(seed_, 2), r + 1));
      for (std::uint32_t i = 0; i < lost; ++i) {
        const auto j = i + static_cast<std::uint32_t>(gen.below(size - i));
        std::swap(order[i], order[j]);
      }
      std::vector<bool> flags(size, false);
      for (std::uint32_t i = 0; i < lost; ++i) flags[order[i]] = true;
      round_flags_.push_back(std::move(flags));
      round_lost_count_.push_back(lost);
    }
    const auto& flags = round_flags_[round - 1];
    return index < flags.size() && flags[index];
  }

  bool ge_lost(const GilbertElliottLoss& ge, std::uint32_t seq_no) {
    while (ge_flags_.size() < seq_no) {
      const bool lost = ge_rng_.uniform() < (ge_bad_ ? ge.p_bad_loss : ge.p_good_loss);
      const double move = ge_rng_.uniform();
      ge_bad_ = ge_bad_ ? !(move < ge.p_b2g) : move < ge.p_g2b;
      ge_flags_.push_back(lost);
    }
    return ge_flags_[seq_no - 1];
  }

  LossModel model_;
  std::uint64_t seed_;
  std::uint32_t n_;

  std::vector<std::vector<bool>> round_flags_;
  std::vector<std::uint32_t> round_lost_count_;

  SplitMix64 ge_rng_;
  bool ge_bad_ = false;
  std::vector<bool> ge_flags_;
};

}  // namespace fluid
