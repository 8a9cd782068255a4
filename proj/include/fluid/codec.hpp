#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fluid/error.hpp"
#include "fluid/gf256.hpp"
#include "fluid/rng.hpp"

namespace fluid {

using Bytes = std::vector<std::uint8_t>;

/// K source symbols of equal length belonging to one block.
struct SourceBlock {
  std::uint64_t block_id = 0;
  std::vector<Bytes> symbols;

  std::size_t k() const noexcept { return symbols.size(); }
  std::size_t symbol_size() const noexcept { return symbols.empty() ? 0 : symbols.front().size(); }

  friend bool operator==(const SourceBlock&, const SourceBlock&) = default;
};

/// Throws InvalidBlock unless the block has K >= 1 symbols of one common nonzero length.
inline void validate(const SourceBlock& block) {
  if (block.symbols.empty()) throw InvalidBlock("source block has no symbols");
  const std::size_t size = block.symbols.front().size();
  if (size == 0) throw InvalidBlock("source symbols must be at least one byte");
  for (const auto& s : block.symbols) {
    if (s.size() != size) throw InvalidBlock("source symbols differ in length");
  }
}

/// systematic: seq_no 1..K carry the source symbols verbatim, later seq_no are dense
/// random combinations. dense: every seq_no is a random combination.
enum class CodecMode { systematic, dense };

struct EncodedSymbol {
  std::uint64_t block_id = 0;
  std::uint32_t seq_no = 0;
  std::uint64_t coeff_seed = 0;
  Bytes payload;

  friend bool operator==(const EncodedSymbol&, const EncodedSymbol&) = default;
};

/// Seed for the coefficient vector of (block_id, seq_no); equal to split(block_id, seq_no).
constexpr std::uint64_t coefficient_seed(std::uint64_t block_id, std::uint32_t seq_no) noexcept {
  return split(block_id, seq_no);
}

/// Coefficient vector over GF(256) for one encoded symbol.
///
/// Random vectors draw K bytes from SplitMix64(coeff_seed), consuming each 64-bit
/// output low byte first. An all-zero draw is discarded and drawing continues on the
/// same stream. The vector is then scaled so its first nonzero entry is 1, which
/// leaves the spanned subspace unchanged and makes a K = 1 block encode to the
/// source symbol itself.
inline Bytes coefficient_vector(std::uint64_t block_id, std::uint32_t seq_no, std::size_t k,
                                CodecMode mode = CodecMode::systematic) {
  Bytes coeffs(k, 0);
  if (mode == CodecMode::systematic && seq_no >= 1 && seq_no <= k) {
    coeffs[seq_no - 1] = 1;
    return coeffs;
  }
  SplitMix64 gen(coefficient_seed(block_id, seq_no));
  for (;;) {
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (i % 8 == 0) word = gen();
      coeffs[i] = static_cast<std::uint8_t>(word >> (8 * (i % 8)));
    }
    const auto lead = std::find_if(coeffs.begin(), coeffs.end(), [](std::uint8_t c) { return c != 0; });
    if (lead != coeffs.end()) {
      gf256::scale(coeffs, gf256::inv(*lead));
      return coeffs;
    }
  }
}

/// Encoded symbol `seq_no` (>= 1) of `block`. Pure function of its arguments.
inline EncodedSymbol encode(const SourceBlock& block, std::uint32_t seq_no,
                            CodecMode mode = CodecMode::systematic) {
  validate(block);
  if (seq_no == 0) throw InvalidParameter("seq_no starts at 1");
  EncodedSymbol out;
  out.block_id = block.block_id;
  out.seq_no = seq_no;
  out.coeff_seed = coefficient_seed(block.block_id, seq_no);
  const std::size_t k = block.k();
  if (mode == CodecMode::systematic && seq_no <= k) {
    out.payload = block.symbols[seq_no - 1];
    return out;
  }
  const Bytes coeffs = coefficient_vector(block.block_id, seq_no, k, mode);
  out.payload.assign(block.symbol_size(), 0);
  for (std::size_t i = 0; i < k; ++i) gf256::mul_add(out.payload, block.symbols[i], coeffs[i]);
  return out;
}

/// Incremental Gaussian elimination over GF(256).
///
/// Received rows are kept in reduced row echelon form indexed by pivot column, so
/// every stored row has a 1 in its pivot column and 0 in every other pivot column.
/// When the rank reaches K the rows form the identity and their payloads are the
/// source symbols.
class DecoderState {
 public:
  DecoderState(std::uint64_t block_id, std::size_t k, std::size_t symbol_size,
               CodecMode mode = CodecMode::systematic)
      : block_id_(block_id), k_(k), symbol_size_(symbol_size), mode_(mode), pivots_(k) {
    if (k == 0) throw InvalidBlock("decoder needs K >= 1");
    if (symbol_size == 0) throw InvalidBlock("decoder needs symbol_size >= 1");
  }

  /// Adds one symbol. Returns true iff the rank increased. Duplicate seq_no are ignored.
  bool ingest(const EncodedSymbol& sym) {
    if (sym.block_id != block_id_) throw FormatError("symbol belongs to another block");
    if (sym.payload.size() != symbol_size_) {
      throw FormatError("symbol size " + std::to_string(sym.payload.size()) + " != " +
                        std::to_string(symbol_size_));
    }
    if (sym.seq_no == 0) throw FormatError("seq_no starts at 1");
    if (!received_.insert(sym.seq_no).second) return false;
    if (decoded_) return false;

    Bytes row = coefficient_vector(block_id_, sym.seq_no, k_, mode_);
    row.insert(row.end(), sym.payload.begin(), sym.payload.end());

    for (std::size_t c = 0; c < k_; ++c) {
      if (row[c] != 0 && !pivots_[c].empty()) gf256::mul_add(row, pivots_[c], row[c]);
    }
    std::size_t lead = 0;
    while (lead < k_ && row[lead] == 0) ++lead;
    if (lead == k_) return false;

    gf256::scale(row, gf256::inv(row[lead]));
    for (auto& other : pivots_) {
      if (!other.empty() && other[lead] != 0) gf256::mul_add(other, row, other[lead]);
    }
    pivots_[lead] = std::move(row);
    ++rank_;
    if (rank_ == k_) finish();
    return true;
  }

  std::uint64_t block_id() const noexcept { return block_id_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t symbol_size() const noexcept { return symbol_size_; }
  std::size_t rank() const noexcept { return rank_; }
  bool complete() const noexcept { return decoded_.has_value(); }
  const std::set<std::uint32_t>& received() const noexcept { return received_; }
  const std::optional<SourceBlock>& decoded() const noexcept { return decoded_; }

  friend bool operator==(const DecoderState&, const DecoderState&) = default;

 private:
  void finish() {
    SourceBlock block;
    block.block_id = block_id_;
    block.symbols.reserve(k_);
    for (auto& row : pivots_) {
      block.symbols.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(k_), row.end());
    }
    decoded_ = std::move(block);
    pivots_.assign(k_, Bytes{});
  }

  std::uint64_t block_id_;
  std::size_t k_;
  std::size_t symbol_size_;
  CodecMode mode_;
  std::size_t rank_ = 0;
  std::set<std::uint32_t> received_;
  std::vector<Bytes> pivots_;
  std::optional<SourceBlock> decoded_;
};

/// Value-semantics form of DecoderState::ingest.
inline DecoderState ingest(DecoderState state, const EncodedSymbol& sym) {
  state.ingest(sym);
  return state;
}

/// Idealized recovery rule: any K received encoded packets recover the block.
constexpr bool ideal_ingest(std::uint64_t count, std::uint64_t k) noexcept { return count >= k; }

}  // namespace fluid
