#pragma once

#include <memory>
#include <string>
#include <vector>

#include "idrr/types.hpp"

namespace idrr {

inline constexpr int kMaxSeqLen = 512;

enum class EncoderKind { Toy, ExternalAdapter };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Toy;
  int hidden_dim = 16;        // H
  int vocab_hash_buckets = 256;  // toy only
  bool trainable = false;        // toy only
  std::uint64_t seed = 0;
  int max_seq_len = kMaxSeqLen;

  void validate() const;
};

// Pooled sentence-pair representation plus per-token rows.
// `row_index` maps token positions to embedding-table rows; it is filled by
// the toy encoder and empty for external adapters.
struct EncoderOutput {
  Vector pooled;          // H
  Matrix tokens;          // T x H
  VectorI mask;           // T, 1 = real token
  std::vector<int> row_index;
};

// Lowercased whitespace tokens.
std::vector<std::string> tokenize(const std::string& text);

// Removes trailing tokens from the currently longer argument (ties from
// arg2) until the combined length fits the budget.
std::pair<std::vector<std::string>, std::vector<std::string>> truncate_pair(
    std::vector<std::string> tokens1, std::vector<std::string> tokens2, int budget);

// Contract shared by the toy encoder and any external pretrained encoder:
// turn an argument pair into pooled + per-token representations of the
// declared hidden size.
class EncoderAdapter {
 public:
  virtual ~EncoderAdapter() = default;
  virtual EncoderOutput encode(const std::string& arg1, const std::string& arg2) const = 0;
  virtual int hidden_dim() const = 0;
  // Recorded in the run manifest (model name, revision, dimensions).
  virtual std::string identity() const = 0;
};

// Deterministic hashed-embedding encoder for desk-scale tests. Token stream
// is begin-marker, arg1 tokens, separator, arg2 tokens, end-marker, truncated
// to 512 positions; pooled is the masked mean of the token rows.
class ToyEncoder final : public EncoderAdapter {
 public:
  explicit ToyEncoder(const EncoderConfig& config);

  EncoderOutput encode(const std::string& arg1, const std::string& arg2) const override;
  int hidden_dim() const override { return config_.hidden_dim; }
  std::string identity() const override;

  // Embedding row for one token (specials live past the hash buckets).
  Vector embed(const std::string& token) const;
  int row_for(const std::string& token) const;

  Matrix& table() { return table_; }
  const Matrix& table() const { return table_; }
  const EncoderConfig& config() const { return config_; }

  // Scatter per-position gradients (d pooled and d tokens) into a
  // table-shaped gradient accumulator.
  void backward(const EncoderOutput& out, const Vector& d_pooled, const Matrix& d_tokens,
                Matrix& d_table) const;

 private:
  EncoderConfig config_;
  Matrix table_;  // (buckets + 3 specials) x H
};

// Builds the encoder named by the config. `external` supplies the adapter
// for EncoderKind::ExternalAdapter; requesting one without it is an error.
std::shared_ptr<const EncoderAdapter> make_encoder(
    const EncoderConfig& config, std::shared_ptr<const EncoderAdapter> external = nullptr);

}  // namespace idrr
