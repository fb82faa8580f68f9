#include "idrr/encoder.hpp"

#include <cctype>
#include <stdexcept>

#include "idrr/rng.hpp"

namespace idrr {

namespace {
constexpr int kBegin = 0;  // offsets past the hash buckets
constexpr int kSep = 1;
constexpr int kEnd = 2;
constexpr int kNumSpecials = 3;
}  // namespace

void EncoderConfig::validate() const {
  if (hidden_dim < 2) throw std::invalid_argument("encoder hidden_dim must be >= 2");
  if (kind == EncoderKind::Toy && vocab_hash_buckets < 1)
    throw std::invalid_argument("vocab_hash_buckets must be >= 1");
  if (max_seq_len < kNumSpecials + 2 || max_seq_len > kMaxSeqLen)
    throw std::invalid_argument("max_seq_len must be in [5, 512]");
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> truncate_pair(
    std::vector<std::string> tokens1, std::vector<std::string> tokens2, int budget) {
  if (budget < 2) throw std::invalid_argument("truncate_pair: budget must be >= 2");
  while (static_cast<int>(tokens1.size() + tokens2.size()) > budget) {
    if (tokens1.size() > tokens2.size())
      tokens1.pop_back();
    else
      tokens2.pop_back();
  }
  return {std::move(tokens1), std::move(tokens2)};
}

ToyEncoder::ToyEncoder(const EncoderConfig& config) : config_(config) {
  config_.validate();
  if (config_.kind != EncoderKind::Toy)
    throw std::invalid_argument("ToyEncoder requires kind=toy");
  const int rows = config_.vocab_hash_buckets + kNumSpecials;
  table_.resize(rows, config_.hidden_dim);
  Rng rng(config_.seed);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < config_.hidden_dim; ++c) table_(r, c) = rng.normal(0.0, 0.1);
}

int ToyEncoder::row_for(const std::string& token) const {
  return static_cast<int>(fnv1a64(token) % static_cast<std::uint64_t>(config_.vocab_hash_buckets));
}

Vector ToyEncoder::embed(const std::string& token) const {
  return table_.row(row_for(token)).transpose();
}

std::string ToyEncoder::identity() const {
  return "toy(seed=" + std::to_string(config_.seed) +
         ",buckets=" + std::to_string(config_.vocab_hash_buckets) +
         ",H=" + std::to_string(config_.hidden_dim) + ")";
}

EncoderOutput ToyEncoder::encode(const std::string& arg1, const std::string& arg2) const {
  auto t1 = tokenize(arg1);
  auto t2 = tokenize(arg2);
  if (t1.empty()) throw std::invalid_argument("encode: arg1 has no tokens");
  if (t2.empty()) throw std::invalid_argument("encode: arg2 has no tokens");
  std::tie(t1, t2) = truncate_pair(std::move(t1), std::move(t2), config_.max_seq_len - kNumSpecials);

  EncoderOutput out;
  const int T = static_cast<int>(t1.size() + t2.size()) + kNumSpecials;
  out.tokens.resize(T, config_.hidden_dim);
  out.mask = VectorI::Ones(T);
  out.row_index.reserve(T);

  auto push = [&](int row, int pos) {
    out.tokens.row(pos) = table_.row(row);
    out.row_index.push_back(row);
  };
  int pos = 0;
  push(config_.vocab_hash_buckets + kBegin, pos++);
  for (const auto& tok : t1) push(row_for(tok), pos++);
  push(config_.vocab_hash_buckets + kSep, pos++);
  for (const auto& tok : t2) push(row_for(tok), pos++);
  push(config_.vocab_hash_buckets + kEnd, pos++);

  out.pooled = out.tokens.colwise().mean().transpose();
  return out;
}

void ToyEncoder::backward(const EncoderOutput& out, const Vector& d_pooled,
                          const Matrix& d_tokens, Matrix& d_table) const {
  const int T = static_cast<int>(out.tokens.rows());
  const Vector mean_grad = d_pooled / static_cast<double>(T);
  for (int t = 0; t < T; ++t) {
    const int row = out.row_index[static_cast<std::size_t>(t)];
    d_table.row(row) += mean_grad.transpose();
    if (d_tokens.size() > 0) d_table.row(row) += d_tokens.row(t);
  }
}

std::shared_ptr<const EncoderAdapter> make_encoder(
    const EncoderConfig& config, std::shared_ptr<const EncoderAdapter> external) {
  config.validate();
  switch (config.kind) {
    case EncoderKind::Toy:
      return std::make_shared<ToyEncoder>(config);
    case EncoderKind::ExternalAdapter:
      if (!external) throw std::runtime_error("external encoder adapter unavailable");
      if (external->hidden_dim() != config.hidden_dim)
        throw std::runtime_error("adapter hidden_dim does not match config");
      return external;
  }
  throw std::logic_error("unreachable");
}

}  // namespace idrr
