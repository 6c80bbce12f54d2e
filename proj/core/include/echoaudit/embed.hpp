#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "echoaudit/blocks.hpp"

namespace echoaudit {

/// item_id -> D-dimensional vector. Immutable once built; reads are thread-safe.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  /// Throws DimensionError on a length mismatch, IntegrityError on a
  /// duplicate id, ArgumentError on a non-finite value.
  void add(std::string item_id, std::span<const double> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool contains(std::string_view id) const { return index_.contains(std::string(id)); }
  std::optional<std::span<const double>> find(std::string_view id) const;

  /// Ids in insertion order.
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Header-less TSV: `item_id<TAB>v1<TAB>...<TAB>vD`. D comes from the first row.
EmbeddingTable load_embedding_table(std::istream& in);
EmbeddingTable load_embedding_table_file(const std::string& path);
void write_embedding_table(const EmbeddingTable& table, std::ostream& out);

enum class MissingPolicy { error, skip };

struct UserBlockEmbedding {
  std::string user_id;
  InteractionKind kind = InteractionKind::click;
  std::size_t block_index = 0;
  std::vector<double> vector;
};

/// Component-wise mean of the block's item vectors.
UserBlockEmbedding block_embedding(const InteractionBlock& block, const EmbeddingTable& table,
                                   MissingPolicy missing = MissingPolicy::error);

/// Vectors of the block's resolvable items, in block order.
std::vector<std::vector<double>> block_item_vectors(const InteractionBlock& block,
                                                    const EmbeddingTable& table,
                                                    MissingPolicy missing = MissingPolicy::error);

}  // namespace echoaudit
