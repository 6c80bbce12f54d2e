#include "echoaudit/embed.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "echoaudit/error.hpp"
#include "io_util.hpp"

namespace echoaudit {

void EmbeddingTable::add(std::string item_id, std::span<const double> vector) {
  if (item_id.empty()) throw ArgumentError("empty item id");
  if (ids_.empty() && dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_ || dim_ == 0) {
    throw DimensionError("item '" + item_id + "' has " + std::to_string(vector.size()) +
                             " components, expected " + std::to_string(dim_),
                         0);
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw ArgumentError("item '" + item_id + "' has a non-finite component");
  }
  auto [it, inserted] = index_.try_emplace(item_id, ids_.size());
  if (!inserted) throw IntegrityError("duplicate item id '" + item_id + "'");
  ids_.push_back(std::move(item_id));
  values_.insert(values_.end(), vector.begin(), vector.end());
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

EmbeddingTable load_embedding_table(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    const auto tab = rest.find('\t');
    if (tab == std::string_view::npos || tab == 0) throw ParseError("expected item_id<TAB>values", line_no);
    std::string id(rest.substr(0, tab));
    rest.remove_prefix(tab + 1);
    values.clear();
    while (true) {
      const auto next = rest.find('\t');
      const auto cell = rest.substr(0, next);
      double v = 0;
      if (!detail::parse_double(cell, v)) {
        throw ParseError("component " + std::to_string(values.size() + 1) + " is not a finite number",
                         line_no);
      }
      values.push_back(v);
      if (next == std::string_view::npos) break;
      rest.remove_prefix(next + 1);
    }
    if (table.size() > 0 && values.size() != table.dim()) {
      throw DimensionError("row has " + std::to_string(values.size()) + " components, expected " +
                               std::to_string(table.dim()),
                           line_no);
    }
    try {
      table.add(std::move(id), values);
    } catch (const IntegrityError& e) {
      throw IntegrityError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

EmbeddingTable load_embedding_table_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return load_embedding_table(in);
}

void write_embedding_table(const EmbeddingTable& table, std::ostream& out) {
  std::string row;
  for (std::size_t i = 0; i < table.size(); ++i) {
    row = table.ids()[i];
    for (double v : table.row(i)) {
      row += '\t';
      row += detail::format_double(v);
    }
    row += '\n';
    out << row;
  }
}

std::vector<std::vector<double>> block_item_vectors(const InteractionBlock& block,
                                                    const EmbeddingTable& table,
                                                    MissingPolicy missing) {
  std::vector<std::vector<double>> out;
  out.reserve(block.item_ids.size());
  for (const auto& id : block.item_ids) {
    auto v = table.find(id);
    if (!v) {
      if (missing == MissingPolicy::error) {
        throw MissingItemError("item '" + id + "' in block " + std::to_string(block.index) +
                               " of user '" + block.user_id + "' has no embedding");
      }
      continue;
    }
    out.emplace_back(v->begin(), v->end());
  }
  return out;
}

UserBlockEmbedding block_embedding(const InteractionBlock& block, const EmbeddingTable& table,
                                   MissingPolicy missing) {
  if (block.item_ids.empty()) throw ArgumentError("empty block");
  const std::size_t dim = table.dim();
  std::vector<long double> sum(dim, 0.0L);
  std::size_t resolved = 0;
  for (const auto& id : block.item_ids) {
    auto v = table.find(id);
    if (!v) {
      if (missing == MissingPolicy::error) {
        throw MissingItemError("item '" + id + "' in block " + std::to_string(block.index) +
                               " of user '" + block.user_id + "' has no embedding");
      }
      continue;
    }
    for (std::size_t d = 0; d < dim; ++d) sum[d] += (*v)[d];
    ++resolved;
  }
  if (resolved == 0) {
    throw MissingItemError("no item of block " + std::to_string(block.index) + " of user '" +
                           block.user_id + "' has an embedding");
  }
  UserBlockEmbedding e;
  e.user_id = block.user_id;
  e.kind = block.kind;
  e.block_index = block.index;
  e.vector.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) e.vector[d] = static_cast<double>(sum[d] / resolved);
  return e;
}

}  // namespace echoaudit
