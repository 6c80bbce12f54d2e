#include "echoaudit/blocks.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>

#include "echoaudit/error.hpp"
#include "io_util.hpp"

namespace echoaudit {

std::size_t BlockSizes::for_kind(InteractionKind kind) const noexcept {
  switch (kind) {
    case InteractionKind::browse: return browse;
    case InteractionKind::click: return click;
    case InteractionKind::purchase: return purchase;
  }
  return click;
}

std::vector<InteractionBlock> build_blocks(std::string_view user_id, InteractionKind kind,
                                           std::span<const TimedItem> events, std::size_t n) {
  if (n == 0) throw ArgumentError("block size must be >= 1");
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].timestamp < events[i - 1].timestamp) {
      throw OrderingError("events for user '" + std::string(user_id) + "' are not time-ordered at index " +
                          std::to_string(i));
    }
  }
  const std::size_t count = events.size() / n;
  std::vector<InteractionBlock> blocks;
  blocks.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    InteractionBlock block;
    block.user_id = user_id;
    block.kind = kind;
    block.index = b;
    const auto slice = events.subspan(b * n, n);
    block.item_ids.reserve(n);
    for (const auto& e : slice) block.item_ids.push_back(e.item_id);
    block.first_ts = slice.front().timestamp;
    block.last_ts = slice.back().timestamp;
    blocks.push_back(std::move(block));
  }
  return blocks;
}

BlocksByUser blocks_by_user(std::span<const InteractionRecord> records, InteractionKind kind,
                            std::size_t n, std::optional<std::int64_t> trim_before) {
  std::unordered_map<std::string_view, std::vector<TimedItem>> per_user;
  for (const auto& r : records) {
    if (r.kind != kind) continue;
    if (trim_before && r.timestamp < *trim_before) continue;
    per_user[r.user_id].push_back(TimedItem{r.item_id, r.timestamp});
  }
  BlocksByUser out;
  for (auto& [user, events] : per_user) {
    std::stable_sort(events.begin(), events.end(),
                     [](const TimedItem& a, const TimedItem& b) { return a.timestamp < b.timestamp; });
    out.emplace(std::string(user), build_blocks(user, kind, events, n));
  }
  return out;
}

std::set<std::string, std::less<>> filter_eligible(const BlocksByUser& blocks, std::size_t min_blocks) {
  if (min_blocks < 2) throw ArgumentError("min_blocks must be >= 2 so first and last blocks differ");
  std::set<std::string, std::less<>> eligible;
  for (const auto& [user, list] : blocks) {
    if (list.size() >= min_blocks) eligible.insert(user);
  }
  return eligible;
}

void write_block_summary_csv(const BlocksByUser& blocks, std::ostream& out) {
  out << "user_id,kind,index,size,first_ts,last_ts\n";
  std::string row;
  for (const auto& [user, list] : blocks) {
    for (const auto& b : list) {
      row.clear();
      detail::append_csv_cell(row, user);
      row += ',';
      row += to_string(b.kind);
      row += ',' + std::to_string(b.index) + ',' + std::to_string(b.item_ids.size()) + ',' +
             std::to_string(b.first_ts) + ',' + std::to_string(b.last_ts) + '\n';
      out << row;
    }
  }
}

}  // namespace echoaudit
