#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "echoaudit/logmodel.hpp"

namespace echoaudit {

struct TimedItem {
  std::string item_id;
  std::int64_t timestamp = 0;
};

/// n consecutive same-kind interactions of one user. Trailing partial
/// blocks are never materialised.
struct InteractionBlock {
  std::string user_id;
  InteractionKind kind = InteractionKind::click;
  std::size_t index = 0;
  std::vector<std::string> item_ids;
  std::int64_t first_ts = 0;
  std::int64_t last_ts = 0;
};

using BlocksByUser = std::map<std::string, std::vector<InteractionBlock>, std::less<>>;

struct BlockSizes {
  std::size_t browse = 200;
  std::size_t click = 100;
  std::size_t purchase = 10;

  std::size_t for_kind(InteractionKind kind) const noexcept;
};

/// Throws OrderingError when `events` is not sorted by timestamp.
std::vector<InteractionBlock> build_blocks(std::string_view user_id, InteractionKind kind,
                                           std::span<const TimedItem> events, std::size_t n);

/// Groups records of one kind per user (stable time order, file order on
/// ties), optionally dropping events before `trim_before`, and blocks them.
BlocksByUser blocks_by_user(std::span<const InteractionRecord> records, InteractionKind kind,
                            std::size_t n, std::optional<std::int64_t> trim_before = std::nullopt);

/// Users with at least `min_blocks` blocks. `min_blocks` must be >= 2.
std::set<std::string, std::less<>> filter_eligible(const BlocksByUser& blocks,
                                                   std::size_t min_blocks = 3);

/// `user_id,kind,index,size,first_ts,last_ts`
void write_block_summary_csv(const BlocksByUser& blocks, std::ostream& out);

}  // namespace echoaudit
