#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace echoaudit {

enum class InteractionKind { browse, click, purchase };
enum class LogFormat { csv, jsonl };

std::string_view to_string(InteractionKind kind) noexcept;
InteractionKind parse_kind(std::string_view text);
LogFormat parse_format(std::string_view text);

/// One browse impression, click or purchase event.
///
/// Browse records carry `position` and `clicked`; click and purchase records
/// carry `price`. `validate()` enforces that split.
struct InteractionRecord {
  InteractionKind kind = InteractionKind::click;
  std::int64_t timestamp = 0;
  std::string pv_id;
  std::string user_id;
  std::string item_id;
  std::optional<std::uint32_t> position;
  std::optional<bool> clicked;
  std::optional<double> price;

  void validate() const;
  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

struct ParseOptions {
  /// Skip and count malformed rows instead of throwing.
  bool lenient = false;
};

struct ParseResult {
  std::vector<InteractionRecord> records;
  std::size_t skipped = 0;
};

/// Column names, in file order, for a given log kind.
std::span<const std::string_view> log_columns(InteractionKind kind) noexcept;

ParseResult parse_log(InteractionKind kind, std::istream& in, LogFormat format,
                      ParseOptions options = {});
ParseResult parse_log_file(InteractionKind kind, const std::string& path, LogFormat format,
                           ParseOptions options = {});

void write_log(InteractionKind kind, std::span<const InteractionRecord> records, std::ostream& out,
               LogFormat format);

struct PageItem {
  std::string item_id;
  std::uint32_t position = 0;
  bool clicked = false;
};

struct PageView {
  std::string pv_id;
  std::string user_id;
  std::int64_t start_time = 0;
  std::vector<PageItem> items;  // ascending position

  bool any_clicked() const noexcept;
};

/// user_id -> page views ordered by start time (file order on ties).
using PageViewIndex = std::map<std::string, std::vector<PageView>, std::less<>>;

PageViewIndex group_page_views(std::span<const InteractionRecord> browse_records);

}  // namespace echoaudit
