#include "echoaudit/logmodel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "echoaudit/error.hpp"
#include "io_util.hpp"

namespace echoaudit {
namespace {

constexpr std::array<std::string_view, 6> kBrowseColumns{"timestamp", "pv_id",    "user_id",
                                                         "item_id",   "position", "clicked"};
constexpr std::array<std::string_view, 5> kActionColumns{"timestamp", "pv_id", "user_id", "item_id",
                                                         "price"};
constexpr std::string_view kIgnoredColumn = "user_profile";

enum class Field { timestamp, pv_id, user_id, item_id, position, clicked, price, ignored };

Field field_of(std::string_view name) {
  if (name == "timestamp") return Field::timestamp;
  if (name == "pv_id") return Field::pv_id;
  if (name == "user_id") return Field::user_id;
  if (name == "item_id") return Field::item_id;
  if (name == "position") return Field::position;
  if (name == "clicked") return Field::clicked;
  if (name == "price") return Field::price;
  return Field::ignored;
}

bool allowed_extra(InteractionKind kind, std::string_view name) {
  return kind != InteractionKind::browse && name == kIgnoredColumn;
}

// Maps every header column to a field; enforces the kind's field set.
std::vector<Field> resolve_columns(InteractionKind kind, const std::vector<std::string>& header) {
  const auto required = log_columns(kind);
  std::vector<Field> fields;
  fields.reserve(header.size());
  std::vector<std::string_view> seen;
  for (const auto& name : header) {
    if (std::find(seen.begin(), seen.end(), name) != seen.end()) {
      throw SchemaError("duplicate column '" + name + "'", name);
    }
    seen.push_back(name);
    const bool is_required = std::find(required.begin(), required.end(), name) != required.end();
    if (!is_required && !allowed_extra(kind, name)) {
      throw SchemaError("column '" + name + "' is not part of the " + std::string(to_string(kind)) +
                            " schema",
                        name);
    }
    fields.push_back(is_required ? field_of(name) : Field::ignored);
  }
  for (auto name : required) {
    if (std::find(seen.begin(), seen.end(), name) == seen.end()) {
      throw SchemaError("missing column '" + std::string(name) + "' for " +
                            std::string(to_string(kind)) + " log",
                        std::string(name));
    }
  }
  return fields;
}

std::int64_t parse_timestamp(std::string_view s) {
  std::int64_t v = 0;
  if (!detail::parse_integer(s, v)) throw ArgumentError("timestamp is not an integer");
  return v;
}

std::uint32_t parse_position(std::string_view s) {
  std::uint32_t v = 0;
  if (!detail::parse_integer(s, v)) throw ArgumentError("position is not a non-negative integer");
  return v;
}

bool parse_clicked(std::string_view s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ArgumentError("clicked must be 0 or 1");
}

double parse_price(std::string_view s) {
  double v = 0;
  if (!detail::parse_double(s, v)) throw ArgumentError("price is not a number");
  return v;
}

void assign(InteractionRecord& rec, Field field, std::string_view value) {
  switch (field) {
    case Field::timestamp: rec.timestamp = parse_timestamp(value); break;
    case Field::pv_id: rec.pv_id = value; break;
    case Field::user_id: rec.user_id = value; break;
    case Field::item_id: rec.item_id = value; break;
    case Field::position: rec.position = parse_position(value); break;
    case Field::clicked: rec.clicked = parse_clicked(value); break;
    case Field::price: rec.price = parse_price(value); break;
    case Field::ignored: break;
  }
}

template <class OnRecord>
std::size_t read_csv(InteractionKind kind, std::istream& in, const ParseOptions& options,
                     OnRecord&& on_record) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t skipped = 0;
  std::vector<Field> fields;
  std::vector<std::string> cells;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!have_header) {
      if (!detail::split_csv_line(line, cells)) throw ParseError("unterminated quote in header", line_no);
      fields = resolve_columns(kind, cells);
      have_header = true;
      continue;
    }
    try {
      if (!detail::split_csv_line(line, cells)) throw ArgumentError("unterminated quote");
      if (cells.size() != fields.size()) {
        throw ArgumentError("expected " + std::to_string(fields.size()) + " fields, found " +
                            std::to_string(cells.size()));
      }
      InteractionRecord rec;
      rec.kind = kind;
      for (std::size_t i = 0; i < cells.size(); ++i) assign(rec, fields[i], cells[i]);
      rec.validate();
      on_record(std::move(rec));
    } catch (const ArgumentError& e) {
      if (!options.lenient) throw ParseError(e.what(), line_no);
      ++skipped;
    }
  }
  return skipped;
}

std::string json_id(const nlohmann::json& v, std::string_view key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  throw ArgumentError(std::string(key) + " must be a string");
}

template <class OnRecord>
std::size_t read_jsonl(InteractionKind kind, std::istream& in, const ParseOptions& options,
                       OnRecord&& on_record) {
  const auto required = log_columns(kind);
  std::string line;
  std::size_t line_no = 0;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (obj.is_discarded() || !obj.is_object()) throw ArgumentError("not a JSON object");
      for (auto it = obj.begin(); it != obj.end(); ++it) {
        const auto& key = it.key();
        if (std::find(required.begin(), required.end(), key) == required.end() &&
            !allowed_extra(kind, key)) {
          throw SchemaError("line " + std::to_string(line_no) + ": field '" + key +
                                "' is not part of the " + std::string(to_string(kind)) + " schema",
                            key);
        }
      }
      for (auto name : required) {
        if (!obj.contains(name)) {
          throw SchemaError("line " + std::to_string(line_no) + ": missing field '" +
                                std::string(name) + "' for " + std::string(to_string(kind)) + " log",
                            std::string(name));
        }
      }
      InteractionRecord rec;
      rec.kind = kind;
      const auto& ts = obj["timestamp"];
      if (!ts.is_number_integer()) throw ArgumentError("timestamp is not an integer");
      rec.timestamp = ts.get<std::int64_t>();
      rec.pv_id = json_id(obj["pv_id"], "pv_id");
      rec.user_id = json_id(obj["user_id"], "user_id");
      rec.item_id = json_id(obj["item_id"], "item_id");
      if (kind == InteractionKind::browse) {
        const auto& pos = obj["position"];
        if (!pos.is_number_unsigned() && !(pos.is_number_integer() && pos.get<std::int64_t>() >= 0)) {
          throw ArgumentError("position is not a non-negative integer");
        }
        if (pos.get<std::uint64_t>() > UINT32_MAX) throw ArgumentError("position out of range");
        rec.position = pos.get<std::uint32_t>();
        const auto& c = obj["clicked"];
        if (c.is_boolean()) {
          rec.clicked = c.get<bool>();
        } else if (c.is_number_integer() && (c.get<std::int64_t>() == 0 || c.get<std::int64_t>() == 1)) {
          rec.clicked = c.get<std::int64_t>() == 1;
        } else {
          throw ArgumentError("clicked must be 0 or 1");
        }
      } else {
        const auto& p = obj["price"];
        if (!p.is_number()) throw ArgumentError("price is not a number");
        rec.price = p.get<double>();
      }
      rec.validate();
      on_record(std::move(rec));
    } catch (const ArgumentError& e) {
      if (!options.lenient) throw ParseError(e.what(), line_no);
      ++skipped;
    }
  }
  return skipped;
}

}  // namespace

std::string_view to_string(InteractionKind kind) noexcept {
  switch (kind) {
    case InteractionKind::browse: return "browse";
    case InteractionKind::click: return "click";
    case InteractionKind::purchase: return "purchase";
  }
  return "unknown";
}

InteractionKind parse_kind(std::string_view text) {
  if (text == "browse") return InteractionKind::browse;
  if (text == "click") return InteractionKind::click;
  if (text == "purchase") return InteractionKind::purchase;
  throw ArgumentError("unknown interaction kind '" + std::string(text) + "'");
}

LogFormat parse_format(std::string_view text) {
  if (text == "csv") return LogFormat::csv;
  if (text == "jsonl") return LogFormat::jsonl;
  throw ArgumentError("unknown log format '" + std::string(text) + "'");
}

std::span<const std::string_view> log_columns(InteractionKind kind) noexcept {
  if (kind == InteractionKind::browse) return kBrowseColumns;
  return kActionColumns;
}

void InteractionRecord::validate() const {
  if (timestamp <= 0) throw ArgumentError("timestamp must be positive");
  if (pv_id.empty()) throw ArgumentError("pv_id is empty");
  if (user_id.empty()) throw ArgumentError("user_id is empty");
  if (item_id.empty()) throw ArgumentError("item_id is empty");
  if (kind == InteractionKind::browse) {
    if (!position || !clicked) throw ArgumentError("browse record needs position and clicked");
    if (price) throw ArgumentError("browse record must not carry a price");
  } else {
    if (!price) throw ArgumentError("click/purchase record needs a price");
    if (position || clicked) throw ArgumentError("click/purchase record must not carry position/clicked");
    if (!std::isfinite(*price) || *price < 0) throw ArgumentError("price must be a finite non-negative number");
  }
}

ParseResult parse_log(InteractionKind kind, std::istream& in, LogFormat format,
                      ParseOptions options) {
  ParseResult result;
  auto push = [&](InteractionRecord&& r) { result.records.push_back(std::move(r)); };
  result.skipped = format == LogFormat::csv ? read_csv(kind, in, options, push)
                                            : read_jsonl(kind, in, options, push);
  return result;
}

ParseResult parse_log_file(InteractionKind kind, const std::string& path, LogFormat format,
                           ParseOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return parse_log(kind, in, format, options);
}

void write_log(InteractionKind kind, std::span<const InteractionRecord> records, std::ostream& out,
               LogFormat format) {
  const auto columns = log_columns(kind);
  if (format == LogFormat::csv) {
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
  }
  std::string row;
  for (const auto& r : records) {
    if (r.kind != kind) throw ArgumentError("record kind does not match log kind");
    r.validate();
    if (format == LogFormat::csv) {
      row.clear();
      row += std::to_string(r.timestamp);
      row += ',';
      detail::append_csv_cell(row, r.pv_id);
      row += ',';
      detail::append_csv_cell(row, r.user_id);
      row += ',';
      detail::append_csv_cell(row, r.item_id);
      row += ',';
      if (kind == InteractionKind::browse) {
        row += std::to_string(*r.position);
        row += ',';
        row += *r.clicked ? '1' : '0';
      } else {
        row += detail::format_double(*r.price);
      }
      row += '\n';
      out << row;
    } else {
      nlohmann::ordered_json obj;
      obj["timestamp"] = r.timestamp;
      obj["pv_id"] = r.pv_id;
      obj["user_id"] = r.user_id;
      obj["item_id"] = r.item_id;
      if (kind == InteractionKind::browse) {
        obj["position"] = *r.position;
        obj["clicked"] = *r.clicked ? 1 : 0;
      } else {
        obj["price"] = *r.price;
      }
      out << obj.dump() << '\n';
    }
  }
}

bool PageView::any_clicked() const noexcept {
  return std::any_of(items.begin(), items.end(), [](const PageItem& i) { return i.clicked; });
}

PageViewIndex group_page_views(std::span<const InteractionRecord> browse_records) {
  struct Pending {
    PageView pv;
    std::size_t first_row;
  };
  std::unordered_map<std::string_view, std::size_t> by_pv;
  std::vector<Pending> pending;
  for (std::size_t row = 0; row < browse_records.size(); ++row) {
    const auto& r = browse_records[row];
    if (r.kind != InteractionKind::browse || !r.position || !r.clicked) {
      throw ArgumentError("group_page_views expects browse records only");
    }
    auto [it, inserted] = by_pv.try_emplace(r.pv_id, pending.size());
    if (inserted) {
      Pending p;
      p.pv.pv_id = r.pv_id;
      p.pv.user_id = r.user_id;
      p.pv.start_time = r.timestamp;
      p.first_row = row;
      pending.push_back(std::move(p));
    }
    auto& p = pending[it->second];
    if (p.pv.user_id != r.user_id) {
      throw IntegrityError("page view '" + r.pv_id + "' spans users '" + p.pv.user_id + "' and '" +
                           r.user_id + "'");
    }
    p.pv.start_time = std::min(p.pv.start_time, r.timestamp);
    p.pv.items.push_back(PageItem{r.item_id, *r.position, *r.clicked});
  }

  for (auto& p : pending) {
    auto& items = p.pv.items;
    std::sort(items.begin(), items.end(), [](const PageItem& a, const PageItem& b) {
      return a.position < b.position;
    });
    auto dup = std::adjacent_find(items.begin(), items.end(), [](const PageItem& a, const PageItem& b) {
      return a.position == b.position;
    });
    if (dup != items.end()) {
      throw IntegrityError("page view '" + p.pv.pv_id + "' has duplicate position " +
                           std::to_string(dup->position));
    }
  }
  // Start time ascending; ties fall back to the row where the PV first appeared.
  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.pv.start_time != b.pv.start_time) return a.pv.start_time < b.pv.start_time;
    return a.first_row < b.first_row;
  });

  PageViewIndex index;
  for (auto& p : pending) index[p.pv.user_id].push_back(std::move(p.pv));
  return index;
}

}  // namespace echoaudit
