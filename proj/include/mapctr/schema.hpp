#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mapctr {

enum class FieldKind {
  categorical,
  numeric_log_discretized,
  timestamp_expand,
  drop,
  label,
};

FieldKind field_kind_from_string(const std::string& s);
const char* field_kind_to_string(FieldKind k);

struct ColumnSchema {
  std::string name;
  FieldKind kind = FieldKind::categorical;
};

// One entry per raw input column; exactly one column must carry the label.
// timestamp-expand columns contribute four derived fields each.
struct Schema {
  std::vector<ColumnSchema> columns;
  bool has_header = false;
  char delimiter = ',';

  static Schema from_json_text(const std::string& text);
  static Schema from_json_file(const std::string& path);

  std::size_t label_column() const;           // throws if missing
  std::size_t num_fields() const;             // derived field count F
  std::vector<std::string> field_names() const;
};

// Log discretization for numeric columns: missing -> "NA", v <= 2 -> the
// integer itself, otherwise floor(ln(v)^2).
std::string discretize_numeric(std::string_view token);

// "YYMMDDHH" -> { weekday 0-6 (0 = Sunday), day_of_month, hour_of_day,
// is_weekend 0/1 }, all as decimal category keys.
std::array<std::string, 4> expand_timestamp(std::string_view token);

// Splits one CSV record. No quoting support; delimiters inside values are
// not a thing in the targeted datasets.
std::vector<std::string> split_csv_line(const std::string& line, char delimiter);

// Applies the schema to one raw record: fills `field_keys` (size F) and the
// label. `line_no` is used for error messages only.
void transform_row(const std::vector<std::string>& cells, const Schema& schema,
                   std::size_t line_no, std::vector<std::string>& field_keys, std::uint8_t& label);

}  // namespace mapctr
