#include "mapctr/schema.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mapctr/common.hpp"

namespace mapctr {

FieldKind field_kind_from_string(const std::string& s) {
  if (s == "categorical") return FieldKind::categorical;
  if (s == "numeric-log-discretized") return FieldKind::numeric_log_discretized;
  if (s == "timestamp-expand") return FieldKind::timestamp_expand;
  if (s == "drop") return FieldKind::drop;
  if (s == "label") return FieldKind::label;
  throw Error::config("unknown field kind '" + s + "'");
}

const char* field_kind_to_string(FieldKind k) {
  switch (k) {
    case FieldKind::categorical: return "categorical";
    case FieldKind::numeric_log_discretized: return "numeric-log-discretized";
    case FieldKind::timestamp_expand: return "timestamp-expand";
    case FieldKind::drop: return "drop";
    case FieldKind::label: return "label";
  }
  return "?";
}

Schema Schema::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error::config(std::string("schema JSON parse failure: ") + e.what());
  }
  Schema s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "delimiter") {
      std::string d = it.value().get<std::string>();
      if (d == "tab" || d == "\\t" || d == "\t")
        s.delimiter = '\t';
      else if (d.size() == 1)
        s.delimiter = d[0];
      else
        throw Error::config("schema: delimiter must be one character or \"tab\"");
    } else if (key == "has_header") {
      s.has_header = it.value().get<bool>();
    } else if (key == "columns") {
      for (const auto& col : it.value()) {
        ColumnSchema c;
        c.name = col.at("name").get<std::string>();
        c.kind = field_kind_from_string(col.at("kind").get<std::string>());
        for (auto cit = col.begin(); cit != col.end(); ++cit)
          if (cit.key() != "name" && cit.key() != "kind")
            throw Error::config("schema: unknown column key '" + cit.key() + "'");
        s.columns.push_back(std::move(c));
      }
    } else {
      throw Error::config("schema: unknown key '" + key + "'");
    }
  }
  if (s.columns.empty()) throw Error::config("schema: no columns");
  std::size_t labels = 0;
  for (const auto& c : s.columns)
    if (c.kind == FieldKind::label) ++labels;
  if (labels != 1) throw Error::config("schema: exactly one column must have kind \"label\"");
  return s;
}

Schema Schema::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("cannot open schema file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::size_t Schema::label_column() const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].kind == FieldKind::label) return i;
  throw Error::config("schema has no label column");
}

std::size_t Schema::num_fields() const {
  std::size_t f = 0;
  for (const auto& c : columns) {
    switch (c.kind) {
      case FieldKind::categorical:
      case FieldKind::numeric_log_discretized: f += 1; break;
      case FieldKind::timestamp_expand: f += 4; break;
      case FieldKind::drop:
      case FieldKind::label: break;
    }
  }
  return f;
}

std::vector<std::string> Schema::field_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) {
    switch (c.kind) {
      case FieldKind::categorical:
      case FieldKind::numeric_log_discretized: names.push_back(c.name); break;
      case FieldKind::timestamp_expand:
        names.push_back(c.name + "_weekday");
        names.push_back(c.name + "_day_of_month");
        names.push_back(c.name + "_hour_of_day");
        names.push_back(c.name + "_is_weekend");
        break;
      case FieldKind::drop:
      case FieldKind::label: break;
    }
  }
  return names;
}

std::string discretize_numeric(std::string_view token) {
  if (token.empty()) return "NA";
  std::string buf(token);
  char* end = nullptr;
  double v = std::strtod(buf.c_str(), &end);
  if (end == buf.c_str() || *end != '\0')
    throw Error::data("non-numeric value '" + buf + "' in numeric column");
  if (v <= 2.0) return std::to_string(static_cast<long long>(v));
  double lnv = std::log(v);
  return std::to_string(static_cast<long long>(std::floor(lnv * lnv)));
}

std::array<std::string, 4> expand_timestamp(std::string_view token) {
  if (token.size() != 8)
    throw Error::data("timestamp '" + std::string(token) + "' is not in YYMMDDHH form");
  for (char c : token)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw Error::data("timestamp '" + std::string(token) + "' is not in YYMMDDHH form");
  auto two = [&](int at) { return (token[at] - '0') * 10 + (token[at + 1] - '0'); };
  int yy = two(0), mm = two(2), dd = two(4), hh = two(6);
  using namespace std::chrono;
  year_month_day ymd{year{2000 + yy}, month{static_cast<unsigned>(mm)}, day{static_cast<unsigned>(dd)}};
  if (!ymd.ok() || hh > 23)
    throw Error::data("timestamp '" + std::string(token) + "' is not a valid date/hour");
  weekday wd{sys_days{ymd}};
  unsigned w = wd.c_encoding();  // 0 = Sunday
  bool weekend = (w == 0 || w == 6);
  return {std::to_string(w), std::to_string(dd), std::to_string(hh), weekend ? "1" : "0"};
}

std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') cells.back().pop_back();
  return cells;
}

void transform_row(const std::vector<std::string>& cells, const Schema& schema,
                   std::size_t line_no, std::vector<std::string>& field_keys, std::uint8_t& label) {
  if (cells.size() != schema.columns.size())
    throw Error::data("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(schema.columns.size()) + " columns, got " +
                      std::to_string(cells.size()));
  field_keys.clear();
  bool have_label = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const ColumnSchema& c = schema.columns[i];
    try {
      switch (c.kind) {
        case FieldKind::categorical:
          field_keys.push_back(cells[i]);
          break;
        case FieldKind::numeric_log_discretized:
          field_keys.push_back(discretize_numeric(cells[i]));
          break;
        case FieldKind::timestamp_expand: {
          auto parts = expand_timestamp(cells[i]);
          for (auto& p : parts) field_keys.push_back(std::move(p));
          break;
        }
        case FieldKind::drop:
          break;
        case FieldKind::label: {
          if (cells[i] == "0")
            label = 0;
          else if (cells[i] == "1")
            label = 1;
          else
            throw Error::data("label must be 0 or 1, got '" + cells[i] + "'");
          have_label = true;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.kind() == Error::Kind::data && std::string(e.what()).find("line ") != 0)
        throw Error::data("line " + std::to_string(line_no) + ": " + e.what());
      throw;
    }
  }
  if (!have_label) throw Error::data("line " + std::to_string(line_no) + ": no label column value");
}

}  // namespace mapctr
