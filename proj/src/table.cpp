#include "hinet/table.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <unordered_set>

namespace hinet {

std::vector<ColumnSpec> columns_for_node(const SchemaGraph& schema,
                                         NodeTypeId node) {
  std::vector<ColumnSpec> columns;
  for (PropertyTypeId pid : schema.properties_of(node)) {
    const auto& prop = schema.property(pid);
    auto [base, args] = parse_sensor_ref(prop.sensor);
    if (base != "attr" || args.size() != 1) continue;
    ColumnSpec col;
    col.name = args[0];
    col.kind = prop.kind;
    col.element_kind = prop.element_kind;
    col.ordered = prop.ordered;
    columns.push_back(std::move(col));
  }
  return columns;
}

namespace {

std::optional<std::int64_t> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

Value parse_scalar(const std::string& cell, ValueKind kind, std::size_t line,
                   const std::string& column) {
  switch (kind) {
    case ValueKind::Text: return Value::text(cell);
    case ValueKind::Int: {
      auto v = parse_int(cell);
      if (!v)
        raise(ErrorCode::ParseFailure, "line " + std::to_string(line) +
                                           ", column '" + column +
                                           "': not an Int: '" + cell + "'");
      return Value::integer(*v);
    }
    case ValueKind::Real: {
      auto v = parse_double(cell);
      if (!v)
        raise(ErrorCode::ParseFailure, "line " + std::to_string(line) +
                                           ", column '" + column +
                                           "': not a Real: '" + cell + "'");
      return Value::real(*v);
    }
    case ValueKind::Bool: {
      if (cell == "true" || cell == "1") return Value::boolean(true);
      if (cell == "false" || cell == "0") return Value::boolean(false);
      raise(ErrorCode::ParseFailure, "line " + std::to_string(line) +
                                         ", column '" + column +
                                         "': not a Bool: '" + cell + "'");
    }
    case ValueKind::List:
      raise(ErrorCode::ParseFailure, "nested list cell");
  }
  raise(ErrorCode::ParseFailure, "unknown kind");
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace

Value parse_cell(const std::string& cell, const ColumnSpec& column,
                 std::size_t line) {
  if (column.kind != ValueKind::List)
    return parse_scalar(cell, column.kind, line, column.name);
  std::vector<Value> items;
  if (!cell.empty())
    for (const std::string& part : split(cell, ';'))
      items.push_back(parse_scalar(part, column.element_kind, line, column.name));
  return Value::list(column.element_kind, std::move(items), column.ordered);
}

std::vector<NodeInstance> read_table(const TableSource& source,
                                     const std::vector<ColumnSpec>& columns) {
  std::ifstream in(source.path);
  if (!in)
    raise(ErrorCode::IoError, "cannot open '" + source.path.string() + "'");

  auto next_line = [&](std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  std::string line;
  if (!next_line(line))
    raise(ErrorCode::ParseFailure,
          "'" + source.path.string() + "' is empty (missing header)");
  std::vector<std::string> header = split(line, source.delimiter);
  std::unordered_set<std::string> header_names(header.begin(), header.end());
  if (header_names.size() != header.size())
    raise(ErrorCode::ParseFailure,
          "'" + source.path.string() + "' has duplicate header names");

  std::vector<ColumnSpec> layout;
  layout.reserve(header.size());
  for (const std::string& name : header) {
    ColumnSpec spec;
    spec.name = name;
    for (const ColumnSpec& c : columns)
      if (c.name == name) spec = c;
    layout.push_back(std::move(spec));
  }

  std::vector<NodeInstance> instances;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 1;
  while (next_line(line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, source.delimiter);
    if (cells.size() != header.size())
      raise(ErrorCode::RaggedRow,
            "line " + std::to_string(line_no) + ": expected " +
                std::to_string(header.size()) + " cells, found " +
                std::to_string(cells.size()));
    NodeInstance inst;
    inst.id = cells[0];
    if (inst.id.empty())
      raise(ErrorCode::ParseFailure,
            "line " + std::to_string(line_no) + ": empty id");
    if (!seen_ids.insert(inst.id).second)
      raise(ErrorCode::DuplicateId, "line " + std::to_string(line_no) +
                                        ": duplicate id '" + inst.id + "'");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      Value v = c == 0 && layout[c].kind == ValueKind::Text
                    ? Value::text(cells[c])
                    : parse_cell(cells[c], layout[c], line_no);
      inst.attrs.emplace(layout[c].name, std::move(v));
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

}  // namespace hinet
