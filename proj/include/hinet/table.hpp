#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hinet/instance.hpp"
#include "hinet/schema.hpp"

namespace hinet {

// Delimiter-separated table: header row, first column is the instance id,
// list cells use ';' between elements.
struct TableSource {
  std::filesystem::path path;
  char delimiter = ',';
};

struct ColumnSpec {
  std::string name;
  ValueKind kind = ValueKind::Text;
  ValueKind element_kind = ValueKind::Text;  // for kind == List
  bool ordered = false;
};

// Column kinds for a node type, derived from its attr()/property
// declarations; columns without a declared kind read as Text.
std::vector<ColumnSpec> columns_for_node(const SchemaGraph& schema,
                                         NodeTypeId node);

// One instance per row. Errors carry 1-based line numbers: RaggedRow,
// DuplicateId, ParseFailure(line, column name).
std::vector<NodeInstance> read_table(const TableSource& source,
                                     const std::vector<ColumnSpec>& columns);

Value parse_cell(const std::string& cell, const ColumnSpec& column,
                 std::size_t line);

}  // namespace hinet
