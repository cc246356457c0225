#pragma once

#include <stdexcept>
#include <string>

namespace todasurf {

/// Error while parsing structured text input (config files, CSV grids).
/// line/column are 1-based; -1 where not applicable.
struct ParseError : std::runtime_error {
  ParseError(std::string msg, int line_ = -1, int column_ = -1)
      : std::runtime_error(std::move(msg)), line(line_), column(column_) {}
  int line;
  int column;
};

}  // namespace todasurf
