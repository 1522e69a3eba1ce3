#include "gazesa/error.hpp"

#include <sstream>

namespace gazesa {
namespace {

std::string render(Error::Kind kind, const std::string& message, const std::string& file,
                   std::optional<std::size_t> row, const std::string& column) {
  std::ostringstream out;
  out << "error kind=" << kind_name(kind);
  if (!file.empty()) out << " file=" << file;
  if (row) out << " row=" << *row;
  if (!column.empty()) out << " column=" << column;
  out << " message=\"";
  for (char c : message) {
    if (c == '"') {
      out << '\'';
    } else if (c == '\n') {
      out << ' ';
    } else {
      out << c;
    }
  }
  out << '"';
  return out.str();
}

}  // namespace

const char* kind_name(Error::Kind kind) {
  switch (kind) {
    case Error::Kind::kInvalidArgument:
      return "invalid_argument";
    case Error::Kind::kParse:
      return "parse";
    case Error::Kind::kValidation:
      return "validation";
    case Error::Kind::kIo:
      return "io";
    case Error::Kind::kModel:
      return "model";
    case Error::Kind::kRegistry:
      return "registry";
  }
  return "unknown";
}

Error::Error(Kind kind, std::string message, std::string file, std::optional<std::size_t> row,
             std::string column)
    : std::runtime_error(render(kind, message, file, row, column)),
      kind_(kind),
      message_(std::move(message)),
      file_(std::move(file)),
      row_(row),
      column_(std::move(column)) {}

Error Error::with_file(const std::string& file) const {
  return Error(kind_, message_, file, row_, column_);
}

}  // namespace gazesa
