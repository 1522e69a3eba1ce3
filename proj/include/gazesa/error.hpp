#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace gazesa {

// Every recoverable failure in the library is reported through this type.
// `what()` is a single machine-parsable line:
//   error kind=<kind> [file=<path>] [row=<n>] [column=<name>] message="<text>"
class Error : public std::runtime_error {
 public:
  enum class Kind { kInvalidArgument, kParse, kValidation, kIo, kModel, kRegistry };

  Error(Kind kind, std::string message, std::string file = {},
        std::optional<std::size_t> row = std::nullopt, std::string column = {});

  Kind kind() const { return kind_; }
  const std::string& message() const { return message_; }
  const std::string& file() const { return file_; }
  std::optional<std::size_t> row() const { return row_; }
  const std::string& column() const { return column_; }

  // Same error, with the file name attached (used when a parser is file-agnostic).
  Error with_file(const std::string& file) const;

 private:
  Kind kind_;
  std::string message_;
  std::string file_;
  std::optional<std::size_t> row_;
  std::string column_;
};

const char* kind_name(Error::Kind kind);

}  // namespace gazesa
