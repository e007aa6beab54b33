#pragma once

#include <stdexcept>
#include <string>

namespace cmrl {

// Every failure surfaced by the library. The message is a single line so the
// CLI can print it verbatim as a machine-parsable error.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace cmrl
