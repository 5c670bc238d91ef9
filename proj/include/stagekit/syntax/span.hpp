#pragma once

#include <memory>
#include <string>

namespace stagekit::syntax {

// 1-based, end column exclusive.
struct SourceSpan {
  std::shared_ptr<const std::string> file;
  int start_line = 1;
  int start_col = 1;
  int end_line = 1;
  int end_col = 1;

  const std::string& file_name() const;
  bool valid() const;
  std::string to_string() const;  // "<file>:<line>:<col>"

  friend bool operator==(const SourceSpan& a, const SourceSpan& b) {
    return a.file_name() == b.file_name() && a.start_line == b.start_line &&
           a.start_col == b.start_col && a.end_line == b.end_line && a.end_col == b.end_col;
  }
};

}  // namespace stagekit::syntax
