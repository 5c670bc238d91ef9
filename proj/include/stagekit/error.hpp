#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stagekit/syntax/span.hpp"

namespace stagekit {

// Error kinds double as the "error class" used for error-parity checks.
enum class ErrorKind {
  SyntaxError,
  IndentationError,
  InternalError,
  MissingBinding,
  TypeMismatch,
  IntegrityError,
  ConversionError,
  DirectiveError,
  ListPatternError,
  BranchMismatch,
  UndefinedBranchOutput,
  UndefinedSymbol,
  LoopVariantType,
  NonBooleanTest,
  NotIterable,
  TypeError,
  DivisionByZero,
  EmptyPop,
  ElementTypeUnset,
  IndexOutOfRange,
  UnknownCallee,
  RecursionDepthExceeded,
  AssertionFailed,
  ValidationError,
  RuntimeGraphError,
  IterationLimitExceeded,
  NonDifferentiable,
  WhileNotDifferentiable,
  SignatureMismatch,
  ShapeMismatch,
  DtypeMismatch,
  StagedCoercion,
  UsageError,
};

std::string_view to_string(ErrorKind kind);

enum class Phase { Conversion, Staging, Runtime };

std::string_view to_string(Phase phase);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message,
        std::optional<syntax::SourceSpan> span = std::nullopt,
        std::string pass = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }
  const std::optional<syntax::SourceSpan>& span() const noexcept { return span_; }
  const std::string& pass() const noexcept { return pass_; }

  // Attaches a span only if none is set yet; the innermost location wins.
  Error& with_span(const syntax::SourceSpan& span);
  Error& with_pass(std::string pass);
  Error& add_frame(std::string frame);
  const std::string& frames() const noexcept { return frames_; }

 private:
  void refresh();

  ErrorKind kind_;
  std::string message_;
  std::optional<syntax::SourceSpan> span_;
  std::string pass_;
  std::vector<std::pair<std::string, int>> frame_list_;  // consecutive repeats folded
  std::string frames_;
  std::string what_;
};

// One diagnostic line: "<file>:<line>:<col>: <phase>: <message>". Without a
// span the location is just `file`.
std::string diagnostic(const Error& e, Phase phase, const std::string& file);

[[noreturn]] void fail(ErrorKind kind, std::string message,
                       std::optional<syntax::SourceSpan> span = std::nullopt);

}  // namespace stagekit
