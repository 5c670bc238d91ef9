#include "stagekit/error.hpp"

namespace stagekit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::IndentationError: return "IndentationError";
    case ErrorKind::InternalError: return "InternalError";
    case ErrorKind::MissingBinding: return "MissingBinding";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::IntegrityError: return "IntegrityError";
    case ErrorKind::ConversionError: return "ConversionError";
    case ErrorKind::DirectiveError: return "DirectiveError";
    case ErrorKind::ListPatternError: return "ListPatternError";
    case ErrorKind::BranchMismatch: return "BranchMismatch";
    case ErrorKind::UndefinedBranchOutput: return "UndefinedBranchOutput";
    case ErrorKind::UndefinedSymbol: return "UndefinedSymbol";
    case ErrorKind::LoopVariantType: return "LoopVariantType";
    case ErrorKind::NonBooleanTest: return "NonBooleanTest";
    case ErrorKind::NotIterable: return "NotIterable";
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::EmptyPop: return "EmptyPop";
    case ErrorKind::ElementTypeUnset: return "ElementTypeUnset";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::UnknownCallee: return "UnknownCallee";
    case ErrorKind::RecursionDepthExceeded: return "RecursionDepthExceeded";
    case ErrorKind::AssertionFailed: return "AssertionFailed";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::RuntimeGraphError: return "RuntimeGraphError";
    case ErrorKind::IterationLimitExceeded: return "IterationLimitExceeded";
    case ErrorKind::NonDifferentiable: return "NonDifferentiable";
    case ErrorKind::WhileNotDifferentiable: return "WhileNotDifferentiable";
    case ErrorKind::SignatureMismatch: return "SignatureMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DtypeMismatch: return "DtypeMismatch";
    case ErrorKind::StagedCoercion: return "StagedCoercion";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Error";
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Conversion: return "conversion";
    case Phase::Staging: return "staging";
    case Phase::Runtime: return "runtime";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string message, std::optional<syntax::SourceSpan> span,
             std::string pass)
    : std::runtime_error(std::string(to_string(kind))),
      kind_(kind),
      message_(std::move(message)),
      span_(std::move(span)),
      pass_(std::move(pass)) {
  refresh();
}

Error& Error::with_span(const syntax::SourceSpan& span) {
  if (!span_ && span.valid()) {
    span_ = span;
    refresh();
  }
  return *this;
}

Error& Error::with_pass(std::string pass) {
  if (pass_.empty()) {
    pass_ = std::move(pass);
    refresh();
  }
  return *this;
}

Error& Error::add_frame(std::string frame) {
  if (!frame_list_.empty() && frame_list_.back().first == frame) {
    ++frame_list_.back().second;
  } else {
    frame_list_.emplace_back(std::move(frame), 1);
  }
  frames_.clear();
  for (const auto& [f, n] : frame_list_) {
    if (!frames_.empty()) frames_ += " <- ";
    frames_ += f;
    if (n > 1) frames_ += " x" + std::to_string(n);
  }
  refresh();
  return *this;
}

void Error::refresh() {
  what_.clear();
  if (span_) what_ += span_->to_string() + ": ";
  if (!pass_.empty()) what_ += pass_ + ": ";
  what_ += std::string(to_string(kind_)) + ": " + message_;
  if (!frames_.empty()) what_ += " (in " + frames_ + ")";
  static_cast<std::runtime_error&>(*this) = std::runtime_error(what_);
}

std::string diagnostic(const Error& e, Phase phase, const std::string& file) {
  std::string out = e.span() ? e.span()->to_string() : file;
  out += ": " + std::string(to_string(phase)) + ": ";
  if (!e.pass().empty()) out += e.pass() + ": ";
  out += std::string(to_string(e.kind())) + ": " + e.message();
  if (!e.frames().empty()) out += " (in " + e.frames() + ")";
  return out;
}

void fail(ErrorKind kind, std::string message, std::optional<syntax::SourceSpan> span) {
  throw Error(kind, std::move(message), std::move(span));
}

}  // namespace stagekit
