#ifndef MODEX_ERRORS_HPP
#define MODEX_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace modex {

// Error codes for operational failures and validation findings.
enum class Err {
  // type system
  UnknownBaseType,
  DuplicateTypeName,
  InvalidParent,
  PropertyShadowing,
  UnresolvedReference,
  ClosureViolation,
  MissingModelType,
  InvalidInversePair,
  // store
  DuplicateName,
  TypeNotInSchema,
  BadPropertyValue,
  InvalidSchema,
  UnknownElement,
  Unresolved,
  EmptyPath,
  EmptySegment,
  // expressions
  UnboundParameter,
  GuardExceeded,
  KappaTypeError,
  SlotArityError,
  MissingParameter,
  ParameterKindMismatch,
  // transformations
  AmbiguousOptions,
  DanglingSpecOption,
  InvalidSpecOption,
  MissingTopRule,
  NoApplicableRule,
  AmbiguousDispatch,
  SourceNotConforming,
  BadRuleResult,
  MalformedTrace,
  // syntax
  Syntax,
  UnknownTag,
  AttrOnRef,
  UnknownAttribute,
  UnknownSourceType,
  AmbiguousChild,
  UnknownSlot,
  UnknownRule,
  // io / cli
  Io,
};

std::string_view errName(Err e);

class ModexError : public std::runtime_error {
public:
  ModexError(Err code, const std::string& message)
      : std::runtime_error(std::string(errName(code)) + ": " + message), code_(code) {}

  Err code() const { return code_; }

private:
  Err code_;
};

// 1-based position of a token in a source file.
struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;
  int length = 0;

  std::string str() const;
};

class SyntaxError : public ModexError {
public:
  SyntaxError(Err code, SourceSpan span, const std::string& message)
      : ModexError(code, span.str() + ": " + message), span_(std::move(span)) {}

  const SourceSpan& span() const { return span_; }

private:
  SourceSpan span_;
};

} // namespace modex

#endif
