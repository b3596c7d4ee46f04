#ifndef MODEX_SYNTAX_MMX_HPP
#define MODEX_SYNTAX_MMX_HPP

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "modex/schema.hpp"

namespace modex::syntax {

struct Diagnostic {
  Err code;
  SourceSpan span;
  std::string message;
};

struct MmxResult {
  std::vector<std::unique_ptr<TypeSchema>> schemas;
  std::vector<Diagnostic> issues; // validation findings, with source spans

  bool ok() const { return issues.empty(); }
};

/// Parses one or more schema blocks and validates them. Grammar errors throw
/// SyntaxError; closure and well-formedness findings come back as issues.
/// `linked` supplies additional schemas visible to cross-schema references.
MmxResult parseMmx(std::string_view text, std::string_view filename,
                   std::span<const TypeSchema* const> linked = {});

} // namespace modex::syntax

#endif
