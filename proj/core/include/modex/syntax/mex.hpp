#ifndef MODEX_SYNTAX_MEX_HPP
#define MODEX_SYNTAX_MEX_HPP

#include <string_view>
#include <vector>

#include "modex/expr.hpp"

namespace modex::syntax {

/// The schemas a parsed unit resolves tags against. The built-in trace and
/// abstract schemas are always visible, after the listed ones. The schemas
/// must outlive every template parsed against the set.
struct LinkSet {
  std::vector<const TypeSchema*> schemas;

  /// Entity type for a tag name; null when unknown. Sets `ambiguous` when
  /// several linked schemas declare the name.
  const TypeDescriptor* findTag(std::string_view name, bool* ambiguous = nullptr) const;
};

/// Parses a template unit: an optional `params (...)` header followed by one
/// element. Tag, attribute, and child placement are resolved against `link`
/// at parse time; grammar and linking problems throw SyntaxError with spans.
TemplatePtr parseMex(std::string_view text, std::string_view filename, LinkSet link);

} // namespace modex::syntax

#endif
