#ifndef MODEX_SYNTAX_MTX_HPP
#define MODEX_SYNTAX_MTX_HPP

#include <functional>
#include <memory>
#include <span>
#include <string_view>

#include "modex/transform.hpp"

namespace modex::syntax {

/// Supplies the schemas behind a `from`/`to` schema reference (a file path
/// in the file-based loader). Each reference must yield exactly one schema.
using SchemaResolver =
    std::function<std::span<const TypeSchema* const>(const std::string& ref)>;

/// Parses a transformation unit and validates the resulting specification.
/// All problems, including specification-level ones, throw SyntaxError.
std::unique_ptr<TransformationSpec> parseMtx(std::string_view text, std::string_view filename,
                                             const SchemaResolver& resolve);

} // namespace modex::syntax

#endif
