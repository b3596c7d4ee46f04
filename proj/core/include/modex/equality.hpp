#ifndef MODEX_EQUALITY_HPP
#define MODEX_EQUALITY_HPP

#include <string>

#include "modex/store.hpp"

namespace modex {

/// Structural equality of elements and models across stores: same local
/// names, types (by schema-qualified name), property values with element
/// references compared by qualified name, and the same element order in
/// every namespace. Absent values and missing entries are identified.
/// When `why` is given, the first difference found is described there.
bool structurallyEqual(const Element& a, const Element& b, std::string* why = nullptr);

} // namespace modex

#endif
