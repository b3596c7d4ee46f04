#ifndef MODEX_SYNTAX_SERIALIZE_HPP
#define MODEX_SYNTAX_SERIALIZE_HPP

#include <string>

#include "modex/store.hpp"
#include "modex/transform.hpp"

namespace modex::syntax {

/// Deterministic ground-expression text for a model: elements in document
/// order, attributes in property-declaration order, 2-space indentation,
/// LF line endings. Parsing and evaluating the output reproduces a
/// structurally equal model.
std::string serializeModel(const Model& m);

/// Trace rendering over the built-in trace schema. The timestamp is omitted
/// whenever `emitTimestamp` is off.
std::string serializeTrace(const TraceModel& trace, bool emitTimestamp);

} // namespace modex::syntax

#endif
