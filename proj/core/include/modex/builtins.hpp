#ifndef MODEX_BUILTINS_HPP
#define MODEX_BUILTINS_HPP

#include "modex/schema.hpp"

namespace modex {

/// The abstract schema defines the two foundational entity types:
/// ModelElement (everything has a name) and Model (a named namespace).
/// Every user-defined entity ultimately subtypes one of them.
TypeSchema& abstractSchema();
const TypeDescriptor* modelElementType();
const TypeDescriptor* modelType();

/// The universal schema admits every entity type; it is the schema of the
/// store root. Conformance against it reduces to model typing and name
/// uniqueness.
TypeSchema& universalSchema();

/// Built-in weaving schema for execution traces: a TraceModel holds
/// TraceEntry elements whose properties store qualified names as data.
TypeSchema& traceSchema();
const TypeDescriptor* traceModelType();
const TypeDescriptor* traceEntryType();

bool isModelType(const TypeDescriptor* t);

} // namespace modex

#endif
