#ifndef MODEX_CONFORMANCE_HPP
#define MODEX_CONFORMANCE_HPP

#include <span>
#include <string>
#include <vector>

#include "modex/schema.hpp"
#include "modex/store.hpp"

namespace modex {

enum class ViolationKind {
  ModelTyping,
  ElementTyping,
  PropertyType,
  Multiplicity,
  NameUniqueness,
  UnresolvedRef,
};

std::string_view violationName(ViolationKind k);

struct Violation {
  std::string elementQName;
  std::string property; // "" for element-level findings
  ViolationKind kind;
  std::string message;
};

struct ConformanceReport {
  std::vector<Violation> violations;
  bool conforms() const { return violations.empty(); }

  /// One line per violation: qname, property, kind, message, tab-separated.
  std::string render() const;
};

/// Checks the typing relation m : s — model typing, element typing, property
/// conformance — plus local-name uniqueness. Pure; reads a model snapshot.
/// Instance-reference values are only required to be well-formed paths.
ConformanceReport conforms(const Model& m, const TypeSchema& s);

/// Violations of one value against a declared (type, multiplicity) pair.
std::vector<ViolationKind> checkValue(const Value& v, const TypeDescriptor* t, Mult mult);

/// Resolves every stored qualified-name reference of `weaving` against the
/// given context models and checks the declared target types. Absolute paths
/// address context models by their local name.
ConformanceReport crossModelIntegrity(const Model& weaving, std::span<Model* const> context);

} // namespace modex

#endif
