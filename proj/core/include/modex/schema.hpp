#ifndef MODEX_SCHEMA_HPP
#define MODEX_SCHEMA_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "modex/errors.hpp"
#include "modex/types.hpp"

namespace modex {

struct InversePair {
  const TypeDescriptor* entityA = nullptr;
  std::string propA;
  const TypeDescriptor* entityB = nullptr;
  std::string propB;
};

struct ValidationIssue {
  Err code;
  std::string typeName;   // offending type ("" for schema-level issues)
  std::string propName;   // offending property, if any
  std::string message;
};

struct ValidationResult {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;

  bool ok() const { return errors.empty(); }
  std::string summary() const;
};

/// A metamodel: a named, ordered set of types with a designated model type.
/// Descriptors built for a schema are owned by it and are pointer-stable.
class TypeSchema {
public:
  explicit TypeSchema(std::string name);
  TypeSchema(const TypeSchema&) = delete;
  TypeSchema& operator=(const TypeSchema&) = delete;

  const std::string& name() const { return name_; }

  /// Declared entity types in declaration order.
  std::span<const TypeDescriptor* const> types() const { return types_; }

  const TypeDescriptor* modelType() const { return modelType_; }
  void setModelType(const TypeDescriptor* t);

  const TypeDescriptor* findEntity(std::string_view name) const;

  void addInversePair(const TypeDescriptor* entityA, std::string propA,
                      const TypeDescriptor* entityB, std::string propB);
  const std::vector<InversePair>& inversePairs() const { return inversePairs_; }

  bool validated() const { return validated_; }
  bool universal() const { return universal_; }

  /// Entity set after validation: declared entities plus ref-resolved ones.
  bool containsEntity(const TypeDescriptor* t) const;

  /// Resolve a Ref descriptor against this schema's resolution map (built by
  /// validateSchema). Non-ref descriptors pass through; unresolved refs
  /// throw UnresolvedReference.
  const TypeDescriptor* resolved(const TypeDescriptor* t) const;

  /// Resolved property list of one of this schema's entities (cached by
  /// validation; computed on the fly otherwise).
  const std::vector<Property>& resolvedProps(const TypeDescriptor* entity) const;

  /// Value types encountered during validation (wrappers and bases), in
  /// first-use order.
  std::span<const TypeDescriptor* const> valueTypes() const { return valueTypes_; }

private:
  friend const TypeDescriptor* makeEntity(std::string_view, PropertySpec, TypeSchema&);
  friend const TypeDescriptor* makeSubtype(const TypeDescriptor*, std::string_view,
                                           PropertySpec, TypeSchema&);
  friend ValidationResult validateSchema(TypeSchema&, std::span<const TypeSchema* const>);
  friend TypeSchema& universalSchema();
  friend TypeSchema& abstractSchema();

  const TypeDescriptor* adopt(std::unique_ptr<TypeDescriptor> d);

  std::string name_;
  std::vector<std::unique_ptr<TypeDescriptor>> owned_;
  std::vector<const TypeDescriptor*> types_;
  const TypeDescriptor* modelType_ = nullptr;
  std::vector<InversePair> inversePairs_;
  bool validated_ = false;
  bool universal_ = false;
  std::unordered_map<const TypeDescriptor*, const TypeDescriptor*> refTargets_;
  std::unordered_set<const TypeDescriptor*> entitySet_;
  std::vector<const TypeDescriptor*> valueTypes_;
  mutable std::unordered_map<const TypeDescriptor*, std::vector<Property>> propsCache_;
};

/// Resolves forward references and checks the closure conditions. A schema
/// is usable for evaluation only after passing. `linked` supplies other
/// schemas visible for cross-schema references; the built-in abstract
/// schema is always visible.
ValidationResult validateSchema(TypeSchema& schema,
                                std::span<const TypeSchema* const> linked = {});

/// Child-placement policy shared by parsing, serialization, and provenance
/// tracking: the property a child element of type `child` connects through
/// under a parent of type `parent`. Children of model parents fall back to
/// namespace membership (empty string) when no sequence-valued slot admits
/// them; single-valued properties of models connect via attributes instead.
/// nullopt means no unambiguous placement exists.
std::optional<std::string> routedChildSlot(const TypeDescriptor* parent, bool parentIsModel,
                                           const TypeDescriptor* child);

/// Placement of computed children: the unique sequence-valued entity slot.
std::optional<std::string> routedCompSlot(const TypeDescriptor* parent, bool parentIsModel);

} // namespace modex

#endif
