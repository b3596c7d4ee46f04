#ifndef MODEX_TYPES_HPP
#define MODEX_TYPES_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace modex {

class TypeSchema;
class TypeDescriptor;

enum class TypeKind { Base, Entity, Array, Optional, Ref, InstanceRef };

enum class Mult { One, ZeroOrOne, ZeroOrMore, OneOrMore };

std::string_view multName(Mult m);
bool multIsMany(Mult m);

struct Property {
  std::string name;
  const TypeDescriptor* type = nullptr;
  Mult mult = Mult::One;
};

/// Ordered map from property name to (type, multiplicity). Declaration order
/// is significant and preserved.
class PropertySpec {
public:
  PropertySpec() = default;
  PropertySpec(std::initializer_list<Property> props);

  // Throws on duplicate names.
  PropertySpec& add(std::string name, const TypeDescriptor* type, Mult mult = Mult::One);

  const Property* find(std::string_view name) const;
  size_t size() const { return props_.size(); }
  bool empty() const { return props_.empty(); }
  auto begin() const { return props_.begin(); }
  auto end() const { return props_.end(); }

private:
  std::vector<Property> props_;
};

/// A node in the type universe: base type, entity type, array, optional,
/// named forward reference, or instance reference (qualified names as data).
class TypeDescriptor {
public:
  TypeKind kind() const { return kind_; }
  bool isEntity() const { return kind_ == TypeKind::Entity; }

  // Base and Entity.
  const std::string& name() const { return name_; }

  // Entity only.
  const TypeDescriptor* parent() const { return parent_; }
  const PropertySpec& ownProps() const { return ownProps_; }
  const std::string& schemaId() const { return schemaId_; }
  const TypeSchema* owner() const { return owner_; }

  // Array and Optional.
  const TypeDescriptor* elem() const { return elem_; }

  // Ref and InstanceRef: (target schema name, target type name).
  const std::string& targetSchema() const { return schemaId_; }
  const std::string& targetName() const { return name_; }

  std::string describe() const;

private:
  friend class TypeSchema;
  friend class TypeUniverse;
  friend const TypeDescriptor* makeEntity(std::string_view, PropertySpec, TypeSchema&);
  friend const TypeDescriptor* makeSubtype(const TypeDescriptor*, std::string_view, PropertySpec,
                                           TypeSchema&);
  TypeDescriptor() = default;

  TypeKind kind_ = TypeKind::Base;
  std::string name_;
  std::string schemaId_;
  const TypeDescriptor* parent_ = nullptr;
  const TypeDescriptor* elem_ = nullptr;
  PropertySpec ownProps_;
  const TypeSchema* owner_ = nullptr;
};

// --- type constructors -------------------------------------------------

// The base-type universe is fixed to string, number, and boolean.
// Unknown names raise UnknownBaseType. Idempotent: one canonical
// descriptor per name.
const TypeDescriptor* makeBase(std::string_view name);
bool isKnownBase(std::string_view name);

// Entity constructors register the descriptor in the given schema and
// reject duplicate (schema, name) pairs.
const TypeDescriptor* makeEntity(std::string_view name, PropertySpec props, TypeSchema& schema);
const TypeDescriptor* makeSubtype(const TypeDescriptor* parent, std::string_view name,
                                  PropertySpec extraProps, TypeSchema& schema);

// Wrapper constructors are interned globally: the same argument yields the
// same descriptor identity.
const TypeDescriptor* makeArray(const TypeDescriptor* elem);
const TypeDescriptor* makeOptional(const TypeDescriptor* elem);
const TypeDescriptor* makeRef(std::string_view schemaName, std::string_view typeName);
const TypeDescriptor* makeIRef(std::string_view schemaName, std::string_view entityName);

// --- subtype relation ---------------------------------------------------

// Entity identity is the (schemaId, name) pair.
bool sameEntity(const TypeDescriptor* a, const TypeDescriptor* b);

/// True iff t2 is reachable from t1 along parent links (reflexive).
/// Both arguments must be resolved entity descriptors.
bool isSubtype(const TypeDescriptor* t1, const TypeDescriptor* t2);

/// Union of own and all ancestors' properties, ancestors first,
/// declaration order within each level.
std::vector<Property> allProps(const TypeDescriptor* entity);

} // namespace modex

#endif
