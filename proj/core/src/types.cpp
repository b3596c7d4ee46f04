#include "modex/types.hpp"

#include <map>
#include <memory>
#include <mutex>

#include "modex/errors.hpp"
#include "modex/schema.hpp"

namespace modex {

std::string_view multName(Mult m) {
  switch (m) {
    case Mult::One: return "1";
    case Mult::ZeroOrOne: return "0..1";
    case Mult::ZeroOrMore: return "0..";
    case Mult::OneOrMore: return "1..";
  }
  return "?";
}

bool multIsMany(Mult m) { return m == Mult::ZeroOrMore || m == Mult::OneOrMore; }

std::string_view errName(Err e) {
  switch (e) {
    case Err::UnknownBaseType: return "UnknownBaseType";
    case Err::DuplicateTypeName: return "DuplicateTypeName";
    case Err::InvalidParent: return "InvalidParent";
    case Err::PropertyShadowing: return "PropertyShadowing";
    case Err::UnresolvedReference: return "UnresolvedReference";
    case Err::ClosureViolation: return "ClosureViolation";
    case Err::MissingModelType: return "MissingModelType";
    case Err::InvalidInversePair: return "InvalidInversePair";
    case Err::DuplicateName: return "DuplicateName";
    case Err::TypeNotInSchema: return "TypeNotInSchema";
    case Err::BadPropertyValue: return "BadPropertyValue";
    case Err::InvalidSchema: return "InvalidSchema";
    case Err::UnknownElement: return "UnknownElement";
    case Err::Unresolved: return "Unresolved";
    case Err::EmptyPath: return "EmptyPath";
    case Err::EmptySegment: return "EmptySegment";
    case Err::UnboundParameter: return "UnboundParameter";
    case Err::GuardExceeded: return "GuardExceeded";
    case Err::KappaTypeError: return "KappaTypeError";
    case Err::SlotArityError: return "SlotArityError";
    case Err::MissingParameter: return "MissingParameter";
    case Err::ParameterKindMismatch: return "ParameterKindMismatch";
    case Err::AmbiguousOptions: return "AmbiguousOptions";
    case Err::DanglingSpecOption: return "DanglingSpecOption";
    case Err::InvalidSpecOption: return "InvalidSpecOption";
    case Err::MissingTopRule: return "MissingTopRule";
    case Err::NoApplicableRule: return "NoApplicableRule";
    case Err::AmbiguousDispatch: return "AmbiguousDispatch";
    case Err::SourceNotConforming: return "SourceNotConforming";
    case Err::BadRuleResult: return "BadRuleResult";
    case Err::MalformedTrace: return "MalformedTrace";
    case Err::Syntax: return "SyntaxError";
    case Err::UnknownTag: return "UnknownTag";
    case Err::AttrOnRef: return "AttrOnRef";
    case Err::UnknownAttribute: return "UnknownAttribute";
    case Err::UnknownSourceType: return "UnknownSourceType";
    case Err::AmbiguousChild: return "AmbiguousChild";
    case Err::UnknownSlot: return "UnknownSlot";
    case Err::UnknownRule: return "UnknownRule";
    case Err::Io: return "IoError";
  }
  return "Error";
}

std::string SourceSpan::str() const {
  return file + ":" + std::to_string(line) + ":" + std::to_string(column);
}

PropertySpec::PropertySpec(std::initializer_list<Property> props) {
  for (const auto& p : props) add(p.name, p.type, p.mult);
}

PropertySpec& PropertySpec::add(std::string name, const TypeDescriptor* type, Mult mult) {
  if (find(name))
    throw ModexError(Err::DuplicateTypeName, "duplicate property \"" + name + "\"");
  props_.push_back(Property{std::move(name), type, mult});
  return *this;
}

const Property* PropertySpec::find(std::string_view name) const {
  for (const auto& p : props_)
    if (p.name == name) return &p;
  return nullptr;
}

std::string TypeDescriptor::describe() const {
  switch (kind_) {
    case TypeKind::Base: return name_;
    case TypeKind::Entity: return schemaId_ + "::" + name_;
    case TypeKind::Array: return elem_->describe() + "[]";
    case TypeKind::Optional: return "optional(" + elem_->describe() + ")";
    case TypeKind::Ref: return "ref(" + schemaId_ + "::" + name_ + ")";
    case TypeKind::InstanceRef: return "iref(" + schemaId_ + "::" + name_ + ")";
  }
  return "?";
}

// --- interned wrapper universe -------------------------------------------

// Named at namespace scope so it matches the friend declaration on
// TypeDescriptor; defined only in this translation unit.
class TypeUniverse {
public:
  static TypeUniverse& get() {
    static TypeUniverse u;
    return u;
  }

  static std::unique_ptr<TypeDescriptor> make() {
    return std::unique_ptr<TypeDescriptor>(new TypeDescriptor());
  }

  const TypeDescriptor* base(std::string_view name) {
    std::lock_guard lock(mu_);
    auto it = bases_.find(std::string(name));
    if (it != bases_.end()) return it->second;
    if (name != "string" && name != "number" && name != "boolean")
      throw ModexError(Err::UnknownBaseType, "no base type named \"" + std::string(name) + "\"");
    auto d = make();
    d->kind_ = TypeKind::Base;
    d->name_ = name;
    const TypeDescriptor* raw = d.get();
    owned_.push_back(std::move(d));
    bases_.emplace(std::string(name), raw);
    return raw;
  }

  const TypeDescriptor* wrap(TypeKind kind, const TypeDescriptor* elem) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(kind, elem);
    auto it = wrappers_.find(key);
    if (it != wrappers_.end()) return it->second;
    auto d = make();
    d->kind_ = kind;
    d->elem_ = elem;
    const TypeDescriptor* raw = d.get();
    owned_.push_back(std::move(d));
    wrappers_.emplace(key, raw);
    return raw;
  }

  const TypeDescriptor* named(TypeKind kind, std::string_view schema, std::string_view name) {
    std::lock_guard lock(mu_);
    auto key = std::make_tuple(kind, std::string(schema), std::string(name));
    auto it = named_.find(key);
    if (it != named_.end()) return it->second;
    auto d = make();
    d->kind_ = kind;
    d->schemaId_ = schema;
    d->name_ = name;
    const TypeDescriptor* raw = d.get();
    owned_.push_back(std::move(d));
    named_.emplace(std::move(key), raw);
    return raw;
  }

private:
  std::mutex mu_;
  std::vector<std::unique_ptr<TypeDescriptor>> owned_;
  std::map<std::string, const TypeDescriptor*> bases_;
  std::map<std::pair<TypeKind, const TypeDescriptor*>, const TypeDescriptor*> wrappers_;
  std::map<std::tuple<TypeKind, std::string, std::string>, const TypeDescriptor*> named_;
};

const TypeDescriptor* makeBase(std::string_view name) {
  return TypeUniverse::get().base(name);
}

bool isKnownBase(std::string_view name) {
  return name == "string" || name == "number" || name == "boolean";
}

const TypeDescriptor* makeArray(const TypeDescriptor* elem) {
  return TypeUniverse::get().wrap(TypeKind::Array, elem);
}

const TypeDescriptor* makeOptional(const TypeDescriptor* elem) {
  return TypeUniverse::get().wrap(TypeKind::Optional, elem);
}

const TypeDescriptor* makeRef(std::string_view schemaName, std::string_view typeName) {
  return TypeUniverse::get().named(TypeKind::Ref, schemaName, typeName);
}

const TypeDescriptor* makeIRef(std::string_view schemaName, std::string_view entityName) {
  return TypeUniverse::get().named(TypeKind::InstanceRef, schemaName, entityName);
}

// --- entity constructors ---------------------------------------------------

namespace {

std::unique_ptr<TypeDescriptor> newEntityDescriptor() {
  return TypeUniverse::make();
}

} // namespace

const TypeDescriptor* makeEntity(std::string_view name, PropertySpec props, TypeSchema& schema) {
  if (schema.findEntity(name))
    throw ModexError(Err::DuplicateTypeName,
                     "\"" + std::string(name) + "\" already declared in schema " + schema.name());
  auto d = newEntityDescriptor();
  d->kind_ = TypeKind::Entity;
  d->name_ = name;
  d->schemaId_ = schema.name();
  d->ownProps_ = std::move(props);
  d->owner_ = &schema;
  return schema.adopt(std::move(d));
}

const TypeDescriptor* makeSubtype(const TypeDescriptor* parent, std::string_view name,
                                  PropertySpec extraProps, TypeSchema& schema) {
  if (!parent || parent->kind() != TypeKind::Entity)
    throw ModexError(Err::InvalidParent,
                     "parent of \"" + std::string(name) + "\" is not an entity type");
  if (schema.findEntity(name))
    throw ModexError(Err::DuplicateTypeName,
                     "\"" + std::string(name) + "\" already declared in schema " + schema.name());
  for (const auto& inherited : allProps(parent))
    if (extraProps.find(inherited.name))
      throw ModexError(Err::PropertyShadowing,
                       "\"" + std::string(name) + "\" redeclares inherited property \"" +
                           inherited.name + "\"");
  auto d = newEntityDescriptor();
  d->kind_ = TypeKind::Entity;
  d->name_ = name;
  d->schemaId_ = schema.name();
  d->parent_ = parent;
  d->ownProps_ = std::move(extraProps);
  d->owner_ = &schema;
  return schema.adopt(std::move(d));
}

// --- subtype relation ----------------------------------------------------

bool sameEntity(const TypeDescriptor* a, const TypeDescriptor* b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->kind() == TypeKind::Entity && b->kind() == TypeKind::Entity &&
         a->schemaId() == b->schemaId() && a->name() == b->name();
}

bool isSubtype(const TypeDescriptor* t1, const TypeDescriptor* t2) {
  if (!t1 || !t2) return false;
  if (t1->kind() == TypeKind::Ref || t2->kind() == TypeKind::Ref)
    throw ModexError(Err::UnresolvedReference,
                     "isSubtype requires resolved entity descriptors");
  if (t1->kind() != TypeKind::Entity || t2->kind() != TypeKind::Entity) return false;
  for (const TypeDescriptor* t = t1; t; t = t->parent())
    if (sameEntity(t, t2)) return true;
  return false;
}

std::vector<Property> allProps(const TypeDescriptor* entity) {
  std::vector<const TypeDescriptor*> chain;
  for (const TypeDescriptor* t = entity; t; t = t->parent()) chain.push_back(t);
  std::vector<Property> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    for (const auto& p : (*it)->ownProps()) out.push_back(p);
  return out;
}

} // namespace modex
