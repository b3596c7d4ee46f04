#include "modex/schema.hpp"

#include <algorithm>

#include "modex/builtins.hpp"

namespace modex {

std::string ValidationResult::summary() const {
  std::string out;
  for (const auto& i : errors) {
    out += std::string(errName(i.code));
    if (!i.typeName.empty()) out += " [" + i.typeName + (i.propName.empty() ? "" : "." + i.propName) + "]";
    out += " " + i.message + "\n";
  }
  return out;
}

TypeSchema::TypeSchema(std::string name) : name_(std::move(name)) {}

const TypeDescriptor* TypeSchema::adopt(std::unique_ptr<TypeDescriptor> d) {
  const TypeDescriptor* raw = d.get();
  owned_.push_back(std::move(d));
  types_.push_back(raw);
  entitySet_.insert(raw);
  validated_ = false;
  return raw;
}

void TypeSchema::setModelType(const TypeDescriptor* t) {
  if (!t || t->kind() != TypeKind::Entity)
    throw ModexError(Err::MissingModelType, "model type of " + name_ + " must be an entity type");
  modelType_ = t;
}

const TypeDescriptor* TypeSchema::findEntity(std::string_view name) const {
  for (const TypeDescriptor* t : types_)
    if (t->name() == name) return t;
  return nullptr;
}

void TypeSchema::addInversePair(const TypeDescriptor* entityA, std::string propA,
                                const TypeDescriptor* entityB, std::string propB) {
  inversePairs_.push_back(InversePair{entityA, std::move(propA), entityB, std::move(propB)});
  validated_ = false;
}

bool TypeSchema::containsEntity(const TypeDescriptor* t) const {
  if (universal_) return t && t->kind() == TypeKind::Entity;
  if (entitySet_.count(t)) return true;
  // identity is (schemaId, name), not the pointer
  for (const TypeDescriptor* e : entitySet_)
    if (sameEntity(e, t)) return true;
  return false;
}

const TypeDescriptor* TypeSchema::resolved(const TypeDescriptor* t) const {
  if (!t || t->kind() != TypeKind::Ref) return t;
  auto it = refTargets_.find(t);
  if (it == refTargets_.end())
    throw ModexError(Err::UnresolvedReference, t->describe() + " is not resolved in schema " + name_);
  return it->second;
}

namespace {

// Rebuild a property type with every Ref substituted by its target.
const TypeDescriptor* deepResolve(const TypeDescriptor* t, const TypeSchema* owner) {
  if (!t) return t;
  switch (t->kind()) {
    case TypeKind::Base:
    case TypeKind::Entity:
    case TypeKind::InstanceRef:
      return t;
    case TypeKind::Array:
      return makeArray(deepResolve(t->elem(), owner));
    case TypeKind::Optional:
      return makeOptional(deepResolve(t->elem(), owner));
    case TypeKind::Ref:
      return owner ? owner->resolved(t) : t;
  }
  return t;
}

} // namespace

const std::vector<Property>& TypeSchema::resolvedProps(const TypeDescriptor* entity) const {
  auto it = propsCache_.find(entity);
  if (it != propsCache_.end()) return it->second;

  std::vector<const TypeDescriptor*> chain;
  for (const TypeDescriptor* t = entity; t; t = t->parent()) chain.push_back(t);
  std::vector<Property> out;
  for (auto lvl = chain.rbegin(); lvl != chain.rend(); ++lvl) {
    const TypeSchema* owner = (*lvl)->owner();
    for (const auto& p : (*lvl)->ownProps())
      out.push_back(Property{p.name, deepResolve(p.type, owner), p.mult});
  }
  return propsCache_.emplace(entity, std::move(out)).first->second;
}

ValidationResult validateSchema(TypeSchema& schema, std::span<const TypeSchema* const> linked) {
  ValidationResult result;
  auto error = [&](Err code, std::string type, std::string prop, std::string msg) {
    result.errors.push_back(ValidationIssue{code, std::move(type), std::move(prop), std::move(msg)});
  };

  schema.refTargets_.clear();
  schema.valueTypes_.clear();
  schema.propsCache_.clear();
  schema.entitySet_.clear();
  for (const TypeDescriptor* t : schema.types_) schema.entitySet_.insert(t);

  // The abstract schema is implicitly visible everywhere.
  std::vector<const TypeSchema*> scope;
  scope.push_back(&schema);
  if (&schema != &abstractSchema()) scope.push_back(&abstractSchema());
  for (const TypeSchema* s : linked)
    if (s && s != &schema) scope.push_back(s);

  auto lookupEntity = [&](const std::string& schemaName,
                          const std::string& typeName) -> const TypeDescriptor* {
    for (const TypeSchema* s : scope)
      if (s->name() == schemaName)
        if (const TypeDescriptor* e = s->findEntity(typeName)) return e;
    return nullptr;
  };

  // Model type.
  if (!schema.modelType_) {
    error(Err::MissingModelType, "", "", "schema " + schema.name_ + " declares no model type");
  } else if (&schema != &abstractSchema() && !isSubtype(schema.modelType_, modelType())) {
    error(Err::MissingModelType, schema.modelType_->name(), "",
          "model type must subtype the built-in Model type");
  }

  std::vector<const TypeDescriptor*> seenValueTypes;
  auto recordValue = [&](const TypeDescriptor* t) {
    if (std::find(seenValueTypes.begin(), seenValueTypes.end(), t) == seenValueTypes.end())
      seenValueTypes.push_back(t);
  };

  // Type closure: every property type resolves within the visible scope.
  auto checkPropType = [&](const TypeDescriptor* entity, const Property& prop) {
    auto walk = [&](auto&& self, const TypeDescriptor* t) -> void {
      switch (t->kind()) {
        case TypeKind::Base:
          recordValue(t);
          return;
        case TypeKind::Entity:
          if (!schema.containsEntity(t)) {
            // entity from a linked schema referenced directly
            schema.entitySet_.insert(t);
          }
          return;
        case TypeKind::Array:
        case TypeKind::Optional:
          recordValue(t);
          self(self, t->elem());
          return;
        case TypeKind::InstanceRef:
          recordValue(t);
          return;
        case TypeKind::Ref: {
          const TypeDescriptor* target = lookupEntity(t->targetSchema(), t->targetName());
          if (!target) {
            error(Err::UnresolvedReference, entity->name(), prop.name,
                  t->describe() + " names no known entity type");
            return;
          }
          if (target->kind() != TypeKind::Entity) {
            error(Err::ClosureViolation, entity->name(), prop.name,
                  t->describe() + " resolves to a non-entity type");
            return;
          }
          schema.refTargets_[t] = target;
          schema.entitySet_.insert(target);
          return;
        }
      }
    };
    walk(walk, prop.type);
  };

  for (const TypeDescriptor* entity : schema.types_) {
    // Subtype closure: parents live in this schema, a linked schema, or the
    // abstract schema.
    if (const TypeDescriptor* parent = entity->parent()) {
      bool known = false;
      for (const TypeSchema* s : scope)
        if (s->findEntity(parent->name()) == parent || parent->owner() == s) known = true;
      if (!known)
        error(Err::ClosureViolation, entity->name(), "",
              "parent type " + parent->describe() + " is outside the schema and its links");
      else
        schema.entitySet_.insert(parent);
    }
    for (const auto& prop : entity->ownProps()) {
      if (!prop.type) {
        error(Err::ClosureViolation, entity->name(), prop.name, "property has no type");
        continue;
      }
      checkPropType(entity, prop);
    }
  }

  // Ancestors of everything in the set belong to it as well.
  {
    std::vector<const TypeDescriptor*> es(schema.entitySet_.begin(), schema.entitySet_.end());
    for (const TypeDescriptor* e : es)
      for (const TypeDescriptor* p = e->parent(); p; p = p->parent()) schema.entitySet_.insert(p);
  }

  // Inverse pairs: both endpoints exist and target the paired entity types.
  for (const InversePair& pair : schema.inversePairs_) {
    auto checkSide = [&](const TypeDescriptor* entity, const std::string& prop,
                         const TypeDescriptor* expectedTarget) {
      if (!entity || entity->kind() != TypeKind::Entity) {
        error(Err::InvalidInversePair, "", prop, "inverse endpoint is not an entity type");
        return;
      }
      const Property* p = nullptr;
      auto props = allProps(entity);
      for (const auto& cand : props)
        if (cand.name == prop) p = &cand;
      if (!p) {
        error(Err::InvalidInversePair, entity->name(), prop,
              "inverse endpoint names no property of " + entity->name());
        return;
      }
      // unwrap to the referenced entity
      const TypeDescriptor* t = p->type;
      while (t && (t->kind() == TypeKind::Array || t->kind() == TypeKind::Optional)) t = t->elem();
      if (t && t->kind() == TypeKind::Ref) {
        auto it = schema.refTargets_.find(t);
        t = it == schema.refTargets_.end() ? nullptr : it->second;
      }
      if (!t || t->kind() != TypeKind::Entity ||
          !(isSubtype(t, expectedTarget) || isSubtype(expectedTarget, t)))
        error(Err::InvalidInversePair, entity->name(), prop,
              "inverse endpoint does not target " + expectedTarget->name());
    };
    checkSide(pair.entityA, pair.propA, pair.entityB);
    checkSide(pair.entityB, pair.propB, pair.entityA);
  }

  schema.valueTypes_ = std::move(seenValueTypes);
  schema.validated_ = result.errors.empty();
  return result;
}

namespace {

struct SlotCandidate {
  std::string name;
  bool many = false;
};

std::vector<SlotCandidate> entitySlots(const TypeDescriptor* parent, const TypeDescriptor* child) {
  std::vector<SlotCandidate> out;
  const TypeSchema* owner = parent ? parent->owner() : nullptr;
  if (!owner) return out;
  for (const Property& p : owner->resolvedProps(parent)) {
    const TypeDescriptor* t = p.type;
    while (t && (t->kind() == TypeKind::Array || t->kind() == TypeKind::Optional)) t = t->elem();
    if (!t || t->kind() != TypeKind::Entity) continue;
    if (child && !isSubtype(child, t)) continue;
    out.push_back(SlotCandidate{p.name, multIsMany(p.mult) || p.type->kind() == TypeKind::Array});
  }
  return out;
}

} // namespace

std::optional<std::string> routedChildSlot(const TypeDescriptor* parent, bool parentIsModel,
                                           const TypeDescriptor* child) {
  auto candidates = entitySlots(parent, child);
  if (parentIsModel) {
    std::erase_if(candidates, [](const SlotCandidate& c) { return !c.many; });
    if (candidates.empty()) return std::string();
    if (candidates.size() == 1) return candidates[0].name;
    return std::nullopt;
  }
  if (candidates.size() == 1) return candidates[0].name;
  if (candidates.size() > 1) {
    std::erase_if(candidates, [](const SlotCandidate& c) { return !c.many; });
    if (candidates.size() == 1) return candidates[0].name;
  }
  return std::nullopt;
}

std::optional<std::string> routedCompSlot(const TypeDescriptor* parent, bool parentIsModel) {
  auto candidates = entitySlots(parent, nullptr);
  std::erase_if(candidates, [](const SlotCandidate& c) { return !c.many; });
  if (candidates.size() == 1) return candidates[0].name;
  if (candidates.empty() && parentIsModel) return std::string();
  return std::nullopt;
}

} // namespace modex
