#include "modex/store.hpp"

#include <algorithm>

#include "modex/builtins.hpp"
#include "modex/errors.hpp"
#include "modex/schema.hpp"

namespace modex {

std::vector<Value> Value::items() const {
  switch (kind()) {
    case Kind::Absent: return {};
    case Kind::Seq: return asSeq();
    default: return {*this};
  }
}

bool Element::isModel() const { return dynamic_cast<const Model*>(this) != nullptr; }

QName Element::qname() const {
  std::vector<std::string> segments;
  for (const Element* e = this; e && e->parentModel(); e = e->parentModel())
    segments.push_back(e->name());
  std::reverse(segments.begin(), segments.end());
  if (segments.empty()) segments.push_back(name_); // the root itself
  return QName::absolute(std::move(segments));
}

std::string Element::qnamePath() const { return qname().render(); }

const Value* Element::prop(std::string_view name) const {
  for (const auto& [n, v] : props_)
    if (n == name) return &v;
  return nullptr;
}

Element* Model::find(std::string_view localName) const {
  auto it = byName_.find(localName);
  return it == byName_.end() ? nullptr : it->second;
}

namespace {

const Property* declaredProp(const Element& x, std::string_view name) {
  const TypeSchema* owner = x.type() ? x.type()->owner() : nullptr;
  if (!owner) return nullptr;
  for (const auto& p : owner->resolvedProps(x.type()))
    if (p.name == name) return &p;
  return nullptr;
}

bool isSequenceProp(const Property& p) {
  return multIsMany(p.mult) || (p.type && p.type->kind() == TypeKind::Array);
}

// Innermost declared item type once multiplicity/optionality is unwrapped.
const TypeDescriptor* itemType(const TypeDescriptor* t) {
  while (t && t->kind() == TypeKind::Optional) t = t->elem();
  return t;
}

bool shapeMatches(const Value& v, const TypeDescriptor* t);

bool shapeMatchesItem(const Value& v, const TypeDescriptor* t) {
  switch (t->kind()) {
    case TypeKind::Base:
      // data values only; which base domain they fall into is a
      // conformance question, not an update-time one
      return v.kind() == Value::Kind::Str || v.kind() == Value::Kind::Num ||
             v.kind() == Value::Kind::Bool;
    case TypeKind::Entity:
      return v.kind() == Value::Kind::Ref && v.asRef() != nullptr;
    case TypeKind::InstanceRef:
      return v.kind() == Value::Kind::Path || v.kind() == Value::Kind::Str;
    case TypeKind::Array: {
      if (v.kind() != Value::Kind::Seq) return false;
      for (const auto& item : v.asSeq())
        if (!shapeMatches(item, t->elem())) return false;
      return true;
    }
    case TypeKind::Optional:
      return v.isAbsent() || shapeMatchesItem(v, itemType(t));
    case TypeKind::Ref:
      return v.kind() == Value::Kind::Ref; // unresolved ref: accept element references
  }
  return false;
}

bool shapeMatches(const Value& v, const TypeDescriptor* t) {
  if (v.isAbsent()) return true; // absence is a conformance question, not a shape one
  return shapeMatchesItem(v, t);
}

// Coerce string literals in instance-reference positions into stored QNames.
Value coerceForType(Value v, const TypeDescriptor* t) {
  if (!t) return v;
  const TypeDescriptor* inner = itemType(t);
  if (inner && inner->kind() == TypeKind::InstanceRef && v.kind() == Value::Kind::Str) {
    if (auto q = QName::tryParse(v.asStr())) return Value::path(std::move(*q));
    return v;
  }
  if (inner && inner->kind() == TypeKind::Array && v.kind() == Value::Kind::Seq) {
    std::vector<Value> out;
    out.reserve(v.asSeq().size());
    for (auto& item : v.asSeq()) out.push_back(coerceForType(item, inner->elem()));
    return Value::seq(std::move(out));
  }
  return v;
}

} // namespace

Store::Store() {
  auto m = std::unique_ptr<Model>(new Model());
  m->type_ = modelType();
  m->schema_ = &universalSchema();
  root_ = m.get();
  arena_.push_back(std::move(m));
}

std::string Store::freshLocalName(const Model& m, std::string_view base) const {
  std::string candidate(base);
  int counter = 1;
  while (m.find(candidate)) {
    ++counter;
    candidate = std::string(base) + "-" + std::to_string(counter);
  }
  return candidate;
}

void Store::checkShape(const Element& x, const std::string& name, const Value& v) const {
  const Property* p = declaredProp(x, name);
  if (!p) return; // undeclared properties carry any shape; conformance ignores them
  if (multIsMany(p->mult)) {
    if (v.isAbsent()) return;
    if (v.kind() != Value::Kind::Seq)
      throw ModexError(Err::BadPropertyValue,
                       "property \"" + name + "\" of " + x.type()->describe() +
                           " expects a sequence value");
    for (const auto& item : v.asSeq())
      if (!shapeMatches(item, p->type))
        throw ModexError(Err::BadPropertyValue,
                         "sequence item for \"" + name + "\" does not fit " + p->type->describe());
    return;
  }
  if (!shapeMatches(v, p->type))
    throw ModexError(Err::BadPropertyValue,
                     "value for \"" + name + "\" does not fit " + p->type->describe());
}

Element& Store::insert(Model& m, std::unique_ptr<Element> e, std::string_view name,
                       const TypeDescriptor* type, PropertyRecord pr) {
  if (m.find(name))
    throw ModexError(Err::DuplicateName,
                     "\"" + std::string(name) + "\" already names an element of " +
                         (m.isRoot() ? std::string("the root model") : m.qnamePath()));
  if (!type || type->kind() != TypeKind::Entity)
    throw ModexError(Err::TypeNotInSchema, "element type must be an entity type");
  if (!m.schema() || !m.schema()->containsEntity(type))
    throw ModexError(Err::TypeNotInSchema,
                     type->describe() + " is not an entity type of schema " +
                         (m.schema() ? m.schema()->name() : "<none>"));

  e->name_ = name;
  e->type_ = type;
  e->parent_ = &m;
  e->creationIndex_ = arena_.size();
  e->originOwner_ = &m;
  e->originProp_.clear();

  Element& ref = *e;
  arena_.push_back(std::move(e));
  m.elements_.push_back(&ref);
  m.byName_.emplace(std::string(name), &ref);

  for (auto& [n, v] : pr) {
    if (n == "name") {
      if (v.kind() != Value::Kind::Str || v.asStr() != ref.name())
        throw ModexError(Err::BadPropertyValue,
                         "the name property must match the local name \"" + ref.name() + "\"");
    }
    applyEntry(ref, n, std::move(v), false);
  }
  return ref;
}

Element& Store::newElement(Model& m, std::string_view name, const TypeDescriptor* type,
                           PropertyRecord pr) {
  return insert(m, std::unique_ptr<Element>(new Element()), name, type, std::move(pr));
}

Model& Store::newModel(Model& m, std::string_view name, const TypeSchema* schema,
                       PropertyRecord pr) {
  if (!schema || !schema->validated())
    throw ModexError(Err::InvalidSchema,
                     "schema must pass validation before models can bind it");
  auto owned = std::unique_ptr<Model>(new Model());
  Model* raw = owned.get();
  insert(m, std::move(owned), name, schema->modelType(), std::move(pr));
  raw->schema_ = schema;
  return *raw;
}

void Store::updateElement(Model& m, Element& x, PropertyRecord pr) {
  if (x.parentModel() != &m)
    throw ModexError(Err::UnknownElement,
                     "\"" + x.name() + "\" is not an element of " +
                         (m.isRoot() ? std::string("the root model") : m.qnamePath()));
  for (auto& [n, v] : pr) {
    if (n == "name") {
      if (v.kind() != Value::Kind::Str || v.asStr() != x.name())
        throw ModexError(Err::BadPropertyValue, "the name of an element cannot change");
      continue;
    }
    applyEntry(x, n, std::move(v), false);
  }
}

void Store::applyEntry(Element& x, const std::string& name, Value v, bool fromInverse) {
  if (!fromInverse) checkShape(x, name, v);
  const Property* decl = declaredProp(x, name);
  if (decl) {
    if (multIsMany(decl->mult) && v.kind() == Value::Kind::Seq) {
      std::vector<Value> items;
      items.reserve(v.asSeq().size());
      for (auto& item : v.asSeq()) items.push_back(coerceForType(std::move(item), decl->type));
      v = Value::seq(std::move(items));
    } else {
      v = coerceForType(std::move(v), decl->type);
    }
  }

  auto slot = std::find_if(x.props_.begin(), x.props_.end(),
                           [&](const auto& e) { return e.first == name; });

  const bool sequence = decl && isSequenceProp(*decl);
  Value added = v;
  const Value* replaced = nullptr;
  Value replacedStorage;

  if (sequence) {
    if (slot != x.props_.end() && slot->second.kind() == Value::Kind::Seq &&
        v.kind() == Value::Kind::Seq) {
      // concatenation, never replacement
      auto items = v.items();
      for (auto& item : items) slot->second.asSeq().push_back(std::move(item));
    } else if (slot != x.props_.end()) {
      slot->second = std::move(v);
    } else {
      x.props_.emplace_back(name, std::move(v));
    }
  } else {
    if (slot != x.props_.end()) {
      replacedStorage = slot->second;
      replaced = &replacedStorage;
      slot->second = std::move(v);
    } else {
      x.props_.emplace_back(name, std::move(v));
    }
  }

  if (!fromInverse) maintainInverse(x, name, added, replaced);
}

namespace {

void eraseRefFrom(Element& owner, const std::string& prop, Element* target,
                  PropertyRecord& props) {
  for (auto& [n, v] : props) {
    if (n != prop) continue;
    if (v.kind() == Value::Kind::Ref && v.asRef() == target) {
      v = Value::absent();
    } else if (v.kind() == Value::Kind::Seq) {
      auto& seq = v.asSeq();
      seq.erase(std::remove_if(seq.begin(), seq.end(),
                               [&](const Value& item) {
                                 return item.kind() == Value::Kind::Ref && item.asRef() == target;
                               }),
                seq.end());
    }
    return;
  }
  (void)owner;
}

PropertyRecord& mutableProps(Element& e) {
  // Element exposes props() const; the store is the single writer.
  return const_cast<PropertyRecord&>(e.props());
}

} // namespace

void Store::maintainInverse(Element& x, const std::string& prop, const Value& added,
                            const Value* replaced) {
  // Collect inverse pairs visible from the owner schemas along the parent chain.
  std::vector<const InversePair*> pairs;
  for (const TypeDescriptor* t = x.type(); t; t = t->parent()) {
    const TypeSchema* owner = t->owner();
    if (!owner) continue;
    for (const auto& pair : owner->inversePairs())
      if (std::find(pairs.begin(), pairs.end(), &pair) == pairs.end()) pairs.push_back(&pair);
  }

  for (const InversePair* pair : pairs) {
    struct Side {
      const TypeDescriptor* self;
      const std::string* selfProp;
      const TypeDescriptor* other;
      const std::string* otherProp;
    };
    for (const Side& side : {Side{pair->entityA, &pair->propA, pair->entityB, &pair->propB},
                             Side{pair->entityB, &pair->propB, pair->entityA, &pair->propA}}) {
      if (prop != *side.selfProp || !isSubtype(x.type(), side.self)) continue;

      // A single-valued side was overwritten: the old partner loses x.
      if (replaced && replaced->kind() == Value::Kind::Ref && replaced->asRef() &&
          isSubtype(replaced->asRef()->type(), side.other)) {
        Element* old = replaced->asRef();
        eraseRefFrom(*old, *side.otherProp, &x, mutableProps(*old));
      }

      for (const Value& item : added.items()) {
        if (item.kind() != Value::Kind::Ref || !item.asRef()) continue;
        Element* e = item.asRef();
        if (!isSubtype(e->type(), side.other)) continue;

        const Property* backDecl = declaredProp(*e, *side.otherProp);
        const bool backSeq = backDecl && multIsMany(backDecl->mult);
        PropertyRecord& eprops = mutableProps(*e);
        auto it = std::find_if(eprops.begin(), eprops.end(),
                               [&](const auto& p) { return p.first == *side.otherProp; });
        if (backSeq) {
          if (it == eprops.end()) {
            eprops.emplace_back(*side.otherProp, Value::seq({Value::ref(&x)}));
          } else if (it->second.kind() == Value::Kind::Seq) {
            auto& seq = it->second.asSeq();
            bool present = std::any_of(seq.begin(), seq.end(), [&](const Value& v) {
              return v.kind() == Value::Kind::Ref && v.asRef() == &x;
            });
            if (!present) seq.push_back(Value::ref(&x));
          } else {
            it->second = Value::seq({Value::ref(&x)});
          }
        } else {
          Element* previous = nullptr;
          if (it != eprops.end() && it->second.kind() == Value::Kind::Ref)
            previous = it->second.asRef();
          if (previous == &x) continue;
          if (it == eprops.end())
            eprops.emplace_back(*side.otherProp, Value::ref(&x));
          else
            it->second = Value::ref(&x);
          // the partner x replaced loses e on its own side
          if (previous) eraseRefFrom(*previous, *side.selfProp, e, mutableProps(*previous));
        }
      }

    }
  }

  // Origin refinement: the first connection through the routed child slot
  // decides where the serializer nests the element. Only elements created
  // after their owner qualify; retrieved references keep their position.
  for (const Value& item : added.items()) {
    if (item.kind() != Value::Kind::Ref || !item.asRef()) continue;
    Element* e = item.asRef();
    if (e == &x || !e->originProp_.empty()) continue;
    if (e->creationIndex() <= x.creationIndex()) continue;
    const bool xIsHome = static_cast<const Element*>(e->parentModel()) == &x;
    const bool siblings = !x.isModel() && x.parentModel() == e->parentModel();
    if (!xIsHome && !siblings) continue;
    auto routed = routedChildSlot(x.type(), x.isModel(), e->type());
    if (routed && *routed == prop) {
      e->originOwner_ = &x;
      e->originProp_ = prop;
    }
  }
}

Element* Store::resolve(const Model& scope, const QName& q) const { return resolveIn(scope, q); }

Element* resolveIn(const Model& scope, const QName& q) {
  const Model* base = &scope;
  switch (q.kind()) {
    case QName::Kind::Simple:
      return base->find(q.localName());
    case QName::Kind::Relative:
      for (int i = 0; i < q.ups(); ++i) {
        if (!base->parentModel()) return nullptr;
        base = base->parentModel();
      }
      break;
    case QName::Kind::Absolute:
      while (base->parentModel()) base = base->parentModel();
      break;
  }
  const auto& segments = q.segments();
  for (size_t i = 0; i + 1 < segments.size(); ++i) {
    Element* next = base->find(segments[i]);
    auto* nextModel = dynamic_cast<Model*>(next);
    if (!nextModel) return nullptr;
    base = nextModel;
  }
  return base->find(segments.back());
}

} // namespace modex
