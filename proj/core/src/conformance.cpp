#include "modex/conformance.hpp"

#include <set>

#include "modex/builtins.hpp"

namespace modex {

std::string_view violationName(ViolationKind k) {
  switch (k) {
    case ViolationKind::ModelTyping: return "ModelTyping";
    case ViolationKind::ElementTyping: return "ElementTyping";
    case ViolationKind::PropertyType: return "PropertyType";
    case ViolationKind::Multiplicity: return "Multiplicity";
    case ViolationKind::NameUniqueness: return "NameUniqueness";
    case ViolationKind::UnresolvedRef: return "UnresolvedRef";
  }
  return "?";
}

std::string ConformanceReport::render() const {
  std::string out;
  for (const auto& v : violations) {
    out += v.elementQName;
    out += '\t';
    out += v.property;
    out += '\t';
    out += violationName(v.kind);
    out += '\t';
    out += v.message;
    out += '\n';
  }
  return out;
}

namespace {

bool checkItem(const Value& v, const TypeDescriptor* t, std::vector<ViolationKind>& out,
               std::string& detail);

bool checkBase(const Value& v, const TypeDescriptor* t) {
  if (t->name() == "string") return v.kind() == Value::Kind::Str;
  if (t->name() == "number") return v.kind() == Value::Kind::Num;
  return v.kind() == Value::Kind::Bool;
}

bool checkItem(const Value& v, const TypeDescriptor* t, std::vector<ViolationKind>& out,
               std::string& detail) {
  switch (t->kind()) {
    case TypeKind::Optional:
      if (v.isAbsent()) return true;
      return checkItem(v, t->elem(), out, detail);
    case TypeKind::Base:
      if (!checkBase(v, t)) {
        out.push_back(ViolationKind::PropertyType);
        detail = "value is not a " + t->name();
        return false;
      }
      return true;
    case TypeKind::Entity: {
      if (v.kind() != Value::Kind::Ref || !v.asRef()) {
        out.push_back(ViolationKind::PropertyType);
        detail = "value is not an element reference";
        return false;
      }
      if (!isSubtype(v.asRef()->type(), t)) {
        out.push_back(ViolationKind::PropertyType);
        detail = "referenced element has type " + v.asRef()->type()->describe() +
                 ", expected " + t->describe();
        return false;
      }
      return true;
    }
    case TypeKind::Array: {
      if (v.kind() != Value::Kind::Seq) {
        out.push_back(ViolationKind::PropertyType);
        detail = "value is not a sequence";
        return false;
      }
      for (const auto& item : v.asSeq())
        if (!checkItem(item, t->elem(), out, detail)) return false;
      return true;
    }
    case TypeKind::InstanceRef: {
      if (v.kind() == Value::Kind::Path) return true;
      if (v.kind() == Value::Kind::Str) {
        if (QName::tryParse(v.asStr())) return true;
        out.push_back(ViolationKind::UnresolvedRef);
        detail = "\"" + v.asStr() + "\" is not a well-formed qualified name";
        return false;
      }
      out.push_back(ViolationKind::PropertyType);
      detail = "value is not a qualified name";
      return false;
    }
    case TypeKind::Ref:
      throw ModexError(Err::UnresolvedReference,
                       "checkValue requires resolved type descriptors");
  }
  return true;
}

std::vector<ViolationKind> checkValueDetailed(const Value& v, const TypeDescriptor* t, Mult mult,
                                              std::string& detail) {
  std::vector<ViolationKind> out;
  if (multIsMany(mult)) {
    if (v.isAbsent()) {
      // absence of a sequence-valued property reads as the empty sequence
      if (mult == Mult::OneOrMore) out.push_back(ViolationKind::Multiplicity);
      return out;
    }
    if (v.kind() != Value::Kind::Seq) {
      out.push_back(ViolationKind::Multiplicity);
      return out;
    }
    if (mult == Mult::OneOrMore && v.asSeq().empty()) out.push_back(ViolationKind::Multiplicity);
    for (const auto& item : v.asSeq()) checkItem(item, t, out, detail);
    return out;
  }

  if (v.isAbsent()) {
    if (mult == Mult::One && t->kind() != TypeKind::Optional)
      out.push_back(ViolationKind::Multiplicity);
    return out;
  }
  if (v.kind() == Value::Kind::Seq && t->kind() != TypeKind::Array) {
    out.push_back(ViolationKind::Multiplicity);
    return out;
  }
  checkItem(v, t, out, detail);
  return out;
}

} // namespace

std::vector<ViolationKind> checkValue(const Value& v, const TypeDescriptor* t, Mult mult) {
  std::string detail;
  return checkValueDetailed(v, t, mult, detail);
}

namespace {

void checkElementProps(const Element& x, ConformanceReport& report) {
  const TypeSchema* owner = x.type()->owner();
  if (!owner) return;
  for (const Property& decl : owner->resolvedProps(x.type())) {
    const Value* v = x.prop(decl.name);
    Value absentValue;
    const Value& value = v ? *v : absentValue;
    std::string detail;
    for (ViolationKind k : checkValueDetailed(value, decl.type, decl.mult, detail)) {
      std::string msg = k == ViolationKind::Multiplicity
                            ? "multiplicity " + std::string(multName(decl.mult)) + " not satisfied"
                            : (detail.empty() ? "value does not conform to " + decl.type->describe()
                                              : detail);
      report.violations.push_back(Violation{x.qnamePath(), decl.name, k, msg});
    }
  }
}

} // namespace

ConformanceReport conforms(const Model& m, const TypeSchema& s) {
  ConformanceReport report;

  // (i) model typing
  const TypeDescriptor* expected = s.universal() ? modelType() : s.modelType();
  if (!isSubtype(m.type(), expected))
    report.violations.push_back(Violation{
        m.qnamePath(), "", ViolationKind::ModelTyping,
        "model has type " + m.type()->describe() + ", expected a subtype of " +
            (expected ? expected->describe() : std::string("<missing>"))});

  if (!s.universal()) checkElementProps(m, report);

  // name uniqueness within the namespace
  std::set<std::string_view> seen;
  for (const Element* x : m.elements()) {
    if (!seen.insert(x->name()).second)
      report.violations.push_back(Violation{m.qnamePath(), "", ViolationKind::NameUniqueness,
                                            "duplicate local name \"" + x->name() + "\""});
  }

  // (ii) element typing and (iii) property conformance, in document order
  for (const Element* x : m.elements()) {
    if (!s.universal() && !s.containsEntity(x->type())) {
      report.violations.push_back(Violation{x->qnamePath(), "", ViolationKind::ElementTyping,
                                            x->type()->describe() + " is not an entity type of " +
                                                s.name()});
      continue;
    }
    if (!s.universal()) checkElementProps(*x, report);
  }
  return report;
}

namespace {

Element* descendAbsolute(std::span<Model* const> context, const QName& q) {
  const auto& segments = q.segments();
  Model* base = nullptr;
  for (Model* m : context)
    if (m && m->name() == segments.front()) base = m;
  if (!base) return nullptr;
  if (segments.size() == 1) return base;
  for (size_t i = 1; i + 1 < segments.size(); ++i) {
    auto* next = dynamic_cast<Model*>(base->find(segments[i]));
    if (!next) return nullptr;
    base = next;
  }
  return base->find(segments.back());
}

const TypeDescriptor* irefDeclaredTarget(const Element& x, const std::string& prop) {
  const TypeSchema* owner = x.type()->owner();
  if (!owner) return nullptr;
  for (const Property& decl : owner->resolvedProps(x.type())) {
    if (decl.name != prop) continue;
    const TypeDescriptor* t = decl.type;
    while (t && (t->kind() == TypeKind::Array || t->kind() == TypeKind::Optional)) t = t->elem();
    if (t && t->kind() == TypeKind::InstanceRef) return t;
  }
  return nullptr;
}

bool typeMatchesTarget(const TypeDescriptor* actual, const TypeDescriptor* iref) {
  for (const TypeDescriptor* t = actual; t; t = t->parent())
    if (t->schemaId() == iref->targetSchema() && t->name() == iref->targetName()) return true;
  return false;
}

void checkStoredRefs(const Model& weaving, const Element& x, std::span<Model* const> context,
                     ConformanceReport& report) {
  for (const auto& [prop, value] : x.props()) {
    const TypeDescriptor* target = irefDeclaredTarget(x, prop);
    for (const Value& item : value.items()) {
      if (item.kind() != Value::Kind::Path) continue;
      const QName& q = item.asPath();
      Element* resolved = nullptr;
      if (q.kind() == QName::Kind::Absolute) {
        resolved = descendAbsolute(context, q);
      } else {
        // simple and relative paths resolve within the weaving model itself
        const Model* base = &weaving;
        resolved = nullptr;
        if (q.kind() == QName::Kind::Simple) {
          resolved = base->find(q.localName());
        } else {
          const Model* scope = base;
          bool ok = true;
          for (int i = 0; i < q.ups(); ++i) {
            scope = scope->parentModel();
            if (!scope) { ok = false; break; }
          }
          if (ok) {
            for (size_t i = 0; ok && i + 1 < q.segments().size(); ++i) {
              auto* next = dynamic_cast<Model*>(scope->find(q.segments()[i]));
              if (!next) ok = false;
              else scope = next;
            }
            if (ok) resolved = scope->find(q.segments().back());
          }
        }
      }
      if (!resolved) {
        report.violations.push_back(Violation{x.qnamePath(), prop, ViolationKind::UnresolvedRef,
                                              "\"" + q.render() + "\" does not resolve"});
        continue;
      }
      if (target && !typeMatchesTarget(resolved->type(), target))
        report.violations.push_back(
            Violation{x.qnamePath(), prop, ViolationKind::UnresolvedRef,
                      "\"" + q.render() + "\" resolves to " + resolved->type()->describe() +
                          ", expected " + target->targetName()});
    }
  }
}

void walkWeaving(const Model& weaving, const Model& current, std::span<Model* const> context,
                 ConformanceReport& report) {
  checkStoredRefs(weaving, current, context, report);
  for (const Element* x : current.elements()) {
    if (auto* inner = dynamic_cast<const Model*>(x))
      walkWeaving(weaving, *inner, context, report);
    else
      checkStoredRefs(weaving, *x, context, report);
  }
}

} // namespace

ConformanceReport crossModelIntegrity(const Model& weaving, std::span<Model* const> context) {
  ConformanceReport report;
  walkWeaving(weaving, weaving, context, report);
  return report;
}

} // namespace modex
