#include "modex/syntax/serialize.hpp"

#include <set>

#include "ast.hpp"
#include "cursor.hpp"
#include "modex/builtins.hpp"
#include "modex/schema.hpp"

namespace modex::syntax {

namespace {

std::string escaped(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\' || c == '$') out += '\\';
    out += c;
  }
  return out;
}

bool sameModel(const Element& a, const Element& b) { return a.parentModel() == b.parentModel(); }

std::string refPath(const Element& from, const Element& target) {
  if (sameModel(from, target) ||
      (from.isModel() && target.parentModel() == static_cast<const Model*>(&from)))
    return target.name();
  return target.qnamePath();
}

// Exactly one side of an established inverse-pair instance is emitted; the
// other is restored by inverse maintenance on re-evaluation. The containment
// edge always wins; between two pure references the backward one (target
// created earlier) is kept, since a forward reference would not resolve.
bool inverseRestored(const Element& x, const std::string& prop, const Element& target) {
  const std::string* otherProp = nullptr;
  for (const TypeDescriptor* t = x.type(); t; t = t->parent()) {
    const TypeSchema* owner = t->owner();
    if (!owner) continue;
    for (const InversePair& pair : owner->inversePairs()) {
      if (pair.propA == prop && isSubtype(x.type(), pair.entityA) &&
          isSubtype(target.type(), pair.entityB))
        otherProp = &pair.propB;
      if (pair.propB == prop && isSubtype(x.type(), pair.entityB) &&
          isSubtype(target.type(), pair.entityA))
        otherProp = &pair.propA;
    }
  }
  if (!otherProp) return false;
  if (target.originOwner() == &x && target.originProp() == prop) return false;
  if (x.originOwner() == &target && x.originProp() == *otherProp) return true;
  return target.creationIndex() > x.creationIndex();
}

struct RefChild {
  const TypeDescriptor* type;
  std::string path;
};
using ChildOut = std::variant<const Element*, RefChild>;

class Writer {
public:
  std::string run(const Model& m) {
    emitted_.insert(&m);
    emitElement(m, 0);
    return std::move(out_);
  }

private:
  void emitElement(const Element& x, int depth) {
    const std::string tag = x.type()->name();
    std::string attrs;
    // children interleaved: namespace members first (models), then slot
    // entries in property-declaration order
    std::vector<ChildOut> children;

    const auto* asModel = dynamic_cast<const Model*>(&x);
    if (asModel)
      for (const Element* child : asModel->elements())
        if (child->originOwner() == &x && child->originProp().empty() &&
            emitted_.insert(child).second)
          children.emplace_back(child);

    attrs += " name=\"" + escaped(x.name()) + "\"";

    const TypeSchema* owner = x.type()->owner();
    std::vector<std::string> declared{"name"};
    if (owner) {
      for (const Property& p : owner->resolvedProps(x.type())) {
        if (p.name != "name") declared.push_back(p.name);
        if (p.name == "name") continue;
        const Value* v = x.prop(p.name);
        if (!v || v->isAbsent()) continue;
        for (const Value& item : v->items()) emitValue(x, p.name, item, attrs, children);
      }
    }

    // undeclared extras keep their insertion order; element references in
    // extras are not representable and are skipped
    for (const auto& [propName, value] : x.props()) {
      if (std::find(declared.begin(), declared.end(), propName) != declared.end()) continue;
      for (const Value& item : value.items()) {
        if (item.kind() == Value::Kind::Str)
          attrs += " " + propName + "=\"" + escaped(item.asStr()) + "\"";
        else if (item.kind() == Value::Kind::Num)
          attrs += " " + propName + "=" + numText(item.asNum());
        else if (item.kind() == Value::Kind::Bool)
          attrs += " " + propName + (item.asBool() ? "=true" : "=false");
        else if (item.kind() == Value::Kind::Path)
          attrs += " " + propName + "=\"" + escaped(item.asPath().render()) + "\"";
      }
    }

    std::string pad(depth * 2, ' ');
    if (children.empty()) {
      out_ += pad + "<" + tag + attrs + "/>\n";
      return;
    }
    out_ += pad + "<" + tag + attrs + ">\n";
    for (const auto& child : children) {
      if (const Element* const* el = std::get_if<const Element*>(&child)) {
        emitElement(**el, depth + 1);
      } else {
        const RefChild& rc = std::get<RefChild>(child);
        out_ += std::string((depth + 1) * 2, ' ') + "<" + rc.type->name() + " $refByName=\"" +
                escaped(rc.path) + "\"/>\n";
      }
    }
    out_ += pad + "</" + tag + ">\n";
  }

  void emitValue(const Element& x, const std::string& prop, const Value& item, std::string& attrs,
                 std::vector<ChildOut>& children) {
    switch (item.kind()) {
      case Value::Kind::Str:
        attrs += " " + prop + "=\"" + escaped(item.asStr()) + "\"";
        return;
      case Value::Kind::Num:
        attrs += " " + prop + "=" + numText(item.asNum());
        return;
      case Value::Kind::Bool:
        attrs += " " + prop + (item.asBool() ? "=true" : "=false");
        return;
      case Value::Kind::Path:
        attrs += " " + prop + "=\"" + escaped(item.asPath().render()) + "\"";
        return;
      case Value::Kind::Ref: {
        Element* e = item.asRef();
        if (inverseRestored(x, prop, *e)) return;
        auto slot = childSlotFor(x.type(), x.isModel(), e->type());
        const bool routesHere = slot && *slot == prop;
        if (routesHere && e->originOwner() == &x && e->originProp() == prop &&
            emitted_.insert(e).second) {
          children.emplace_back(static_cast<const Element*>(e));
        } else if (routesHere) {
          children.emplace_back(RefChild{e->type(), refPath(x, *e)});
        } else {
          attrs += " " + prop + "=<" + e->type()->name() + " $refByName=\"" +
                   escaped(refPath(x, *e)) + "\"/>";
        }
        return;
      }
      case Value::Kind::Seq:
        for (const Value& inner : item.asSeq()) emitValue(x, prop, inner, attrs, children);
        return;
      case Value::Kind::Absent:
        return;
    }
  }

  std::string out_;
  std::set<const Element*> emitted_;
};

} // namespace

std::string serializeModel(const Model& m) {
  Writer w;
  return w.run(m);
}

std::string serializeTrace(const TraceModel& trace, bool emitTimestamp) {
  TraceModel copy = trace;
  if (!emitTimestamp) copy.timestamp.reset();
  Store scratch;
  Model& m = traceToModel(copy, scratch);
  return serializeModel(m);
}

} // namespace modex::syntax
