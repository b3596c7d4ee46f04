#include "modex/equality.hpp"

#include <map>

#include "modex/schema.hpp"

namespace modex {

namespace {

bool fail(std::string* why, std::string message) {
  if (why && why->empty()) *why = std::move(message);
  return false;
}

bool valueEqual(const Value& a, const Value& b, std::string* why, const std::string& where) {
  if (a.kind() != b.kind()) return fail(why, where + ": value kinds differ");
  switch (a.kind()) {
    case Value::Kind::Absent: return true;
    case Value::Kind::Str:
      return a.asStr() == b.asStr() || fail(why, where + ": \"" + a.asStr() + "\" vs \"" +
                                                      b.asStr() + "\"");
    case Value::Kind::Num:
      return a.asNum() == b.asNum() || fail(why, where + ": numbers differ");
    case Value::Kind::Bool:
      return a.asBool() == b.asBool() || fail(why, where + ": booleans differ");
    case Value::Kind::Ref:
      return a.asRef()->qnamePath() == b.asRef()->qnamePath() ||
             fail(why, where + ": references " + a.asRef()->qnamePath() + " vs " +
                           b.asRef()->qnamePath());
    case Value::Kind::Path:
      return a.asPath() == b.asPath() || fail(why, where + ": paths differ");
    case Value::Kind::Seq: {
      if (a.asSeq().size() != b.asSeq().size())
        return fail(why, where + ": sequence lengths differ");
      for (size_t i = 0; i < a.asSeq().size(); ++i)
        if (!valueEqual(a.asSeq()[i], b.asSeq()[i], why, where + "[" + std::to_string(i) + "]"))
          return false;
      return true;
    }
  }
  return true;
}

std::map<std::string, const Value*> presentProps(const Element& e) {
  std::map<std::string, const Value*> out;
  for (const auto& [name, value] : e.props()) {
    if (value.isAbsent()) continue;
    // an empty sequence and an absent value are not distinguished
    if (value.kind() == Value::Kind::Seq && value.asSeq().empty()) continue;
    out[name] = &value;
  }
  return out;
}

} // namespace

bool structurallyEqual(const Element& a, const Element& b, std::string* why) {
  const std::string where = a.qnamePath();
  if (a.name() != b.name())
    return fail(why, where + ": names \"" + a.name() + "\" vs \"" + b.name() + "\"");
  if (!sameEntity(a.type(), b.type()))
    return fail(why, where + ": types " + a.type()->describe() + " vs " + b.type()->describe());

  auto pa = presentProps(a);
  auto pb = presentProps(b);
  if (pa.size() != pb.size()) return fail(why, where + ": property sets differ");
  for (const auto& [name, value] : pa) {
    auto it = pb.find(name);
    if (it == pb.end()) return fail(why, where + ": property \"" + name + "\" missing");
    if (!valueEqual(*value, *it->second, why, where + "." + name)) return false;
  }

  const auto* ma = dynamic_cast<const Model*>(&a);
  const auto* mb = dynamic_cast<const Model*>(&b);
  if ((ma != nullptr) != (mb != nullptr)) return fail(why, where + ": model vs element");
  if (ma) {
    if (ma->schema()->name() != mb->schema()->name())
      return fail(why, where + ": schemas differ");
    if (ma->elements().size() != mb->elements().size())
      return fail(why, where + ": element counts differ");
    for (size_t i = 0; i < ma->elements().size(); ++i)
      if (!structurallyEqual(*ma->elements()[i], *mb->elements()[i], why)) return false;
  }
  return true;
}

} // namespace modex
