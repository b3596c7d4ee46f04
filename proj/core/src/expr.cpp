#include "modex/expr.hpp"

#include <algorithm>

#include "modex/builtins.hpp"
#include "modex/errors.hpp"

namespace modex {

ParamEnv& ParamEnv::bind(std::string name, Value v) {
  vars_.insert_or_assign(std::move(name), Entry(std::move(v)));
  return *this;
}

ParamEnv& ParamEnv::bind(std::string name, TemplatePtr t) {
  vars_.insert_or_assign(std::move(name), Entry(std::move(t)));
  return *this;
}

const ParamEnv::Entry* ParamEnv::find(std::string_view name) const {
  auto it = vars_.find(name);
  return it == vars_.end() ? nullptr : &it->second;
}

const Value& ParamEnv::value(std::string_view name) const {
  const Entry* e = find(name);
  if (!e || !std::holds_alternative<Value>(*e))
    throw ModexError(Err::UnboundParameter, "no value bound for \"" + std::string(name) + "\"");
  return std::get<Value>(*e);
}

const TemplatePtr& ParamEnv::tmpl(std::string_view name) const {
  const Entry* e = find(name);
  if (!e || !std::holds_alternative<TemplatePtr>(*e))
    throw ModexError(Err::UnboundParameter, "no template bound for \"" + std::string(name) + "\"");
  return std::get<TemplatePtr>(*e);
}

ExprPtr mu(std::optional<StrExpr> name, const TypeSchema* schema, std::vector<PropExpr> props,
           std::vector<SlotExpr> slots) {
  return std::make_shared<ExprNode>(
      MuNode{std::move(name), schema, std::move(props), std::move(slots)});
}

ExprPtr eps(std::optional<StrExpr> name, const TypeDescriptor* type, std::vector<PropExpr> props,
            std::vector<SlotExpr> slots) {
  return std::make_shared<ExprNode>(
      EpsNode{std::move(name), type, std::move(props), std::move(slots)});
}

ExprPtr rho(StrExpr qname) { return std::make_shared<ExprNode>(RhoNode{std::move(qname)}); }

ExprPtr kappa(std::function<std::vector<ExprPtr>(const ParamEnv&)> fn,
              std::function<void(std::span<Element* const>)> post) {
  return std::make_shared<ExprNode>(KappaNode{std::move(fn), std::move(post)});
}

// --- ground checks -----------------------------------------------------

namespace {

bool strGround(const StrExpr& s) { return std::holds_alternative<std::string>(s); }
bool nameGround(const std::optional<StrExpr>& s) { return !s || strGround(*s); }

bool propsGround(const std::vector<PropExpr>& props) {
  return std::all_of(props.begin(), props.end(),
                     [](const PropExpr& p) { return std::holds_alternative<Value>(p.value); });
}

} // namespace

bool isGround(const ExprNode& e) {
  if (e.kappa()) return false;
  if (const RhoNode* r = e.rho()) return strGround(r->qname);
  const std::vector<SlotExpr>* slots = nullptr;
  bool head = false;
  if (const MuNode* m = e.mu()) {
    head = nameGround(m->name) && propsGround(m->props);
    slots = &m->slots;
  } else if (const EpsNode* ep = e.eps()) {
    head = nameGround(ep->name) && propsGround(ep->props);
    slots = &ep->slots;
  }
  if (!head) return false;
  for (const SlotExpr& s : *slots)
    for (const ExprPtr& c : s.children)
      if (!isGround(*c)) return false;
  return true;
}

bool groundEqual(const ExprNode& a, const ExprNode& b) {
  auto strEq = [](const std::optional<StrExpr>& x, const std::optional<StrExpr>& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    return std::get<std::string>(*x) == std::get<std::string>(*y);
  };
  auto propsEq = [](const std::vector<PropExpr>& x, const std::vector<PropExpr>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i].name != y[i].name || std::get<Value>(x[i].value) != std::get<Value>(y[i].value))
        return false;
    return true;
  };
  auto slotsEq = [](const std::vector<SlotExpr>& x, const std::vector<SlotExpr>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i].prop != y[i].prop || x[i].children.size() != y[i].children.size()) return false;
      for (size_t j = 0; j < x[i].children.size(); ++j)
        if (!groundEqual(*x[i].children[j], *y[i].children[j])) return false;
    }
    return true;
  };

  if (const MuNode* ma = a.mu()) {
    const MuNode* mb = b.mu();
    return mb && ma->schema == mb->schema && strEq(ma->name, mb->name) &&
           propsEq(ma->props, mb->props) && slotsEq(ma->slots, mb->slots);
  }
  if (const EpsNode* ea = a.eps()) {
    const EpsNode* eb = b.eps();
    return eb && ea->type == eb->type && strEq(ea->name, eb->name) &&
           propsEq(ea->props, eb->props) && slotsEq(ea->slots, eb->slots);
  }
  if (const RhoNode* ra = a.rho()) {
    const RhoNode* rb = b.rho();
    return rb && std::get<std::string>(ra->qname) == std::get<std::string>(rb->qname);
  }
  return false; // kappa nodes are never ground
}

// --- shared reduction/evaluation machinery -------------------------------

namespace {

struct GuardState {
  ReductionGuard limits;
  int depth = 0;
  size_t nodes = 0;

  void countNode() {
    if (++nodes > limits.maxNodes)
      throw ModexError(Err::GuardExceeded,
                       "expression produced more than " + std::to_string(limits.maxNodes) +
                           " nodes");
  }

  struct DepthScope {
    GuardState& g;
    explicit DepthScope(GuardState& g_) : g(g_) {
      if (++g.depth > g.limits.maxKappaDepth)
        throw ModexError(Err::GuardExceeded,
                         "computation nesting exceeded depth " +
                             std::to_string(g.limits.maxKappaDepth));
    }
    ~DepthScope() { --g.depth; }
  };
};

std::string evalStr(const StrExpr& s, const ParamEnv& env) {
  if (const std::string* lit = std::get_if<std::string>(&s)) return *lit;
  return std::get<StrFn>(s)(env);
}

Value evalValue(const ValueExpr& v, const ParamEnv& env) {
  if (const Value* lit = std::get_if<Value>(&v)) return *lit;
  return std::get<ValueFn>(v)(env);
}

struct SlotInfo {
  const TypeDescriptor* elemEntity = nullptr;
  Mult mult = Mult::ZeroOrMore;
  bool declared = false;
};

SlotInfo slotInfo(const TypeDescriptor* ownerType, const std::string& prop) {
  SlotInfo info;
  const TypeSchema* owner = ownerType->owner();
  if (!owner) return info;
  for (const Property& p : owner->resolvedProps(ownerType)) {
    if (p.name != prop) continue;
    info.declared = true;
    info.mult = p.mult;
    const TypeDescriptor* t = p.type;
    while (t && (t->kind() == TypeKind::Array || t->kind() == TypeKind::Optional)) t = t->elem();
    if (t && t->kind() == TypeKind::Entity) info.elemEntity = t;
    return info;
  }
  return info;
}

std::string resolveLocalName(const std::optional<StrExpr>& nameExpr, const ParamEnv& env,
                             Store& store, const Model& m, const TypeDescriptor* type) {
  if (nameExpr) return evalStr(*nameExpr, env);
  return store.freshLocalName(m, type->name());
}

PropertyRecord evalProps(const std::vector<PropExpr>& props, const ParamEnv& env) {
  PropertyRecord pr;
  pr.reserve(props.size());
  for (const PropExpr& p : props) pr.emplace_back(p.name, evalValue(p.value, env));
  return pr;
}

void injectNameProp(PropertyRecord& pr, const std::string& name, const TypeDescriptor* type) {
  for (const auto& [n, v] : pr)
    if (n == "name") return;
  const TypeSchema* owner = type->owner();
  if (!owner) return;
  for (const Property& p : owner->resolvedProps(type)) {
    if (p.name == "name") {
      pr.insert(pr.begin(), {std::string("name"), Value::str(name)});
      return;
    }
  }
}

class Evaluator {
public:
  Evaluator(Store& store, const ReductionGuard& guard) : store_(store) {
    guard_.limits = guard;
  }

  std::vector<Element*> eval(const ExprNode& e, const ParamEnv& env, Model& m) {
    guard_.countNode();

    if (const KappaNode* k = e.kappa()) {
      std::vector<Element*> out;
      {
        GuardState::DepthScope scope(guard_);
        std::vector<ExprPtr> produced = k->fn(env);
        for (const ExprPtr& c : produced) {
          auto els = eval(*c, env, m);
          out.insert(out.end(), els.begin(), els.end());
        }
      }
      if (k->post) k->post(out);
      return out;
    }

    if (const RhoNode* r = e.rho()) {
      std::string path = evalStr(r->qname, env);
      Element* el = store_.resolve(m, QName::parse(path));
      if (!el)
        throw ModexError(Err::Unresolved, "\"" + path + "\" does not resolve in " +
                                              (m.isRoot() ? std::string("the root model")
                                                          : m.qnamePath()));
      return {el};
    }

    if (const MuNode* mn = e.mu()) {
      if (!mn->schema) throw ModexError(Err::InvalidSchema, "model node carries no schema");
      const TypeDescriptor* mt = mn->schema->modelType();
      std::string name = resolveLocalName(mn->name, env, store_, m, mt);
      PropertyRecord pr = evalProps(mn->props, env);
      injectNameProp(pr, name, mt);
      Model& nm = store_.newModel(m, name, mn->schema, std::move(pr));
      connectSlots(nm, nm, mn->slots, env);
      return {&nm};
    }

    const EpsNode* en = e.eps();
    std::string name = resolveLocalName(en->name, env, store_, m, en->type);
    PropertyRecord pr = evalProps(en->props, env);
    injectNameProp(pr, name, en->type);
    Element& x = store_.newElement(m, name, en->type, std::move(pr));
    connectSlots(m, x, en->slots, env);
    return {&x};
  }

private:
  // Children evaluate into `enclosing`; connections attach to `owner` as
  // soon as each child is produced, so later references find the property
  // already populated and provenance follows the authored nesting.
  void connectSlots(Model& enclosing, Element& owner, const std::vector<SlotExpr>& slots,
                    const ParamEnv& env) {
    for (const SlotExpr& slot : slots) {
      SlotInfo info;
      if (!slot.prop.empty()) {
        info = slotInfo(owner.type(), slot.prop);
        if (!info.declared)
          throw ModexError(Err::UnknownSlot, "\"" + slot.prop + "\" is not a property of " +
                                                 owner.type()->describe());
      }
      Model* connectIn = owner.parentModel();
      size_t connected = 0;
      for (const ExprPtr& c : slot.children) {
        const bool viaKappa = c->kappa() != nullptr;
        auto els = eval(*c, env, enclosing);
        if (viaKappa && info.elemEntity) {
          for (Element* el : els)
            if (!isSubtype(el->type(), info.elemEntity))
              throw ModexError(Err::KappaTypeError,
                               "computed child " + el->qnamePath() + " has type " +
                                   el->type()->describe() + ", slot \"" + slot.prop +
                                   "\" expects " + info.elemEntity->describe());
        }
        if (slot.prop.empty() || !connectIn) continue;
        if (multIsMany(info.mult)) {
          std::vector<Value> refs;
          refs.reserve(els.size());
          for (Element* el : els) refs.push_back(Value::ref(el));
          store_.updateElement(*connectIn, owner, {{slot.prop, Value::seq(std::move(refs))}});
          connected += els.size();
        } else {
          connected += els.size();
          if (connected > 1)
            throw ModexError(Err::SlotArityError,
                             "slot \"" + slot.prop + "\" of " + owner.type()->describe() +
                                 " admits one value, got " + std::to_string(connected));
          if (!els.empty())
            store_.updateElement(*connectIn, owner, {{slot.prop, Value::ref(els[0])}});
        }
      }
    }
  }

  Store& store_;
  GuardState guard_;
};

// Tree-to-tree reduction; shares the guard semantics with evaluation.
class Reducer {
public:
  explicit Reducer(const ReductionGuard& guard) { guard_.limits = guard; }

  std::vector<ExprPtr> reduceSeq(const ExprPtr& e, const ParamEnv& env,
                                 const TypeDescriptor* slotElem) {
    guard_.countNode();

    if (const KappaNode* k = e->kappa()) {
      GuardState::DepthScope scope(guard_);
      std::vector<ExprPtr> out;
      for (const ExprPtr& c : k->fn(env)) {
        auto sub = reduceSeq(c, env, slotElem);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      if (slotElem) {
        for (const ExprPtr& c : out) {
          const TypeDescriptor* produced =
              c->eps() ? c->eps()->type : (c->mu() ? c->mu()->schema->modelType() : nullptr);
          if (produced && !isSubtype(produced, slotElem))
            throw ModexError(Err::KappaTypeError,
                             "computed child of type " + produced->describe() +
                                 " does not fit slot expecting " + slotElem->describe());
        }
      }
      return out;
    }

    if (const RhoNode* r = e->rho()) return {rho(StrExpr(evalStr(r->qname, env)))};

    if (const MuNode* mn = e->mu()) {
      std::optional<StrExpr> name;
      if (mn->name) name = StrExpr(evalStr(*mn->name, env));
      return {mu(std::move(name), mn->schema, reduceProps(mn->props, env),
                 reduceSlots(mn->schema->modelType(), mn->slots, env))};
    }

    const EpsNode* en = e->eps();
    std::optional<StrExpr> name;
    if (en->name) name = StrExpr(evalStr(*en->name, env));
    return {eps(std::move(name), en->type, reduceProps(en->props, env),
                reduceSlots(en->type, en->slots, env))};
  }

private:
  std::vector<PropExpr> reduceProps(const std::vector<PropExpr>& props, const ParamEnv& env) {
    std::vector<PropExpr> out;
    out.reserve(props.size());
    for (const PropExpr& p : props) out.push_back(PropExpr{p.name, evalValue(p.value, env)});
    return out;
  }

  std::vector<SlotExpr> reduceSlots(const TypeDescriptor* ownerType,
                                    const std::vector<SlotExpr>& slots, const ParamEnv& env) {
    std::vector<SlotExpr> out;
    out.reserve(slots.size());
    for (const SlotExpr& slot : slots) {
      SlotInfo info;
      if (!slot.prop.empty()) info = slotInfo(ownerType, slot.prop);
      std::vector<ExprPtr> children;
      for (const ExprPtr& c : slot.children) {
        auto sub = reduceSeq(c, env, c->kappa() ? info.elemEntity : nullptr);
        children.insert(children.end(), sub.begin(), sub.end());
      }
      if (!slot.prop.empty() && !multIsMany(info.mult) && info.declared && children.size() > 1)
        throw ModexError(Err::SlotArityError, "slot \"" + slot.prop + "\" admits one child, got " +
                                                  std::to_string(children.size()));
      out.push_back(SlotExpr{slot.prop, std::move(children)});
    }
    return out;
  }

  GuardState guard_;
};

} // namespace

ExprPtr reduce(const ExprPtr& e, const ParamEnv& env, const ReductionGuard& guard) {
  Reducer r(guard);
  auto out = r.reduceSeq(e, env, nullptr);
  if (out.size() != 1)
    throw ModexError(Err::SlotArityError, "top-level computation produced " +
                                              std::to_string(out.size()) +
                                              " expressions, expected one");
  return out[0];
}

std::vector<Element*> evaluate(Store& store, const ExprPtr& e, const ParamEnv& env,
                               Model& enclosing, const ReductionGuard& guard) {
  Evaluator ev(store, guard);
  return ev.eval(*e, env, enclosing);
}

// --- templates -------------------------------------------------------------

std::string_view paramKindName(ParamKind k) {
  switch (k) {
    case ParamKind::String: return "string";
    case ParamKind::Number: return "number";
    case ParamKind::Boolean: return "boolean";
    case ParamKind::TemplateKind: return "template";
  }
  return "?";
}

const ParamDecl* Template::param(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

ExprPtr instantiate(const Template& t, const ParamEnv& env) {
  for (const ParamDecl& decl : t.params()) {
    const ParamEnv::Entry* entry = env.find(decl.name);
    if (!entry)
      throw ModexError(Err::MissingParameter, "parameter \"" + decl.name + "\" is not bound");
    if (decl.kind == ParamKind::TemplateKind) {
      if (!std::holds_alternative<TemplatePtr>(*entry))
        throw ModexError(Err::ParameterKindMismatch,
                         "parameter \"" + decl.name + "\" expects a template");
      continue;
    }
    if (!std::holds_alternative<Value>(*entry))
      throw ModexError(Err::ParameterKindMismatch,
                       "parameter \"" + decl.name + "\" expects a " +
                           std::string(paramKindName(decl.kind)) + " value");
    const Value& v = std::get<Value>(*entry);
    bool ok = (decl.kind == ParamKind::String && v.kind() == Value::Kind::Str) ||
              (decl.kind == ParamKind::Number && v.kind() == Value::Kind::Num) ||
              (decl.kind == ParamKind::Boolean && v.kind() == Value::Kind::Bool);
    if (!ok)
      throw ModexError(Err::ParameterKindMismatch,
                       "parameter \"" + decl.name + "\" expects a " +
                           std::string(paramKindName(decl.kind)) + " value");
  }
  return t.body_(env);
}

} // namespace modex
