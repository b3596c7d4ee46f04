#include "modex/transform.hpp"

#include <algorithm>
#include <set>

#include "modex/builtins.hpp"

namespace modex {

std::string_view ruleKindName(RuleKind k) {
  switch (k) {
    case RuleKind::Regular: return "regular";
    case RuleKind::SpecPoint: return "specpoint";
    case RuleKind::SpecOption: return "specoption";
  }
  return "?";
}

const Rule* TransformationSpec::findRule(std::string_view ruleName) const {
  for (const Rule& r : rules)
    if (r.name == ruleName) return &r;
  return nullptr;
}

const Rule* TransformationSpec::topRule() const {
  for (const Rule& r : rules)
    if (r.top) return &r;
  return nullptr;
}

ValidationResult validateSpec(const TransformationSpec& spec) {
  ValidationResult result;
  auto error = [&](Err code, std::string where, std::string msg) {
    result.errors.push_back(ValidationIssue{code, std::move(where), "", std::move(msg)});
  };

  size_t tops = std::count_if(spec.rules.begin(), spec.rules.end(),
                              [](const Rule& r) { return r.top; });
  if (tops != 1)
    error(Err::MissingTopRule, spec.name,
          tops == 0 ? "no rule is marked as the top rule"
                    : "several rules are marked as the top rule");

  for (const Rule& r : spec.rules) {
    if (!r.sourceType || r.sourceType->kind() != TypeKind::Entity ||
        (spec.sourceSchema && !spec.sourceSchema->containsEntity(r.sourceType))) {
      error(Err::UnknownSourceType, r.name, "source type is not an entity type of the source schema");
      continue;
    }
    if (r.kind == RuleKind::SpecOption) {
      const Rule* point = spec.findRule(r.pointName);
      if (!point || point->kind != RuleKind::SpecPoint) {
        error(Err::DanglingSpecOption, r.name,
              "\"" + r.pointName + "\" names no specialization point");
        continue;
      }
      if (!isSubtype(r.sourceType, point->sourceType) ||
          sameEntity(r.sourceType, point->sourceType))
        error(Err::InvalidSpecOption, r.name,
              "option source type must be a strict subtype of the point's source type");
    }
  }

  // Dispatch determinism: options of one point pairwise incomparable.
  for (const Rule& point : spec.rules) {
    if (point.kind != RuleKind::SpecPoint) continue;
    std::vector<const Rule*> options;
    for (const Rule& r : spec.rules)
      if (r.kind == RuleKind::SpecOption && r.pointName == point.name) options.push_back(&r);
    for (size_t i = 0; i < options.size(); ++i)
      for (size_t j = i + 1; j < options.size(); ++j) {
        const TypeDescriptor* a = options[i]->sourceType;
        const TypeDescriptor* b = options[j]->sourceType;
        if (!a || !b) continue;
        if (isSubtype(a, b) || isSubtype(b, a))
          error(Err::AmbiguousOptions, point.name,
                "options " + options[i]->name + " and " + options[j]->name +
                    " have comparable source types");
      }
  }

  // Completeness is a property, not a requirement: report gaps as warnings.
  if (spec.sourceSchema) {
    for (const TypeDescriptor* t : spec.sourceSchema->types()) {
      bool covered = std::any_of(spec.rules.begin(), spec.rules.end(), [&](const Rule& r) {
        return r.dispatchable() && r.sourceType && isSubtype(t, r.sourceType);
      });
      if (!covered)
        result.warnings.push_back(ValidationIssue{
            Err::NoApplicableRule, t->name(), "", "no rule applies to " + t->describe()});
    }
  }
  return result;
}

const Rule& dispatch(const TransformationSpec& spec, const Element& e) {
  std::vector<const Rule*> applicable;
  for (const Rule& r : spec.rules)
    if (r.dispatchable() && r.sourceType && isSubtype(e.type(), r.sourceType))
      applicable.push_back(&r);
  if (applicable.empty())
    throw ModexError(Err::NoApplicableRule,
                     "no rule applies to " + e.qnamePath() + " of type " + e.type()->describe());

  std::vector<const Rule*> minimal;
  for (const Rule* r : applicable) {
    bool dominated = std::any_of(applicable.begin(), applicable.end(), [&](const Rule* s) {
      return s != r && isSubtype(s->sourceType, r->sourceType) &&
             !sameEntity(s->sourceType, r->sourceType);
    });
    if (!dominated) minimal.push_back(r);
  }
  if (minimal.size() != 1) {
    std::string names;
    for (const Rule* r : minimal) names += (names.empty() ? "" : ", ") + r->name;
    throw ModexError(Err::AmbiguousDispatch,
                     "rules {" + names + "} are equally specific for " + e.qnamePath());
  }
  return *minimal[0];
}

// --- trace <-> model -------------------------------------------------------

Model& traceToModel(const TraceModel& trace, Store& store) {
  PropertyRecord pr;
  pr.emplace_back("name", Value::str(trace.name));
  pr.emplace_back("source", Value::path(QName::parse(trace.source)));
  pr.emplace_back("target", Value::path(QName::parse(trace.target)));
  if (trace.timestamp) pr.emplace_back("timestamp", Value::str(*trace.timestamp));

  Model& tm = store.newModel(store.root(), store.freshLocalName(store.root(), trace.name),
                             &traceSchema(), std::move(pr));
  std::vector<Value> refs;
  for (const TraceEntry& entry : trace.entries) {
    std::string local = store.freshLocalName(tm, "TraceEntry");
    PropertyRecord ep;
    ep.emplace_back("name", Value::str(local));
    ep.emplace_back("source", Value::path(QName::parse(entry.source)));
    ep.emplace_back("rule", Value::str(entry.rule));
    ep.emplace_back("ruleKind", Value::str(std::string(ruleKindName(entry.ruleKind))));
    ep.emplace_back("via", Value::str(entry.via));
    std::vector<Value> targets;
    for (const std::string& t : entry.targets) targets.push_back(Value::path(QName::parse(t)));
    ep.emplace_back("targets", Value::seq(std::move(targets)));
    Element& el = store.newElement(tm, local, traceEntryType(), std::move(ep));
    refs.push_back(Value::ref(&el));
  }
  store.updateElement(store.root(), tm, {{"entries", Value::seq(std::move(refs))}});
  return tm;
}

namespace {

std::string pathOf(const Value& v) {
  if (v.kind() == Value::Kind::Path) return v.asPath().render();
  if (v.kind() == Value::Kind::Str) return v.asStr();
  throw ModexError(Err::MalformedTrace, "expected a qualified name value");
}

RuleKind ruleKindFromName(std::string_view s) {
  if (s == "specpoint") return RuleKind::SpecPoint;
  if (s == "specoption") return RuleKind::SpecOption;
  return RuleKind::Regular;
}

} // namespace

TraceModel traceFromModel(const Model& m) {
  if (!isSubtype(m.type(), traceModelType()))
    throw ModexError(Err::MalformedTrace, m.qnamePath() + " is not a trace model");
  TraceModel out;
  out.name = m.name();
  const Value* src = m.prop("source");
  const Value* tgt = m.prop("target");
  if (!src || !tgt) throw ModexError(Err::MalformedTrace, "trace lacks source/target references");
  out.source = pathOf(*src);
  out.target = pathOf(*tgt);
  if (const Value* ts = m.prop("timestamp"); ts && ts->kind() == Value::Kind::Str)
    out.timestamp = ts->asStr();
  for (const Element* x : m.elements()) {
    if (!isSubtype(x->type(), traceEntryType())) continue;
    TraceEntry entry;
    const Value* esrc = x->prop("source");
    const Value* rule = x->prop("rule");
    if (!esrc || !rule || rule->kind() != Value::Kind::Str)
      throw ModexError(Err::MalformedTrace, x->qnamePath() + " is not a well-formed trace entry");
    entry.source = pathOf(*esrc);
    entry.rule = rule->asStr();
    if (const Value* k = x->prop("ruleKind"); k && k->kind() == Value::Kind::Str)
      entry.ruleKind = ruleKindFromName(k->asStr());
    if (const Value* v = x->prop("via"); v && v->kind() == Value::Kind::Str) entry.via = v->asStr();
    if (const Value* ts = x->prop("targets"))
      for (const Value& item : ts->items()) entry.targets.push_back(pathOf(item));
    out.entries.push_back(std::move(entry));
  }
  return out;
}

// --- execution ---------------------------------------------------------

std::vector<ExprPtr> TransformContext::apply(Element& src) {
  const Rule& rule = dispatch(spec_, src);
  return invoke(rule, src, {}, "apply");
}

std::vector<ExprPtr> TransformContext::applyRule(std::string_view ruleName, Element& src,
                                                 std::vector<Value> extraArgs) {
  const Rule* rule = spec_.findRule(ruleName);
  if (!rule)
    throw ModexError(Err::UnknownRule,
                     "\"" + std::string(ruleName) + "\" names no rule of " + spec_.name);
  return invoke(*rule, src, std::move(extraArgs), "applyRule");
}

std::vector<ExprPtr> TransformContext::invoke(const Rule& rule, Element& src,
                                              std::vector<Value> extraArgs, std::string via) {
  if (!isSubtype(src.type(), rule.sourceType))
    throw ModexError(Err::NoApplicableRule,
                     rule.name + " expects a " + rule.sourceType->describe() + ", got " +
                         src.type()->describe());
  if (extraArgs.size() != rule.extras.size())
    throw ModexError(Err::ParameterKindMismatch,
                     rule.name + " takes " + std::to_string(rule.extras.size()) +
                         " extra arguments, got " + std::to_string(extraArgs.size()));
  for (size_t i = 0; i < extraArgs.size(); ++i) {
    const ParamDecl& decl = rule.extras[i];
    const Value& v = extraArgs[i];
    bool ok = (decl.kind == ParamKind::Number && v.kind() == Value::Kind::Num) ||
              (decl.kind == ParamKind::String && v.kind() == Value::Kind::Str) ||
              (decl.kind == ParamKind::Boolean && v.kind() == Value::Kind::Bool);
    if (!ok)
      throw ModexError(Err::ParameterKindMismatch,
                       rule.name + ": argument \"" + decl.name + "\" expects a " +
                           std::string(paramKindName(decl.kind)));
  }

  auto entryIndex = std::make_shared<size_t>(SIZE_MAX);
  auto fn = [this, &rule, &src, extraArgs = std::move(extraArgs), via = std::move(via),
             entryIndex](const ParamEnv&) -> std::vector<ExprPtr> {
    *entryIndex = entries_.size();
    entries_.push_back(TraceEntry{src.qnamePath(), rule.name, rule.kind, via, {}});
    ParamEnv env = params_;
    env.bind(rule.sourceParam, Value::ref(&src));
    for (size_t i = 0; i < extraArgs.size(); ++i) env.bind(rule.extras[i].name, extraArgs[i]);
    return rule.body(src, env, *this);
  };
  auto post = [this, entryIndex](std::span<Element* const> produced) {
    if (*entryIndex == SIZE_MAX) return;
    auto& targets = entries_[*entryIndex].targets;
    for (Element* el : produced) targets.push_back(el->qnamePath());
  };
  return {kappa(std::move(fn), std::move(post))};
}

struct ExecuteAccess {
  static TransformContext make(const TransformationSpec& spec, Model& source, ParamEnv params) {
    return TransformContext(spec, source, std::move(params));
  }
  static std::vector<TraceEntry>& entries(TransformContext& ctx) { return ctx.entries_; }
  static std::vector<ExprPtr> invoke(TransformContext& ctx, const Rule& rule, Element& src,
                                     std::string via) {
    return ctx.invoke(rule, src, {}, std::move(via));
  }
};

ExecuteResult execute(const TransformationSpec& spec, Model& source, const ParamEnv& params,
                      Store& targetStore, const ReductionGuard& guard) {
  ValidationResult valid = validateSpec(spec);
  if (!valid.ok())
    throw ModexError(valid.errors.front().code, "invalid transformation: " + valid.summary());

  for (const ParamDecl& decl : spec.params) {
    const ParamEnv::Entry* entry = params.find(decl.name);
    if (!entry)
      throw ModexError(Err::MissingParameter,
                       "transformation parameter \"" + decl.name + "\" is not bound");
    if (!std::holds_alternative<Value>(*entry))
      throw ModexError(Err::ParameterKindMismatch,
                       "transformation parameter \"" + decl.name + "\" expects a value");
  }

  if (!spec.sourceSchema || !spec.targetSchema)
    throw ModexError(Err::InvalidSchema, "transformation lacks source/target schemas");
  ConformanceReport sourceReport = conforms(source, *spec.sourceSchema);
  if (!sourceReport.conforms())
    throw ModexError(Err::SourceNotConforming,
                     "source model does not conform to " + spec.sourceSchema->name() + "\n" +
                         sourceReport.render());

  TransformContext ctx = ExecuteAccess::make(spec, source, params);
  const Rule* top = spec.topRule();
  auto invocation = ExecuteAccess::invoke(ctx, *top, source, "top");

  std::vector<Element*> produced =
      evaluate(targetStore, invocation.front(), ParamEnv{}, targetStore.root(), guard);

  Model* target = nullptr;
  for (Element* el : produced)
    if (auto* m = dynamic_cast<Model*>(el)) {
      if (target)
        throw ModexError(Err::BadRuleResult, "top rule produced more than one model");
      target = m;
    }
  if (!target) throw ModexError(Err::BadRuleResult, "top rule produced no model");

  ExecuteResult result;
  result.target = target;
  result.trace.name = source.name() + " to " + target->name();
  result.trace.source = source.qnamePath();
  result.trace.target = target->qnamePath();
  result.trace.entries = std::move(ExecuteAccess::entries(ctx));
  return result;
}

// --- trace checking ---------------------------------------------------------

namespace {

Element* resolveAbsolute(std::span<Model* const> context, const std::string& path) {
  auto q = QName::tryParse(path);
  if (!q || q->kind() != QName::Kind::Absolute) return nullptr;
  const auto& segments = q->segments();
  Model* base = nullptr;
  for (Model* m : context)
    if (m && m->name() == segments.front()) base = m;
  if (!base) return nullptr;
  if (segments.size() == 1) return base;
  Model* scope = base;
  for (size_t i = 1; i + 1 < segments.size(); ++i) {
    auto* next = dynamic_cast<Model*>(scope->find(segments[i]));
    if (!next) return nullptr;
    scope = next;
  }
  return scope->find(segments.back());
}

void collectContained(Element* el, std::set<const Element*>& covered) {
  if (!covered.insert(el).second) return;
  if (auto* m = dynamic_cast<Model*>(el)) {
    for (Element* child : m->elements()) collectContained(child, covered);
    return;
  }
  // non-model elements contain what was first connected beneath them
  Model* home = el->parentModel();
  if (!home) return;
  for (Element* sibling : home->elements())
    if (sibling->originOwner() == el) collectContained(sibling, covered);
}

void walkTarget(Model& m, std::vector<const Element*>& out) {
  out.push_back(&m);
  for (Element* el : m.elements()) {
    if (auto* inner = dynamic_cast<Model*>(el))
      walkTarget(*inner, out);
    else
      out.push_back(el);
  }
}

} // namespace

ConformanceReport checkTrace(const TraceModel& trace, Model& target,
                             const TransformationSpec& spec, Model& source) {
  ConformanceReport report;
  std::vector<Model*> context{&source, &target};

  // Stored references resolve against source and target (weaving-model view).
  Store scratch;
  Model& traceModel = traceToModel(trace, scratch);
  ConformanceReport refs = crossModelIntegrity(traceModel, context);
  report.violations.insert(report.violations.end(), refs.violations.begin(),
                           refs.violations.end());

  bool sawTop = false;
  std::set<const Element*> covered;
  for (const TraceEntry& entry : trace.entries) {
    if (entry.via == "top" && entry.source == source.qnamePath()) sawTop = true;

    const Rule* rule = spec.findRule(entry.rule);
    if (!rule) {
      report.violations.push_back(Violation{entry.source, "rule", ViolationKind::UnresolvedRef,
                                            "\"" + entry.rule + "\" names no rule of " +
                                                spec.name});
      continue;
    }
    if (entry.via == "apply") {
      Element* src = resolveAbsolute(context, entry.source);
      if (src) {
        try {
          const Rule& expected = dispatch(spec, *src);
          if (expected.name != entry.rule)
            report.violations.push_back(
                Violation{entry.source, "rule", ViolationKind::UnresolvedRef,
                          "entry records " + entry.rule + " but dispatch selects " +
                              expected.name});
        } catch (const ModexError& e) {
          report.violations.push_back(
              Violation{entry.source, "rule", ViolationKind::UnresolvedRef, e.what()});
        }
      }
    }
    for (const std::string& t : entry.targets)
      if (Element* el = resolveAbsolute(context, t)) collectContained(el, covered);
  }

  if (!sawTop)
    report.violations.push_back(Violation{source.qnamePath(), "", ViolationKind::UnresolvedRef,
                                          "no trace entry records the top rule invocation"});

  std::vector<const Element*> all;
  walkTarget(target, all);
  for (const Element* el : all)
    if (!covered.count(el))
      report.violations.push_back(Violation{el->qnamePath(), "", ViolationKind::UnresolvedRef,
                                            "target element appears in no trace entry"});
  return report;
}

} // namespace modex
