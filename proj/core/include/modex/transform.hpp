#ifndef MODEX_TRANSFORM_HPP
#define MODEX_TRANSFORM_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modex/conformance.hpp"
#include "modex/expr.hpp"

namespace modex {

class TransformContext;

enum class RuleKind { Regular, SpecPoint, SpecOption };

std::string_view ruleKindName(RuleKind k);

/// A typed rule: maps a source element to target model expressions. Rules
/// with extra parameters are invoked directly and never take part in
/// dispatch.
struct Rule {
  using Body =
      std::function<std::vector<ExprPtr>(Element& source, const ParamEnv& env, TransformContext&)>;

  std::string name;
  const TypeDescriptor* sourceType = nullptr;
  RuleKind kind = RuleKind::Regular;
  std::string pointName; // SpecOption only: the specialization point overridden
  bool top = false;
  std::string sourceParam = "it";
  std::vector<ParamDecl> extras;
  Body body;

  bool dispatchable() const { return extras.empty(); }
};

struct TransformationSpec {
  std::string name;
  const TypeSchema* sourceSchema = nullptr;
  const TypeSchema* targetSchema = nullptr;
  std::vector<ParamDecl> params;
  std::vector<Rule> rules;

  const Rule* findRule(std::string_view name) const;
  const Rule* topRule() const;
};

/// Checks dispatch determinism (options of one point pairwise incomparable),
/// the structural well-formedness of point/option links, and reports
/// uncovered source entity types as warnings.
ValidationResult validateSpec(const TransformationSpec& spec);

/// Most specific applicable rule for the element's type. Throws
/// NoApplicableRule / AmbiguousDispatch.
const Rule& dispatch(const TransformationSpec& spec, const Element& e);

struct TraceEntry {
  std::string source;
  std::string rule;
  RuleKind ruleKind = RuleKind::Regular;
  std::string via; // "top", "apply", or "applyRule"
  std::vector<std::string> targets;
};

/// The recorded (source, rule, targets) triples of one execution, itself
/// representable as a weaving model over the built-in trace schema.
struct TraceModel {
  std::string name;
  std::string source;
  std::string target;
  std::optional<std::string> timestamp;
  std::vector<TraceEntry> entries;
};

Model& traceToModel(const TraceModel& trace, Store& store);
TraceModel traceFromModel(const Model& m); // throws MalformedTrace

/// Execution state threaded through rule bodies. apply() dispatches, and
/// applyRule() invokes a named rule directly; both record trace entries and
/// splice the produced elements into the calling position.
class TransformContext {
public:
  const TransformationSpec& spec() const { return spec_; }
  Model& sourceModel() { return source_; }
  const ParamEnv& params() const { return params_; }

  std::vector<ExprPtr> apply(Element& src);
  std::vector<ExprPtr> applyRule(std::string_view ruleName, Element& src,
                                 std::vector<Value> extraArgs = {});

private:
  friend struct ExecuteAccess;
  TransformContext(const TransformationSpec& spec, Model& source, ParamEnv params)
      : spec_(spec), source_(source), params_(std::move(params)) {}

  std::vector<ExprPtr> invoke(const Rule& rule, Element& src, std::vector<Value> extraArgs,
                              std::string via);

  const TransformationSpec& spec_;
  Model& source_;
  ParamEnv params_;
  std::vector<TraceEntry> entries_;
};

struct ExecuteResult {
  Model* target = nullptr;
  TraceModel trace;
};

/// Runs the top rule on a conforming source model; the target accumulates in
/// `targetStore` and the returned model is the single model the top rule
/// produced.
ExecuteResult execute(const TransformationSpec& spec, Model& source, const ParamEnv& params,
                      Store& targetStore, const ReductionGuard& guard = {});

/// Offline verification of an execution trace: stored references resolve in
/// the given context, dispatched entries agree with dispatch, the top entry
/// is present, and every target element is covered transitively through
/// containment.
ConformanceReport checkTrace(const TraceModel& trace, Model& target,
                             const TransformationSpec& spec, Model& source);

} // namespace modex

#endif
