#include <doctest.h>

#include "modex/builtins.hpp"
#include "modex/schema.hpp"

using namespace modex;

namespace {

// the workflow metamodel, built through the library constructors
struct WorkflowTypes {
  TypeSchema schema{"WF"};
  const TypeDescriptor* step;
  const TypeDescriptor* task;
  const TypeDescriptor* sequence;
  const TypeDescriptor* parallel;
  const TypeDescriptor* process;
  const TypeDescriptor* model;

  WorkflowTypes() {
    step = makeSubtype(modelElementType(), "Step", {}, schema);
    PropertySpec taskProps;
    taskProps.add("performer", makeOptional(makeBase("string")), Mult::One);
    task = makeSubtype(step, "Task", std::move(taskProps), schema);
    PropertySpec seqProps;
    seqProps.add("steps", step, Mult::ZeroOrMore);
    sequence = makeSubtype(step, "Sequence", std::move(seqProps), schema);
    PropertySpec parProps;
    parProps.add("steps", step, Mult::ZeroOrMore);
    parallel = makeSubtype(step, "Parallel", std::move(parProps), schema);
    PropertySpec procProps;
    procProps.add("flow", step, Mult::One);
    process = makeSubtype(step, "Process", std::move(procProps), schema);
    PropertySpec modelProps;
    modelProps.add("processes", process, Mult::ZeroOrMore);
    model = makeSubtype(modelType(), "WorkflowModel", std::move(modelProps), schema);
    schema.setModelType(model);
    REQUIRE(validateSchema(schema).ok());
  }
};

} // namespace

TEST_CASE("base types are canonical and closed") {
  const TypeDescriptor* s = makeBase("string");
  CHECK(s->kind() == TypeKind::Base);
  CHECK(s == makeBase("string")); // idempotent: same identity every time
  CHECK(makeBase("number") != s);
  CHECK_THROWS_WITH_AS(makeBase("complex"), doctest::Contains("complex"), ModexError);
}

TEST_CASE("entity creation registers the descriptor and rejects duplicates") {
  TypeSchema schema("S1");
  PropertySpec props;
  props.add("name", makeBase("string"), Mult::One);
  const TypeDescriptor* me = makeEntity("ModelElement", std::move(props), schema);
  CHECK(me->kind() == TypeKind::Entity);
  CHECK(me->parent() == nullptr);
  CHECK(schema.findEntity("ModelElement") == me);

  const TypeDescriptor* empty = makeEntity("X", {}, schema);
  CHECK(allProps(empty).empty()); // an empty own spec is fine

  CHECK_THROWS_AS(makeEntity("ModelElement", {}, schema), ModexError);
}

TEST_CASE("subtypes extend their parents without shadowing") {
  WorkflowTypes wf;
  CHECK(isSubtype(wf.task, wf.step));
  CHECK(isSubtype(wf.model, modelType()));

  // "name" is inherited from ModelElement
  PropertySpec bad;
  bad.add("name", makeBase("string"), Mult::One);
  CHECK_THROWS_AS(makeSubtype(wf.step, "Bad", std::move(bad), wf.schema), ModexError);

  CHECK_THROWS_AS(makeSubtype(makeBase("string"), "NotEntity", {}, wf.schema), ModexError);
}

TEST_CASE("wrapper constructors intern their results") {
  const TypeDescriptor* opt = makeOptional(makeBase("string"));
  CHECK(opt->kind() == TypeKind::Optional);
  CHECK(opt == makeOptional(makeBase("string")));

  const TypeDescriptor* nested = makeArray(makeArray(makeBase("number")));
  CHECK(nested->kind() == TypeKind::Array);
  CHECK(nested->elem()->kind() == TypeKind::Array);
  CHECK(nested->elem()->elem() == makeBase("number"));

  const TypeDescriptor* ref = makeRef("OrgModel-Schema", "OrgUnit");
  CHECK(ref->kind() == TypeKind::Ref);
  CHECK(ref->targetSchema() == "OrgModel-Schema");
  CHECK(ref->targetName() == "OrgUnit");
  CHECK(ref == makeRef("OrgModel-Schema", "OrgUnit"));

  const TypeDescriptor* iref = makeIRef("Org", "Worker");
  CHECK(iref->kind() == TypeKind::InstanceRef);
}

TEST_CASE("the subtype relation follows parent chains") {
  WorkflowTypes wf;
  CHECK(isSubtype(wf.task, wf.task)); // reflexive
  CHECK(isSubtype(wf.task, modelElementType()));
  CHECK_FALSE(isSubtype(wf.task, wf.process));
  CHECK_FALSE(isSubtype(wf.process, wf.task));
  CHECK_THROWS_AS(isSubtype(makeRef("WF", "Task"), wf.step), ModexError);
}

TEST_CASE("subtype relation is a partial order on small schemas") {
  // exhaustive pairwise check over a chain-and-fork shape
  TypeSchema schema("PO");
  std::vector<const TypeDescriptor*> types;
  types.push_back(makeSubtype(modelElementType(), "A", {}, schema));
  types.push_back(makeSubtype(types[0], "B", {}, schema));
  types.push_back(makeSubtype(types[1], "C", {}, schema));
  types.push_back(makeSubtype(types[0], "D", {}, schema));
  types.push_back(makeSubtype(modelElementType(), "E", {}, schema));
  for (size_t i = 0; i < 15; ++i)
    types.push_back(makeSubtype(types[i % types.size()], "X" + std::to_string(i), {}, schema));

  for (const TypeDescriptor* a : types) {
    CHECK(isSubtype(a, a));
    for (const TypeDescriptor* b : types) {
      if (isSubtype(a, b) && isSubtype(b, a)) CHECK(sameEntity(a, b)); // antisymmetry
      for (const TypeDescriptor* c : types)
        if (isSubtype(a, b) && isSubtype(b, c)) CHECK(isSubtype(a, c)); // transitivity
    }
  }
}

TEST_CASE("allProps lists ancestors first in declaration order") {
  TypeSchema schema("Org");
  PropertySpec workerProps;
  workerProps.add("role", makeOptional(makeBase("string")), Mult::One);
  const TypeDescriptor* worker = makeSubtype(modelElementType(), "Worker", std::move(workerProps), schema);
  PropertySpec unitProps;
  unitProps.add("parent", makeRef("Org", "OrgUnit"), Mult::ZeroOrOne);
  unitProps.add("subUnits", makeRef("Org", "OrgUnit"), Mult::ZeroOrMore);
  unitProps.add("members", worker, Mult::ZeroOrMore);
  const TypeDescriptor* unit = makeSubtype(modelElementType(), "OrgUnit", std::move(unitProps), schema);
  PropertySpec deptProps;
  deptProps.add("manager", worker, Mult::One);
  const TypeDescriptor* dept = makeSubtype(unit, "Department", std::move(deptProps), schema);
  const TypeDescriptor* board = makeSubtype(unit, "Board", {}, schema);

  auto deptAll = allProps(dept);
  REQUIRE(deptAll.size() == 5);
  CHECK(deptAll[0].name == "name");
  CHECK(deptAll[1].name == "parent");
  CHECK(deptAll[2].name == "subUnits");
  CHECK(deptAll[3].name == "members");
  CHECK(deptAll[4].name == "manager");

  auto base = allProps(modelElementType());
  REQUIRE(base.size() == 1);
  CHECK(base[0].name == "name");

  // a subtype adding nothing exposes exactly its parent's properties
  auto boardAll = allProps(board);
  auto unitAll = allProps(unit);
  REQUIRE(boardAll.size() == unitAll.size());
  for (size_t i = 0; i < boardAll.size(); ++i) {
    CHECK(boardAll[i].name == unitAll[i].name);
    CHECK(boardAll[i].type == unitAll[i].type);
    CHECK(boardAll[i].mult == unitAll[i].mult);
  }
}

TEST_CASE("inherited entries keep identical types and multiplicities") {
  WorkflowTypes wf;
  auto parentProps = allProps(wf.step);
  auto childProps = allProps(wf.task);
  for (const Property& p : parentProps) {
    const Property* inherited = nullptr;
    for (const Property& q : childProps)
      if (q.name == p.name) inherited = &q;
    REQUIRE(inherited != nullptr);
    CHECK(inherited->type == p.type);
    CHECK(inherited->mult == p.mult);
  }
}
