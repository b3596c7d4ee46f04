#include "modex/builtins.hpp"

namespace modex {

namespace {

struct AbstractTypes {
  TypeSchema schema{"Abstract"};
  const TypeDescriptor* modelElement = nullptr;
  const TypeDescriptor* model = nullptr;

  AbstractTypes() {
    PropertySpec elementProps;
    elementProps.add("name", makeBase("string"), Mult::One);
    modelElement = makeEntity("ModelElement", std::move(elementProps), schema);
    // The element collection of a model is structural (its namespace), not a
    // property; Model therefore adds no properties of its own.
    model = makeSubtype(modelElement, "Model", PropertySpec{}, schema);
    schema.setModelType(model);
    // no references to resolve; validated by construction (validateSchema
    // would re-enter this initializer through the implicit abstract scope)
  }
};

AbstractTypes& abstractTypes() {
  static AbstractTypes a;
  return a;
}

struct TraceTypes {
  TypeSchema schema{"Trace"};
  const TypeDescriptor* traceModel = nullptr;
  const TypeDescriptor* traceEntry = nullptr;

  TraceTypes() {
    PropertySpec entryProps;
    entryProps.add("source", makeIRef("Abstract", "ModelElement"), Mult::One);
    entryProps.add("rule", makeBase("string"), Mult::One);
    entryProps.add("ruleKind", makeBase("string"), Mult::One);
    entryProps.add("via", makeBase("string"), Mult::One);
    entryProps.add("targets", makeIRef("Abstract", "ModelElement"), Mult::ZeroOrMore);
    traceEntry = makeSubtype(modelElementType(), "TraceEntry", std::move(entryProps), schema);

    PropertySpec modelProps;
    modelProps.add("source", makeIRef("Abstract", "Model"), Mult::One);
    modelProps.add("target", makeIRef("Abstract", "Model"), Mult::One);
    modelProps.add("timestamp", makeBase("string"), Mult::ZeroOrOne);
    modelProps.add("entries", traceEntry, Mult::ZeroOrMore);
    traceModel = makeSubtype(modelType(), "TraceModel", std::move(modelProps), schema);
    schema.setModelType(traceModel);
    validateSchema(schema);
  }
};

TraceTypes& traceTypes() {
  static TraceTypes t;
  return t;
}

} // namespace

TypeSchema& abstractSchema() {
  AbstractTypes& a = abstractTypes();
  a.schema.validated_ = true;
  return a.schema;
}
const TypeDescriptor* modelElementType() { return abstractTypes().modelElement; }
const TypeDescriptor* modelType() { return abstractTypes().model; }

TypeSchema& universalSchema() {
  static TypeSchema* s = [] {
    auto* u = new TypeSchema("Universal");
    u->modelType_ = modelType();
    u->universal_ = true;
    u->validated_ = true;
    return u;
  }();
  return *s;
}

TypeSchema& traceSchema() { return traceTypes().schema; }
const TypeDescriptor* traceModelType() { return traceTypes().traceModel; }
const TypeDescriptor* traceEntryType() { return traceTypes().traceEntry; }

bool isModelType(const TypeDescriptor* t) {
  return t && t->kind() == TypeKind::Entity && isSubtype(t, modelType());
}

} // namespace modex
