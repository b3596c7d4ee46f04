#include <doctest.h>

#include <random>

#include "generators.hpp"
#include "modex/builtins.hpp"
#include "modex/conformance.hpp"
#include "modex/equality.hpp"
#include "modex/syntax/loader.hpp"
#include "modex/syntax/mex.hpp"
#include "modex/syntax/mmx.hpp"
#include "modex/syntax/mtx.hpp"
#include "modex/syntax/serialize.hpp"
#include "test_support.hpp"

using namespace modex;
using namespace modex::test;

namespace {

syntax::LinkSet linkOf(const TypeSchema* s) {
  syntax::LinkSet link;
  link.schemas.push_back(s);
  return link;
}

} // namespace

TEST_CASE("the workflow metamodel parses to six entity types plus the model type") {
  auto result = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  REQUIRE(result.ok());
  REQUIRE(result.schemas.size() == 1);
  const TypeSchema& wf = *result.schemas.front();
  CHECK(wf.types().size() == 6);
  CHECK(wf.modelType()->name() == "WorkflowModel");
  // implicit parents: parentless entities subtype ModelElement, models Model
  CHECK(wf.findEntity("Step")->parent() == modelElementType());
  CHECK(wf.findEntity("WorkflowModel")->parent() == modelType());
  // multiplicity markers
  for (const Property& p : wf.resolvedProps(wf.findEntity("Task")))
    if (p.name == "performer") CHECK(p.mult == Mult::ZeroOrOne);
  for (const Property& p : wf.resolvedProps(wf.findEntity("Sequence")))
    if (p.name == "steps") CHECK(p.mult == Mult::ZeroOrMore);
}

TEST_CASE("a schema without a model declaration reports MissingModelType") {
  auto result = syntax::parseMmx("schema S { }", "t.mmx");
  REQUIRE_FALSE(result.ok());
  CHECK(result.issues.front().code == Err::MissingModelType);
}

TEST_CASE("inverse declarations land on the schema") {
  auto result = syntax::parseMmx(fixture("org.mmx"), "org.mmx");
  REQUIRE(result.ok());
  const TypeSchema& org = *result.schemas.front();
  REQUIRE(org.inversePairs().size() == 2);
  CHECK(org.inversePairs()[0].propA == "parent");
  CHECK(org.inversePairs()[0].propB == "subUnits");
  CHECK(org.inversePairs()[1].propA == "members");
  CHECK(org.inversePairs()[1].propB == "worksIn");
}

TEST_CASE("schema grammar errors carry spans inside the offending token") {
  try {
    syntax::parseMmx("schema S {\n  entity A : : B { }\n}", "bad.mmx");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.span().line == 2);
    CHECK(e.span().column >= 13);
  }
}

TEST_CASE("duplicate type declarations are reported with their location") {
  auto result = syntax::parseMmx("schema S { entity A { } entity A { } model M { } }", "dup.mmx");
  REQUIRE_FALSE(result.ok());
  CHECK(result.issues.front().code == Err::DuplicateTypeName);
}

TEST_CASE("a dangling ref() is reported at the property") {
  auto result = syntax::parseMmx(
      "schema S { entity P { q: ref(S::Ghost)[] } model M { } }", "ghost.mmx");
  REQUIRE_FALSE(result.ok());
  CHECK(result.issues.front().code == Err::UnresolvedReference);
  CHECK(result.issues.front().span.line == 1);
}

TEST_CASE("single elements parse to a single creation node") {
  auto wfr = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  TemplatePtr tmpl = syntax::parseMex("<Task name=\"t\"/>", "t.mex", linkOf(wfr.schemas[0].get()));
  CHECK(tmpl->params().empty());
  ExprPtr expr = instantiate(*tmpl, ParamEnv{});
  REQUIRE(expr->eps() != nullptr);
  CHECK(expr->eps()->type->name() == "Task");
  CHECK(expr->eps()->slots.empty());
}

TEST_CASE("range loops expand as an independent unroller predicts") {
  auto wfr = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  TemplatePtr tmpl = syntax::parseMex(
      "<Parallel>{for i in 1..3}<Task name=\"T${i}\"/>{/for}</Parallel>", "loop.mex",
      linkOf(wfr.schemas[0].get()));

  Store store;
  Model& m = store.newModel(store.root(), "M", wfr.schemas[0].get(), {{"name", Value::str("M")}});
  evaluate(store, instantiate(*tmpl, ParamEnv{}), ParamEnv{}, m);

  // oracle: unroll the range by hand
  std::vector<std::string> expected;
  for (int i = 1; i <= 3; ++i) expected.push_back("T" + std::to_string(i));
  Element* par = m.find("Parallel");
  REQUIRE(par);
  const Value* steps = par->prop("steps");
  REQUIRE(steps->asSeq().size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i)
    CHECK(steps->asSeq()[i].asRef()->name() == expected[i]);
}

TEST_CASE("unknown tags and stray attributes are parse errors") {
  auto wfr = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  syntax::LinkSet link = linkOf(wfr.schemas[0].get());
  CHECK_THROWS_AS(syntax::parseMex("<Worker name=\"w\"/>", "t.mex", link), SyntaxError);
  CHECK_THROWS_AS(syntax::parseMex("<Task name=\"t\" wages=3/>", "t.mex", link), SyntaxError);
  // $refByName elements take nothing else
  CHECK_THROWS_AS(syntax::parseMex("<Task $refByName=\"x\" name=\"t\"/>", "t.mex", link),
                  SyntaxError);
  // MDA_level is accepted and ignored
  TemplatePtr ok = syntax::parseMex("<Task name=\"t\" MDA_level=\"M1\"/>", "t.mex", link);
  ExprPtr expr = instantiate(*ok, ParamEnv{});
  CHECK(expr->eps()->props.empty()); // the ignored attribute leaves no trace
  REQUIRE(expr->eps()->name.has_value());
  CHECK(std::get<std::string>(*expr->eps()->name) == "t");
}

TEST_CASE("string escapes cover the quote, backslash, and dollar") {
  auto wfr = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  TemplatePtr tmpl = syntax::parseMex("<Task name=\"a\\\"b\\\\c\\$d\"/>", "esc.mex",
                                      linkOf(wfr.schemas[0].get()));
  ExprPtr expr = instantiate(*tmpl, ParamEnv{});
  REQUIRE(expr->eps()->name.has_value());
  CHECK(std::get<std::string>(*expr->eps()->name) == "a\"b\\c$d");
}

TEST_CASE("the transformation fixture parses with all five rules") {
  syntax::FileLoader loader;
  syntax::ParsedUnit unit = loader.loadTransform(fixturePath("org2wf.mtx"));
  const TransformationSpec& spec = *unit.transform;
  CHECK(spec.name == "Org2Workflow");
  CHECK(spec.rules.size() == 5);
  CHECK(spec.topRule()->name == "Organization2Approval");
  CHECK(spec.findRule("Unfold")->extras.size() == 1);
  CHECK(spec.findRule("Board2Approval")->kind == RuleKind::SpecOption);
  CHECK(spec.params.size() == 2);
  CHECK(spec.sourceSchema->name() == "Org");
  CHECK(spec.targetSchema->name() == "Workflow");
}

TEST_CASE("two top rules are rejected") {
  syntax::FileLoader loader;
  std::string text = fixture("org2wf.mtx");
  auto pos = text.find("@specpoint");
  REQUIRE(pos != std::string::npos);
  text.insert(pos, "@top\n  ");
  std::string path = tempPath("twotop") + ".mtx";
  syntax::writeTextFileAtomic(path, text);
  // schema references resolve relative to the file, so copy next to fixtures
  std::string local = fixturePath("twotop_tmp.mtx");
  syntax::writeTextFileAtomic(local, text);
  CHECK_THROWS_AS(loader.loadTransform(local), SyntaxError);
  std::remove(local.c_str());
  std::remove(path.c_str());
}

TEST_CASE("an option naming a missing point is rejected") {
  syntax::FileLoader loader;
  std::string text = fixture("org2wf.mtx");
  auto pos = text.find("@specoption(OrgUnit2Approval)");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("@specoption(OrgUnit2Approval)").size(), "@specoption(Nope)");
  std::string local = fixturePath("dangling_tmp.mtx");
  syntax::writeTextFileAtomic(local, text);
  try {
    loader.loadTransform(local);
    FAIL("expected a dangling option error");
  } catch (const SyntaxError& e) {
    CHECK(e.code() == Err::DanglingSpecOption);
  }
  std::remove(local.c_str());
}

TEST_CASE("unknown source types in rule signatures are rejected") {
  syntax::FileLoader loader;
  std::string text = fixture("org2wf.mtx");
  auto pos = text.find("(unit: OrgUnit, n: int)");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("(unit: OrgUnit, n: int)").size(), "(unit: Task, n: int)");
  std::string local = fixturePath("badsrc_tmp.mtx");
  syntax::writeTextFileAtomic(local, text);
  try {
    loader.loadTransform(local);
    FAIL("expected an unknown source type error");
  } catch (const SyntaxError& e) {
    CHECK(e.code() == Err::UnknownSourceType);
  }
  std::remove(local.c_str());
}

TEST_CASE("serialization of the documented model is byte-stable") {
  syntax::FileLoader loader;
  syntax::ParsedUnit unit =
      loader.loadTemplate(fixturePath("simple_approval.mex"), {fixturePath("workflow.mmx")});
  Store store;
  auto produced = evaluate(store, instantiate(*unit.tmpl, ParamEnv{}), ParamEnv{}, store.root());
  auto* model = dynamic_cast<Model*>(produced.front());
  std::string text = syntax::serializeModel(*model);
  CHECK(text == fixture("golden/simple_approval_out.mex"));
}

TEST_CASE("an empty model serializes to a single self-closed tag") {
  auto wfr = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  Store store;
  Model& m = store.newModel(store.root(), "M", wfr.schemas[0].get(), {{"name", Value::str("M")}});
  CHECK(syntax::serializeModel(m) == "<WorkflowModel name=\"M\"/>\n");
}

TEST_CASE("the trace serializer omits the timestamp on demand") {
  TraceModel trace;
  trace.name = "n";
  trace.source = "/a";
  trace.target = "/b";
  trace.timestamp = "2026-01-01T00:00:00.000Z";
  std::string with = syntax::serializeTrace(trace, true);
  std::string without = syntax::serializeTrace(trace, false);
  CHECK(with.find("timestamp=") != std::string::npos);
  CHECK(without.find("timestamp=") == std::string::npos);
}

TEST_CASE("parse errors in expressions point into the offending token") {
  auto wfr = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  syntax::LinkSet link = linkOf(wfr.schemas[0].get());
  std::string good = fixture("configurable_approval.mex");

  std::mt19937_64 rng(7);
  int errors = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::string mutated = good;
    size_t at = rng() % mutated.size();
    mutated[at] = static_cast<char>("<>{}\"$/\\x538"[rng() % 12]);
    try {
      syntax::parseMex(mutated, "mut.mex", link);
    } catch (const SyntaxError& e) {
      ++errors;
      CHECK(e.span().line >= 1);
      int lines = 1;
      for (char c : mutated)
        if (c == '\n') ++lines;
      CHECK(e.span().line <= lines);
      CHECK(e.span().column >= 1);
    } catch (const ModexError&) {
      ++errors; // semantic double-faults are acceptable, never crashes
    }
  }
  CHECK(errors > 50); // most single-byte mutations of a tight grammar fail
}

TEST_CASE("parsers never crash on arbitrary bytes") {
  std::mt19937_64 rng(99);
  auto wfr = syntax::parseMmx(fixture("workflow.mmx"), "workflow.mmx");
  syntax::LinkSet link = linkOf(wfr.schemas[0].get());
  for (int trial = 0; trial < 200; ++trial) {
    size_t len = rng() % 300;
    std::string junk;
    for (size_t i = 0; i < len; ++i) junk += static_cast<char>(rng() % 256);
    CHECK_THROWS_AS(syntax::parseMmx(junk, "junk.mmx"), std::exception);
    try {
      syntax::parseMex(junk, "junk.mex", link);
    } catch (const std::exception&) {
    }
    try {
      syntax::parseMtx(junk, "junk.mtx",
                       [](const std::string&) -> std::span<const TypeSchema* const> {
                         return {};
                       });
    } catch (const std::exception&) {
    }
  }
}

TEST_CASE("megamodels nest models through the parsed languages") {
  const char* mmx = R"(
schema Site {
  entity Page { hits: number? }
  model SiteModel { pages: Page[] }
}
schema Mega {
  model Registry { sites: ref(Site::SiteModel)[] }
}
)";
  auto parsed = syntax::parseMmx(mmx, "mega.mmx");
  std::string firstIssue = parsed.issues.empty() ? "" : parsed.issues.front().message;
  REQUIRE_MESSAGE(parsed.ok(), firstIssue);
  REQUIRE(parsed.schemas.size() == 2);

  syntax::LinkSet link;
  for (const auto& s : parsed.schemas) link.schemas.push_back(s.get());

  const char* mex = R"(
<Registry name="R">
  <SiteModel name="Alpha">
    <Page name="index" hits=3/>
    <Page name="about"/>
  </SiteModel>
  <SiteModel name="Beta">
    <Page name="index" hits=7/>
  </SiteModel>
</Registry>
)";
  TemplatePtr tmpl = syntax::parseMex(mex, "mega.mex", link);
  Store store;
  auto produced = evaluate(store, instantiate(*tmpl, ParamEnv{}), ParamEnv{}, store.root());
  auto* registry = dynamic_cast<Model*>(produced.front());
  REQUIRE(registry != nullptr);

  // the inner model is both an element of the outer model and a namespace
  auto* alpha = dynamic_cast<Model*>(registry->find("Alpha"));
  REQUIRE(alpha != nullptr);
  CHECK(alpha->schema()->name() == "Site");
  CHECK(alpha->find("index") != nullptr);
  CHECK(registry->prop("sites")->asSeq().size() == 2);
  // duplicate local names are scoped per namespace: both sites own an "index"
  auto* beta = dynamic_cast<Model*>(registry->find("Beta"));
  CHECK(beta->find("index") != nullptr);
  CHECK(store.resolve(store.root(), QName::parse("/R/Beta/index")) != nullptr);

  // serialization round-trips the nesting
  std::string text = syntax::serializeModel(*registry);
  TemplatePtr reparsed = syntax::parseMex(text, "mega_rt.mex", link);
  Store second;
  auto again = evaluate(second, instantiate(*reparsed, ParamEnv{}), ParamEnv{}, second.root());
  std::string why;
  CHECK_MESSAGE(structurallyEqual(*registry, *again.front(), &why), why);

  // conformance of outer and inner levels against their own schemas
  CHECK(conforms(*registry, *parsed.schemas[1]).conforms());
  CHECK(conforms(*alpha, *parsed.schemas[0]).conforms());
}

TEST_CASE("the organization fixture round-trips through the serializer") {
  syntax::FileLoader loader;
  syntax::ParsedUnit unit =
      loader.loadTemplate(fixturePath("acme.mex"), {fixturePath("org.mmx")});
  Store store;
  auto produced = evaluate(store, instantiate(*unit.tmpl, ParamEnv{}), ParamEnv{}, store.root());
  auto* acme = dynamic_cast<Model*>(produced.front());
  REQUIRE(acme != nullptr);

  std::string text = syntax::serializeModel(*acme);
  // inverse-pair bookkeeping is emitted on one side only
  CHECK(text.find("subUnits") == std::string::npos);
  CHECK(text.find("worksIn") == std::string::npos);
  CHECK(text.find("parent=<Board $refByName=\"Executive Board\"/>") != std::string::npos);

  syntax::LinkSet link;
  link.schemas.push_back(acme->schema());
  TemplatePtr reparsed = syntax::parseMex(text, "acme_rt.mex", link);
  Store second;
  auto again = evaluate(second, instantiate(*reparsed, ParamEnv{}), ParamEnv{}, second.root());
  std::string why;
  CHECK_MESSAGE(structurallyEqual(*acme, *again.front(), &why), why);
  CHECK(conforms(*dynamic_cast<Model*>(again.front()), *acme->schema()).conforms());

  // serialization is a fixpoint from the first round on
  CHECK(syntax::serializeModel(*dynamic_cast<Model*>(again.front())) == text);
}
