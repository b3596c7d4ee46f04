#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "modex/builtins.hpp"
#include "modex/conformance.hpp"
#include "modex/expr.hpp"
#include "modex/syntax/loader.hpp"
#include "modex/syntax/mex.hpp"
#include "modex/syntax/mmx.hpp"
#include "modex/syntax/serialize.hpp"
#include "modex/transform.hpp"

using namespace modex;

namespace {

std::string fixturePath(const char* name) {
  return std::string(MODEX_FIXTURES_DIR) + "/" + name;
}

std::string slurp(const char* name) {
  std::ifstream in(fixturePath(name), std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

struct Shared {
  syntax::FileLoader loader;
  TemplatePtr configurable;
  const TransformationSpec* spec;
  Store sourceStore;
  Model* acme;

  Shared() {
    configurable = loader
                       .loadTemplate(fixturePath("configurable_approval.mex"),
                                     {fixturePath("workflow.mmx")})
                       .tmpl;
    spec = loader.loadTransform(fixturePath("org2wf.mtx")).transform;
    auto src = loader.loadTemplate(fixturePath("acme.mex"), {fixturePath("org.mmx")});
    auto produced =
        evaluate(sourceStore, instantiate(*src.tmpl, ParamEnv{}), ParamEnv{}, sourceStore.root());
    acme = dynamic_cast<Model*>(produced.front());
  }
};

Shared& shared() {
  static Shared s;
  return s;
}

void BM_ParseSchema(benchmark::State& state) {
  std::string text = slurp("workflow.mmx");
  for (auto _ : state) {
    auto result = syntax::parseMmx(text, "workflow.mmx");
    benchmark::DoNotOptimize(result.schemas.front().get());
  }
}
BENCHMARK(BM_ParseSchema);

void BM_ParseTemplate(benchmark::State& state) {
  std::string text = slurp("configurable_approval.mex");
  auto wf = syntax::parseMmx(slurp("workflow.mmx"), "workflow.mmx");
  for (auto _ : state) {
    syntax::LinkSet link;
    link.schemas.push_back(wf.schemas.front().get());
    TemplatePtr t = syntax::parseMex(text, "c.mex", std::move(link));
    benchmark::DoNotOptimize(t.get());
  }
}
BENCHMARK(BM_ParseTemplate);

void BM_EvaluateTemplate(benchmark::State& state) {
  Shared& s = shared();
  ParamEnv env;
  env.bind("document", Value::str("Contract"));
  env.bind("approvers", Value::num(static_cast<double>(state.range(0))));
  env.bind("mode", Value::str("parallel"));
  for (auto _ : state) {
    Store store;
    auto produced = evaluate(store, instantiate(*s.configurable, env), env, store.root());
    benchmark::DoNotOptimize(produced.front());
  }
  state.SetItemsProcessed(state.iterations() * (state.range(0) + 4));
}
BENCHMARK(BM_EvaluateTemplate)->Arg(3)->Arg(50)->Arg(500);

void BM_Transform(benchmark::State& state) {
  Shared& s = shared();
  ParamEnv env;
  env.bind("worker", Value::str("Judy"));
  env.bind("sensitivity", Value::num(3));
  for (auto _ : state) {
    Store target;
    ExecuteResult result = execute(*s.spec, *s.acme, env, target);
    benchmark::DoNotOptimize(result.target);
  }
}
BENCHMARK(BM_Transform);

void BM_Serialize(benchmark::State& state) {
  Shared& s = shared();
  ParamEnv env;
  env.bind("document", Value::str("Contract"));
  env.bind("approvers", Value::num(static_cast<double>(state.range(0))));
  env.bind("mode", Value::str("parallel"));
  Store store;
  auto produced = evaluate(store, instantiate(*s.configurable, env), env, store.root());
  auto* model = dynamic_cast<Model*>(produced.front());
  for (auto _ : state) {
    std::string text = syntax::serializeModel(*model);
    benchmark::DoNotOptimize(text.data());
  }
}
BENCHMARK(BM_Serialize)->Arg(500);

void BM_Dispatch(benchmark::State& state) {
  Shared& s = shared();
  Element* engineering = s.acme->find("Engineering");
  for (auto _ : state) {
    const Rule& r = dispatch(*s.spec, *engineering);
    benchmark::DoNotOptimize(&r);
  }
}
BENCHMARK(BM_Dispatch);

void BM_Conform(benchmark::State& state) {
  Shared& s = shared();
  for (auto _ : state) {
    ConformanceReport report = conforms(*s.acme, *s.acme->schema());
    benchmark::DoNotOptimize(report.conforms());
  }
}
BENCHMARK(BM_Conform);

} // namespace

BENCHMARK_MAIN();
