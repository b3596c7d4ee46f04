#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modex/builtins.hpp"
#include "modex/conformance.hpp"
#include "modex/equality.hpp"
#include "modex/expr.hpp"
#include "modex/syntax/loader.hpp"
#include "modex/syntax/serialize.hpp"
#include "modex/transform.hpp"

namespace {

using namespace modex;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

struct ParamArg {
  std::string name;
  std::string text;
};

std::vector<ParamArg> splitParams(const std::vector<std::string>& raw) {
  std::vector<ParamArg> out;
  for (const std::string& entry : raw) {
    auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ModexError(Err::MissingParameter, "--param takes name=value, got \"" + entry + "\"");
    out.push_back(ParamArg{entry.substr(0, eq), entry.substr(eq + 1)});
  }
  return out;
}

// Coerce command-line strings by the declared parameter kinds. Template-kind
// parameters take a .mex file path, loaded against the same schemas.
ParamEnv bindParams(const std::vector<ParamDecl>& decls, const std::vector<ParamArg>& args,
                    syntax::FileLoader& loader, const std::vector<std::string>& schemaPaths) {
  ParamEnv env;
  for (const ParamArg& arg : args) {
    const ParamDecl* decl = nullptr;
    for (const ParamDecl& d : decls)
      if (d.name == arg.name) decl = &d;
    if (!decl)
      throw ModexError(Err::MissingParameter,
                       "\"" + arg.name + "\" is not a declared parameter");
    switch (decl->kind) {
      case ParamKind::String:
        env.bind(arg.name, Value::str(arg.text));
        break;
      case ParamKind::Number: {
        try {
          size_t used = 0;
          double v = std::stod(arg.text, &used);
          if (used != arg.text.size()) throw std::invalid_argument("trailing text");
          env.bind(arg.name, Value::num(v));
        } catch (const std::exception&) {
          throw ModexError(Err::ParameterKindMismatch,
                           "\"" + arg.name + "\" expects a number, got \"" + arg.text + "\"");
        }
        break;
      }
      case ParamKind::Boolean:
        if (arg.text == "true")
          env.bind(arg.name, Value::boolean(true));
        else if (arg.text == "false")
          env.bind(arg.name, Value::boolean(false));
        else
          throw ModexError(Err::ParameterKindMismatch,
                           "\"" + arg.name + "\" expects true or false");
        break;
      case ParamKind::TemplateKind: {
        syntax::ParsedUnit unit = loader.loadTemplate(arg.text, schemaPaths);
        env.bind(arg.name, unit.tmpl);
        break;
      }
    }
  }
  for (const ParamDecl& d : decls)
    if (!env.find(d.name))
      throw ModexError(Err::MissingParameter, "parameter \"" + d.name + "\" is not bound");
  return env;
}

void writeOutput(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-")
    std::fwrite(content.data(), 1, content.size(), stdout);
  else
    syntax::writeTextFileAtomic(path, content);
}

std::string isoTimestamp() {
  using namespace std::chrono;
  auto now = system_clock::now();
  auto secs = time_point_cast<seconds>(now);
  auto ms = duration_cast<milliseconds>(now - secs).count();
  std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms));
  return buf;
}

Model& evaluateGround(syntax::FileLoader& loader, const std::string& modelPath,
                      const std::vector<std::string>& schemaPaths, Store& store) {
  syntax::ParsedUnit unit = loader.loadTemplate(modelPath, schemaPaths);
  if (!unit.tmpl->params().empty())
    throw ModexError(Err::MissingParameter,
                     "\"" + modelPath + "\" declares parameters; a model file must be ground");
  ExprPtr expr = instantiate(*unit.tmpl, ParamEnv{});
  auto produced = evaluate(store, expr, ParamEnv{}, store.root());
  if (produced.size() != 1 || !produced.front()->isModel())
    throw ModexError(Err::BadRuleResult, "\"" + modelPath + "\" does not describe a single model");
  return *static_cast<Model*>(produced.front());
}

int cmdCheckSchema(const std::string& path) {
  std::string text = syntax::readTextFile(path);
  syntax::MmxResult result = syntax::parseMmx(text, path);
  for (const syntax::Diagnostic& d : result.issues)
    std::cout << d.span.str() << "\t" << errName(d.code) << "\t" << d.message << "\n";
  return result.ok() ? kOk : kDomainError;
}

int cmdEval(const std::string& exprPath, const std::string& schemaPath,
            const std::vector<std::string>& params, const std::string& outPath, int kappaDepth) {
  syntax::FileLoader loader;
  std::vector<std::string> schemaPaths{schemaPath};
  syntax::ParsedUnit unit = loader.loadTemplate(exprPath, schemaPaths);
  ParamEnv env = bindParams(unit.tmpl->params(), splitParams(params), loader, schemaPaths);

  ReductionGuard guard;
  if (kappaDepth > 0) guard.maxKappaDepth = kappaDepth;

  Store store;
  ExprPtr expr = instantiate(*unit.tmpl, env);
  auto produced = evaluate(store, expr, env, store.root(), guard);
  if (produced.size() != 1 || !produced.front()->isModel())
    throw ModexError(Err::BadRuleResult, "the expression does not evaluate to a single model");
  auto* model = static_cast<Model*>(produced.front());

  std::string out = syntax::serializeModel(*model);
  writeOutput(outPath, out);
  std::ostream& meta = (outPath.empty() || outPath == "-") ? std::cerr : std::cout;
  meta << "elements: " << store.elementCount() << "\n";
  return kOk;
}

int cmdConform(const std::string& modelPath, const std::string& schemaPath) {
  std::string raw = syntax::readTextFile(modelPath);
  if (raw.find_first_not_of(" \t\r\n") == std::string::npos) return kOk; // nothing to check

  syntax::FileLoader loader;
  Store store;
  Model& model = evaluateGround(loader, modelPath, {schemaPath}, store);

  ConformanceReport report;
  // the bound schema of each (possibly nested) model governs its contents
  auto check = [&](auto&& self, const Model& m) -> void {
    ConformanceReport r = conforms(m, *m.schema());
    report.violations.insert(report.violations.end(), r.violations.begin(), r.violations.end());
    for (const Element* el : m.elements())
      if (const auto* inner = dynamic_cast<const Model*>(el)) self(self, *inner);
  };
  check(check, model);

  std::cout << report.render();
  return report.conforms() ? kOk : kDomainError;
}

int cmdTransform(const std::string& specPath, const std::string& sourcePath,
                 const std::string& sourceSchemaPath, const std::vector<std::string>& params,
                 const std::string& outPath, const std::string& tracePath, bool noTimestamp,
                 int kappaDepth) {
  syntax::FileLoader loader;
  syntax::ParsedUnit specUnit = loader.loadTransform(specPath);
  const TransformationSpec& spec = *specUnit.transform;

  Store sourceStore;
  Model& source = evaluateGround(loader, sourcePath, {sourceSchemaPath}, sourceStore);
  if (source.schema()->name() != spec.sourceSchema->name())
    throw ModexError(Err::InvalidSchema, "source model binds schema " + source.schema()->name() +
                                             " but the transformation reads " +
                                             spec.sourceSchema->name());

  ParamEnv env = bindParams(spec.params, splitParams(params), loader, {sourceSchemaPath});

  ReductionGuard guard;
  if (kappaDepth > 0) guard.maxKappaDepth = kappaDepth;

  Store targetStore;
  ExecuteResult result = execute(spec, source, env, targetStore, guard);
  if (!noTimestamp) result.trace.timestamp = isoTimestamp();

  writeOutput(outPath, syntax::serializeModel(*result.target));
  if (!tracePath.empty())
    writeOutput(tracePath, syntax::serializeTrace(result.trace, !noTimestamp));
  std::ostream& meta = (outPath.empty() || outPath == "-") ? std::cerr : std::cout;
  meta << "elements: " << targetStore.elementCount()
       << ", trace entries: " << result.trace.entries.size() << "\n";
  return kOk;
}

int cmdTraceCheck(const std::string& tracePath, const std::string& targetPath,
                  const std::string& sourcePath, const std::string& specPath) {
  syntax::FileLoader loader;
  syntax::ParsedUnit specUnit = loader.loadTransform(specPath);
  const TransformationSpec& spec = *specUnit.transform;
  const std::string& fromPath = specUnit.imports.at(0);
  const std::string& toPath = specUnit.imports.at(1);

  Store sourceStore, targetStore, traceStore;
  Model& source = evaluateGround(loader, sourcePath, {fromPath}, sourceStore);
  Model& target = evaluateGround(loader, targetPath, {toPath}, targetStore);
  Model& traceModel = evaluateGround(loader, tracePath, {}, traceStore);

  TraceModel trace = traceFromModel(traceModel);
  ConformanceReport report = checkTrace(trace, target, spec, source);
  std::cout << report.render();
  return report.conforms() ? kOk : kDomainError;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model expression algebra toolkit"};
  app.set_version_flag("--version", "modex 0.1.0");
  app.require_subcommand(1);

  auto* checkSchema = app.add_subcommand("check-schema", "Validate a metamodel file");
  std::string csPath;
  checkSchema->add_option("schema", csPath, "schema file (.mmx)")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model expression into a model");
  std::string evalExpr, evalSchema, evalOut;
  std::vector<std::string> evalParams;
  int evalDepth = 0;
  eval->add_option("expr", evalExpr, "expression or template file (.mex)")->required();
  eval->add_option("--schema", evalSchema, "schema file (.mmx)")->required();
  eval->add_option("--param", evalParams, "parameter binding name=value");
  eval->add_option("-o,--output", evalOut, "output file (default: stdout)");
  eval->add_option("--kappa-depth", evalDepth, "maximum computation nesting depth");

  auto* conform = app.add_subcommand("conform", "Check a model against its schema");
  std::string confModel, confSchema;
  conform->add_option("model", confModel, "model file (.mex, ground)")->required();
  conform->add_option("--schema", confSchema, "schema file (.mmx)")->required();

  auto* transform = app.add_subcommand("transform", "Run a model-to-model transformation");
  std::string trSpec, trSource, trSourceSchema, trOut, trTrace;
  std::vector<std::string> trParams;
  bool trNoTimestamp = false;
  int trDepth = 0;
  transform->add_option("--spec", trSpec, "transformation file (.mtx)")->required();
  transform->add_option("--source", trSource, "source model file (.mex)")->required();
  transform->add_option("--source-schema", trSourceSchema, "source schema file (.mmx)")
      ->required();
  transform->add_option("--param", trParams, "parameter binding name=value");
  transform->add_option("-o,--output", trOut, "target model output file");
  transform->add_option("--trace", trTrace, "trace model output file");
  transform->add_flag("--no-timestamp", trNoTimestamp, "omit the trace timestamp");
  transform->add_option("--kappa-depth", trDepth, "maximum computation nesting depth");

  auto* traceCheck = app.add_subcommand("trace-check", "Verify a transformation trace");
  std::string tcTrace, tcTarget, tcSource, tcSpec;
  traceCheck->add_option("--trace", tcTrace, "trace model file (.mex)")->required();
  traceCheck->add_option("--target", tcTarget, "target model file (.mex)")->required();
  traceCheck->add_option("--source", tcSource, "source model file (.mex)")->required();
  traceCheck->add_option("--spec", tcSpec, "transformation file (.mtx)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*checkSchema) return cmdCheckSchema(csPath);
    if (*eval) return cmdEval(evalExpr, evalSchema, evalParams, evalOut, evalDepth);
    if (*conform) return cmdConform(confModel, confSchema);
    if (*transform)
      return cmdTransform(trSpec, trSource, trSourceSchema, trParams, trOut, trTrace,
                          trNoTimestamp, trDepth);
    if (*traceCheck) return cmdTraceCheck(tcTrace, tcTarget, tcSource, tcSpec);
  } catch (const SyntaxError& e) {
    std::cerr << e.what() << "\n";
    return kUsageError;
  } catch (const ModexError& e) {
    std::cerr << e.what() << "\n";
    switch (e.code()) {
      case Err::Io:
      case Err::MissingParameter:
      case Err::ParameterKindMismatch:
        return kUsageError;
      default:
        return kDomainError;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}
