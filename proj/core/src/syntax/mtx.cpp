#include "modex/syntax/mtx.hpp"

#include <map>

#include "ast.hpp"
#include "cursor.hpp"
#include "modex/builtins.hpp"

namespace modex::syntax {

namespace {

std::string parseStringLit(Cursor& cur) {
  ParseScope empty;
  StrTpl t = parseStrTpl(cur, empty);
  if (!t.literal())
    throw SyntaxError(Err::Syntax, t.span, "schema references take no interpolation");
  return t.literalText();
}

const TypeDescriptor* findSourceType(std::span<const TypeSchema* const> schemas,
                                     std::string_view name) {
  for (const TypeSchema* s : schemas)
    if (const TypeDescriptor* t = s->findEntity(name)) return t;
  if (const TypeDescriptor* t = abstractSchema().findEntity(name)) return t;
  return nullptr;
}

struct RuleAst {
  std::vector<AstChild> children;
};

} // namespace

std::unique_ptr<TransformationSpec> parseMtx(std::string_view text, std::string_view filename,
                                             const SchemaResolver& resolve) {
  Cursor cur(text, filename);
  cur.skipWs(true);
  if (cur.ident("transform") != "transform") cur.fail(Err::Syntax, "expected \"transform\"");
  auto spec = std::make_unique<TransformationSpec>();
  cur.skipWs(true);
  spec->name = cur.ident("a transformation name");

  cur.skipWs(true);
  if (cur.ident("from") != "from") cur.fail(Err::Syntax, "expected \"from\"");
  cur.skipWs(true);
  auto fromMark = cur.mark();
  std::string fromRef = parseStringLit(cur);
  cur.skipWs(true);
  if (cur.ident("to") != "to") cur.fail(Err::Syntax, "expected \"to\"");
  cur.skipWs(true);
  auto toMark = cur.mark();
  std::string toRef = parseStringLit(cur);

  auto resolveSide = [&](const std::string& ref, Cursor::Mark at) {
    std::span<const TypeSchema* const> schemas = resolve(ref);
    if (schemas.size() != 1)
      cur.failAt(Err::Syntax, at,
                 "schema reference \"" + ref + "\" must load exactly one schema, got " +
                     std::to_string(schemas.size()));
    return schemas;
  };
  auto fromSchemas = resolveSide(fromRef, fromMark);
  auto toSchemas = resolveSide(toRef, toMark);
  spec->sourceSchema = fromSchemas.front();
  spec->targetSchema = toSchemas.front();

  LinkSet targetLink;
  for (const TypeSchema* s : toSchemas) targetLink.schemas.push_back(s);
  auto sharedLink = std::make_shared<const LinkSet>(std::move(targetLink));

  cur.skipWs(true);
  if (!cur.consume('{')) cur.fail(Err::Syntax, "expected '{'");

  std::map<std::string, Cursor::Mark> ruleSpans;
  std::vector<std::shared_ptr<RuleAst>> pendingBodies;

  while (true) {
    cur.skipWs(true);
    if (cur.consume('}')) break;
    if (cur.eof()) cur.fail(Err::Syntax, "unterminated transform block");

    // annotations
    bool top = false;
    RuleKind kind = RuleKind::Regular;
    std::string pointName;
    while (cur.peek() == '@') {
      auto at = cur.mark();
      cur.advance();
      std::string anno = cur.ident("an annotation");
      if (anno == "top") {
        top = true;
      } else if (anno == "specpoint") {
        kind = RuleKind::SpecPoint;
      } else if (anno == "specoption") {
        kind = RuleKind::SpecOption;
        cur.skipWs(true);
        if (!cur.consume('(')) cur.fail(Err::Syntax, "expected '(' after @specoption");
        cur.skipWs(true);
        pointName = cur.ident("a specialization point name");
        cur.skipWs(true);
        if (!cur.consume(')')) cur.fail(Err::Syntax, "expected ')'");
      } else {
        cur.failAt(Err::Syntax, at, "unknown annotation \"@" + anno + "\"");
      }
      cur.skipWs(true);
    }

    auto ruleMark = cur.mark();
    std::string kw = cur.ident("rule or params");
    if (kw == "params") {
      if (top || kind != RuleKind::Regular)
        cur.failAt(Err::Syntax, ruleMark, "annotations precede rules, not params");
      cur.skipWs(true);
      if (!cur.consume('(')) cur.fail(Err::Syntax, "expected '('");
      while (true) {
        cur.skipWs(true);
        if (cur.consume(')')) break;
        ParamDecl decl;
        decl.name = cur.ident("a parameter name");
        cur.skipWs(true);
        if (!cur.consume(':')) cur.fail(Err::Syntax, "expected ':'");
        cur.skipWs(true);
        auto kindMark = cur.mark();
        std::string k = cur.ident("a parameter kind");
        if (k == "string")
          decl.kind = ParamKind::String;
        else if (k == "number")
          decl.kind = ParamKind::Number;
        else if (k == "boolean")
          decl.kind = ParamKind::Boolean;
        else
          cur.failAt(Err::Syntax, kindMark, "unknown parameter kind \"" + k + "\"");
        spec->params.push_back(std::move(decl));
        cur.skipWs(true);
        cur.consume(',');
      }
      continue;
    }
    if (kw != "rule") cur.failAt(Err::Syntax, ruleMark, "expected a rule declaration");

    Rule rule;
    rule.top = top;
    rule.kind = kind;
    rule.pointName = pointName;
    cur.skipWs(true);
    auto nameMark = cur.mark();
    rule.name = cur.ident("a rule name");
    if (ruleSpans.count(rule.name))
      cur.failAt(Err::Syntax, nameMark, "rule \"" + rule.name + "\" is declared twice");
    ruleSpans.emplace(rule.name, nameMark);

    cur.skipWs(true);
    if (!cur.consume('(')) cur.fail(Err::Syntax, "expected '('");
    cur.skipWs(true);
    rule.sourceParam = cur.ident("the source parameter name");
    cur.skipWs(true);
    if (!cur.consume(':')) cur.fail(Err::Syntax, "expected ':'");
    cur.skipWs(true);
    auto typeMark = cur.mark();
    std::string typeName = cur.ident("a source type");
    rule.sourceType = findSourceType(fromSchemas, typeName);
    if (!rule.sourceType)
      throw SyntaxError(Err::UnknownSourceType, cur.span(typeMark),
                        "\"" + typeName + "\" is not an entity type of " +
                            spec->sourceSchema->name());
    cur.skipWs(true);
    while (cur.consume(',')) {
      cur.skipWs(true);
      ParamDecl extra;
      extra.name = cur.ident("an argument name");
      cur.skipWs(true);
      if (!cur.consume(':')) cur.fail(Err::Syntax, "expected ':'");
      cur.skipWs(true);
      auto kmark = cur.mark();
      std::string k = cur.ident("int or string");
      if (k == "int")
        extra.kind = ParamKind::Number;
      else if (k == "string")
        extra.kind = ParamKind::String;
      else
        cur.failAt(Err::Syntax, kmark, "rule arguments are int or string");
      rule.extras.push_back(std::move(extra));
      cur.skipWs(true);
    }
    if (!cur.consume(')')) cur.fail(Err::Syntax, "expected ')'");
    cur.skipWs(true);
    if (!cur.consume('{')) cur.fail(Err::Syntax, "expected '{' before the rule body");

    ParseScope scope;
    scope.transform = true;
    for (const ParamDecl& p : spec->params) scope.names.push_back(p.name);
    scope.names.push_back(rule.sourceParam);
    for (const ParamDecl& p : rule.extras) scope.names.push_back(p.name);

    auto body = std::make_shared<RuleAst>();
    body->children = parseChildren(cur, *sharedLink, scope, "}", nullptr);
    if (!cur.consume('}')) cur.fail(Err::Syntax, "expected '}' after the rule body");

    rule.body = [body, sharedLink](Element&, const ParamEnv& env,
                                   TransformContext& ctx) -> std::vector<ExprPtr> {
      LowerCtx cx{sharedLink, &ctx};
      return lowerChildren(body->children, env, cx);
    };
    spec->rules.push_back(std::move(rule));
    pendingBodies.push_back(body);
  }

  cur.skipWs(true);
  if (!cur.eof()) cur.fail(Err::Syntax, "trailing input after the transform block");

  // rule-invocation references resolve against the finished rule set
  auto checkCalls = [&](auto&& self, const std::vector<AstChild>& children) -> void {
    for (const AstChild& child : children) {
      if (const auto* el = std::get_if<AstElementPtr>(&child)) {
        self(self, (*el)->children);
      } else if (const auto* f = std::get_if<std::shared_ptr<AstFor>>(&child)) {
        self(self, (*f)->body);
      } else if (const auto* i = std::get_if<std::shared_ptr<AstIf>>(&child)) {
        self(self, (*i)->thenChildren);
        self(self, (*i)->elseChildren);
      } else if (const auto* ar = std::get_if<AstApplyRule>(&child)) {
        const Rule* called = spec->findRule(ar->rule);
        if (!called)
          throw SyntaxError(Err::UnknownRule, ar->span,
                            "\"" + ar->rule + "\" names no rule of " + spec->name);
        if (ar->extras.size() != called->extras.size())
          throw SyntaxError(Err::Syntax, ar->span,
                            called->name + " takes " + std::to_string(called->extras.size()) +
                                " extra arguments");
        for (size_t i = 0; i < ar->extras.size(); ++i) {
          const bool isStr = std::holds_alternative<StrTpl>(ar->extras[i]);
          const bool wantsStr = called->extras[i].kind == ParamKind::String;
          if (isStr != wantsStr)
            throw SyntaxError(Err::Syntax, ar->span,
                              "argument \"" + called->extras[i].name + "\" of " + called->name +
                                  (wantsStr ? " takes a string" : " takes a number"));
        }
      }
    }
  };
  for (const auto& body : pendingBodies) checkCalls(checkCalls, body->children);

  ValidationResult vr = validateSpec(*spec);
  if (!vr.ok()) {
    const ValidationIssue& first = vr.errors.front();
    auto it = ruleSpans.find(first.typeName);
    SourceSpan span{std::string(filename), 1, 1, 1};
    if (it != ruleSpans.end())
      span = SourceSpan{std::string(filename), it->second.line, it->second.column, 1};
    throw SyntaxError(first.code, span, first.message);
  }
  return spec;
}

} // namespace modex::syntax
