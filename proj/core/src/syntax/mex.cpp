#include "modex/syntax/mex.hpp"

#include <algorithm>

#include "ast.hpp"
#include "cursor.hpp"
#include "modex/builtins.hpp"
#include "modex/transform.hpp"

namespace modex::syntax {

const TypeDescriptor* LinkSet::findTag(std::string_view name, bool* ambiguous) const {
  if (ambiguous) *ambiguous = false;
  const TypeDescriptor* found = nullptr;
  for (const TypeSchema* s : schemas) {
    if (const TypeDescriptor* t = s->findEntity(name)) {
      if (found && !sameEntity(found, t)) {
        if (ambiguous) *ambiguous = true;
        return nullptr;
      }
      if (!found) found = t;
    }
  }
  if (found) return found;
  if (const TypeDescriptor* t = traceSchema().findEntity(name)) return t;
  return abstractSchema().findEntity(name);
}

bool StrTpl::literal() const {
  return std::all_of(segs.begin(), segs.end(), [](const Seg& s) { return !s.path; });
}

std::string StrTpl::literalText() const {
  std::string out;
  for (const Seg& s : segs) out += s.text;
  return out;
}

bool ParseScope::has(std::string_view n) const {
  return std::find(names.begin(), names.end(), n) != names.end();
}

// --- child placement policy (the schema layer owns the shared rule) ------

std::optional<std::string> childSlotFor(const TypeDescriptor* parent, bool parentIsModel,
                                        const TypeDescriptor* child) {
  return routedChildSlot(parent, parentIsModel, child);
}

std::optional<std::string> compSlotFor(const TypeDescriptor* parent, bool parentIsModel) {
  return routedCompSlot(parent, parentIsModel);
}

// --- parsing ----------------------------------------------------------------

PathExpr parsePath(Cursor& cur, const ParseScope& scope) {
  PathExpr p;
  auto start = cur.mark();
  std::string first = cur.ident("a name");
  if (first == "ref" && cur.peek() == '(') {
    cur.advance();
    cur.skipWs(false);
    p.refCall = true;
    p.rootName = cur.ident("a parameter name");
    cur.skipWs(false);
    if (!cur.consume(')')) cur.fail(Err::Syntax, "expected ')' after ref(...)");
  } else {
    p.rootName = first;
  }
  if (!scope.has(p.rootName))
    cur.failAt(Err::Syntax, start, "\"" + p.rootName + "\" is not a visible parameter or variable");
  while (cur.peek() == '.' && cur.peek(1) != '.') {
    cur.advance();
    p.steps.push_back(cur.ident("a property name"));
  }
  p.span = cur.span(start);
  return p;
}

StrTpl parseStrTpl(Cursor& cur, const ParseScope& scope) {
  StrTpl out;
  auto start = cur.mark();
  if (!cur.consume('"')) cur.fail(Err::Syntax, "expected a string literal");
  std::string text;
  while (true) {
    if (cur.eof()) cur.failAt(Err::Syntax, start, "unterminated string literal");
    char c = cur.peek();
    if (c == '\n') cur.fail(Err::Syntax, "string literals may not span lines");
    if (c == '"') {
      cur.advance();
      break;
    }
    if (c == '\\') {
      cur.advance();
      char e = cur.eof() ? '\0' : cur.advance();
      if (e == '"' || e == '\\' || e == '$')
        text += e;
      else
        cur.fail(Err::Syntax, "unknown escape sequence");
      continue;
    }
    if (c == '$' && cur.peek(1) == '{') {
      cur.advance();
      cur.advance();
      out.segs.push_back(StrTpl::Seg{std::move(text), std::nullopt});
      text.clear();
      cur.skipWs(false);
      PathExpr p = parsePath(cur, scope);
      cur.skipWs(false);
      if (!cur.consume('}')) cur.fail(Err::Syntax, "expected '}' after interpolation");
      out.segs.push_back(StrTpl::Seg{"", std::move(p)});
      continue;
    }
    text += cur.advance();
  }
  if (!text.empty() || out.segs.empty()) out.segs.push_back(StrTpl::Seg{std::move(text), {}});
  out.span = cur.span(start);
  return out;
}

NumExpr parseNumExpr(Cursor& cur, const ParseScope& scope) {
  NumExpr e;
  auto start = cur.mark();
  int sign = 1;
  while (true) {
    cur.skipWs(false);
    NumExpr::Term term;
    term.sign = sign;
    if (cur.numberStart()) {
      term.literal = cur.number();
    } else if (cur.identStart()) {
      term.path = parsePath(cur, scope);
    } else {
      cur.fail(Err::Syntax, "expected a number or a name");
    }
    e.terms.push_back(std::move(term));
    cur.skipWs(false);
    // ".." terminates a range operand
    if (cur.peek() == '+' || (cur.peek() == '-' && cur.peek(1) != '.')) {
      sign = cur.advance() == '+' ? 1 : -1;
      continue;
    }
    break;
  }
  e.span = cur.span(start);
  return e;
}

namespace {

AstCond parseCond(Cursor& cur, const ParseScope& scope) {
  AstCond cond;
  auto start = cur.mark();
  cond.lhs = parsePath(cur, scope);
  cur.skipWs(false);
  struct OpTok {
    const char* text;
    AstCond::Op op;
  };
  static constexpr OpTok ops[] = {{"==", AstCond::Op::Eq}, {"!=", AstCond::Op::Ne},
                                  {"<=", AstCond::Op::Le}, {">=", AstCond::Op::Ge},
                                  {"<", AstCond::Op::Lt},  {">", AstCond::Op::Gt}};
  cond.op = AstCond::Op::Truthy;
  for (const OpTok& t : ops) {
    if (cur.consume(t.text)) {
      cond.op = t.op;
      break;
    }
  }
  if (cond.op != AstCond::Op::Truthy) {
    cur.skipWs(false);
    if (cur.identStart()) {
      auto kw = cur.mark();
      std::string word = cur.ident("a literal");
      if (word == "null") {
        if (cond.op == AstCond::Op::Eq)
          cond.op = AstCond::Op::IsNull;
        else if (cond.op == AstCond::Op::Ne)
          cond.op = AstCond::Op::NotNull;
        else
          cur.failAt(Err::Syntax, kw, "null admits only == and !=");
      } else if (word == "true" || word == "false") {
        cond.rhs = (word == "true");
      } else {
        cur.failAt(Err::Syntax, kw, "expected a literal after the comparison operator");
      }
    } else if (cur.peek() == '"') {
      StrTpl lit = parseStrTpl(cur, scope);
      if (!lit.literal())
        throw SyntaxError(Err::Syntax, lit.span, "comparison literals take no interpolation");
      cond.rhs = lit.literalText();
    } else if (cur.numberStart()) {
      cond.rhs = cur.number();
    } else {
      cur.fail(Err::Syntax, "expected a literal after the comparison operator");
    }
  }
  cond.span = cur.span(start);
  return cond;
}

AstChild parseComp(Cursor& cur, const LinkSet& link, ParseScope& scope);

bool atStop(Cursor& cur, const char* stopA, const char* stopB) {
  if (stopA && cur.startsWith(stopA)) return true;
  if (stopB && cur.startsWith(stopB)) return true;
  return false;
}

} // namespace

std::vector<AstChild> parseChildren(Cursor& cur, const LinkSet& link, ParseScope& scope,
                                    const char* stopA, const char* stopB) {
  std::vector<AstChild> out;
  while (true) {
    cur.skipWs(false);
    if (cur.eof()) cur.fail(Err::Syntax, "unexpected end of input inside children");
    if (atStop(cur, stopA, stopB)) return out;
    if (cur.startsWith("</")) return out;
    if (cur.peek() == '<') {
      out.push_back(parseElement(cur, link, scope));
    } else if (cur.peek() == '{') {
      out.push_back(parseComp(cur, link, scope));
    } else {
      cur.fail(Err::Syntax, "expected an element, a computation block, or a closing tag");
    }
  }
}

namespace {

AstChild parseComp(Cursor& cur, const LinkSet& link, ParseScope& scope) {
  auto start = cur.mark();
  cur.advance(); // '{'
  cur.skipWs(false);
  std::string kw = cur.ident("for, if, param, apply, or applyRule");
  if (kw == "for") {
    auto node = std::make_shared<AstFor>();
    cur.skipWs(false);
    node->var = cur.ident("a loop variable");
    cur.skipWs(false);
    if (cur.ident("in") != "in") cur.fail(Err::Syntax, "expected \"in\"");
    cur.skipWs(false);
    NumExpr first = parseNumExpr(cur, scope);
    cur.skipWs(false);
    if (cur.consume("..")) {
      node->isRange = true;
      node->lo = std::move(first);
      node->hi = parseNumExpr(cur, scope);
    } else {
      if (first.terms.size() != 1 || !first.terms[0].path || first.terms[0].sign != 1)
        cur.failAt(Err::Syntax, start, "expected a range lo..hi or a collection path");
      node->coll = *first.terms[0].path;
    }
    cur.skipWs(false);
    if (!cur.consume('}')) cur.fail(Err::Syntax, "expected '}' after the for header");
    scope.names.push_back(node->var);
    node->body = parseChildren(cur, link, scope, "{/for}", nullptr);
    scope.names.pop_back();
    if (!cur.consume("{/for}")) cur.fail(Err::Syntax, "expected {/for}");
    node->span = cur.span(start);
    return node;
  }
  if (kw == "if") {
    auto node = std::make_shared<AstIf>();
    cur.skipWs(false);
    node->cond = parseCond(cur, scope);
    cur.skipWs(false);
    if (!cur.consume('}')) cur.fail(Err::Syntax, "expected '}' after the condition");
    node->thenChildren = parseChildren(cur, link, scope, "{/if}", "{else}");
    if (cur.consume("{else}")) node->elseChildren = parseChildren(cur, link, scope, "{/if}", nullptr);
    if (!cur.consume("{/if}")) cur.fail(Err::Syntax, "expected {/if}");
    node->span = cur.span(start);
    return node;
  }
  if (kw == "param") {
    AstParamSplice node;
    cur.skipWs(false);
    node.name = cur.ident("a template parameter name");
    if (!scope.has(node.name))
      cur.failAt(Err::Syntax, start, "\"" + node.name + "\" is not a declared parameter");
    cur.skipWs(false);
    if (!cur.consume('}')) cur.fail(Err::Syntax, "expected '}'");
    node.span = cur.span(start);
    return node;
  }
  if (kw == "apply") {
    if (!scope.transform)
      cur.failAt(Err::Syntax, start, "{apply} is only valid inside transformation rules");
    AstApply node;
    cur.skipWs(false);
    node.path = parsePath(cur, scope);
    cur.skipWs(false);
    if (!cur.consume('}')) cur.fail(Err::Syntax, "expected '}'");
    node.span = cur.span(start);
    return node;
  }
  if (kw == "applyRule") {
    if (!scope.transform)
      cur.failAt(Err::Syntax, start, "{applyRule} is only valid inside transformation rules");
    AstApplyRule node;
    cur.skipWs(false);
    node.rule = cur.ident("a rule name");
    cur.skipWs(false);
    if (!cur.consume('(')) cur.fail(Err::Syntax, "expected '(' after the rule name");
    cur.skipWs(false);
    node.source = parsePath(cur, scope);
    cur.skipWs(false);
    while (cur.consume(',')) {
      cur.skipWs(false);
      if (cur.peek() == '"')
        node.extras.emplace_back(parseStrTpl(cur, scope));
      else
        node.extras.emplace_back(parseNumExpr(cur, scope));
      cur.skipWs(false);
    }
    if (!cur.consume(')')) cur.fail(Err::Syntax, "expected ')'");
    cur.skipWs(false);
    if (!cur.consume('}')) cur.fail(Err::Syntax, "expected '}'");
    node.span = cur.span(start);
    return node;
  }
  cur.failAt(Err::Syntax, start, "unknown computation form \"" + kw + "\"");
}

const Property* findDeclared(const TypeDescriptor* type, std::string_view name) {
  const TypeSchema* owner = type->owner();
  if (!owner) return nullptr;
  for (const Property& p : owner->resolvedProps(type))
    if (p.name == name) return &p;
  return nullptr;
}

const TypeDescriptor* unwrapToEntity(const TypeDescriptor* t) {
  while (t && (t->kind() == TypeKind::Array || t->kind() == TypeKind::Optional)) t = t->elem();
  return t && t->kind() == TypeKind::Entity ? t : nullptr;
}

const TypeDescriptor* unwrapInner(const TypeDescriptor* t) {
  while (t && (t->kind() == TypeKind::Array || t->kind() == TypeKind::Optional)) t = t->elem();
  return t;
}

} // namespace

void assignChildSlots(AstElement& el) {
  el.childSlots.clear();
  el.childSlots.reserve(el.children.size());
  for (const AstChild& child : el.children) {
    if (const AstElementPtr* sub = std::get_if<AstElementPtr>(&child)) {
      auto slot = childSlotFor(el.type, el.isModelTag, (*sub)->type);
      if (!slot)
        throw SyntaxError(Err::AmbiguousChild, (*sub)->span,
                          "no unambiguous property of " + el.type->name() + " admits a " +
                              (*sub)->tag + " child");
      el.childSlots.push_back(*slot);
      continue;
    }
    auto slot = compSlotFor(el.type, el.isModelTag);
    if (!slot) {
      SourceSpan at = std::visit(
          [](const auto& n) -> SourceSpan {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AstElementPtr> || std::is_same_v<T, std::shared_ptr<AstFor>> ||
                          std::is_same_v<T, std::shared_ptr<AstIf>>)
              return n->span;
            else
              return n.span;
          },
          child);
      throw SyntaxError(Err::AmbiguousChild, at,
                        "computed children need a unique sequence-valued slot on " +
                            el.type->name());
    }
    el.childSlots.push_back(*slot);
  }
}

AstElementPtr parseElement(Cursor& cur, const LinkSet& link, ParseScope& scope) {
  auto node = std::make_shared<AstElement>();
  auto start = cur.mark();
  if (!cur.consume('<')) cur.fail(Err::Syntax, "expected '<'");
  auto tagMark = cur.mark();
  node->tag = cur.ident("a tag name");

  bool ambiguous = false;
  node->type = link.findTag(node->tag, &ambiguous);
  if (!node->type)
    throw SyntaxError(Err::UnknownTag, cur.span(tagMark),
                      ambiguous ? "tag \"" + node->tag + "\" is declared by several linked schemas"
                                : "tag \"" + node->tag + "\" names no entity type in scope");
  node->isModelTag = isModelType(node->type);
  if (node->isModelTag && node->type->owner() && node->type->owner()->modelType() != node->type)
    throw SyntaxError(Err::UnknownTag, cur.span(tagMark),
                      "\"" + node->tag + "\" is a model type but not its schema's model type");

  // attributes
  while (true) {
    cur.skipWs(false);
    if (cur.peek() == '$') {
      auto at = cur.mark();
      cur.advance();
      std::string special = cur.ident("an attribute name");
      if (special != "refByName")
        cur.failAt(Err::Syntax, at, "unknown special attribute \"$" + special + "\"");
      cur.skipWs(false);
      if (!cur.consume('=')) cur.fail(Err::Syntax, "expected '='");
      cur.skipWs(false);
      node->isRef = true;
      node->refPath = parseStrTpl(cur, scope);
      continue;
    }
    if (!cur.identStart()) break;
    AstAttr attr;
    auto at = cur.mark();
    attr.name = cur.ident("an attribute name");
    cur.skipWs(false);
    if (!cur.consume('=')) cur.fail(Err::Syntax, "expected '=' after attribute name");
    cur.skipWs(false);
    if (cur.peek() == '"') {
      attr.value = parseStrTpl(cur, scope);
    } else if (cur.numberStart()) {
      attr.value = cur.number();
    } else if (cur.startsWith("true") || cur.startsWith("false")) {
      attr.value = (cur.ident("a boolean") == "true");
    } else if (cur.peek() == '<') {
      attr.value = parseElement(cur, link, scope);
    } else {
      cur.fail(Err::Syntax, "expected a string, number, boolean, or element value");
    }
    attr.span = cur.span(at);
    node->attrs.push_back(std::move(attr));
  }

  cur.skipWs(false);
  bool selfClosed = false;
  if (cur.consume("/>")) {
    selfClosed = true;
  } else if (cur.consume(">")) {
    node->children = parseChildren(cur, link, scope, nullptr, nullptr);
    if (!cur.consume("</")) cur.fail(Err::Syntax, "expected closing tag");
    auto closeMark = cur.mark();
    std::string closing = cur.ident("the closing tag name");
    if (closing != node->tag)
      cur.failAt(Err::Syntax, closeMark,
                 "closing tag </" + closing + "> does not match <" + node->tag + ">");
    cur.skipWs(false);
    if (!cur.consume('>')) cur.fail(Err::Syntax, "expected '>'");
  } else {
    cur.fail(Err::Syntax, "expected '>' or '/>'");
  }
  (void)selfClosed;
  node->span = cur.span(start);

  // validation against the resolved type
  if (node->isRef) {
    if (!node->attrs.empty())
      throw SyntaxError(Err::AttrOnRef, node->attrs.front().span,
                        "$refByName elements take no other attributes");
    if (!node->children.empty())
      throw SyntaxError(Err::AttrOnRef, node->span, "$refByName elements take no children");
    return node;
  }

  std::vector<std::string> seen;
  for (AstAttr& attr : node->attrs) {
    if (attr.name == "MDA_level") {
      attr.slot = "-"; // accepted and ignored
      continue;
    }
    if (attr.name == "name") {
      if (!std::holds_alternative<StrTpl>(attr.value))
        throw SyntaxError(Err::Syntax, attr.span, "the name attribute takes a string");
      if (std::count(seen.begin(), seen.end(), attr.name))
        throw SyntaxError(Err::Syntax, attr.span, "duplicate name attribute");
      seen.push_back(attr.name);
      continue;
    }
    const Property* decl = findDeclared(node->type, attr.name);
    if (!decl)
      throw SyntaxError(Err::UnknownAttribute, attr.span,
                        "\"" + attr.name + "\" is not a property of " + node->type->name());
    const TypeDescriptor* inner = unwrapInner(decl->type);
    const bool repeatable = multIsMany(decl->mult);
    if (!repeatable && std::count(seen.begin(), seen.end(), attr.name))
      throw SyntaxError(Err::Syntax, attr.span, "duplicate attribute \"" + attr.name + "\"");
    seen.push_back(attr.name);

    if (inner && inner->kind() == TypeKind::Entity) {
      const AstElementPtr* sub = std::get_if<AstElementPtr>(&attr.value);
      if (!sub)
        throw SyntaxError(Err::Syntax, attr.span,
                          "\"" + attr.name + "\" is entity-typed and takes an element value");
      if ((*sub)->type && !isSubtype((*sub)->type, inner))
        throw SyntaxError(Err::Syntax, attr.span,
                          "element of type " + (*sub)->type->name() + " does not fit \"" +
                              attr.name + "\"");
      attr.slot = attr.name;
      continue;
    }
    // data or instance-reference position; mismatched base domains are a
    // conformance finding, not a parse error
    if (std::holds_alternative<AstElementPtr>(attr.value))
      throw SyntaxError(Err::Syntax, attr.span,
                        "\"" + attr.name + "\" takes a data value, not an element");
    if (inner && inner->kind() == TypeKind::InstanceRef &&
        !std::holds_alternative<StrTpl>(attr.value))
      throw SyntaxError(Err::Syntax, attr.span,
                        "\"" + attr.name + "\" stores a qualified name and takes a string");
  }

  assignChildSlots(*node);
  return node;
}

// --- evaluation helpers -------------------------------------------------

std::string valueToText(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Str: return v.asStr();
    case Value::Kind::Num: return numText(v.asNum());
    case Value::Kind::Bool: return v.asBool() ? "true" : "false";
    case Value::Kind::Path: return v.asPath().render();
    case Value::Kind::Ref: return v.asRef()->qnamePath();
    case Value::Kind::Absent:
      throw ModexError(Err::BadPropertyValue, "an absent value has no text form");
    case Value::Kind::Seq:
      throw ModexError(Err::BadPropertyValue, "a sequence has no text form");
  }
  return {};
}

Value evalPathValue(const PathExpr& p, const ParamEnv& env, TransformContext* ctx) {
  Value cur;
  if (p.refCall) {
    if (!ctx)
      throw ModexError(Err::UnboundParameter, "ref(...) is only available inside transformations");
    const Value& v = env.value(p.rootName);
    if (v.kind() != Value::Kind::Str)
      throw ModexError(Err::BadPropertyValue, "ref(" + p.rootName + ") expects a string value");
    Element* el = resolveIn(ctx->sourceModel(), QName::parse(v.asStr()));
    if (!el)
      throw ModexError(Err::Unresolved,
                       "ref(" + p.rootName + "): \"" + v.asStr() + "\" does not resolve in " +
                           ctx->sourceModel().qnamePath());
    cur = Value::ref(el);
  } else {
    cur = env.value(p.rootName);
  }
  for (const std::string& step : p.steps) {
    if (cur.isAbsent()) return cur; // null-propagating navigation
    if (cur.kind() != Value::Kind::Ref)
      throw ModexError(Err::BadPropertyValue,
                       "cannot navigate \"." + step + "\" into a non-element value");
    const Value* next = cur.asRef()->prop(step);
    cur = next ? *next : Value::absent();
  }
  return cur;
}

std::string evalStrTpl(const StrTpl& t, const ParamEnv& env, TransformContext* ctx) {
  std::string out;
  for (const StrTpl::Seg& seg : t.segs) {
    out += seg.text;
    if (seg.path) out += valueToText(evalPathValue(*seg.path, env, ctx));
  }
  return out;
}

double evalNumExpr(const NumExpr& e, const ParamEnv& env, TransformContext* ctx) {
  double total = 0;
  for (const NumExpr::Term& term : e.terms) {
    double v = term.literal;
    if (term.path) {
      Value pv = evalPathValue(*term.path, env, ctx);
      if (pv.kind() != Value::Kind::Num)
        throw ModexError(Err::BadPropertyValue,
                         "\"" + term.path->rootName + "\" is not numeric");
      v = pv.asNum();
    }
    total += term.sign * v;
  }
  return total;
}

bool evalCond(const AstCond& c, const ParamEnv& env, TransformContext* ctx) {
  Value v = evalPathValue(c.lhs, env, ctx);
  switch (c.op) {
    case AstCond::Op::IsNull: return v.isAbsent();
    case AstCond::Op::NotNull: return !v.isAbsent();
    case AstCond::Op::Truthy:
      if (v.kind() == Value::Kind::Bool) return v.asBool();
      if (v.isAbsent()) return false;
      throw ModexError(Err::BadPropertyValue, "condition value is not a boolean");
    default: break;
  }
  if (c.op == AstCond::Op::Eq || c.op == AstCond::Op::Ne) {
    bool eq = false;
    if (const std::string* s = std::get_if<std::string>(&c.rhs))
      eq = v.kind() == Value::Kind::Str && v.asStr() == *s;
    else if (const double* d = std::get_if<double>(&c.rhs))
      eq = v.kind() == Value::Kind::Num && v.asNum() == *d;
    else if (const bool* b = std::get_if<bool>(&c.rhs))
      eq = v.kind() == Value::Kind::Bool && v.asBool() == *b;
    return c.op == AstCond::Op::Eq ? eq : !eq;
  }
  const double* rhs = std::get_if<double>(&c.rhs);
  if (!rhs || v.kind() != Value::Kind::Num)
    throw ModexError(Err::BadPropertyValue, "ordered comparison needs numeric operands");
  double lhs = v.asNum();
  switch (c.op) {
    case AstCond::Op::Lt: return lhs < *rhs;
    case AstCond::Op::Le: return lhs <= *rhs;
    case AstCond::Op::Gt: return lhs > *rhs;
    case AstCond::Op::Ge: return lhs >= *rhs;
    default: return false;
  }
}

// --- lowering ---------------------------------------------------------------

namespace {

long long asWhole(double d, const char* what) {
  long long n = static_cast<long long>(d);
  if (static_cast<double>(n) != d)
    throw ModexError(Err::BadPropertyValue, std::string(what) + " must be a whole number");
  return n;
}

ExprPtr lowerComp(const AstChild& child, const ParamEnv& env, const LowerCtx& cx);

std::vector<ExprPtr> lowerSeq(const std::vector<AstChild>& children, const ParamEnv& env,
                              const LowerCtx& cx) {
  std::vector<ExprPtr> out;
  for (const AstChild& child : children) {
    if (const AstElementPtr* el = std::get_if<AstElementPtr>(&child)) {
      out.push_back(lowerElement(**el, env, cx));
      continue;
    }
    if (const AstApply* ap = std::get_if<AstApply>(&child)) {
      Value v = evalPathValue(ap->path, env, cx.transform);
      for (const Value& item : v.items()) {
        if (item.kind() != Value::Kind::Ref)
          throw ModexError(Err::BadPropertyValue, "{apply} path must yield elements");
        auto nodes = cx.transform->apply(*item.asRef());
        out.insert(out.end(), nodes.begin(), nodes.end());
      }
      continue;
    }
    if (const AstApplyRule* ar = std::get_if<AstApplyRule>(&child)) {
      Value v = evalPathValue(ar->source, env, cx.transform);
      std::vector<Value> extras;
      for (const auto& extra : ar->extras) {
        if (const NumExpr* ne = std::get_if<NumExpr>(&extra))
          extras.push_back(Value::num(evalNumExpr(*ne, env, cx.transform)));
        else
          extras.push_back(Value::str(evalStrTpl(std::get<StrTpl>(extra), env, cx.transform)));
      }
      for (const Value& item : v.items()) {
        if (item.kind() != Value::Kind::Ref)
          throw ModexError(Err::BadPropertyValue, "{applyRule} source must yield elements");
        auto nodes = cx.transform->applyRule(ar->rule, *item.asRef(), extras);
        out.insert(out.end(), nodes.begin(), nodes.end());
      }
      continue;
    }
    out.push_back(lowerComp(child, env, cx));
  }
  return out;
}

ExprPtr lowerComp(const AstChild& child, const ParamEnv& env, const LowerCtx& cx) {
  if (const auto* fp = std::get_if<std::shared_ptr<AstFor>>(&child)) {
    std::shared_ptr<AstFor> node = *fp;
    return kappa([node, env, cx](const ParamEnv&) -> std::vector<ExprPtr> {
      std::vector<ExprPtr> out;
      if (node->isRange) {
        long long lo = asWhole(evalNumExpr(node->lo, env, cx.transform), "range start");
        long long hi = asWhole(evalNumExpr(node->hi, env, cx.transform), "range end");
        for (long long i = lo; i <= hi; ++i) {
          ParamEnv inner = env;
          inner.bind(node->var, Value::num(static_cast<double>(i)));
          auto sub = lowerSeq(node->body, inner, cx);
          out.insert(out.end(), sub.begin(), sub.end());
        }
      } else {
        Value coll = evalPathValue(node->coll, env, cx.transform);
        for (const Value& item : coll.items()) {
          ParamEnv inner = env;
          inner.bind(node->var, item);
          auto sub = lowerSeq(node->body, inner, cx);
          out.insert(out.end(), sub.begin(), sub.end());
        }
      }
      return out;
    });
  }
  if (const auto* ip = std::get_if<std::shared_ptr<AstIf>>(&child)) {
    std::shared_ptr<AstIf> node = *ip;
    return kappa([node, env, cx](const ParamEnv&) -> std::vector<ExprPtr> {
      return evalCond(node->cond, env, cx.transform)
                 ? lowerSeq(node->thenChildren, env, cx)
                 : lowerSeq(node->elseChildren, env, cx);
    });
  }
  const AstParamSplice& splice = std::get<AstParamSplice>(child);
  std::string name = splice.name;
  return kappa([name, env](const ParamEnv&) -> std::vector<ExprPtr> {
    const TemplatePtr& t = env.tmpl(name);
    return {instantiate(*t, env)};
  });
}

} // namespace

std::vector<ExprPtr> lowerChildren(const std::vector<AstChild>& children, const ParamEnv& env,
                                   const LowerCtx& cx) {
  return lowerSeq(children, env, cx);
}

ExprPtr lowerElement(const AstElement& el, const ParamEnv& env, const LowerCtx& cx) {
  if (el.isRef) return rho(StrExpr(evalStrTpl(el.refPath, env, cx.transform)));

  std::optional<StrExpr> name;
  std::vector<PropExpr> props;
  std::map<std::string, std::vector<ExprPtr>> slotChildren;
  std::map<std::string, std::vector<Value>> repeated;
  std::vector<std::string> repeatedOrder;

  for (const AstAttr& attr : el.attrs) {
    if (attr.slot == "-") continue; // ignored attribute
    if (attr.name == "name") {
      name = StrExpr(evalStrTpl(std::get<StrTpl>(attr.value), env, cx.transform));
      continue;
    }
    if (!attr.slot.empty()) {
      slotChildren[attr.slot].push_back(
          lowerElement(*std::get<AstElementPtr>(attr.value), env, cx));
      continue;
    }
    Value v;
    if (const StrTpl* s = std::get_if<StrTpl>(&attr.value))
      v = Value::str(evalStrTpl(*s, env, cx.transform));
    else if (const double* d = std::get_if<double>(&attr.value))
      v = Value::num(*d);
    else
      v = Value::boolean(std::get<bool>(attr.value));

    const Property* decl = findDeclared(el.type, attr.name);
    if (decl && multIsMany(decl->mult)) {
      if (!repeated.count(attr.name)) repeatedOrder.push_back(attr.name);
      repeated[attr.name].push_back(std::move(v));
    } else {
      props.push_back(PropExpr{attr.name, std::move(v)});
    }
  }
  for (const std::string& propName : repeatedOrder)
    props.push_back(PropExpr{propName, Value::seq(std::move(repeated[propName]))});

  for (size_t i = 0; i < el.children.size(); ++i)
    slotChildren[el.childSlots[i]].push_back(
        std::visit(
            [&](const auto& c) -> ExprPtr {
              using T = std::decay_t<decltype(c)>;
              if constexpr (std::is_same_v<T, AstElementPtr>)
                return lowerElement(*c, env, cx);
              else {
                auto seq = lowerSeq({el.children[i]}, env, cx);
                if (seq.size() == 1) return seq[0];
                // apply over a collection: regroup under one computation
                return kappa([seq](const ParamEnv&) { return seq; });
              }
            },
            el.children[i]));

  std::vector<SlotExpr> slots;
  auto take = [&](const std::string& propName) {
    auto it = slotChildren.find(propName);
    if (it == slotChildren.end() || it->second.empty()) return;
    slots.push_back(SlotExpr{propName, std::move(it->second)});
    slotChildren.erase(it);
  };
  if (el.isModelTag) take("");
  const TypeSchema* owner = el.type->owner();
  if (owner)
    for (const Property& p : owner->resolvedProps(el.type)) take(p.name);

  if (el.isModelTag) return mu(std::move(name), el.type->owner(), std::move(props), std::move(slots));
  return eps(std::move(name), el.type, std::move(props), std::move(slots));
}

// --- the template unit ---------------------------------------------------

namespace {

std::vector<ParamDecl> parseParamsHeader(Cursor& cur, bool allowTemplateKind) {
  std::vector<ParamDecl> out;
  cur.skipWs(false);
  if (!cur.consume('(')) cur.fail(Err::Syntax, "expected '(' after params");
  while (true) {
    cur.skipWs(false);
    if (cur.consume(')')) break;
    ParamDecl decl;
    decl.name = cur.ident("a parameter name");
    cur.skipWs(false);
    if (!cur.consume(':')) cur.fail(Err::Syntax, "expected ':' after the parameter name");
    cur.skipWs(false);
    auto kindMark = cur.mark();
    std::string kind = cur.ident("a parameter kind");
    if (kind == "string")
      decl.kind = ParamKind::String;
    else if (kind == "number")
      decl.kind = ParamKind::Number;
    else if (kind == "boolean")
      decl.kind = ParamKind::Boolean;
    else if (kind == "template" && allowTemplateKind)
      decl.kind = ParamKind::TemplateKind;
    else
      cur.failAt(Err::Syntax, kindMark, "unknown parameter kind \"" + kind + "\"");
    for (const ParamDecl& existing : out)
      if (existing.name == decl.name)
        cur.failAt(Err::Syntax, kindMark, "duplicate parameter \"" + decl.name + "\"");
    out.push_back(std::move(decl));
    cur.skipWs(false);
    cur.consume(','); // separators are optional
  }
  return out;
}

} // namespace

TemplatePtr parseMex(std::string_view text, std::string_view filename, LinkSet link) {
  Cursor cur(text, filename);
  cur.skipWs(false);

  std::vector<ParamDecl> params;
  if (cur.identStart()) {
    auto m = cur.mark();
    std::string kw = cur.ident("params or an element");
    if (kw == "params") {
      params = parseParamsHeader(cur, true);
    } else {
      cur.failAt(Err::Syntax, m, "expected a params header or an element");
    }
    cur.skipWs(false);
  }

  ParseScope scope;
  for (const ParamDecl& p : params) scope.names.push_back(p.name);
  AstElementPtr root = parseElement(cur, link, scope);
  cur.skipWs(false);
  if (!cur.eof()) cur.fail(Err::Syntax, "trailing input after the root element");

  auto sharedLink = std::make_shared<const LinkSet>(std::move(link));
  auto body = [root, sharedLink](const ParamEnv& env) -> ExprPtr {
    LowerCtx cx{sharedLink, nullptr};
    return lowerElement(*root, env, cx);
  };
  return std::make_shared<Template>(std::move(params), std::move(body));
}

} // namespace modex::syntax
