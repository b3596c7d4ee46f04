#ifndef MODEX_SYNTAX_AST_HPP
#define MODEX_SYNTAX_AST_HPP

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "modex/errors.hpp"
#include "modex/expr.hpp"
#include "modex/syntax/mex.hpp"

namespace modex {
class TransformContext;
}

namespace modex::syntax {

/// Navigation over parameters and source elements: a root name (parameter,
/// loop variable, or rule argument) or ref(param) resolving a stored name in
/// the source model, followed by property steps.
struct PathExpr {
  bool refCall = false;
  std::string rootName;
  std::vector<std::string> steps;
  SourceSpan span;
};

/// String with ${...} interpolation segments.
struct StrTpl {
  struct Seg {
    std::string text;
    std::optional<PathExpr> path; // set: interpolation segment
  };
  std::vector<Seg> segs;
  SourceSpan span;

  bool literal() const;
  std::string literalText() const;
};

/// Additive integer-friendly numeric expression: term (('+'|'-') term)*.
struct NumExpr {
  struct Term {
    int sign = 1;
    double literal = 0;
    std::optional<PathExpr> path;
  };
  std::vector<Term> terms;
  SourceSpan span;
};

struct AstElement;
using AstElementPtr = std::shared_ptr<AstElement>;
struct AstFor;
struct AstIf;
struct AstParamSplice;
struct AstApply;
struct AstApplyRule;

using AstChild = std::variant<AstElementPtr, std::shared_ptr<AstFor>, std::shared_ptr<AstIf>,
                              AstParamSplice, AstApply, AstApplyRule>;

struct AstAttr {
  std::string name;
  std::variant<StrTpl, double, bool, AstElementPtr> value;
  SourceSpan span;
  std::string slot; // entity-typed attributes: the property they connect
};

struct AstElement {
  std::string tag;
  const TypeDescriptor* type = nullptr; // resolved at parse time
  bool isModelTag = false;
  bool isRef = false; // $refByName form
  StrTpl refPath;
  std::vector<AstAttr> attrs;
  std::vector<AstChild> children;
  std::vector<std::string> childSlots; // parallel to children; "" = namespace
  SourceSpan span;
};

struct AstCond {
  enum class Op { Truthy, Eq, Ne, Lt, Le, Gt, Ge, IsNull, NotNull };
  PathExpr lhs;
  Op op = Op::Truthy;
  std::variant<std::monostate, std::string, double, bool> rhs;
  SourceSpan span;
};

struct AstFor {
  std::string var;
  bool isRange = false;
  NumExpr lo, hi;
  PathExpr coll;
  std::vector<AstChild> body;
  SourceSpan span;
};

struct AstIf {
  AstCond cond;
  std::vector<AstChild> thenChildren;
  std::vector<AstChild> elseChildren;
  SourceSpan span;
};

struct AstParamSplice {
  std::string name;
  SourceSpan span;
};

struct AstApply {
  PathExpr path;
  SourceSpan span;
};

struct AstApplyRule {
  std::string rule;
  PathExpr source;
  std::vector<std::variant<NumExpr, StrTpl>> extras;
  SourceSpan span;
};

// --- parsing (shared between the expression and transformation languages) ---

class Cursor;

struct ParseScope {
  std::vector<std::string> names; // visible parameter / loop-variable names
  bool transform = false;         // apply/applyRule admitted
  bool has(std::string_view n) const;
};

AstElementPtr parseElement(Cursor& cur, const LinkSet& link, ParseScope& scope);
std::vector<AstChild> parseChildren(Cursor& cur, const LinkSet& link, ParseScope& scope,
                                    const char* stopA, const char* stopB);
void assignChildSlots(AstElement& el);
PathExpr parsePath(Cursor& cur, const ParseScope& scope);
StrTpl parseStrTpl(Cursor& cur, const ParseScope& scope);
NumExpr parseNumExpr(Cursor& cur, const ParseScope& scope);

/// Child-placement policy: the property a child of type `child` connects
/// through under a parent of type `parent`. Empty string means namespace
/// membership (model parents only); nullopt means no legal placement.
std::optional<std::string> childSlotFor(const TypeDescriptor* parent, bool parentIsModel,
                                        const TypeDescriptor* child);
/// Placement of computed children: the unique sequence-valued entity slot.
std::optional<std::string> compSlotFor(const TypeDescriptor* parent, bool parentIsModel);

// --- lowering ---------------------------------------------------------------

struct LowerCtx {
  std::shared_ptr<const LinkSet> link;
  TransformContext* transform = nullptr;
};

ExprPtr lowerElement(const AstElement& el, const ParamEnv& env, const LowerCtx& cx);
/// Flat lowering for computation bodies and rule bodies.
std::vector<ExprPtr> lowerChildren(const std::vector<AstChild>& children, const ParamEnv& env,
                                   const LowerCtx& cx);

Value evalPathValue(const PathExpr& p, const ParamEnv& env, TransformContext* ctx);
std::string evalStrTpl(const StrTpl& t, const ParamEnv& env, TransformContext* ctx);
double evalNumExpr(const NumExpr& e, const ParamEnv& env, TransformContext* ctx);
bool evalCond(const AstCond& c, const ParamEnv& env, TransformContext* ctx);
std::string valueToText(const Value& v);

} // namespace modex::syntax

#endif
