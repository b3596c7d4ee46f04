#ifndef MODEX_EXPR_HPP
#define MODEX_EXPR_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "modex/schema.hpp"
#include "modex/store.hpp"

namespace modex {

class ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;
class Template;
using TemplatePtr = std::shared_ptr<const Template>;

/// Parameter bindings: data values or templates. Lookup of an unbound name
/// is an error, never a default.
class ParamEnv {
public:
  using Entry = std::variant<Value, TemplatePtr>;

  ParamEnv& bind(std::string name, Value v);
  ParamEnv& bind(std::string name, TemplatePtr t);

  const Entry* find(std::string_view name) const;
  const Value& value(std::string_view name) const;       // throws UnboundParameter
  const TemplatePtr& tmpl(std::string_view name) const;  // throws UnboundParameter

  auto begin() const { return vars_.begin(); }
  auto end() const { return vars_.end(); }

private:
  std::map<std::string, Entry, std::less<>> vars_;
};

/// A possibly parameter-dependent string (names, paths, property literals).
using StrFn = std::function<std::string(const ParamEnv&)>;
using StrExpr = std::variant<std::string, StrFn>;

/// A possibly parameter-dependent property value.
using ValueFn = std::function<Value(const ParamEnv&)>;
using ValueExpr = std::variant<Value, ValueFn>;

struct PropExpr {
  std::string name;
  ValueExpr value;
};

/// One entity-typed property of the node and its child expressions. An empty
/// property name marks namespace-only children of a model node.
struct SlotExpr {
  std::string prop;
  std::vector<ExprPtr> children;
};

struct MuNode {
  std::optional<StrExpr> name;
  const TypeSchema* schema = nullptr;
  std::vector<PropExpr> props;
  std::vector<SlotExpr> slots;
};

struct EpsNode {
  std::optional<StrExpr> name;
  const TypeDescriptor* type = nullptr;
  std::vector<PropExpr> props;
  std::vector<SlotExpr> slots;
};

struct RhoNode {
  StrExpr qname;
};

struct KappaNode {
  std::function<std::vector<ExprPtr>(const ParamEnv&)> fn;
  /// Invoked after the produced expressions have been evaluated, with the
  /// elements they yielded. Used by the transformation engine for traces.
  std::function<void(std::span<Element* const>)> post;
};

/// A term of the model expression algebra: model creation, element creation,
/// reference, or computation.
class ExprNode {
public:
  explicit ExprNode(MuNode n) : node_(std::move(n)) {}
  explicit ExprNode(EpsNode n) : node_(std::move(n)) {}
  explicit ExprNode(RhoNode n) : node_(std::move(n)) {}
  explicit ExprNode(KappaNode n) : node_(std::move(n)) {}

  const MuNode* mu() const { return std::get_if<MuNode>(&node_); }
  const EpsNode* eps() const { return std::get_if<EpsNode>(&node_); }
  const RhoNode* rho() const { return std::get_if<RhoNode>(&node_); }
  const KappaNode* kappa() const { return std::get_if<KappaNode>(&node_); }

private:
  std::variant<MuNode, EpsNode, RhoNode, KappaNode> node_;
};

ExprPtr mu(std::optional<StrExpr> name, const TypeSchema* schema, std::vector<PropExpr> props,
           std::vector<SlotExpr> slots);
ExprPtr eps(std::optional<StrExpr> name, const TypeDescriptor* type, std::vector<PropExpr> props,
            std::vector<SlotExpr> slots);
ExprPtr rho(StrExpr qname);
ExprPtr kappa(std::function<std::vector<ExprPtr>(const ParamEnv&)> fn,
              std::function<void(std::span<Element* const>)> post = {});

/// True iff the expression contains no computation nodes and no
/// parameter-dependent literals.
bool isGround(const ExprNode& e);

/// Structural equality of ground expressions.
bool groundEqual(const ExprNode& a, const ExprNode& b);

/// Limits on computation-node expansion. Exceeding either limit aborts with
/// GuardExceeded.
struct ReductionGuard {
  int maxKappaDepth = 64;
  size_t maxNodes = 1'000'000;
};

/// Replaces every computation node by the expressions it produces and
/// resolves every parameter-dependent literal. The result is ground.
ExprPtr reduce(const ExprPtr& e, const ParamEnv& env, const ReductionGuard& guard = {});

/// Document-order evaluation into `enclosing`. Returns the top-level
/// elements the expression produced or retrieved.
std::vector<Element*> evaluate(Store& store, const ExprPtr& e, const ParamEnv& env,
                               Model& enclosing, const ReductionGuard& guard = {});

// --- templates -------------------------------------------------------------

enum class ParamKind { String, Number, Boolean, TemplateKind };

std::string_view paramKindName(ParamKind k);

struct ParamDecl {
  std::string name;
  ParamKind kind;
};

/// A parameterized model expression. Instantiation validates the bindings
/// and produces the expression for that environment.
class Template {
public:
  Template(std::vector<ParamDecl> params, std::function<ExprPtr(const ParamEnv&)> body)
      : params_(std::move(params)), body_(std::move(body)) {}

  const std::vector<ParamDecl>& params() const { return params_; }
  const ParamDecl* param(std::string_view name) const;

  friend ExprPtr instantiate(const Template& t, const ParamEnv& env);

private:
  std::vector<ParamDecl> params_;
  std::function<ExprPtr(const ParamEnv&)> body_;
};

/// Validates that env binds every declared parameter with the declared kind,
/// then applies the template body.
ExprPtr instantiate(const Template& t, const ParamEnv& env);

} // namespace modex

#endif
