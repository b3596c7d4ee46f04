#include "modex/syntax/mmx.hpp"

#include <map>
#include <set>

#include "cursor.hpp"
#include "modex/builtins.hpp"

namespace modex::syntax {

namespace {

struct RawProp {
  std::string name;
  Cursor::Mark span;
  // typeref
  enum class Form { Base, EntityName, Ref, IRef } form = Form::Base;
  std::string a; // base name / entity name / target schema
  std::string b; // target type (Ref/IRef)
  Mult mult = Mult::One;
};

struct RawDecl {
  bool isModel = false;
  std::string name;
  std::string parent; // empty: the implicit built-in parent
  Cursor::Mark span;
  std::vector<RawProp> props;
};

struct RawInverse {
  std::string typeA, propA, typeB, propB;
  Cursor::Mark span;
};

struct RawSchema {
  std::string name;
  Cursor::Mark span;
  std::vector<RawDecl> decls;
  std::vector<RawInverse> inverses;
};

RawProp parseProp(Cursor& cur) {
  RawProp p;
  p.span = cur.mark();
  p.name = cur.ident("a property name");
  cur.skipWs(true);
  if (!cur.consume(':')) cur.fail(Err::Syntax, "expected ':' after the property name");
  cur.skipWs(true);
  auto typeMark = cur.mark();
  std::string head = cur.ident("a type");
  if (head == "string" || head == "number" || head == "boolean") {
    p.form = RawProp::Form::Base;
    p.a = head;
  } else if (head == "ref" || head == "iref") {
    cur.skipWs(true);
    if (!cur.consume('(')) cur.fail(Err::Syntax, "expected '(' after " + head);
    cur.skipWs(true);
    p.a = cur.ident("a schema name");
    cur.skipWs(true);
    if (!cur.consume("::")) cur.fail(Err::Syntax, "expected '::' between schema and type names");
    cur.skipWs(true);
    p.b = cur.ident("a type name");
    cur.skipWs(true);
    if (!cur.consume(')')) cur.fail(Err::Syntax, "expected ')'");
    p.form = head == "ref" ? RawProp::Form::Ref : RawProp::Form::IRef;
  } else {
    p.form = RawProp::Form::EntityName;
    p.a = head;
    (void)typeMark;
  }
  cur.skipWs(true);
  if (cur.consume('?')) {
    p.mult = Mult::ZeroOrOne;
  } else if (cur.consume("[+]")) {
    p.mult = Mult::OneOrMore;
  } else if (cur.consume("[]")) {
    p.mult = Mult::ZeroOrMore;
  }
  cur.skipWs(true);
  cur.consume(','); // optional separator
  return p;
}

RawSchema parseSchemaBlock(Cursor& cur) {
  RawSchema schema;
  schema.span = cur.mark();
  if (cur.ident("schema") != "schema") cur.fail(Err::Syntax, "expected \"schema\"");
  cur.skipWs(true);
  schema.name = cur.ident("a schema name");
  cur.skipWs(true);
  if (!cur.consume('{')) cur.fail(Err::Syntax, "expected '{'");
  while (true) {
    cur.skipWs(true);
    if (cur.consume('}')) break;
    if (cur.eof()) cur.fail(Err::Syntax, "unterminated schema block");
    auto declMark = cur.mark();
    std::string kw = cur.ident("entity, model, or inverse");
    if (kw == "entity" || kw == "model") {
      RawDecl decl;
      decl.isModel = kw == "model";
      decl.span = declMark;
      cur.skipWs(true);
      decl.name = cur.ident("a type name");
      cur.skipWs(true);
      if (cur.consume(':')) {
        cur.skipWs(true);
        decl.parent = cur.ident("a parent type name");
        cur.skipWs(true);
      }
      if (!cur.consume('{')) cur.fail(Err::Syntax, "expected '{'");
      while (true) {
        cur.skipWs(true);
        if (cur.consume('}')) break;
        if (cur.eof()) cur.fail(Err::Syntax, "unterminated type body");
        decl.props.push_back(parseProp(cur));
      }
      schema.decls.push_back(std::move(decl));
    } else if (kw == "inverse") {
      RawInverse inv;
      inv.span = declMark;
      cur.skipWs(true);
      inv.typeA = cur.ident("a type name");
      if (!cur.consume('.')) cur.fail(Err::Syntax, "expected '.'");
      inv.propA = cur.ident("a property name");
      cur.skipWs(true);
      if (!cur.consume("<->")) cur.fail(Err::Syntax, "expected '<->'");
      cur.skipWs(true);
      inv.typeB = cur.ident("a type name");
      if (!cur.consume('.')) cur.fail(Err::Syntax, "expected '.'");
      inv.propB = cur.ident("a property name");
      schema.inverses.push_back(std::move(inv));
    } else {
      cur.failAt(Err::Syntax, declMark, "expected entity, model, or inverse");
    }
  }
  return schema;
}

} // namespace

MmxResult parseMmx(std::string_view text, std::string_view filename,
                   std::span<const TypeSchema* const> linked) {
  Cursor cur(text, filename);
  MmxResult result;
  auto issue = [&](Err code, Cursor::Mark at, std::string msg) {
    result.issues.push_back(
        Diagnostic{code, SourceSpan{std::string(filename), at.line, at.column, 1}, std::move(msg)});
  };

  std::vector<RawSchema> raw;
  while (true) {
    cur.skipWs(true);
    if (cur.eof()) break;
    raw.push_back(parseSchemaBlock(cur));
  }
  if (raw.empty()) cur.fail(Err::Syntax, "expected at least one schema block");

  for (const RawSchema& rs : raw) {
    auto schema = std::make_unique<TypeSchema>(rs.name);

    std::map<std::string, const RawDecl*> byName;
    for (const RawDecl& d : rs.decls) {
      if (byName.count(d.name)) {
        issue(Err::DuplicateTypeName, d.span,
              "\"" + d.name + "\" is declared twice in schema " + rs.name);
        continue;
      }
      byName.emplace(d.name, &d);
    }

    size_t modelDecls = 0;
    for (const RawDecl& d : rs.decls)
      if (d.isModel && byName.at(d.name) == &d) ++modelDecls;
    if (modelDecls > 1)
      issue(Err::MissingModelType, rs.span,
            "schema " + rs.name + " declares more than one model type");

    // build a property spec; entity names become lazy references
    auto buildProps = [&](const RawDecl& d, PropertySpec& ps) {
      for (const RawProp& rp : d.props) {
        const TypeDescriptor* t = nullptr;
        switch (rp.form) {
          case RawProp::Form::Base: t = makeBase(rp.a); break;
          case RawProp::Form::Ref: t = makeRef(rp.a, rp.b); break;
          case RawProp::Form::IRef: t = makeIRef(rp.a, rp.b); break;
          case RawProp::Form::EntityName:
            if (byName.count(rp.a)) {
              t = makeRef(rs.name, rp.a);
            } else if (rp.a == "ModelElement") {
              t = modelElementType();
            } else if (rp.a == "Model") {
              t = modelType();
            } else {
              issue(Err::UnresolvedReference, rp.span,
                    "\"" + rp.a + "\" names no type of schema " + rs.name);
              continue;
            }
            break;
        }
        try {
          ps.add(rp.name, t, rp.mult);
        } catch (const ModexError& e) {
          issue(e.code(), rp.span, e.what());
        }
      }
    };

    // parents form a forest; build in dependency order
    std::map<std::string, const TypeDescriptor*> built;
    std::set<std::string> building;
    auto build = [&](auto&& self, const RawDecl& d) -> const TypeDescriptor* {
      if (auto it = built.find(d.name); it != built.end()) return it->second;
      if (building.count(d.name)) {
        issue(Err::InvalidParent, d.span, "cyclic parent chain at \"" + d.name + "\"");
        return nullptr;
      }
      building.insert(d.name);
      const TypeDescriptor* parent = nullptr;
      if (!d.parent.empty()) {
        auto pit = byName.find(d.parent);
        if (pit != byName.end()) {
          parent = self(self, *pit->second);
        } else if (d.parent == "ModelElement") {
          parent = modelElementType();
        } else if (d.parent == "Model") {
          parent = modelType();
        }
        if (!parent) {
          issue(Err::InvalidParent, d.span,
                "parent \"" + d.parent + "\" of \"" + d.name + "\" is unknown");
          building.erase(d.name);
          return nullptr;
        }
      } else {
        parent = d.isModel ? modelType() : modelElementType();
      }
      PropertySpec ps;
      buildProps(d, ps);
      const TypeDescriptor* t = nullptr;
      try {
        t = makeSubtype(parent, d.name, std::move(ps), *schema);
      } catch (const ModexError& e) {
        issue(e.code(), d.span, e.what());
      }
      building.erase(d.name);
      built.emplace(d.name, t);
      return t;
    };

    for (const RawDecl& d : rs.decls)
      if (byName.at(d.name) == &d) build(build, d);

    for (const RawDecl& d : rs.decls) {
      if (d.isModel && byName.at(d.name) == &d) {
        if (const TypeDescriptor* t = built[d.name]) {
          if (!schema->modelType()) schema->setModelType(t);
        }
      }
    }

    for (const RawInverse& inv : rs.inverses) {
      const TypeDescriptor* a = schema->findEntity(inv.typeA);
      const TypeDescriptor* b = schema->findEntity(inv.typeB);
      if (!a || !b) {
        issue(Err::InvalidInversePair, inv.span, "inverse declaration names an unknown type");
        continue;
      }
      schema->addInversePair(a, inv.propA, b, inv.propB);
    }

    result.schemas.push_back(std::move(schema));
  }

  // validate with every schema of the file (plus external links) in scope
  std::vector<const TypeSchema*> scope;
  for (const auto& s : result.schemas) scope.push_back(s.get());
  for (const TypeSchema* s : linked) scope.push_back(s);
  for (auto& s : result.schemas) {
    ValidationResult vr = validateSchema(*s, scope);
    for (const ValidationIssue& vi : vr.errors) {
      SourceSpan span{std::string(filename), 1, 1, 1};
      // map the finding back to the declaration site
      for (const RawSchema& rs : raw) {
        if (rs.name != s->name()) continue;
        span = SourceSpan{std::string(filename), rs.span.line, rs.span.column, 1};
        for (const RawDecl& d : rs.decls) {
          if (d.name != vi.typeName) continue;
          span = SourceSpan{std::string(filename), d.span.line, d.span.column, 1};
          for (const RawProp& p : d.props)
            if (p.name == vi.propName)
              span = SourceSpan{std::string(filename), p.span.line, p.span.column, 1};
        }
      }
      result.issues.push_back(Diagnostic{vi.code, span, vi.message});
    }
  }
  return result;
}

} // namespace modex::syntax
