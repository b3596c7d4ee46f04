#ifndef MODEX_STORE_HPP
#define MODEX_STORE_HPP

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "modex/qname.hpp"
#include "modex/types.hpp"

namespace modex {

class Element;
class Model;
class Store;
class TypeSchema;

/// A property value: absent, a data value, a reference to a model element,
/// a qualified name stored as data, or a sequence of values.
class Value {
public:
  enum class Kind { Absent, Str, Num, Bool, Ref, Path, Seq };

  Value() = default;
  static Value absent() { return Value(); }
  static Value str(std::string s) { return Value(V(std::move(s))); }
  static Value num(double d) { return Value(V(d)); }
  static Value boolean(bool b) { return Value(V(b)); }
  static Value ref(Element* e) { return Value(V(e)); }
  static Value path(QName q) { return Value(V(std::move(q))); }
  static Value seq(std::vector<Value> vs) { return Value(V(std::move(vs))); }

  Kind kind() const { return static_cast<Kind>(v_.index()); }
  bool isAbsent() const { return kind() == Kind::Absent; }

  const std::string& asStr() const { return std::get<std::string>(v_); }
  double asNum() const { return std::get<double>(v_); }
  bool asBool() const { return std::get<bool>(v_); }
  Element* asRef() const { return std::get<Element*>(v_); }
  const QName& asPath() const { return std::get<QName>(v_); }
  const std::vector<Value>& asSeq() const { return std::get<std::vector<Value>>(v_); }
  std::vector<Value>& asSeq() { return std::get<std::vector<Value>>(v_); }

  /// Flatten to the item list: Absent -> [], Seq -> items, scalar -> [v].
  std::vector<Value> items() const;

  bool operator==(const Value&) const = default;

private:
  using V = std::variant<std::monostate, std::string, double, bool, Element*, QName,
                         std::vector<Value>>;
  explicit Value(V v) : v_(std::move(v)) {}
  V v_;
};

using PropertyRecord = std::vector<std::pair<std::string, Value>>;

/// A named, typed, property-bearing value owned by a model.
class Element {
public:
  virtual ~Element() = default;

  const std::string& name() const { return name_; }
  const TypeDescriptor* type() const { return type_; }
  Model* parentModel() const { return parent_; }
  bool isModel() const;
  size_t creationIndex() const { return creationIndex_; }

  QName qname() const;
  std::string qnamePath() const;

  const Value* prop(std::string_view name) const;
  const PropertyRecord& props() const { return props_; }

  // Serialization provenance: the first element (or model) this element was
  // connected under, and through which property.
  const Element* originOwner() const { return originOwner_; }
  const std::string& originProp() const { return originProp_; }

protected:
  friend class Store;
  Element() = default;

  std::string name_;
  const TypeDescriptor* type_ = nullptr;
  Model* parent_ = nullptr;
  PropertyRecord props_;
  Element* originOwner_ = nullptr;
  std::string originProp_;
  size_t creationIndex_ = 0;
};

/// A model element that additionally owns a namespace of elements and a
/// bound type schema.
class Model : public Element {
public:
  const TypeSchema* schema() const { return schema_; }
  std::span<Element* const> elements() const { return elements_; }
  Element* find(std::string_view localName) const;
  bool isRoot() const { return parent_ == nullptr; }

private:
  friend class Store;
  Model() = default;

  const TypeSchema* schema_ = nullptr;
  std::vector<Element*> elements_;
  std::map<std::string, Element*, std::less<>> byName_;
};

/// The runtime model universe. Owns every element; the root model is the
/// outermost namespace and carries the universal schema. Elements are never
/// deleted or renamed.
class Store {
public:
  Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  Model& root() { return *root_; }
  const Model& root() const { return *root_; }

  /// Number of elements created so far (the root model not included).
  size_t elementCount() const { return arena_.size() - 1; }

  Element& newElement(Model& m, std::string_view name, const TypeDescriptor* type,
                      PropertyRecord pr);
  Model& newModel(Model& m, std::string_view name, const TypeSchema* schema, PropertyRecord pr);

  /// Merge semantics: scalars override, declared-sequence properties
  /// concatenate. Type and name never change; multiplicities are not
  /// enforced here.
  void updateElement(Model& m, Element& x, PropertyRecord pr);

  /// Pure lookup; returns nullptr when any segment fails to resolve.
  Element* resolve(const Model& scope, const QName& q) const;

  /// Total element count check helper for tests.
  std::span<const std::unique_ptr<Element>> elements() const { return arena_; }

  /// First unused local name in m derived from `base`: "base", "base-2", ...
  std::string freshLocalName(const Model& m, std::string_view base) const;

private:
  Element& insert(Model& m, std::unique_ptr<Element> e, std::string_view name,
                  const TypeDescriptor* type, PropertyRecord pr);
  void applyEntry(Element& x, const std::string& name, Value v, bool fromInverse);
  void maintainInverse(Element& x, const std::string& prop, const Value& added,
                       const Value* replaced);
  void checkShape(const Element& x, const std::string& name, const Value& v) const;

  std::vector<std::unique_ptr<Element>> arena_;
  Model* root_ = nullptr;
};

/// Store-independent resolution: absolute paths ascend `scope`'s parent
/// chain to the outermost model first. Returns nullptr when unresolved.
Element* resolveIn(const Model& scope, const QName& q);

} // namespace modex

#endif
