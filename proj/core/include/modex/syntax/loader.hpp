#ifndef MODEX_SYNTAX_LOADER_HPP
#define MODEX_SYNTAX_LOADER_HPP

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "modex/syntax/mex.hpp"
#include "modex/syntax/mmx.hpp"
#include "modex/syntax/mtx.hpp"

namespace modex::syntax {

enum class UnitKind { Schema, Expression, Transformation };

/// One loaded source file. The payload pointers stay valid for the lifetime
/// of the loader that produced the unit.
struct ParsedUnit {
  UnitKind kind;
  std::string path;
  std::vector<const TypeSchema*> schemas; // Schema units
  TemplatePtr tmpl;                       // Expression units
  const TransformationSpec* transform = nullptr;
  std::vector<std::string> imports; // files this unit pulled in
};

std::string readTextFile(const std::string& path); // throws Io
void writeTextFileAtomic(const std::string& path, std::string_view content);

/// Loads and caches .mmx/.mex/.mtx files. Schema references inside
/// transformation files resolve relative to the referencing file. Parse
/// problems throw; schema validation findings also throw here (the
/// check-schema command parses directly to report them instead).
class FileLoader {
public:
  ParsedUnit loadSchemas(const std::string& path);
  ParsedUnit loadTemplate(const std::string& path, const std::vector<std::string>& schemaPaths);
  ParsedUnit loadTransform(const std::string& path);

  /// Schemas previously loaded through this loader, for link sets.
  std::vector<const TypeSchema*> schemasOf(const std::string& path);

private:
  struct SchemaEntry {
    MmxResult result;
  };
  const SchemaEntry& schemaEntry(const std::string& path);

  std::map<std::string, std::unique_ptr<SchemaEntry>> schemaCache_;
  std::vector<std::unique_ptr<TransformationSpec>> transforms_;
};

} // namespace modex::syntax

#endif
