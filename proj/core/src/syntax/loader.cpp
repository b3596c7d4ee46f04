#include "modex/syntax/loader.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace modex::syntax {

namespace fs = std::filesystem;

std::string readTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModexError(Err::Io, "cannot read \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void writeTextFileAtomic(const std::string& path, std::string_view content) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ModexError(Err::Io, "cannot write \"" + tmp.string() + "\"");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ModexError(Err::Io, "short write to \"" + tmp.string() + "\"");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ModexError(Err::Io, "cannot move output into place: " + ec.message());
  }
}

namespace {

std::string canonicalKey(const std::string& path) {
  std::error_code ec;
  fs::path c = fs::weakly_canonical(fs::path(path), ec);
  return ec ? path : c.string();
}

} // namespace

const FileLoader::SchemaEntry& FileLoader::schemaEntry(const std::string& path) {
  std::string key = canonicalKey(path);
  auto it = schemaCache_.find(key);
  if (it != schemaCache_.end()) return *it->second;

  std::string text = readTextFile(path);
  auto entry = std::make_unique<SchemaEntry>();
  entry->result = parseMmx(text, path);
  if (!entry->result.ok()) {
    const Diagnostic& d = entry->result.issues.front();
    throw SyntaxError(d.code, d.span, d.message);
  }
  return *schemaCache_.emplace(std::move(key), std::move(entry)).first->second;
}

std::vector<const TypeSchema*> FileLoader::schemasOf(const std::string& path) {
  const SchemaEntry& entry = schemaEntry(path);
  std::vector<const TypeSchema*> out;
  for (const auto& s : entry.result.schemas) out.push_back(s.get());
  return out;
}

ParsedUnit FileLoader::loadSchemas(const std::string& path) {
  ParsedUnit unit;
  unit.kind = UnitKind::Schema;
  unit.path = path;
  unit.schemas = schemasOf(path);
  return unit;
}

ParsedUnit FileLoader::loadTemplate(const std::string& path,
                                    const std::vector<std::string>& schemaPaths) {
  LinkSet link;
  ParsedUnit unit;
  unit.kind = UnitKind::Expression;
  unit.path = path;
  for (const std::string& sp : schemaPaths) {
    for (const TypeSchema* s : schemasOf(sp)) link.schemas.push_back(s);
    unit.imports.push_back(sp);
  }
  std::string text = readTextFile(path);
  unit.tmpl = parseMex(text, path, std::move(link));
  return unit;
}

ParsedUnit FileLoader::loadTransform(const std::string& path) {
  std::string text = readTextFile(path);
  fs::path base = fs::path(path).parent_path();

  ParsedUnit unit;
  unit.kind = UnitKind::Transformation;
  unit.path = path;

  std::vector<std::vector<const TypeSchema*>> pinned;
  SchemaResolver resolver = [&](const std::string& ref) -> std::span<const TypeSchema* const> {
    fs::path target = fs::path(ref).is_absolute() ? fs::path(ref) : base / ref;
    unit.imports.push_back(target.string());
    pinned.push_back(schemasOf(target.string()));
    return pinned.back();
  };

  auto spec = parseMtx(text, path, resolver);
  unit.transform = spec.get();
  transforms_.push_back(std::move(spec));
  return unit;
}

} // namespace modex::syntax
