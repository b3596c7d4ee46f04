#ifndef MODEX_SYNTAX_CURSOR_HPP
#define MODEX_SYNTAX_CURSOR_HPP

#include <string>
#include <string_view>

#include "modex/errors.hpp"

namespace modex::syntax {

/// Canonical text form of a number: shortest round-trip representation.
std::string numText(double d);

/// Character cursor with 1-based line/column tracking.
class Cursor {
public:
  Cursor(std::string_view text, std::string_view file) : text_(text), file_(file) {}

  struct Mark {
    size_t pos = 0;
    int line = 1;
    int column = 1;
  };

  bool eof() const { return mark_.pos >= text_.size(); }
  char peek(size_t off = 0) const {
    return mark_.pos + off < text_.size() ? text_[mark_.pos + off] : '\0';
  }
  bool startsWith(std::string_view s) const { return text_.substr(mark_.pos).starts_with(s); }

  char advance();
  bool consume(char c);
  bool consume(std::string_view s);

  /// Skips whitespace; when `comments` is set, also skips // line comments.
  void skipWs(bool comments);

  Mark mark() const { return mark_; }
  void reset(Mark m) { mark_ = m; }
  SourceSpan span(Mark start) const;
  SourceSpan here(int length = 1) const;

  [[noreturn]] void fail(Err code, const std::string& message) const;
  [[noreturn]] void failAt(Err code, Mark at, const std::string& message) const;

  bool identStart() const;
  /// [A-Za-z_][A-Za-z0-9_]*
  std::string ident(const char* what);
  /// Quoted string; `$` escapes handled by the caller via raw segments.
  bool numberStart() const;
  double number();

  const std::string& file() const { return file_; }

private:
  std::string_view text_;
  std::string file_;
  Mark mark_;
};

} // namespace modex::syntax

#endif
