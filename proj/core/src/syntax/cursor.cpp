#include "cursor.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace modex::syntax {

std::string numText(double d) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, ptr);
}

char Cursor::advance() {
  char c = text_[mark_.pos++];
  if (c == '\n') {
    ++mark_.line;
    mark_.column = 1;
  } else {
    ++mark_.column;
  }
  return c;
}

bool Cursor::consume(char c) {
  if (eof() || peek() != c) return false;
  advance();
  return true;
}

bool Cursor::consume(std::string_view s) {
  if (!startsWith(s)) return false;
  for (size_t i = 0; i < s.size(); ++i) advance();
  return true;
}

void Cursor::skipWs(bool comments) {
  while (!eof()) {
    char c = peek();
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance();
    } else if (comments && c == '/' && peek(1) == '/') {
      while (!eof() && peek() != '\n') advance();
    } else {
      break;
    }
  }
}

SourceSpan Cursor::span(Mark start) const {
  return SourceSpan{file_, start.line, start.column,
                    static_cast<int>(mark_.pos - start.pos)};
}

SourceSpan Cursor::here(int length) const {
  return SourceSpan{file_, mark_.line, mark_.column, length};
}

void Cursor::fail(Err code, const std::string& message) const {
  throw SyntaxError(code, here(), message);
}

void Cursor::failAt(Err code, Mark at, const std::string& message) const {
  throw SyntaxError(code, SourceSpan{file_, at.line, at.column, 1}, message);
}

bool Cursor::identStart() const {
  char c = peek();
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

std::string Cursor::ident(const char* what) {
  if (!identStart()) fail(Err::Syntax, std::string("expected ") + what);
  std::string out;
  while (!eof()) {
    char c = peek();
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
      out += advance();
    else
      break;
  }
  return out;
}

bool Cursor::numberStart() const {
  char c = peek();
  if (std::isdigit(static_cast<unsigned char>(c))) return true;
  return c == '-' && std::isdigit(static_cast<unsigned char>(peek(1)));
}

double Cursor::number() {
  Mark start = mark_;
  if (peek() == '-') advance();
  while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
  // a '.' begins a fraction only when a digit follows (".." is the range op)
  if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
    advance();
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
  }
  if ((peek() == 'e' || peek() == 'E') &&
      (std::isdigit(static_cast<unsigned char>(peek(1))) ||
       ((peek(1) == '+' || peek(1) == '-') &&
        std::isdigit(static_cast<unsigned char>(peek(2)))))) {
    advance();
    if (peek() == '+' || peek() == '-') advance();
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
  }
  if (mark_.pos == start.pos) fail(Err::Syntax, "expected a number");
  std::string text(text_.substr(start.pos, mark_.pos - start.pos));
  return std::strtod(text.c_str(), nullptr);
}

} // namespace modex::syntax
