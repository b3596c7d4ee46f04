#ifndef MODEX_QNAME_HPP
#define MODEX_QNAME_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace modex {

/// A slash-delimited path naming an element: absolute ("/a/b"), relative
/// with optional "../" ascents ("../x", "a/b"), or a simple one-segment name.
/// Segments may contain any character except '/'.
class QName {
public:
  enum class Kind { Absolute, Relative, Simple };

  QName() = default;

  // Throws ModexError (EmptyPath / EmptySegment) on malformed input.
  static QName parse(std::string_view text);
  static std::optional<QName> tryParse(std::string_view text);

  static QName simple(std::string segment);
  static QName absolute(std::vector<std::string> segments);
  static QName relative(int ups, std::vector<std::string> segments);

  std::string render() const;

  Kind kind() const { return kind_; }
  int ups() const { return ups_; }
  const std::vector<std::string>& segments() const { return segments_; }
  const std::string& localName() const { return segments_.back(); }

  bool operator==(const QName&) const = default;

private:
  Kind kind_ = Kind::Simple;
  int ups_ = 0;
  std::vector<std::string> segments_;
};

} // namespace modex

#endif
