#include "modex/qname.hpp"

#include "modex/errors.hpp"

namespace modex {

QName QName::parse(std::string_view text) {
  if (text.empty())
    throw ModexError(Err::EmptyPath, "empty path");

  QName q;
  std::string_view rest = text;
  if (rest.front() == '/') {
    q.kind_ = Kind::Absolute;
    rest.remove_prefix(1);
    if (rest.empty())
      throw ModexError(Err::EmptyPath, "path \"/\" names no element");
  } else {
    while (rest.starts_with("../")) {
      ++q.ups_;
      rest.remove_prefix(3);
    }
    if (rest.empty())
      throw ModexError(Err::EmptyPath, "path ends after \"../\" prefix");
  }

  size_t start = 0;
  for (size_t i = 0; i <= rest.size(); ++i) {
    if (i == rest.size() || rest[i] == '/') {
      if (i == start)
        throw ModexError(Err::EmptySegment,
                         "empty segment in \"" + std::string(text) + "\"");
      q.segments_.emplace_back(rest.substr(start, i - start));
      start = i + 1;
    }
  }

  if (q.kind_ != Kind::Absolute) {
    q.kind_ = (q.ups_ == 0 && q.segments_.size() == 1) ? Kind::Simple : Kind::Relative;
  }
  return q;
}

std::optional<QName> QName::tryParse(std::string_view text) {
  try {
    return parse(text);
  } catch (const ModexError&) {
    return std::nullopt;
  }
}

QName QName::simple(std::string segment) {
  QName q;
  q.kind_ = Kind::Simple;
  q.segments_.push_back(std::move(segment));
  return q;
}

QName QName::absolute(std::vector<std::string> segments) {
  QName q;
  q.kind_ = Kind::Absolute;
  q.segments_ = std::move(segments);
  return q;
}

QName QName::relative(int ups, std::vector<std::string> segments) {
  QName q;
  q.ups_ = ups;
  q.segments_ = std::move(segments);
  q.kind_ = (ups == 0 && q.segments_.size() == 1) ? Kind::Simple : Kind::Relative;
  return q;
}

std::string QName::render() const {
  std::string out;
  if (kind_ == Kind::Absolute)
    out += '/';
  else
    for (int i = 0; i < ups_; ++i) out += "../";
  for (size_t i = 0; i < segments_.size(); ++i) {
    if (i) out += '/';
    out += segments_[i];
  }
  return out;
}

} // namespace modex
