#include "hms/proto/xml.hpp"

#include <algorithm>
#include <cstdint>

#include "hms/error.hpp"
#include "hms/proto/schema.hpp"

namespace hms::proto {

// ---- Message ---------------------------------------------------------------

Message& Message::set(std::string_view name, std::string value) {
  for (auto& [k, v] : attributes) {
    if (k == name) {
      v = std::move(value);
      return *this;
    }
  }
  attributes.emplace_back(std::string(name), std::move(value));
  return *this;
}

std::optional<std::string_view> Message::get(std::string_view name) const noexcept {
  for (auto const& [k, v] : attributes)
    if (k == name) return std::string_view(v);
  return std::nullopt;
}

std::string const& Message::at(std::string_view name) const {
  for (auto const& [k, v] : attributes)
    if (k == name) return v;
  throw Error(Errc::MissingAttribute, std::string(name));
}

bool Message::erase(std::string_view name) {
  auto it = std::find_if(attributes.begin(), attributes.end(), [&](auto const& a) { return a.first == name; });
  if (it == attributes.end()) return false;
  attributes.erase(it);
  return true;
}

// ---- names & escaping ------------------------------------------------------

namespace {

bool is_name_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':';
}

bool is_name_char(char c) {
  return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

void append_escaped(std::string& out, std::string_view s, bool attribute) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) out += "&quot;";
        else out += c;
        break;
      case '\n':
        if (attribute) out += "&#10;";
        else out += c;
        break;
      case '\r': out += "&#13;"; break;
      case '\t':
        if (attribute) out += "&#9;";
        else out += c;
        break;
      default: out += c;
    }
  }
}

void encode_into(std::string& out, Message const& m) {
  if (!is_valid_name(m.type_name)) throw Error(Errc::SchemaViolation, "invalid element name '" + m.type_name + "'");
  out += '<';
  out += m.type_name;
  for (auto const& [name, value] : m.attributes) {
    if (!is_valid_name(name)) throw Error(Errc::SchemaViolation, "invalid attribute name '" + name + "'");
    out += ' ';
    out += name;
    out += "=\"";
    append_escaped(out, value, true);
    out += '"';
  }
  if (m.children.empty() && m.text.empty()) {
    out += " />";
    return;
  }
  out += '>';
  append_escaped(out, m.text, false);
  for (auto const& child : m.children) encode_into(out, child);
  out += "</";
  out += m.type_name;
  out += '>';
}

// ---- parser ----------------------------------------------------------------

constexpr int kMaxDepth = 64;

class Parser {
 public:
  explicit Parser(std::string_view in) : in_(in) {}

  Message document() {
    if (in_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    skip_misc();
    if (in_.substr(pos_, 5) == "<?xml") {
      auto end = in_.find("?>", pos_);
      if (end == std::string_view::npos) fail("unterminated declaration");
      pos_ = end + 2;
    }
    skip_misc();
    Message root = element(0);
    skip_misc();
    if (pos_ != in_.size()) fail("trailing content");
    return root;
  }

 private:
  [[noreturn]] void fail(std::string const& why) const {
    throw Error(Errc::MalformedXml, why + " at offset " + std::to_string(pos_));
  }

  bool eof() const { return pos_ >= in_.size(); }
  char peek() const { return eof() ? '\0' : in_[pos_]; }
  bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_space() {
    while (!eof() && is_space(in_[pos_])) ++pos_;
  }

  void skip_comment() {
    auto end = in_.find("-->", pos_ + 4);
    if (end == std::string_view::npos) fail("unterminated comment");
    pos_ = end + 3;
  }

  void skip_misc() {
    for (;;) {
      skip_space();
      if (starts_with("<!--")) skip_comment();
      else return;
    }
  }

  std::string name() {
    if (eof() || !is_name_start(peek())) fail("expected name");
    auto start = pos_;
    while (!eof() && is_name_char(in_[pos_])) ++pos_;
    return std::string(in_.substr(start, pos_ - start));
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  void entity(std::string& out) {
    auto semi = in_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 12) fail("bad entity");
    auto ref = in_.substr(pos_ + 1, semi - pos_ - 1);
    pos_ = semi + 1;
    if (ref == "lt") out += '<';
    else if (ref == "gt") out += '>';
    else if (ref == "amp") out += '&';
    else if (ref == "quot") out += '"';
    else if (ref == "apos") out += '\'';
    else if (ref.size() > 1 && ref[0] == '#') {
      bool hex = ref[1] == 'x';
      auto digits = ref.substr(hex ? 2 : 1);
      if (digits.empty()) fail("bad character reference");
      std::uint32_t cp = 0;
      for (char c : digits) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else fail("bad character reference");
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
        if (cp > 0x10FFFF) fail("character reference out of range");
      }
      if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) fail("invalid character reference");
      append_utf8(out, cp);
    } else {
      fail("unknown entity");
    }
  }

  std::string attribute_value() {
    char quote = peek();
    if (quote != '"' && quote != '\'') fail("expected quoted value");
    ++pos_;
    std::string value;
    for (;;) {
      if (eof()) fail("unterminated attribute value");
      char c = in_[pos_];
      if (c == quote) {
        ++pos_;
        return value;
      }
      if (c == '<') fail("'<' in attribute value");
      if (c == '&') entity(value);
      else {
        value += c;
        ++pos_;
      }
    }
  }

  Message element(int depth) {
    if (depth >= kMaxDepth) fail("nesting too deep");
    expect('<');
    Message m(name());
    for (;;) {
      bool had_space = !eof() && is_space(peek());
      skip_space();
      if (starts_with("/>")) {
        pos_ += 2;
        return m;
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      if (!had_space) fail("expected whitespace before attribute");
      auto attr = name();
      skip_space();
      expect('=');
      skip_space();
      auto value = attribute_value();
      if (m.has(attr)) fail("duplicate attribute '" + attr + "'");
      m.attributes.emplace_back(std::move(attr), std::move(value));
    }

    std::string text;
    for (;;) {
      if (eof()) fail("unterminated element '" + m.type_name + "'");
      if (starts_with("</")) {
        pos_ += 2;
        if (name() != m.type_name) fail("mismatched end tag");
        skip_space();
        expect('>');
        break;
      }
      if (starts_with("<!--")) {
        skip_comment();
      } else if (starts_with("<![CDATA[")) {
        auto end = in_.find("]]>", pos_ + 9);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        text += in_.substr(pos_ + 9, end - pos_ - 9);
        pos_ = end + 3;
      } else if (peek() == '<') {
        m.children.push_back(element(depth + 1));
      } else if (peek() == '&') {
        entity(text);
      } else {
        text += in_[pos_++];
      }
    }
    if (std::all_of(text.begin(), text.end(), is_space)) text.clear();
    m.text = std::move(text);
    return m;
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_valid_name(std::string_view name) noexcept {
  if (name.empty() || !is_name_start(name.front())) return false;
  return std::all_of(name.begin(), name.end(), is_name_char);
}

std::string encode_raw(Message const& message) {
  std::string out;
  encode_into(out, message);
  return out;
}

std::string encode(Message const& message) { return encode_raw(canonicalize(message)); }

Message decode(std::string_view text) { return Parser(text).document(); }

}  // namespace hms::proto
