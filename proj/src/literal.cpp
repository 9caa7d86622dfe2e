// SPDX-License-Identifier: Apache-2.0
#include "frameagent/literal.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>

namespace frameagent {

namespace {

constexpr int kMaxDepth = 64;

enum class QuoteClass { None, Single, Double };

class LiteralParser {
 public:
  LiteralParser(std::string_view text, std::size_t pos) : text_(text), pos_(pos) {}

  std::optional<nlohmann::json> value(int depth = 0) {
    if (depth > kMaxDepth) return std::nullopt;
    skip_ws();
    if (pos_ >= text_.size()) return std::nullopt;
    const char c = text_[pos_];
    if (c == '{') return object(depth);
    if (c == '[') return array(depth);
    if (quote_at(pos_).first != QuoteClass::None) {
      auto s = string();
      if (!s) return std::nullopt;
      return nlohmann::json(std::move(*s));
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return number();
    return word();
  }

  std::size_t pos() const noexcept { return pos_; }

 private:
  // Quote class and byte length of a quote character at `p`.
  std::pair<QuoteClass, std::size_t> quote_at(std::size_t p) const {
    if (p >= text_.size()) return {QuoteClass::None, 0};
    if (text_[p] == '\'') return {QuoteClass::Single, 1};
    if (text_[p] == '"') return {QuoteClass::Double, 1};
    if (p + 2 < text_.size() && static_cast<unsigned char>(text_[p]) == 0xe2 &&
        static_cast<unsigned char>(text_[p + 1]) == 0x80) {
      switch (static_cast<unsigned char>(text_[p + 2])) {
        case 0x98:
        case 0x99:
          return {QuoteClass::Single, 3};
        case 0x9c:
        case 0x9d:
          return {QuoteClass::Double, 3};
        default:
          break;
      }
    }
    return {QuoteClass::None, 0};
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::optional<nlohmann::json> object(int depth) {
    ++pos_;  // '{'
    auto out = nlohmann::json::object();
    skip_ws();
    if (consume('}')) return out;
    while (true) {
      skip_ws();
      std::optional<std::string> key;
      if (quote_at(pos_).first != QuoteClass::None) {
        key = string();
      } else {
        key = identifier();
      }
      if (!key || !consume(':')) return std::nullopt;
      auto v = value(depth + 1);
      if (!v) return std::nullopt;
      out[*key] = std::move(*v);
      if (consume(',')) {
        if (consume('}')) return out;
        continue;
      }
      if (consume('}')) return out;
      return std::nullopt;
    }
  }

  std::optional<nlohmann::json> array(int depth) {
    ++pos_;  // '['
    auto out = nlohmann::json::array();
    if (consume(']')) return out;
    while (true) {
      auto v = value(depth + 1);
      if (!v) return std::nullopt;
      out.push_back(std::move(*v));
      if (consume(',')) {
        if (consume(']')) return out;
        continue;
      }
      if (consume(']')) return out;
      return std::nullopt;
    }
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xc0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xe0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
      out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
      out += static_cast<char>(0xf0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
      out += static_cast<char>(0x80 | (cp & 0x3f));
    }
  }

  std::optional<std::uint32_t> hex4() {
    if (pos_ + 4 > text_.size()) return std::nullopt;
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + pos_ + 4, v, 16);
    if (ec != std::errc{} || ptr != text_.data() + pos_ + 4) return std::nullopt;
    pos_ += 4;
    return v;
  }

  std::optional<std::string> string() {
    const auto [cls, len] = quote_at(pos_);
    pos_ += len;
    std::string out;
    while (pos_ < text_.size()) {
      const auto [close_cls, close_len] = quote_at(pos_);
      if (close_cls == cls) {
        pos_ += close_len;
        return out;
      }
      const char c = text_[pos_++];
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= text_.size()) return std::nullopt;
      const char e = text_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'u': {
          auto cp = hex4();
          if (!cp) return std::nullopt;
          if (*cp >= 0xd800 && *cp <= 0xdbff && pos_ + 1 < text_.size() && text_[pos_] == '\\' &&
              text_[pos_ + 1] == 'u') {
            pos_ += 2;
            auto lo = hex4();
            if (!lo) return std::nullopt;
            if (*lo >= 0xdc00 && *lo <= 0xdfff) {
              *cp = 0x10000 + ((*cp - 0xd800) << 10) + (*lo - 0xdc00);
            } else {
              *cp = 0xfffd;
            }
          } else if (*cp >= 0xd800 && *cp <= 0xdfff) {
            *cp = 0xfffd;
          }
          append_utf8(out, *cp);
          break;
        }
        default:
          out += e;  // \' \" \\ \/ and anything else: take literally
      }
    }
    return std::nullopt;
  }

  std::optional<std::string> identifier() {
    const auto start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (pos_ == start || std::isdigit(static_cast<unsigned char>(text_[start]))) return std::nullopt;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::optional<nlohmann::json> number() {
    const auto start = pos_;
    if (text_[pos_] == '-') ++pos_;
    bool is_float = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E' ||
                 ((c == '+' || c == '-') && (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))) {
        is_float = true;
        ++pos_;
      } else {
        break;
      }
    }
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    if (!is_float) {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc{} && ptr == last) return nlohmann::json(v);
    }
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, d);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return nlohmann::json(d);
  }

  std::optional<nlohmann::json> word() {
    auto w = identifier();
    if (!w) return std::nullopt;
    if (*w == "true" || *w == "True") return nlohmann::json(true);
    if (*w == "false" || *w == "False") return nlohmann::json(false);
    if (*w == "null" || *w == "None") return nlohmann::json(nullptr);
    return std::nullopt;
  }

  std::string_view text_;
  std::size_t pos_;
};

}  // namespace

std::optional<LiteralMatch> parse_literal_at(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return std::nullopt;
  LiteralParser parser(text, pos);
  auto v = parser.value();
  if (!v) return std::nullopt;
  return LiteralMatch{std::move(*v), pos, parser.pos()};
}

std::optional<LiteralMatch> find_last_map_with_key(std::string_view text, std::string_view key) {
  const std::string k(key);
  for (std::size_t i = text.size(); i-- > 0;) {
    if (text[i] != '{') continue;
    auto m = parse_literal_at(text, i);
    if (m && m->value.is_object() && m->value.contains(k)) return m;
  }
  return std::nullopt;
}

}  // namespace frameagent
