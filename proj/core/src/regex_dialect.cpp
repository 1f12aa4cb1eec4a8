#include "regex_dialect.hpp"

#include <cctype>

namespace proselab::detail {
namespace {

constexpr int kMaxRepeat = 1000;

struct SyntaxError {
  std::string message;
};

class DialectParser {
 public:
  explicit DialectParser(std::string_view pattern) : src_(pattern) {}

  DialectParse run() {
    DialectParse result;
    try {
      parse_alternation();
      if (pos_ < src_.size()) {
        // Only an unmatched ')' stops the top-level alternation early.
        fail("unmatched ')'", pos_);
      }
      result.capture_groups = groups_;
      result.engine_pattern = std::move(out_);
    } catch (const SyntaxError& e) {
      result.error = e.message;
    }
    return result;
  }

 private:
  [[noreturn]] void fail(std::string_view what, std::size_t at) {
    throw SyntaxError{std::string(what) + " at position " + std::to_string(at)};
  }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  void parse_alternation() {
    parse_concat();
    while (!at_end() && peek() == '|') {
      out_ += '|';
      ++pos_;
      parse_concat();
    }
  }

  void parse_concat() {
    while (!at_end() && peek() != '|' && peek() != ')') {
      const bool quantifiable = parse_atom();
      if (!at_end() && is_quantifier_start()) {
        if (!quantifiable) fail("nothing to repeat", pos_);
        parse_quantifier();
      }
    }
  }

  bool is_quantifier_start() const {
    const char c = peek();
    return c == '*' || c == '+' || c == '?' || c == '{';
  }

  // Returns whether the atom may carry a quantifier.
  bool parse_atom() {
    const std::size_t start = pos_;
    const char c = peek();
    switch (c) {
      case '(':
        parse_group();
        return true;
      case '[':
        parse_class();
        return true;
      case '.':
        out_ += '.';
        ++pos_;
        return true;
      case '^':
        out_ += "\\A";
        ++pos_;
        return false;
      case '$':
        out_ += "\\z";
        ++pos_;
        return false;
      case '\\':
        return parse_escape(/*in_class=*/false);
      case '*':
      case '+':
      case '?':
      case '{':
        fail("nothing to repeat", start);
      default:
        append_literal(c);
        ++pos_;
        return true;
    }
  }

  void append_literal(char c) {
    static constexpr std::string_view kMeta = "\\^$.|?*+()[]{}";
    if (kMeta.find(c) != std::string_view::npos) out_ += '\\';
    out_ += c;
  }

  void parse_group() {
    const std::size_t open = pos_;
    ++pos_;
    if (!at_end() && peek() == '?') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == ':') {
        pos_ += 2;
        out_ += "(?:";
      } else {
        fail("unsupported group construct", open);
      }
    } else {
      ++groups_;
      out_ += '(';
    }
    parse_alternation();
    if (at_end()) fail("unclosed group", open);
    ++pos_;  // ')'
    out_ += ')';
  }

  void parse_quantifier() {
    const std::size_t start = pos_;
    const char c = peek();
    if (c == '{') {
      ++pos_;
      const int lo = parse_int(start);
      int hi = lo;
      bool open_ended = false;
      if (!at_end() && peek() == ',') {
        ++pos_;
        if (!at_end() && peek() == '}') {
          open_ended = true;
        } else {
          hi = parse_int(start);
        }
      }
      if (at_end() || peek() != '}') fail("invalid quantifier", start);
      ++pos_;
      if (!open_ended && hi < lo) fail("invalid quantifier range", start);
      out_ += '{';
      out_ += std::to_string(lo);
      if (open_ended) {
        out_ += ",";
      } else if (hi != lo) {
        out_ += ',';
        out_ += std::to_string(hi);
      }
      out_ += '}';
    } else {
      out_ += c;
      ++pos_;
    }
    if (!at_end() && peek() == '?') {
      out_ += '?';
      ++pos_;
    }
    if (!at_end() && is_quantifier_start()) fail("nothing to repeat", pos_);
  }

  int parse_int(std::size_t quantifier_start) {
    const std::size_t begin = pos_;
    int value = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      value = value * 10 + (peek() - '0');
      if (value > kMaxRepeat) fail("quantifier bound too large", quantifier_start);
      ++pos_;
    }
    if (pos_ == begin) fail("invalid quantifier", quantifier_start);
    return value;
  }

  // Consumes an escape starting at '\'. Returns whether it is quantifiable.
  bool parse_escape(bool in_class) {
    const std::size_t start = pos_;
    ++pos_;
    if (at_end()) fail("trailing backslash", start);
    const char e = peek();
    ++pos_;
    switch (e) {
      case 'd': case 'D': case 'w': case 'W': case 's': case 'S':
        out_ += '\\';
        out_ += e;
        return true;
      case 'b': case 'B':
        if (in_class) fail("unsupported escape in character class", start);
        out_ += '\\';
        out_ += e;
        return false;
      case 'n': out_ += "\\n"; return true;
      case 'r': out_ += "\\r"; return true;
      case 't': out_ += "\\t"; return true;
      case 'f': out_ += "\\f"; return true;
      case 'v': out_ += "\\x0B"; return true;
      case 'x': {
        if (pos_ + 2 > src_.size() ||
            !std::isxdigit(static_cast<unsigned char>(src_[pos_])) ||
            !std::isxdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
          fail("invalid hex escape", start);
        }
        out_ += "\\x";
        out_ += src_.substr(pos_, 2);
        pos_ += 2;
        return true;
      }
      default:
        break;
    }
    if (e >= '1' && e <= '9') fail("backreferences are not supported", start);
    if (std::isalnum(static_cast<unsigned char>(e))) {
      fail(std::string("unsupported escape '\\") + e + "'", start);
    }
    out_ += '\\';
    out_ += e;
    return true;
  }

  void parse_class() {
    const std::size_t open = pos_;
    ++pos_;
    out_ += '[';
    if (!at_end() && peek() == '^') {
      out_ += '^';
      ++pos_;
    }
    if (!at_end() && peek() == ']') fail("empty character class", open);

    // Previous single character, for range validation; -1 when there is none.
    int prev = -1;
    while (true) {
      if (at_end()) fail("unclosed character class", open);
      const char c = peek();
      if (c == ']') {
        ++pos_;
        out_ += ']';
        return;
      }
      if (c == '[') fail("unescaped '[' in character class", pos_);
      if (c == '-' && prev >= 0 && pos_ + 1 < src_.size() && src_[pos_ + 1] != ']') {
        const std::size_t dash = pos_;
        ++pos_;
        const auto hi = class_char();
        if (!hi) fail("invalid range in character class", dash);
        if (*hi < prev) fail("invalid range in character class", dash);
        prev = -1;
        continue;
      }
      const auto single = class_char();
      prev = single ? *single : -1;
    }
  }

  // Emits one class member; returns its byte value when it is a single
  // character (usable as a range endpoint).
  std::optional<unsigned char> class_char() {
    const char c = peek();
    if (c == '\\') {
      const std::size_t start = pos_;
      parse_escape(/*in_class=*/true);
      const char e = src_[start + 1];
      switch (e) {
        case 'd': case 'D': case 'w': case 'W': case 's': case 'S':
          return std::nullopt;
        case 'n': return '\n';
        case 'r': return '\r';
        case 't': return '\t';
        case 'f': return '\f';
        case 'v': return 0x0B;
        case 'x':
          return static_cast<unsigned char>(
              std::stoi(std::string(src_.substr(start + 2, 2)), nullptr, 16));
        default:
          return static_cast<unsigned char>(e);
      }
    }
    ++pos_;
    if (c == '^' || c == '-' || c == ']' || c == '\\') out_ += '\\';
    out_ += c;
    return static_cast<unsigned char>(c);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t groups_ = 0;
  std::string out_;
};

}  // namespace

DialectParse parse_dialect(std::string_view pattern) {
  return DialectParser(pattern).run();
}

}  // namespace proselab::detail
