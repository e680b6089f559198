// S-expression data model, reader and canonical printer.
//
// One Value type carries everything the runtime touches: program text,
// message content and evaluation results. The reader only ever produces
// data (atoms and lists); procedures and the unspecified value exist so
// evaluators can flow through the same type, and they print as opaque
// #<...> forms that the reader rejects.
#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace parley {

class Env;
struct EvalContext;
struct Procedure;

struct Value;
using List = std::vector<Value>;
using ProcRef = std::shared_ptr<Procedure>;

struct Sym {
  std::string name;
  bool operator==(const Sym&) const = default;
  auto operator<=>(const Sym&) const = default;
};

struct Str {
  std::string text;
  bool operator==(const Str&) const = default;
};

struct Bool {
  bool flag = false;
  bool operator==(const Bool&) const = default;
};

struct Unspecified {
  bool operator==(const Unspecified&) const = default;
};

struct Value {
  using Data =
      std::variant<Sym, std::int64_t, double, Bool, Str, List, ProcRef, Unspecified>;
  Data data;

  Value() : data(Unspecified{}) {}
  explicit Value(Data d) : data(std::move(d)) {}

  static Value sym(std::string name) { return Value{Data{Sym{std::move(name)}}}; }
  static Value num(std::int64_t n) { return Value{Data{n}}; }
  static Value real(double x) { return Value{Data{x}}; }
  static Value boolean(bool b) { return Value{Data{Bool{b}}}; }
  static Value str(std::string text) { return Value{Data{Str{std::move(text)}}}; }
  static Value list(List items) { return Value{Data{std::move(items)}}; }
  static Value proc(ProcRef p) { return Value{Data{std::move(p)}}; }
  static Value none() { return Value{Data{Unspecified{}}}; }

  bool is_sym() const { return std::holds_alternative<Sym>(data); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_real() const { return std::holds_alternative<double>(data); }
  bool is_number() const { return is_int() || is_real(); }
  bool is_bool() const { return std::holds_alternative<Bool>(data); }
  bool is_str() const { return std::holds_alternative<Str>(data); }
  bool is_list() const { return std::holds_alternative<List>(data); }
  bool is_proc() const { return std::holds_alternative<ProcRef>(data); }
  bool is_unspecified() const { return std::holds_alternative<Unspecified>(data); }

  const std::string& sym_name() const { return std::get<Sym>(data).name; }
  std::int64_t as_int() const { return std::get<std::int64_t>(data); }
  double as_real() const { return std::get<double>(data); }
  double as_number() const { return is_int() ? double(as_int()) : as_real(); }
  bool as_bool() const { return std::get<Bool>(data).flag; }
  const std::string& str_text() const { return std::get<Str>(data).text; }
  const List& items() const { return std::get<List>(data); }
  List& items() { return std::get<List>(data); }
  const ProcRef& proc_ref() const { return std::get<ProcRef>(data); }

  bool is_sym(std::string_view name) const { return is_sym() && sym_name() == name; }

  // Scheme truthiness: only #f is false.
  bool is_truthy() const { return !(is_bool() && !as_bool()); }

  bool operator==(const Value&) const = default;
};

// Compound procedures capture their defining environment by reference;
// primitives carry a native implementation. `name` is diagnostic only
// (define fills it in for otherwise anonymous lambdas).
struct Procedure {
  std::string name;
  std::vector<std::string> params;
  List body;
  Env* closure = nullptr;
  using Native = std::function<Value(EvalContext&, const List&)>;
  Native native;

  bool is_primitive() const { return static_cast<bool>(native); }
};

inline Value make_primitive(std::string name, Procedure::Native fn) {
  auto p = std::make_shared<Procedure>();
  p->name = std::move(name);
  p->native = std::move(fn);
  return Value::proc(std::move(p));
}

struct ParseError : std::runtime_error {
  std::size_t offset;
  std::size_t line;
  std::size_t column;
  ParseError(const std::string& what, std::size_t off, std::size_t ln, std::size_t col)
      : std::runtime_error(what + " (line " + std::to_string(ln) + ", column " +
                           std::to_string(col) + ")"),
        offset(off), line(ln), column(col) {}
};

namespace detail {

inline bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == '\'' || c == '"' || c == ';' ||
         std::isspace(static_cast<unsigned char>(c));
}

class Reader {
 public:
  explicit Reader(std::string_view src) : src_(src) {}

  Value read_one() {
    skip_blank();
    if (at_end()) fail("empty input, expected an expression");
    return read_value();
  }

  void expect_end() {
    skip_blank();
    if (!at_end()) fail("trailing content after expression");
  }

  bool at_form() {
    skip_blank();
    return !at_end();
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i) {
      if (src_[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
    throw ParseError(msg, pos_, line, col);
  }

  void skip_blank() {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {
        while (!at_end() && peek() != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  Value read_value() {
    char c = peek();
    if (c == '(') return read_list();
    if (c == ')') fail("unexpected ')'");
    if (c == '\'') {
      ++pos_;
      skip_blank();
      if (at_end()) fail("quote with nothing to quote");
      List quoted;
      quoted.push_back(Value::sym("quote"));
      quoted.push_back(read_value());
      return Value::list(std::move(quoted));
    }
    if (c == '"') return read_string();
    return read_atom();
  }

  Value read_list() {
    ++pos_;  // '('
    List items;
    while (true) {
      skip_blank();
      if (at_end()) fail("unbalanced parentheses, expected ')'");
      if (peek() == ')') {
        ++pos_;
        return Value::list(std::move(items));
      }
      items.push_back(read_value());
    }
  }

  Value read_string() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated string literal");
      char c = src_[pos_++];
      if (c == '"') return Value::str(std::move(out));
      if (c == '\\') {
        if (at_end()) fail("unterminated escape in string literal");
        char e = src_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unknown escape '\\") + e + "' in string literal");
        }
      } else {
        out.push_back(c);
      }
    }
  }

  Value read_atom() {
    std::size_t start = pos_;
    while (!at_end() && !is_delimiter(peek())) ++pos_;
    std::string_view tok = src_.substr(start, pos_ - start);

    if (tok == "#t") return Value::boolean(true);
    if (tok == "#f") return Value::boolean(false);
    if (tok.front() == '#') fail("illegal token '" + std::string(tok) + "'");

    if (looks_numeric(tok)) return parse_number(tok, start);
    if (tok.find('#') != std::string_view::npos)
      fail("illegal token '" + std::string(tok) + "'");
    return Value::sym(std::string(tok));
  }

  static bool looks_numeric(std::string_view tok) {
    std::size_t i = (tok.front() == '+' || tok.front() == '-') ? 1 : 0;
    if (i < tok.size() && tok[i] == '.') ++i;
    return i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]));
  }

  Value parse_number(std::string_view tok, std::size_t start) {
    bool decimal = tok.find('.') != std::string_view::npos ||
                   tok.find('e') != std::string_view::npos ||
                   tok.find('E') != std::string_view::npos;
    if (!decimal) {
      std::int64_t n = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
      if (ec == std::errc() && ptr == tok.data() + tok.size()) return Value::num(n);
      pos_ = start;
      fail("illegal numeric token '" + std::string(tok) + "'");
    }
    double x = 0.0;
    std::string_view body = tok;
    bool negate = false;
    if (body.front() == '+') body.remove_prefix(1);
    else if (body.front() == '-') { negate = true; body.remove_prefix(1); }
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), x);
    if (ec != std::errc() || ptr != body.data() + body.size()) {
      pos_ = start;
      fail("illegal numeric token '" + std::string(tok) + "'");
    }
    return Value::real(negate ? -x : x);
  }
};

inline void print_to(const Value& v, std::string& out);

inline void print_real(double x, std::string& out) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  std::string_view text(buf, static_cast<std::size_t>(ptr - buf));
  out.append(text);
  if (text.find('.') == std::string_view::npos &&
      text.find('e') == std::string_view::npos &&
      text.find("inf") == std::string_view::npos &&
      text.find("nan") == std::string_view::npos) {
    out.append(".0");
  }
}

inline void print_to(const Value& v, std::string& out) {
  std::visit(
      [&out](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Sym>) {
          out.append(x.name);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out.append(std::to_string(x));
        } else if constexpr (std::is_same_v<T, double>) {
          print_real(x, out);
        } else if constexpr (std::is_same_v<T, Bool>) {
          out.append(x.flag ? "#t" : "#f");
        } else if constexpr (std::is_same_v<T, Str>) {
          out.push_back('"');
          for (char c : x.text) {
            switch (c) {
              case '"': out.append("\\\""); break;
              case '\\': out.append("\\\\"); break;
              case '\n': out.append("\\n"); break;
              case '\t': out.append("\\t"); break;
              default: out.push_back(c);
            }
          }
          out.push_back('"');
        } else if constexpr (std::is_same_v<T, List>) {
          out.push_back('(');
          bool first = true;
          for (const Value& item : x) {
            if (!first) out.push_back(' ');
            first = false;
            print_to(item, out);
          }
          out.push_back(')');
        } else if constexpr (std::is_same_v<T, ProcRef>) {
          out.append("#<procedure");
          if (x && !x->name.empty()) {
            out.push_back(' ');
            out.append(x->name);
          }
          out.push_back('>');
        } else {
          out.append("#<unspecified>");
        }
      },
      v.data);
}

}  // namespace detail

/// Parses exactly one S-expression (surrounding whitespace/comments allowed).
inline Value read(std::string_view text) {
  detail::Reader r(text);
  Value v = r.read_one();
  r.expect_end();
  return v;
}

/// Parses a whole file worth of forms, in order.
inline std::vector<Value> read_all(std::string_view text) {
  detail::Reader r(text);
  std::vector<Value> forms;
  while (r.at_form()) forms.push_back(r.read_one());
  return forms;
}

/// Canonical text form: single spaces, no trailing whitespace. This is the
/// wire and file format everywhere.
inline std::string print(const Value& v) {
  std::string out;
  detail::print_to(v, out);
  return out;
}

// Convenience builders used all over tests and scenario fixtures.
inline Value vlist(std::initializer_list<Value> items) { return Value::list(List(items)); }

}  // namespace parley
