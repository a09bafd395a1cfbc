#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "roboscript/dsl.hpp"

namespace roboscript::dsl {

namespace {

constexpr std::array<std::string_view, 11> kKeywords = {
    "let", "if", "else", "for", "require", "solve", "move", "grip", "on", "off", "end"};
constexpr std::array<std::string_view, 5> kAttributes = {".x", ".y", ".w", ".h", ".d"};
constexpr std::array<std::string_view, 8> kBuiltins = {"sin", "cos", "atan2", "hypot",
                                                       "abs", "min", "max", "value"};
constexpr std::array<std::string_view, 13> kOperators = {"+",  "-", "*", "/", "==", "<=", ">=",
                                                         "<",  ">", "(", ")", ",", "="};
constexpr std::array<std::string_view, 18> kLiteralText = {
    "-1", "-0.9", "-0.75", "-0.5", "-0.25", "0", "0.25", "0.5", "0.75",
    "0.9", "1", "2", "3", "0.05", "0.1", "0.15", "90", "180"};
constexpr std::array<double, 18> kLiteralValue = {
    -1, -0.9, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 0.9, 1, 2, 3, 0.05, 0.1, 0.15, 90, 180};

constexpr std::size_t kKeywordBase = 1;
constexpr std::size_t kClassBase = kKeywordBase + kKeywords.size();
constexpr std::size_t kAttributeBase = kClassBase + scene::kNumClasses;
constexpr std::size_t kBuiltinBase = kAttributeBase + kAttributes.size();
constexpr std::size_t kOperatorBase = kBuiltinBase + kBuiltins.size();
constexpr std::size_t kNumberBase = kOperatorBase + kOperators.size();
constexpr std::size_t kLocalBase = kNumberBase + kLiteralText.size();
constexpr std::size_t kNumLocals = 10;
constexpr std::size_t kPxBase = kLocalBase + kNumLocals;
constexpr std::size_t kPyBase = kPxBase + scene::kNumClasses;
constexpr std::size_t kVocabSize = kPyBase + scene::kNumClasses;
static_assert(kVocabSize <= 100, "target vocabulary must fit a 100-way softmax head");

struct Entry {
  std::string text;
  TokenKind kind;
};

struct Vocabulary {
  std::vector<Entry> entries;
  std::unordered_map<std::string, std::uint8_t> by_text;

  Vocabulary() {
    auto add = [&](std::string text, TokenKind kind) {
      by_text.emplace(text, static_cast<std::uint8_t>(entries.size()));
      entries.push_back({std::move(text), kind});
    };
    add("", TokenKind::kEos);
    for (auto k : kKeywords) add(std::string(k), TokenKind::kKeyword);
    for (auto c : scene::kAllClasses) add(std::string(scene::class_name(c)), TokenKind::kClass);
    for (auto a : kAttributes) add(std::string(a), TokenKind::kAttribute);
    for (auto b : kBuiltins) add(std::string(b), TokenKind::kBuiltin);
    for (auto o : kOperators) add(std::string(o), TokenKind::kOperator);
    for (auto n : kLiteralText) add(std::string(n), TokenKind::kNumber);
    for (std::size_t i = 0; i < kNumLocals; ++i) add("t" + std::to_string(i), TokenKind::kLocal);
    for (auto c : scene::kAllClasses) add("px_" + std::string(scene::class_name(c)), TokenKind::kPlacement);
    for (auto c : scene::kAllClasses) add("py_" + std::string(scene::class_name(c)), TokenKind::kPlacement);
  }
};

const Vocabulary& vocab() {
  static const Vocabulary v;
  return v;
}

void require_kind(Token t, TokenKind k) {
  if (token_kind(t) != k) throw PreconditionError("token '" + std::string(token_text(t)) + "' has the wrong kind");
}

bool is_ident_start(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Tokens after which a '-' is a binary operator rather than a literal sign.
bool ends_operand(Token t) {
  switch (token_kind(t)) {
    case TokenKind::kNumber:
    case TokenKind::kLocal:
    case TokenKind::kPlacement:
    case TokenKind::kAttribute:
      return true;
    case TokenKind::kOperator:
      return token_operator(t) == Operator::kRParen;
    default:
      return false;
  }
}

}  // namespace

std::string_view task_name(Task t) { return t == Task::kArrange ? "arrange" : "manip"; }

std::optional<Task> task_from_name(std::string_view name) {
  if (name == "arrange") return Task::kArrange;
  if (name == "manip" || name == "manipulation") return Task::kManipulation;
  return std::nullopt;
}

std::size_t vocab_size() { return kVocabSize; }

std::string_view token_text(Token t) { return vocab().entries.at(t.id).text; }
TokenKind token_kind(Token t) { return vocab().entries.at(t.id).kind; }

std::optional<Token> token_from_text(std::string_view text) {
  const auto& m = vocab().by_text;
  auto it = m.find(std::string(text));
  if (it == m.end() || text.empty()) return std::nullopt;
  return Token{it->second};
}

Keyword token_keyword(Token t) {
  require_kind(t, TokenKind::kKeyword);
  return static_cast<Keyword>(t.id - kKeywordBase);
}
scene::ObjectClass token_class(Token t) {
  if (token_kind(t) == TokenKind::kPlacement) {
    return scene::kAllClasses[(t.id - kPxBase) % scene::kNumClasses];
  }
  require_kind(t, TokenKind::kClass);
  return scene::kAllClasses[t.id - kClassBase];
}
Attribute token_attribute(Token t) {
  require_kind(t, TokenKind::kAttribute);
  return static_cast<Attribute>(t.id - kAttributeBase);
}
Builtin token_builtin(Token t) {
  require_kind(t, TokenKind::kBuiltin);
  return static_cast<Builtin>(t.id - kBuiltinBase);
}
Operator token_operator(Token t) {
  require_kind(t, TokenKind::kOperator);
  return static_cast<Operator>(t.id - kOperatorBase);
}
double token_number(Token t) {
  require_kind(t, TokenKind::kNumber);
  return kLiteralValue[t.id - kNumberBase];
}
int token_local(Token t) {
  require_kind(t, TokenKind::kLocal);
  return static_cast<int>(t.id - kLocalBase);
}
bool token_is_px(Token t) {
  require_kind(t, TokenKind::kPlacement);
  return t.id < kPyBase;
}

Token keyword_token(Keyword k) { return Token{static_cast<std::uint8_t>(kKeywordBase + static_cast<std::size_t>(k))}; }
Token class_token(scene::ObjectClass c) { return Token{static_cast<std::uint8_t>(kClassBase + scene::class_index(c))}; }
Token attribute_token(Attribute a) {
  return Token{static_cast<std::uint8_t>(kAttributeBase + static_cast<std::size_t>(a))};
}
Token builtin_token(Builtin b) { return Token{static_cast<std::uint8_t>(kBuiltinBase + static_cast<std::size_t>(b))}; }
Token operator_token(Operator o) {
  return Token{static_cast<std::uint8_t>(kOperatorBase + static_cast<std::size_t>(o))};
}
Token local_token(int index) {
  if (index < 0 || index >= static_cast<int>(kNumLocals)) throw PreconditionError("local index out of range");
  return Token{static_cast<std::uint8_t>(kLocalBase + static_cast<std::size_t>(index))};
}
Token placement_token(scene::ObjectClass c, bool is_x) {
  return Token{static_cast<std::uint8_t>((is_x ? kPxBase : kPyBase) + scene::class_index(c))};
}
std::optional<Token> number_token(double value) {
  for (std::size_t i = 0; i < kLiteralValue.size(); ++i) {
    if (kLiteralValue[i] == value) return Token{static_cast<std::uint8_t>(kNumberBase + i)};
  }
  return std::nullopt;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto operand_before = [&] { return !out.empty() && ends_operand(out.back()); };
  auto scan_number = [&](std::size_t start) {
    std::size_t j = start;
    if (j < n && text[j] == '-') ++j;
    while (j < n && (is_digit(text[j]) || text[j] == '.')) ++j;
    return j;
  };
  while (i < n) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ';') {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < n && is_ident_char(text[j])) ++j;
      const std::string_view word = text.substr(i, j - i);
      auto tok = token_from_text(word);
      if (!tok || token_kind(*tok) == TokenKind::kAttribute) {
        throw LexError(i, "unknown lexeme '" + std::string(word) + "'");
      }
      out.push_back(*tok);
      i = j;
      continue;
    }
    if (c == '.' && i + 1 < n && std::isalpha(static_cast<unsigned char>(text[i + 1]))) {
      std::size_t j = i + 1;
      while (j < n && is_ident_char(text[j])) ++j;
      auto tok = token_from_text(text.substr(i, j - i));
      if (!tok || token_kind(*tok) != TokenKind::kAttribute) {
        throw LexError(i, "unknown attribute '" + std::string(text.substr(i, j - i)) + "'");
      }
      out.push_back(*tok);
      i = j;
      continue;
    }
    const bool signed_literal = c == '-' && i + 1 < n && is_digit(text[i + 1]) && !operand_before();
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(text[i + 1])) || signed_literal) {
      const std::size_t j = scan_number(i);
      double value = 0.0;
      const char* first = text.data() + i;
      auto [ptr, ec] = std::from_chars(first, text.data() + j, value);
      std::optional<Token> tok;
      if (ec == std::errc() && ptr == text.data() + j) tok = number_token(value);
      if (!tok && signed_literal) {
        // "-2" is not a literal; read it as unary minus applied to "2".
        out.push_back(operator_token(Operator::kMinus));
        ++i;
        continue;
      }
      if (!tok) throw LexError(i, "numeric literal '" + std::string(text.substr(i, j - i)) + "' is not in the literal set");
      out.push_back(*tok);
      i = j;
      continue;
    }
    std::string_view op;
    if (i + 1 < n) {
      const std::string_view two = text.substr(i, 2);
      if (two == "==" || two == "<=" || two == ">=") op = two;
    }
    if (op.empty()) op = text.substr(i, 1);
    auto tok = token_from_text(op);
    if (!tok || token_kind(*tok) != TokenKind::kOperator) {
      throw LexError(i, "unknown character '" + std::string(text.substr(i, 1)) + "'");
    }
    out.push_back(*tok);
    i += op.size();
  }
  out.push_back(kEos);
  return out;
}

std::string detokenize(std::span<const Token> tokens) {
  std::string out;
  for (Token t : tokens) {
    if (t == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token_text(t);
  }
  return out;
}

}  // namespace roboscript::dsl
