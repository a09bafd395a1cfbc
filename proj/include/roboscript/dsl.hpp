#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roboscript/error.hpp"
#include "roboscript/scene.hpp"

namespace roboscript::dsl {

enum class Task { kArrange, kManipulation };

std::string_view task_name(Task t);  // "arrange" / "manip"
std::optional<Task> task_from_name(std::string_view name);

enum class TokenKind { kEos, kKeyword, kClass, kAttribute, kBuiltin, kOperator, kNumber, kLocal, kPlacement };

enum class Keyword { kLet, kIf, kElse, kFor, kRequire, kSolve, kMove, kGrip, kOn, kOff, kEnd };
enum class Attribute { kX, kY, kW, kH, kD };
enum class Builtin { kSin, kCos, kAtan2, kHypot, kAbs, kMin, kMax, kValue };
enum class Operator { kPlus, kMinus, kStar, kSlash, kEq, kLe, kGe, kLt, kGt, kLParen, kRParen, kComma, kAssign };

// A token is an index into the closed RoboScript vocabulary.
struct Token {
  std::uint8_t id = 0;
  friend auto operator<=>(const Token&, const Token&) = default;
};

inline constexpr Token kEos{0};

std::size_t vocab_size();
std::string_view token_text(Token t);
TokenKind token_kind(Token t);
std::optional<Token> token_from_text(std::string_view text);

// Payload accessors; each requires the matching kind.
Keyword token_keyword(Token t);
scene::ObjectClass token_class(Token t);  // kClass and kPlacement
Attribute token_attribute(Token t);
Builtin token_builtin(Token t);
Operator token_operator(Token t);
double token_number(Token t);
int token_local(Token t);
bool token_is_px(Token t);  // kPlacement: px_ vs py_

Token keyword_token(Keyword k);
Token class_token(scene::ObjectClass c);
Token attribute_token(Attribute a);
Token builtin_token(Builtin b);
Token operator_token(Operator o);
Token local_token(int index);
Token placement_token(scene::ObjectClass c, bool is_x);
std::optional<Token> number_token(double value);

class LexError : public Error {
 public:
  LexError(std::size_t position, const std::string& m)
      : Error("LexError", "offset " + std::to_string(position) + ": " + m), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::set<std::string> expected, const std::string& m);
  std::size_t position() const noexcept { return position_; }
  const std::set<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::set<std::string> expected_;
};

// Text -> tokens, always terminated by a single EOS. Whitespace, newlines,
// `;` separators and `#` comments produce no tokens.
std::vector<Token> tokenize(std::string_view text);
// Canonical single-space rendering; EOS renders as nothing.
std::string detokenize(std::span<const Token> tokens);

// ---------------------------------------------------------------- AST

enum class BinaryOp { kAdd, kSub, kMul, kDiv };
enum class CompareOp { kEq, kLe, kGe, kLt, kGt };

enum class ExprKind { kNumber, kLocal, kAttribute, kPlacement, kNegate, kBinary, kCall };

struct Expr {
  ExprKind kind = ExprKind::kNumber;
  double number = 0.0;
  int local = 0;
  scene::ObjectClass cls = scene::ObjectClass::kApple;
  Attribute attribute = Attribute::kX;
  bool placement_x = true;
  BinaryOp op = BinaryOp::kAdd;
  Builtin builtin = Builtin::kSin;
  std::vector<Expr> args;

  friend bool operator==(const Expr&, const Expr&) = default;
};

enum class StmtKind { kLet, kRequire, kSolve, kMove, kGrip, kIf, kFor };

struct Stmt {
  StmtKind kind = StmtKind::kSolve;
  int local = 0;                 // kLet
  CompareOp compare = CompareOp::kEq;  // kRequire / kIf
  std::vector<Expr> exprs;       // let: 1, require/if: 2, move: 4
  bool grip_on = false;          // kGrip
  int count = 0;                 // kFor
  std::vector<Stmt> body;        // kFor / kIf then-branch
  std::vector<Stmt> else_body;   // kIf

  friend bool operator==(const Stmt&, const Stmt&) = default;
};

struct Program {
  Task task = Task::kArrange;
  std::vector<Stmt> body;
  // Classes mentioned anywhere in the body, in registry order.
  std::vector<scene::ObjectClass> referenced_classes;
  // Source tokens without the trailing EOS.
  std::vector<Token> tokens;

  friend bool operator==(const Program&, const Program&) = default;
};

inline constexpr int kMaxForCount = 100;

// LL(1) recursive descent; throws SyntaxError, including task mismatches
// (move/grip in arrange programs, require/solve/px/py/value in manipulation).
Program parse(std::span<const Token> tokens, Task task);
Program parse_text(std::string_view text, Task task);

// Program classes in registry order, read from a token list.
std::vector<scene::ObjectClass> referenced_classes(std::span<const Token> tokens);

// Multi-line rendering, one statement per line, blocks indented. Tokenizes
// back to the same token sequence.
std::string format_tokens(std::span<const Token> tokens);
inline std::string format_program(const Program& program) { return format_tokens(program.tokens); }

// `.rsc` file: first line `# <instruction>`, then the formatted body.
struct RscFile {
  std::string instruction;
  std::string body_text;
};
std::string write_rsc(const std::string& instruction, const Program& program);
RscFile read_rsc(std::string_view content);

}  // namespace roboscript::dsl
