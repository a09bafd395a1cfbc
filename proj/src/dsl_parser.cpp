#include <algorithm>
#include <cmath>
#include <sstream>

#include "roboscript/dsl.hpp"

namespace roboscript::dsl {

namespace {

std::string join_expected(const std::set<std::string>& expected) {
  std::string out;
  for (const auto& e : expected) {
    if (!out.empty()) out += ' ';
    out += e.empty() ? "<eos>" : e;
  }
  return out;
}

std::set<std::string> expr_first() {
  return {"<number>", "<local>", "<object>", "<builtin>", "(", "-", "px_*", "py_*"};
}

int builtin_arity(Builtin b) {
  switch (b) {
    case Builtin::kAtan2:
    case Builtin::kHypot:
    case Builtin::kMin:
    case Builtin::kMax:
      return 2;
    default:
      return 1;
  }
}

class Parser {
 public:
  Parser(std::span<const Token> tokens, Task task) : tokens_(tokens), task_(task) {}

  Program run() {
    if (tokens_.empty() || tokens_.back() != kEos) {
      throw SyntaxError(tokens_.size(), {"<eos>"}, "token list must end with EOS");
    }
    Program p;
    p.task = task_;
    while (peek() != kEos) p.body.push_back(statement());
    if (pos_ + 1 != tokens_.size()) throw SyntaxError(pos_, {}, "tokens after EOS");
    p.tokens.assign(tokens_.begin(), tokens_.end() - 1);
    p.referenced_classes = referenced_classes(tokens_);
    return p;
  }

 private:
  Token peek() const { return pos_ < tokens_.size() ? tokens_[pos_] : kEos; }
  Token next() { return pos_ < tokens_.size() ? tokens_[pos_++] : kEos; }

  bool is_keyword(Token t, Keyword k) const { return token_kind(t) == TokenKind::kKeyword && token_keyword(t) == k; }
  bool is_operator(Token t, Operator o) const {
    return token_kind(t) == TokenKind::kOperator && token_operator(t) == o;
  }

  [[noreturn]] void fail(std::set<std::string> expected, const std::string& what) const {
    throw SyntaxError(pos_, std::move(expected), what);
  }

  void expect_operator(Operator o) {
    if (!is_operator(peek(), o)) {
      fail({std::string(token_text(operator_token(o)))}, "unexpected '" + std::string(token_text(peek())) + "'");
    }
    ++pos_;
  }

  void expect_keyword(Keyword k) {
    if (!is_keyword(peek(), k)) {
      fail({std::string(token_text(keyword_token(k)))}, "unexpected '" + std::string(token_text(peek())) + "'");
    }
    ++pos_;
  }

  void require_task(Task needed, Token t) const {
    if (task_ != needed) {
      throw SyntaxError(pos_, {}, "'" + std::string(token_text(t)) + "' is not allowed in " +
                                      std::string(task_name(task_)) + " programs");
    }
  }

  std::vector<Stmt> block_until(std::initializer_list<Keyword> stops) {
    std::vector<Stmt> out;
    for (;;) {
      const Token t = peek();
      if (t == kEos) {
        std::set<std::string> exp;
        for (auto k : stops) exp.insert(std::string(token_text(keyword_token(k))));
        fail(exp, "unterminated block");
      }
      if (token_kind(t) == TokenKind::kKeyword &&
          std::find(stops.begin(), stops.end(), token_keyword(t)) != stops.end()) {
        return out;
      }
      out.push_back(statement());
    }
  }

  CompareOp comparison(bool require_form) {
    const Token t = peek();
    if (token_kind(t) == TokenKind::kOperator) {
      switch (token_operator(t)) {
        case Operator::kEq:
          ++pos_;
          return CompareOp::kEq;
        case Operator::kLe:
          ++pos_;
          return CompareOp::kLe;
        case Operator::kGe:
          ++pos_;
          return CompareOp::kGe;
        case Operator::kLt:
          if (require_form) break;
          ++pos_;
          return CompareOp::kLt;
        case Operator::kGt:
          if (require_form) break;
          ++pos_;
          return CompareOp::kGt;
        default:
          break;
      }
    }
    if (require_form) fail({"==", "<=", ">="}, "expected a constraint relation");
    fail({"==", "<=", ">=", "<", ">"}, "expected a comparison");
  }

  Stmt statement() {
    const Token t = peek();
    if (token_kind(t) != TokenKind::kKeyword) {
      fail({"let", "require", "solve", "move", "grip", "if", "for"},
           "expected a statement, got '" + std::string(token_text(t)) + "'");
    }
    Stmt s;
    switch (token_keyword(t)) {
      case Keyword::kLet: {
        ++pos_;
        const Token local = next();
        if (token_kind(local) != TokenKind::kLocal) {
          --pos_;
          fail({"<local>"}, "let needs a local t0..t9");
        }
        s.kind = StmtKind::kLet;
        s.local = token_local(local);
        expect_operator(Operator::kAssign);
        s.exprs.push_back(expr());
        return s;
      }
      case Keyword::kRequire:
        require_task(Task::kArrange, t);
        ++pos_;
        s.kind = StmtKind::kRequire;
        s.exprs.push_back(expr());
        s.compare = comparison(true);
        s.exprs.push_back(expr());
        return s;
      case Keyword::kSolve:
        require_task(Task::kArrange, t);
        ++pos_;
        s.kind = StmtKind::kSolve;
        return s;
      case Keyword::kMove:
        require_task(Task::kManipulation, t);
        ++pos_;
        s.kind = StmtKind::kMove;
        expect_operator(Operator::kLParen);
        for (int k = 0; k < 4; ++k) {
          if (k > 0) expect_operator(Operator::kComma);
          s.exprs.push_back(expr());
        }
        expect_operator(Operator::kRParen);
        return s;
      case Keyword::kGrip: {
        require_task(Task::kManipulation, t);
        ++pos_;
        s.kind = StmtKind::kGrip;
        expect_operator(Operator::kLParen);
        const Token state = peek();
        if (is_keyword(state, Keyword::kOn)) {
          s.grip_on = true;
        } else if (is_keyword(state, Keyword::kOff)) {
          s.grip_on = false;
        } else {
          fail({"on", "off"}, "grip needs on or off");
        }
        ++pos_;
        expect_operator(Operator::kRParen);
        return s;
      }
      case Keyword::kIf:
        ++pos_;
        s.kind = StmtKind::kIf;
        s.exprs.push_back(expr());
        s.compare = comparison(false);
        s.exprs.push_back(expr());
        s.body = block_until({Keyword::kElse, Keyword::kEnd});
        if (is_keyword(peek(), Keyword::kElse)) {
          ++pos_;
          s.else_body = block_until({Keyword::kEnd});
        }
        expect_keyword(Keyword::kEnd);
        return s;
      case Keyword::kFor: {
        ++pos_;
        const Token count = peek();
        if (token_kind(count) != TokenKind::kNumber) fail({"<number>"}, "for needs a literal count");
        const double v = token_number(count);
        if (v != std::floor(v) || v < 1 || v > kMaxForCount) {
          fail({"<number>"}, "for count must be an integer in 1..100");
        }
        ++pos_;
        s.kind = StmtKind::kFor;
        s.count = static_cast<int>(v);
        s.body = block_until({Keyword::kEnd});
        expect_keyword(Keyword::kEnd);
        return s;
      }
      default:
        fail({"let", "require", "solve", "move", "grip", "if", "for"},
             "unexpected '" + std::string(token_text(t)) + "'");
    }
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      const Token t = peek();
      BinaryOp op;
      if (is_operator(t, Operator::kPlus)) {
        op = BinaryOp::kAdd;
      } else if (is_operator(t, Operator::kMinus)) {
        op = BinaryOp::kSub;
      } else {
        return lhs;
      }
      ++pos_;
      Expr e;
      e.kind = ExprKind::kBinary;
      e.op = op;
      e.args.push_back(std::move(lhs));
      e.args.push_back(term());
      lhs = std::move(e);
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      const Token t = peek();
      BinaryOp op;
      if (is_operator(t, Operator::kStar)) {
        op = BinaryOp::kMul;
      } else if (is_operator(t, Operator::kSlash)) {
        op = BinaryOp::kDiv;
      } else {
        return lhs;
      }
      ++pos_;
      Expr e;
      e.kind = ExprKind::kBinary;
      e.op = op;
      e.args.push_back(std::move(lhs));
      e.args.push_back(unary());
      lhs = std::move(e);
    }
  }

  Expr unary() {
    if (is_operator(peek(), Operator::kMinus)) {
      ++pos_;
      Expr e;
      e.kind = ExprKind::kNegate;
      e.args.push_back(unary());
      return e;
    }
    return primary();
  }

  Expr primary() {
    const Token t = peek();
    Expr e;
    switch (token_kind(t)) {
      case TokenKind::kNumber:
        ++pos_;
        e.kind = ExprKind::kNumber;
        e.number = token_number(t);
        return e;
      case TokenKind::kLocal:
        ++pos_;
        e.kind = ExprKind::kLocal;
        e.local = token_local(t);
        return e;
      case TokenKind::kPlacement:
        require_task(Task::kArrange, t);
        ++pos_;
        e.kind = ExprKind::kPlacement;
        e.cls = token_class(t);
        e.placement_x = token_is_px(t);
        return e;
      case TokenKind::kClass: {
        ++pos_;
        const Token attr = peek();
        if (token_kind(attr) != TokenKind::kAttribute) fail({".x", ".y", ".w", ".h", ".d"}, "object needs an attribute");
        ++pos_;
        e.kind = ExprKind::kAttribute;
        e.cls = token_class(t);
        e.attribute = token_attribute(attr);
        return e;
      }
      case TokenKind::kBuiltin: {
        const Builtin b = token_builtin(t);
        if (b == Builtin::kValue) require_task(Task::kArrange, t);
        ++pos_;
        e.kind = ExprKind::kCall;
        e.builtin = b;
        expect_operator(Operator::kLParen);
        const int arity = builtin_arity(b);
        for (int k = 0; k < arity; ++k) {
          if (k > 0) expect_operator(Operator::kComma);
          e.args.push_back(expr());
        }
        expect_operator(Operator::kRParen);
        return e;
      }
      case TokenKind::kOperator:
        if (token_operator(t) == Operator::kLParen) {
          ++pos_;
          Expr inner = expr();
          expect_operator(Operator::kRParen);
          return inner;
        }
        break;
      default:
        break;
    }
    fail(expr_first(), "expected an expression, got '" + std::string(t == kEos ? "<eos>" : token_text(t)) + "'");
  }

  std::span<const Token> tokens_;
  Task task_;
  std::size_t pos_ = 0;
};

bool starts_statement(Token t) {
  if (token_kind(t) != TokenKind::kKeyword) return false;
  const Keyword k = token_keyword(t);
  return k != Keyword::kOn && k != Keyword::kOff;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::set<std::string> expected, const std::string& m)
    : Error("SyntaxError", "token " + std::to_string(position) + ": " + m +
                               (expected.empty() ? "" : " (expected: " + join_expected(expected) + ")")),
      position_(position),
      expected_(std::move(expected)) {}

Program parse(std::span<const Token> tokens, Task task) { return Parser(tokens, task).run(); }

Program parse_text(std::string_view text, Task task) {
  const auto tokens = tokenize(text);
  return parse(tokens, task);
}

std::vector<scene::ObjectClass> referenced_classes(std::span<const Token> tokens) {
  std::array<bool, scene::kNumClasses> seen{};
  for (Token t : tokens) {
    const auto k = token_kind(t);
    if (k == TokenKind::kClass || k == TokenKind::kPlacement) seen[scene::class_index(token_class(t))] = true;
  }
  std::vector<scene::ObjectClass> out;
  for (auto c : scene::kAllClasses) {
    if (seen[scene::class_index(c)]) out.push_back(c);
  }
  return out;
}

std::string format_tokens(std::span<const Token> tokens) {
  std::string out;
  int depth = 0;
  bool line_start = true;
  for (Token t : tokens) {
    if (t == kEos) break;
    if (starts_statement(t) && !out.empty()) {
      out += '\n';
      line_start = true;
    }
    const bool closer = token_kind(t) == TokenKind::kKeyword &&
                        (token_keyword(t) == Keyword::kEnd || token_keyword(t) == Keyword::kElse);
    if (closer) depth = std::max(0, depth - 1);
    if (line_start) {
      out.append(static_cast<std::size_t>(2 * depth), ' ');
      line_start = false;
    } else {
      out += ' ';
    }
    out += token_text(t);
    if (token_kind(t) == TokenKind::kKeyword) {
      const Keyword k = token_keyword(t);
      if (k == Keyword::kIf || k == Keyword::kFor || k == Keyword::kElse) ++depth;
    }
  }
  if (!out.empty()) out += '\n';
  return out;
}

std::string write_rsc(const std::string& instruction, const Program& program) {
  return "# " + instruction + "\n" + format_program(program);
}

RscFile read_rsc(std::string_view content) {
  RscFile f;
  const auto nl = content.find('\n');
  std::string_view first = content.substr(0, nl);
  if (first.size() >= 1 && first.front() == '#') {
    first.remove_prefix(1);
    if (!first.empty() && first.front() == ' ') first.remove_prefix(1);
    if (!first.empty() && first.back() == '\r') first.remove_suffix(1);
    f.instruction = std::string(first);
    f.body_text = nl == std::string_view::npos ? std::string() : std::string(content.substr(nl + 1));
  } else {
    f.body_text = std::string(content);
  }
  return f;
}

}  // namespace roboscript::dsl
