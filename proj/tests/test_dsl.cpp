#include <set>

#include "doctest.h"
#include "roboscript/dsl.hpp"

using namespace roboscript;
using namespace roboscript::dsl;

namespace {

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (Token t : tokens) out.emplace_back(t == kEos ? "<eos>" : std::string(token_text(t)));
  return out;
}

}  // namespace

TEST_CASE("vocabulary is closed and fits the output head") {
  CHECK(vocab_size() <= 100);
  std::set<std::string> seen;
  for (std::size_t i = 1; i < vocab_size(); ++i) {
    const Token t{static_cast<std::uint8_t>(i)};
    const std::string text(token_text(t));
    CHECK(seen.insert(text).second);
    CHECK(token_from_text(text) == t);
    // Every non-EOS token lexes back to itself.
    const auto lexed = tokenize(text);
    REQUIRE(lexed.size() == 2);
    CHECK(lexed[0] == t);
  }
  for (auto c : scene::kAllClasses) {
    CHECK(token_class(class_token(c)) == c);
    CHECK(token_class(placement_token(c, true)) == c);
    CHECK(token_is_px(placement_token(c, true)));
    CHECK_FALSE(token_is_px(placement_token(c, false)));
  }
}

TEST_CASE("tokenize a move call") {
  const auto toks = tokenize("move ( apple .x , apple .y , 1 , 0 )");
  const std::vector<std::string> expected = {"move", "(", "apple", ".x", ",", "apple", ".y",
                                             ",", "1", ",", "0", ")", "<eos>"};
  CHECK(texts(toks) == expected);
  // Compact spelling lexes identically.
  CHECK(tokenize("move(apple.x,apple.y,1,0)") == toks);
}

TEST_CASE("tokenize edge cases") {
  CHECK(tokenize("") == std::vector<Token>{kEos});
  CHECK(tokenize("  # only a comment\n ; ;") == std::vector<Token>{kEos});
  CHECK_THROWS_AS(tokenize("flask"), LexError);
  CHECK_THROWS_AS(tokenize("move ( 0.3"), LexError);
  CHECK_THROWS_AS(tokenize("apple .q"), LexError);
  CHECK_THROWS_AS(tokenize("let t0 = 1 $ 2"), LexError);
  try {
    tokenize("solve flask");
  } catch (const LexError& e) {
    CHECK(e.position() == 6);
  }
}

TEST_CASE("minus is a sign only where an operand cannot end") {
  CHECK(texts(tokenize("t0 -1")) == std::vector<std::string>{"t0", "-", "1", "<eos>"});
  CHECK(texts(tokenize("( -1")) == std::vector<std::string>{"(", "-1", "<eos>"});
  CHECK(texts(tokenize("== -0.5")) == std::vector<std::string>{"==", "-0.5", "<eos>"});
  // -2 is not a literal: unary minus on 2.
  CHECK(texts(tokenize("( -2")) == std::vector<std::string>{"(", "-", "2", "<eos>"});
}

TEST_CASE("detokenize") {
  CHECK(detokenize(std::vector<Token>{kEos}).empty());
  CHECK(detokenize(std::vector<Token>{keyword_token(Keyword::kSolve), kEos}) == "solve");
  const std::string text = "let t0 = atan2 ( apple .y - orange .y , apple .x - orange .x )";
  CHECK(detokenize(tokenize(text)) == text);
  CHECK(detokenize(tokenize("let   t0=atan2(apple.y-orange.y,apple.x-orange.x)")) == text);
}

TEST_CASE("parse an arrange body") {
  const Program p = parse_text("require px_apple == px_orange ; solve", Task::kArrange);
  CHECK(p.task == Task::kArrange);
  REQUIRE(p.body.size() == 2);
  CHECK(p.body[0].kind == StmtKind::kRequire);
  CHECK(p.body[0].compare == CompareOp::kEq);
  CHECK(p.body[1].kind == StmtKind::kSolve);
  CHECK(p.referenced_classes == std::vector<scene::ObjectClass>{scene::ObjectClass::kApple, scene::ObjectClass::kOrange});
}

TEST_CASE("syntax errors report position and expectations") {
  try {
    parse_text("move ( 1 , )", Task::kManipulation);
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 4);
    CHECK(e.expected().count("<number>") == 1);
  }
  CHECK_THROWS_AS(parse_text("require px_apple == 0", Task::kManipulation), SyntaxError);
  CHECK_THROWS_AS(parse_text("solve", Task::kManipulation), SyntaxError);
  CHECK_THROWS_AS(parse_text("move ( 0 , 0 , 0 , 0 )", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("grip ( on )", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("let t0 = value ( 1 )", Task::kManipulation), SyntaxError);
  CHECK_THROWS_AS(parse_text("let t0 = px_apple", Task::kManipulation), SyntaxError);
  CHECK_THROWS_AS(parse_text("require px_apple < 0", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("for 0.5 solve end", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("for 180 solve end", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("if 1 > 0 solve", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("let t0 = apple", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("let t0 = sin ( 1 , 2 )", Task::kArrange), SyntaxError);
  CHECK_THROWS_AS(parse_text("grip ( 1 )", Task::kManipulation), SyntaxError);
  CHECK_THROWS_AS(parse(std::vector<Token>{keyword_token(Keyword::kSolve)}, Task::kArrange), SyntaxError);
}

TEST_CASE("nested blocks and operator precedence") {
  const Program p = parse_text(
      "let t0 = 0\n"
      "for 3\n"
      "  if t0 > 90 move ( 1 - 2 * 0.5 , 0 , 1 , t0 ) else grip ( on ) end\n"
      "  let t0 = t0 + 90\n"
      "end\n",
      Task::kManipulation);
  REQUIRE(p.body.size() == 2);
  const Stmt& loop = p.body[1];
  CHECK(loop.kind == StmtKind::kFor);
  CHECK(loop.count == 3);
  REQUIRE(loop.body.size() == 2);
  const Stmt& branch = loop.body[0];
  CHECK(branch.kind == StmtKind::kIf);
  CHECK(branch.compare == CompareOp::kGt);
  REQUIRE(branch.body.size() == 1);
  REQUIRE(branch.else_body.size() == 1);
  const Expr& x = branch.body[0].exprs[0];
  REQUIRE(x.kind == ExprKind::kBinary);
  CHECK(x.op == BinaryOp::kSub);
  CHECK(x.args[1].kind == ExprKind::kBinary);
  CHECK(x.args[1].op == BinaryOp::kMul);
}

TEST_CASE("formatted programs re-tokenize to the same tokens") {
  const std::string body =
      "solve if value ( px_orange ) > 0 require px_apple == value ( px_orange ) - orange .w / 2 "
      "else require px_apple == - value ( px_orange ) end for 2 require py_apple >= -0.5 end solve";
  const Program p = parse_text(body, Task::kArrange);
  const std::string pretty = format_program(p);
  CHECK(pretty.find("\n  require") != std::string::npos);
  CHECK(tokenize(pretty) == tokenize(body));
  CHECK(parse_text(pretty, Task::kArrange) == p);
}

TEST_CASE("rsc files carry the instruction in the first comment line") {
  const Program p = parse_text("move ( lock .x , lock .y , 1 , 0 )", Task::kManipulation);
  const std::string file = write_rsc("topple the lock", p);
  CHECK(file.rfind("# topple the lock\n", 0) == 0);
  const RscFile back = read_rsc(file);
  CHECK(back.instruction == "topple the lock");
  CHECK(parse_text(back.body_text, Task::kManipulation) == p);
}
