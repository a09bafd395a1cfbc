#include <cmath>
#include <sstream>

#include "doctest.h"
#include "roboscript/error.hpp"
#include "roboscript/scene.hpp"

using namespace roboscript;
using namespace roboscript::scene;

TEST_CASE("generation is a pure function of classes and seed") {
  const std::vector<ObjectClass> one = {ObjectClass::kApple};
  const Scene a = generate_scene(one, 7);
  const Scene b = generate_scene(one, 7);
  CHECK(a == b);
  REQUIRE(a.size() == 1);
  CHECK(a.objects()[0].cls == ObjectClass::kApple);
  CHECK(generate_scene(one, 8) != a);
}

TEST_CASE("generation preconditions") {
  CHECK_THROWS_AS(generate_scene({}, 0), PreconditionError);
  const std::vector<ObjectClass> dup = {ObjectClass::kApple, ObjectClass::kApple};
  CHECK_THROWS_AS(generate_scene(dup, 0), PreconditionError);
  std::vector<ObjectClass> nine(kAllClasses.begin(), kAllClasses.begin() + 9);
  CHECK_THROWS_AS(generate_scene(nine, 0), PreconditionError);
}

TEST_CASE("two objects keep the minimum separation") {
  const std::vector<ObjectClass> two = {ObjectClass::kApple, ObjectClass::kOrange};
  const Scene s = generate_scene(two, 3);
  const auto& o = s.objects();
  CHECK(std::hypot(o[0].x - o[1].x, o[0].y - o[1].y) >= 0.25);
}

TEST_CASE("generated scenes satisfy every invariant over 1000 seeds") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::vector<ObjectClass> classes(kAllClasses.begin(), kAllClasses.begin() + 1 + seed % 8);
    const Scene s = generate_scene(classes, seed);
    REQUIRE(s.size() == classes.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& a = s.objects()[i];
      REQUIRE(object_violation(a).empty());
      REQUIRE(a.w >= kMinExtent);
      REQUIRE(a.w <= kMaxExtent);
      REQUIRE(a.h >= kMinExtent);
      REQUIRE(a.h <= kMaxExtent);
      REQUIRE(a.d >= kMinDepth);
      REQUIRE(a.d <= kMaxDepth);
      for (std::size_t j = 0; j < i; ++j) {
        const auto& b = s.objects()[j];
        REQUIRE(a.cls != b.cls);
        REQUIRE(std::hypot(a.x - b.x, a.y - b.y) >= kMinSeparation);
      }
    }
    std::stringstream io;
    write_scene(io, s);
    REQUIRE(read_scene(io) == s);
  }
}

TEST_CASE("lookup returns the object or null") {
  const Scene s({SceneObject{ObjectClass::kApple, 0.3, -0.2, 0.1, 0.1, 0.1}});
  const SceneObject* apple = s.lookup(ObjectClass::kApple);
  REQUIRE(apple != nullptr);
  CHECK(apple->x == 0.3);
  CHECK(s.lookup(ObjectClass::kOrange) == nullptr);
  CHECK(Scene().lookup(ObjectClass::kApple) == nullptr);
}

TEST_CASE("scene file parse errors carry the line number") {
  std::istringstream dup("# header\napple 0 0 0.1 0.1 0.1\napple 0.5 0.5 0.1 0.1 0.1\n");
  try {
    read_scene(dup);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream range("apple 1.5 0 0.1 0.1 0.1\n");
  CHECK_THROWS_AS(read_scene(range), ParseError);
  std::istringstream unknown("flask 0 0 0.1 0.1 0.1\n");
  CHECK_THROWS_AS(read_scene(unknown), ParseError);
  std::istringstream short_line("apple 0 0 0.1\n");
  CHECK_THROWS_AS(read_scene(short_line), ParseError);
  std::istringstream bad_number("apple 0 zero 0.1 0.1 0.1\n");
  CHECK_THROWS_AS(read_scene(bad_number), ParseError);
}

TEST_CASE("class registry names") {
  for (auto c : kAllClasses) {
    CHECK(class_from_name(class_name(c)) == c);
    CHECK(class_from_word(class_word(c)) == c);
  }
  CHECK(class_name(ObjectClass::kTraySlot) == "tray_slot");
  CHECK(class_word(ObjectClass::kTraySlot) == "tray-slot");
}
