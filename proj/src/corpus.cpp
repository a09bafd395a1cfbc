#include "roboscript/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "roboscript/error.hpp"
#include "roboscript/rng.hpp"

namespace roboscript::corpus {
namespace {

using dsl::Task;
using scene::ObjectClass;

// ---------------------------------------------------------------- phrase tables
//
// Every English fragment the generator can emit lives in these tables; the
// closed word list is collected from them. `{X}` / `{Y}` are class slots,
// `{E}` an edge name.

const std::vector<std::string_view> kArrangeVerbs = {"put", "keep", "place", "put down"};
const std::vector<std::string_view> kPutItVerbs = {"put it", "keep it", "place it", "put it down"};
const std::vector<std::string_view> kPickVerbs = {"pick up the {X}", "grab the {X}", "take the {X}", "lift the {X}"};

struct Region {
  std::string_view key;
  std::vector<std::string_view> phrases;
  std::string_view arrange_x;  // in terms of {X}
  std::string_view arrange_y;
  std::string_view target_x;  // manipulation drop point
  std::string_view target_y;
};

const std::vector<Region>& regions() {
  static const std::vector<Region> kRegions = {
      {"center", {"in the center", "in the middle"}, "0", "0", "0", "0"},
      {"top_right",
       {"in the top right corner", "at the right-top corner"},
       "1 - {X} .w / 2", "1 - {X} .h / 2", "0.75", "0.75"},
      {"top_left",
       {"in the top left corner", "at the left-top corner"},
       "-1 + {X} .w / 2", "1 - {X} .h / 2", "-0.75", "0.75"},
      {"bottom_right",
       {"in the bottom right corner", "at the right-bottom corner"},
       "1 - {X} .w / 2", "-1 + {X} .h / 2", "0.75", "-0.75"},
      {"bottom_left",
       {"in the bottom left corner", "at the left-bottom corner"},
       "-1 + {X} .w / 2", "-1 + {X} .h / 2", "-0.75", "-0.75"},
      {"top_edge", {"at the top edge", "along the top edge"}, "0",
       "1 - {X} .h / 2", "0", "0.75"},
      {"bottom_edge", {"at the bottom edge", "along the bottom edge"}, "0",
       "-1 + {X} .h / 2", "0", "-0.75"},
      {"left_edge", {"at the left edge", "along the left edge"},
       "-1 + {X} .w / 2", "0", "-0.75", "0"},
      {"right_edge", {"at the right edge", "along the right edge"},
       "1 - {X} .w / 2", "0", "0.75", "0"},
  };
  return kRegions;
}

struct Direction {
  std::string_view key;
  std::vector<std::string_view> phrases;  // relative to {Y}
  std::string_view arrange_x;             // px of {X} in terms of px/py of {Y}
  std::string_view arrange_y;
  std::string_view target_x;  // drop point from scene attributes
  std::string_view target_y;
};

const std::vector<Direction>& directions() {
  static const std::vector<Direction> kDirections = {
      {"left",
       {"to the left of the {Y}", "left of the {Y}"},
       "px_{Y} - {Y} .w / 2 - {X} .w / 2 - 0.05", "py_{Y}", "{Y} .x - {Y} .w / 2 - {X} .w / 2 - 0.05",
       "{Y} .y"},
      {"right",
       {"to the right of the {Y}", "right of the {Y}"},
       "px_{Y} + {Y} .w / 2 + {X} .w / 2 + 0.05", "py_{Y}", "{Y} .x + {Y} .w / 2 + {X} .w / 2 + 0.05",
       "{Y} .y"},
      {"above",
       {"above the {Y}", "on top of the {Y}"},
       "px_{Y}", "py_{Y} + {Y} .h / 2 + {X} .h / 2 + 0.05", "{Y} .x",
       "{Y} .y + {Y} .h / 2 + {X} .h / 2 + 0.05"},
      {"below",
       {"below the {Y}", "under the {Y}"},
       "px_{Y}", "py_{Y} - {Y} .h / 2 - {X} .h / 2 - 0.05", "{Y} .x",
       "{Y} .y - {Y} .h / 2 - {X} .h / 2 - 0.05"},
  };
  return kDirections;
}

const std::vector<std::string_view> kBetweenThem = {"between them", "in between them"};
const std::vector<std::string_view> kBetweenPair = {"between the {X} and the {Y}"};
const std::vector<std::string_view> kNextToIt = {"next to it", "beside it"};
const std::vector<std::string_view> kGlue = {",", "and", "the"};

const std::vector<std::string_view> kReach = {"reach for the {X}", "touch the {X}", "go to the {X}",
                                              "move to the {X}"};
const std::vector<std::string_view> kPushToward = {"push the {X} towards the {Y}", "push the {X} toward the {Y}",
                                                   "slide the {X} towards the {Y}",
                                                   "nudge the {X} towards the {Y}", "push the {X} to the {Y}",
                                                   "move the {X} towards the {Y}"};
const std::vector<std::string_view> kPushOff = {"push the {X} off the table", "push the {X} off the edge of the table",
                                                "knock the {X} off the table", "push the {X} off the edge"};
const std::vector<std::string_view> kPushOffEdge = {"push the {X} off the {E} edge",
                                                    "push the {X} off the {E} edge of the table",
                                                    "push the {X} off the {E} side of the table"};
const std::vector<std::string_view> kEdges = {"left", "right", "top", "bottom"};
const std::vector<std::string_view> kTopple = {"topple the {X}", "knock over the {X}", "tip over the {X}",
                                               "push over the {X}"};
const std::vector<std::string_view> kPickPush = {"use it to push the {Y} off the table",
                                                 "use it to push the {Y} off the edge of the table",
                                                 "push the {Y} off the table with it",
                                                 "push the {Y} off the edge with it"};
const std::vector<std::string_view> kCircle = {"move around the {X}", "circle around the {X}", "go around the {X}",
                                               "trace a circle around the {X}"};

// ---------------------------------------------------------------- families

struct Family {
  std::string_view name;
  int arity;     // distinct classes
  int clauses;   // instruction phrases
  int weight;    // base count at the default corpus size
};

const std::vector<Family>& families(Task task) {
  static const std::vector<Family> kArrange = {
      {"absolute", 1, 1, 26},   {"relative", 2, 1, 20},   {"between", 3, 3, 12},   {"adjacent", 2, 2, 14},
      {"composite2", 2, 2, 20}, {"composite3", 3, 3, 16}, {"composite4", 4, 4, 16},
  };
  static const std::vector<Family> kManip = {
      {"reach", 1, 1, 14},          {"push_toward", 2, 1, 26},        {"push_off", 1, 1, 14},
      {"push_off_edge", 1, 1, 12},  {"pick_place_region", 1, 2, 18}, {"pick_place_relative", 2, 2, 28},
      {"topple", 1, 1, 10},         {"pick_push", 2, 2, 18},          {"circle", 1, 1, 6},
  };
  return task == Task::kArrange ? kArrange : kManip;
}

const Family& family_info(Task task, std::string_view name) {
  for (const auto& f : families(task)) {
    if (f.name == name) return f;
  }
  throw std::invalid_argument("unknown template family " + std::string(name));
}

// ---------------------------------------------------------------- helpers

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
}

// Rebinds the generic {X}/{Y} slots of a table entry to numbered slots.
std::string bind(std::string_view tmpl, int x, int y = -1) {
  std::string s(tmpl);
  replace_all(s, "{X}", fmt::format("{{{}}}", x));
  if (y >= 0) replace_all(s, "{Y}", fmt::format("{{{}}}", y));
  return s;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

struct Draft {
  std::string instruction;  // with {i} slots
  std::string program;      // with {i} slots
};

// ---------------------------------------------------------------- arrange

std::string absolute_require(const Region& r, int i) {
  return fmt::format("require px_{{{0}}} == {1}\nrequire py_{{{0}}} == {2}\n", i, bind(r.arrange_x, i),
                     bind(r.arrange_y, i));
}

std::string relative_require(const Direction& d, int i, int j) {
  return fmt::format("require px_{{{0}}} == {1}\nrequire py_{{{0}}} == {2}\n", i, bind(d.arrange_x, i, j),
                     bind(d.arrange_y, i, j));
}

std::string between_require(int k, int i, int j) {
  return fmt::format("require px_{{{0}}} == ( px_{{{1}}} + px_{{{2}}} ) / 2\n"
                     "require py_{{{0}}} == ( py_{{{1}}} + py_{{{2}}} ) / 2\n",
                     k, i, j);
}

// Joins clauses as "a , b , c and d".
std::string join_clauses(const std::vector<std::string>& clauses) {
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i > 0) out += (i + 1 == clauses.size()) ? " and " : " , ";
    out += clauses[i];
  }
  return out;
}

// Regions pairwise distinct within one instruction.
std::vector<const Region*> distinct_regions(Rng& rng, std::size_t n) {
  std::vector<const Region*> all;
  for (const auto& r : regions()) all.push_back(&r);
  rng.shuffle(all);
  all.resize(n);
  return all;
}

// `shape` draws regions, directions and clause layout; `words` draws verbs
// and spellings.
Draft arrange_draft(std::string_view family, Rng& shape, Rng& words) {
  const std::string verb(pick(words, kArrangeVerbs));
  Draft d;
  if (family == "absolute") {
    const Region& r = pick(shape, regions());
    d.instruction = fmt::format("{} the {{0}} {}", verb, pick(words, r.phrases));
    d.program = absolute_require(r, 0) + "solve\n";
  } else if (family == "relative") {
    const Direction& dir = pick(shape, directions());
    d.instruction = fmt::format("{} the {{0}} {}", verb, bind(pick(words, dir.phrases), 0, 1));
    d.program = "require px_{1} == 0\nrequire py_{1} == 0\n" + relative_require(dir, 0, 1) + "solve\n";
  } else if (family == "between") {
    auto rs = distinct_regions(shape, 2);
    d.instruction = fmt::format("{} the {{0}} {} , the {{1}} {} and the {{2}} {}", verb,
                                pick(words, rs[0]->phrases), pick(words, rs[1]->phrases), pick(words, kBetweenThem));
    d.program = absolute_require(*rs[0], 0) + absolute_require(*rs[1], 1) + between_require(2, 0, 1) + "solve\n";
  } else if (family == "adjacent") {
    // Decides the side after inspecting the first solution.
    const Region& r = pick(shape, regions());
    d.instruction =
        fmt::format("{} the {{0}} {} and the {{1}} {}", verb, pick(words, r.phrases), pick(words, kNextToIt));
    d.program = absolute_require(r, 0) +
                "solve\n"
                "if value ( px_{0} ) > 0\n"
                "require px_{1} == value ( px_{0} ) - {0} .w / 2 - {1} .w / 2 - 0.05\n"
                "else\n"
                "require px_{1} == value ( px_{0} ) + {0} .w / 2 + {1} .w / 2 + 0.05\n"
                "end\n"
                "require py_{1} == value ( py_{0} )\n"
                "solve\n";
  } else {
    const int n = family_info(Task::kArrange, family).clauses;
    auto rs = distinct_regions(shape, static_cast<std::size_t>(n));
    std::vector<std::string> clauses;
    std::size_t next_region = 0;
    for (int i = 0; i < n; ++i) {
      // Clause kinds: 0 absolute, 1 relative to an earlier object, 2 between two earlier objects.
      int kind = 0;
      if (i > 0) {
        const double u = shape.uniform01();
        kind = u < 0.45 ? 0 : (i >= 2 && u < 0.7) ? 2 : 1;
      }
      if (kind == 0) {
        const Region& r = *rs[next_region++];
        clauses.push_back(fmt::format("the {{{}}} {}", i, pick(words, r.phrases)));
        d.program += absolute_require(r, i);
      } else if (kind == 1) {
        const int j = static_cast<int>(shape.below(static_cast<std::uint64_t>(i)));
        const Direction& dir = pick(shape, directions());
        clauses.push_back(fmt::format("the {{{}}} {}", i, bind(pick(words, dir.phrases), i, j)));
        d.program += relative_require(dir, i, j);
      } else {
        const int a = static_cast<int>(shape.below(static_cast<std::uint64_t>(i)));
        int b = static_cast<int>(shape.below(static_cast<std::uint64_t>(i - 1)));
        if (b >= a) ++b;
        clauses.push_back(fmt::format("the {{{}}} {}", i, bind(kBetweenPair.front(), a, b)));
        d.program += between_require(i, a, b);
      }
    }
    d.instruction = verb + " " + join_clauses(clauses);
    d.program += "solve\n";
  }
  return d;
}

// ---------------------------------------------------------------- manipulation
//
// Programs bind the grasped object's x, y and depth to t0, t1, t2 up front so
// class names appear only in the leading lets.

constexpr std::string_view kBindObject =
    "let t0 = {0} .x\n"
    "let t1 = {0} .y\n"
    "let t2 = {0} .d\n";

constexpr std::string_view kPickUp =
    "move ( t0 , t1 , t2 + 0.1 , 0 )\n"
    "move ( t0 , t1 , t2 , 0 )\n"
    "grip ( on )\n"
    "move ( t0 , t1 , t2 + 0.1 , 0 )\n";

std::string drop_at(std::string_view tx, std::string_view ty) {
  return fmt::format(
      "move ( {0} , {1} , t2 + 0.1 , 0 )\n"
      "move ( {0} , {1} , t2 , 0 )\n"
      "grip ( off )\n"
      "move ( {0} , {1} , t2 + 0.1 , 0 )\n",
      tx, ty);
}

// Approach from the side opposite `edge`, then sweep past the table border.
// Expects t0, t1, t2 bound.
std::string push_off_program(std::string_view edge) {
  std::string_view start_x = "t0";
  std::string_view start_y = "t1";
  std::string_view end_x = "t0";
  std::string_view end_y = "t1";
  if (edge == "right") {
    start_x = "t0 - {0} .w / 2 - 0.1";
    end_x = "1 + 0.1";
  } else if (edge == "left") {
    start_x = "t0 + {0} .w / 2 + 0.1";
    end_x = "-1 - 0.1";
  } else if (edge == "top") {
    start_y = "t1 - {0} .h / 2 - 0.1";
    end_y = "1 + 0.1";
  } else {
    start_y = "t1 + {0} .h / 2 + 0.1";
    end_y = "-1 - 0.1";
  }
  return fmt::format(
      "move ( {0} , {1} , t2 + 0.1 , 0 )\n"
      "move ( {0} , {1} , t2 / 2 , 0 )\n"
      "move ( {2} , {3} , t2 / 2 , 0 )\n"
      "move ( {2} , {3} , t2 + 0.1 , 0 )\n",
      start_x, start_y, end_x, end_y);
}

Draft manip_draft(std::string_view family, Rng& shape, Rng& words) {
  Draft d;
  const std::string bind_object(kBindObject);
  if (family == "reach") {
    d.instruction = bind(pick(words, kReach), 0);
    d.program =
        "move ( {0} .x , {0} .y , {0} .d + 0.1 , 0 )\n"
        "move ( {0} .x , {0} .y , {0} .d , 0 )\n";
  } else if (family == "push_toward") {
    d.instruction = bind(pick(words, kPushToward), 0, 1);
    d.program =
        "let t0 = atan2 ( {1} .y - {0} .y , {1} .x - {0} .x )\n"
        "let t1 = {0} .x - cos ( t0 ) * ( {0} .w / 2 + 0.1 )\n"
        "let t2 = {0} .y - sin ( t0 ) * ( {0} .w / 2 + 0.1 )\n"
        "let t3 = hypot ( {1} .x - {0} .x , {1} .y - {0} .y ) - {1} .w / 2 - {0} .w / 2\n"
        "let t4 = {0} .d\n"
        "move ( t1 , t2 , t4 + 0.1 , 0 )\n"
        "move ( t1 , t2 , t4 / 2 , 0 )\n"
        "move ( t1 + cos ( t0 ) * t3 , t2 + sin ( t0 ) * t3 , t4 / 2 , 0 )\n"
        "move ( t1 + cos ( t0 ) * t3 , t2 + sin ( t0 ) * t3 , t4 + 0.1 , 0 )\n";
  } else if (family == "push_off") {
    d.instruction = bind(pick(words, kPushOff), 0);
    d.program = bind_object + "if t0 > 0\n" + push_off_program("right") + "else\n" + push_off_program("left") + "end\n";
  } else if (family == "push_off_edge") {
    const std::string_view edge = pick(shape, kEdges);
    d.instruction = bind(pick(words, kPushOffEdge), 0);
    replace_all(d.instruction, "{E}", edge);
    d.program = bind_object + push_off_program(edge);
  } else if (family == "pick_place_region") {
    const Region& r = pick(shape, regions());
    d.instruction = fmt::format("{} and {} {}", bind(pick(words, kPickVerbs), 0), pick(words, kPutItVerbs),
                                pick(words, r.phrases));
    d.program = bind_object + std::string(kPickUp) + drop_at(r.target_x, r.target_y);
  } else if (family == "pick_place_relative") {
    const Direction& dir = pick(shape, directions());
    d.instruction = fmt::format("{} and {} {}", bind(pick(words, kPickVerbs), 0), pick(words, kPutItVerbs),
                                bind(pick(words, dir.phrases), 0, 1));
    d.program = bind_object +
                fmt::format("let t3 = {}\nlet t4 = {}\n", bind(dir.target_x, 0, 1), bind(dir.target_y, 0, 1)) +
                std::string(kPickUp) + drop_at("t3", "t4");
  } else if (family == "topple") {
    d.instruction = bind(pick(words, kTopple), 0);
    d.program = bind_object +
                "let t3 = {0} .w / 2\n"
                "move ( t0 - t3 - 0.1 , t1 , t2 + 0.1 , 0 )\n"
                "move ( t0 - t3 - 0.1 , t1 , t2 * 0.75 , 0 )\n"
                "move ( t0 + t3 , t1 , t2 * 0.75 , 0 )\n"
                "move ( t0 + t3 , t1 , t2 + 0.1 , 0 )\n";
  } else if (family == "pick_push") {
    d.instruction =
        fmt::format("{} and {}", bind(pick(words, kPickVerbs), 0), bind(pick(words, kPickPush), 0, 1));
    // t5: gap between the carried and the pushed object's centers; t6: carry height.
    d.program = bind_object + std::string(kPickUp) +
                "let t3 = {1} .x\n"
                "let t4 = {1} .y\n"
                "let t5 = {1} .w / 2 + {0} .w / 2 + 0.1\n"
                "let t6 = t2 + {1} .d + 0.1\n"
                "move ( t0 , t1 , t6 , 0 )\n"
                "if t3 > 0\n"
                "move ( t3 - t5 , t4 , t6 , 0 )\n"
                "move ( t3 - t5 , t4 , t2 , 0 )\n"
                "move ( 1 + 0.1 , t4 , t2 , 0 )\n"
                "grip ( off )\n"
                "move ( 1 + 0.1 , t4 , t2 + 0.1 , 0 )\n"
                "else\n"
                "move ( t3 + t5 , t4 , t6 , 0 )\n"
                "move ( t3 + t5 , t4 , t2 , 0 )\n"
                "move ( -1 - 0.1 , t4 , t2 , 0 )\n"
                "grip ( off )\n"
                "move ( -1 - 0.1 , t4 , t2 + 0.1 , 0 )\n"
                "end\n";
  } else if (family == "circle") {
    d.instruction = bind(pick(words, kCircle), 0);
    d.program = bind_object +
                "let t3 = 0\n"
                "for 3\n"
                "move ( t0 + cos ( t3 ) * 0.25 , t1 + sin ( t3 ) * 0.25 , t2 + 0.1 , t3 )\n"
                "let t3 = t3 + 90\n"
                "end\n"
                "move ( t0 + cos ( t3 ) * 0.25 , t1 + sin ( t3 ) * 0.25 , t2 + 0.1 , t3 )\n";
  } else {
    throw std::invalid_argument("unknown template family " + std::string(family));
  }
  return d;
}

// ---------------------------------------------------------------- instantiation

std::string fill_slots(std::string text, const std::vector<ObjectClass>& classes, bool words) {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    replace_all(text, fmt::format("{{{}}}", i), words ? scene::class_word(classes[i]) : scene::class_name(classes[i]));
  }
  return text;
}

std::vector<ObjectClass> draw_classes(Rng& rng, int arity) {
  std::vector<ObjectClass> all(scene::kAllClasses.begin(), scene::kAllClasses.end());
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(arity));
  return all;
}

std::string key_of(std::string_view family, const std::vector<ObjectClass>& classes) {
  std::string k(family);
  k += '|';
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i > 0) k += ',';
    k += scene::class_name(classes[i]);
  }
  return k;
}

std::vector<dsl::Token> program_tokens(const std::string& text, Task task) {
  return dsl::parse(dsl::tokenize(text), task).tokens;
}

std::string family_from_id(std::string_view id) {
  const auto a = id.find('.');
  const auto b = id.find('.', a + 1);
  if (a == std::string_view::npos || b == std::string_view::npos) return "";
  return std::string(id.substr(a + 1, b - a - 1));
}

std::vector<std::size_t> scaled_counts(const std::vector<Family>& fams, std::size_t n) {
  const std::size_t total = std::accumulate(fams.begin(), fams.end(), std::size_t{0},
                                            [](std::size_t s, const Family& f) { return s + f.weight; });
  std::vector<std::size_t> counts(fams.size());
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder, index)
  std::size_t used = 0;
  for (std::size_t i = 0; i < fams.size(); ++i) {
    counts[i] = n * fams[i].weight / total;
    used += counts[i];
    remainders.emplace_back(n * fams[i].weight % total, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

}  // namespace

SplitSizes split_sizes(Task task, std::size_t n_base) {
  if (task == Task::kArrange && n_base == kDefaultArrangeBase) return {102, 11, 11};
  if (task == Task::kManipulation && n_base == kDefaultManipBase) return {122, 12, 12};
  SplitSizes s;
  s.test = (n_base * 9 + 50) / 100;
  s.dev = (n_base * 9 + 50) / 100;
  s.train = n_base - s.test - s.dev;
  return s;
}

std::vector<std::string> template_families(Task task) {
  std::vector<std::string> out;
  for (const auto& f : families(task)) out.emplace_back(f.name);
  return out;
}

int clause_count(const std::string& family) {
  for (Task t : {Task::kArrange, Task::kManipulation}) {
    for (const auto& f : families(t)) {
      if (f.name == family) return f.clauses;
    }
  }
  return 0;
}

std::vector<ParallelSample> generate_corpus(Task task, std::size_t n_base, std::uint64_t seed) {
  if (n_base < 20) throw PreconditionError("generate_corpus requires n_base >= 20");
  const auto& fams = families(task);
  const auto counts = scaled_counts(fams, n_base);
  const SplitSizes sizes = split_sizes(task, n_base);

  struct Slot {
    std::size_t family;
    std::size_t index;
    Split split = Split::kTrain;
    bool assigned = false;
  };
  std::vector<Slot> slots;
  for (std::size_t f = 0; f < fams.size(); ++f) {
    for (std::size_t i = 0; i < counts[f]; ++i) slots.push_back({f, i});
  }
  Rng rng(derive_seed({seed, hash_string(dsl::task_name(task)), 1}));
  std::vector<std::size_t> order(slots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  // Held-out slots are taken round-robin over families so each family is
  // represented in dev and test.
  auto take = [&](Split split, std::size_t n) {
    std::size_t taken = 0;
    while (taken < n) {
      std::vector<std::size_t> fam_order(fams.size());
      std::iota(fam_order.begin(), fam_order.end(), std::size_t{0});
      rng.shuffle(fam_order);
      bool progress = false;
      for (std::size_t f : fam_order) {
        if (taken == n) break;
        for (std::size_t o : order) {
          if (!slots[o].assigned && slots[o].family == f) {
            slots[o].assigned = true;
            slots[o].split = split;
            ++taken;
            progress = true;
            break;
          }
        }
      }
      if (!progress) break;
    }
  };
  take(Split::kTest, sizes.test);
  take(Split::kDev, sizes.dev);

  // Each sentence structure (regions, directions, phrasing) is shared by
  // about kBasesPerStructure samples of the family that differ in objects.
  std::unordered_set<std::string> instructions;
  std::unordered_map<std::string, Split> key_owner;
  std::vector<ParallelSample> out;
  out.reserve(slots.size());
  for (Split split : {Split::kTest, Split::kDev, Split::kTrain}) {
    for (std::size_t o : order) {
      const Slot& slot = slots[o];
      if (slot.split != split) continue;
      const Family& fam = fams[slot.family];
      const std::size_t pool = (counts[slot.family] + kBasesPerStructure - 1) / kBasesPerStructure;
      Rng shape(derive_seed({seed, hash_string(dsl::task_name(task)), hash_string(fam.name), 0x7368, slot.index % pool}));
      Rng local(derive_seed({seed, hash_string(dsl::task_name(task)), hash_string(fam.name), slot.index}));
      auto draft = [&](Rng& structure) {
        Rng words(local.below(std::uint64_t{1} << 62));
        Draft d = task == Task::kArrange ? arrange_draft(fam.name, structure, words)
                                         : manip_draft(fam.name, structure, words);
        if (words.coin(0.1)) replace_all(d.instruction, "the {", "{");
        return d;
      };
      Draft d = draft(shape);
      bool done = false;
      for (int attempt = 0; attempt < 4000 && !done; ++attempt) {
        // Reword every 20 attempts; a structure whose object choices are used
        // up gives way to a fresh one.
        if (attempt > 0 && attempt % 20 == 0) {
          Rng again(derive_seed({seed, hash_string(dsl::task_name(task)), hash_string(fam.name), 0x7368,
                                 slot.index % pool}));
          d = attempt < 200 ? draft(again) : draft(local);
        }
        auto classes = draw_classes(local, fam.arity);
        std::string instruction = fill_slots(d.instruction, classes, true);
        const std::string key = key_of(fam.name, mentioned_classes(instruction));
        if (auto it = key_owner.find(key); it != key_owner.end() && it->second != split) continue;
        if (!instructions.insert(instruction).second) continue;
        key_owner.emplace(key, split);
        ParallelSample s;
        s.id = fmt::format("{}.{}.{:04}", dsl::task_name(task), fam.name, slot.index);
        s.task = task;
        s.instruction = std::move(instruction);
        s.program = program_tokens(fill_slots(d.program, classes, false), task);
        s.template_family = std::string(fam.name);
        s.split = split;
        out.push_back(std::move(s));
        done = true;
      }
      if (!done) throw std::logic_error("template space exhausted for family " + std::string(fam.name));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<ObjectClass> mentioned_classes(const std::string& instruction) {
  std::vector<ObjectClass> out;
  for (const auto& w : tokenize_instruction(instruction)) {
    if (auto c = scene::class_from_word(w); c && std::find(out.begin(), out.end(), *c) == out.end()) {
      out.push_back(*c);
    }
  }
  return out;
}

std::string sample_key(const ParallelSample& sample) {
  return key_of(sample.template_family, mentioned_classes(sample.instruction));
}

ParallelSample substitute(const ParallelSample& sample, const std::map<ObjectClass, ObjectClass>& swap) {
  ParallelSample out = sample;
  if (swap.empty()) return out;
  auto words = tokenize_instruction(sample.instruction);
  for (auto& w : words) {
    if (auto c = scene::class_from_word(w)) {
      if (auto it = swap.find(*c); it != swap.end()) w = std::string(scene::class_word(it->second));
    }
  }
  out.instruction = join_words(words);
  for (auto& t : out.program) {
    const auto kind = dsl::token_kind(t);
    if (kind != dsl::TokenKind::kClass && kind != dsl::TokenKind::kPlacement) continue;
    auto it = swap.find(dsl::token_class(t));
    if (it == swap.end()) continue;
    t = kind == dsl::TokenKind::kClass ? dsl::class_token(it->second)
                                       : dsl::placement_token(it->second, dsl::token_is_px(t));
  }
  return out;
}

std::vector<ParallelSample> augment(const std::vector<ParallelSample>& samples, std::size_t n_aug_per_sample,
                                    std::uint64_t seed) {
  // Keys hash into split buckets (3/20 test, 1/20 dev, rest train) and a copy
  // must land in its own split's bucket. Held-out copies additionally skip
  // keys of train base samples, which may sit in any bucket.
  //
  // Train copies are drawn with replacement, so every train sample gets
  // exactly n_aug copies per mentioned object; they only avoid the
  // instructions of held-out base samples. Held-out copies are distinct.
  auto bucket = [&](const std::string& key) {
    const auto b = derive_seed({seed, hash_string(key), 3}) % 20;
    return b < 3 ? Split::kTest : b < 4 ? Split::kDev : Split::kTrain;
  };
  std::unordered_set<std::string> train_base_keys;
  std::unordered_set<std::string> held_out;
  for (const auto& s : samples) {
    if (s.split == Split::kTrain) {
      train_base_keys.insert(sample_key(s));
    } else {
      held_out.insert(s.instruction);
    }
  }
  std::vector<ParallelSample> out = samples;
  // Held-out samples go first so train copies can avoid all held-out text.
  std::vector<const ParallelSample*> order;
  for (const auto& s : samples) order.push_back(&s);
  std::stable_partition(order.begin(), order.end(), [](const auto* s) { return s->split != Split::kTrain; });
  for (const auto* sp : order) {
    const auto& s = *sp;
    const auto classes = mentioned_classes(s.instruction);
    if (classes.empty()) continue;
    const bool train = s.split == Split::kTrain;
    Rng rng(derive_seed({seed, hash_string(s.id), 2}));
    const std::size_t target = n_aug_per_sample * classes.size();
    std::size_t made = 0;
    for (std::size_t attempt = 0; attempt < 250 * target && made < target; ++attempt) {
      // An injective map onto distinct classes keeps the sample free of duplicates.
      std::vector<ObjectClass> pool(scene::kAllClasses.begin(), scene::kAllClasses.end());
      rng.shuffle(pool);
      std::map<ObjectClass, ObjectClass> swap;
      for (std::size_t i = 0; i < classes.size(); ++i) swap[classes[i]] = pool[i];
      ParallelSample a = substitute(s, swap);
      if (a.instruction == s.instruction) continue;
      const std::string key = sample_key(a);
      if (train ? bucket(key) != Split::kTrain && train_base_keys.count(key) == 0
                : bucket(key) != s.split || train_base_keys.count(key) != 0) {
        continue;
      }
      if (train ? held_out.count(a.instruction) != 0 : !held_out.insert(a.instruction).second) continue;
      a.id = fmt::format("{}.a{:03}", s.id, made);
      out.push_back(std::move(a));
      ++made;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::size_t default_augmentation(Task task) { return task == Task::kArrange ? 32 : 24; }

std::vector<ParallelSample> build_corpus(Task task, std::size_t n_base, std::size_t n_aug, std::uint64_t seed) {
  if (n_base == 0) n_base = task == Task::kArrange ? kDefaultArrangeBase : kDefaultManipBase;
  return augment(generate_corpus(task, n_base, seed), n_aug, derive_seed({seed, 0x617567}));
}

std::vector<ParallelSample> filter(const std::vector<ParallelSample>& samples, Task task, Split split) {
  std::vector<ParallelSample> out;
  for (const auto& s : samples) {
    if (s.task == task && s.split == split) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------- English

std::vector<std::string> tokenize_instruction(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && (cur.back() == '.' || cur.back() == '!' || cur.back() == '?')) cur.pop_back();
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      flush();
    } else if (ch == ',') {
      flush();
      out.emplace_back(",");
    } else {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  flush();
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

const std::vector<std::string>& english_vocabulary() {
  static const std::vector<std::string> kVocab = [] {
    std::set<std::string> words;
    auto add = [&](std::string_view phrase) {
      std::string s(phrase);
      for (std::string_view slot : {"{X}", "{Y}", "{E}"}) replace_all(s, slot, " ");
      for (auto& w : tokenize_instruction(s)) words.insert(w);
    };
    for (const auto* table : {&kArrangeVerbs, &kPutItVerbs, &kPickVerbs, &kBetweenThem, &kBetweenPair, &kNextToIt,
                              &kGlue, &kReach, &kPushToward, &kPushOff, &kPushOffEdge, &kEdges, &kTopple,
                              &kPickPush, &kCircle}) {
      for (auto p : *table) add(p);
    }
    for (const auto& r : regions()) {
      for (auto p : r.phrases) add(p);
    }
    for (const auto& d : directions()) {
      for (auto p : d.phrases) add(p);
    }
    for (auto c : scene::kAllClasses) words.insert(std::string(scene::class_word(c)));
    return std::vector<std::string>(words.begin(), words.end());
  }();
  return kVocab;
}

std::vector<std::string> synonym_paraphrases(const std::string& instruction) {
  // Each group lists interchangeable spellings, longest first so that
  // "put it down" is matched before "put it".
  static const std::vector<std::vector<std::string>> kGroups = [] {
    std::vector<std::vector<std::string>> g;
    g.push_back({"put it down", "put it", "keep it", "place it"});
    g.push_back({"put down", "put", "keep", "place"});
    g.push_back({"towards", "toward"});
    for (const auto& r : regions()) {
      if (r.phrases.size() < 2) continue;
      std::vector<std::string> group(r.phrases.begin(), r.phrases.end());
      std::stable_sort(group.begin(), group.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
      g.push_back(std::move(group));
    }
    return g;
  }();
  const std::string padded = " " + join_words(tokenize_instruction(instruction)) + " ";
  std::vector<std::string> out;
  for (const auto& group : kGroups) {
    for (const auto& from : group) {
      const std::string needle = " " + from + " ";
      const auto pos = padded.find(needle);
      if (pos == std::string::npos) continue;
      for (const auto& to : group) {
        if (to == from) continue;
        std::string p = padded;
        p.replace(pos, needle.size(), " " + to + " ");
        p = p.substr(1, p.size() - 2);
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------- files

void write_corpus(std::ostream& out, const std::vector<ParallelSample>& samples) {
  for (const auto& s : samples) {
    out << s.id << '\t' << dsl::task_name(s.task) << '\t' << split_name(s.split) << '\t' << s.instruction << '\t'
        << dsl::detokenize(s.program) << '\n';
  }
}

std::vector<ParallelSample> read_corpus(std::istream& in) {
  std::vector<ParallelSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    if (fields.size() != 5) throw ParseError(line_no, "expected 5 tab-separated fields");
    ParallelSample s;
    s.id = fields[0];
    auto task = dsl::task_from_name(fields[1]);
    if (!task) throw ParseError(line_no, "unknown task '" + fields[1] + "'");
    auto split = split_from_name(fields[2]);
    if (!split) throw ParseError(line_no, "unknown split '" + fields[2] + "'");
    s.task = *task;
    s.split = *split;
    s.instruction = fields[3];
    s.template_family = family_from_id(s.id);
    try {
      s.program = program_tokens(fields[4], s.task);
    } catch (const Error& e) {
      throw ParseError(line_no, std::string("bad program: ") + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_corpus_file(const std::filesystem::path& path, const std::vector<ParallelSample>& samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus(out, samples);
}

std::vector<ParallelSample> read_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_corpus(in);
}

// ---------------------------------------------------------------- direct supervision

DirectDataset derive_direct_dataset(const std::vector<ParallelSample>& samples, std::size_t n_scenes,
                                    std::uint64_t seed, std::ostream* log) {
  DirectDataset ds;
  for (const auto& s : samples) {
    auto batch = interp::execute_ground_truth_batch(s, n_scenes, seed);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      auto& [sc, outcome] = batch[k];
      if (auto* f = std::get_if<interp::RuntimeFault>(&outcome)) {
        ++ds.skipped;
        if (log) *log << "skip " << s.id << " scene " << k << ": " << interp::fault_name(f->kind) << '\n';
        continue;
      }
      DirectSample d;
      d.sample_id = s.id;
      d.scene_index = k;
      d.task = s.task;
      d.instruction = s.instruction;
      d.template_family = s.template_family;
      d.scene = sc;
      if (auto* p = std::get_if<interp::Placement>(&outcome)) {
        d.target = *p;
      } else {
        d.target = std::get<interp::Trajectory>(outcome);
      }
      ds.samples.push_back(std::move(d));
    }
  }
  return ds;
}

void write_direct_dataset(std::ostream& out, const std::vector<DirectSample>& samples) {
  using scene::format_double;
  for (const auto& d : samples) {
    out << "# sample " << d.sample_id << ' ' << d.scene_index << ' ' << dsl::task_name(d.task) << ' '
        << d.template_family << '\n';
    out << "# instruction " << d.instruction << '\n';
    scene::write_scene(out, d.scene);
    if (const auto* p = std::get_if<interp::Placement>(&d.target)) {
      for (const auto& [cls, pt] : p->positions) {
        out << "# target PLACE " << scene::class_name(cls) << ' ' << format_double(pt.x) << ' '
            << format_double(pt.y) << '\n';
      }
    } else {
      for (const auto& ev : std::get<interp::Trajectory>(d.target).events) {
        if (const auto* m = std::get_if<interp::Move>(&ev)) {
          out << "# target MOVE " << format_double(m->x) << ' ' << format_double(m->y) << ' ' << format_double(m->z)
              << ' ' << format_double(m->r) << '\n';
        } else {
          out << "# target GRIP " << (std::get<interp::Grip>(ev).engaged ? "ON" : "OFF") << '\n';
        }
      }
    }
    out << '\n';
  }
}

std::vector<DirectSample> read_direct_dataset(std::istream& in) {
  std::vector<DirectSample> out;
  std::optional<DirectSample> cur;
  std::string scene_text;
  std::size_t line_no = 0;
  std::size_t block_line = 0;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad number '" + s + "'");
    }
  };
  auto finish = [&] {
    if (!cur) return;
    std::istringstream ss(scene_text);
    try {
      cur->scene = scene::read_scene(ss);
    } catch (const ParseError& e) {
      throw ParseError(block_line - 1 + e.line(), e.what());
    }
    out.push_back(std::move(*cur));
    cur.reset();
    scene_text.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) != 0) {
      if (cur) scene_text += line + '\n';
      else if (!line.empty()) throw ParseError(line_no, "scene line outside a sample block");
      continue;
    }
    std::istringstream ss(line.substr(2));
    std::string tag;
    ss >> tag;
    if (tag == "sample") {
      finish();
      cur.emplace();
      block_line = line_no;
      std::string task, index;
      ss >> cur->sample_id >> index >> task >> cur->template_family;
      auto t = dsl::task_from_name(task);
      if (!t) throw ParseError(line_no, "unknown task '" + task + "'");
      cur->task = *t;
      cur->scene_index = static_cast<std::size_t>(number(index));
      if (cur->task == Task::kArrange) cur->target = interp::Placement{};
      else cur->target = interp::Trajectory{};
      scene_text += '\n';
    } else if (!cur) {
      throw ParseError(line_no, "metadata outside a sample block");
    } else if (tag == "instruction") {
      cur->instruction = line.size() > 14 ? line.substr(14) : "";
      scene_text += '\n';
    } else if (tag == "target") {
      std::vector<std::string> f;
      for (std::string w; ss >> w;) f.push_back(w);
      if (f.size() == 4 && f[0] == "PLACE" && std::holds_alternative<interp::Placement>(cur->target)) {
        auto cls = scene::class_from_name(f[1]);
        if (!cls) throw ParseError(line_no, "unknown class '" + f[1] + "'");
        std::get<interp::Placement>(cur->target).positions[*cls] = {number(f[2]), number(f[3])};
      } else if (f.size() == 5 && f[0] == "MOVE" && std::holds_alternative<interp::Trajectory>(cur->target)) {
        std::get<interp::Trajectory>(cur->target)
            .events.push_back(interp::Move{number(f[1]), number(f[2]), number(f[3]), number(f[4])});
      } else if (f.size() == 2 && f[0] == "GRIP" && (f[1] == "ON" || f[1] == "OFF") &&
                 std::holds_alternative<interp::Trajectory>(cur->target)) {
        std::get<interp::Trajectory>(cur->target).events.push_back(interp::Grip{f[1] == "ON"});
      } else {
        throw ParseError(line_no, "malformed target line");
      }
      scene_text += '\n';
    } else {
      scene_text += '\n';
    }
  }
  finish();
  return out;
}

}  // namespace roboscript::corpus
