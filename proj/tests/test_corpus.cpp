#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "roboscript/corpus.hpp"
#include "roboscript/interp.hpp"
#include "roboscript/rng.hpp"

using namespace roboscript;
using corpus::augment;
using corpus::generate_corpus;
using dsl::Task;
using scene::ObjectClass;

namespace {

std::set<ObjectClass> as_set(const std::vector<ObjectClass>& v) { return {v.begin(), v.end()}; }

const std::vector<ParallelSample>& arrange_base() {
  static const auto c = generate_corpus(Task::kArrange, corpus::kDefaultArrangeBase, 5);
  return c;
}

const std::vector<ParallelSample>& manip_base() {
  static const auto c = generate_corpus(Task::kManipulation, corpus::kDefaultManipBase, 5);
  return c;
}

ParallelSample make_sample(std::string id, Task task, std::string instruction, std::string_view program) {
  ParallelSample s;
  s.id = std::move(id);
  s.task = task;
  s.instruction = std::move(instruction);
  s.program = dsl::parse_text(program, task).tokens;
  s.template_family = "custom";
  return s;
}

std::size_t count_split(const std::vector<ParallelSample>& c, Split s) {
  return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [&](const auto& x) { return x.split == s; }));
}

}  // namespace

TEST_CASE("generation is deterministic for a fixed seed") {
  CHECK(generate_corpus(Task::kArrange, 124, 5) == generate_corpus(Task::kArrange, 124, 5));
  CHECK(generate_corpus(Task::kManipulation, 146, 9) == generate_corpus(Task::kManipulation, 146, 9));
  CHECK(generate_corpus(Task::kArrange, 124, 5) != generate_corpus(Task::kArrange, 124, 6));
}

TEST_CASE("split sizes follow the 102/11/11 and 122/12/12 proportions") {
  const auto& a = arrange_base();
  CHECK(a.size() == 124);
  CHECK(count_split(a, Split::kTrain) == 102);
  CHECK(count_split(a, Split::kDev) == 11);
  CHECK(count_split(a, Split::kTest) == 11);
  const auto& m = manip_base();
  CHECK(m.size() == 146);
  CHECK(count_split(m, Split::kTrain) == 122);
  CHECK(count_split(m, Split::kDev) == 12);
  CHECK(count_split(m, Split::kTest) == 12);

  const auto other = generate_corpus(Task::kArrange, 100, 1);
  CHECK(other.size() == 100);
  CHECK(count_split(other, Split::kTrain) == 82);
  CHECK(count_split(other, Split::kDev) == 9);
  CHECK(count_split(other, Split::kTest) == 9);
  CHECK_THROWS_AS(generate_corpus(Task::kArrange, 19, 1), PreconditionError);
}

TEST_CASE("ids are unique, sorted, and encode the family") {
  for (const auto* c : {&arrange_base(), &manip_base()}) {
    std::set<std::string> ids;
    for (const auto& s : *c) {
      CHECK(ids.insert(s.id).second);
      CHECK(s.id.find("." + s.template_family + ".") != std::string::npos);
    }
    CHECK(std::is_sorted(c->begin(), c->end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
  }
}

TEST_CASE("every family reaches the test split") {
  for (Task t : {Task::kArrange, Task::kManipulation}) {
    const auto& c = t == Task::kArrange ? arrange_base() : manip_base();
    std::set<std::string> fams;
    for (const auto& s : c) {
      if (s.split == Split::kTest) fams.insert(s.template_family);
    }
    const auto all = corpus::template_families(t);
    CHECK(fams == std::set<std::string>(all.begin(), all.end()));
  }
}

TEST_CASE("generated programs parse, execute, and mention the instruction's classes") {
  for (const auto* c : {&arrange_base(), &manip_base()}) {
    for (const auto& s : *c) {
      CAPTURE(s.id);
      CAPTURE(s.instruction);
      const auto program = parse_program(s);
      const auto mentioned = corpus::mentioned_classes(s.instruction);
      CHECK(as_set(mentioned) == as_set(program.referenced_classes));
      CHECK(mentioned.size() == as_set(mentioned).size());
      const auto scenes = interp::rollout_scenes(s, 20, 11);
      std::size_t ok = 0;
      for (const auto& sc : scenes) ok += interp::is_fault(interp::execute(program, sc)) ? 0 : 1;
      CHECK(!interp::is_fault(interp::execute(program, scenes.front())));
      CHECK(ok == scenes.size());
    }
  }
}

TEST_CASE("instructions stay inside the closed word list") {
  const auto& vocab = corpus::english_vocabulary();
  CHECK(std::is_sorted(vocab.begin(), vocab.end()));
  for (std::uint64_t seed : {1, 2, 3}) {
    for (Task t : {Task::kArrange, Task::kManipulation}) {
      for (const auto& s : augment(generate_corpus(t, 200, seed), 2, seed)) {
        for (const auto& w : corpus::tokenize_instruction(s.instruction)) {
          CAPTURE(s.instruction);
          CHECK(std::binary_search(vocab.begin(), vocab.end(), w));
        }
      }
    }
  }
}

TEST_CASE("instruction tokenization") {
  using V = std::vector<std::string>;
  CHECK(corpus::tokenize_instruction("Push the Orange, towards the apple.") ==
        V{"push", "the", "orange", ",", "towards", "the", "apple"});
  CHECK(corpus::tokenize_instruction("  put the tray-slot at the right-top!  ") ==
        V{"put", "the", "tray-slot", "at", "the", "right-top"});
  CHECK(corpus::tokenize_instruction("").empty());
  CHECK(corpus::join_words({"a", ",", "b"}) == "a , b");
}

TEST_CASE("composites carry their clause count") {
  CHECK(corpus::clause_count("composite4") == 4);
  CHECK(corpus::clause_count("absolute") == 1);
  CHECK(corpus::clause_count("nonexistent") == 0);
  for (const auto& s : arrange_base()) {
    if (s.template_family == "composite4") {
      CHECK(corpus::mentioned_classes(s.instruction).size() == 4);
    }
  }
}

TEST_CASE("push towards approaches from behind along the ray") {
  const auto corpus = manip_base();
  auto it = std::find_if(corpus.begin(), corpus.end(),
                         [](const auto& x) { return x.template_family == "push_toward"; });
  REQUIRE(it != corpus.end());
  const auto classes = corpus::mentioned_classes(it->instruction);
  REQUIRE(classes.size() == 2);
  const auto program = parse_program(*it);
  for (const auto& sc : interp::rollout_scenes(*it, 20, 3)) {
    const auto& a = *sc.lookup(classes[0]);
    const auto& b = *sc.lookup(classes[1]);
    const auto out = interp::execute(program, sc);
    const auto& traj = std::get<interp::Trajectory>(out);
    REQUIRE(traj.events.size() == 4);
    const double dist = std::hypot(b.x - a.x, b.y - a.y);
    const double ux = (b.x - a.x) / dist, uy = (b.y - a.y) / dist;
    const auto& approach = std::get<interp::Move>(traj.events[1]);
    CHECK(approach.x == doctest::Approx(a.x - ux * (a.w / 2 + 0.1)));
    CHECK(approach.y == doctest::Approx(a.y - uy * (a.w / 2 + 0.1)));
    const auto& push = std::get<interp::Move>(traj.events[2]);
    const double travel = dist - b.w / 2 - a.w / 2;
    CHECK(push.x == doctest::Approx(approach.x + ux * travel));
    CHECK(push.y == doctest::Approx(approach.y + uy * travel));
  }
}

TEST_CASE("substitution swaps text and program together") {
  const auto s = make_sample("manip.topple.0000", Task::kManipulation, "topple the lock",
                             "move ( lock .x , lock .y , lock .d + 0.1 , 0 )");
  const auto t = corpus::substitute(s, {{ObjectClass::kLock, ObjectClass::kCup}});
  CHECK(t.instruction == "topple the cup");
  CHECK(dsl::detokenize(t.program) == "move ( cup .x , cup .y , cup .d + 0.1 , 0 )");
  CHECK(corpus::substitute(s, {}) == s);
}

TEST_CASE("augmentation keeps class mentions paired over many swaps") {
  Rng rng(77);
  std::size_t checked = 0;
  const auto base = arrange_base();
  const auto mbase = manip_base();
  while (checked < 1000) {
    const auto& pool = rng.coin(0.5) ? base : mbase;
    const auto& s = pool[rng.below(pool.size())];
    const auto classes = corpus::mentioned_classes(s.instruction);
    std::vector<ObjectClass> targets(scene::kAllClasses.begin(), scene::kAllClasses.end());
    rng.shuffle(targets);
    std::map<ObjectClass, ObjectClass> swap;
    for (std::size_t i = 0; i < classes.size(); ++i) swap[classes[i]] = targets[i];
    const auto t = corpus::substitute(s, swap);
    const auto program = parse_program(t);
    const auto mentioned = corpus::mentioned_classes(t.instruction);
    REQUIRE(as_set(mentioned) == as_set(program.referenced_classes));
    REQUIRE(mentioned.size() == classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i) REQUIRE(mentioned[i] == swap[classes[i]]);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("augmented corpus has no train/test leakage") {
  for (Task t : {Task::kArrange, Task::kManipulation}) {
    const auto base = t == Task::kArrange ? arrange_base() : manip_base();
    const auto aug = augment(base, 8, 3);
    CHECK(aug.size() > base.size() * 5);
    CHECK(aug == augment(base, 8, 3));
    std::map<std::string, Split> base_split;
    for (const auto& s : base) base_split[s.id] = s.split;
    std::map<std::string, std::size_t> copies;
    std::set<std::string> train_keys, test_keys, ids, train_texts, held_out_texts;
    for (const auto& s : aug) {
      CHECK(ids.insert(s.id).second);
      const auto dot = s.id.rfind(".a");
      const bool copy = dot != std::string::npos && dot + 5 == s.id.size();
      const std::string root = copy ? s.id.substr(0, dot) : s.id;
      REQUIRE(base_split.count(root) == 1);
      CHECK(base_split.at(root) == s.split);
      if (copy) ++copies[root];
      const auto classes = corpus::mentioned_classes(s.instruction);
      CHECK(classes.size() == as_set(classes).size());
      if (s.split == Split::kTrain) {
        train_keys.insert(corpus::sample_key(s));
        train_texts.insert(s.instruction);
      } else {
        // Held-out instructions are distinct.
        CHECK(held_out_texts.insert(s.instruction).second);
      }
      if (s.split == Split::kTest && copy) test_keys.insert(corpus::sample_key(s));
    }
    CHECK(!test_keys.empty());
    for (const auto& k : test_keys) CHECK(train_keys.count(k) == 0);
    for (const auto& text : held_out_texts) CHECK(train_texts.count(text) == 0);
    // Train copies are drawn with replacement, so every train sample gets all of them.
    for (const auto& s : base) {
      if (s.split == Split::kTrain) CHECK(copies[s.id] == 8 * corpus::mentioned_classes(s.instruction).size());
    }
  }
  CHECK(augment(arrange_base(), 0, 1) == arrange_base());
}

TEST_CASE("corpus file round trip") {
  const auto aug = augment(manip_base(), 1, 4);
  std::stringstream ss;
  corpus::write_corpus(ss, aug);
  const auto back = corpus::read_corpus(ss);
  CHECK(back == aug);

  std::istringstream bad("arrange.absolute.0000\tarrange\ttrain\tput the apple\n");
  CHECK_THROWS_AS(corpus::read_corpus(bad), ParseError);
  std::istringstream bad_program("x.y.0\tarrange\ttrain\tput the apple\tmove ( 0 , 0 , 0 , 0 )\n");
  CHECK_THROWS_AS(corpus::read_corpus(bad_program), ParseError);
}

TEST_CASE("direct dataset of a fixed placement is constant") {
  const auto s = make_sample("arrange.custom.0000", Task::kArrange, "put the apple at the middle",
                             "require px_apple == 0.5 require py_apple == 0.5");
  const auto ds = corpus::derive_direct_dataset({s}, 20, 1);
  REQUIRE(ds.samples.size() == 20);
  for (const auto& d : ds.samples) {
    const auto& p = std::get<interp::Placement>(d.target);
    CHECK(p.positions.at(ObjectClass::kApple).x == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p.positions.at(ObjectClass::kApple).y == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("direct dataset of a relative placement varies with sizes") {
  const auto s = make_sample("arrange.custom.0001", Task::kArrange, "put the apple left of the cup",
                             "require px_cup == 0 require py_cup == 0 "
                             "require px_apple == px_cup - cup .w / 2 - apple .w / 2 - 0.05 "
                             "require py_apple == py_cup solve");
  const auto ds = corpus::derive_direct_dataset({s}, 20, 1);
  std::set<double> xs;
  for (const auto& d : ds.samples) xs.insert(std::get<interp::Placement>(d.target).positions.at(ObjectClass::kApple).x);
  CHECK(xs.size() >= 2);
}

TEST_CASE("direct dataset covers every sample and scene") {
  const auto ds = corpus::derive_direct_dataset(arrange_base(), corpus::kDirectScenes, 5);
  CHECK(ds.skipped == 0);
  CHECK(ds.samples.size() == 2480);
  for (std::size_t i = 0; i < ds.samples.size(); i += 97) {
    const auto& d = ds.samples[i];
    auto it = std::find_if(arrange_base().begin(), arrange_base().end(),
                           [&](const auto& s) { return s.id == d.sample_id; });
    REQUIRE(it != arrange_base().end());
    const auto out = interp::execute(parse_program(*it), d.scene);
    CHECK(std::get<interp::Placement>(out) == std::get<interp::Placement>(d.target));
  }
}

TEST_CASE("faulted rollouts are skipped and logged") {
  const auto s = make_sample("manip.custom.0000", Task::kManipulation, "reach for the apple",
                             "move ( apple .x / 0 , 0 , 0 , 0 )");
  std::ostringstream log;
  const auto ds = corpus::derive_direct_dataset({s}, 5, 1, &log);
  CHECK(ds.samples.empty());
  CHECK(ds.skipped == 5);
  CHECK(log.str().find("DivByZero") != std::string::npos);
}

TEST_CASE("direct dataset file round trip") {
  auto base = manip_base();
  base.resize(6);
  auto ds = corpus::derive_direct_dataset(base, 3, 2).samples;
  const auto arr = corpus::derive_direct_dataset({arrange_base().front()}, 2, 2).samples;
  ds.insert(ds.end(), arr.begin(), arr.end());
  std::stringstream ss;
  corpus::write_direct_dataset(ss, ds);
  const std::string text = ss.str();
  CHECK(corpus::read_direct_dataset(ss) == ds);

  // Metadata lines are comments to the scene reader.
  std::istringstream as_scene(text.substr(0, text.find("\n\n")));
  CHECK(scene::read_scene(as_scene) == ds.front().scene);

  std::istringstream bad("# sample a.b.0 0 manip reach\n# target PLACE apple 0 0\n");
  CHECK_THROWS_AS(corpus::read_direct_dataset(bad), ParseError);
}

TEST_CASE("synonym paraphrases follow the documented map") {
  const auto p = corpus::synonym_paraphrases("put the apple in the top right corner");
  auto has = [&](const std::string& s) { return std::find(p.begin(), p.end(), s) != p.end(); };
  CHECK(has("keep the apple in the top right corner"));
  CHECK(has("put down the apple in the top right corner"));
  CHECK(has("put the apple at the right-top corner"));
  CHECK(p.size() == 4);
  const auto q = corpus::synonym_paraphrases("pick up the cup and put it down at the center");
  CHECK(std::find(q.begin(), q.end(), "pick up the cup and keep it at the center") != q.end());
  CHECK(corpus::synonym_paraphrases("topple the lock").empty());
}
