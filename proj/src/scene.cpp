#include "roboscript/scene.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "roboscript/error.hpp"
#include "roboscript/rng.hpp"

namespace roboscript::scene {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames = {
    "apple", "orange", "banana", "lemon", "bottle", "cup", "lock", "magnet", "block", "tray_slot",
};
constexpr std::array<std::string_view, kNumClasses> kWords = {
    "apple", "orange", "banana", "lemon", "bottle", "cup", "lock", "magnet", "block", "tray-slot",
};

double parse_number(std::string_view text, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "invalid number '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::string_view class_name(ObjectClass c) { return kNames[class_index(c)]; }
std::string_view class_word(ObjectClass c) { return kWords[class_index(c)]; }

std::optional<ObjectClass> class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kNames[i] == name) return kAllClasses[i];
  }
  return std::nullopt;
}

std::optional<ObjectClass> class_from_word(std::string_view word) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kWords[i] == word) return kAllClasses[i];
  }
  return std::nullopt;
}

std::string object_violation(const SceneObject& o) {
  for (double v : {o.x, o.y, o.w, o.h, o.d}) {
    if (!std::isfinite(v)) return "non-finite field";
  }
  if (o.x < -1.0 || o.x > 1.0 || o.y < -1.0 || o.y > 1.0) return "position outside [-1, 1]";
  if (o.w <= 0.0 || o.h <= 0.0 || o.d <= 0.0) return "extents must be positive";
  if (std::abs(o.x) + o.w / 2 > 1.0 || std::abs(o.y) + o.h / 2 > 1.0) {
    return "footprint leaves the table";
  }
  return {};
}

Scene::Scene(std::vector<SceneObject> objects) : objects_(std::move(objects)) {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& a = objects_[i];
    if (auto why = object_violation(a); !why.empty()) {
      throw PreconditionError(std::string(class_name(a.cls)) + ": " + why);
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto& b = objects_[j];
      if (a.cls == b.cls) throw PreconditionError("duplicate class " + std::string(class_name(a.cls)));
      if (std::hypot(a.x - b.x, a.y - b.y) < kMinSeparation) {
        throw PreconditionError("objects closer than minimum separation");
      }
    }
  }
}

const SceneObject* Scene::lookup(ObjectClass c) const {
  for (const auto& o : objects_) {
    if (o.cls == c) return &o;
  }
  return nullptr;
}

Scene generate_scene(std::span<const ObjectClass> classes, std::uint64_t seed) {
  if (classes.empty() || classes.size() > 8) {
    throw PreconditionError("generate_scene needs between 1 and 8 classes");
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (classes[i] == classes[j]) throw PreconditionError("generate_scene classes must be distinct");
    }
  }
  Rng rng(seed);
  std::vector<SceneObject> objects;
  objects.reserve(classes.size());
  int attempts = 0;
  for (ObjectClass c : classes) {
    SceneObject o;
    o.cls = c;
    o.w = rng.uniform(kMinExtent, kMaxExtent);
    o.h = rng.uniform(kMinExtent, kMaxExtent);
    o.d = rng.uniform(kMinDepth, kMaxDepth);
    const double max_x = 1.0 - o.w / 2;
    const double max_y = 1.0 - o.h / 2;
    for (;;) {
      if (++attempts > kMaxPlacementAttempts) {
        throw PlacementFailure("rejection sampling exceeded " + std::to_string(kMaxPlacementAttempts) +
                               " attempts");
      }
      o.x = rng.uniform(-max_x, max_x);
      o.y = rng.uniform(-max_y, max_y);
      bool ok = true;
      for (const auto& p : objects) {
        if (std::hypot(o.x - p.x, o.y - p.y) < kMinSeparation) {
          ok = false;
          break;
        }
      }
      if (ok) break;
    }
    objects.push_back(o);
  }
  return Scene(std::move(objects));
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_scene(std::ostream& out, const Scene& scene) {
  for (const auto& o : scene.objects()) {
    out << class_name(o.cls) << ' ' << format_double(o.x) << ' ' << format_double(o.y) << ' '
        << format_double(o.w) << ' ' << format_double(o.h) << ' ' << format_double(o.d) << '\n';
  }
}

Scene read_scene(std::istream& in) {
  std::vector<SceneObject> objects;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::istringstream fields(raw);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(f);
    if (parts.empty() || parts.front().front() == '#') continue;
    if (parts.size() != 6) throw ParseError(line_no, "expected '<class> <x> <y> <w> <h> <d>'");
    auto cls = class_from_name(parts[0]);
    if (!cls) throw ParseError(line_no, "unknown class '" + parts[0] + "'");
    SceneObject o;
    o.cls = *cls;
    o.x = parse_number(parts[1], line_no);
    o.y = parse_number(parts[2], line_no);
    o.w = parse_number(parts[3], line_no);
    o.h = parse_number(parts[4], line_no);
    o.d = parse_number(parts[5], line_no);
    if (auto why = object_violation(o); !why.empty()) throw ParseError(line_no, why);
    for (const auto& p : objects) {
      if (p.cls == o.cls) throw ParseError(line_no, "duplicate class '" + parts[0] + "'");
      if (std::hypot(o.x - p.x, o.y - p.y) < kMinSeparation) {
        throw ParseError(line_no, "object closer than minimum separation to " +
                                      std::string(class_name(p.cls)));
      }
    }
    objects.push_back(o);
  }
  return Scene(std::move(objects));
}

void write_scene_file(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_scene(out, scene);
}

Scene read_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_scene(in);
}

}  // namespace roboscript::scene
