#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roboscript::scene {

// Fixed registry of detectable object classes. The enumerator order is the
// canonical order used by every encoding (scene files, baselines, reports).
enum class ObjectClass : std::uint8_t {
  kApple,
  kOrange,
  kBanana,
  kLemon,
  kBottle,
  kCup,
  kLock,
  kMagnet,
  kBlock,
  kTraySlot,
};

inline constexpr std::size_t kNumClasses = 10;

inline constexpr std::array<ObjectClass, kNumClasses> kAllClasses = {
    ObjectClass::kApple,  ObjectClass::kOrange, ObjectClass::kBanana, ObjectClass::kLemon,
    ObjectClass::kBottle, ObjectClass::kCup,    ObjectClass::kLock,   ObjectClass::kMagnet,
    ObjectClass::kBlock,  ObjectClass::kTraySlot,
};

constexpr std::size_t class_index(ObjectClass c) { return static_cast<std::size_t>(c); }

// DSL / file identifier, e.g. "apple", "tray_slot".
std::string_view class_name(ObjectClass c);
// English surface word used in instructions, e.g. "apple", "tray-slot".
std::string_view class_word(ObjectClass c);
std::optional<ObjectClass> class_from_name(std::string_view name);
std::optional<ObjectClass> class_from_word(std::string_view word);

struct SceneObject {
  ObjectClass cls = ObjectClass::kApple;
  double x = 0.0;
  double y = 0.0;
  double w = 0.1;
  double h = 0.1;
  double d = 0.1;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

// Table is the square [-1, 1]^2.
inline constexpr double kTableWidth = 2.0;
inline constexpr double kMinSeparation = 0.25;
inline constexpr double kMinExtent = 0.08;
inline constexpr double kMaxExtent = 0.30;
inline constexpr double kMinDepth = 0.05;
inline constexpr double kMaxDepth = 0.25;
inline constexpr int kMaxPlacementAttempts = 10000;

class Scene {
 public:
  Scene() = default;
  // Validates every invariant; throws PreconditionError on violation.
  explicit Scene(std::vector<SceneObject> objects);

  const std::vector<SceneObject>& objects() const { return objects_; }
  bool empty() const { return objects_.empty(); }
  std::size_t size() const { return objects_.size(); }

  // Null (nullptr) when the class is absent.
  const SceneObject* lookup(ObjectClass c) const;

  friend bool operator==(const Scene&, const Scene&) = default;

 private:
  std::vector<SceneObject> objects_;
};

// Reason string when `o` violates a per-object invariant, empty otherwise.
std::string object_violation(const SceneObject& o);

Scene generate_scene(std::span<const ObjectClass> classes, std::uint64_t seed);

void write_scene(std::ostream& out, const Scene& scene);
Scene read_scene(std::istream& in);
void write_scene_file(const std::filesystem::path& path, const Scene& scene);
Scene read_scene_file(const std::filesystem::path& path);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace roboscript::scene
