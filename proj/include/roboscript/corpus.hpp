#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "roboscript/interp.hpp"
#include "roboscript/sample.hpp"
#include "roboscript/scene.hpp"

namespace roboscript::corpus {

// Base counts giving 102/11/11 and 122/12/12 splits.
inline constexpr std::size_t kDefaultArrangeBase = 124;
inline constexpr std::size_t kDefaultManipBase = 146;
inline constexpr std::size_t kDirectScenes = 20;
// Average number of base samples sharing one sentence structure.
inline constexpr std::size_t kBasesPerStructure = 2;

struct SplitSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

SplitSizes split_sizes(dsl::Task task, std::size_t n_base);

// Template families per task, in canonical order.
std::vector<std::string> template_families(dsl::Task task);
// Number of clauses an instruction of `family` contains (arrange composites).
int clause_count(const std::string& family);

// Generates `n_base` (>= 20) distinct samples, sorted by id. No
// (family, class-tuple) key is used by two splits.
std::vector<ParallelSample> generate_corpus(dsl::Task task, std::size_t n_base, std::uint64_t seed);

// Returns the input samples plus class-swapped copies, sorted by id. Copies
// inherit their source's split. Every (family, class-tuple) key hashes to a
// split bucket; a copy's key must sit in its own split's bucket, and held-out
// copies never reuse the key of a train base sample, so no augmented test
// sample shares a key with train. Train samples get exactly
// `n_aug_per_sample` copies per mentioned object, drawn with replacement;
// held-out samples get up to that many distinct ones.
std::vector<ParallelSample> augment(const std::vector<ParallelSample>& samples, std::size_t n_aug_per_sample,
                                    std::uint64_t seed);

// Copies per mentioned object used by the default pipeline.
std::size_t default_augmentation(dsl::Task task);

// generate_corpus at the default size (when n_base is 0) followed by
// augment with a seed derived from `seed`.
std::vector<ParallelSample> build_corpus(dsl::Task task, std::size_t n_base, std::size_t n_aug, std::uint64_t seed);

// Applies a class substitution consistently to the instruction and program.
ParallelSample substitute(const ParallelSample& sample, const std::map<scene::ObjectClass, scene::ObjectClass>& swap);

// Classes in order of first mention in the instruction.
std::vector<scene::ObjectClass> mentioned_classes(const std::string& instruction);
// "family|class,class" leakage key.
std::string sample_key(const ParallelSample& sample);

std::vector<ParallelSample> filter(const std::vector<ParallelSample>& samples, dsl::Task task, Split split);

// ---------------------------------------------------------------- English

// Lowercases, splits on whitespace, splits ',' into its own token and drops
// terminal . ! ? characters.
std::vector<std::string> tokenize_instruction(std::string_view text);
std::string join_words(const std::vector<std::string>& words);
// Closed, sorted word list covering every instruction the generator emits.
const std::vector<std::string>& english_vocabulary();

// Synonym paraphrases of `instruction` under the documented synonym map
// (verbs put/keep/place/put down, region spellings, towards/toward).
std::vector<std::string> synonym_paraphrases(const std::string& instruction);

// ---------------------------------------------------------------- files

// Tab-separated `id task split instruction program-text` per line.
void write_corpus(std::ostream& out, const std::vector<ParallelSample>& samples);
std::vector<ParallelSample> read_corpus(std::istream& in);
void write_corpus_file(const std::filesystem::path& path, const std::vector<ParallelSample>& samples);
std::vector<ParallelSample> read_corpus_file(const std::filesystem::path& path);

// ---------------------------------------------------------------- direct supervision

using DirectTarget = std::variant<interp::Placement, interp::Trajectory>;

struct DirectSample {
  std::string sample_id;
  std::size_t scene_index = 0;
  dsl::Task task = dsl::Task::kArrange;
  std::string instruction;
  std::string template_family;
  scene::Scene scene;
  DirectTarget target;

  friend bool operator==(const DirectSample&, const DirectSample&) = default;
};

struct DirectDataset {
  std::vector<DirectSample> samples;
  std::size_t skipped = 0;  // faulted rollouts
};

// One DirectSample per (sample, scene); faulted rollouts are skipped and
// reported to `log` when given.
DirectDataset derive_direct_dataset(const std::vector<ParallelSample>& samples, std::size_t n_scenes,
                                    std::uint64_t seed, std::ostream* log = nullptr);

// Scene-file blocks with `#` metadata lines (readable as scenes).
void write_direct_dataset(std::ostream& out, const std::vector<DirectSample>& samples);
std::vector<DirectSample> read_direct_dataset(std::istream& in);

}  // namespace roboscript::corpus
