#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roboscript/dsl.hpp"

namespace roboscript {

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

// One (instruction, ground-truth program) pair of the parallel corpus.
struct ParallelSample {
  std::string id;
  dsl::Task task = dsl::Task::kArrange;
  std::string instruction;
  std::vector<dsl::Token> program;  // without EOS
  std::string template_family;
  Split split = Split::kTrain;

  friend bool operator==(const ParallelSample&, const ParallelSample&) = default;
};

// Parses the sample's program (tokens are stored without EOS).
dsl::Program parse_program(const ParallelSample& sample);

}  // namespace roboscript
