#include "roboscript/sample.hpp"

namespace roboscript {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

std::optional<Split> split_from_name(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

dsl::Program parse_program(const ParallelSample& sample) {
  std::vector<dsl::Token> tokens = sample.program;
  tokens.push_back(dsl::kEos);
  return dsl::parse(tokens, sample.task);
}

}  // namespace roboscript
