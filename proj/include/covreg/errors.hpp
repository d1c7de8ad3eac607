#pragma once

#include <stdexcept>
#include <string>

namespace covreg {

// Bad user input: malformed files, invalid flag values, schema mismatches.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure inside the fitting pipeline with otherwise valid input.
class PipelineError : public std::runtime_error {
 public:
  explicit PipelineError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace covreg
