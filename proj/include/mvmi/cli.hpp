#pragma once

#include <string>
#include <vector>

namespace mvmi {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one subcommand (synth, knn-graph, train, embed, eval, report).
// args excludes the program name. Returns 0 on success, 1 on usage or
// contract errors, 2 on I/O errors; diagnostics go to stderr.
int dispatch(const std::vector<std::string>& args);

}  // namespace mvmi
