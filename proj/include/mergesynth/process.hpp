#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mergesynth {

struct ProcessResult {
    int exit_code = -1;
    std::string out;
};

/// Runs argv[0] (PATH lookup) with `input` on standard input and captures
/// standard output. Standard error is discarded. Throws Error if the process
/// cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input = {});

}  // namespace mergesynth
