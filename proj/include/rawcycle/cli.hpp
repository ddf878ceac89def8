#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace rawcycle {

// Command-line front end. Verbs:
//   train         run one training stage from a JSON config
//   synth         synthesize clean/noisy pair folders from an sRGB corpus
//   denoise       run a denoiser checkpoint over one image
//   eval          score a pair folder, optionally through a denoiser
//   color-match   re-render one image under another image's palette
//   count-params  print learnable parameter counts for the configured models
//
// Exit codes:
//   0  success (including --help)
//   1  unexpected failure
//   2  bad usage: flag parsing, ConfigError, ArgumentError
//   3  DimensionError
//   4  DataError (unreadable or inconsistent files)
//
// The streams default to the process streams; tests pass their own to run
// the tool in process.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

// Same entry point for argument lists built in code. `args` excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace rawcycle
