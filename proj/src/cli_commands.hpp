// src/cli_commands.hpp

// Copyright 2026  The voiceprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voiceprobe/cli.hpp"

namespace voiceprobe::cli {

/// What a subcommand hands back to the dispatcher.
struct Output {
  std::string path;
  Table table;
  bool json = false;
};

/// Extra files written next to the main output (models, correlation tables).
struct Extra {
  std::string path;
  std::string contents;  // written verbatim
};

struct Result {
  std::vector<Output> outputs;
  std::vector<Extra> extras;
};

struct Command {
  CLI::App* app = nullptr;
  const std::uint64_t* seed = nullptr;  // null when the command has no --seed
  std::function<Result(const Provenance&)> run;
};

/// Registers every subcommand on `root`.
std::vector<Command> register_commands(CLI::App& root);

}  // namespace voiceprobe::cli
