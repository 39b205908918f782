// Copyright 2026 The qflow Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFLOW_TOOLS_CLI_HPP_
#define QFLOW_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace qflow::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 2,     // parse or validation failure
  kExitTransform = 3,   // pass, annotation, or mapping failure
  kExitDeadlock = 4,
  kExitMismatch = 5,    // verify found a counterexample
  kExitUsage = 64,
};

// Runs one qflow command. `args` excludes the program name. Reports go to
// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qflow::cli

#endif  // QFLOW_TOOLS_CLI_HPP_
