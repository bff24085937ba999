/*
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <iosfwd>

namespace mfgame {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitPass = 0,
    kExitInvalid = 1,    ///< input or validation error
    kExitNumerical = 2,  ///< numerical abort
    kExitVerifyFail = 3  ///< verify ran to completion but the verdict is fail
};

/// Entry point of the `mfgame` tool: subcommands simulate, solve-lq, verify.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mfgame
