// Command-line entry point: simulate | predict | analyze | compare | spectrum.
#pragma once

namespace momdyn {

// Exit codes: 0 success, 1 usage error, 2 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace momdyn
