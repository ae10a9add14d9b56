#pragma once

namespace rcp1 {

// Entry point shared by the rcp1 binary and the in-process CLI tests.
// Exit codes: 0 ok, 2 usage or domain error, 3 missing artifact,
// 4 internal invariant breach.
int cli_main(int argc, const char* const* argv);

}  // namespace rcp1
