#pragma once

namespace mirror_bounds {

// Subcommands: solve, ci, coverage, compare, eprm-eval. Returns 0, 1 on runtime failure, 2 on usage errors.
int cli_main(int argc, char** argv);

}  // namespace mirror_bounds
