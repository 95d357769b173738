#pragma once

namespace sdc {

// Full pipeline behind one binary: synth, extract, train, loso, ablate,
// mimap, export-emb. Returns 0 on success, 1 on validation errors, 2 on I/O
// errors.
int run_cli(int argc, const char* const* argv);

}  // namespace sdc
