#pragma once

namespace lrfit
{

/// Command line entry point: fit, synth, raster, report, roundtrip-check.
/// Returns the process exit code.
int cli_main(int argc, char** argv);

} // namespace lrfit
