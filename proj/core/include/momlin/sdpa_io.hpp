#pragma once

#include <iosfwd>
#include <string>

#include "momlin/conic.hpp"

namespace momlin {

// Sparse SDPA (.dat-s) interchange.
//
// The writer maps the problem onto the standard SDPA primal
//     min c'x   s.t.   X = sum_i x_i F_i - F0,  X in PSD cone
// block by block: every PSD block keeps its dimension, then all scalar rows
// share one final diagonal block (nonnegative rows first, then each equality
// lowered to an adjacent +/- pair).  A nonzero objective constant is carried
// in an "*offset" comment so a round trip preserves it.
//
// Second-order cone blocks have no SDPA encoding; convert them with
// soc_to_psd() before exporting.
void export_sdpa(const ConicProblem& problem, std::ostream& os);
void export_sdpa(const ConicProblem& problem, const std::string& path);

// Reads a sparse SDPA file.  Diagonal-block rows become nonnegative rows,
// except that adjacent rows forming an exact +/- pair are fused back into one
// equality (always a sound rewrite, and the inverse of the writer's lowering).
ConicProblem import_sdpa(std::istream& is);
ConicProblem import_sdpa_file(const std::string& path);

// t >= ||u|| expressed as the PSD arrow matrix [[t, u'], [u, t*I]].
PsdBlock soc_to_psd(const SocBlock& soc);

} // namespace momlin
