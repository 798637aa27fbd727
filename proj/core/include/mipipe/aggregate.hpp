#pragma once

#include "mipipe/impute.hpp"
#include "mipipe/matrix.hpp"

namespace mipipe {

// Keeps only rows whose protein field names exactly one accession
// (multi-protein peptides carry ';'-joined accessions). Requires
// protein ids to be present.
IntensityMatrix filter_unique(const IntensityMatrix& m);

// Rolls each draw up to protein level: per protein and sample,
// log2(sum over its peptides of 2^value). Rows must be unique peptides
// with protein ids; output has one row per distinct protein, first
// appearance order.
ImputedStack aggregate_sum(const ImputedStack& stack);

}  // namespace mipipe
