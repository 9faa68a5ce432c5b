#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "ttcast/dmd.hpp"
#include "ttcast/tt_dmd.hpp"

namespace ttcast {

/// TT-DMD forecasting state, version 1:
///
///   "TTDM", u8 version, f64 dt, u64 rank, u64 requested_rank
///   u64 p, then p eigenvalues and p omegas as (re, im) f64 pairs
///   u64 count + f64 singular values
///   complex tensor block holding the mode tensor
///
/// The fit-time intermediates (reduced operator, eigenvectors, cores) are not
/// stored; a loaded model forecasts identically.
void write_ttdmd(std::ostream& os, const TtDmdModel& model);
TtDmdModel read_ttdmd(std::istream& is);

/// Exact DMD model, version 1: "TTDD", u8 version, f64 dt, u64 rank,
/// u64 requested_rank, u64 p, p eigenvalues, u64 count + singular values,
/// complex tensor block holding the n x p modes.
void write_dmd(std::ostream& os, const DmdModel& model);
DmdModel read_dmd(std::istream& is);

}  // namespace ttcast
