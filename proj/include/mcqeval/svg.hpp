#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "mcqeval/analysis.hpp"

namespace mcqeval {

// Bland-Altman scatter: mean of lengths on x, length difference on y, with
// the dataset-wide series in black, the error subset overlaid in red, and
// the mean/limits-of-agreement lines for the full series.
void write_bland_altman_svg(std::ostream& out, const std::vector<LengthBiasPoint>& points,
                            const BiasSummary& all, const std::optional<BiasSummary>& errors);

// Frequency plot of length differences: black bars for all points, red
// overlay for the error subset.
void write_histogram_svg(std::ostream& out, const std::vector<HistogramBin>& all_bins,
                         const std::vector<HistogramBin>& error_bins, double bin_width);

} // namespace mcqeval
