#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "seasonmatch/retrieval.hpp"

namespace seasonmatch {

// Convenience raster renderings of the report CSVs (the CSVs are the
// contract; these are for eyeballing).

// One bar per input season against a fixed reference season.
void save_fc_bar_chart(const std::string& reference,
                       const std::vector<EvalEntry>& entries,
                       const std::filesystem::path& path);

void save_pr_plot(const std::vector<PrPoint>& curve, const std::filesystem::path& path);

}  // namespace seasonmatch
