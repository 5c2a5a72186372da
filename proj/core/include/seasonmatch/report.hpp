#pragma once

#include <string>
#include <vector>

#include "seasonmatch/retrieval.hpp"

namespace seasonmatch {

// CSV emitters for the evaluation artifacts. Values are printed with
// %.17g so a reload reproduces the in-memory numbers exactly.
std::string fc_matrix_csv(const EvalReport& report);                 // input,reference,fc
std::string pr_curve_csv(const std::vector<PrPoint>& curve);         // threshold,precision,recall
std::string matches_csv(const EvalEntry& entry);                     // query,retrieved,distance,correct

// Parsers for the same formats (report rendering, round-trip checks).
// Parsed entries carry no match lists.
std::vector<EvalEntry> parse_fc_matrix_csv(const std::string& csv);
std::vector<PrPoint> parse_pr_curve_csv(const std::string& csv);

// Fixed-width text matrix, inputs as rows and references as columns,
// "---" on the diagonal.
std::string fc_table_text(const std::vector<EvalEntry>& entries);

}  // namespace seasonmatch
