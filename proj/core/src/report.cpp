#include "seasonmatch/report.hpp"

#include <algorithm>
#include <sstream>

#include "seasonmatch/error.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {

std::vector<std::string> data_lines(const std::string& csv, const std::string& want_header) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || trim(line) != want_header)
    throw DataError("bad CSV header, expected '" + want_header + "'");
  std::vector<std::string> out;
  while (std::getline(in, line))
    if (!trim(line).empty()) out.push_back(line);
  return out;
}

std::vector<std::string> ordered_unique_seasons(const std::vector<EvalEntry>& entries) {
  std::vector<std::string> seasons;
  auto add = [&](const std::string& s) {
    if (std::find(seasons.begin(), seasons.end(), s) == seasons.end()) seasons.push_back(s);
  };
  for (const EvalEntry& e : entries) {
    add(e.input);
    add(e.reference);
  }
  return seasons;
}

}  // namespace

std::string fc_matrix_csv(const EvalReport& report) {
  std::string out = "input,reference,fc\n";
  for (const EvalEntry& e : report.entries)
    out += e.input + "," + e.reference + "," + fmt_g17(e.fc) + "\n";
  return out;
}

std::string pr_curve_csv(const std::vector<PrPoint>& curve) {
  std::string out = "threshold,precision,recall\n";
  for (const PrPoint& p : curve)
    out += fmt_g17(p.threshold) + "," + fmt_g17(p.precision) + "," + fmt_g17(p.recall) + "\n";
  return out;
}

std::string matches_csv(const EvalEntry& entry) {
  std::string out = "query,retrieved,distance,correct\n";
  for (const MatchResult& m : entry.matches) {
    out += std::to_string(m.query_index) + "," + std::to_string(m.retrieved_index) + "," +
           fmt_g17(m.distance) + "," + (m.correct ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<EvalEntry> parse_fc_matrix_csv(const std::string& csv) {
  std::vector<EvalEntry> out;
  for (const std::string& line : data_lines(csv, "input,reference,fc")) {
    const auto cols = split(line, ',');
    if (cols.size() != 3) throw DataError("bad fc matrix row: '" + line + "'");
    EvalEntry e;
    e.input = trim(cols[0]);
    e.reference = trim(cols[1]);
    e.fc = parse_double(cols[2], "fc");
    out.push_back(std::move(e));
  }
  if (out.empty()) throw DataError("fc matrix CSV has no rows");
  return out;
}

std::vector<PrPoint> parse_pr_curve_csv(const std::string& csv) {
  std::vector<PrPoint> out;
  for (const std::string& line : data_lines(csv, "threshold,precision,recall")) {
    const auto cols = split(line, ',');
    if (cols.size() != 3) throw DataError("bad PR row: '" + line + "'");
    PrPoint p;
    p.threshold = parse_double(cols[0], "threshold");
    p.precision = parse_double(cols[1], "precision");
    p.recall = parse_double(cols[2], "recall");
    out.push_back(p);
  }
  if (out.empty()) throw DataError("PR CSV has no rows");
  return out;
}

std::string fc_table_text(const std::vector<EvalEntry>& entries) {
  if (entries.empty()) throw DataError("cannot render empty fc table");
  const std::vector<std::string> seasons = ordered_unique_seasons(entries);
  std::size_t width = 8;
  for (const std::string& s : seasons) width = std::max(width, s.size() + 2);

  auto cell = [&](const std::string& s) {
    std::string c = s;
    if (c.size() < width) c += std::string(width - c.size(), ' ');
    return c;
  };

  std::string out = cell("input\\ref");
  for (const std::string& s : seasons) out += cell(s);
  out += '\n';
  for (const std::string& in : seasons) {
    out += cell(in);
    for (const std::string& ref : seasons) {
      if (in == ref) {
        out += cell("---");
        continue;
      }
      const EvalEntry* found = nullptr;
      for (const EvalEntry& e : entries)
        if (e.input == in && e.reference == ref) found = &e;
      out += cell(found ? fmt_f(found->fc, 4) : "n/a");
    }
    out += '\n';
  }
  return out;
}

}  // namespace seasonmatch
