#include "pfm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "pfm/error.hpp"

namespace pfm {

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  std::string s = buf;
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s;
}

}  // namespace

std::string format_results(std::span<const ResultRow> rows) {
  std::string out;
  char line[512];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "experiment=%s partition=%s multiview_acc=%.6f video_acc=%.6f\n",
                  r.experiment.c_str(), r.partition.c_str(), r.multiview_acc, r.video_acc);
    out += line;
  }
  return out;
}

std::vector<ResultRow> parse_results(const std::string& text) {
  std::vector<ResultRow> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::map<std::string, std::string> kv;
    std::string token;
    while (fields >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Parse, "results line " + std::to_string(line_no));
      kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    try {
      rows.push_back({kv.at("experiment"), kv.at("partition"), std::stod(kv.at("multiview_acc")),
                      std::stod(kv.at("video_acc"))});
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "results line " + std::to_string(line_no) + " is incomplete");
    }
  }
  return rows;
}

std::string format_cell(double multiview_acc, double video_acc) {
  return percent(multiview_acc) + " (" + percent(video_acc) + ")";
}

std::string format_table(std::span<const ResultRow> rows) {
  std::vector<std::string> experiments, partitions;
  const auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : rows) {
    remember(experiments, r.experiment);
    remember(partitions, r.partition);
  }
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"Experiment"};
  header.insert(header.end(), partitions.begin(), partitions.end());
  if (!partitions.empty()) header.push_back("Avg");
  table.push_back(header);
  for (const auto& e : experiments) {
    std::vector<std::string> line{e};
    double sum_mv = 0.0, sum_video = 0.0;
    int n = 0;
    for (const auto& p : partitions) {
      const auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const ResultRow& r) { return r.experiment == e && r.partition == p; });
      if (it == rows.end()) {
        line.push_back("-");
        continue;
      }
      line.push_back(format_cell(it->multiview_acc, it->video_acc));
      sum_mv += it->multiview_acc;
      sum_video += it->video_acc;
      ++n;
    }
    line.push_back(n ? format_cell(sum_mv / n, sum_video / n) : "-");
    table.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t c = 0; c < table[r].size(); ++c) {
      std::string cell = table[r][c];
      cell.resize(width[c], ' ');
      out += (c ? " | " : "") + cell;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 3 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace pfm
