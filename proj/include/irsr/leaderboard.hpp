#pragma once

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "irsr/error.hpp"
#include "irsr/metrics.hpp"

namespace irsr {

struct TeamResult {
  std::string team;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

struct LeaderboardEntry {
  std::string team;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double total_score = 0.0;
  int rank = 0;
};

/// Recomputes each total as psnr + 20*ssim and ranks by descending total.
/// Equal totals are ordered by team name; ranks are 1-based positions.
inline std::vector<LeaderboardEntry> rank_leaderboard(const std::vector<TeamResult>& teams) {
  if (teams.empty()) throw ValidationError("leaderboard needs at least one team");
  std::vector<LeaderboardEntry> out;
  out.reserve(teams.size());
  for (const auto& t : teams) {
    out.push_back({t.team, t.mean_psnr, t.mean_ssim, score(t.mean_psnr, t.mean_ssim), 0});
  }
  std::ranges::sort(out, [](const auto& a, const auto& b) {
    if (a.total_score != b.total_score) return a.total_score > b.total_score;
    return a.team < b.team;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

/// Reads `team,psnr,ssim` rows; a header row and '#' comments are skipped.
/// Any further columns (e.g. a published total) are ignored.
inline std::vector<TeamResult> read_team_results_csv(std::istream& in) {
  std::vector<TeamResult> out;
  std::string line;
  int line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 3) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected team,psnr,ssim");
    }
    TeamResult t;
    t.team = f[0];
    try {
      t.mean_psnr = std::stod(f[1]);
      t.mean_ssim = std::stod(f[2]);
    } catch (const std::exception&) {
      if (out.empty() && !header_skipped) {  // header
        header_skipped = true;
        continue;
      }
      throw ValidationError("line " + std::to_string(line_no) + ": non-numeric psnr/ssim");
    }
    out.push_back(std::move(t));
  }
  return out;
}

/// Columns of the published results table.
inline void write_leaderboard_csv(std::ostream& os, const std::vector<LeaderboardEntry>& board) {
  os << "team,rank,test_psnr,test_ssim,total_score\n" << std::fixed << std::setprecision(4);
  for (const auto& e : board) {
    os << e.team << "," << e.rank << "," << e.mean_psnr << "," << e.mean_ssim << ","
       << e.total_score << "\n";
  }
}

}  // namespace irsr
