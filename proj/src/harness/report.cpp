#include "fldlt3/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

#include "fldlt3/errors.hpp"
#include "fldlt3/harness/runner.hpp"

namespace fldlt3::harness {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s, const fs::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(fmt::format("{}:{}: bad number '{}'", path.string(), line, s));
  }
}

long long to_int(const std::string& s, const fs::path& path, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(fmt::format("{}:{}: bad integer '{}'", path.string(), line, s));
  }
  return v;
}

}  // namespace

std::vector<MetricRow> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw IoError(path.string() + ": unexpected header");
  }
  std::vector<MetricRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 11) throw IoError(fmt::format("{}:{}: expected 11 columns", path.string(), n));
    MetricRow r;
    r.run_id = c[0];
    r.seed = static_cast<std::uint64_t>(to_int(c[1], path, n));
    r.agent = c[2];
    r.round = static_cast<int>(to_int(c[3], path, n));
    r.reward = to_double(c[4], path, n);
    r.accuracy = to_double(c[5], path, n);
    r.total_energy = to_double(c[6], path, n);
    r.evenness = to_double(c[7], path, n);
    r.num_selected = static_cast<std::size_t>(to_int(c[8], path, n));
    r.c16_violations = static_cast<int>(to_int(c[9], path, n));
    r.wall_clock = to_double(c[10], path, n);
    if (!rows.empty() && r.round <= rows.back().round) {
      throw IoError(fmt::format("{}:{}: round index not increasing", path.string(), n));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RunFile> load_runs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::vector<RunFile> runs;
  for (const auto& csv : csvs) {
    RunFile f;
    f.run_id = csv.stem().string();
    f.rows = read_metrics(csv);
    fs::path meta_path = csv;
    meta_path.replace_extension(".meta.json");
    std::ifstream in(meta_path);
    if (!in) throw IoError("missing metadata " + meta_path.string());
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(in);
      f.agent = meta.at("agent").get<std::string>();
      f.fingerprint = meta.at("env_fingerprint").get<std::string>();
      f.sweep_axis = meta.at("sweep_axis").get<std::string>();
      f.sweep_value = meta.at("sweep_value").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError(meta_path.string() + ": " + e.what());
    }
    runs.push_back(std::move(f));
  }
  return runs;
}

double relative_improvement(double a, double b) {
  if (b == 0.0) throw DivisionHazard("relative_improvement: baseline score is zero");
  return (a - b) / std::abs(b);
}

std::vector<ComparisonGroup> ae_gain_report(const std::vector<RunFile>& runs, int window) {
  if (window <= 0) throw InvalidParameter("report window must be positive");
  if (runs.empty()) throw DegenerateInput("no runs to report");

  std::map<std::pair<std::string, double>, std::vector<const RunFile*>> by_point;
  for (const auto& r : runs) by_point[{r.sweep_axis, r.sweep_value}].push_back(&r);

  std::vector<ComparisonGroup> groups;
  for (const auto& [key, members] : by_point) {
    ComparisonGroup g;
    g.sweep_axis = key.first;
    g.sweep_value = key.second;
    g.fingerprint = members.front()->fingerprint;
    std::map<std::string, std::vector<double>> per_agent;
    for (const RunFile* r : members) {
      if (r->fingerprint != g.fingerprint) {
        throw ConfigError(fmt::format(
            "run {} was produced with a different environment ({} vs {}); refusing to compare",
            r->run_id, r->fingerprint, g.fingerprint));
      }
      if (static_cast<std::size_t>(window) > r->rows.size()) {
        throw InvalidParameter(fmt::format("window {} is longer than run {} ({} rounds)", window,
                                           r->run_id, r->rows.size()));
      }
      double sum = 0.0;
      for (std::size_t i = r->rows.size() - static_cast<std::size_t>(window); i < r->rows.size(); ++i) {
        sum += r->rows[i].reward;
      }
      per_agent[r->agent].push_back(sum / window);
    }
    for (const auto& [agent, means] : per_agent) {
      AgentScore s;
      s.agent = agent;
      s.runs = means.size();
      for (double m : means) s.mean += m;
      s.mean /= static_cast<double>(means.size());
      g.agents.push_back(s);
    }
    for (const auto& a : g.agents) {
      for (const auto& b : g.agents) {
        if (a.agent == b.agent || b.mean == 0.0) continue;
        g.improvement[a.agent][b.agent] = relative_improvement(a.mean, b.mean);
      }
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::string format_report(const std::vector<ComparisonGroup>& groups, int window) {
  std::string out;
  for (const auto& g : groups) {
    if (g.sweep_axis == "none") {
      out += fmt::format("# window {} rounds, env {}\n", window, g.fingerprint);
    } else {
      out += fmt::format("# {} = {:g}, window {} rounds, env {}\n", g.sweep_axis, g.sweep_value,
                         window, g.fingerprint);
    }
    out += fmt::format("{:<16}{:>6}{:>16}", "agent", "runs", "mean_ae_gain");
    const bool pairwise = g.agents.size() > 1;
    if (pairwise) {
      for (const auto& b : g.agents) out += fmt::format("{:>18}", "vs " + b.agent);
    }
    out += '\n';
    for (const auto& a : g.agents) {
      out += fmt::format("{:<16}{:>6}{:>16.6g}", a.agent, a.runs, a.mean);
      if (pairwise) {
        for (const auto& b : g.agents) {
          auto row = g.improvement.find(a.agent);
          if (a.agent == b.agent || row == g.improvement.end() || !row->second.contains(b.agent)) {
            out += fmt::format("{:>18}", "-");
          } else {
            out += fmt::format("{:>17.1f}%", 100.0 * row->second.at(b.agent));
          }
        }
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace fldlt3::harness
