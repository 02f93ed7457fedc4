#include <cmath>
#include <filesystem>
#include <sstream>

#include "iekf/io.hpp"
#include "iekf/sim.hpp"

namespace iekf {

std::string report_csv(const VariantReport& r) {
  std::string out = "run,step,t,ex,ey,ez,eax,eay,eaz,nees_pos,nees_ang,nees_pos_alt\n";
  for (const auto& run : r.runs) {
    if (!run.ok) continue;
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
      const StepRecord& s = run.steps[k];
      out += std::to_string(run.run) + "," + std::to_string(k) + "," + fmt_double(s.t);
      for (int i = 0; i < 3; ++i) out += "," + fmt_double(s.pos_err(i));
      for (int i = 0; i < 3; ++i) out += "," + fmt_double(s.ang_err(i));
      out += "," + fmt_double(s.nees_pos) + "," + fmt_double(s.nees_ang) + "," +
             fmt_double(s.nees_pos_alt) + "\n";
    }
  }
  return out;
}

std::string summary_csv(const MonteCarloReport& r) {
  std::string out = "variant,rmse_pos,rmse_ang,nees_pos,nees_ang,nees_pos_alt,runs_ok,runs_failed\n";
  for (const auto& v : r.variants) {
    const Aggregate& a = v.aggregate;
    out += v.variant.label();
    for (double x : {a.rmse_pos, a.rmse_ang, a.nees_pos, a.nees_ang, a.nees_pos_alt}) {
      out += "," + fmt_double(x);
    }
    out += "," + std::to_string(a.runs_ok) + "," + std::to_string(a.runs_failed) + "\n";
  }
  return out;
}

namespace {

bool same(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

void cross_check(const VariantReport& v) {
  bool any = false;
  for (const auto& r : v.runs) any = any || (r.ok && !r.steps.empty());
  if (!any) return;
  const Aggregate re = aggregate_metrics(v.runs);
  const Aggregate& a = v.aggregate;
  if (!same(re.rmse_pos, a.rmse_pos) || !same(re.rmse_ang, a.rmse_ang) ||
      !same(re.nees_pos, a.nees_pos) || !same(re.nees_ang, a.nees_ang) ||
      !same(re.nees_pos_alt, a.nees_pos_alt)) {
    throw Error(ErrorCode::IoError, v.variant.label() + ": stored aggregate disagrees with its series");
  }
}

}  // namespace

void write_report(const std::string& dir, const MonteCarloReport& r, const std::string& meta_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  for (const auto& v : r.variants) cross_check(v);
  for (const auto& v : r.variants) {
    write_file_atomic(dir + "/report_" + v.variant.label() + ".csv", report_csv(v));
  }
  write_file_atomic(dir + "/summary.csv", summary_csv(r));
  write_file_atomic(dir + "/meta.json", meta_json);
}

std::vector<std::pair<std::string, Aggregate>> read_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("variant,rmse_pos", 0) != 0) throw Error(ErrorCode::IoError, "summary header mismatch");
  std::vector<std::pair<std::string, Aggregate>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw Error(ErrorCode::IoError, "summary row needs 8 fields: " + line);
    Aggregate a;
    a.rmse_pos = parse_double(f[1], "rmse_pos");
    a.rmse_ang = parse_double(f[2], "rmse_ang");
    a.nees_pos = parse_double(f[3], "nees_pos");
    a.nees_ang = parse_double(f[4], "nees_ang");
    a.nees_pos_alt = parse_double(f[5], "nees_pos_alt");
    a.runs_ok = static_cast<std::size_t>(parse_double(f[6], "runs_ok"));
    a.runs_failed = static_cast<std::size_t>(parse_double(f[7], "runs_failed"));
    out.emplace_back(f[0], a);
  }
  return out;
}

}  // namespace iekf
