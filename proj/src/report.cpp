#include "addps/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "addps/config.hpp"
#include "addps/errors.hpp"

namespace addps {

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "jsonl") return ReportFormat::Jsonl;
  raise(Errc::ValidationError, "unknown report format '" + name + "' (use csv or jsonl)");
}

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

nlohmann::json json_metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double metric_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  raise(Errc::ParseError, "report field is neither a number nor a sentinel string");
}

}  // namespace

void emit_report(const std::vector<ReportRow>& rows, std::ostream& os, ReportFormat format,
                 const std::vector<std::string>& header_lines) {
  if (rows.empty()) raise(Errc::ValidationError, "emit_report: no rows");
  if (format == ReportFormat::Csv) {
    for (const std::string& line : header_lines) os << "# " << line << '\n';
    os << "scenario,mode,snr_db,T,seed,frechet,sliced_w,mse,psnr_db,wall_ms\n";
    for (const ReportRow& r : rows) {
      os << r.scenario << ',' << r.mode << ',' << format_metric(r.snr_db) << ',' << r.T << ','
         << r.seed << ',' << format_metric(r.frechet) << ',' << format_metric(r.sliced_w) << ','
         << format_metric(r.mse) << ',' << format_metric(r.psnr_db) << ','
         << format_metric(r.wall_ms) << '\n';
    }
  } else {
    nlohmann::json meta;
    std::string config_text;
    for (const std::string& line : header_lines) {
      if (!config_text.empty()) config_text += '\n';
      config_text += line;
    }
    meta["config"] = config_text;
    meta["version"] = "addps " + std::string(kVersion);
    os << meta.dump() << '\n';
    for (const ReportRow& r : rows) {
      nlohmann::json j{{"scenario", r.scenario}, {"mode", r.mode},
                       {"snr_db", json_metric(r.snr_db)}, {"T", r.T},
                       {"seed", r.seed}, {"frechet", json_metric(r.frechet)},
                       {"sliced_w", json_metric(r.sliced_w)}, {"mse", json_metric(r.mse)},
                       {"psnr_db", json_metric(r.psnr_db)}, {"wall_ms", json_metric(r.wall_ms)}};
      os << j.dump() << '\n';
    }
  }
  if (!os) raise(Errc::IoError, "emit_report: stream write failed");
}

void emit_report_file(const std::vector<ReportRow>& rows, const std::string& path,
                      ReportFormat format, const std::vector<std::string>& header_lines) {
  std::ofstream os(path, std::ios::binary);  // binary: no newline translation
  if (!os) raise(Errc::IoError, "cannot open report for writing: " + path);
  emit_report(rows, os, format, header_lines);
}

std::vector<ReportRow> load_report_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) raise(Errc::IoError, "cannot open report: " + path);
  std::vector<ReportRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      raise(Errc::ParseError, path + ":" + std::to_string(lineno) + ": invalid JSON record");
    }
    if (!j.contains("scenario")) continue;  // meta record
    ReportRow r;
    r.scenario = j.at("scenario").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.snr_db = metric_from_json(j.at("snr_db"));
    r.T = j.at("T").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.frechet = metric_from_json(j.at("frechet"));
    r.sliced_w = metric_from_json(j.at("sliced_w"));
    r.mse = metric_from_json(j.at("mse"));
    r.psnr_db = metric_from_json(j.at("psnr_db"));
    r.wall_ms = metric_from_json(j.at("wall_ms"));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace addps
