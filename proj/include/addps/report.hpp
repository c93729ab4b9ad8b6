#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace addps {

/// One evaluation cell. Fields that do not apply to a scenario hold the nan
/// sentinel (written as "nan" in CSV and null in JSON lines); psnr_db may be
/// +infinity ("inf"). wall_ms stays 0 unless timings were requested, keeping
/// reruns byte-identical.
struct ReportRow {
  std::string scenario;
  std::string mode;
  double snr_db = 0.0;
  std::size_t T = 0;
  std::uint64_t seed = 0;
  double frechet = 0.0;
  double sliced_w = 0.0;
  double mse = 0.0;
  double psnr_db = 0.0;
  double wall_ms = 0.0;
};

enum class ReportFormat { Csv, Jsonl };

ReportFormat parse_report_format(const std::string& name);  // "csv" | "jsonl"

/// CSV: `# `-prefixed header lines (resolved config + version), the fixed
/// column header, then one row per cell with floats at 6 significant digits.
/// JSONL: one meta object {"config":..., "version":...} followed by one
/// object per row (non-finite values encoded as strings "inf"/"-inf"/"nan").
void emit_report(const std::vector<ReportRow>& rows, std::ostream& os, ReportFormat format,
                 const std::vector<std::string>& header_lines);

void emit_report_file(const std::vector<ReportRow>& rows, const std::string& path,
                      ReportFormat format, const std::vector<std::string>& header_lines);

/// Reads rows back from a JSONL report (meta objects are skipped).
std::vector<ReportRow> load_report_jsonl(const std::string& path);

/// %.6g with inf/nan spelled out; shared by CSV emission and tests.
std::string format_metric(double v);

}  // namespace addps
