#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "addps/config.hpp"
#include "addps/guidance.hpp"
#include "addps/report.hpp"
#include "addps/runner.hpp"
#include "helpers.hpp"

using namespace addps;
using namespace addps::testing;

namespace {

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

std::string render_csv(const ExperimentConfig& cfg, const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  emit_report(rows, os, ReportFormat::Csv, report_header_lines(cfg));
  return os.str();
}

// Small oracle scenario for determinism checks; cheap enough to run repeatedly.
const char* kTinyOracle =
    "scenario = tiny\n"
    "kind = oracle\n"
    "seed = 3\n"
    "[source]\n"
    "dim = 2\n"
    "[channel]\n"
    "snr_db = 0 3\n"
    "[evaluation]\n"
    "n_eval = 256\n";

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("a two-line scenario file resolves to the documented defaults") {
  ::unsetenv("ADDPS_SEED");
  const ExperimentConfig cfg = parse_config_text("scenario = mini\nkind = addps\n", "inline");
  CHECK(cfg.scenario == "mini");
  CHECK(cfg.kind == ScenarioKind::Addps);
  CHECK(cfg.seed == 0);
  CHECK(cfg.source.kind == SourceSpec::Kind::Gaussian);
  CHECK(cfg.source.dim == 2);
  CHECK(cfg.source.sigma_x2 == 1.0);
  CHECK(cfg.codec.kind == CodecKind::Identity);
  CHECK(cfg.codec.n == 2);
  CHECK(cfg.codec.k == 1);
  CHECK(cfg.channel.power == 1.0);
  CHECK(cfg.channel.snr_db == std::vector<double>{0.0});
  CHECK(cfg.diffusion.T == 1000);
  CHECK(cfg.diffusion.beta_min == 1e-4);
  CHECK(cfg.diffusion.beta_max == 0.02);
  CHECK(cfg.diffusion.score == DiffusionSpec::Score::AnalyticSource);
  CHECK(cfg.guidance.modes == std::vector<GuidanceMode>{GuidanceMode::Alternating});
  CHECK(cfg.guidance.zeta == 1.0);
  CHECK(cfg.guidance.step_rule == StepRule::ResidualNormalized);
  CHECK(cfg.guidance.parity == Parity::EvenZ);
  CHECK(cfg.guidance.max_step == 0.5);
  CHECK(cfg.eval.n_eval == 128);
  CHECK(cfg.eval.n_seeds == 1);
  CHECK(cfg.eval.sw_projections == 64);
}

TEST_CASE("parse errors carry origin and line number") {
  const std::string msg = error_message([] {
    parse_config_text("scenario = x\nkind = addps\nbogus line\n", "inline");
  });
  CHECK(contains(msg, "inline:3"));
  CHECK(contains(msg, "expected key = value"));
  CHECK(thrown_code([] {
          parse_config_text("scenario = x\nkind = addps\nbogus line\n", "inline");
        }) == Errc::ParseError);

  CHECK(thrown_code([] {
          parse_config_text("scenario = x\nnot_a_key = 1\n", "inline");
        }) == Errc::ParseError);
}

TEST_CASE("bandwidth compression is enforced in real-pair accounting") {
  const std::string text =
      "scenario = x\nkind = addps\n[source]\ndim = 4\n[codec]\nkind = linear\nn = 4\nk = 3\n";
  CHECK(thrown_code([&] { parse_config_text(text, "inline"); }) == Errc::ValidationError);
  CHECK(contains(error_message([&] { parse_config_text(text, "inline"); }),
                 "bandwidth compression"));

  // k = 1 passes the compression bound but the identity codec pins k = n/2.
  const std::string ident =
      "scenario = x\nkind = addps\n[source]\ndim = 4\n[codec]\nn = 4\nk = 1\n";
  CHECK(contains(error_message([&] { parse_config_text(ident, "inline"); }),
                 "identity codec needs k = n/2"));
}

TEST_CASE("checkpoint paths must exist at validation time") {
  const std::string text =
      "scenario = x\nkind = addps\n[codec]\nkind = mlp\nk = 1\ncheckpoint = /no/such/file.ckpt\n";
  const std::string msg = error_message([&] { parse_config_text(text, "inline"); });
  CHECK(contains(msg, "codec.checkpoint"));
  CHECK(contains(msg, "not found"));

  const std::string none = "scenario = x\nkind = addps\n[codec]\nkind = mlp\nk = 1\n";
  CHECK(contains(error_message([&] { parse_config_text(none, "inline"); }),
                 "checkpoint or train_inline"));
}

TEST_CASE("the environment seed override wins and must be an integer") {
  ::setenv("ADDPS_SEED", "777", 1);
  CHECK(parse_config_text("scenario = s\nkind = oracle\nseed = 5\n[source]\ndim = 1\n", "e")
            .seed == 777);
  ::setenv("ADDPS_SEED", "12abc", 1);
  CHECK(thrown_code([] {
          parse_config_text("scenario = s\nkind = addps\n", "e");
        }) == Errc::ParseError);
  ::unsetenv("ADDPS_SEED");
  CHECK(parse_config_text("scenario = s\nkind = oracle\nseed = 5\n[source]\ndim = 1\n", "e")
            .seed == 5);
}

TEST_CASE("all shipped scenarios resolve") {
  const std::vector<std::string> names = builtin_scenario_names();
  REQUIRE(names.size() == 5);
  CHECK(names == std::vector<std::string>{"prop1", "prop2", "unconditional-sanity",
                                          "ablation", "snr-sweep"});
  for (const std::string& name : names) {
    const ExperimentConfig cfg = resolve_config(name);
    CHECK(cfg.scenario == name);
  }
  CHECK(thrown_code([] { builtin_scenario_text("no-such"); }) == Errc::ValidationError);
  CHECK(thrown_code([] { resolve_config("no-such"); }) == Errc::ValidationError);
}

TEST_CASE("resolve_config prefers an on-disk file over builtin names") {
  TempFile file("scenario.cfg");
  std::ofstream(file.path()) << "scenario = from-disk\nkind = oracle\n[source]\ndim = 1\n";
  CHECK(resolve_config(file.path()).scenario == "from-disk");
  CHECK(thrown_code([] { load_config("/no/such/dir/x.cfg"); }) == Errc::ValidationError);
}

TEST_CASE("metric formatting uses six significant digits with spelled-out non-finites") {
  CHECK(format_metric(0.5) == "0.5");
  CHECK(format_metric(0.0) == "0");
  CHECK(format_metric(13.010299956639813) == "13.0103");
  CHECK(format_metric(1234567.0) == "1.23457e+06");
  CHECK(format_metric(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_metric(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_metric(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("csv reports have commented headers and a fixed column order") {
  ReportRow row;
  row.scenario = "demo";
  row.mode = "map";
  row.snr_db = 1.0;
  row.T = 0;
  row.seed = 17;
  row.frechet = 0.085742;
  row.sliced_w = std::numeric_limits<double>::quiet_NaN();
  row.mse = 0.5;
  row.psnr_db = 3.0102999566398;
  std::ostringstream os;
  emit_report({row}, os, ReportFormat::Csv, {"version 0.1.0", "seed = 17"});
  CHECK(os.str() ==
        "# version 0.1.0\n"
        "# seed = 17\n"
        "scenario,mode,snr_db,T,seed,frechet,sliced_w,mse,psnr_db,wall_ms\n"
        "demo,map,1,0,17,0.085742,nan,0.5,3.0103,0\n");
}

TEST_CASE("jsonl reports round-trip exactly") {
  ReportRow a;
  a.scenario = "demo";
  a.mode = "Alternating";
  a.snr_db = -1.0;
  a.T = 500;
  a.seed = 9;
  a.frechet = 0.123456789;
  a.sliced_w = 0.25;
  a.mse = 1e-12;
  a.psnr_db = std::numeric_limits<double>::infinity();
  ReportRow b = a;
  b.mode = "Simultaneous";
  b.sliced_w = std::numeric_limits<double>::quiet_NaN();
  b.psnr_db = 42.0;

  TempFile file("report.jsonl");
  emit_report_file({a, b}, file.path(), ReportFormat::Jsonl, {"meta line"});
  const std::vector<ReportRow> back = load_report_jsonl(file.path());
  REQUIRE(back.size() == 2);
  CHECK(back[0].scenario == "demo");
  CHECK(back[0].mode == "Alternating");
  CHECK(back[0].snr_db == -1.0);
  CHECK(back[0].T == 500);
  CHECK(back[0].seed == 9);
  CHECK(back[0].frechet == 0.123456789);
  CHECK(back[0].mse == 1e-12);
  CHECK(back[0].psnr_db == std::numeric_limits<double>::infinity());
  CHECK(back[1].mode == "Simultaneous");
  CHECK(std::isnan(back[1].sliced_w));
  CHECK(back[1].psnr_db == 42.0);
}

TEST_CASE("reruns and job counts do not change a report byte") {
  ::unsetenv("ADDPS_SEED");
  const ExperimentConfig cfg = parse_config_text(kTinyOracle, "inline");

  const std::vector<ReportRow> first = run_scenario(cfg);
  const std::vector<ReportRow> second = run_scenario(cfg);
  CHECK(render_csv(cfg, first) == render_csv(cfg, second));

  RunOptions par;
  par.jobs = 4;
  const std::vector<ReportRow> parallel = run_scenario(cfg, par);
  REQUIRE(parallel.size() == first.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(parallel[i].mode == first[i].mode);
    CHECK(parallel[i].snr_db == first[i].snr_db);
    CHECK(parallel[i].seed == first[i].seed);
    CHECK(parallel[i].frechet == first[i].frechet);
    CHECK(parallel[i].sliced_w == first[i].sliced_w);
    CHECK(parallel[i].mse == first[i].mse);
    CHECK(parallel[i].wall_ms == 0.0);  // timings stay off by default
  }

  // 2 SNRs x {posterior, map}
  REQUIRE(first.size() == 4);
  CHECK(first[0].mode == "posterior");
  CHECK(first[1].mode == "map");
}

TEST_CASE("the scalar estimator scenario reproduces the shrinkage split") {
  ::unsetenv("ADDPS_SEED");
  const ExperimentConfig cfg = resolve_config("prop1");
  CHECK(cfg.kind == ScenarioKind::Oracle);
  CHECK(cfg.seed == 17);
  const std::vector<ReportRow> rows = run_scenario(cfg);
  REQUIRE(rows.size() == 2);

  // Posterior draws preserve the source law; the MAP point shrinks it by the
  // Wiener gain 1/2 at the equal-variance operating point.
  CHECK(rows[0].mode == "posterior");
  CHECK(rows[0].frechet < 0.02);
  CHECK(rows[0].mse == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rows[1].mode == "map");
  CHECK(rows[1].frechet > 0.05);
  CHECK(rows[1].mse == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::isnan(rows[0].sliced_w));  // not in the scenario's metric list
}

TEST_CASE("the committed scalar-scenario report is reproduced byte for byte") {
  ::unsetenv("ADDPS_SEED");
  std::ifstream golden(std::string(ADDPS_TEST_DATA_DIR) + "/prop1_golden.csv",
                       std::ios::binary);
  REQUIRE_MESSAGE(golden.good(), "tests/data/prop1_golden.csv is missing");
  std::ostringstream want;
  want << golden.rdbuf();

  const ExperimentConfig cfg = resolve_config("prop1");
  CHECK(render_csv(cfg, run_scenario(cfg)) == want.str());
}

TEST_CASE("a guided scenario writes the first chain's trace when asked") {
  ::unsetenv("ADDPS_SEED");
  const ExperimentConfig cfg = parse_config_text(
      "scenario = tiny-addps\n"
      "kind = addps\n"
      "seed = 11\n"
      "[diffusion]\n"
      "T = 50\n"
      "beta_min = 1e-3\n"
      "beta_max = 0.2\n"
      "[guidance]\n"
      "zeta = 0.05\n"
      "[evaluation]\n"
      "n_eval = 8\n",
      "inline");
  TempFile trace("trace.jsonl");
  RunOptions opts;
  opts.trace_path = trace.path();
  const std::vector<ReportRow> rows = run_scenario(cfg, opts);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mode == "Alternating");
  CHECK(rows[0].T == 50);
  CHECK(std::isfinite(rows[0].frechet));
  CHECK(rows[0].frechet >= 0.0);
  CHECK(load_trace_jsonl(trace.path()).records.size() == 50);
}

}  // TEST_SUITE
