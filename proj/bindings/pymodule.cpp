// Python surface: thin wrappers over the C++ lab. Vectors cross the boundary
// as plain lists; anything heavier stays native.
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "addps/channel.hpp"
#include "addps/codec.hpp"
#include "addps/config.hpp"
#include "addps/diffusion.hpp"
#include "addps/errors.hpp"
#include "addps/gaussian_model.hpp"
#include "addps/gaussian_oracle.hpp"
#include "addps/guidance.hpp"
#include "addps/metrics.hpp"
#include "addps/report.hpp"
#include "addps/rng.hpp"
#include "addps/runner.hpp"

namespace py = pybind11;
using namespace addps;

namespace {

Matrix matrix_from_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) raise(Errc::ValidationError, "matrix needs at least one row");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) {
      raise(Errc::DimensionMismatch, "matrix rows have unequal lengths");
    }
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<Vec> matrix_to_rows(const Matrix& m) {
  std::vector<Vec> rows(m.rows(), Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

GuidanceMode mode_from_name(const std::string& name) {
  if (name == "zonly" || name == "ZOnly") return GuidanceMode::ZOnly;
  if (name == "xonly" || name == "XOnly") return GuidanceMode::XOnly;
  if (name == "simultaneous" || name == "Simultaneous") return GuidanceMode::Simultaneous;
  if (name == "alternating" || name == "Alternating") return GuidanceMode::Alternating;
  raise(Errc::ValidationError, "unknown guidance mode '" + name + "'");
}

py::dict row_to_dict(const ReportRow& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["mode"] = r.mode;
  d["snr_db"] = r.snr_db;
  d["T"] = r.T;
  d["seed"] = r.seed;
  d["frechet"] = r.frechet;
  d["sliced_w"] = r.sliced_w;
  d["mse"] = r.mse;
  d["psnr_db"] = r.psnr_db;
  d["wall_ms"] = r.wall_ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "posterior-sampling semantic communication lab (C++ core)";
  m.attr("__version__") = kVersion;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      if (is_config_error(e.code())) {
        PyErr_SetString(PyExc_ValueError, e.what());
      } else {
        PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_readonly("T", &NoiseSchedule::T)
      .def_readonly("beta", &NoiseSchedule::beta)
      .def_readonly("alpha", &NoiseSchedule::alpha)
      .def_readonly("alpha_bar", &NoiseSchedule::alpha_bar)
      .def("__repr__", [](const NoiseSchedule& s) {
        return "NoiseSchedule(T=" + std::to_string(s.T) + ")";
      });
  m.def("linear_schedule", &make_linear_schedule, py::arg("t"), py::arg("beta_min") = 1e-4,
        py::arg("beta_max") = 0.02);

  py::class_<ChannelSignal>(m, "ChannelSignal")
      .def_readonly("values", &ChannelSignal::values)
      .def_readonly("k", &ChannelSignal::k)
      .def_readonly("power", &ChannelSignal::power)
      .def("per_symbol_power", &ChannelSignal::per_symbol_power);
  m.def("power_normalize", &power_normalize, py::arg("z"), py::arg("k"), py::arg("power") = 1.0);
  m.def(
      "noise_variance",
      [](double snr_db, double power) { return snr_to_noise_variance({snr_db, power}); },
      py::arg("snr_db"), py::arg("power") = 1.0);
  m.def(
      "transmit",
      [](const ChannelSignal& z, double snr_db, double power, std::uint64_t seed) {
        SeededRng rng(seed, 0);
        return transmit(z, {snr_db, power}, rng);
      },
      py::arg("z"), py::arg("snr_db"), py::arg("power") = 1.0, py::arg("seed") = 0);

  // closed-form estimators
  m.def("scalar_map", &scalar_map, py::arg("z_hat"), py::arg("sigma_x2"), py::arg("sigma_n2"));
  m.def(
      "linear_map",
      [](const std::vector<Vec>& a, double sigma_x2, double sigma_n2, const Vec& z_hat,
         bool push_through) {
        const auto p = LinearGaussianProblem::make(matrix_from_rows(a), sigma_x2, sigma_n2);
        return push_through ? linear_map_dual(p, z_hat) : linear_map_primal(p, z_hat);
      },
      py::arg("a"), py::arg("sigma_x2"), py::arg("sigma_n2"), py::arg("z_hat"),
      py::arg("push_through") = false);
  m.def(
      "posterior_marginal_check",
      [](const std::vector<Vec>& a, double sigma_x2, double sigma_n2, std::size_t n,
         std::uint64_t seed, bool map_point) {
        const auto p = LinearGaussianProblem::make(matrix_from_rows(a), sigma_x2, sigma_n2);
        SeededRng rng(seed, 0);
        return posterior_sampling_marginal_check(
            p, n, rng, map_point ? MarginalEstimator::MapPoint : MarginalEstimator::PosteriorDraw);
      },
      py::arg("a"), py::arg("sigma_x2"), py::arg("sigma_n2"), py::arg("n"), py::arg("seed") = 0,
      py::arg("map_point") = false);

  // score oracles and the trained model
  py::class_<ScoreFunction, std::shared_ptr<ScoreFunction>>(m, "ScoreFunction")
      .def_property_readonly("dim", &ScoreFunction::dim)
      .def("score", &ScoreFunction::score, py::arg("x_t"), py::arg("i"), py::arg("schedule"));
  m.def(
      "gaussian_score",
      [](std::size_t dim, double var) -> std::shared_ptr<ScoreFunction> {
        return std::make_shared<GaussianScore>(GaussianModel::isotropic(dim, var));
      },
      py::arg("dim"), py::arg("var") = 1.0);
  m.def(
      "gmm_score",
      [](const std::vector<Vec>& means, double component_var,
         std::optional<Vec> weights) -> std::shared_ptr<ScoreFunction> {
        if (means.empty()) raise(Errc::ValidationError, "gmm needs at least one mean");
        const std::size_t d = means.front().size();
        std::vector<Matrix> covs(means.size(), Matrix::scaled_identity(d, component_var));
        Vec w = weights ? *weights
                        : Vec(means.size(), 1.0 / static_cast<double>(means.size()));
        return std::make_shared<GmmScore>(GmmPrior::make(means, std::move(covs), std::move(w)));
      },
      py::arg("means"), py::arg("component_var") = 0.3, py::arg("weights") = std::nullopt);
  m.def("load_score", [](const std::string& path) -> std::shared_ptr<ScoreFunction> {
    return std::make_shared<MlpScore>(load_score(path));
  });
  m.def(
      "tweedie",
      [](const Vec& x_t, std::size_t i, const std::shared_ptr<ScoreFunction>& sf,
         const NoiseSchedule& s) { return tweedie(x_t, i, *sf, s); },
      py::arg("x_t"), py::arg("i"), py::arg("score"), py::arg("schedule"));
  m.def(
      "sample_unconditional",
      [](const std::shared_ptr<ScoreFunction>& sf, const NoiseSchedule& s, std::size_t n,
         std::uint64_t seed) {
        SeededRng rng(seed, 0);
        return sample_unconditional(*sf, s, n, rng);
      },
      py::arg("score"), py::arg("schedule"), py::arg("n"), py::arg("seed") = 0);

  // codec
  py::class_<CodecModel>(m, "Codec")
      .def_property_readonly("n", [](const CodecModel& c) { return c.n_source; })
      .def_property_readonly("k", [](const CodecModel& c) { return c.k_channel; })
      .def_readonly("power", &CodecModel::power);
  m.def("identity_codec", &CodecModel::identity, py::arg("n"), py::arg("power") = 1.0);
  m.def(
      "linear_codec",
      [](const std::vector<Vec>& a, double power) {
        return CodecModel::linear(matrix_from_rows(a), power);
      },
      py::arg("a"), py::arg("power") = 1.0);
  m.def("load_codec", &load_codec, py::arg("path"));
  m.def("save_codec", &save_codec, py::arg("path"), py::arg("codec"));
  m.def("encode", &encode, py::arg("codec"), py::arg("x"));
  m.def("decode", &decode, py::arg("codec"), py::arg("z_hat"));

  // metrics
  m.def(
      "frechet",
      [](const std::vector<Vec>& a, const std::vector<Vec>& b) {
        return frechet_distance(SampleSet::from(a), SampleSet::from(b));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "sliced_wasserstein",
      [](const std::vector<Vec>& a, const std::vector<Vec>& b, std::size_t n_proj,
         std::uint64_t seed) {
        SeededRng rng(seed, 0);
        return sliced_wasserstein(SampleSet::from(a), SampleSet::from(b), n_proj, rng);
      },
      py::arg("a"), py::arg("b"), py::arg("n_proj") = 64, py::arg("seed") = 0);
  m.def(
      "mse_psnr",
      [](const Vec& x, const Vec& x_hat, double peak) {
        const MsePsnr r = mse_psnr(x, x_hat, peak);
        return py::make_tuple(r.mse, r.psnr_db);
      },
      py::arg("x"), py::arg("x_hat"), py::arg("peak") = 1.0);

  // guided posterior sampler
  m.def(
      "addps_sample",
      [](const ChannelSignal& z_hat, const CodecModel& codec,
         const std::shared_ptr<ScoreFunction>& sf, const NoiseSchedule& s, const std::string& mode,
         double zeta, const std::string& step_rule, double rho_z, double rho_x, double max_step,
         std::uint64_t seed) {
        GuidanceConfig cfg;
        cfg.mode = mode_from_name(mode);
        cfg.zeta = zeta;
        if (step_rule == "constant") {
          cfg.step_rule = StepRule::Constant;
        } else if (step_rule == "residual-normalized") {
          cfg.step_rule = StepRule::ResidualNormalized;
        } else {
          raise(Errc::ValidationError, "unknown step rule '" + step_rule + "'");
        }
        cfg.rho_z = rho_z;
        cfg.rho_x = rho_x;
        cfg.max_step = max_step;
        SeededRng rng(seed, 0);
        AddpsResult r = addps_sample(z_hat, codec, *sf, s, cfg, rng);
        py::list trace;
        for (const auto& rec : r.trace.records) {
          py::dict d;
          d["step"] = rec.step;
          d["domain"] = domain_name(rec.domain);
          d["residual"] = rec.residual;
          d["grad_norm"] = rec.grad_norm;
          trace.append(d);
        }
        return py::make_tuple(r.x_hat, trace);
      },
      py::arg("z_hat"), py::arg("codec"), py::arg("score"), py::arg("schedule"),
      py::arg("mode") = "alternating", py::arg("zeta") = 1.0,
      py::arg("step_rule") = "residual-normalized", py::arg("rho_z") = 1.0,
      py::arg("rho_x") = 1.0, py::arg("max_step") = 0.5, py::arg("seed") = 0);

  // scenario harness
  m.def("builtin_scenarios", &builtin_scenario_names);
  m.def(
      "run_scenario",
      [](const std::string& name_or_path, std::size_t jobs, std::optional<std::uint64_t> seed) {
        ExperimentConfig cfg = resolve_config(name_or_path);
        if (seed) cfg.seed = *seed;
        RunOptions opts;
        opts.jobs = jobs;
        py::list out;
        for (const ReportRow& r : run_scenario(cfg, opts)) out.append(row_to_dict(r));
        return out;
      },
      py::arg("name_or_path"), py::arg("jobs") = 1, py::arg("seed") = std::nullopt);
  m.def("resolved_config", [](const std::string& name_or_path) {
    return resolved_config_text(resolve_config(name_or_path));
  });
}
