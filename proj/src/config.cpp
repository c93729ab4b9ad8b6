#include "addps/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "addps/errors.hpp"

namespace addps {
namespace {

struct BuiltinScenario {
  const char* name;
  const char* text;
};

const BuiltinScenario kBuiltinScenarios[] = {
#include "builtin_scenarios.inc"
};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Strips a trailing comment: '#' at line start or preceded by whitespace.
std::string strip_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' &&
        (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
      return line.substr(0, i);
    }
  }
  return line;
}

class Parser {
 public:
  Parser(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    std::string section;
    while (std::getline(is, line)) {
      ++lineno;
      line = trim(strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(lineno, "unterminated section header");
        section = lower(trim(line.substr(1, line.size() - 2)));
        if (section.empty()) fail(lineno, "empty section name");
        sections_.push_back(section);
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) fail(lineno, "expected key = value");
      const std::string key = lower(trim(line.substr(0, eq)));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail(lineno, "empty key");
      entries_.push_back({section, key, value, lineno});
    }
  }

  struct Entry {
    std::string section, key, value;
    std::size_t lineno;
  };

  const std::vector<Entry>& entries() const { return entries_; }

  [[noreturn]] void fail(std::size_t lineno, const std::string& msg) const {
    raise(Errc::ParseError, origin_ + ":" + std::to_string(lineno) + ": " + msg);
  }

 private:
  std::string origin_;
  std::vector<Entry> entries_;
  std::vector<std::string> sections_;
};

double parse_double(const Parser& p, const Parser::Entry& e, const std::string& token) {
  const std::string t = lower(trim(token));
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    p.fail(e.lineno, "'" + e.key + "': expected a number, got '" + token + "'");
  }
}

double parse_double(const Parser& p, const Parser::Entry& e) { return parse_double(p, e, e.value); }

std::uint64_t parse_u64(const Parser& p, const Parser::Entry& e) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    p.fail(e.lineno, "'" + e.key + "': expected an unsigned integer, got '" + e.value + "'");
  }
}

std::size_t parse_size(const Parser& p, const Parser::Entry& e) {
  return static_cast<std::size_t>(parse_u64(p, e));
}

bool parse_bool(const Parser& p, const Parser::Entry& e) {
  const std::string v = lower(e.value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  p.fail(e.lineno, "'" + e.key + "': expected true/false, got '" + e.value + "'");
}

std::vector<std::string> split_tokens(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vec parse_double_list(const Parser& p, const Parser::Entry& e, const std::string& text) {
  Vec out;
  for (const std::string& tok : split_tokens(text)) out.push_back(parse_double(p, e, tok));
  return out;
}

// rows separated by ';', components by spaces/commas
std::vector<Vec> parse_vector_rows(const Parser& p, const Parser::Entry& e) {
  std::vector<Vec> rows;
  std::string cur;
  std::istringstream is(e.value);
  while (std::getline(is, cur, ';')) {
    const Vec row = parse_double_list(p, e, cur);
    if (!row.empty()) rows.push_back(row);
  }
  if (rows.empty()) p.fail(e.lineno, "'" + e.key + "': expected at least one vector");
  return rows;
}

GuidanceMode parse_mode(const Parser& p, const Parser::Entry& e, const std::string& token) {
  const std::string t = lower(token);
  if (t == "zonly" || t == "z") return GuidanceMode::ZOnly;
  if (t == "xonly" || t == "x") return GuidanceMode::XOnly;
  if (t == "simultaneous") return GuidanceMode::Simultaneous;
  if (t == "alternating") return GuidanceMode::Alternating;
  p.fail(e.lineno, "'" + e.key + "': unknown guidance mode '" + token + "'");
}

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  raise(Errc::ValidationError, field + ": " + msg);
}

void apply_train_key(const Parser& p, const Parser::Entry& e, TrainConfig& tc, bool& known) {
  known = true;
  if (e.key == "learning_rate") {
    tc.learning_rate = parse_double(p, e);
  } else if (e.key == "epochs") {
    tc.epochs = parse_size(p, e);
  } else if (e.key == "batch_size") {
    tc.batch_size = parse_size(p, e);
  } else if (e.key == "optimizer") {
    const std::string v = lower(e.value);
    if (v == "sgd") {
      tc.optimizer = TrainConfig::Optimizer::Sgd;
    } else if (v == "adam") {
      tc.optimizer = TrainConfig::Optimizer::Adam;
    } else {
      p.fail(e.lineno, "'optimizer': expected sgd or adam, got '" + e.value + "'");
    }
  } else {
    known = false;
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.scenario.empty()) invalid("scenario", "must be set");
  if (cfg.channel.power <= 0.0) invalid("channel.power", "must be positive");
  if (cfg.channel.snr_db.empty()) invalid("channel.snr_db", "needs at least one value");
  if (cfg.eval.n_eval < 2) invalid("evaluation.n_eval", "needs at least 2 samples");
  if (cfg.eval.n_seeds < 1) invalid("evaluation.n_seeds", "needs at least 1 trial");
  if (cfg.eval.sw_projections < 1) invalid("evaluation.sw_projections", "needs at least 1");

  if (cfg.source.kind == SourceSpec::Kind::Gaussian) {
    if (cfg.source.dim == 0) invalid("source.dim", "must be positive");
    if (cfg.source.sigma_x2 <= 0.0) invalid("source.sigma_x2", "must be positive");
  } else {
    if (cfg.source.means.empty()) invalid("source.means", "gmm needs component means");
    for (const Vec& m : cfg.source.means) {
      if (m.size() != cfg.source.dim) {
        invalid("source.means", "component dimension does not match source.dim");
      }
    }
    if (cfg.source.component_var <= 0.0) invalid("source.component_var", "must be positive");
    if (!cfg.source.weights.empty() && cfg.source.weights.size() != cfg.source.means.size()) {
      invalid("source.weights", "needs one weight per component");
    }
  }

  if (cfg.eval.n_eval < cfg.source.dim + 1) {
    invalid("evaluation.n_eval", "needs at least dim + 1 samples for the Gaussian fit");
  }

  if (cfg.kind == ScenarioKind::Oracle) {
    if (cfg.source.kind != SourceSpec::Kind::Gaussian) {
      invalid("source.type", "oracle scenarios model a gaussian source");
    }
    if (cfg.oracle.estimators.empty()) invalid("oracle.estimators", "needs at least one");
    for (const std::string& est : cfg.oracle.estimators) {
      if (est != "map" && est != "posterior") {
        invalid("oracle.estimators", "unknown estimator '" + est + "'");
      }
    }
  }

  if (cfg.kind != ScenarioKind::Oracle) {
    if (cfg.diffusion.T < 1) invalid("diffusion.T", "must be at least 1");
    if (!(cfg.diffusion.beta_min > 0.0) || !(cfg.diffusion.beta_min <= cfg.diffusion.beta_max) ||
        !(cfg.diffusion.beta_max < 1.0)) {
      invalid("diffusion.beta", "needs 0 < beta_min <= beta_max < 1");
    }
    if (cfg.diffusion.score == DiffusionSpec::Score::TrainedMlp && !cfg.diffusion.train_inline &&
        cfg.diffusion.checkpoint.empty()) {
      invalid("diffusion.checkpoint", "trained score needs a checkpoint or train_inline");
    }
    if (!cfg.diffusion.checkpoint.empty() && !cfg.diffusion.train_inline &&
        !std::filesystem::exists(cfg.diffusion.checkpoint)) {
      invalid("diffusion.checkpoint", "not found: " + cfg.diffusion.checkpoint);
    }
    if (cfg.diffusion.train_inline && cfg.diffusion.train.learning_rate <= 0.0) {
      invalid("diffusion.learning_rate", "must be positive");
    }
  }

  if (cfg.kind == ScenarioKind::Addps) {
    if (cfg.codec.n != cfg.source.dim) {
      invalid("codec.n", "must equal source.dim");
    }
    if (cfg.codec.k == 0) invalid("codec.k", "must be positive");
    if (2 * cfg.codec.k > cfg.codec.n) {
      invalid("BCR", "bandwidth compression requires k <= N/2 in real-pair accounting (got k=" +
                         std::to_string(cfg.codec.k) + ", N=" + std::to_string(cfg.codec.n) + ")");
    }
    if (cfg.codec.kind == CodecKind::Identity && cfg.codec.n != 2 * cfg.codec.k) {
      invalid("codec.k", "identity codec needs k = n/2 exactly");
    }
    if (!cfg.codec.checkpoint.empty() && !cfg.codec.train_inline &&
        !std::filesystem::exists(cfg.codec.checkpoint)) {
      invalid("codec.checkpoint", "not found: " + cfg.codec.checkpoint);
    }
    if (cfg.codec.kind == CodecKind::Mlp && !cfg.codec.train_inline &&
        cfg.codec.checkpoint.empty()) {
      invalid("codec.checkpoint", "mlp codec needs a checkpoint or train_inline");
    }
    if (cfg.codec.train_inline && cfg.codec.train.learning_rate <= 0.0) {
      invalid("codec.learning_rate", "must be positive");
    }
    if (cfg.guidance.modes.empty()) invalid("guidance.modes", "needs at least one mode");
    if (cfg.guidance.zeta < 0.0) invalid("guidance.zeta", "must be nonnegative");
    if (cfg.guidance.rho_z < 0.0 || cfg.guidance.rho_x < 0.0) {
      invalid("guidance.rho", "must be nonnegative");
    }
    if (cfg.guidance.max_step < 0.0) invalid("guidance.max_step", "must be nonnegative");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  const Parser p(text, origin);
  ExperimentConfig cfg;
  bool codec_n_set = false;

  for (const Parser::Entry& e : p.entries()) {
    if (e.section.empty()) {
      if (e.key == "scenario") {
        cfg.scenario = e.value;
      } else if (e.key == "kind") {
        const std::string v = lower(e.value);
        if (v == "oracle") {
          cfg.kind = ScenarioKind::Oracle;
        } else if (v == "unconditional") {
          cfg.kind = ScenarioKind::Unconditional;
        } else if (v == "addps") {
          cfg.kind = ScenarioKind::Addps;
        } else {
          p.fail(e.lineno, "'kind': expected oracle/unconditional/addps, got '" + e.value + "'");
        }
      } else if (e.key == "seed") {
        cfg.seed = parse_u64(p, e);
      } else {
        p.fail(e.lineno, "unknown top-level key '" + e.key + "'");
      }
    } else if (e.section == "source") {
      if (e.key == "type") {
        const std::string v = lower(e.value);
        if (v == "gaussian") {
          cfg.source.kind = SourceSpec::Kind::Gaussian;
        } else if (v == "gmm") {
          cfg.source.kind = SourceSpec::Kind::Gmm;
        } else {
          p.fail(e.lineno, "'type': expected gaussian or gmm, got '" + e.value + "'");
        }
      } else if (e.key == "dim") {
        cfg.source.dim = parse_size(p, e);
      } else if (e.key == "sigma_x2") {
        cfg.source.sigma_x2 = parse_double(p, e);
      } else if (e.key == "means") {
        cfg.source.means = parse_vector_rows(p, e);
      } else if (e.key == "weights") {
        cfg.source.weights = parse_double_list(p, e, e.value);
      } else if (e.key == "component_var") {
        cfg.source.component_var = parse_double(p, e);
      } else {
        p.fail(e.lineno, "unknown key 'source." + e.key + "'");
      }
    } else if (e.section == "codec") {
      bool known = false;
      apply_train_key(p, e, cfg.codec.train, known);
      if (known) continue;
      if (e.key == "kind") {
        const std::string v = lower(e.value);
        if (v == "identity") {
          cfg.codec.kind = CodecKind::Identity;
        } else if (v == "linear") {
          cfg.codec.kind = CodecKind::Linear;
        } else if (v == "mlp") {
          cfg.codec.kind = CodecKind::Mlp;
        } else {
          p.fail(e.lineno, "'kind': expected identity/linear/mlp, got '" + e.value + "'");
        }
      } else if (e.key == "n") {
        cfg.codec.n = parse_size(p, e);
        codec_n_set = true;
      } else if (e.key == "k") {
        cfg.codec.k = parse_size(p, e);
      } else if (e.key == "checkpoint") {
        cfg.codec.checkpoint = e.value;
      } else if (e.key == "train_inline") {
        cfg.codec.train_inline = parse_bool(p, e);
      } else if (e.key == "train_samples") {
        cfg.codec.train_samples = parse_size(p, e);
      } else if (e.key == "train_snr_db") {
        cfg.codec.train_snr_db = parse_double(p, e);
        cfg.codec.train_snr_set = true;
      } else {
        p.fail(e.lineno, "unknown key 'codec." + e.key + "'");
      }
    } else if (e.section == "channel") {
      if (e.key == "snr_db") {
        cfg.channel.snr_db = parse_double_list(p, e, e.value);
      } else if (e.key == "power") {
        cfg.channel.power = parse_double(p, e);
      } else {
        p.fail(e.lineno, "unknown key 'channel." + e.key + "'");
      }
    } else if (e.section == "diffusion") {
      bool known = false;
      apply_train_key(p, e, cfg.diffusion.train, known);
      if (known) continue;
      if (e.key == "t") {
        cfg.diffusion.T = parse_size(p, e);
      } else if (e.key == "beta_min") {
        cfg.diffusion.beta_min = parse_double(p, e);
      } else if (e.key == "beta_max") {
        cfg.diffusion.beta_max = parse_double(p, e);
      } else if (e.key == "score") {
        const std::string v = lower(e.value);
        if (v == "analytic") {
          cfg.diffusion.score = DiffusionSpec::Score::AnalyticSource;
        } else if (v == "trained") {
          cfg.diffusion.score = DiffusionSpec::Score::TrainedMlp;
        } else {
          p.fail(e.lineno, "'score': expected analytic or trained, got '" + e.value + "'");
        }
      } else if (e.key == "checkpoint") {
        cfg.diffusion.checkpoint = e.value;
      } else if (e.key == "train_inline") {
        cfg.diffusion.train_inline = parse_bool(p, e);
      } else if (e.key == "train_samples") {
        cfg.diffusion.train_samples = parse_size(p, e);
      } else {
        p.fail(e.lineno, "unknown key 'diffusion." + e.key + "'");
      }
    } else if (e.section == "guidance") {
      if (e.key == "modes" || e.key == "mode") {
        cfg.guidance.modes.clear();
        for (const std::string& tok : split_tokens(e.value)) {
          cfg.guidance.modes.push_back(parse_mode(p, e, tok));
        }
        if (cfg.guidance.modes.empty()) p.fail(e.lineno, "'modes': needs at least one mode");
      } else if (e.key == "zeta") {
        cfg.guidance.zeta = parse_double(p, e);
      } else if (e.key == "step_rule") {
        const std::string v = lower(e.value);
        if (v == "constant") {
          cfg.guidance.step_rule = StepRule::Constant;
        } else if (v == "residual-normalized" || v == "residual_normalized") {
          cfg.guidance.step_rule = StepRule::ResidualNormalized;
        } else {
          p.fail(e.lineno, "'step_rule': expected constant or residual-normalized");
        }
      } else if (e.key == "parity") {
        const std::string v = lower(e.value);
        if (v == "even-z" || v == "even_z" || v == "even") {
          cfg.guidance.parity = Parity::EvenZ;
        } else if (v == "odd-z" || v == "odd_z" || v == "odd") {
          cfg.guidance.parity = Parity::OddZ;
        } else {
          p.fail(e.lineno, "'parity': expected even-z or odd-z");
        }
      } else if (e.key == "rho_z") {
        cfg.guidance.rho_z = parse_double(p, e);
      } else if (e.key == "rho_x") {
        cfg.guidance.rho_x = parse_double(p, e);
      } else if (e.key == "max_step") {
        cfg.guidance.max_step = parse_double(p, e);
      } else if (e.key == "jacobian") {
        const std::string v = lower(e.value);
        if (v == "full-chain" || v == "full_chain" || v == "full") {
          cfg.guidance.jacobian = ScoreJacobian::FullChain;
        } else if (v == "decoupled") {
          cfg.guidance.jacobian = ScoreJacobian::Decoupled;
        } else {
          p.fail(e.lineno, "'jacobian': expected full-chain or decoupled");
        }
      } else {
        p.fail(e.lineno, "unknown key 'guidance." + e.key + "'");
      }
    } else if (e.section == "evaluation") {
      if (e.key == "n_eval") {
        cfg.eval.n_eval = parse_size(p, e);
      } else if (e.key == "n_seeds") {
        cfg.eval.n_seeds = parse_size(p, e);
      } else if (e.key == "sw_projections") {
        cfg.eval.sw_projections = parse_size(p, e);
      } else if (e.key == "metrics") {
        cfg.eval.metrics = split_tokens(lower(e.value));
      } else {
        p.fail(e.lineno, "unknown key 'evaluation." + e.key + "'");
      }
    } else if (e.section == "oracle") {
      if (e.key == "estimators") {
        cfg.oracle.estimators = split_tokens(lower(e.value));
      } else {
        p.fail(e.lineno, "unknown key 'oracle." + e.key + "'");
      }
    } else {
      p.fail(e.lineno, "unknown section [" + e.section + "]");
    }
  }

  // fill dependent defaults
  if (cfg.source.kind == SourceSpec::Kind::Gmm && !cfg.source.means.empty()) {
    cfg.source.dim = cfg.source.means.front().size();
    if (cfg.source.weights.empty()) {
      cfg.source.weights.assign(cfg.source.means.size(),
                                1.0 / static_cast<double>(cfg.source.means.size()));
    }
  }
  if (!codec_n_set) cfg.codec.n = cfg.source.dim;
  if (!cfg.codec.train_snr_set && !cfg.channel.snr_db.empty()) {
    cfg.codec.train_snr_db = cfg.channel.snr_db.front();
  }

  if (const char* env = std::getenv("ADDPS_SEED")) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      raise(Errc::ParseError, std::string("ADDPS_SEED: not an unsigned integer: '") + env + "'");
    }
  }

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) raise(Errc::ValidationError, "config file not found: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), path);
}

namespace {

std::string fmt_double(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  return nlohmann::json(v).dump();  // shortest exact representation
}

std::string fmt_list(const Vec& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt_double(v[i]);
  }
  return out;
}

const char* kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Oracle: return "oracle";
    case ScenarioKind::Unconditional: return "unconditional";
    case ScenarioKind::Addps: return "addps";
  }
  return "?";
}

const char* codec_kind_name(CodecKind k) {
  switch (k) {
    case CodecKind::Identity: return "identity";
    case CodecKind::Linear: return "linear";
    case CodecKind::Mlp: return "mlp";
  }
  return "?";
}

void append_train(std::ostringstream& os, const TrainConfig& tc) {
  os << "learning_rate = " << fmt_double(tc.learning_rate) << "\n"
     << "epochs = " << tc.epochs << "\n"
     << "batch_size = " << tc.batch_size << "\n"
     << "optimizer = " << (tc.optimizer == TrainConfig::Optimizer::Adam ? "adam" : "sgd") << "\n";
}

}  // namespace

std::string resolved_config_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "scenario = " << cfg.scenario << "\n"
     << "kind = " << kind_name(cfg.kind) << "\n"
     << "seed = " << cfg.seed << "\n";

  os << "[source]\n";
  os << "type = " << (cfg.source.kind == SourceSpec::Kind::Gaussian ? "gaussian" : "gmm") << "\n";
  os << "dim = " << cfg.source.dim << "\n";
  if (cfg.source.kind == SourceSpec::Kind::Gaussian) {
    os << "sigma_x2 = " << fmt_double(cfg.source.sigma_x2) << "\n";
  } else {
    os << "means = ";
    for (std::size_t i = 0; i < cfg.source.means.size(); ++i) {
      if (i) os << " ; ";
      os << fmt_list(cfg.source.means[i]);
    }
    os << "\n";
    os << "weights = " << fmt_list(cfg.source.weights) << "\n";
    os << "component_var = " << fmt_double(cfg.source.component_var) << "\n";
  }

  os << "[channel]\n"
     << "snr_db = " << fmt_list(cfg.channel.snr_db) << "\n"
     << "power = " << fmt_double(cfg.channel.power) << "\n";

  if (cfg.kind == ScenarioKind::Oracle) {
    os << "[oracle]\n" << "estimators =";
    for (const std::string& est : cfg.oracle.estimators) os << ' ' << est;
    os << "\n";
  }

  if (cfg.kind == ScenarioKind::Addps) {
    os << "[codec]\n"
       << "kind = " << codec_kind_name(cfg.codec.kind) << "\n"
       << "n = " << cfg.codec.n << "\n"
       << "k = " << cfg.codec.k << "\n";
    if (!cfg.codec.checkpoint.empty()) os << "checkpoint = " << cfg.codec.checkpoint << "\n";
    os << "train_inline = " << (cfg.codec.train_inline ? "true" : "false") << "\n";
    if (cfg.codec.train_inline) {
      os << "train_samples = " << cfg.codec.train_samples << "\n"
         << "train_snr_db = " << fmt_double(cfg.codec.train_snr_db) << "\n";
      append_train(os, cfg.codec.train);
    }
  }

  if (cfg.kind != ScenarioKind::Oracle) {
    os << "[diffusion]\n"
       << "T = " << cfg.diffusion.T << "\n"
       << "beta_min = " << fmt_double(cfg.diffusion.beta_min) << "\n"
       << "beta_max = " << fmt_double(cfg.diffusion.beta_max) << "\n"
       << "score = "
       << (cfg.diffusion.score == DiffusionSpec::Score::AnalyticSource ? "analytic" : "trained")
       << "\n";
    if (!cfg.diffusion.checkpoint.empty()) {
      os << "checkpoint = " << cfg.diffusion.checkpoint << "\n";
    }
    if (cfg.diffusion.score == DiffusionSpec::Score::TrainedMlp) {
      os << "train_inline = " << (cfg.diffusion.train_inline ? "true" : "false") << "\n";
      if (cfg.diffusion.train_inline) {
        os << "train_samples = " << cfg.diffusion.train_samples << "\n";
        append_train(os, cfg.diffusion.train);
      }
    }
  }

  if (cfg.kind == ScenarioKind::Addps) {
    os << "[guidance]\n" << "modes =";
    for (GuidanceMode m : cfg.guidance.modes) os << ' ' << lower(mode_name(m));
    os << "\n"
       << "zeta = " << fmt_double(cfg.guidance.zeta) << "\n"
       << "step_rule = "
       << (cfg.guidance.step_rule == StepRule::Constant ? "constant" : "residual-normalized")
       << "\n"
       << "parity = " << (cfg.guidance.parity == Parity::EvenZ ? "even-z" : "odd-z") << "\n"
       << "rho_z = " << fmt_double(cfg.guidance.rho_z) << "\n"
       << "rho_x = " << fmt_double(cfg.guidance.rho_x) << "\n"
       << "max_step = " << fmt_double(cfg.guidance.max_step) << "\n"
       << "jacobian = "
       << (cfg.guidance.jacobian == ScoreJacobian::FullChain ? "full-chain" : "decoupled") << "\n";
  }

  os << "[evaluation]\n"
     << "n_eval = " << cfg.eval.n_eval << "\n"
     << "n_seeds = " << cfg.eval.n_seeds << "\n"
     << "sw_projections = " << cfg.eval.sw_projections << "\n"
     << "metrics =";
  for (const std::string& m : cfg.eval.metrics) os << ' ' << m;
  os << "\n";
  return os.str();
}

std::string builtin_scenario_text(const std::string& name) {
  for (const BuiltinScenario& s : kBuiltinScenarios) {
    if (name == s.name) return s.text;
  }
  std::string known;
  for (const BuiltinScenario& s : kBuiltinScenarios) {
    if (!known.empty()) known += ", ";
    known += s.name;
  }
  raise(Errc::ValidationError, "unknown scenario '" + name + "' (builtins: " + known + ")");
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> out;
  for (const BuiltinScenario& s : kBuiltinScenarios) out.emplace_back(s.name);
  return out;
}

ExperimentConfig resolve_config(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) return load_config(name_or_path);
  return parse_config_text(builtin_scenario_text(name_or_path), "builtin:" + name_or_path);
}

}  // namespace addps
