#include "filterstab/cli.h"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "filterstab/channels.h"
#include "filterstab/closedform_walk.h"
#include "filterstab/diagnostics.h"
#include "filterstab/error.h"
#include "filterstab/model_io.h"
#include "filterstab/observability.h"

namespace filterstab {
namespace {

using nlohmann::json;

std::string FormatDouble(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

json MatrixToJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json VectorToJson(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Prior specs given as a path to an existing JSON file are read from disk.
json ResolveSpec(const json& spec) {
  if (spec.is_string()) {
    const std::string text = spec.get<std::string>();
    if (!text.empty() && (text.front() == '{' || text.front() == '[')) {
      try {
        return json::parse(text);
      } catch (const json::parse_error& e) {
        throw ValidationError(std::string("prior spec: ") + e.what());
      }
    }
    std::error_code ec;
    if (text != "uniform" && std::filesystem::is_regular_file(text, ec)) {
      return ReadJsonFile(text);
    }
  }
  return spec;
}

class Output {
 public:
  Output(const ExperimentConfig& config, std::ostream& fallback)
      : path_(config.output_path), fallback_(fallback) {}

  std::ostringstream& stream() { return buffer_; }

  void Flush() {
    if (path_.empty()) {
      fallback_ << buffer_.str();
      fallback_.flush();
      return;
    }
    std::ofstream file(path_, std::ios::binary | std::ios::trunc);
    if (!file) throw ValidationError("cannot write " + path_);
    file << buffer_.str();
  }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ostringstream buffer_;
};

json Meta(const ExperimentConfig& config) {
  json meta;
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["command"] = config.command;
  meta["config_digest"] = Sha256Hex(config.ToJson().dump());
  if (!config.model_path.empty()) {
    meta["model_digest"] = Sha256Hex(ReadTextFile(config.model_path));
  }
  return meta;
}

std::string ResolveFormat(const ExperimentConfig& config,
                          const std::string& fallback,
                          std::initializer_list<const char*> allowed) {
  const std::string format = config.format.empty() ? fallback : config.format;
  for (const char* a : allowed) {
    if (format == a) return format;
  }
  throw ValidationError("format \"" + format + "\" is not supported by " +
                        config.command);
}

void RequireModelPath(const ExperimentConfig& config) {
  if (config.model_path.empty()) {
    throw ValidationError(config.command + ": --model is required");
  }
}

// --------------------------------------------------------------------------

void RunObservability(const ExperimentConfig& config, Output& output) {
  RequireModelPath(config);
  const FinitePomp model = LoadModel(config.model_path);
  ResolveFormat(config, "json", {"json"});
  const ObservabilityReport report =
      ObservabilityVerdict(model, config.nmax, config.tol);
  json doc;
  doc["meta"] = Meta(config);
  doc["n"] = model.num_states();
  doc["K"] = model.num_outputs();
  doc["tol"] = report.tol;
  doc["A"] = MatrixToJson(report.one_step);
  doc["M"] = MatrixToJson(report.marginal);
  doc["joint"] = {{"N", report.joint_steps},
                  {"matrix", MatrixToJson(*report.joint)}};
  doc["rank_A"] = report.rank_one_step;
  doc["rank_M"] = report.rank_marginal;
  doc["rank_joint"] = report.rank_joint;
  doc["marginal_inconclusive"] = report.marginal_inconclusive;
  doc["verdict"] = report.VerdictString();
  output.stream() << doc.dump(2) << "\n";
}

void RunMerging(const ExperimentConfig& config, Output& output) {
  RequireModelPath(config);
  const FinitePomp model = LoadModel(config.model_path);
  const std::string format = ResolveFormat(config, "csv", {"csv", "json"});
  const FiniteDist mu = ParseFinitePrior(ResolveSpec(config.mu),
                                         model.num_states());
  const FiniteDist nu = ParseFinitePrior(ResolveSpec(config.nu),
                                         model.num_states());
  MergingOptions options;
  options.horizon = config.horizon;
  options.trials = config.trials;
  options.seed = config.seed;
  options.threads = config.threads;
  const MergingReport report = MergingExperiment(model, mu, nu, options);

  json meta = Meta(config);
  meta["seed"] = report.seed;
  meta["trials"] = report.trials;
  meta["horizon"] = report.horizon;
  meta["bank_version"] = report.bank_version;
  meta["weak_gap_note"] =
      "max over a finite test bank; a lower bound on the weak distance";
  meta["tv_convention"] = "sum |p - q|, range [0, 2]";

  if (format == "json") {
    json rows = json::array();
    for (const MergingRow& r : report.rows) {
      rows.push_back({{"step", r.step},
                      {"mean_tv_filter", r.mean_tv_filter},
                      {"se_tv_filter", r.se_tv_filter},
                      {"mean_tv_predictor", r.mean_tv_predictor},
                      {"mean_kl_filter", r.mean_kl_filter},
                      {"se_kl_filter", r.se_kl_filter},
                      {"weak_gap", r.weak_gap},
                      {"bl_gap", r.bl_gap},
                      {"mean_tv_pred_meas", r.mean_tv_pred_meas}});
    }
    output.stream() << json{{"meta", meta}, {"rows", rows}}.dump(2) << "\n";
    return;
  }
  auto& os = output.stream();
  os << "# " << meta.dump() << "\n";
  os << "step,mean_tv_filter,se_tv_filter,mean_tv_predictor,mean_kl_filter,"
        "se_kl_filter,weak_gap,bl_gap,mean_tv_pred_meas\n";
  for (const MergingRow& r : report.rows) {
    os << r.step << ',' << FormatDouble(r.mean_tv_filter) << ','
       << FormatDouble(r.se_tv_filter) << ','
       << FormatDouble(r.mean_tv_predictor) << ','
       << FormatDouble(r.mean_kl_filter) << ','
       << FormatDouble(r.se_kl_filter) << ',' << FormatDouble(r.weak_gap)
       << ',' << FormatDouble(r.bl_gap) << ','
       << FormatDouble(r.mean_tv_pred_meas) << "\n";
  }
}

void RunWalk(const ExperimentConfig& config, Output& output) {
  const std::string format = ResolveFormat(config, "csv", {"csv", "json"});
  const ContinuousPrior mu = ContinuousPriorFromJson(ResolveSpec(config.mu));
  const ContinuousPrior nu = ContinuousPriorFromJson(ResolveSpec(config.nu));
  const WalkReport report = CfDualRun(mu, nu, config.horizon, config.trials,
                                      config.seed, config.threads);
  json meta = Meta(config);
  meta["seed"] = config.seed;
  meta["trials"] = config.trials;
  meta["horizon"] = config.horizon;
  meta["gap"] = "|p_mu - p_nu|; filter TV distance is twice the gap";
  if (format == "json") {
    json rows = json::array();
    for (const WalkStepStats& r : report.rows) {
      rows.push_back({{"step", r.step},
                      {"mean_gap", r.mean_gap},
                      {"median_gap", r.median_gap},
                      {"max_gap", r.max_gap}});
    }
    output.stream() << json{{"meta", meta}, {"rows", rows}}.dump(2) << "\n";
    return;
  }
  auto& os = output.stream();
  os << "# " << meta.dump() << "\n";
  os << "step,mean_gap,median_gap,max_gap\n";
  for (const WalkStepStats& r : report.rows) {
    os << r.step << ',' << FormatDouble(r.mean_gap) << ','
       << FormatDouble(r.median_gap) << ',' << FormatDouble(r.max_gap) << "\n";
  }
}

void RunHarris(const ExperimentConfig& config, Output& output) {
  RequireModelPath(config);
  const std::string format = ResolveFormat(config, "csv", {"csv", "json"});
  // Either a full model file or a bare {"T": [[..]]}.
  const json doc = ReadJsonFile(config.model_path);
  Matrix transition;
  if (doc.contains("H")) {
    transition = ModelFromJson(doc).transition();
  } else {
    if (!doc.contains("T") || !doc.at("T").is_array()) {
      throw ValidationError(config.model_path + ": missing field \"T\"");
    }
    const auto rows = doc.at("T").get<std::vector<std::vector<double>>>();
    transition.resize(rows.size(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.size()) {
        throw DimensionMismatch("T must be square");
      }
      for (std::size_t c = 0; c < rows.size(); ++c) transition(r, c) = rows[r][c];
    }
  }
  const FiniteDist initial = ParseFinitePrior(
      ResolveSpec(config.mu), static_cast<int>(transition.rows()));
  const HarrisCurve curve =
      HarrisRelativeEntropyCurve(transition, initial, config.horizon);
  json meta = Meta(config);
  meta["invariant"] = VectorToJson(curve.invariant.probs());
  meta["monotone"] = curve.monotone;
  meta["first_below_1e-8"] =
      curve.first_below_floor ? json(*curve.first_below_floor) : json(nullptr);
  meta["units"] = "nats";
  if (format == "json") {
    output.stream() << json{{"meta", meta}, {"divergence", curve.divergence}}
                           .dump(2)
                    << "\n";
    return;
  }
  auto& os = output.stream();
  os << "# " << meta.dump() << "\n";
  os << "step,divergence\n";
  for (std::size_t t = 0; t < curve.divergence.size(); ++t) {
    os << t << ',' << FormatDouble(curve.divergence[t]) << "\n";
  }
}

std::vector<double> LinearGrid(double lo, double hi, int count) {
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) {
    grid[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  }
  return grid;
}

void RunChannelsVerify(const ExperimentConfig& config, Output& output) {
  RequireModelPath(config);
  ResolveFormat(config, "json", {"json"});
  const json doc = ReadJsonFile(config.model_path);
  if (!doc.contains("channel") || !doc.contains("target")) {
    throw ValidationError(config.model_path +
                          ": needs \"channel\" and \"target\"");
  }
  const ChannelSpec channel = ChannelFromJson(doc.at("channel"));
  const RealFunction target = FunctionFromJson(doc.at("target"));
  const int grid_points = doc.value("grid_points", 201);
  if (grid_points < 1) throw ValidationError("grid_points must be >= 1");
  auto domain = [&]() {
    if (!doc.contains("domain") || !doc.at("domain").is_array() ||
        doc.at("domain").size() != 2) {
      throw ValidationError(config.model_path +
                            ": needs \"domain\": [lo, hi]");
    }
    return doc.at("domain").get<std::vector<double>>();
  };

  json result;
  result["meta"] = Meta(config);
  const std::string kind = doc.at("channel").at("kind").get<std::string>();
  result["kind"] = kind;
  double residual = 0.0;
  double declared = 0.0;
  std::optional<double> sup_norm;

  if (kind == "affine") {
    const auto& affine = std::get<AffineChannel>(channel);
    if (!doc.at("target").contains("poly")) {
      throw ValidationError("affine verification needs a polynomial target");
    }
    const auto beta_vec = doc.at("target").at("poly").get<std::vector<double>>();
    const Vector beta = Eigen::Map<const Vector>(beta_vec.data(), beta_vec.size());
    const int degree = static_cast<int>(beta.size()) - 1;
    const MomentMatrix moments =
        AffineMomentMatrix(AffineMomentOracle(affine), degree);
    const Vector alpha = AffineSolve(moments, beta);
    const auto d = domain();
    const auto grid = LinearGrid(d[0], d[1], grid_points);
    const RealFunction g = [alpha](double y) { return EvaluatePolynomial(alpha, y); };
    residual = VerifyS(g, channel, target, grid);
    declared = 1e-6;
    result["moment_matrix"] = MatrixToJson(moments.entries);
    result["g_coefficients"] = VectorToJson(alpha);
  } else if (kind == "indicator") {
    const auto& indicator = std::get<IndicatorChannel>(channel);
    const auto d = domain();
    IndicatorOptions options;
    options.resolution = doc.value("resolution", 10000);
    if (doc.contains("c")) options.c = doc.at("c").get<double>();
    const PiecewiseG g = IndicatorG(
        target, d[0], d[1],
        [&](double z) { return indicator.noise.Cdf(z); }, options);
    residual = VerifyS(g, channel, target, LinearGrid(d[0], d[1], grid_points));
    declared = 1e-4;
    sup_norm = g.sup_norm();
    result["c"] = g(d[0]);
  } else if (kind == "two_point") {
    const int half_width = doc.value("M", 1);
    const double center = doc.value("a", 0.0);
    const PiecewiseG g = TelescopingG(target, half_width, center);
    const double lo = center - half_width;
    const double hi = center + half_width;
    const RealFunction banded = [&](double x) {
      return (x >= lo && x <= hi) ? target(x) : 0.0;
    };
    residual = VerifyS(g, channel, banded,
                       LinearGrid(lo - 3.0, hi + 3.0, grid_points));
    declared = 1e-10;
    sup_norm = g.sup_norm();
    double f_sup = 0.0;
    for (double x : LinearGrid(lo, hi, 100 * grid_points)) {
      f_sup = std::max(f_sup, std::abs(target(x)));
    }
    result["band"] = {lo, hi};
    result["bound_4M_f_sup"] = 4.0 * half_width * f_sup;
  } else {
    const auto& direct = std::get<DirectChannel>(channel);
    RealFunction h_inverse;
    if (doc.contains("h_inverse")) {
      h_inverse = FunctionFromJson(doc.at("h_inverse"));
    } else if (doc.at("channel").at("h").contains("xs")) {
      const auto& h = doc.at("channel").at("h");
      const GridFunction inverse =
          GridFunction(h.at("xs").get<std::vector<double>>(),
                       h.at("ys").get<std::vector<double>>())
              .Inverse();
      h_inverse = [inverse](double y) { return inverse(y); };
    } else {
      throw ValidationError("direct channel needs \"h_inverse\" or a grid h");
    }
    const auto d = domain();
    residual = VerifyS(DirectG(target, h_inverse), channel, target,
                       LinearGrid(d[0], d[1], grid_points));
    declared = 1e-12;
    (void)direct;
  }
  result["residual"] = residual;
  result["declared_epsilon"] = declared;
  if (sup_norm) result["sup_norm_g"] = *sup_norm;
  result["pass"] = residual < declared;
  output.stream() << result.dump(2) << "\n";
}

struct GoldenCheck {
  std::string name;
  bool pass;
  std::string detail;
};

bool RunReproducePaper(const ExperimentConfig& config, Output& output) {
  const std::string format = ResolveFormat(config, "text", {"text", "json"});
  const FinitePomp model = FourStateExample();
  const ObservabilityReport report = ObservabilityVerdict(model, 3, config.tol);
  const Matrix joint = JointMatrix(model, 2);

  Matrix golden_a(4, 2);
  golden_a << 0, 1, 0, 1, 1, 0, 1, 0;
  Matrix golden_t(4, 4);
  golden_t << 0, 0.25, 0.25, 0.5, 0.5, 0, 0, 0.5, 0, 0.25, 0.25, 0.5, 0.5, 0,
      0, 0.5;
  Matrix golden_m(4, 8);
  // clang-format off
  golden_m << 0, 1, 0.75, 0.25, 0.5625, 0.4375, 0.609375, 0.390625,
              0, 1, 0.50, 0.50, 0.6250, 0.3750, 0.593750, 0.406250,
              1, 0, 0.75, 0.25, 0.5625, 0.4375, 0.609375, 0.390625,
              1, 0, 0.50, 0.50, 0.6250, 0.3750, 0.593750, 0.406250;
  // clang-format on
  Matrix golden_joint(4, 4);
  // clang-format off
  golden_joint << 0,    0,    0.75, 0.25,
                  0,    0,    0.5,  0.5,
                  0.75, 0.25, 0,    0,
                  0.5,  0.5,  0,    0;
  // clang-format on

  std::vector<GoldenCheck> checks;
  auto matrix_check = [&](const std::string& name, const Matrix& got,
                          const Matrix& want) {
    const bool same_shape = got.rows() == want.rows() && got.cols() == want.cols();
    const double diff =
        same_shape ? (got - want).cwiseAbs().maxCoeff()
                   : std::numeric_limits<double>::infinity();
    checks.push_back({name, diff <= 1e-12, "max |diff| = " + FormatDouble(diff)});
  };
  matrix_check("A", report.one_step, golden_a);
  matrix_check("T", model.transition(), golden_t);
  matrix_check("M", report.marginal, golden_m);
  checks.push_back({"rank(M) = 3", report.rank_marginal == 3,
                    "rank " + std::to_string(report.rank_marginal)});
  matrix_check("joint N=2", joint, golden_joint);
  const int joint_rank = NumericRank(joint, config.tol);
  checks.push_back({"rank(joint N=2) = 4", joint_rank == 4,
                    "rank " + std::to_string(joint_rank)});
  checks.push_back({"verdict = NStepObservable(2)",
                    report.VerdictString() == "NStepObservable(2)",
                    report.VerdictString()});
  checks.push_back({"marginal test inconclusive", report.marginal_inconclusive,
                    report.marginal_inconclusive ? "yes" : "no"});

  bool all = true;
  for (const auto& c : checks) all = all && c.pass;
  const json meta = Meta(config);
  if (format == "json") {
    json doc;
    doc["meta"] = meta;
    doc["A"] = MatrixToJson(report.one_step);
    doc["T"] = MatrixToJson(model.transition());
    doc["M"] = MatrixToJson(report.marginal);
    doc["joint"] = MatrixToJson(joint);
    doc["rank_M"] = report.rank_marginal;
    doc["rank_joint"] = joint_rank;
    doc["verdict"] = report.VerdictString();
    json list = json::array();
    for (const auto& c : checks) {
      list.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    doc["checks"] = list;
    doc["all_pass"] = all;
    output.stream() << doc.dump(2) << "\n";
    return all;
  }
  auto& os = output.stream();
  os << "# " << meta.dump() << "\n";
  auto print = [&](const char* name, const Matrix& m) {
    os << name << " (" << m.rows() << "x" << m.cols() << ")\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      os << " ";
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << ' ' << FormatDouble(m(r, c));
      os << "\n";
    }
  };
  print("A", report.one_step);
  print("T", model.transition());
  print("M", report.marginal);
  print("joint N=2 (column = 2*y1 + y2)", joint);
  for (const auto& c : checks) {
    os << (c.pass ? "PASS " : "FAIL ") << c.name << " [" << c.detail << "]\n";
  }
  return all;
}

}  // namespace

json ExperimentConfig::ToJson() const {
  return json{{"command", command}, {"model", model_path}, {"mu", mu},
              {"nu", nu},           {"horizon", horizon},  {"trials", trials},
              {"seed", seed},       {"tol", tol},          {"nmax", nmax},
              {"format", format}};
}

void ApplyConfigJson(const json& doc, ExperimentConfig& config) {
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    auto fail = [&](const char* expected) {
      throw ValidationError("config field \"" + key + "\": expected " +
                            expected);
    };
    if (key == "command") {
      if (!value.is_string()) fail("a string");
      config.command = value.get<std::string>();
    } else if (key == "model") {
      if (!value.is_string()) fail("a path string");
      config.model_path = value.get<std::string>();
    } else if (key == "mu") {
      config.mu = value;
    } else if (key == "nu") {
      config.nu = value;
    } else if (key == "horizon" || key == "trials" || key == "nmax" ||
               key == "threads") {
      if (!value.is_number_integer()) fail("an integer");
      const int v = value.get<int>();
      if (key == "horizon") config.horizon = v;
      if (key == "trials") config.trials = v;
      if (key == "nmax") config.nmax = v;
      if (key == "threads") config.threads = v;
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) fail("a non-negative integer");
      config.seed = value.get<std::uint64_t>();
    } else if (key == "tol") {
      if (!value.is_number()) fail("a number");
      config.tol = value.get<double>();
    } else if (key == "out") {
      if (!value.is_string()) fail("a path string");
      config.output_path = value.get<std::string>();
    } else if (key == "format") {
      if (!value.is_string()) fail("a string");
      config.format = value.get<std::string>();
    } else {
      throw ValidationError("config: unknown field \"" + key + "\"");
    }
  }
}

std::string Sha256Hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length,
                 EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Filter stability experiments for partially observed Markov "
               "processes",
               kToolName};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, model, mu, nu, out_path, format;
  int horizon = 0, trials = 0, nmax = 0, threads = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  app.add_option("--config", config_path, "JSON config file (flags override)");
  app.add_option("--model", model, "model / channel spec file");
  app.add_option("--mu", mu, "true prior spec");
  app.add_option("--nu", nu, "filter prior spec");
  app.add_option("--horizon", horizon, "last time step (harris: steps)");
  app.add_option("--trials", trials, "Monte Carlo trials");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--tol", tol, "relative rank tolerance");
  app.add_option("--nmax", nmax, "largest N for the joint-matrix search");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--format", format, "csv | json (reproduce-paper: text | json)");

  for (const char* name : {"observability", "merging", "walk", "harris",
                           "channels-verify", "reproduce-paper"}) {
    app.add_subcommand(name);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << kToolName << ": " << e.what() << "\n";
    return 1;
  }

  ExperimentConfig config;
  try {
    if (!config_path.empty()) ApplyConfigJson(ReadJsonFile(config_path), config);
    config.command = app.get_subcommands().front()->get_name();
    auto given = [&](const char* flag) { return app.count(flag) > 0; };
    auto as_spec = [](const std::string& s) { return json(s); };
    if (given("--model")) config.model_path = model;
    if (given("--mu")) config.mu = as_spec(mu);
    if (given("--nu")) config.nu = as_spec(nu);
    if (given("--horizon")) config.horizon = horizon;
    if (given("--trials")) config.trials = trials;
    if (given("--seed")) config.seed = seed;
    if (given("--tol")) config.tol = tol;
    if (given("--nmax")) config.nmax = nmax;
    if (given("--threads")) config.threads = threads;
    if (given("--out")) config.output_path = out_path;
    if (given("--format")) config.format = format;
    if (config.horizon < 0) throw ValidationError("horizon must be >= 0");
    if (config.trials < 1) throw ValidationError("trials must be >= 1");
    if (!(config.tol > 0.0)) throw ValidationError("tol must be > 0");
    if (config.threads < 1) throw ValidationError("threads must be >= 1");

    Output output(config, out);
    bool ok = true;
    if (config.command == "observability") {
      RunObservability(config, output);
    } else if (config.command == "merging") {
      RunMerging(config, output);
    } else if (config.command == "walk") {
      RunWalk(config, output);
    } else if (config.command == "harris") {
      RunHarris(config, output);
    } else if (config.command == "channels-verify") {
      RunChannelsVerify(config, output);
    } else {
      ok = RunReproducePaper(config, output);
    }
    output.Flush();
    return ok ? 0 : 2;
  } catch (const ValidationError& e) {
    err << kToolName << ": " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << kToolName << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << kToolName << " (" << config.command << "): " << e.what() << "\n";
    return 2;
  }
}

}  // namespace filterstab
