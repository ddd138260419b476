#include "ifpsync/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ifpsync/certify.hpp"
#include "ifpsync/error.hpp"
#include "ifpsync/io.hpp"
#include "ifpsync/scenarios.hpp"
#include "ifpsync/selftest.hpp"

namespace ifpsync::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

/// Command-line overrides of the config block.
struct Overrides {
  std::optional<double> dt, t_final, tol;

  void apply(netsim::SimConfig& c) const {
    if (dt) c.dt = *dt;
    if (t_final) c.t_final = *t_final;
    if (tol) c.tol = *tol;
  }
  json to_json() const {
    json out = json::object();
    if (dt) out["dt"] = *dt;
    if (t_final) out["t_final"] = *t_final;
    if (tol) out["tol"] = *tol;
    return out;
  }
};

/// What a run asked for, written next to its artifacts.
struct RunManifest {
  std::string command;
  std::string input_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  Overrides overrides;

  json to_json() const {
    return {{"command", command},
            {"input_path", input_path},
            {"output_dir", output_dir},
            {"seed", seed},
            {"overrides", overrides.to_json()}};
  }
};

struct Artifact {
  std::string name;  // relative to the output directory
  std::string content;
};

struct Outcome {
  json report;
  std::vector<Artifact> files;
  int code = kOk;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string default_output_dir() {
  if (const char* env = std::getenv("IFPSYNC_OUTPUT_DIR"); env && *env) return env;
  return "ifpsync_out";
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Refuses to touch existing files unless forced, then writes everything.
void write_artifacts(const fs::path& dir, const std::vector<Artifact>& files, bool force) {
  if (!force) {
    for (const auto& f : files) {
      if (fs::exists(dir / f.name)) {
        throw Error(ErrorCode::InvalidArgument,
                    "'" + (dir / f.name).string() + "' exists; pass --force to overwrite");
      }
    }
  }
  for (const auto& f : files) {
    const fs::path path = dir / f.name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << f.content;
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  }
}

int code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NotCertifiable: return kNotCertifiable;
    case ErrorCode::CertificateFailed:
    case ErrorCode::MuTauViolation: return kCertificateFailed;
    default: return kInputError;
  }
}

int status_code(netsim::SimStatus s) { return s == netsim::SimStatus::diverged ? kDiverged : kOk; }

std::string csv_of(const netsim::SimResult& r) {
  std::ostringstream os;
  io::write_csv(os, r);
  return os.str();
}

std::string svg_of(const netsim::SimResult& r, const std::string& title) {
  std::ostringstream os;
  io::write_svg(os, r, title);
  return os.str();
}

// --- ifp ---------------------------------------------------------------------------

int cmd_ifp(const std::string& input, std::ostream& out) {
  const auto tf = io::tf_from_json(read_json_file(input));
  json report;
  try {
    const auto cert = passivity::ifp_index(tf);
    report["certificate"] = io::to_json(cert);
    report["conditions"] = io::to_json(passivity::prl_conditions(tf, cert.alpha));
    out << dump(report);
    return kOk;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotCertifiable) throw;
    report["certificate"] = nullptr;
    report["error"] = e.what();
    report["conditions"] = io::to_json(passivity::prl_conditions(tf, 0.0));
    out << dump(report);
    return kNotCertifiable;
  }
}

// --- certify -----------------------------------------------------------------------

/// IFP index of one agent entry: a transfer function or a typed agent.
passivity::IfpCertificate agent_certificate(const json& a) {
  const std::string type = a.value("type", std::string("lti"));
  if (type == "lti") return passivity::ifp_index(io::tf_from_json(a));
  if (type == "vehicle") {
    const double tau = a.at("tau").get<double>(), mu = a.at("mu").get<double>();
    return passivity::ifp_index({passivity::Polynomial{1.0}, passivity::Polynomial{0.0, mu, 1.0, tau}});
  }
  if (type == "delayed_integrator") {
    // Re e^{-i w T} / (i w) = -sin(w T) / w has infimum -T as w -> 0.
    passivity::IfpCertificate c;
    c.alpha = a.value("delay", 0.0);
    c.raw_infimum = -c.alpha;
    c.method = passivity::IfpMethod::closed_form;
    return c;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown agent type '" + type + "'");
}

int cmd_certify_platoon(const json& j, std::ostream& out) {
  const auto gains = io::gains_from_json(j.at("gains"));
  json report{{"theorem4", io::to_json(certify::check_theorem4(gains))}};
  bool passes = report["theorem4"]["passes"].get<bool>();
  try {
    scenarios::PlatoonSpec spec = scenarios::PlatoonSpec::at_goal(
        gains, Eigen::VectorXd::Ones(gains.size()), 20.0, 0.0);
    const auto build = scenarios::build_platoon(spec);
    report["alphas"] = io::to_json(build.alphas);
    report["b"] = io::to_json(build.b);
    report["theorem2"] = io::to_json(build.theorem2);
    passes = passes && build.theorem2.passes;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MuTauViolation) throw;
    report["theorem2"] = nullptr;
    report["error"] = e.what();
    passes = false;
  }
  report["passes"] = passes;
  out << dump(report);
  return passes ? kOk : kCertificateFailed;
}

int cmd_certify(const std::string& input, bool reference, std::ostream& out) {
  const json j = read_json_file(input);
  if (j.contains("gains")) return cmd_certify_platoon(j, out);

  const auto g = graphnet::Digraph::from_adjacency(io::matrix_from_json(j.at("adjacency")));
  const int n = g.size();
  json report = json::object();
  Eigen::VectorXd alphas;
  if (j.contains("alpha")) {
    alphas = io::vector_from_json(j.at("alpha"), n);
  } else if (j.contains("agents")) {
    const json& agents = j.at("agents");
    if (!agents.is_array() || static_cast<int>(agents.size()) != n) {
      throw Error(ErrorCode::BadDimensions, "agents needs one entry per node");
    }
    alphas.resize(n);
    json certs = json::array();
    for (int k = 0; k < n; ++k) {
      try {
        const auto c = agent_certificate(agents[static_cast<std::size_t>(k)]);
        alphas(k) = c.alpha;
        certs.push_back(io::to_json(c));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotCertifiable) throw;
        report["error"] = "agent " + std::to_string(k + 1) + ": " + e.what();
        out << dump(report);
        return kNotCertifiable;
      }
    }
    report["certificates"] = certs;
  } else {
    throw Error(ErrorCode::InvalidArgument, "need 'alpha' or 'agents'");
  }
  if ((alphas.array() < 0.0).any()) throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0");
  report["alphas"] = io::to_json(alphas);

  certify::WeakCouplingVerdict verdict;
  if (reference) {
    if (!j.contains("b")) throw Error(ErrorCode::InvalidArgument, "--reference needs a 'b' vector");
    const Eigen::VectorXd b = io::vector_from_json(j.at("b"), n);
    if ((b.array() < 0.0).any()) throw Error(ErrorCode::InvalidArgument, "b must be >= 0");
    verdict = certify::check_theorem2(g, alphas, b);
    report["variant"] = "reference_tracking";
  } else {
    verdict = certify::check_theorem1(g, alphas);
    report["variant"] = "plain";
  }
  report["verdict"] = io::to_json(verdict);
  out << dump(report);
  return verdict.passes ? kOk : kCertificateFailed;
}

// --- simulate ----------------------------------------------------------------------

int cmd_simulate(const std::string& input, const Overrides& ov, bool plot, const RunManifest& manifest,
                 bool force, std::ostream& out) {
  auto spec = io::network_from_json(read_json_file(input));
  ov.apply(spec.config);
  // Validates the merged config.
  io::config_from_json({{"dt", spec.config.dt},
                        {"t_final", spec.config.t_final},
                        {"tol", spec.config.tol},
                        {"record_stride", spec.config.record_stride}});
  const auto result = netsim::simulate(spec.network, spec.config);
  const json metrics = io::metrics_json(result);

  std::vector<Artifact> files{{"trajectories.csv", csv_of(result)},
                              {"metrics.json", dump(metrics)},
                              {"manifest.json", dump(manifest.to_json())}};
  if (plot) files.push_back({"plot.svg", svg_of(result, "Agent outputs")});
  write_artifacts(manifest.output_dir, files, force);
  out << dump(metrics);
  return status_code(result.status);
}

// --- scenario ----------------------------------------------------------------------

json chain_json(const scenarios::ChainCertificate& c) {
  return {{"passes", c.passes}, {"slack", io::to_json(c.slack)}};
}

Outcome traffic_outcome(const io::TrafficScenario& s, bool plot) {
  const auto build = scenarios::build_traffic(s.spec);
  const auto run = scenarios::run_traffic(s.spec, s.config);
  Outcome o;
  o.report = {{"scenario_type", "traffic"},
              {"certified", build.certified},
              {"weak_coupling", io::to_json(build.theorem1)},
              {"chain", build.chain ? chain_json(*build.chain) : json(nullptr)},
              {"metrics", io::metrics_json(run.sim)}};
  Eigen::VectorXd terminal(build.network.size());
  for (int i = 0; i < build.network.size(); ++i) {
    terminal(i) = run.sim.y[static_cast<std::size_t>(i)](run.sim.y[0].rows() - 1, 0);
  }
  o.report["terminal_velocities"] = io::to_json(terminal);

  std::vector<std::string> names;
  for (int i = 0; i < build.network.size(); ++i) names.push_back("x_" + std::to_string(i + 1));
  std::ostringstream positions;
  io::write_columns_csv(positions, run.sim.times, names, run.positions);
  o.files = {{"trajectories.csv", csv_of(run.sim)},
             {"positions.csv", positions.str()},
             {"metrics.json", dump(o.report["metrics"])}};
  if (plot) o.files.push_back({"plot.svg", svg_of(run.sim, "Vehicle velocities")});
  o.code = status_code(run.sim.status);
  return o;
}

Outcome platoon_outcome(const io::PlatoonScenario& s, bool plot) {
  const auto build = scenarios::build_platoon(s.spec);
  const auto run = scenarios::run_platoon(s.spec, s.config);
  const auto transformed = scenarios::run_platoon_transformed(s.spec, s.config);
  const int n = s.spec.gains.size();

  Outcome o;
  o.report = {{"scenario_type", "platoon"},
              {"certified", build.theorem2.passes && build.theorem4.passes},
              {"reference_tracking", io::to_json(build.theorem2)},
              {"cacc", io::to_json(build.theorem4)},
              {"alphas", io::to_json(build.alphas)},
              {"status", run.status == netsim::SimStatus::completed ? "completed" : "diverged"}};
  if (run.v.rows() > 0) {
    o.report["terminal_spacing_error"] = io::to_json(run.terminal_spacing_error);
    o.report["terminal_velocity_error"] = io::to_json(run.terminal_velocity_error);
    o.report["max_abs_terminal_spacing_error"] = run.terminal_spacing_error.cwiseAbs().maxCoeff();
    o.report["max_abs_terminal_velocity_error"] = run.terminal_velocity_error.cwiseAbs().maxCoeff();
  }
  if (run.status == netsim::SimStatus::completed &&
      transformed.status == netsim::SimStatus::completed) {
    const Eigen::MatrixXd y = scenarios::transformed_outputs(s.spec, run);
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
      dev = std::max(dev, (y.col(i) - transformed.y[static_cast<std::size_t>(i)].col(0))
                              .cwiseAbs()
                              .maxCoeff());
    }
    o.report["transformed_max_deviation"] = dev;
  }
  o.report["metrics"] = io::metrics_json(transformed);

  std::vector<std::string> names;
  const auto rows = static_cast<Eigen::Index>(run.times.size());
  Eigen::MatrixXd cols(rows, 4 * n);
  for (int i = 0; i < n; ++i) {
    const std::string k = std::to_string(i + 1);
    names.push_back("q_" + k);
    names.push_back("v_" + k);
    names.push_back("a_" + k);
    names.push_back("e_" + k);
    cols.col(4 * i) = run.q.col(i).head(rows);
    cols.col(4 * i + 1) = run.v.col(i).head(rows);
    cols.col(4 * i + 2) = run.a.col(i).head(rows);
    cols.col(4 * i + 3) = run.spacing_errors.col(i).head(rows);
  }
  std::ostringstream csv;
  io::write_columns_csv(csv, run.times, names, cols);
  o.files = {{"trajectories.csv", csv.str()}, {"metrics.json", dump(o.report["metrics"])}};
  if (plot) {
    std::vector<io::PlotSeries> series;
    for (int i = 0; i < n; ++i) {
      io::PlotSeries p{"e_" + std::to_string(i + 1), {}};
      for (Eigen::Index r = 0; r < rows; ++r) p.values.push_back(run.spacing_errors(r, i));
      series.push_back(std::move(p));
    }
    std::ostringstream svg;
    io::write_svg(svg, run.times, series, "Spacing errors", "spacing error [m]");
    o.files.push_back({"plot.svg", svg.str()});
  }
  o.code = status_code(run.status);
  return o;
}

Outcome remark1_outcome(const io::Remark1Scenario& s, bool plot) {
  const auto r = scenarios::remark1_counterexample(s.p, s.q, s.n_agents, s.kappa, s.config);
  Outcome o;
  o.report = {{"scenario_type", "remark1"},
              {"predicted", r.predicted},
              {"predicted_spectral", r.predicted_spectral},
              {"observed", r.observed},
              {"agreement", r.predicted == r.observed},
              {"metrics", io::metrics_json(r.sim)}};
  o.files = {{"trajectories.csv", csv_of(r.sim)}, {"metrics.json", dump(o.report["metrics"])}};
  if (plot) o.files.push_back({"plot.svg", svg_of(r.sim, "Identical third-order agents")});
  o.code = status_code(r.sim.status);
  return o;
}

Outcome harmonic_outcome(const io::HarmonicScenario& s, bool plot) {
  const auto r = scenarios::harmonic_counterexample(s.omega1, s.omega2, s.k, s.config);
  Outcome o;
  o.report = {{"scenario_type", "harmonic"},
              {"amplitude_ratio", r.amplitude_ratio},
              {"simulated_ratio", r.simulated_ratio},
              {"predicted", false},
              {"observed", r.sim.metrics.synchronized},
              {"metrics", io::metrics_json(r.sim)}};
  o.files = {{"trajectories.csv", csv_of(r.sim)}, {"metrics.json", dump(o.report["metrics"])}};
  if (plot) o.files.push_back({"plot.svg", svg_of(r.sim, "Coupled oscillators")});
  o.code = status_code(r.sim.status);
  return o;
}

Outcome scenario_outcome(const json& j, const Overrides& ov, bool plot) {
  io::Scenario s = io::scenario_from_json(j);
  std::visit([&](auto& sc) { ov.apply(sc.config); }, s);
  return std::visit(
      [&](const auto& sc) -> Outcome {
        using T = std::decay_t<decltype(sc)>;
        if constexpr (std::is_same_v<T, io::TrafficScenario>) return traffic_outcome(sc, plot);
        else if constexpr (std::is_same_v<T, io::PlatoonScenario>) return platoon_outcome(sc, plot);
        else if constexpr (std::is_same_v<T, io::Remark1Scenario>) return remark1_outcome(sc, plot);
        else return harmonic_outcome(sc, plot);
      },
      s);
}

/// Errors inside a run become that run's outcome, so a sweep reports every
/// variant.
Outcome guarded_outcome(const json& j, const Overrides& ov, bool plot) {
  try {
    return scenario_outcome(j, ov, plot);
  } catch (const Error& e) {
    return {{{"error", e.what()}}, {}, code_for(e)};
  } catch (const json::exception& e) {
    return {{{"error", e.what()}}, {}, kInputError};
  }
}

int cmd_scenario(const std::string& input, const Overrides& ov, bool plot, bool sweep,
                 const RunManifest& manifest, bool force, std::ostream& out) {
  const json j = read_json_file(input);
  if (!sweep) {
    Outcome o = scenario_outcome(j, ov, plot);
    o.files.push_back({"report.json", dump(o.report)});
    o.files.push_back({"manifest.json", dump(manifest.to_json())});
    write_artifacts(manifest.output_dir, o.files, force);
    out << dump(o.report);
    return o.code;
  }

  const json& spec = j.at("sweep");
  const std::string param = spec.at("parameter").get<std::string>();
  const json& values = spec.at("values");
  if (!values.is_array() || values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "sweep needs a non-empty 'values' array");
  }
  std::vector<json> variants;
  for (const auto& v : values) {
    json variant = j;
    variant.erase("sweep");
    variant[param] = v;
    variants.push_back(std::move(variant));
  }
  const int count = static_cast<int>(variants.size());
  std::vector<Outcome> outcomes(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    outcomes[static_cast<std::size_t>(k)] = guarded_outcome(variants[static_cast<std::size_t>(k)], ov, plot);
  }

  std::vector<Artifact> files;
  json summary{{"parameter", param}, {"runs", json::array()}};
  int code = kOk;
  for (int k = 0; k < count; ++k) {
    std::ostringstream dir;
    dir << "run_" << std::setw(3) << std::setfill('0') << k;
    auto& o = outcomes[static_cast<std::size_t>(k)];
    for (auto& f : o.files) files.push_back({dir.str() + "/" + f.name, std::move(f.content)});
    files.push_back({dir.str() + "/report.json", dump(o.report)});
    summary["runs"].push_back({{"directory", dir.str()},
                               {"value", values[static_cast<std::size_t>(k)]},
                               {"exit_code", o.code},
                               {"report", o.report}});
    code = std::max(code, o.code);
  }
  files.push_back({"sweep.json", dump(summary)});
  files.push_back({"manifest.json", dump(manifest.to_json())});
  write_artifacts(manifest.output_dir, files, force);
  out << dump(summary);
  return code;
}

// --- selftest ----------------------------------------------------------------------

int cmd_selftest(std::uint64_t seed, int count, std::ostream& out) {
  const auto r = selftest::run(seed, count, count / 2);
  out << dump({{"seed", seed},
               {"graph_instances", r.graph_instances},
               {"shift_instances", r.shift_instances},
               {"worst_identity_residual", r.worst_identity_residual},
               {"worst_inequality_margin", r.worst_inequality_margin},
               {"worst_shift_residual", r.worst_shift_residual},
               {"passes", r.passes}});
  return r.passes ? kOk : kCertificateFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certify and simulate output synchronization of IFP agents", "ifp-syncnet"};
  app.require_subcommand(1);

  std::string input, output_dir = default_output_dir();
  bool reference = false, plot = false, force = false, sweep = false;
  // NaN marks an option that was not given.
  const double unset = std::numeric_limits<double>::quiet_NaN();
  double dt = unset, t_final = unset, tol = unset;
  std::uint64_t seed = 1;
  int count = 200;

  auto* ifp = app.add_subcommand("ifp", "IFP index of a transfer function {num, den}");
  ifp->add_option("input", input, "Transfer function JSON")->required();

  auto* cert = app.add_subcommand("certify", "Weak-coupling certificate of a network");
  cert->add_option("input", input, "Network JSON")->required();
  cert->add_flag("--reference", reference, "Reference-tracking variant (needs b)");

  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--output-dir", output_dir, "Artifact directory");
    sub->add_flag("--plot", plot, "Also write plot.svg");
    sub->add_flag("--force", force, "Overwrite existing artifacts");
    sub->add_option("--dt", dt, "Step size override")->check(CLI::PositiveNumber);
    sub->add_option("--t-final", t_final, "Horizon override")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", tol, "Synchronization tolerance override")->check(CLI::PositiveNumber);
  };
  auto* sim = app.add_subcommand("simulate", "Simulate a network and write CSV and metrics");
  sim->add_option("input", input, "Network JSON")->required();
  add_run_options(sim);

  auto* scn = app.add_subcommand("scenario", "Run a traffic, platoon, remark1 or harmonic scenario");
  scn->add_option("input", input, "Scenario JSON")->required();
  add_run_options(scn);
  scn->add_flag("--sweep", sweep, "Run every value of the file's sweep block");

  auto* self = app.add_subcommand("selftest", "");
  self->group("");
  self->add_option("--seed", seed, "Random seed");
  self->add_option("--count", count, "Graph instances")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInputError;
  }

  auto* active = app.get_subcommands().front();
  Overrides ov;
  if (!std::isnan(dt)) ov.dt = dt;
  if (!std::isnan(t_final)) ov.t_final = t_final;
  if (!std::isnan(tol)) ov.tol = tol;
  RunManifest manifest{active->get_name(), input, output_dir, seed, ov};

  try {
    if (*ifp) return cmd_ifp(input, out);
    if (*cert) return cmd_certify(input, reference, out);
    if (*sim) return cmd_simulate(input, ov, plot, manifest, force, out);
    if (*scn) return cmd_scenario(input, ov, plot, sweep, manifest, force, out);
    return cmd_selftest(seed, count, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e);
  } catch (const json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace ifpsync::cli
