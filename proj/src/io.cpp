#include "ifpsync/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "ifpsync/error.hpp"

namespace ifpsync::io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

double number(const json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), key) : fallback;
}

int integer(const json& j, const char* what) {
  if (!j.is_number_integer()) bad(std::string(what) + " must be an integer");
  return j.get<int>();
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

/// JSON has no infinity; non-finite values become null.
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string_view method_name(passivity::IfpMethod m) {
  return m == passivity::IfpMethod::closed_form ? "closed_form" : "grid_refined";
}

netsim::TimeFunction constant_function(Eigen::VectorXd value) {
  return [value = std::move(value)](double) { return value; };
}

}  // namespace

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) bad("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) bad("matrix rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      bad("matrix rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number(row[static_cast<std::size_t>(c)], "matrix entry");
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, int n) {
  if (j.is_number()) {
    if (n < 0) bad("expected an array");
    return Eigen::VectorXd::Constant(n, j.get<double>());
  }
  if (!j.is_array()) bad("expected an array of numbers");
  if (n >= 0 && static_cast<int>(j.size()) != n) {
    throw Error(ErrorCode::BadDimensions,
                "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], "entry");
  return v;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(finite_or_null(v(k)));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

passivity::Polynomial polynomial_from_json(const json& j) {
  if (!j.is_array()) bad("polynomial must be an array of ascending coefficients");
  std::vector<double> c;
  for (const auto& x : j) c.push_back(number(x, "coefficient"));
  return passivity::Polynomial(std::move(c));
}

passivity::RationalTF tf_from_json(const json& j) {
  return passivity::RationalTF(polynomial_from_json(field(j, "num")),
                               polynomial_from_json(field(j, "den")));
}

json to_json(const passivity::IfpCertificate& cert) {
  json out{{"alpha", cert.alpha},
           {"omega_star", finite_or_null(cert.omega_star)},
           {"method", method_name(cert.method)},
           {"raw_infimum", cert.raw_infimum}};
  if (std::isinf(cert.omega_star)) out["omega_star_limit"] = "infinity";
  return out;
}

json to_json(const passivity::PrlReport& report) {
  return {{"no_unstable_poles", report.no_unstable_poles},
          {"imaginary_poles_ok", report.imaginary_poles_ok},
          {"freq_condition_ok", report.freq_condition_ok},
          {"all", report.all()}};
}

json to_json(const certify::WeakCouplingVerdict& verdict) {
  json out{{"passes", verdict.passes}, {"slack", to_json(verdict.slack)}};
  json reasons = json::array();
  for (auto r : verdict.reasons) reasons.push_back(certify::to_string(r));
  out["reasons"] = reasons;
  json offending = json::array();
  for (int k : verdict.offending) offending.push_back(k + 1);
  out["offending"] = offending;
  out["kappa"] = verdict.kappa ? to_json(*verdict.kappa) : json(nullptr);
  if (verdict.form_min_eigenvalue) out["form_min_eigenvalue"] = *verdict.form_min_eigenvalue;
  return out;
}

json to_json(const certify::CaccVerdict& verdict) {
  json per = json::array();
  for (bool b : verdict.per_vehicle) per.push_back(b);
  return {{"passes", verdict.passes},
          {"per_vehicle", per},
          {"mu_tau", to_json(verdict.mu_tau)},
          {"spacing_margin", to_json(verdict.spacing_margin)}};
}

certify::CaccGainSet gains_from_json(const json& j) {
  certify::CaccGainSet g;
  g.mu = vector_from_json(field(j, "mu"));
  const int n = g.size();
  g.eta = vector_from_json(field(j, "eta"), n);
  g.nu = vector_from_json(field(j, "nu"), std::max(n - 1, 0));
  g.tau = vector_from_json(field(j, "tau"), n);
  g.validate();
  return g;
}

netsim::AgentModel agent_from_json(const json& j) {
  const std::string type = field(j, "type").get<std::string>();
  if (type == "lti") return netsim::LtiSiso::from_tf(tf_from_json(j));
  if (type == "delayed_integrator") {
    netsim::DelayedIntegrator a;
    a.delay = number_or(j, "delay", 0.0);
    a.dim = j.contains("dim") ? integer(j.at("dim"), "dim") : 1;
    if (a.delay < 0.0 || a.dim < 1) bad("delayed_integrator needs delay >= 0 and dim >= 1");
    return a;
  }
  if (type == "vehicle") {
    netsim::Vehicle3rd a;
    a.tau = number(field(j, "tau"), "tau");
    a.mu = number(field(j, "mu"), "mu");
    if (a.tau <= 0.0 || a.mu <= 0.0) bad("vehicle needs tau > 0 and mu > 0");
    return a;
  }
  bad("unknown agent type '" + type + "'");
}

netsim::SimConfig config_from_json(const json& j) {
  netsim::SimConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) bad("config must be an object");
  c.dt = number_or(j, "dt", c.dt);
  c.t_final = number_or(j, "t_final", c.t_final);
  c.tol = number_or(j, "tol", c.tol);
  c.blowup_threshold = number_or(j, "blowup_threshold", c.blowup_threshold);
  if (j.contains("record_stride")) c.record_stride = integer(j.at("record_stride"), "record_stride");
  if (!(c.dt > 0.0) || !(c.t_final >= 0.0) || c.record_stride < 1 || !(c.tol > 0.0)) {
    bad("config needs dt > 0, t_final >= 0, record_stride >= 1 and tol > 0");
  }
  return c;
}

NetworkSpec network_from_json(const json& j) {
  auto g = graphnet::Digraph::from_adjacency(matrix_from_json(field(j, "adjacency")));
  const int n = g.size();

  const json& agents_json = field(j, "agents");
  std::vector<netsim::AgentModel> agents;
  if (agents_json.is_object()) {
    for (int k = 0; k < n; ++k) agents.push_back(agent_from_json(agents_json));
  } else if (agents_json.is_array()) {
    for (const auto& a : agents_json) agents.push_back(agent_from_json(a));
  } else {
    bad("agents must be an object or an array");
  }

  netsim::Protocol protocol = netsim::PlainProtocol{g};
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    const std::string type = field(p, "type").get<std::string>();
    if (type == "reference") {
      netsim::ReferenceProtocol ref{g, vector_from_json(field(p, "b"), n), {}, {}};
      const int m = netsim::output_dim(agents.front());
      Eigen::MatrixXd u_bar = Eigen::MatrixXd::Zero(n, m);
      if (p.contains("u_bar")) {
        const json& ub = p.at("u_bar");
        if (ub.is_array() && !ub.empty() && ub[0].is_array()) {
          u_bar = matrix_from_json(ub);
          if (u_bar.rows() != n || u_bar.cols() != m) throw Error(ErrorCode::BadDimensions, "u_bar");
        } else {
          u_bar.col(0) = vector_from_json(ub, n);
          for (int d = 1; d < m; ++d) u_bar.col(d) = u_bar.col(0);
        }
      }
      ref.u_bar = [u_bar](int i, double) { return Eigen::VectorXd(u_bar.row(i).transpose()); };
      Eigen::VectorXd offset = Eigen::VectorXd::Zero(m), slope = Eigen::VectorXd::Zero(m);
      if (p.contains("y_bar")) {
        const json& yb = p.at("y_bar");
        if (yb.contains("offset")) offset = vector_from_json(yb.at("offset"), m);
        if (yb.contains("slope")) slope = vector_from_json(yb.at("slope"), m);
      }
      ref.y_bar = [offset, slope](double t) { return Eigen::VectorXd(offset + slope * t); };
      protocol = std::move(ref);
    } else if (type != "plain") {
      bad("unknown protocol type '" + type + "'");
    }
  }

  NetworkSpec spec{netsim::Network(std::move(agents), std::move(protocol)),
                   config_from_json(j.contains("config") ? j.at("config") : json())};
  const auto& net = spec.network;
  if (j.contains("initial_states")) {
    const json& xs = j.at("initial_states");
    if (!xs.is_array() || static_cast<int>(xs.size()) != n) {
      throw Error(ErrorCode::BadDimensions, "initial_states needs one entry per agent");
    }
    for (int k = 0; k < n; ++k) {
      spec.config.initial_states.push_back(
          vector_from_json(xs[static_cast<std::size_t>(k)], netsim::state_dim(net.agents()[k])));
    }
  }
  if (j.contains("initial_inputs")) {
    const json& us = j.at("initial_inputs");
    if (!us.is_array() || static_cast<int>(us.size()) != n) {
      throw Error(ErrorCode::BadDimensions, "initial_inputs needs one entry per agent");
    }
    for (int k = 0; k < n; ++k) {
      spec.config.initial_histories.push_back(
          constant_function(vector_from_json(us[static_cast<std::size_t>(k)], net.output_dim())));
    }
  }
  return spec;
}

json to_json(const netsim::SyncMetrics& m) {
  json out{{"pairwise_sup_tail", finite_or_null(m.pairwise_sup_tail)},
           {"l2_pairwise", to_json(m.l2_pairwise)},
           {"synchronized", m.synchronized}};
  if (m.l2_reference) out["l2_reference"] = to_json(*m.l2_reference);
  if (m.reference_sup_tail) out["reference_sup_tail"] = finite_or_null(*m.reference_sup_tail);
  return out;
}

json metrics_json(const netsim::SimResult& r) {
  json out = to_json(r.metrics);
  out["status"] = r.status == netsim::SimStatus::completed ? "completed" : "diverged";
  if (r.status == netsim::SimStatus::diverged) out["diverged_at"] = r.diverged_at;
  out["samples"] = r.times.size();
  return out;
}

namespace {

Scenario traffic_from_json(const json& j, netsim::SimConfig config) {
  const std::string preset = field(j, "preset").get<std::string>();
  TrafficScenario s{{}, config};
  if (preset == "classic_chain") {
    const int n = integer(field(j, "n"), "n");
    s.spec = scenarios::TrafficSpec::classic_chain(
        n, number(field(j, "sensitivity"), "sensitivity"), number(field(j, "delay"), "delay"),
        vector_from_json(field(j, "v_init"), n), number(field(j, "v0"), "v0"));
  } else if (preset == "unidirectional_ring" || preset == "bidirectional_ring") {
    const int n = integer(field(j, "n"), "n");
    s.spec = scenarios::TrafficSpec::ring(preset == "bidirectional_ring", n,
                                          number(field(j, "sensitivity"), "sensitivity"),
                                          vector_from_json(field(j, "delays"), n),
                                          vector_from_json(field(j, "v_init"), n));
  } else if (preset == "custom") {
    Eigen::MatrixXd a = matrix_from_json(field(j, "adjacency"));
    const int n = static_cast<int>(a.rows());
    s.spec = scenarios::TrafficSpec::custom(std::move(a), vector_from_json(field(j, "delays"), n),
                                            vector_from_json(field(j, "v_init"), n));
  } else {
    bad("unknown traffic preset '" + preset + "'");
  }
  return s;
}

Scenario platoon_from_json(const json& j, netsim::SimConfig config) {
  certify::CaccGainSet gains = gains_from_json(j.contains("gains") ? j.at("gains") : j);
  const int n = gains.size();
  const double v0 = number_or(j, "v0", 20.0);
  const double q0 = number_or(j, "q0_init", 0.0);
  auto spec = scenarios::PlatoonSpec::at_goal(gains, vector_from_json(field(j, "s"), n), v0, q0);
  if (j.contains("q_init")) spec.q_init = vector_from_json(j.at("q_init"), n);
  if (j.contains("v_init")) spec.v_init = vector_from_json(j.at("v_init"), n);
  if (j.contains("a_init")) spec.a_init = vector_from_json(j.at("a_init"), n);
  if (j.contains("q_offset")) spec.q_init += vector_from_json(j.at("q_offset"), n);
  spec.validate();
  return PlatoonScenario{std::move(spec), config};
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  const std::string type = field(j, "scenario_type").get<std::string>();
  netsim::SimConfig config = config_from_json(j.contains("config") ? j.at("config") : json());
  if (type == "traffic") return traffic_from_json(j, config);
  if (type == "platoon") return platoon_from_json(j, config);
  if (type == "remark1") {
    Remark1Scenario s;
    s.p = number(field(j, "p"), "p");
    s.q = number(field(j, "q"), "q");
    s.kappa = number(field(j, "kappa"), "kappa");
    s.n_agents = integer(field(j, "n_agents"), "n_agents");
    if (s.p <= 0 || s.q <= 0 || s.kappa <= 0 || s.n_agents < 2) {
      bad("remark1 needs p, q, kappa > 0 and n_agents >= 2");
    }
    s.config = config;
    return s;
  }
  if (type == "harmonic") {
    HarmonicScenario s;
    s.omega1 = number(field(j, "omega1"), "omega1");
    s.omega2 = number(field(j, "omega2"), "omega2");
    s.k = number(field(j, "k"), "k");
    if (s.omega1 <= 0 || s.omega2 <= 0 || s.k <= 0) bad("harmonic needs positive parameters");
    s.config = config;
    return s;
  }
  bad("unknown scenario_type '" + type + "'");
}

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_columns_csv(std::ostream& os, const std::vector<double>& times,
                       const std::vector<std::string>& names, const Eigen::MatrixXd& columns) {
  os << 't';
  for (const auto& name : names) os << ',' << name;
  os << '\n';
  for (std::size_t r = 0; r < times.size(); ++r) {
    os << format_double(times[r]);
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
      os << ',' << format_double(columns(static_cast<Eigen::Index>(r), c));
    }
    os << '\n';
  }
}

void write_csv(std::ostream& os, const netsim::SimResult& result) {
  const auto rows = static_cast<Eigen::Index>(result.times.size());
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  auto add = [&](const std::vector<Eigen::MatrixXd>& series, char prefix) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& m = series[i];
      for (Eigen::Index d = 0; d < m.cols(); ++d) {
        std::string name = std::string(1, prefix) + '_' + std::to_string(i + 1);
        if (m.cols() > 1) name += '_' + std::to_string(d + 1);
        names.push_back(std::move(name));
        cols.push_back(m.col(d).head(rows));
      }
    }
  };
  add(result.y, 'y');
  add(result.u, 'u');
  Eigen::MatrixXd all(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) all.col(static_cast<Eigen::Index>(c)) = cols[c];
  write_columns_csv(os, result.times, names, all);
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string tick_label(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 4);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_svg(std::ostream& os, const std::vector<double>& times,
               const std::vector<PlotSeries>& series, const std::string& title,
               const std::string& y_label) {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  double t0 = times.empty() ? 0.0 : times.front();
  double t1 = times.empty() ? 1.0 : times.back();
  if (!(t1 > t0)) t1 = t0 + 1.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (!(hi > lo)) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](double t) { return kLeft + (t - t0) / (t1 - t0) * pw; };
  auto py = [&](double v) { return kTop + (hi - v) / (hi - lo) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
        "viewBox=\"0 0 800 500\">\n";
  os << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << escape_xml(title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double t = t0 + (t1 - t0) * k / 5.0, v = lo + (hi - lo) * k / 5.0;
    os << "<text x=\"" << px(t) << "\" y=\"" << kTop + ph + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_label(t) << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(v) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << tick_label(v) << "</text>\n";
  }
  os << "<text class=\"x-label\" x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15
     << "\" text-anchor=\"middle\" font-size=\"13\">t [s]</text>\n";
  os << "<text class=\"y-label\" x=\"18\" y=\"" << kTop + ph / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << kTop + ph / 2
     << ")\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t n = std::min(times.size(), series[s].values.size());
    bool first = true;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = series[s].values[k];
      if (!std::isfinite(v)) continue;
      if (!first) os << ' ';
      os << tick_label(px(times[k])) << ',' << tick_label(py(v));
      first = false;
    }
    os << "\"/>\n";
    const double ly = kTop + 14 + 16 * static_cast<double>(s);
    os << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 30
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kLeft + pw + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
       << escape_xml(series[s].label) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_svg(std::ostream& os, const netsim::SimResult& result, const std::string& title) {
  std::vector<PlotSeries> series;
  const std::size_t rows = result.times.size();
  for (std::size_t i = 0; i < result.y.size(); ++i) {
    const auto& m = result.y[i];
    for (Eigen::Index d = 0; d < m.cols(); ++d) {
      PlotSeries s;
      s.label = "y_" + std::to_string(i + 1);
      if (m.cols() > 1) s.label += '_' + std::to_string(d + 1);
      for (std::size_t k = 0; k < rows; ++k) s.values.push_back(m(static_cast<Eigen::Index>(k), d));
      series.push_back(std::move(s));
    }
  }
  write_svg(os, result.times, series, title, "output y");
}

}  // namespace ifpsync::io
