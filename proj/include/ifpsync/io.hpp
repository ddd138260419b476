#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "ifpsync/certify.hpp"
#include "ifpsync/netsim.hpp"
#include "ifpsync/passivity.hpp"
#include "ifpsync/scenarios.hpp"

// JSON configs, CSV trajectories and SVG plots.
namespace ifpsync::io {

using json = nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json& j);
/// A number is broadcast to length n when n >= 0.
Eigen::VectorXd vector_from_json(const json& j, int n = -1);
json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);

passivity::Polynomial polynomial_from_json(const json& j);
passivity::RationalTF tf_from_json(const json& j);
json to_json(const passivity::IfpCertificate& cert);
json to_json(const passivity::PrlReport& report);

json to_json(const certify::WeakCouplingVerdict& verdict);
json to_json(const certify::CaccVerdict& verdict);
certify::CaccGainSet gains_from_json(const json& j);

netsim::AgentModel agent_from_json(const json& j);
netsim::SimConfig config_from_json(const json& j);

struct NetworkSpec {
  netsim::Network network;
  netsim::SimConfig config;
};

/// Network file: adjacency, agents, protocol, initial conditions and config.
NetworkSpec network_from_json(const json& j);

json to_json(const netsim::SyncMetrics& metrics);
json metrics_json(const netsim::SimResult& result);

struct TrafficScenario {
  scenarios::TrafficSpec spec;
  netsim::SimConfig config;
};
struct PlatoonScenario {
  scenarios::PlatoonSpec spec;
  netsim::SimConfig config;
};
struct Remark1Scenario {
  double p = 1.0, q = 1.0, kappa = 0.1;
  int n_agents = 3;
  netsim::SimConfig config;
};
struct HarmonicScenario {
  double omega1 = 1.0, omega2 = 2.0, k = 1.0;
  netsim::SimConfig config;
};
using Scenario = std::variant<TrafficScenario, PlatoonScenario, Remark1Scenario, HarmonicScenario>;

/// Dispatches on the "scenario_type" field.
Scenario scenario_from_json(const json& j);

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

/// Header t,y_1,...,y_N,u_1,...,u_N; vector outputs are flattened as y_i_d.
void write_csv(std::ostream& os, const netsim::SimResult& result);
/// Same layout for arbitrary named columns sharing one time axis.
void write_columns_csv(std::ostream& os, const std::vector<double>& times,
                       const std::vector<std::string>& names, const Eigen::MatrixXd& columns);

struct PlotSeries {
  std::string label;
  std::vector<double> values;
};

/// 800x500 SVG with linear axes and one polyline per series.
void write_svg(std::ostream& os, const std::vector<double>& times,
               const std::vector<PlotSeries>& series, const std::string& title,
               const std::string& y_label);
/// One series per output component of every agent.
void write_svg(std::ostream& os, const netsim::SimResult& result, const std::string& title);

}  // namespace ifpsync::io
