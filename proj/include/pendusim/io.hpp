#pragma once

// JSON scenario documents, report export and the trajectory CSV format.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "pendusim/sim.hpp"

namespace pendusim {

using nlohmann::json;

json to_json(const SystemModel &model);
/// Either a full model, or {"preset": "paper_n3" | "paper_n7", ...overrides}
/// where overrides are merged into the preset document (RFC 7386 merge patch).
SystemModel model_from_json(const json &doc);

/// Built-in model documents.
SystemModel model_preset(const std::string &id);

json to_json(const Gains &gains);
/// Missing fields keep the defaults for `link_count`.
Gains gains_from_json(const json &doc, int link_count);

json to_json(const Setpoint &setpoint);

json to_json(const Scenario &scenario);
/// q_m_star is solved when absent and re-checked (residual < 1e-10) when
/// present. Throws InvalidConfig on malformed documents.
Scenario scenario_from_json(const json &doc);

Scenario load_scenario(const std::string &path);
void save_scenario(const Scenario &scenario, const std::string &path);

json to_json(const OutcomeReport &report);

/// t,alpha,beta,gamma,qm1,qm2,qr1..qrn,d_<same>,u_yaw,u_m1,u_m2,u_r1..,xc_x,xc_y,E_kin,E_pot
std::string csv_header(int link_count);
void write_csv(std::ostream &out, const Trajectory &trajectory);
void write_csv(const std::string &path, const Trajectory &trajectory);
/// Exact inverse of write_csv (values are written with 17 significant digits).
Trajectory read_csv(std::istream &in);
Trajectory read_csv(const std::string &path);

} // namespace pendusim
