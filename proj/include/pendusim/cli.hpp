#pragma once

// Front-end plumbing shared by the pendusim tool and the tests: figure
// presets and their expected outcomes, SVG plots, the randomized property
// suite and the three subcommands.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pendusim/sim.hpp"

namespace pendusim {

/// Exit codes of the subcommands.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;  ///< property or convergence failure
inline constexpr int config = 2;   ///< usage or config error
inline constexpr int mismatch = 3; ///< run finished but the outcome differs from the preset's
} // namespace exit_code

/// Names accepted by make_preset, in figure order.
const std::vector<std::string> &preset_names();
bool is_preset(const std::string &name);

/// Built-in scenario for a figure preset; throws UnsupportedPreset.
Scenario make_preset(const std::string &name);

/// One qualitative claim about a run.
struct Expectation {
    std::string description;
    std::function<bool(const OutcomeReport &)> holds;
};

/// The outcome a preset must reproduce; empty for unknown names.
std::vector<Expectation> expected_outcome(const std::string &preset);

/// Descriptions of the expectations `report` violates.
std::vector<std::string> outcome_mismatches(const std::string &preset,
                                            const OutcomeReport &report);

/// Writes q_r_gamma.svg, x_c.svg, q_m.svg and phi.svg into `dir`; returns
/// the file names.
std::vector<std::string> write_svg_plots(const std::string &dir, const Scenario &scenario,
                                         const Trajectory &trajectory);

/// Uniform draw from the envelope the property suite covers: roll/pitch
/// within 0.3 rad, movers within the travel limit, joints and yaw within pi,
/// rates within 1.
State random_state(const SystemModel &model, std::mt19937_64 &rng);

struct PropertyResult {
    std::string name;
    bool passed{false};
    double worst{0.0};     ///< largest error seen, in the property's own units
    double tolerance{0.0};
    int samples{0};
    std::string detail;
};

/// Randomized invariant checks (mass matrix, skew symmetry, gravity
/// gradient, Coriolis paths, PFL, CoM transform, energy, equilibrium).
std::vector<PropertyResult> verify_suite(const SystemModel &model, std::uint64_t seed,
                                         int samples);

struct RunConfig {
    std::string preset;        ///< figure preset or paper_n3 / paper_n7
    std::string scenario_path; ///< JSON scenario, exclusive with preset
    std::string out_dir{"out"};
    bool emit_svg{false};
    bool all_presets{false};
    std::uint64_t seed{1};
    int samples{100};
    std::optional<double> dt;
    std::optional<double> duration;
    std::vector<double> q_r_des; ///< equilibrium target override
    double arm_mass_scale{1.0};
    bool write_back{false}; ///< equilibrium: store q_m* in the scenario file
};

int cmd_run(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_verify(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_equilibrium(const RunConfig &config, std::ostream &out, std::ostream &err);

} // namespace pendusim
