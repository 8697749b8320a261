#pragma once

// Fixed-step RK4 integration of the closed loop and trajectory metrics.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pendusim/control.hpp"
#include "pendusim/model.hpp"

namespace pendusim {

/// Everything the integrator needs to close the loop.
struct Controller {
    ControllerKind kind{ControllerKind::free};
    Gains gains;
    Setpoint setpoint;
    VectorXd disturbance; ///< constant generalized force added to B u; empty = none
};

struct Scenario {
    std::string name{"custom"};
    std::string model_preset{"paper_n3"};
    SystemModel model;
    State initial;
    Controller controller;
    double dt{1e-3};
    double duration{60.0};
    int decimation{10};
    /// > 0: hold u constant for this long (zero-order hold) instead of
    /// re-evaluating the controller in every RK4 stage.
    double control_period{0.0};

    double band_attitude{1e-3};
    double band_movers{1e-3};
    double band_com{1e-3};
    double band_outer{1e-3}; ///< yaw and joints
    double window{10.0};
    double fit_window{30.0};

    /// Throws InvalidConfig.
    void validate() const;
};

/// One logged sample; exactly the columns of the CSV export.
struct Record {
    double t{0.0};
    VectorXd q;
    VectorXd qd;
    VectorXd u;
    Vec2 xc{Vec2::Zero()};
    double kinetic{0.0};
    double potential{0.0};

    bool operator==(const Record &o) const;
};

struct Trajectory {
    int link_count{0};
    std::vector<Record> records;

    bool operator==(const Trajectory &o) const;
};

enum class Classification { converged, limit_cycle, diverged, inconclusive };

std::string to_string(Classification c);

/// Verdict for one scalar signal sampled at `t`.
///   diverged      max |x| > escape_bound
///   converged     |x| <= band over the trailing window
///   limit_cycle   trailing peak-to-peak > 2 band and the ratio of the last
///                 two windows' peak-to-peak lies in [0.8, 1.25]
///   inconclusive  otherwise
/// Throws InvalidConfig when window > span / 3.
Classification classify(const std::vector<double> &t, const std::vector<double> &x, double band,
                        double window, double escape_bound);

/// Merge component verdicts: any diverged, else all converged, else any
/// limit cycle, else inconclusive.
Classification combine(const std::vector<Classification> &parts);

/// Time after which |x| stays within band; NaN if it ends outside.
double settling_time(const std::vector<double> &t, const std::vector<double> &x, double band);

/// Peak-to-peak of x over the trailing window.
double trailing_amplitude(const std::vector<double> &t, const std::vector<double> &x,
                          double window);

/// Exponential rate -d/dt log|x| from a least-squares fit to the one-second
/// envelope maxima of the trailing window. Samples below 1e-13 are dropped.
double decay_rate(const std::vector<double> &t, const std::vector<double> &x, double window);

struct SignalReport {
    Classification classification{Classification::inconclusive};
    double settling_time{0.0};      ///< s, NaN if never settled
    double trailing_amplitude{0.0}; ///< peak-to-peak of the worst component
    double max_abs{0.0};
    double band{0.0};
    double escape_bound{0.0};
};

struct OutcomeReport {
    std::string scenario;
    std::string controller;
    /// phi (roll, pitch), xc (CoM x, y), q_m (movers - q_m*), gamma (yaw
    /// error), q_r (joint errors).
    std::map<std::string, SignalReport> signals;
    double decay_rate{0.0}; ///< of |(xc, q_m - q_m*)|, 1/s
    double energy_audit{0.0}; ///< |E - E0 - W| max, relative
    double energy_drift{0.0};  ///< |E - E0| max, relative
    bool escaped{false};
    std::string escape_reason;
    double end_time{0.0};
    double wall_time{0.0}; ///< s
    std::vector<std::string> warnings;
};

struct RunResult {
    Trajectory trajectory;
    OutcomeReport report;
    std::vector<double> work; ///< integral of qd^T tau at each record
};

/// Closed-loop q_dd and the generalized force that produced it.
struct Acceleration {
    VectorXd qdd;
    VectorXd tau;
};

Acceleration closed_loop(const SystemModel &model, const Controller &controller,
                         const State &state);

/// One classical RK4 step with the controller evaluated in every stage.
/// Throws StateEscape if |q| exceeds 1e3, a value is not finite, or the
/// pitch reaches the gimbal guard.
State step(const SystemModel &model, const State &state, const Controller &controller, double dt);

/// Full rollout plus metrics. A StateEscape ends the run early; the
/// offending signals are then classified diverged.
RunResult run(const Scenario &scenario);

/// Metrics for an existing trajectory. `work` may be empty (no audit).
OutcomeReport analyze(const Scenario &scenario, const Trajectory &trajectory,
                      const std::vector<double> &work = {});

} // namespace pendusim
