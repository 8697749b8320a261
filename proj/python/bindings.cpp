#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pendusim/cli.hpp"
#include "pendusim/dynamics.hpp"
#include "pendusim/errors.hpp"
#include "pendusim/io.hpp"

namespace py = pybind11;
using namespace pendusim;

namespace {

py::dict report_dict(const OutcomeReport &r) {
    // the JSON export already flattens everything the Python side needs
    return py::module_::import("json").attr("loads")(to_json(r).dump());
}

py::dict trajectory_dict(const Trajectory &traj) {
    const auto n = static_cast<Eigen::Index>(traj.records.size());
    const int dof = 5 + traj.link_count, inputs = 3 + traj.link_count;
    VectorXd t(n), ke(n), pe(n);
    MatrixXd q(n, dof), qd(n, dof), u(n, inputs), xc(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Record &r = traj.records[static_cast<std::size_t>(i)];
        t[i] = r.t;
        q.row(i) = r.q.transpose();
        qd.row(i) = r.qd.transpose();
        u.row(i) = r.u.transpose();
        xc.row(i) = r.xc.transpose();
        ke[i] = r.kinetic;
        pe[i] = r.potential;
    }
    py::dict d;
    d["t"] = t;
    d["q"] = q;
    d["qd"] = qd;
    d["u"] = u;
    d["xc"] = xc;
    d["kinetic"] = ke;
    d["potential"] = pe;
    return d;
}

Scenario scenario_arg(const py::object &spec) {
    if (py::isinstance<py::str>(spec))
        return make_preset(spec.cast<std::string>());
    const std::string text = py::module_::import("json").attr("dumps")(spec).cast<std::string>();
    return scenario_from_json(json::parse(text));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Suspended aerial manipulator dynamics and balance control";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<InvalidConfig>(m, "InvalidConfig", base.ptr());
    py::register_exception<UnsupportedPreset>(m, "UnsupportedPreset", base.ptr());
    py::register_exception<NoConvergence>(m, "NoConvergence", base.ptr());
    py::register_exception<GimbalLock>(m, "GimbalLock", base.ptr());

    py::class_<SystemModel>(m, "SystemModel")
        .def_property_readonly("dof", &SystemModel::dof)
        .def_property_readonly("link_count", &SystemModel::link_count)
        .def_property_readonly("input_count", &SystemModel::input_count)
        .def_property_readonly("total_mass", &SystemModel::total_mass)
        .def_readwrite("gravity", &SystemModel::gravity)
        .def("to_dict",
             [](const SystemModel &s) {
                 return py::module_::import("json").attr("loads")(to_json(s).dump());
             })
        .def("__repr__", [](const SystemModel &s) {
            return "<SystemModel " + std::to_string(s.link_count()) + " links, " +
                   std::to_string(s.total_mass()) + " kg>";
        });

    m.def("model_preset", &model_preset, py::arg("name") = "paper_n3",
          "Built-in model: 'paper_n3' or 'paper_n7'.");
    m.def(
        "model_from_dict",
        [](const py::dict &d) {
            return model_from_json(
                json::parse(py::module_::import("json").attr("dumps")(d).cast<std::string>()));
        },
        py::arg("doc"));

    m.def("mass_matrix", &mass_matrix, py::arg("model"), py::arg("q"));
    m.def("gravity_vector", &gravity_vector, py::arg("model"), py::arg("q"));
    m.def("coriolis_matrix", &coriolis_matrix, py::arg("model"), py::arg("q"), py::arg("qd"));
    m.def("kinetic_energy", &kinetic_energy, py::arg("model"), py::arg("q"), py::arg("qd"));
    m.def("potential_energy", &potential_energy, py::arg("model"), py::arg("q"));
    m.def("com_xy", &com_xy, py::arg("model"), py::arg("q"));
    m.def(
        "forward_dynamics",
        [](const SystemModel &model, const VectorXd &q, const VectorXd &qd, const VectorXd &tau) {
            return forward_dynamics(model, q, qd, tau);
        },
        py::arg("model"), py::arg("q"), py::arg("qd"), py::arg("tau"));

    m.def(
        "solve_equilibrium",
        [](const SystemModel &model, const VectorXd &q_r_des) {
            const auto r = solve_equilibrium_qm(model, q_r_des);
            return py::make_tuple(Vec2(r.q_m), r.residual);
        },
        py::arg("model"), py::arg("q_r_des"),
        "Mover positions balancing the arm with the platform level; returns (q_m, residual).");

    m.def("preset_names", &preset_names);
    m.def(
        "run",
        [](const py::object &spec, std::optional<double> duration) {
            Scenario sc = scenario_arg(spec);
            if (duration)
                sc.duration = *duration;
            RunResult res;
            {
                py::gil_scoped_release nogil;
                res = run(sc);
            }
            py::dict out;
            out["report"] = report_dict(res.report);
            out["trajectory"] = trajectory_dict(res.trajectory);
            if (is_preset(sc.name))
                out["mismatches"] = outcome_mismatches(sc.name, res.report);
            return out;
        },
        py::arg("scenario"), py::arg("duration") = py::none(),
        "Simulate a preset name or a scenario dict.");

    m.def(
        "verify",
        [](const SystemModel &model, std::uint64_t seed, int samples) {
            py::list out;
            for (const auto &p : verify_suite(model, seed, samples)) {
                py::dict d;
                d["name"] = p.name;
                d["passed"] = p.passed;
                d["worst"] = p.worst;
                d["tolerance"] = p.tolerance;
                d["samples"] = p.samples;
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("seed") = 1, py::arg("samples") = 100);
}
