#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tendonsense/error.hpp"
#include "tendonsense/evaluation.hpp"
#include "tendonsense/io.hpp"

namespace py = pybind11;
using namespace tendonsense;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

JointPose pose_of(double theta, double phi) { return {theta, phi}; }

RowMatrix delta_lengths(const TendonLayout& layout, const RowMatrix& poses) {
  if (poses.cols() != 2) throw DimensionError("poses must have shape (n, 2)");
  const NeutralReference neutral = NeutralReference::compute(layout);
  RowMatrix out(poses.rows(), 4);
  for (Eigen::Index i = 0; i < poses.rows(); ++i) {
    const SensorFrame f = delta_length(layout, neutral, pose_of(poses(i, 0), poses(i, 1)));
    for (Eigen::Index k = 0; k < 4; ++k) out(i, k) = f.dl_mm[static_cast<std::size_t>(k)];
  }
  return out;
}

RowMatrix emulate_stream(const SensorEmulation& emu, const RowMatrix& ideal) {
  if (ideal.cols() != 4) throw DimensionError("readings must have shape (n, 4)");
  emu.validate();
  SensorEmulator e(emu);
  RowMatrix out(ideal.rows(), 4);
  for (Eigen::Index i = 0; i < ideal.rows(); ++i) {
    SensorFrame f;
    for (Eigen::Index k = 0; k < 4; ++k) f.dl_mm[static_cast<std::size_t>(k)] = ideal(i, k);
    const SensorFrame y = e.step(f);
    for (Eigen::Index k = 0; k < 4; ++k) out(i, k) = y.dl_mm[static_cast<std::size_t>(k)];
  }
  return out;
}

RowMatrix trajectory_array(const Trajectory& t) {
  RowMatrix out(static_cast<Eigen::Index>(t.frames.size()), 3);
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out(r, 0) = t.frames[i].time_s;
    out(r, 1) = t.frames[i].pose.azimuth_deg;
    out(r, 2) = t.frames[i].pose.elevation_deg;
  }
  return out;
}

py::dict report_dict(const TrainReport& r) {
  py::dict d;
  d["train_loss"] = r.train_loss;
  d["val_loss"] = r.val_loss;
  d["epochs_run"] = r.epochs_run;
  d["best_epoch"] = r.best_epoch;
  py::dict rmse;
  for (std::size_t i = 0; i < r.output_names.size(); ++i) rmse[py::str(r.output_names[i])] = r.test_rmse[i];
  d["test_rmse"] = rmse;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tendon-based shoulder proprioception simulator";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<UnknownTendonError>(m, "UnknownTendonError", base);
  py::register_exception<InvalidPathError>(m, "InvalidPathError", base);
  py::register_exception<DegenerateScaleError>(m, "DegenerateScaleError", base);
  py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", base);

  m.attr("TENDONS") = py::make_tuple("F", "SF", "SR", "R");

  m.def("arm_axis", [](double theta, double phi) { return Vec3(arm_axis(pose_of(theta, phi))); },
        py::arg("theta_deg"), py::arg("phi_deg"));
  m.def("humerus_rotation", [](double theta, double phi) { return Mat3(humerus_rotation(pose_of(theta, phi))); },
        py::arg("theta_deg"), py::arg("phi_deg"));
  m.def(
      "arc_length",
      [](const RowMatrix& pts, const std::string& policy) {
        if (pts.cols() != 3) throw DimensionError("points must have shape (n, 3)");
        std::vector<Vec3> v;
        for (Eigen::Index i = 0; i < pts.rows(); ++i) v.emplace_back(pts(i, 0), pts(i, 1), pts(i, 2));
        return arc_length(v, path_policy_from_string(policy), {});
      },
      py::arg("points"), py::arg("policy") = "spline");

  py::class_<TendonLayout>(m, "Layout")
      .def("tendon_length",
           [](const TendonLayout& l, const std::string& name, double theta, double phi) {
             return tendon_length(l, tendon_from_string(name), pose_of(theta, phi));
           },
           py::arg("tendon"), py::arg("theta_deg"), py::arg("phi_deg"))
      .def("delta_lengths", &delta_lengths, py::arg("poses"),
           "Sensor readings (n, 4) in F, SF, SR, R order for poses (n, 2) of (theta, phi).")
      .def("set_policy", [](TendonLayout& l, const std::string& policy) {
        for (auto& p : l.tendons) p.policy = path_policy_from_string(policy);
      });
  m.def("default_layout", &default_layout);

  py::class_<SensorEmulation>(m, "SensorEmulation")
      .def(py::init<>())
      .def_readwrite("supply_voltage_V", &SensorEmulation::supply_voltage_V)
      .def_readwrite("adc_bits", &SensorEmulation::adc_bits)
      .def_readwrite("travel_mm", &SensorEmulation::travel_mm)
      .def_readwrite("noise_std_mm", &SensorEmulation::noise_std_mm)
      .def_readwrite("limit_min_mm", &SensorEmulation::limit_min_mm)
      .def_readwrite("limit_max_mm", &SensorEmulation::limit_max_mm)
      .def_readwrite("hysteresis_backlash_mm", &SensorEmulation::hysteresis_backlash_mm)
      .def_readwrite("seed", &SensorEmulation::seed)
      .def_property_readonly("quantization_step", [](const SensorEmulation& e) { return quantization_step(e); })
      .def("emulate", &emulate_stream, py::arg("ideal"), "Run a fresh emulator over readings (n, 4).");

  py::class_<Config>(m, "Config")
      .def(py::init(&default_config))
      .def_static("from_json", [](const std::string& text) { return parse_config(text); })
      .def_static("load", &load_config)
      .def("to_json", &config_to_json)
      .def_readwrite("layout", &Config::layout)
      .def_readwrite("sensor", &Config::sensor);

  m.def(
      "protocol_suite",
      [](const Config& cfg) {
        py::list out;
        for (const auto& t : protocol_suite(cfg.protocol.specs()))
          out.append(py::make_tuple(t.name, trajectory_array(t.trajectory)));
        return out;
      },
      py::arg("config") = default_config(), "List of (row name, array (n, 3) of time, theta, phi).");

  py::class_<Dataset>(m, "Dataset")
      .def_static("read", py::overload_cast<const std::filesystem::path&>(&read_dataset))
      .def("write", [](const Dataset& d, const std::filesystem::path& p) { write_dataset(p, d); })
      .def("__len__", &Dataset::size)
      .def_property_readonly("provenance", [](const Dataset& d) { return std::string(to_string(d.provenance)); })
      .def_property_readonly("poses", [](const Dataset& d) {
        RowMatrix out(static_cast<Eigen::Index>(d.size()), 2);
        for (std::size_t i = 0; i < d.size(); ++i) {
          out(static_cast<Eigen::Index>(i), 0) = d.rows[i].pose.azimuth_deg;
          out(static_cast<Eigen::Index>(i), 1) = d.rows[i].pose.elevation_deg;
        }
        return out;
      })
      .def_property_readonly("sensors", [](const Dataset& d) {
        RowMatrix out(static_cast<Eigen::Index>(d.size()), 4);
        for (std::size_t i = 0; i < d.size(); ++i)
          for (std::size_t k = 0; k < 4; ++k)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = d.rows[i].sensors.dl_mm[k];
        return out;
      });

  m.def(
      "synthesize",
      [](const Config& cfg, bool emulate) {
        return synthesize(cfg.layout, protocol_suite(cfg.protocol.specs()),
                          emulate ? std::optional(cfg.sensor) : std::nullopt);
      },
      py::arg("config") = default_config(), py::arg("emulate") = false);

  py::class_<MlpModel>(m, "Model")
      .def_static("load", &load_model)
      .def_static("from_bytes", [](const py::bytes& b) { return deserialize_model(std::string(b)); })
      .def("save", [](const MlpModel& model, const std::filesystem::path& p) { save_model(p, model); })
      .def("to_bytes", [](const MlpModel& model) { return py::bytes(serialize_model(model)); })
      .def_property_readonly("direction", [](const MlpModel& model) { return std::string(to_string(model.direction)); })
      .def_property_readonly("sensors", [](const MlpModel& model) { return model.sensors.label(); })
      .def_property_readonly("hidden_size", &MlpModel::hidden_size)
      .def(
          "predict",
          [](const MlpModel& model, const RowMatrix& x) -> RowMatrix {
            return predict(model, Eigen::MatrixXd(x.transpose())).transpose();
          },
          py::arg("x"), "Rows are samples in physical units.");

  m.def(
      "train",
      [](const Dataset& data, const std::string& direction, const std::string& sensors, const Config& cfg) {
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(data, direction_from_string(direction), SensorSubset::parse(sensors), cfg.train);
        }
        return py::make_tuple(r.model, report_dict(r.report));
      },
      py::arg("data"), py::arg("direction") = "inv", py::arg("sensors") = "F,SF,SR,R",
      py::arg("config") = default_config(), "Returns (model, report).");

  m.def(
      "evaluate_rmse",
      [](const MlpModel& model, const Dataset& data, const std::string& split, const Config& cfg) {
        EvalOptions o;
        if (split == "test") o.rows = make_split(data.size(), cfg.train).test;
        else if (split != "all") throw ValidationError("split must be 'test' or 'all'");
        return evaluate_rmse(model, data, o);
      },
      py::arg("model"), py::arg("data"), py::arg("split") = "test", py::arg("config") = default_config());

  m.def(
      "monotonicity",
      [](const TendonLayout& layout, std::size_t samples, double dead_band_mm) {
        py::list out;
        for (const auto& e : monotonicity_screen(layout, canonical_sweeps(samples), dead_band_mm).entries) {
          py::dict d;
          d["tendon"] = to_string(e.tendon);
          d["sweep"] = e.sweep;
          d["trend"] = e.trend;
          d["reversals"] = e.reversals;
          d["net_change_mm"] = e.net_change_mm;
          out.append(d);
        }
        return out;
      },
      py::arg("layout"), py::arg("samples") = 181, py::arg("dead_band_mm") = quantization_step(SensorEmulation{}));

  m.def(
      "loop_widths",
      [](const TendonLayout& layout, const SensorEmulation& emu, int reps) {
        TrajectorySpec spec = TrajectorySpec::protocol_row(MovementKind::FlexExt);
        spec.reps = reps;
        const HysteresisRun run = run_hysteresis(layout, emu, spec);
        py::dict d;
        for (TendonName t : kAllTendons) d[to_string(t)] = run.metrics[t].loop_width_mm;
        return d;
      },
      py::arg("layout"), py::arg("emulation"), py::arg("reps") = 4,
      "Loop width per tendon on a repeated flexion/extension sweep.");
}
