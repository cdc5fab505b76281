#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tendonsense/error.hpp"
#include "tendonsense/evaluation.hpp"
#include "tendonsense/io.hpp"

namespace tendonsense {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// Relative output paths resolve against TENDONSENSE_OUT_DIR when it is set.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative())
    if (const char* base = std::getenv("TENDONSENSE_OUT_DIR"); base && *base) path = fs::path(base) / path;
  return path;
}

fs::path output_dir(const std::string& p) {
  const fs::path dir = output_path(p);
  fs::create_directories(dir);
  return dir;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::size_t thread_count(const Config& cfg) {
  if (const char* env = std::getenv("TENDONSENSE_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long n = std::strtoul(env, &end, 10);
    if (*end != '\0' || n == 0) throw ConfigError("TENDONSENSE_THREADS must be a positive integer");
    return n;
  }
  return cfg.evaluation.threads;
}

Config config_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

/// A dataset argument may name a CSV file or a `generate` output directory.
Dataset load_data(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "protocol.csv";
  if (!fs::exists(p)) throw Error("dataset '" + p.string() + "' does not exist");
  return read_dataset(p);
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(precision);
  ss << v;
  return ss.str();
}

std::string csv_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ojson rmse_json(const std::vector<std::string>& names, const std::vector<double>& rmse) {
  ojson j = ojson::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = rmse[i];
  return j;
}

void print_rmse(std::ostream& out, const std::vector<std::string>& names, const std::vector<double>& rmse) {
  for (std::size_t i = 0; i < names.size(); ++i) out << "rmse " << names[i] << " " << fmt(rmse[i]) << "\n";
}

struct GenerateArgs {
  std::string config;
  std::string out;
};

void cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const Config cfg = config_or_default(a.config);
  const fs::path dir = output_dir(a.out);
  const auto suite = protocol_suite(cfg.protocol.specs());
  const Dataset all = synthesize(cfg.layout, suite, cfg.emulate ? std::optional(cfg.sensor) : std::nullopt);
  std::size_t offset = 0;
  for (const auto& t : suite) {
    Dataset part;
    part.provenance = all.provenance;
    const std::size_t n = t.trajectory.frames.size();
    part.rows.assign(all.rows.begin() + static_cast<std::ptrdiff_t>(offset),
                     all.rows.begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
    write_dataset(dir / (t.name + ".csv"), part);
    out << t.name << ".csv " << n << " rows\n";
  }
  write_dataset(dir / "protocol.csv", all);
  write_text(dir / "config.json", config_to_json(cfg));
  out << "protocol.csv " << all.size() << " rows (" << to_string(all.provenance) << ")\n";
}

struct TrainArgs {
  std::string data;
  std::string direction;
  std::string sensors;
  std::string out;
  std::string config;
  std::string report;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
  const Config cfg = config_or_default(a.config);
  const Direction direction = a.direction.empty() ? cfg.direction : direction_from_string(a.direction);
  const SensorSubset subset = a.sensors.empty() ? cfg.sensors : SensorSubset::parse(a.sensors);
  if (subset.size() < 2)
    throw ValidationError("--sensors needs at least two tendons (got " + subset.label() + ")");
  const Dataset data = load_data(a.data);
  const TrainResult r = train(data, direction, subset, cfg.train);

  const fs::path model_path = output_path(a.out);
  ensure_parent(model_path);
  save_model(model_path, r.model);

  ojson rep;
  rep["direction"] = to_string(direction);
  rep["sensors"] = subset.label();
  rep["hidden"] = r.model.hidden_size();
  rep["activation"] = to_string(r.model.hidden_activation);
  rep["rows"] = data.size();
  rep["epochs_run"] = r.report.epochs_run;
  rep["best_epoch"] = r.report.best_epoch;
  rep["test_rmse"] = rmse_json(r.report.output_names, r.report.test_rmse);
  rep["train_loss"] = r.report.train_loss;
  rep["val_loss"] = r.report.val_loss;
  const fs::path report_path = a.report.empty() ? fs::path(model_path.string() + ".report.json")
                                                : output_path(a.report);
  write_text(report_path, rep.dump(2) + "\n");

  out << "trained " << to_string(direction) << " " << subset.label() << " hidden "
      << r.model.hidden_size() << " epochs " << r.report.epochs_run << " (best " << r.report.best_epoch
      << ")\n";
  print_rmse(out, r.report.output_names, r.report.test_rmse);
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string sensors;
  std::string config;
  std::string split = "test";
  std::string report;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Config cfg = config_or_default(a.config);
  const MlpModel model = load_model(a.model);
  const Dataset data = load_data(a.data);
  EvalOptions opts;
  opts.azimuth_sin_weighting = cfg.train.azimuth_sin_weighting;
  if (!a.sensors.empty()) opts.sensors = SensorSubset::parse(a.sensors);
  if (a.split == "test") opts.rows = make_split(data.size(), cfg.train).test;
  const std::vector<double> rmse = evaluate_rmse(model, data, opts);
  const auto names = output_names(model.direction, opts.sensors.value_or(model.sensors));
  print_rmse(out, names, rmse);
  if (!a.report.empty()) {
    ojson rep;
    rep["model"] = fs::path(a.model).filename().string();
    rep["direction"] = to_string(model.direction);
    rep["sensors"] = model.sensors.label();
    rep["split"] = a.split;
    rep["rows"] = opts.rows.empty() ? data.size() : opts.rows.size();
    rep["rmse"] = rmse_json(names, rmse);
    write_text(output_path(a.report), rep.dump(2) + "\n");
  }
}

struct AblateArgs {
  std::string data;
  std::string out;
  std::string config;
};

void cmd_ablate(const AblateArgs& a, std::ostream& out) {
  const Config cfg = config_or_default(a.config);
  const Dataset data = load_data(a.data);
  const AblationReport rep = ablate(data, cfg.train, thread_count(cfg));
  const fs::path dir = output_dir(a.out);

  ojson j;
  ojson entries = ojson::array();
  std::string csv = "subset,size,rmse_theta_deg,rmse_phi_deg,mean_rmse_deg,train_seed,epochs_run\n";
  for (const auto& e : rep.entries) {
    entries.push_back({{"subset", e.subset.label()},
                       {"size", e.subset.size()},
                       {"rmse_theta_deg", e.rmse_theta_deg},
                       {"rmse_phi_deg", e.rmse_phi_deg},
                       {"mean_rmse_deg", e.mean_rmse()},
                       {"train_seed", e.train_seed},
                       {"epochs_run", e.epochs_run}});
    csv += e.subset.label() + "," + std::to_string(e.subset.size()) + "," + csv_number(e.rmse_theta_deg) +
           "," + csv_number(e.rmse_phi_deg) + "," + csv_number(e.mean_rmse()) + "," +
           std::to_string(e.train_seed) + "," + std::to_string(e.epochs_run) + "\n";
    out << e.subset.label() << " theta " << fmt(e.rmse_theta_deg) << " phi " << fmt(e.rmse_phi_deg)
        << " mean " << fmt(e.mean_rmse()) << "\n";
  }
  j["entries"] = entries;
  j["mean_pairs_deg"] = rep.group_mean(2);
  j["mean_triples_deg"] = rep.group_mean(3);
  j["mean_quad_deg"] = rep.group_mean(4);
  j["best"] = rep.best().subset.label();
  j["worst_pair"] = rep.worst_pair().subset.label();
  write_text(dir / "ablation.json", j.dump(2) + "\n");
  write_text(dir / "ablation.csv", csv);
  out << "best " << rep.best().subset.label() << ", worst pair " << rep.worst_pair().subset.label() << "\n";
}

struct FwdmapArgs {
  std::string config;
  std::size_t grid = 0;
  std::string out;
};

void cmd_fwdmap(const FwdmapArgs& a, std::ostream& out) {
  const Config cfg = config_or_default(a.config);
  const ForwardSurface s = forward_surface(cfg.layout, Grid::square(a.grid));
  const fs::path dir = output_dir(a.out);
  std::string csv = "theta_deg,phi_deg,dl_F_mm,dl_SF_mm,dl_SR_mm,dl_R_mm\n";
  for (std::size_t j = 0; j < s.grid.elevation_count; ++j)
    for (std::size_t i = 0; i < s.grid.azimuth_count; ++i) {
      csv += csv_number(s.grid.azimuth(i)) + "," + csv_number(s.grid.elevation(j));
      for (const auto& m : s.dl_mm)
        csv += "," + csv_number(m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
      csv += "\n";
    }
  write_text(dir / "forward_surface.csv", csv);

  const MonotonicityReport mono = monotonicity_screen(
      cfg.layout, canonical_sweeps(cfg.evaluation.monotonicity_samples), quantization_step(cfg.sensor));
  std::string mcsv = "tendon,sweep,trend,reversals,max_reversal_mm,net_change_mm,monotone\n";
  ojson entries = ojson::array();
  for (const auto& e : mono.entries) {
    mcsv += std::string(to_string(e.tendon)) + "," + e.sweep + "," + std::to_string(e.trend) + "," +
            std::to_string(e.reversals) + "," + csv_number(e.max_reversal_mm) + "," +
            csv_number(e.net_change_mm) + "," + (e.monotone ? "true" : "false") + "\n";
    entries.push_back({{"tendon", to_string(e.tendon)},
                       {"sweep", e.sweep},
                       {"trend", e.trend},
                       {"reversals", e.reversals},
                       {"max_reversal_mm", e.max_reversal_mm},
                       {"net_change_mm", e.net_change_mm},
                       {"monotone", e.monotone}});
  }
  write_text(dir / "monotonicity.csv", mcsv);
  write_text(dir / "monotonicity.json",
             ojson({{"dead_band_mm", mono.dead_band_mm}, {"entries", entries}}).dump(2) + "\n");
  out << "forward_surface.csv " << s.grid.azimuth_count << "x" << s.grid.elevation_count << " nodes\n";
  for (const auto& e : mono.entries)
    out << to_string(e.tendon) << " " << e.sweep << " trend " << e.trend << " reversals " << e.reversals << "\n";
}

struct HysteresisArgs {
  std::string config;
  std::string out;
};

void cmd_hysteresis(const HysteresisArgs& a, std::ostream& out) {
  const Config cfg = config_or_default(a.config);
  TrajectorySpec spec = cfg.protocol.specs().front();
  spec.reps = cfg.evaluation.hysteresis_reps;
  spec.duration_s.reset();
  SensorEmulation emu = cfg.sensor;
  emu.hysteresis_backlash_mm = cfg.evaluation.hysteresis_backlash_mm;
  SensorEmulation baseline = cfg.sensor;
  baseline.hysteresis_backlash_mm = 0.0;
  baseline.noise_std_mm = 0.0;
  const double level = cfg.evaluation.loop_elevation_deg;
  const HysteresisRun run = run_hysteresis(cfg.layout, emu, spec, level);
  const HysteresisRun base = run_hysteresis(cfg.layout, baseline, spec, level);
  const fs::path dir = output_dir(a.out);

  std::string csv = "frame,time_s,theta_deg,phi_deg";
  for (TendonName t : kAllTendons) csv += std::string(",ideal_") + to_string(t) + "_mm";
  for (TendonName t : kAllTendons) csv += std::string(",emulated_") + to_string(t) + "_mm";
  csv += "\n";
  for (std::size_t k = 0; k < run.ideal.size(); ++k) {
    const auto& f = run.trajectory.frames[k];
    csv += std::to_string(k) + "," + csv_number(f.time_s) + "," + csv_number(f.pose.azimuth_deg) + "," +
           csv_number(f.pose.elevation_deg);
    for (double v : run.ideal[k].dl_mm) csv += "," + csv_number(v);
    for (double v : run.emulated[k].dl_mm) csv += "," + csv_number(v);
    csv += "\n";
  }
  write_text(dir / "loops.csv", csv);

  const auto metrics_json = [](const HysteresisMetrics& m) {
    ojson j = ojson::object();
    for (TendonName t : kAllTendons)
      j[to_string(t)] = {{"loop_width_mm", m[t].loop_width_mm},
                         {"residual_offset_mm", m[t].residual_offset_mm},
                         {"rms_gap_mm", m[t].rms_gap_mm}};
    return j;
  };
  ojson j;
  j["loop_elevation_deg"] = level;
  j["backlash_mm"] = emu.hysteresis_backlash_mm;
  j["quantization_step_mm"] = quantization_step(emu);
  j["emulated"] = metrics_json(run.metrics);
  j["baseline"] = metrics_json(base.metrics);
  write_text(dir / "hysteresis.json", j.dump(2) + "\n");
  for (TendonName t : kAllTendons)
    out << to_string(t) << " loop_width " << fmt(run.metrics[t].loop_width_mm) << " residual "
        << fmt(run.metrics[t].residual_offset_mm) << " rms_gap " << fmt(run.metrics[t].rms_gap_mm) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tendon-based shoulder sensing: simulate, train and evaluate", "tendonsense"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample the protocol suite and write dataset CSVs");
  g->add_option("--config", gen.config, "Config JSON (built-in defaults when omitted)")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a forward or inverse model");
  t->add_option("--data", tr.data, "Dataset CSV or generate output directory")->required();
  t->add_option("--direction", tr.direction, "inv (sensors to angles) or fwd")
      ->check(CLI::IsMember({"inv", "fwd", "inverse", "forward"}));
  t->add_option("--sensors", tr.sensors, "Comma separated tendons, at least two (e.g. F,SF,SR,R)");
  t->add_option("--out", tr.out, "Model file to write")->required();
  t->add_option("--config", tr.config, "Config JSON supplying the train section")->check(CLI::ExistingFile);
  t->add_option("--report", tr.report, "Training report JSON (default: <model>.report.json)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Print per-output RMSE of a model on a dataset");
  e->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "Dataset CSV or generate output directory")->required();
  e->add_option("--sensors", ev.sensors, "Sensor columns to feed (default: the model's own)");
  e->add_option("--config", ev.config, "Config JSON supplying split seeds")->check(CLI::ExistingFile);
  e->add_option("--split", ev.split, "Rows to score")->check(CLI::IsMember({"test", "all"}));
  e->add_option("--report", ev.report, "Evaluation report JSON");

  AblateArgs ab;
  auto* b = app.add_subcommand("ablate", "Train one inverse model per sensor subset");
  b->add_option("--data", ab.data, "Dataset CSV or generate output directory")->required();
  b->add_option("--out", ab.out, "Output directory")->required();
  b->add_option("--config", ab.config, "Config JSON supplying the train section")->check(CLI::ExistingFile);

  FwdmapArgs fw;
  auto* f = app.add_subcommand("fwdmap", "Evaluate forward surfaces and the monotonicity screen");
  f->add_option("--config", fw.config, "Config JSON")->check(CLI::ExistingFile);
  f->add_option("--grid", fw.grid, "Nodes per axis")->required()->check(CLI::Range(2, 2001));
  f->add_option("--out", fw.out, "Output directory")->required();

  HysteresisArgs hy;
  auto* h = app.add_subcommand("hysteresis", "Compare ideal and emulated channels on a repeated F/E sweep");
  h->add_option("--config", hy.config, "Config JSON")->check(CLI::ExistingFile);
  h->add_option("--out", hy.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*g) cmd_generate(gen, out);
    else if (*t) cmd_train(tr, out);
    else if (*e) cmd_eval(ev, out);
    else if (*b) cmd_ablate(ab, out);
    else if (*f) cmd_fwdmap(fw, out);
    else if (*h) cmd_hysteresis(hy, out);
  } catch (const DimensionError& ex) {
    err << "error: dimension mismatch: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tendonsense
