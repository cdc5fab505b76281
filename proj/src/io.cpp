#include "tendonsense/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tendonsense/error.hpp"

namespace tendonsense {

namespace detail {
extern const std::string_view kDefaultConfigJson;
}

namespace {

using nlohmann::json;

/// Reads one JSON object, remembering which keys were consumed so leftovers
/// can be reported with their pointer.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) fail(pointer_, "expected an object");
  }

  const std::string& pointer() const { return pointer_; }
  std::string at(const std::string& key) const { return pointer_ + "/" + key; }

  const json* find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, at(key));
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) out = as_integer<Int>(*v, at(key));
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) out = as_string(*v, at(key));
  }

  void vec3(const std::string& key, Vec3& out) {
    if (const json* v = find(key)) out = as_vec3(*v, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
  }

  [[noreturn]] static void fail(const std::string& pointer, const std::string& msg) {
    throw ConfigError((pointer.empty() ? std::string("/") : pointer) + ": " + msg);
  }

  static double as_number(const json& v, const std::string& ptr) {
    if (!v.is_number()) fail(ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ptr, "expected a finite number");
    return d;
  }

  template <typename Int>
  static Int as_integer(const json& v, const std::string& ptr) {
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) fail(ptr, "integer out of range");
      return static_cast<Int>(u);
    }
    if (v.is_number_integer()) {
      const auto s = v.get<std::int64_t>();
      if constexpr (std::is_unsigned_v<Int>) {
        if (s < 0) fail(ptr, "expected a non-negative integer");
      } else if (s < std::numeric_limits<Int>::min() || s > std::numeric_limits<Int>::max()) {
        fail(ptr, "integer out of range");
      }
      return static_cast<Int>(s);
    }
    fail(ptr, "expected an integer");
  }

  static std::string as_string(const json& v, const std::string& ptr) {
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  static Vec3 as_vec3(const json& v, const std::string& ptr) {
    if (!v.is_array() || v.size() != 3) fail(ptr, "expected an array of 3 numbers");
    return {as_number(v[0], ptr + "/0"), as_number(v[1], ptr + "/1"), as_number(v[2], ptr + "/2")};
  }

 private:
  const json& j_;
  std::string pointer_;
  std::set<std::string> seen_;
};

/// Converts library exceptions raised while interpreting a value into
/// ConfigError at `pointer`.
template <typename F>
auto at_pointer(const std::string& pointer, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    ObjectReader::fail(pointer, e.what());
  }
}

void read_model(const json& j, ShoulderModel& m) {
  ObjectReader r(j, "/model");
  r.vec3("center_mm", m.center);
  r.number("sphere_radius_mm", m.sphere_radius_mm);
  r.number("arm_length_mm", m.arm_length_mm);
  r.vec3("neutral_axis", m.neutral_axis);
  r.finish();
}

void read_layout(const json& j, TendonLayout& layout) {
  ObjectReader r(j, "/layout");
  r.number("arc_length_rel_tol", layout.arc_length_rel_tol);
  if (const json* tendons = r.find("tendons")) {
    const std::string tp = r.at("tendons");
    if (!tendons->is_array()) ObjectReader::fail(tp, "expected an array");
    layout.tendons.clear();
    for (std::size_t i = 0; i < tendons->size(); ++i) {
      const std::string p = tp + "/" + std::to_string(i);
      ObjectReader t((*tendons)[i], p);
      TendonPath path;
      std::string name = "?";
      t.string("name", name);
      if (!t.find("name")) ObjectReader::fail(p, "missing key 'name'");
      path.name = at_pointer(t.at("name"), [&] { return tendon_from_string(name); });
      std::string policy = to_string(path.policy);
      t.string("policy", policy);
      path.policy = at_pointer(t.at("policy"), [&] { return path_policy_from_string(policy); });
      const json* elements = t.find("elements");
      if (!elements) ObjectReader::fail(p, "missing key 'elements'");
      if (!elements->is_array()) ObjectReader::fail(t.at("elements"), "expected an array");
      for (std::size_t k = 0; k < elements->size(); ++k) {
        const std::string ep = t.at("elements") + "/" + std::to_string(k);
        ObjectReader e((*elements)[k], ep);
        RoutingElement el;
        el.id = std::string(to_string(path.name)) + std::to_string(k + 1);
        e.string("id", el.id);
        std::string frame = "torso";
        e.string("frame", frame);
        el.frame = at_pointer(e.at("frame"), [&] { return frame_from_string(frame); });
        if (!e.find("xyz_mm")) ObjectReader::fail(ep, "missing key 'xyz_mm'");
        e.vec3("xyz_mm", el.local_position_mm);
        e.finish();
        path.elements.push_back(std::move(el));
      }
      t.finish();
      layout.tendons.push_back(std::move(path));
    }
  }
  r.finish();
}

void read_sensor(const json& j, Config& cfg) {
  ObjectReader r(j, "/sensor");
  SensorEmulation& s = cfg.sensor;
  r.boolean("emulate", cfg.emulate);
  r.number("supply_voltage_V", s.supply_voltage_V);
  r.integer("adc_bits", s.adc_bits);
  r.number("travel_mm", s.travel_mm);
  r.number("noise_std_mm", s.noise_std_mm);
  r.number("limit_min_mm", s.limit_min_mm);
  r.number("limit_max_mm", s.limit_max_mm);
  r.number("hysteresis_backlash_mm", s.hysteresis_backlash_mm);
  r.integer("seed", s.seed);
  r.finish();
}

void read_train(const json& j, Config& cfg) {
  ObjectReader r(j, "/train");
  TrainConfig& t = cfg.train;
  std::string direction = to_string(cfg.direction);
  r.string("direction", direction);
  cfg.direction = at_pointer(r.at("direction"), [&] { return direction_from_string(direction); });
  if (const json* v = r.find("sensors")) {
    const std::string list = ObjectReader::as_string(*v, r.at("sensors"));
    cfg.sensors = at_pointer(r.at("sensors"), [&] { return SensorSubset::parse(list); });
  }
  if (const json* v = r.find("split")) {
    if (!v->is_array() || v->size() != 3) ObjectReader::fail(r.at("split"), "expected [train, val, test]");
    t.train_fraction = ObjectReader::as_number((*v)[0], r.at("split") + "/0");
    t.val_fraction = ObjectReader::as_number((*v)[1], r.at("split") + "/1");
    t.test_fraction = ObjectReader::as_number((*v)[2], r.at("split") + "/2");
  }
  r.integer("shuffle_seed", t.shuffle_seed);
  r.integer("init_seed", t.init_seed);
  r.number("learning_rate", t.learning_rate);
  r.integer("batch_size", t.batch_size);
  r.integer("max_epochs", t.max_epochs);
  r.integer("early_stop_patience", t.early_stop_patience);
  if (const json* v = r.find("hidden")) {
    if (v->is_null()) t.hidden.reset();
    else t.hidden = ObjectReader::as_integer<std::size_t>(*v, r.at("hidden"));
  }
  std::string activation = to_string(t.activation);
  r.string("activation", activation);
  t.activation = at_pointer(r.at("activation"), [&] { return activation_from_string(activation); });
  r.boolean("azimuth_sin_weighting", t.azimuth_sin_weighting);
  r.finish();
}

void read_protocol(const json& j, ProtocolConfig& p) {
  ObjectReader r(j, "/protocol");
  r.integer("seed", p.seed);
  r.number("frame_rate_hz", p.frame_rate_hz);
  r.number("blend_time_s", p.blend_time_s);
  r.number("random_speed_deg_s", p.random_speed_deg_s);
  r.number("random_time_constant_s", p.random_time_constant_s);
  if (const json* v = r.find("workspace")) {
    ObjectReader w(*v, r.at("workspace"));
    w.number("azimuth_min_deg", p.workspace.azimuth_min_deg);
    w.number("azimuth_max_deg", p.workspace.azimuth_max_deg);
    w.number("elevation_min_deg", p.workspace.elevation_min_deg);
    w.number("elevation_max_deg", p.workspace.elevation_max_deg);
    w.finish();
  }
  if (const json* v = r.find("rows")) {
    ObjectReader rows(*v, r.at("rows"));
    for (MovementKind k : kAllMovements) {
      const json* row = rows.find(to_string(k));
      if (!row) continue;
      ObjectReader o(*row, rows.at(to_string(k)));
      RowOverride ov;
      if (const json* reps = o.find("reps")) ov.reps = ObjectReader::as_integer<int>(*reps, o.at("reps"));
      if (const json* d = o.find("duration_s")) ov.duration_s = ObjectReader::as_number(*d, o.at("duration_s"));
      o.finish();
      p.rows[k] = ov;
    }
    rows.finish();
  }
  r.finish();
}

void read_evaluation(const json& j, EvaluationConfig& e) {
  ObjectReader r(j, "/evaluation");
  r.number("loop_elevation_deg", e.loop_elevation_deg);
  r.number("hysteresis_backlash_mm", e.hysteresis_backlash_mm);
  r.integer("hysteresis_reps", e.hysteresis_reps);
  r.integer("monotonicity_samples", e.monotonicity_samples);
  r.integer("threads", e.threads);
  r.finish();
}

/// Applies `text` on top of `cfg`.
void apply_json(std::string_view text, Config& cfg) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  ObjectReader root(j, "");
  if (const json* v = root.find("model")) read_model(*v, cfg.layout.model);
  if (const json* v = root.find("layout")) read_layout(*v, cfg.layout);
  if (const json* v = root.find("sensor")) read_sensor(*v, cfg);
  if (const json* v = root.find("train")) read_train(*v, cfg);
  if (const json* v = root.find("protocol")) read_protocol(*v, cfg.protocol);
  if (const json* v = root.find("evaluation")) read_evaluation(*v, cfg.evaluation);
  root.finish();
}

std::string read_file(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, std::ios::in | mode);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_for_writing(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | mode);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::vector<TrajectorySpec> ProtocolConfig::specs() const {
  std::vector<TrajectorySpec> out;
  for (MovementKind k : kAllMovements) {
    TrajectorySpec s = TrajectorySpec::protocol_row(k);
    s.seed = seed;
    s.frame_rate_hz = frame_rate_hz;
    s.blend_time_s = blend_time_s;
    s.random_speed_deg_s = random_speed_deg_s;
    s.random_time_constant_s = random_time_constant_s;
    s.workspace = workspace;
    if (auto it = rows.find(k); it != rows.end()) {
      if (it->second.reps) s.reps = *it->second.reps;
      if (it->second.duration_s) s.duration_s = it->second.duration_s;
    }
    out.push_back(s);
  }
  return out;
}

void Config::validate() const {
  layout.validate();
  sensor.validate();
  train.validate();
  for (const auto& s : protocol.specs()) s.validate();
  if (!(evaluation.hysteresis_backlash_mm >= 0.0))
    throw ValidationError("evaluation.hysteresis_backlash_mm must be non-negative");
  if (evaluation.hysteresis_reps < 1) throw ValidationError("evaluation.hysteresis_reps must be at least 1");
  if (evaluation.monotonicity_samples < 2)
    throw ValidationError("evaluation.monotonicity_samples must be at least 2");
  if (!(evaluation.loop_elevation_deg > kElevationMinDeg && evaluation.loop_elevation_deg < kElevationMaxDeg))
    throw ValidationError("evaluation.loop_elevation_deg must lie strictly inside (0, 90)");
}

std::string_view default_config_text() { return detail::kDefaultConfigJson; }

Config default_config() {
  Config cfg;
  apply_json(default_config_text(), cfg);
  return cfg;
}

TendonLayout default_layout() { return default_config().layout; }

Config parse_config(std::string_view json_text) {
  Config cfg = default_config();
  apply_json(json_text, cfg);
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const Config& cfg) {
  using ojson = nlohmann::ordered_json;
  const auto v3 = [](const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); };
  ojson j;
  const ShoulderModel& m = cfg.layout.model;
  j["model"] = {{"center_mm", v3(m.center)},
                {"sphere_radius_mm", m.sphere_radius_mm},
                {"arm_length_mm", m.arm_length_mm},
                {"neutral_axis", v3(m.neutral_axis)}};
  ojson tendons = ojson::array();
  for (const auto& t : cfg.layout.tendons) {
    ojson elements = ojson::array();
    for (const auto& e : t.elements)
      elements.push_back({{"id", e.id}, {"frame", to_string(e.frame)}, {"xyz_mm", v3(e.local_position_mm)}});
    tendons.push_back({{"name", to_string(t.name)}, {"policy", to_string(t.policy)}, {"elements", elements}});
  }
  j["layout"] = {{"arc_length_rel_tol", cfg.layout.arc_length_rel_tol}, {"tendons", tendons}};
  const SensorEmulation& s = cfg.sensor;
  j["sensor"] = {{"emulate", cfg.emulate},
                 {"supply_voltage_V", s.supply_voltage_V},
                 {"adc_bits", s.adc_bits},
                 {"travel_mm", s.travel_mm},
                 {"noise_std_mm", s.noise_std_mm},
                 {"limit_min_mm", s.limit_min_mm},
                 {"limit_max_mm", s.limit_max_mm},
                 {"hysteresis_backlash_mm", s.hysteresis_backlash_mm},
                 {"seed", s.seed}};
  const TrainConfig& t = cfg.train;
  std::string sensors;
  for (TendonName n : cfg.sensors.tendons()) sensors += (sensors.empty() ? "" : ",") + std::string(to_string(n));
  j["train"] = {{"direction", to_string(cfg.direction)},
                {"sensors", sensors},
                {"split", {t.train_fraction, t.val_fraction, t.test_fraction}},
                {"shuffle_seed", t.shuffle_seed},
                {"init_seed", t.init_seed},
                {"learning_rate", t.learning_rate},
                {"batch_size", t.batch_size},
                {"max_epochs", t.max_epochs},
                {"early_stop_patience", t.early_stop_patience},
                {"hidden", t.hidden ? ojson(*t.hidden) : ojson(nullptr)},
                {"activation", to_string(t.activation)},
                {"azimuth_sin_weighting", t.azimuth_sin_weighting}};
  const ProtocolConfig& p = cfg.protocol;
  ojson rows = ojson::object();
  for (const auto& spec : p.specs()) {
    ojson row = {{"reps", spec.reps}};
    if (spec.duration_s) row["duration_s"] = *spec.duration_s;
    rows[to_string(spec.kind)] = row;
  }
  j["protocol"] = {{"seed", p.seed},
                   {"frame_rate_hz", p.frame_rate_hz},
                   {"blend_time_s", p.blend_time_s},
                   {"random_speed_deg_s", p.random_speed_deg_s},
                   {"random_time_constant_s", p.random_time_constant_s},
                   {"workspace",
                    {{"azimuth_min_deg", p.workspace.azimuth_min_deg},
                     {"azimuth_max_deg", p.workspace.azimuth_max_deg},
                     {"elevation_min_deg", p.workspace.elevation_min_deg},
                     {"elevation_max_deg", p.workspace.elevation_max_deg}}},
                   {"rows", rows}};
  const EvaluationConfig& e = cfg.evaluation;
  j["evaluation"] = {{"loop_elevation_deg", e.loop_elevation_deg},
                     {"hysteresis_backlash_mm", e.hysteresis_backlash_mm},
                     {"hysteresis_reps", e.hysteresis_reps},
                     {"monotonicity_samples", e.monotonicity_samples},
                     {"threads", e.threads}};
  return j.dump(2) + "\n";
}

namespace {

void put_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* column) {
  field = trim(field);
  T value{};
  const char* first = field.data();
  if (!field.empty() && field.front() == '+') ++first;
  const auto res = std::from_chars(first, field.data() + field.size(), value);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ParseError(line, std::string("column ") + column + ": cannot parse '" + std::string(field) + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(value))
      throw ParseError(line, std::string("column ") + column + ": non-finite value");
  return value;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  data.validate();
  std::string buf;
  buf.reserve(data.size() * 96 + 128);
  buf += "# provenance=";
  buf += to_string(data.provenance);
  buf += '\n';
  buf += kDatasetHeader;
  buf += '\n';
  for (const Sample& s : data.rows) {
    buf += std::to_string(s.frame);
    for (double v : {s.time_s, s.pose.azimuth_deg, s.pose.elevation_deg, s.sensors.dl_mm[0],
                     s.sensors.dl_mm[1], s.sensors.dl_mm[2], s.sensors.dl_mm[3]}) {
      buf += ',';
      put_number(buf, v);
    }
    buf += '\n';
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("failed to write dataset");
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_for_writing(path, std::ios::binary);
  write_dataset(out, data);
}

Dataset read_dataset(std::istream& in) {
  static constexpr const char* kColumns[] = {"frame",    "time_s",   "theta_deg", "phi_deg",
                                             "dl_F_mm", "dl_SF_mm", "dl_SR_mm",  "dl_R_mm"};
  Dataset data;
  data.provenance = Provenance::Imported;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (header_seen) throw ParseError(line_no, "comment lines must precede the header");
      std::string_view body = trim(view.substr(1));
      if (body.starts_with("provenance=")) {
        const std::string tag(trim(body.substr(11)));
        try {
          data.provenance = provenance_from_string(tag);
        } catch (const ConfigError& e) {
          throw ParseError(line_no, e.what());
        }
      }
      continue;
    }
    if (!header_seen) {
      if (view != kDatasetHeader)
        throw ParseError(line_no, "expected header '" + std::string(kDatasetHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(view);
    if (fields.size() != 8)
      throw ParseError(line_no, "expected 8 columns, found " + std::to_string(fields.size()));
    Sample s;
    s.frame = parse_field<std::int64_t>(fields[0], line_no, kColumns[0]);
    s.time_s = parse_field<double>(fields[1], line_no, kColumns[1]);
    s.pose.azimuth_deg = parse_field<double>(fields[2], line_no, kColumns[2]);
    s.pose.elevation_deg = parse_field<double>(fields[3], line_no, kColumns[3]);
    for (std::size_t k = 0; k < 4; ++k)
      s.sensors.dl_mm[k] = parse_field<double>(fields[4 + k], line_no, kColumns[4 + k]);
    if (!data.rows.empty() && s.frame <= data.rows.back().frame)
      throw ParseError(line_no, "frame numbers must strictly increase");
    data.rows.push_back(s);
  }
  if (!header_seen) throw ParseError(0, "missing header '" + std::string(kDatasetHeader) + "'");
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  try {
    return read_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.detail());
  }
}

namespace {

constexpr char kMagic[8] = {'T', 'S', 'M', 'L', 'P', 0, 0, 0};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t unsigned_le(std::size_t width) {
    if (pos_ + width > bytes_.size()) throw ParseError(0, "model file is truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += width;
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(unsigned_le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(unsigned_le(4)); }
  double f64() { return std::bit_cast<double>(unsigned_le(8)); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const MlpModel& model) {
  model.check_shapes();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kModelVersion);
  out.push_back(static_cast<char>(model.direction == Direction::Forward ? 0 : 1));
  out.push_back(static_cast<char>(model.hidden_activation));
  out.push_back(static_cast<char>(model.sensors.mask()));
  out.push_back(0);
  put_u32(out, static_cast<std::uint32_t>(model.input_size()));
  put_u32(out, static_cast<std::uint32_t>(model.hidden_size()));
  put_u32(out, static_cast<std::uint32_t>(model.output_size()));
  for (const VectorXd* v : {&model.input_scaler.lo, &model.input_scaler.hi, &model.output_scaler.lo,
                            &model.output_scaler.hi})
    for (double d : *v) put_f64(out, d);
  for (Eigen::Index r = 0; r < model.W1.rows(); ++r)
    for (Eigen::Index c = 0; c < model.W1.cols(); ++c) put_f64(out, model.W1(r, c));
  for (double d : model.b1) put_f64(out, d);
  for (Eigen::Index r = 0; r < model.W2.rows(); ++r)
    for (Eigen::Index c = 0; c < model.W2.cols(); ++c) put_f64(out, model.W2(r, c));
  for (double d : model.b2) put_f64(out, d);
  return out;
}

MlpModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw ParseError(0, "not a model file (bad magic)");
  ByteReader r(bytes.substr(sizeof kMagic));
  const std::uint32_t version = r.u32();
  if (version != kModelVersion)
    throw ParseError(0, "unsupported model file version " + std::to_string(version));
  MlpModel m;
  const std::uint8_t direction = r.u8();
  const std::uint8_t activation = r.u8();
  const std::uint8_t mask = r.u8();
  r.u8();
  if (direction > 1) throw ParseError(0, "bad direction tag in model file");
  if (activation > 3) throw ParseError(0, "bad activation tag in model file");
  if (mask == 0 || mask > 15) throw ParseError(0, "bad sensor mask in model file");
  m.direction = direction == 0 ? Direction::Forward : Direction::Inverse;
  m.hidden_activation = static_cast<Activation>(activation);
  m.sensors = SensorSubset(mask);
  const std::uint32_t in = r.u32();
  const std::uint32_t hidden = r.u32();
  const std::uint32_t outs = r.u32();
  if (in == 0 || hidden == 0 || outs == 0 || in > 4096 || hidden > 65536 || outs > 4096)
    throw ParseError(0, "implausible layer sizes in model file");
  const auto read_vec = [&](Eigen::Index n) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = r.f64();
    return v;
  };
  const auto read_mat = [&](Eigen::Index rows, Eigen::Index cols) {
    MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = r.f64();
    return w;
  };
  m.input_scaler.lo = read_vec(in);
  m.input_scaler.hi = read_vec(in);
  m.output_scaler.lo = read_vec(outs);
  m.output_scaler.hi = read_vec(outs);
  m.W1 = read_mat(hidden, in);
  m.b1 = read_vec(hidden);
  m.W2 = read_mat(outs, hidden);
  m.b2 = read_vec(outs);
  if (!r.done()) throw ParseError(0, "trailing bytes after model payload");
  return m;
}

void save_model(const std::filesystem::path& path, const MlpModel& model) {
  const std::string bytes = serialize_model(model);
  auto out = open_for_writing(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path, std::ios::binary));
  } catch (const ParseError& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

}  // namespace tendonsense
