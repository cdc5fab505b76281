#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tendonsense/error.hpp"
#include "tendonsense/io.hpp"

using namespace tendonsense;

namespace {

Dataset random_dataset(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-150, 150);
  Dataset d;
  d.provenance = Provenance::SyntheticEmulated;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.frame = static_cast<std::int64_t>(3 * i + 1);
    s.time_s = static_cast<double>(i) / 120.0;
    s.pose = {u(rng) / 3, std::abs(u(rng)) / 2};
    for (auto& v : s.sensors.dl_mm) v = u(rng) * 1e-3 * static_cast<double>(i % 1000);
    d.rows.push_back(s);
  }
  return d;
}

std::string header_and(const std::string& body) { return std::string(kDatasetHeader) + "\n" + body; }

std::size_t parse_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

void expect_same(const Dataset& a, const Dataset& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.provenance, b.provenance);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.rows[i].frame, b.rows[i].frame);
    EXPECT_EQ(a.rows[i].time_s, b.rows[i].time_s);
    EXPECT_EQ(a.rows[i].pose.azimuth_deg, b.rows[i].pose.azimuth_deg);
    EXPECT_EQ(a.rows[i].pose.elevation_deg, b.rows[i].pose.elevation_deg);
    EXPECT_EQ(a.rows[i].sensors.dl_mm, b.rows[i].sensors.dl_mm);
  }
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tendonsense_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(DatasetCsv, RoundTripIsExact) {
  const Dataset d = random_dataset(500, 1);
  std::stringstream buf;
  write_dataset(buf, d);
  EXPECT_EQ(buf.str().rfind("# provenance=synthetic-emulated\n", 0), 0u);
  expect_same(d, read_dataset(buf));
}

TEST(DatasetCsv, FullProtocolSizeRoundTripIsFast) {
  const Dataset d = random_dataset(29551, 2);
  const auto path = scratch("full.csv");
  const auto t0 = std::chrono::steady_clock::now();
  write_dataset(path, d);
  const Dataset back = read_dataset(path);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  expect_same(d, back);
  EXPECT_LT(secs, 2.0);
}

TEST(DatasetCsv, HeaderOnlyIsEmpty) {
  std::istringstream in(header_and(""));
  const Dataset d = read_dataset(in);
  EXPECT_EQ(d.size(), 0u);
  EXPECT_EQ(d.provenance, Provenance::Imported);
}

TEST(DatasetCsv, ShortRowNamesItsLine) {
  const std::string text = "# provenance=imported\n" +
                           header_and("0,0,10,20,1,2,3,4\n1,0.1,10,20,1,2,3\n");
  EXPECT_EQ(parse_error_line(text), 4u);
  std::istringstream in(text);
  try {
    read_dataset(in);
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("found 7"), std::string::npos);
  }
}

TEST(DatasetCsv, RejectsMalformedRows) {
  EXPECT_EQ(parse_error_line(header_and("0,0,10,nan,1,2,3,4\n")), 2u);
  EXPECT_EQ(parse_error_line(header_and("0,0,10,inf,1,2,3,4\n")), 2u);
  EXPECT_EQ(parse_error_line(header_and("0,0,10,x,1,2,3,4\n")), 2u);
  EXPECT_EQ(parse_error_line(header_and("0,0,10,5,1,2,3,4,9\n")), 2u);
  EXPECT_EQ(parse_error_line(header_and("2,0,1,1,1,2,3,4\n2,0,1,1,1,2,3,4\n")), 3u);
  EXPECT_EQ(parse_error_line(header_and("# late comment\n")), 2u);
  EXPECT_EQ(parse_error_line("frame,time_s,theta,phi,a,b,c,d\n"), 1u);
  std::istringstream empty("");
  EXPECT_THROW(read_dataset(empty), ParseError);
}

TEST(DatasetCsv, MissingFileIsAnError) {
  EXPECT_THROW(read_dataset(scratch("does_not_exist.csv")), Error);
}

TEST(Config, DefaultTextParsesToDefaults) {
  const Config a = default_config();
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.sensors, SensorSubset::all());
  EXPECT_EQ(a.direction, Direction::Inverse);
  EXPECT_EQ(a.layout.tendons.size(), 4u);
  EXPECT_EQ(a.train.learning_rate, 1e-3);
  EXPECT_EQ(a.sensor.adc_bits, 12);
}

TEST(Config, CanonicalJsonRoundTrips) {
  Config c = default_config();
  c.train.max_epochs = 77;
  c.sensor.hysteresis_backlash_mm = 0.25;
  c.sensors = SensorSubset::parse("SF,R");
  c.protocol.rows[MovementKind::Random].duration_s = 12.5;
  const std::string text = config_to_json(c);
  EXPECT_EQ(config_to_json(parse_config(text)), text);
}

TEST(Config, EmptyObjectMeansDefaults) {
  EXPECT_EQ(config_to_json(parse_config("{}")), config_to_json(default_config()));
}

TEST(Config, UnknownKeyNamesPointer) {
  try {
    parse_config(R"({"sensor": {"adcbits": 10}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/sensor/adcbits"), std::string::npos) << e.what();
  }
}

TEST(Config, BadValuesAreConfigErrors) {
  EXPECT_THROW(parse_config(R"({"sensor": {"adc_bits": "twelve"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sensor": {"adc_bits": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"sensors": "F,Q"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"split": [0.5, 0.5, 0.5]}})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
}

TEST(Config, LoadPrefixesPath) {
  const auto path = scratch("bad.json");
  std::ofstream(path) << R"({"evaluation": {"loop_elevation_deg": 95}})";
  try {
    load_config(path);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos) << e.what();
  }
}

TEST(ModelFile, RoundTripIsBitExact) {
  MlpModel m = MlpModel::random(3, 7, 2, Activation::Sigmoid, 5);
  m.direction = Direction::Inverse;
  m.sensors = SensorSubset::parse("F,SR,R");
  m.input_scaler = {VectorXd::Constant(3, -4.5), VectorXd::Constant(3, 9.25)};
  m.output_scaler = {VectorXd::Constant(2, -40), VectorXd::Constant(2, 90)};
  m.b1.setLinSpaced(-0.3, 0.3);
  const auto path = scratch("m.bin");
  save_model(path, m);
  const MlpModel back = load_model(path);
  EXPECT_EQ(back.direction, m.direction);
  EXPECT_EQ(back.sensors, m.sensors);
  EXPECT_EQ(back.hidden_activation, m.hidden_activation);
  EXPECT_EQ(back.W1, m.W1);
  EXPECT_EQ(back.b1, m.b1);
  EXPECT_EQ(back.W2, m.W2);
  EXPECT_EQ(back.b2, m.b2);
  EXPECT_EQ(back.input_scaler.lo, m.input_scaler.lo);
  EXPECT_EQ(back.output_scaler.hi, m.output_scaler.hi);
  EXPECT_EQ(serialize_model(back), serialize_model(m));
}

TEST(ModelFile, LayoutOfHeader) {
  MlpModel m = MlpModel::zeros(4, 25, 2);
  m.direction = Direction::Inverse;
  m.sensors = SensorSubset::all();
  m.input_scaler = {VectorXd::Zero(4), VectorXd::Ones(4)};
  m.output_scaler = {VectorXd::Zero(2), VectorXd::Ones(2)};
  const std::string bytes = serialize_model(m);
  EXPECT_EQ(bytes.substr(0, 8), std::string("TSMLP\0\0\0", 8));
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 15u);
  const std::size_t doubles = 2 * 4 + 2 * 2 + 25 * 4 + 25 + 2 * 25 + 2;
  EXPECT_EQ(bytes.size(), 8 + 4 + 4 + 12 + 8 * doubles);
}

TEST(ModelFile, CorruptionIsParseError) {
  MlpModel m = MlpModel::random(2, 3, 2, Activation::Tanh, 1);
  m.sensors = SensorSubset::parse("F,R");
  m.input_scaler = {VectorXd::Zero(2), VectorXd::Ones(2)};
  m.output_scaler = {VectorXd::Zero(2), VectorXd::Ones(2)};
  const std::string good = serialize_model(m);
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_model(bad), ParseError);
  EXPECT_THROW(deserialize_model(good.substr(0, good.size() - 3)), ParseError);
  EXPECT_THROW(deserialize_model(good + "x"), ParseError);
  bad = good;
  bad[8] = 9;
  EXPECT_THROW(deserialize_model(bad), ParseError);
  bad = good;
  bad[14] = 0;
  EXPECT_THROW(deserialize_model(bad), ParseError);
}
