#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "tendonsense/error.hpp"
#include "tendonsense/mapping.hpp"

using namespace tendonsense;

namespace {

/// Sensors linear in the joint angles: S = M q.
Dataset linear_dataset(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> az(-40, 90), el(0, 90);
  const double m[4][2] = {{0.5, -1.0}, {-0.3, 0.8}, {1.2, 0.4}, {-0.7, -0.2}};
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.frame = static_cast<std::int64_t>(i);
    s.time_s = static_cast<double>(i) / 120.0;
    s.pose = {az(rng), el(rng)};
    for (std::size_t k = 0; k < 4; ++k)
      s.sensors.dl_mm[k] = m[k][0] * s.pose.azimuth_deg + m[k][1] * s.pose.elevation_deg;
    d.rows.push_back(s);
  }
  return d;
}

/// Element-by-element recomputation of W2 act(W1 x + b1) + b2.
VectorXd loop_forward(const MlpModel& m, const VectorXd& x) {
  VectorXd h(m.W1.rows());
  for (Eigen::Index i = 0; i < m.W1.rows(); ++i) {
    double z = m.b1[i];
    for (Eigen::Index j = 0; j < m.W1.cols(); ++j) z += m.W1(i, j) * x[j];
    switch (m.hidden_activation) {
      case Activation::Tanh: h[i] = std::tanh(z); break;
      case Activation::Sigmoid: h[i] = 1.0 / (1.0 + std::exp(-z)); break;
      case Activation::ReLU: h[i] = z > 0 ? z : 0; break;
      case Activation::Linear: h[i] = z; break;
    }
  }
  VectorXd y(m.W2.rows());
  for (Eigen::Index i = 0; i < m.W2.rows(); ++i) {
    double v = m.b2[i];
    for (Eigen::Index j = 0; j < m.W2.cols(); ++j) v += m.W2(i, j) * h[j];
    y[i] = v;
  }
  return y;
}

MlpModel random_model(std::size_t in, std::size_t hidden, std::size_t out, Activation act, unsigned seed) {
  MlpModel m = MlpModel::random(in, hidden, out, act, seed);
  std::mt19937 rng(seed + 1000);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& v : m.b1) v = u(rng);
  for (auto& v : m.b2) v = u(rng);
  return m;
}

VectorXd random_vector(std::size_t n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.batch_size = 64;
  cfg.learning_rate = 5e-3;
  return cfg;
}

}  // namespace

TEST(AffineScaler, MapsRangeOntoUnitInterval) {
  MatrixXd x(1, 3);
  x << 0, 5, 10;
  const AffineScaler s = AffineScaler::fit(x);
  const MatrixXd y = s.apply(x);
  EXPECT_DOUBLE_EQ(y(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(y(0, 2), 1.0);
}

TEST(AffineScaler, RoundTrip) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-500, 500);
  MatrixXd x(4, 200);
  for (auto& v : x.reshaped()) v = u(rng);
  const AffineScaler s = AffineScaler::fit(x);
  EXPECT_LT((s.invert(s.apply(x)) - x).cwiseAbs().maxCoeff(), 1e-12 * 500);
}

TEST(AffineScaler, ConstantColumnIsDegenerate) {
  MatrixXd x(2, 3);
  x << 1, 2, 3, 7, 7, 7;
  EXPECT_THROW(AffineScaler::fit(x), DegenerateScaleError);
}

TEST(AffineScaler, TrainFitExtrapolatesOnHeldOutRows) {
  // The split is shuffled, so extreme rows land in val/test for some seeds.
  const Dataset d = linear_dataset(400, 2);
  const TrainConfig cfg;
  const Split split = make_split(d.size(), cfg);
  MatrixXd train_x(2, static_cast<Eigen::Index>(split.train.size()));
  for (std::size_t i = 0; i < split.train.size(); ++i)
    train_x.col(static_cast<Eigen::Index>(i)) << d.rows[split.train[i]].pose.azimuth_deg,
        d.rows[split.train[i]].pose.elevation_deg;
  const AffineScaler s = AffineScaler::fit(train_x);
  std::size_t outside = 0;
  for (std::size_t r : split.test) {
    const VectorXd x = (VectorXd(2) << d.rows[r].pose.azimuth_deg, d.rows[r].pose.elevation_deg).finished();
    outside += (s.apply(x).cwiseAbs().array() > 1.0).any();
  }
  for (std::size_t r : split.val) {
    const VectorXd x = (VectorXd(2) << d.rows[r].pose.azimuth_deg, d.rows[r].pose.elevation_deg).finished();
    outside += (s.apply(x).cwiseAbs().array() > 1.0).any();
  }
  EXPECT_GT(outside, 0u);
}

TEST(Forward, ZeroModelGivesZero) {
  const MlpModel m = MlpModel::zeros(4, 25, 2);
  EXPECT_EQ(forward(m, VectorXd(VectorXd::Constant(4, 0.3))), VectorXd::Zero(2));
}

TEST(Forward, SingleTanhUnit) {
  MlpModel m = MlpModel::zeros(1, 1, 1);
  m.W1(0, 0) = 1.0;
  m.W2(0, 0) = 1.0;
  for (double x : {-2.0, -0.5, 0.0, 0.7, 3.0}) EXPECT_DOUBLE_EQ(forward(m, VectorXd(VectorXd::Constant(1, x)))[0], std::tanh(x));
}

TEST(Forward, MatchesLoopOracle) {
  std::mt19937 rng(3);
  for (Activation a : {Activation::Tanh, Activation::Sigmoid, Activation::ReLU, Activation::Linear}) {
    const MlpModel m = random_model(4, 25, 2, a, 17);
    for (int k = 0; k < 10; ++k) {
      const VectorXd x = random_vector(4, rng);
      EXPECT_LT((forward(m, x) - loop_forward(m, x)).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(Forward, BatchEqualsColumnwise) {
  std::mt19937 rng(4);
  const MlpModel m = random_model(3, 8, 2, Activation::Tanh, 5);
  MatrixXd x(3, 7);
  for (auto& v : x.reshaped()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const MatrixXd y = forward(m, x);
  for (Eigen::Index c = 0; c < x.cols(); ++c) EXPECT_EQ(y.col(c), forward(m, VectorXd(x.col(c))));
}

TEST(Forward, RejectsWrongArity) {
  const MlpModel m = MlpModel::zeros(3, 25, 2);
  EXPECT_THROW(forward(m, VectorXd(VectorXd::Zero(4))), DimensionError);
  EXPECT_THROW(predict(m, VectorXd(VectorXd::Zero(2))), DimensionError);
}

TEST(GradientCheck, RandomSmallModels) {
  std::mt19937 rng(6);
  for (int k = 0; k < 20; ++k) {
    const std::size_t in = 2 + k % 3, hidden = 3 + k % 5, out = 1 + k % 2;
    const MlpModel m = random_model(in, hidden, out, k % 2 ? Activation::Sigmoid : Activation::Tanh,
                                    static_cast<unsigned>(100 + k));
    EXPECT_LE(gradient_check(m, random_vector(in, rng), random_vector(out, rng)), 1e-4) << k;
  }
}

TEST(GradientCheck, ZeroModelZeroTarget) {
  const MlpModel m = MlpModel::zeros(3, 4, 2);
  EXPECT_EQ(loss_gradient(m, MatrixXd::Constant(3, 1, 0.5), MatrixXd::Zero(2, 1)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(gradient_check(m, VectorXd::Constant(3, 0.5), VectorXd::Zero(2)), 0.0);
}

TEST(GradientCheck, CentralDifferenceIsSecondOrder) {
  std::mt19937 rng(7);
  const MlpModel m = random_model(4, 6, 2, Activation::Tanh, 8);
  const VectorXd x = random_vector(4, rng), t = random_vector(2, rng);
  const double e3 = gradient_check(m, x, t, 1e-3);
  const double e4 = gradient_check(m, x, t, 1e-4);
  // A tenfold smaller step cuts the truncation error about a hundredfold,
  // until roundoff takes over below ~1e-5.
  EXPECT_GT(e3 / e4, 30.0);
  EXPECT_LT(e3 / e4, 300.0);
  EXPECT_LT(gradient_check(m, x, t, 1e-5), 1e-7);
}

TEST(SensorSubset, ParseAndLabel) {
  EXPECT_EQ(SensorSubset::parse("F,SF,SR,R"), SensorSubset::all());
  EXPECT_EQ(SensorSubset::parse("R, F").label(), "F+R");
  EXPECT_EQ(SensorSubset::parse("SR").size(), 1u);
  EXPECT_THROW(SensorSubset::parse("F,F"), ValidationError);
  EXPECT_THROW(SensorSubset::parse(""), ValidationError);
  EXPECT_THROW(SensorSubset::parse("F,,R"), ValidationError);
  EXPECT_THROW(SensorSubset::parse("F,Q"), UnknownTendonError);
}

TEST(SensorSubset, AblationSubsetsAreTheElevenOfSizeTwoOrMore) {
  const auto subsets = SensorSubset::ablation_subsets();
  ASSERT_EQ(subsets.size(), 11u);
  std::set<std::uint8_t> masks;
  for (const auto& s : subsets) {
    EXPECT_GE(s.size(), 2u);
    masks.insert(s.mask());
  }
  EXPECT_EQ(masks.size(), 11u);
  EXPECT_EQ(subsets.front().label(), "F+SF");
  EXPECT_EQ(subsets.back().label(), "F+SF+SR+R");
}

TEST(Split, FractionsAndDisjointness) {
  const Split s = make_split(1000, TrainConfig{});
  EXPECT_EQ(s.train.size(), 650u);
  EXPECT_EQ(s.val.size(), 150u);
  EXPECT_EQ(s.test.size(), 200u);
  std::vector<std::size_t> all;
  for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(Split, RejectsBadConfigs) {
  TrainConfig cfg;
  cfg.test_fraction = 0.3;
  EXPECT_THROW(make_split(100, cfg), ValidationError);
  EXPECT_THROW(make_split(3, TrainConfig{}), ValidationError);
}

TEST(Train, LinearDataInverseIsAccurate) {
  const Dataset d = linear_dataset(3000, 9);
  TrainConfig cfg;
  cfg.max_epochs = 400;
  const TrainResult r = train(d, Direction::Inverse, SensorSubset::all(), cfg);
  ASSERT_EQ(r.report.test_rmse.size(), 2u);
  EXPECT_LT(r.report.test_rmse[0], 0.5);
  EXPECT_LT(r.report.test_rmse[1], 0.5);
  EXPECT_EQ(r.model.hidden_size(), 25u);
  EXPECT_EQ(r.model.input_size(), 4u);
}

TEST(Train, ForwardDefaultsToEightHiddenUnits) {
  const Dataset d = linear_dataset(300, 10);
  const TrainResult r = train(d, Direction::Forward, SensorSubset::parse("F,R"), quick_config());
  EXPECT_EQ(r.model.hidden_size(), 8u);
  EXPECT_EQ(r.model.output_size(), 2u);
  EXPECT_EQ(r.report.output_names, (std::vector<std::string>{"dl_F_mm", "dl_R_mm"}));
}

TEST(Train, IdenticalSeedsGiveIdenticalWeights) {
  const Dataset d = linear_dataset(500, 11);
  const TrainResult a = train(d, Direction::Inverse, SensorSubset::parse("F,SF,R"), quick_config());
  const TrainResult b = train(d, Direction::Inverse, SensorSubset::parse("F,SF,R"), quick_config());
  EXPECT_EQ(a.model.W1, b.model.W1);
  EXPECT_EQ(a.model.b1, b.model.b1);
  EXPECT_EQ(a.model.W2, b.model.W2);
  EXPECT_EQ(a.model.b2, b.model.b2);
  EXPECT_EQ(a.report.val_loss, b.report.val_loss);
}

TEST(Train, TestRowsNeverInfluenceTheModel) {
  const Dataset d = linear_dataset(500, 12);
  Dataset perturbed = d;
  const Split split = make_split(d.size(), quick_config());
  for (std::size_t r : split.test) {
    perturbed.rows[r].pose.azimuth_deg += 1000.0;
    perturbed.rows[r].sensors.dl_mm[0] = -1e6;
  }
  const TrainResult a = train(d, Direction::Inverse, SensorSubset::all(), quick_config());
  const TrainResult b = train(perturbed, Direction::Inverse, SensorSubset::all(), quick_config());
  EXPECT_EQ(a.model.W1, b.model.W1);
  EXPECT_EQ(a.model.W2, b.model.W2);
  EXPECT_EQ(a.model.input_scaler.lo, b.model.input_scaler.lo);
  EXPECT_EQ(a.model.output_scaler.hi, b.model.output_scaler.hi);
  EXPECT_EQ(a.report.train_loss, b.report.train_loss);
  EXPECT_NE(a.report.test_rmse, b.report.test_rmse);
}

TEST(Train, LinearActivationFullBatchLossNeverIncreases) {
  const Dataset d = linear_dataset(400, 13);
  TrainConfig cfg;
  cfg.activation = Activation::Linear;
  cfg.batch_size = 100000;
  cfg.learning_rate = 1e-4;
  cfg.max_epochs = 150;
  const TrainResult r = train(d, Direction::Inverse, SensorSubset::all(), cfg);
  for (std::size_t e = 1; e < r.report.train_loss.size(); ++e)
    EXPECT_LE(r.report.train_loss[e], r.report.train_loss[e - 1]) << e;
}

TEST(Train, EarlyStoppingKeepsBestValidationWeights) {
  const Dataset d = linear_dataset(400, 14);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 400;
  cfg.early_stop_patience = 5;
  cfg.learning_rate = 0.05;
  const TrainResult r = train(d, Direction::Inverse, SensorSubset::all(), cfg);
  const auto& v = r.report.val_loss;
  ASSERT_GE(r.report.best_epoch, 1u);
  EXPECT_EQ(*std::min_element(v.begin(), v.end()), v[r.report.best_epoch - 1]);
  EXPECT_LE(r.report.epochs_run, r.report.best_epoch + cfg.early_stop_patience);
}

TEST(Train, DivergenceReportsEpoch) {
  Dataset d = linear_dataset(200, 15);
  TrainConfig cfg = quick_config();
  cfg.learning_rate = 1e300;
  cfg.activation = Activation::Linear;
  try {
    train(d, Direction::Inverse, SensorSubset::all(), cfg);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_GE(e.epoch(), 1u);
    EXPECT_LE(e.epoch(), cfg.max_epochs);
  }
}

TEST(Train, RejectsTooFewSensorsOrRows) {
  const Dataset d = linear_dataset(200, 16);
  EXPECT_THROW(train(d, Direction::Inverse, SensorSubset::parse("F"), quick_config()), ValidationError);
  const Dataset tiny = linear_dataset(9, 17);
  EXPECT_THROW(train(tiny, Direction::Inverse, SensorSubset::all(), quick_config()), ValidationError);
}

TEST(Evaluate, ArityMismatchIsDimensionError) {
  const Dataset d = linear_dataset(300, 18);
  const TrainResult r = train(d, Direction::Inverse, SensorSubset::parse("F,SF,SR"), quick_config());
  EvalOptions o;
  o.sensors = SensorSubset::all();
  EXPECT_THROW(evaluate_rmse(r.model, d, o), DimensionError);
  o.sensors = SensorSubset::parse("SF,SR,R");
  EXPECT_NO_THROW(evaluate_rmse(r.model, d, o));
}

TEST(Evaluate, SinWeightingShrinksAzimuthError) {
  const Dataset d = linear_dataset(300, 19);
  const TrainResult r = train(d, Direction::Inverse, SensorSubset::all(), quick_config());
  EvalOptions o;
  const auto raw = evaluate_rmse(r.model, d, o);
  o.azimuth_sin_weighting = true;
  const auto weighted = evaluate_rmse(r.model, d, o);
  EXPECT_LT(weighted[0], raw[0]);
  EXPECT_EQ(weighted[1], raw[1]);
}

TEST(Dataset, ValidationRejectsBadRows) {
  Dataset d = linear_dataset(5, 20);
  EXPECT_NO_THROW(d.validate());
  d.rows[2].frame = d.rows[1].frame;
  EXPECT_THROW(d.validate(), ValidationError);
  d = linear_dataset(5, 20);
  d.rows[3].sensors.dl_mm[1] = std::nan("");
  EXPECT_THROW(d.validate(), ValidationError);
}
