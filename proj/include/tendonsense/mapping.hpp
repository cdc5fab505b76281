#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tendonsense/geometry.hpp"
#include "tendonsense/motion.hpp"
#include "tendonsense/sensor.hpp"
#include "tendonsense/tendon.hpp"

namespace tendonsense {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { Tanh, Sigmoid, ReLU, Linear };
const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Forward maps joint angles to sensors (q -> S); Inverse maps sensors to
/// joint angles (S -> q).
enum class Direction { Forward, Inverse };
const char* to_string(Direction d);
/// Accepts "fwd"/"forward" and "inv"/"inverse".
Direction direction_from_string(const std::string& name);

/// Nonempty subset of the four tendons, kept in F, SF, SR, R order.
class SensorSubset {
 public:
  SensorSubset() = default;
  explicit SensorSubset(std::uint8_t mask);
  static SensorSubset all() { return SensorSubset(0b1111); }
  /// Comma separated names, e.g. "F,SF,R". Throws UnknownTendonError or
  /// ValidationError for an empty or repeated list.
  static SensorSubset parse(const std::string& list);
  /// The 11 subsets with at least two tendons: pairs, then triples, then all
  /// four, each group in lexicographic tendon order.
  static std::vector<SensorSubset> ablation_subsets();

  std::uint8_t mask() const { return mask_; }
  std::size_t size() const;
  bool contains(TendonName name) const { return (mask_ >> index(name)) & 1u; }
  std::vector<TendonName> tendons() const;
  /// "F+SF+R" style label.
  std::string label() const;

  friend bool operator==(const SensorSubset&, const SensorSubset&) = default;

 private:
  std::uint8_t mask_ = 0b1111;
};

/// Per-column affine map of [lo, hi] onto [-1, 1].
struct AffineScaler {
  VectorXd lo;
  VectorXd hi;

  /// Columns of `samples` are observations. Throws DegenerateScaleError when
  /// a feature is constant and ValidationError when there are no samples.
  static AffineScaler fit(const MatrixXd& samples);
  std::size_t dims() const { return static_cast<std::size_t>(lo.size()); }
  MatrixXd apply(const MatrixXd& x) const;
  MatrixXd invert(const MatrixXd& y) const;
};

/// One-hidden-layer perceptron y = W2 act(W1 x + b1) + b2 operating in scaled
/// space, plus the scalers that connect it to physical units.
struct MlpModel {
  Direction direction = Direction::Inverse;
  SensorSubset sensors;
  Activation hidden_activation = Activation::Tanh;
  MatrixXd W1;  // hidden x in
  VectorXd b1;
  MatrixXd W2;  // out x hidden
  VectorXd b2;
  AffineScaler input_scaler;
  AffineScaler output_scaler;

  std::size_t input_size() const { return static_cast<std::size_t>(W1.cols()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(W1.rows()); }
  std::size_t output_size() const { return static_cast<std::size_t>(W2.rows()); }

  /// Zero weights with identity scalers ([-1, 1] on every column).
  static MlpModel zeros(std::size_t in, std::size_t hidden, std::size_t out,
                        Activation act = Activation::Tanh);
  /// Uniform weights in +-1/sqrt(fan_in), zero biases.
  static MlpModel random(std::size_t in, std::size_t hidden, std::size_t out,
                         Activation act, std::uint64_t seed);

  /// Throws DimensionError when the parts do not chain.
  void check_shapes() const;
};

/// Scaled-space evaluation; columns of `x` are samples.
MatrixXd forward(const MlpModel& model, const MatrixXd& x);
VectorXd forward(const MlpModel& model, const VectorXd& x);
/// Physical-unit evaluation: scale, forward, unscale.
MatrixXd predict(const MlpModel& model, const MatrixXd& x);
VectorXd predict(const MlpModel& model, const VectorXd& x);

enum class Provenance { SyntheticIdeal, SyntheticEmulated, Imported };
const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& name);

struct Sample {
  std::int64_t frame = 0;
  double time_s = 0.0;
  JointPose pose;
  SensorFrame sensors;
};

struct Dataset {
  std::vector<Sample> rows;
  Provenance provenance = Provenance::SyntheticIdeal;

  std::size_t size() const { return rows.size(); }
  /// Throws ValidationError on non-finite values or non-increasing frames.
  void validate() const;
};

/// Samples every trajectory through the layout. When `emulation` is given the
/// sensor channel is emulated, with one fresh state per trajectory seeded
/// from emulation->seed plus the trajectory index. Frames are numbered
/// consecutively across trajectories; time restarts with each one.
Dataset synthesize(const TendonLayout& layout, const std::vector<NamedTrajectory>& suite,
                   const std::optional<SensorEmulation>& emulation = std::nullopt);

/// Model inputs and targets for one direction, samples as columns.
MatrixXd inputs_of(const Dataset& data, Direction direction, const SensorSubset& subset);
MatrixXd targets_of(const Dataset& data, Direction direction, const SensorSubset& subset);
std::vector<std::string> output_names(Direction direction, const SensorSubset& subset);

struct TrainConfig {
  double train_fraction = 0.65;
  double val_fraction = 0.15;
  double test_fraction = 0.20;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t init_seed = 0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 2000;
  std::size_t early_stop_patience = 50;
  /// Hidden width; defaults to 8 for Forward and 25 for Inverse.
  std::optional<std::size_t> hidden;
  Activation activation = Activation::Tanh;
  /// Report azimuth error multiplied by sin(elevation) instead of raw.
  bool azimuth_sin_weighting = false;

  std::size_t hidden_width(Direction direction) const;
  /// Fractions positive and summing to 1, positive sizes and rate.
  void validate() const;
};

/// Disjoint row indices; the permutation depends only on the row count and
/// the shuffle seed, so every model trained on one dataset shares the split.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};
/// Throws ValidationError unless every part gets at least one row.
Split make_split(std::size_t rows, const TrainConfig& cfg);

struct TrainReport {
  std::vector<double> train_loss;  // per epoch, scaled-space MSE
  std::vector<double> val_loss;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 1-based
  std::vector<std::string> output_names;
  std::vector<double> test_rmse;  // physical units, per output
};

struct TrainResult {
  MlpModel model;
  TrainReport report;
};

/// Adam on scaled-space MSE with mini-batches, early stopping on validation
/// loss (best weights restored). Scalers are fitted on the training rows only
/// and test rows are read once, after training, for the RMSE. Throws
/// ValidationError for datasets under 10 rows or an Inverse subset of fewer
/// than two tendons, and TrainingDivergedError on a non-finite loss.
TrainResult train(const Dataset& data, Direction direction, const SensorSubset& subset,
                  const TrainConfig& cfg);

struct EvalOptions {
  /// Rows to score; all rows when empty.
  std::vector<std::size_t> rows;
  /// Scale an Inverse model's azimuth error by sin(true elevation).
  bool azimuth_sin_weighting = false;
  /// Sensor columns fed to the model; the model's own subset when unset.
  std::optional<SensorSubset> sensors;
};

/// Per-output RMSE in physical units. Throws DimensionError when the selected
/// columns do not match the model's input or output arity.
std::vector<double> evaluate_rmse(const MlpModel& model, const Dataset& data,
                                  const EvalOptions& options = {});

/// Loss gradient in scaled space for MSE against `target`, flattened in the
/// order W1, b1, W2, b2 (column-major matrices).
VectorXd loss_gradient(const MlpModel& model, const MatrixXd& input, const MatrixXd& target);

/// Max over parameters of |analytic - central difference| divided by
/// max(|analytic|, |numeric|, 1e-7).
double gradient_check(const MlpModel& model, const VectorXd& input, const VectorXd& target,
                      double step = 1e-5);

}  // namespace tendonsense
