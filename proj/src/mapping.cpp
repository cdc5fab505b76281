#include "tendonsense/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "tendonsense/error.hpp"

namespace tendonsense {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::ReLU: return "relu";
    case Activation::Linear: return "linear";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  for (Activation a : {Activation::Tanh, Activation::Sigmoid, Activation::ReLU, Activation::Linear})
    if (name == to_string(a)) return a;
  throw ConfigError("unknown activation '" + name + "' (expected tanh, sigmoid, relu or linear)");
}

const char* to_string(Direction d) { return d == Direction::Forward ? "fwd" : "inv"; }

Direction direction_from_string(const std::string& name) {
  if (name == "fwd" || name == "forward") return Direction::Forward;
  if (name == "inv" || name == "inverse") return Direction::Inverse;
  throw ConfigError("unknown direction '" + name + "' (expected inv or fwd)");
}

SensorSubset::SensorSubset(std::uint8_t mask) : mask_(mask) {
  if (mask == 0 || mask > 0b1111) throw ValidationError("sensor subset mask must be in 1..15");
}

SensorSubset SensorSubset::parse(const std::string& list) {
  std::uint8_t mask = 0;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ValidationError("empty entry in sensor list '" + list + "'");
    const auto bit = static_cast<std::uint8_t>(1u << index(tendon_from_string(item.substr(first, last - first + 1))));
    if (mask & bit) throw ValidationError("sensor listed twice in '" + list + "'");
    mask |= bit;
  }
  if (mask == 0) throw ValidationError("sensor list is empty");
  return SensorSubset(mask);
}

std::vector<SensorSubset> SensorSubset::ablation_subsets() {
  std::vector<SensorSubset> out;
  for (std::size_t k = 2; k <= 4; ++k) {
    std::vector<SensorSubset> group;
    for (std::uint8_t m = 1; m < 16; ++m)
      if (static_cast<std::size_t>(__builtin_popcount(m)) == k) group.emplace_back(m);
    // Lexicographic in tendon order: compare the sorted index lists.
    std::sort(group.begin(), group.end(), [](const SensorSubset& a, const SensorSubset& b) {
      const auto ta = a.tendons();
      const auto tb = b.tendons();
      return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
    });
    out.insert(out.end(), group.begin(), group.end());
  }
  return out;
}

std::size_t SensorSubset::size() const {
  return static_cast<std::size_t>(__builtin_popcount(mask_));
}

std::vector<TendonName> SensorSubset::tendons() const {
  std::vector<TendonName> out;
  for (TendonName t : kAllTendons)
    if (contains(t)) out.push_back(t);
  return out;
}

std::string SensorSubset::label() const {
  std::string s;
  for (TendonName t : tendons()) {
    if (!s.empty()) s += '+';
    s += to_string(t);
  }
  return s;
}

AffineScaler AffineScaler::fit(const MatrixXd& samples) {
  if (samples.cols() == 0) throw ValidationError("cannot fit a scaler on zero samples");
  AffineScaler s;
  s.lo = samples.rowwise().minCoeff();
  s.hi = samples.rowwise().maxCoeff();
  for (Eigen::Index i = 0; i < s.lo.size(); ++i)
    if (!(s.hi[i] > s.lo[i]))
      throw DegenerateScaleError("feature " + std::to_string(i) + " is constant on the training rows");
  return s;
}

MatrixXd AffineScaler::apply(const MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != dims())
    throw DimensionError("scaler expects " + std::to_string(dims()) + " features, got " +
                         std::to_string(x.rows()));
  const VectorXd half = 0.5 * (hi - lo);
  return ((x.colwise() - lo).array().colwise() / half.array() - 1.0).matrix();
}

MatrixXd AffineScaler::invert(const MatrixXd& y) const {
  if (static_cast<std::size_t>(y.rows()) != dims())
    throw DimensionError("scaler expects " + std::to_string(dims()) + " features, got " +
                         std::to_string(y.rows()));
  const VectorXd half = 0.5 * (hi - lo);
  return ((y.array() + 1.0).colwise() * half.array()).matrix().colwise() + lo;
}

MlpModel MlpModel::zeros(std::size_t in, std::size_t hidden, std::size_t out, Activation act) {
  MlpModel m;
  m.hidden_activation = act;
  const auto i = static_cast<Eigen::Index>(in);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto o = static_cast<Eigen::Index>(out);
  m.W1 = MatrixXd::Zero(h, i);
  m.b1 = VectorXd::Zero(h);
  m.W2 = MatrixXd::Zero(o, h);
  m.b2 = VectorXd::Zero(o);
  m.input_scaler = {VectorXd::Constant(i, -1.0), VectorXd::Constant(i, 1.0)};
  m.output_scaler = {VectorXd::Constant(o, -1.0), VectorXd::Constant(o, 1.0)};
  return m;
}

MlpModel MlpModel::random(std::size_t in, std::size_t hidden, std::size_t out, Activation act,
                          std::uint64_t seed) {
  MlpModel m = zeros(in, hidden, out, act);
  std::mt19937_64 rng(seed);
  const auto fill = [&](MatrixXd& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
  };
  fill(m.W1);
  fill(m.W2);
  return m;
}

void MlpModel::check_shapes() const {
  if (W1.rows() == 0 || W1.cols() == 0 || W2.rows() == 0)
    throw DimensionError("model has an empty layer");
  if (b1.size() != W1.rows() || W2.cols() != W1.rows() || b2.size() != W2.rows())
    throw DimensionError("model layer sizes do not chain");
  if (input_scaler.dims() != input_size() || input_scaler.hi.size() != input_scaler.lo.size() ||
      output_scaler.dims() != output_size() || output_scaler.hi.size() != output_scaler.lo.size())
    throw DimensionError("model scalers do not match its layer sizes");
}

namespace {

MatrixXd activate(Activation a, const MatrixXd& z) {
  switch (a) {
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::ReLU: return z.cwiseMax(0.0);
    case Activation::Linear: return z;
  }
  return z;
}

/// Derivative expressed through the activation output `h` (and `z` for ReLU).
MatrixXd activate_derivative(Activation a, const MatrixXd& z, const MatrixXd& h) {
  switch (a) {
    case Activation::Tanh: return (1.0 - h.array().square()).matrix();
    case Activation::Sigmoid: return (h.array() * (1.0 - h.array())).matrix();
    case Activation::ReLU: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Linear: return MatrixXd::Ones(z.rows(), z.cols());
  }
  return MatrixXd::Ones(z.rows(), z.cols());
}

struct Gradients {
  MatrixXd W1;
  VectorXd b1;
  MatrixXd W2;
  VectorXd b2;
};

double mse(const MatrixXd& y, const MatrixXd& t) {
  return (y - t).squaredNorm() / static_cast<double>(y.size());
}

/// Returns the loss and fills `g` with its gradient.
double backprop(const MlpModel& m, const MatrixXd& x, const MatrixXd& t, Gradients& g) {
  const MatrixXd z = (m.W1 * x).colwise() + m.b1;
  const MatrixXd h = activate(m.hidden_activation, z);
  const MatrixXd y = (m.W2 * h).colwise() + m.b2;
  const MatrixXd dy = 2.0 * (y - t) / static_cast<double>(y.size());
  g.W2.noalias() = dy * h.transpose();
  g.b2 = dy.rowwise().sum();
  const MatrixXd dz =
      ((m.W2.transpose() * dy).array() * activate_derivative(m.hidden_activation, z, h).array())
          .matrix();
  g.W1.noalias() = dz * x.transpose();
  g.b1 = dz.rowwise().sum();
  return (y - t).squaredNorm() / static_cast<double>(y.size());
}

void check_input(const MlpModel& m, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != m.input_size())
    throw DimensionError("model expects " + std::to_string(m.input_size()) + " inputs, got " +
                         std::to_string(rows));
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

/// Reads only the listed rows.
MatrixXd gather_inputs(const Dataset& data, const std::vector<std::size_t>& rows,
                       Direction direction, const SensorSubset& subset) {
  const auto tendons = subset.tendons();
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (direction == Direction::Forward) {
    MatrixXd x(2, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& p = data.rows[rows[static_cast<std::size_t>(c)]].pose;
      x(0, c) = p.azimuth_deg;
      x(1, c) = p.elevation_deg;
    }
    return x;
  }
  MatrixXd x(static_cast<Eigen::Index>(tendons.size()), n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (std::size_t k = 0; k < tendons.size(); ++k)
      x(static_cast<Eigen::Index>(k), c) = data.rows[rows[static_cast<std::size_t>(c)]].sensors[tendons[k]];
  return x;
}

MatrixXd gather_targets(const Dataset& data, const std::vector<std::size_t>& rows,
                        Direction direction, const SensorSubset& subset) {
  return gather_inputs(data, rows,
                       direction == Direction::Forward ? Direction::Inverse : Direction::Forward,
                       subset);
}

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  Gradients m;
  Gradients v;

  Adam(const MlpModel& model, double rate) : lr(rate) {
    for (Gradients* g : {&m, &v}) {
      g->W1 = MatrixXd::Zero(model.W1.rows(), model.W1.cols());
      g->b1 = VectorXd::Zero(model.b1.size());
      g->W2 = MatrixXd::Zero(model.W2.rows(), model.W2.cols());
      g->b2 = VectorXd::Zero(model.b2.size());
    }
  }

  template <typename P, typename G>
  void update(P& p, const G& g, P& m1, P& m2, double c1, double c2) {
    m1 = beta1 * m1 + (1.0 - beta1) * g;
    m2 = beta2 * m2 + (1.0 - beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
  }

  void step(MlpModel& model, const Gradients& g) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    update(model.W1, g.W1, m.W1, v.W1, c1, c2);
    update(model.b1, g.b1, m.b1, v.b1, c1, c2);
    update(model.W2, g.W2, m.W2, v.W2, c1, c2);
    update(model.b2, g.b2, m.b2, v.b2, c1, c2);
  }
};

}  // namespace

MatrixXd forward(const MlpModel& model, const MatrixXd& x) {
  check_input(model, x.rows());
  const MatrixXd h = activate(model.hidden_activation, (model.W1 * x).colwise() + model.b1);
  return (model.W2 * h).colwise() + model.b2;
}

VectorXd forward(const MlpModel& model, const VectorXd& x) {
  return forward(model, MatrixXd(x)).col(0);
}

MatrixXd predict(const MlpModel& model, const MatrixXd& x) {
  check_input(model, x.rows());
  return model.output_scaler.invert(forward(model, model.input_scaler.apply(x)));
}

VectorXd predict(const MlpModel& model, const VectorXd& x) {
  return predict(model, MatrixXd(x)).col(0);
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::SyntheticIdeal: return "synthetic-ideal";
    case Provenance::SyntheticEmulated: return "synthetic-emulated";
    case Provenance::Imported: return "imported";
  }
  return "?";
}

Provenance provenance_from_string(const std::string& name) {
  for (Provenance p : {Provenance::SyntheticIdeal, Provenance::SyntheticEmulated, Provenance::Imported})
    if (name == to_string(p)) return p;
  throw ConfigError("unknown provenance '" + name + "'");
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Sample& s = rows[i];
    if (!std::isfinite(s.time_s) || !std::isfinite(s.pose.azimuth_deg) ||
        !std::isfinite(s.pose.elevation_deg) || !s.sensors.all_finite())
      throw ValidationError("row " + std::to_string(i) + " has a non-finite value");
    if (i > 0 && s.frame <= rows[i - 1].frame)
      throw ValidationError("frame numbers must strictly increase (row " + std::to_string(i) + ")");
  }
}

Dataset synthesize(const TendonLayout& layout, const std::vector<NamedTrajectory>& suite,
                   const std::optional<SensorEmulation>& emulation) {
  layout.validate();
  if (emulation) emulation->validate();
  const NeutralReference neutral = NeutralReference::compute(layout);
  Dataset data;
  data.provenance = emulation ? Provenance::SyntheticEmulated : Provenance::SyntheticIdeal;
  std::int64_t frame = 0;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    std::optional<EmulationState> state;
    if (emulation) state.emplace(emulation->seed + i);
    for (const TrajectoryFrame& f : suite[i].trajectory.frames) {
      SensorFrame s = delta_length(layout, neutral, f.pose);
      if (emulation) s = emulate(*emulation, s, *state);
      data.rows.push_back({frame++, f.time_s, f.pose, s});
    }
  }
  return data;
}

MatrixXd inputs_of(const Dataset& data, Direction direction, const SensorSubset& subset) {
  return gather_inputs(data, all_rows(data.size()), direction, subset);
}

MatrixXd targets_of(const Dataset& data, Direction direction, const SensorSubset& subset) {
  return gather_targets(data, all_rows(data.size()), direction, subset);
}

std::vector<std::string> output_names(Direction direction, const SensorSubset& subset) {
  if (direction == Direction::Inverse) return {"theta_deg", "phi_deg"};
  std::vector<std::string> out;
  for (TendonName t : subset.tendons()) out.push_back(std::string("dl_") + to_string(t) + "_mm");
  return out;
}

std::size_t TrainConfig::hidden_width(Direction direction) const {
  if (hidden) return *hidden;
  return direction == Direction::Forward ? 8 : 25;
}

void TrainConfig::validate() const {
  if (!(train_fraction > 0.0 && val_fraction > 0.0 && test_fraction > 0.0))
    throw ValidationError("split fractions must be positive");
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
    throw ValidationError("split fractions must sum to 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be positive");
  if (batch_size == 0 || max_epochs == 0 || early_stop_patience == 0)
    throw ValidationError("batch_size, max_epochs and early_stop_patience must be at least 1");
  if (hidden && *hidden == 0) throw ValidationError("hidden width must be at least 1");
}

Split make_split(std::size_t rows, const TrainConfig& cfg) {
  cfg.validate();
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(rows)));
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(rows)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= rows)
    throw ValidationError("dataset of " + std::to_string(rows) + " rows is too small for the split");
  std::vector<std::size_t> perm = all_rows(rows);
  std::mt19937_64 rng(cfg.shuffle_seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
               perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return s;
}

TrainResult train(const Dataset& data, Direction direction, const SensorSubset& subset,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() < 10) throw ValidationError("training needs at least 10 rows");
  if (direction == Direction::Inverse && subset.size() < 2)
    throw ValidationError("an inverse model needs at least two sensors (got " + subset.label() + ")");
  const Split split = make_split(data.size(), cfg);

  const MatrixXd x_train_raw = gather_inputs(data, split.train, direction, subset);
  const MatrixXd t_train_raw = gather_targets(data, split.train, direction, subset);
  if (!x_train_raw.allFinite() || !t_train_raw.allFinite())
    throw ValidationError("training rows contain non-finite values");

  TrainResult result;
  MlpModel& model = result.model;
  model = MlpModel::random(static_cast<std::size_t>(x_train_raw.rows()), cfg.hidden_width(direction),
                           static_cast<std::size_t>(t_train_raw.rows()), cfg.activation, cfg.init_seed);
  model.direction = direction;
  model.sensors = subset;
  model.input_scaler = AffineScaler::fit(x_train_raw);
  model.output_scaler = AffineScaler::fit(t_train_raw);

  const MatrixXd x_train = model.input_scaler.apply(x_train_raw);
  const MatrixXd t_train = model.output_scaler.apply(t_train_raw);
  const MatrixXd x_val = model.input_scaler.apply(gather_inputs(data, split.val, direction, subset));
  const MatrixXd t_val = model.output_scaler.apply(gather_targets(data, split.val, direction, subset));

  Adam adam(model, cfg.learning_rate);
  Gradients g;
  std::mt19937_64 batch_rng(cfg.shuffle_seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_train.cols()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);

  TrainReport& report = result.report;
  MlpModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), batch_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(stop));
      backprop(model, x_train(Eigen::all, idx), t_train(Eigen::all, idx), g);
      adam.step(model, g);
    }
    const double train_loss = mse(forward(model, x_train), t_train);
    const double val_loss = mse(forward(model, x_val), t_val);
    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(val_loss);
    report.epochs_run = epoch;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw TrainingDivergedError(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                             " (non-finite loss)");
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      report.best_epoch = epoch;
    } else if (epoch - report.best_epoch >= cfg.early_stop_patience) {
      break;
    }
  }
  model = best;
  report.output_names = output_names(direction, subset);
  EvalOptions eval;
  eval.rows = split.test;
  eval.azimuth_sin_weighting = cfg.azimuth_sin_weighting;
  report.test_rmse = evaluate_rmse(model, data, eval);
  return result;
}

std::vector<double> evaluate_rmse(const MlpModel& model, const Dataset& data,
                                  const EvalOptions& options) {
  model.check_shapes();
  const SensorSubset subset = options.sensors.value_or(model.sensors);
  const std::vector<std::size_t> rows = options.rows.empty() ? all_rows(data.size()) : options.rows;
  if (rows.empty()) throw ValidationError("no rows to evaluate");
  for (std::size_t r : rows)
    if (r >= data.size()) throw ValidationError("row index " + std::to_string(r) + " out of range");
  const MatrixXd x = gather_inputs(data, rows, model.direction, subset);
  const MatrixXd t = gather_targets(data, rows, model.direction, subset);
  if (static_cast<std::size_t>(t.rows()) != model.output_size())
    throw DimensionError("model produces " + std::to_string(model.output_size()) +
                         " outputs but the data supplies " + std::to_string(t.rows()) + " targets");
  MatrixXd err = predict(model, x) - t;
  if (options.azimuth_sin_weighting && model.direction == Direction::Inverse)
    for (Eigen::Index c = 0; c < err.cols(); ++c) err(0, c) *= std::sin(deg2rad(t(1, c)));
  const VectorXd rmse = (err.array().square().rowwise().sum() / static_cast<double>(err.cols())).sqrt();
  return {rmse.data(), rmse.data() + rmse.size()};
}

VectorXd loss_gradient(const MlpModel& model, const MatrixXd& input, const MatrixXd& target) {
  model.check_shapes();
  check_input(model, input.rows());
  if (target.rows() != model.W2.rows() || target.cols() != input.cols())
    throw DimensionError("target shape does not match the model output");
  Gradients g;
  backprop(model, input, target, g);
  VectorXd flat(g.W1.size() + g.b1.size() + g.W2.size() + g.b2.size());
  flat << g.W1.reshaped(), g.b1, g.W2.reshaped(), g.b2;
  return flat;
}

double gradient_check(const MlpModel& model, const VectorXd& input, const VectorXd& target,
                      double step) {
  const MatrixXd x = input;
  const MatrixXd t = target;
  const VectorXd analytic = loss_gradient(model, x, t);
  MlpModel probe = model;
  std::vector<double*> params;
  for (Eigen::Index i = 0; i < probe.W1.size(); ++i) params.push_back(probe.W1.data() + i);
  for (Eigen::Index i = 0; i < probe.b1.size(); ++i) params.push_back(probe.b1.data() + i);
  for (Eigen::Index i = 0; i < probe.W2.size(); ++i) params.push_back(probe.W2.data() + i);
  for (Eigen::Index i = 0; i < probe.b2.size(); ++i) params.push_back(probe.b2.data() + i);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    double& p = *params[k];
    const double saved = p;
    p = saved + step;
    const double up = mse(forward(probe, x), t);
    p = saved - step;
    const double down = mse(forward(probe, x), t);
    p = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[static_cast<Eigen::Index>(k)];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace tendonsense
