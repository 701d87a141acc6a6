#include <qenv/ml.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "qenv/io.hpp"
#include "qenv/rng.hpp"

namespace qenv {

// ----- principal components -----

PcaModel pca_fit(const RealMatrix& data, int n_components) {
  const Eigen::Index n = data.rows(), p = data.cols();
  if (n < 2) {
    throw std::invalid_argument("pca_fit: need at least 2 rows");
  }
  if (n_components < 1 || n_components > std::min(n, p)) {
    throw std::invalid_argument("pca_fit: n_components must lie in [1, min(rows, cols)]");
  }
  PcaModel model;
  model.mean = data.colwise().mean();
  const RealMatrix centered = data.rowwise() - model.mean.transpose();
  Eigen::BDCSVD<RealMatrix> svd(centered, Eigen::ComputeThinV);
  const RealVector sigma = svd.singularValues();

  model.components = svd.matrixV().leftCols(n_components).transpose();
  // Sign convention: the largest-magnitude entry of each component is
  // positive, so refitting identical data cannot flip directions.
  for (Eigen::Index i = 0; i < model.components.rows(); ++i) {
    Eigen::Index arg = 0;
    model.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (model.components(i, arg) < 0.0) model.components.row(i) = -model.components.row(i);
  }

  const double total = sigma.squaredNorm();
  model.explained_variance_ratio.resize(n_components);
  for (int k = 0; k < n_components; ++k) {
    model.explained_variance_ratio[k] = total > 0.0 ? sigma[k] * sigma[k] / total : 0.0;
  }
  return model;
}

RealMatrix pca_transform(const PcaModel& model, const RealMatrix& data) {
  if (data.cols() != model.mean.size()) {
    throw std::invalid_argument("pca_transform: feature width does not match the model");
  }
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

RealMatrix pca_inverse(const PcaModel& model, const RealMatrix& reduced) {
  if (reduced.cols() != model.components.rows()) {
    throw std::invalid_argument("pca_inverse: component count does not match the model");
  }
  return (reduced * model.components).rowwise() + model.mean.transpose();
}

// ----- feature scaling -----

MinMaxScaler minmax_fit(const RealMatrix& data) {
  if (data.rows() < 1) {
    throw std::invalid_argument("minmax_fit: need at least one row");
  }
  return {data.colwise().minCoeff(), data.colwise().maxCoeff()};
}

RealMatrix minmax_transform(const MinMaxScaler& scaler, const RealMatrix& data) {
  if (data.cols() != scaler.lo.size() || scaler.lo.size() != scaler.hi.size()) {
    throw std::invalid_argument("minmax_transform: column count does not match the scaler");
  }
  RealMatrix out(data.rows(), data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double width = scaler.hi[j] - scaler.lo[j];
    if (width > 0.0) {
      out.col(j) = (data.col(j).array() - scaler.lo[j]) / width;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

RealMatrix minmax_inverse(const MinMaxScaler& scaler, const RealMatrix& scaled) {
  if (scaled.cols() != scaler.lo.size() || scaler.lo.size() != scaler.hi.size()) {
    throw std::invalid_argument("minmax_inverse: column count does not match the scaler");
  }
  RealMatrix out(scaled.rows(), scaled.cols());
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    const double width = scaler.hi[j] - scaler.lo[j];
    out.col(j) = scaler.lo[j] + (width > 0.0 ? width : 0.0) * scaled.col(j).array();
  }
  return out;
}

// ----- feed-forward networks -----

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  throw std::invalid_argument("activation_name: unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softmax") return Activation::Softmax;
  throw std::invalid_argument("activation_from_name: unknown activation '" + name + "'");
}

Network make_network(const std::vector<int>& widths, const std::vector<Activation>& activations,
                     std::uint64_t seed) {
  if (widths.size() < 2 || activations.size() != widths.size() - 1) {
    throw std::invalid_argument("make_network: need widths {in, ..., out} and one activation per layer");
  }
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("make_network: layer widths must be positive");
  }
  Network net;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer;
    const int fan_in = widths[l], fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index i = 0; i < fan_out; ++i) {
      for (Eigen::Index j = 0; j < fan_in; ++j) {
        layer.weights(i, j) = rng.uniform(-limit, limit);
      }
    }
    layer.bias = RealVector::Zero(fan_out);
    layer.activation = activations[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

int input_width(const Network& net) {
  if (net.layers.empty()) throw std::invalid_argument("input_width: empty network");
  return static_cast<int>(net.layers.front().weights.cols());
}

int output_width(const Network& net) {
  if (net.layers.empty()) throw std::invalid_argument("output_width: empty network");
  return static_cast<int>(net.layers.back().weights.rows());
}

namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

RealMatrix apply_activation(Activation act, const RealMatrix& z) {
  switch (act) {
    case Activation::Identity:
      return z;
    case Activation::ReLU:
      return z.cwiseMax(0.0);
    case Activation::Sigmoid:
      return z.unaryExpr([](double v) { return stable_sigmoid(v); });
    case Activation::Softmax: {
      RealMatrix out(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const RealVector shifted = z.row(i).transpose().array() - z.row(i).maxCoeff();
        const RealVector e = shifted.array().exp();
        out.row(i) = e.transpose() / e.sum();
      }
      return out;
    }
  }
  throw std::invalid_argument("apply_activation: unknown activation");
}

// Maps dL/d(output) to dL/d(pre-activation) for one layer, given its output a.
RealMatrix chain_activation(Activation act, const RealMatrix& a, const RealMatrix& da) {
  switch (act) {
    case Activation::Identity:
      return da;
    case Activation::ReLU:
      return (a.array() > 0.0).select(da, 0.0);
    case Activation::Sigmoid:
      return da.array() * a.array() * (1.0 - a.array());
    case Activation::Softmax: {
      RealMatrix dz(a.rows(), a.cols());
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double dot = a.row(i).dot(da.row(i));
        dz.row(i) = a.row(i).array() * (da.row(i).array() - dot);
      }
      return dz;
    }
  }
  throw std::invalid_argument("chain_activation: unknown activation");
}

constexpr double kCeFloor = 1e-12;

}  // namespace

std::vector<RealMatrix> forward_cached(const Network& net, const RealMatrix& x) {
  if (net.layers.empty()) throw std::invalid_argument("forward_cached: empty network");
  if (x.cols() != net.layers.front().weights.cols()) {
    throw std::invalid_argument("forward_cached: input width does not match the network");
  }
  std::vector<RealMatrix> outputs;
  outputs.reserve(net.layers.size());
  const RealMatrix* prev = &x;
  for (const Layer& layer : net.layers) {
    RealMatrix z = (*prev) * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    outputs.push_back(apply_activation(layer.activation, z));
    prev = &outputs.back();
  }
  return outputs;
}

RealMatrix forward(const Network& net, const RealMatrix& x) {
  return forward_cached(net, x).back();
}

// ----- losses and gradients -----

std::string loss_tag(LossKind kind, double alpha) {
  switch (kind) {
    case LossKind::MSE: return "MSE";
    case LossKind::CrossEntropy: return "CE";
    case LossKind::Hybrid: return "CE + " + format_double(alpha) + " MSE";
  }
  throw std::invalid_argument("loss_tag: unknown loss");
}

double loss_value(LossKind kind, const RealMatrix& y_score, const RealMatrix& y_test,
                  double alpha) {
  if (y_score.rows() != y_test.rows() || y_score.cols() != y_test.cols()) {
    throw std::invalid_argument("loss_value: shape mismatch");
  }
  if (y_score.rows() == 0) throw std::invalid_argument("loss_value: empty batch");
  const double n = static_cast<double>(y_score.rows());
  // Both terms sum over outputs and average over the batch, so the hybrid
  // weighting is scale-consistent.
  const double mse = (y_score - y_test).squaredNorm() / n;
  if (kind == LossKind::MSE) return mse;
  const double ce =
      -(y_test.array() * y_score.array().max(kCeFloor).log()).sum() / n;
  if (kind == LossKind::CrossEntropy) return ce;
  return ce + alpha * mse;
}

Gradients backprop(const Network& net, const RealMatrix& x, const RealMatrix& y, LossKind kind,
                   double alpha) {
  const std::vector<RealMatrix> outputs = forward_cached(net, x);
  const RealMatrix& score = outputs.back();
  if (score.rows() != y.rows() || score.cols() != y.cols()) {
    throw std::invalid_argument("backprop: label shape mismatch");
  }
  const double n = static_cast<double>(x.rows());

  // dL/d(output); the CE term is exact as long as no probability sits below
  // the clamp floor, which softmax guarantees away from hard saturation.
  RealMatrix da = RealMatrix::Zero(score.rows(), score.cols());
  if (kind == LossKind::MSE || kind == LossKind::Hybrid) {
    const double w = (kind == LossKind::Hybrid) ? alpha : 1.0;
    da += w * 2.0 / n * (score - y);
  }
  if (kind == LossKind::CrossEntropy || kind == LossKind::Hybrid) {
    da -= (y.array() / score.array().max(kCeFloor)).matrix() / n;
  }

  Gradients grads;
  const std::size_t depth = net.layers.size();
  grads.d_weights.resize(depth);
  grads.d_bias.resize(depth);
  RealMatrix dz;
  for (std::size_t l = depth; l-- > 0;) {
    dz = chain_activation(net.layers[l].activation, outputs[l], da);
    const RealMatrix& below = (l == 0) ? x : outputs[l - 1];
    grads.d_weights[l] = dz.transpose() * below;
    grads.d_bias[l] = dz.colwise().sum();
    if (l > 0) da = dz * net.layers[l].weights;
  }
  return grads;
}

double gradient_check(const Network& net, const RealMatrix& x, const RealMatrix& y, LossKind kind,
                      double alpha, double h) {
  const Gradients grads = backprop(net, x, y, kind, alpha);
  Network probe = net;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = loss_value(kind, forward(probe, x), y, alpha);
    param = saved - h;
    const double down = loss_value(kind, forward(probe, x), y, alpha);
    param = saved;
    const double fd = (up - down) / (2.0 * h);
    // Guarded denominator: entries below the O(1) loss scale are compared
    // absolutely, so finite-difference round-off on negligible gradients
    // cannot dominate the statistic.
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1.0});
    worst = std::max(worst, std::abs(analytic - fd) / scale);
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    Layer& layer = probe.layers[l];
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        check(layer.weights(i, j), grads.d_weights[l](i, j));
      }
      check(layer.bias[i], grads.d_bias[l][i]);
    }
  }
  return worst;
}

// ----- optimizer -----

AdamState make_adam_state(const Network& net) {
  AdamState state;
  for (const Layer& layer : net.layers) {
    state.m_w.push_back(RealMatrix::Zero(layer.weights.rows(), layer.weights.cols()));
    state.v_w.push_back(RealMatrix::Zero(layer.weights.rows(), layer.weights.cols()));
    state.m_b.push_back(RealVector::Zero(layer.bias.size()));
    state.v_b.push_back(RealVector::Zero(layer.bias.size()));
  }
  return state;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state, const AdamConfig& config) {
  if (state.m_w.size() != net.layers.size() || grads.d_weights.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: state or gradient shape mismatch");
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
      param.array() -=
          config.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
    };
    update(net.layers[l].weights, state.m_w[l], state.v_w[l], grads.d_weights[l]);
    update(net.layers[l].bias, state.m_b[l], state.v_b[l], grads.d_bias[l]);
  }
}

// ----- training -----

SplitIndices split_dataset(int n_samples, double train_frac, double val_frac, double test_frac,
                           std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("split_dataset: need at least one sample");
  if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0 ||
      std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: fractions must be nonnegative and sum to 1");
  }
  std::vector<int> order(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (int i = n_samples - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(n_samples * train_frac));
  const auto n_val = static_cast<std::size_t>(std::llround(n_samples * val_frac));
  if (n_train + n_val > static_cast<std::size_t>(n_samples)) {
    throw std::invalid_argument("split_dataset: rounded train+validation exceed the sample count");
  }
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return split;
}

double accuracy_score(const RealMatrix& y_score, const RealMatrix& y_test) {
  if (y_score.rows() != y_test.rows() || y_score.cols() != y_test.cols()) {
    throw std::invalid_argument("accuracy_score: shape mismatch");
  }
  if (y_score.rows() == 0) throw std::invalid_argument("accuracy_score: empty batch");
  auto first_argmax = [](const auto& row) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    return best;
  };
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < y_score.rows(); ++i) {
    if (first_argmax(y_score.row(i)) == first_argmax(y_test.row(i))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(y_score.rows());
}

std::vector<EpochRecord> train_network(Network& net, const RealMatrix& x_train,
                                       const RealMatrix& y_train, const RealMatrix& x_val,
                                       const RealMatrix& y_val, const TrainConfig& config) {
  if (x_train.rows() != y_train.rows() || x_val.rows() != y_val.rows()) {
    throw std::invalid_argument("train_network: feature/label row mismatch");
  }
  if (x_train.rows() == 0) throw std::invalid_argument("train_network: empty training set");
  if (config.epochs < 0 || config.batch_size < 1) {
    throw std::invalid_argument("train_network: need epochs >= 0 and batch_size >= 1");
  }
  const bool classify = config.loss != LossKind::MSE;
  const Eigen::Index n = x_train.rows();

  std::vector<int> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);
  Rng rng(config.seed);

  AdamState state = make_adam_state(net);
  std::vector<EpochRecord> history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  RealMatrix xb, yb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const int j = rng.uniform_int(static_cast<int>(i) + 1);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index rows = std::min<Eigen::Index>(config.batch_size, n - start);
      xb.resize(rows, x_train.cols());
      yb.resize(rows, y_train.cols());
      for (Eigen::Index r = 0; r < rows; ++r) {
        const int src = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = x_train.row(src);
        yb.row(r) = y_train.row(src);
      }
      const Gradients grads = backprop(net, xb, yb, config.loss, config.alpha);
      adam_step(net, grads, state, config.adam);
    }

    EpochRecord rec;
    const RealMatrix train_score = forward(net, x_train);
    rec.train_loss = loss_value(config.loss, train_score, y_train, config.alpha);
    if (classify) rec.train_accuracy = accuracy_score(train_score, y_train);
    if (x_val.rows() > 0) {
      const RealMatrix val_score = forward(net, x_val);
      rec.val_loss = loss_value(config.loss, val_score, y_val, config.alpha);
      if (classify) rec.val_accuracy = accuracy_score(val_score, y_val);
    }
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw std::runtime_error("train_network: loss diverged at epoch " + std::to_string(epoch));
    }
    history.push_back(rec);
  }
  return history;
}

// ----- model persistence -----

RealMatrix preprocess_features(const ModelBundle& model, const RealMatrix& raw_features) {
  return minmax_transform(model.feature_scaler, pca_transform(model.pca, raw_features));
}

namespace {

nlohmann::json vector_to_json(const RealVector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

RealVector vector_from_json(const nlohmann::json& arr) {
  RealVector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

nlohmann::json matrix_to_json(const RealMatrix& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  }
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(arr)}};
}

RealMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const nlohmann::json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw std::invalid_argument("model_from_json: matrix payload size mismatch");
  }
  RealMatrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++].get<double>();
  }
  return m;
}

}  // namespace

std::string model_to_json(const ModelBundle& model) {
  nlohmann::json j;
  j["format"] = "qenv-model-v1";
  j["task"] = model.task_name;
  j["loss"] = model.loss_name;
  j["split_seed"] = model.split_seed;
  j["train_seed"] = model.train_seed;
  j["pca"] = {{"mean", vector_to_json(model.pca.mean)},
              {"components", matrix_to_json(model.pca.components)},
              {"explained_variance_ratio", vector_to_json(model.pca.explained_variance_ratio)}};
  j["feature_scaler"] = {{"lo", vector_to_json(model.feature_scaler.lo)},
                         {"hi", vector_to_json(model.feature_scaler.hi)}};
  j["layers"] = nlohmann::json::array();
  for (const Layer& layer : model.net.layers) {
    j["layers"].push_back({{"weights", matrix_to_json(layer.weights)},
                           {"bias", vector_to_json(layer.bias)},
                           {"activation", activation_name(layer.activation)}});
  }
  return j.dump(2);
}

ModelBundle model_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("model_from_json: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "qenv-model-v1") {
      throw std::invalid_argument("model_from_json: unknown format tag");
    }
    ModelBundle model;
    model.task_name = j.at("task").get<std::string>();
    model.loss_name = j.at("loss").get<std::string>();
    model.split_seed = j.at("split_seed").get<std::uint64_t>();
    model.train_seed = j.at("train_seed").get<std::uint64_t>();
    model.pca.mean = vector_from_json(j.at("pca").at("mean"));
    model.pca.components = matrix_from_json(j.at("pca").at("components"));
    model.pca.explained_variance_ratio =
        vector_from_json(j.at("pca").at("explained_variance_ratio"));
    model.feature_scaler.lo = vector_from_json(j.at("feature_scaler").at("lo"));
    model.feature_scaler.hi = vector_from_json(j.at("feature_scaler").at("hi"));
    if (model.pca.components.cols() != model.pca.mean.size()) {
      throw std::invalid_argument("model_from_json: inconsistent PCA shapes");
    }
    for (const nlohmann::json& jl : j.at("layers")) {
      Layer layer;
      layer.weights = matrix_from_json(jl.at("weights"));
      layer.bias = vector_from_json(jl.at("bias"));
      layer.activation = activation_from_name(jl.at("activation").get<std::string>());
      if (layer.bias.size() != layer.weights.rows()) {
        throw std::invalid_argument("model_from_json: bias length does not match weights");
      }
      if (!model.net.layers.empty() &&
          layer.weights.cols() != model.net.layers.back().weights.rows()) {
        throw std::invalid_argument("model_from_json: layer widths do not chain");
      }
      model.net.layers.push_back(std::move(layer));
    }
    if (model.net.layers.empty()) {
      throw std::invalid_argument("model_from_json: no layers");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model_from_json: ") + e.what());
  }
}

}  // namespace qenv
