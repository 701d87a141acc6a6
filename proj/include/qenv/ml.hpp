#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <qenv/numerics.hpp>

namespace qenv {

// ----- principal components -----

struct PcaModel {
  RealVector mean;                      // feature mean of the fit data, length p
  RealMatrix components;                // m x p, orthonormal rows
  RealVector explained_variance_ratio;  // length m, non-increasing
};

// Centered SVD fit. Requires 2 <= n rows and 1 <= n_components <= min(n, p).
PcaModel pca_fit(const RealMatrix& data, int n_components);

// (data - mean) * components^T; data must have p columns.
RealMatrix pca_transform(const PcaModel& model, const RealMatrix& data);

// reduced * components + mean; least-squares reconstruction in feature space.
RealMatrix pca_inverse(const PcaModel& model, const RealMatrix& reduced);

// ----- feature scaling -----

// Columnwise affine map of the fit data onto [0,1]; constant columns map to 0.
struct MinMaxScaler {
  RealVector lo;
  RealVector hi;
};

MinMaxScaler minmax_fit(const RealMatrix& data);
RealMatrix minmax_transform(const MinMaxScaler& scaler, const RealMatrix& data);
RealMatrix minmax_inverse(const MinMaxScaler& scaler, const RealMatrix& scaled);

// ----- feed-forward networks -----

enum class Activation { Identity, ReLU, Sigmoid, Softmax };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  RealMatrix weights;  // out x in
  RealVector bias;     // out
  Activation activation = Activation::Identity;
};

struct Network {
  std::vector<Layer> layers;
};

// widths = {input, hidden..., output}; activations has one entry per layer.
// Weights start uniform in +-sqrt(6/(fan_in+fan_out)), biases at zero.
Network make_network(const std::vector<int>& widths, const std::vector<Activation>& activations,
                     std::uint64_t seed);

int input_width(const Network& net);
int output_width(const Network& net);

// Batch forward pass, one sample per row. forward_cached returns every layer
// output (back() is the network output); softmax rows sum to 1.
std::vector<RealMatrix> forward_cached(const Network& net, const RealMatrix& x);
RealMatrix forward(const Network& net, const RealMatrix& x);

// ----- losses and gradients -----

// Hybrid adds alpha times the MSE term to the cross entropy.
enum class LossKind { MSE, CrossEntropy, Hybrid };

std::string loss_tag(LossKind kind, double alpha);

// Batch-mean loss. Cross entropy expects one-hot targets and clamps predicted
// probabilities to >= 1e-12 inside the log.
double loss_value(LossKind kind, const RealMatrix& y_score, const RealMatrix& y_test,
                  double alpha = 0.2);

struct Gradients {
  std::vector<RealMatrix> d_weights;
  std::vector<RealVector> d_bias;
};

// Exact derivatives of the batch-mean loss.
Gradients backprop(const Network& net, const RealMatrix& x, const RealMatrix& y, LossKind kind,
                   double alpha = 0.2);

// Max over parameters of the relative error between backprop and a central
// finite difference of the batch-mean loss.
double gradient_check(const Network& net, const RealMatrix& x, const RealMatrix& y, LossKind kind,
                      double alpha = 0.2, double h = 1e-5);

// ----- optimizer -----

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<RealMatrix> m_w, v_w;
  std::vector<RealVector> m_b, v_b;
  long step = 0;
};

AdamState make_adam_state(const Network& net);
void adam_step(Network& net, const Gradients& grads, AdamState& state, const AdamConfig& config);

// ----- training -----

// Seeded shuffle split; sizes are the rounded fractions (which must sum to 1),
// remainder goes to the test part.
struct SplitIndices {
  std::vector<int> train, validation, test;
};

SplitIndices split_dataset(int n_samples, double train_frac, double val_frac, double test_frac,
                           std::uint64_t seed);

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_accuracy = 0.0;  // zero for pure-regression losses
  double val_accuracy = 0.0;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  LossKind loss = LossKind::MSE;
  double alpha = 0.2;
  std::uint64_t seed = 0;
  AdamConfig adam;
};

// Mini-batch Adam with a per-epoch reshuffle drawn from config.seed. Aborts
// with a diagnostic if the loss turns non-finite.
std::vector<EpochRecord> train_network(Network& net, const RealMatrix& x_train,
                                       const RealMatrix& y_train, const RealMatrix& x_val,
                                       const RealMatrix& y_val, const TrainConfig& config);

// Fraction of rows whose argmax matches; ties break toward the lowest index.
double accuracy_score(const RealMatrix& y_score, const RealMatrix& y_test);

// ----- model persistence -----

// Self-contained trained model: preprocessing and weights travel together.
struct ModelBundle {
  Network net;
  PcaModel pca;
  MinMaxScaler feature_scaler;
  std::string task_name;
  std::string loss_name;
  std::uint64_t split_seed = 0;
  std::uint64_t train_seed = 0;
};

// Feature pipeline shared by training and evaluation: PCA, then MinMax.
RealMatrix preprocess_features(const ModelBundle& model, const RealMatrix& raw_features);

std::string model_to_json(const ModelBundle& model);
ModelBundle model_from_json(const std::string& json_text);

}  // namespace qenv
