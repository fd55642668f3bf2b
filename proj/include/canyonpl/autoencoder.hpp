#pragma once

// Convolutional autoencoder that compresses a facade patch into a short
// building feature vector. Tensors are (sequence length x channels); a patch
// is read as 500 positions along the street with 40 channels across it.
//
// Default topology (hidden activations tanh, final activation ReLU):
//   encoder  Conv1D(32,7) MaxPool(2)
//            [Conv1D(32,5) MaxPool(5)] + [Conv1D(32,5) MaxPool(5)]
//            Conv1D(16,3) MaxPool(5) Flatten Dense(64) Dense(12)
//   decoder  Dense(64) Dense(160) Reshape(10,16) UpSample(5) Conv1D(32,3)
//            UpSample(5) Conv1D(32,5) UpSample(2) Conv1D(40,3,relu)
// Conv1D uses zero "same" padding. MaxPool drops a trailing partial window.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "canyonpl/building.hpp"

namespace canyonpl {
class Rng;
}

namespace canyonpl::ae {

using Tensor = Eigen::MatrixXd;

enum class Activation { linear, tanh, relu };
enum class LayerKind { conv1d, max_pool1d, up_sample1d, dense, flatten, parallel_add };
enum class Variant { grouped, single, serial };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int filters = 0;
  int kernel = 0;
  int factor = 0;
  int units = 0;
  // Flatten target shape, row-major. out_cols == 0 flattens to a single row.
  int out_rows = 1;
  int out_cols = 0;
  Activation activation = Activation::linear;
  std::vector<LayerSpec> branch_a;
  std::vector<LayerSpec> branch_b;

  static LayerSpec conv(int filters, int kernel, Activation act = Activation::tanh);
  static LayerSpec max_pool(int factor);
  static LayerSpec up_sample(int factor);
  static LayerSpec dense(int units, Activation act = Activation::tanh);
  static LayerSpec flatten(int out_rows = 1, int out_cols = 0);
  static LayerSpec parallel_add(std::vector<LayerSpec> a, std::vector<LayerSpec> b);
};

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Size knobs of the fixed encoder/decoder topology above.
struct Architecture {
  int input_rows = 500;
  int input_cols = 40;
  int conv1_filters = 32;
  int conv1_kernel = 7;
  int pool1 = 2;
  int branch_filters = 32;
  int branch_kernel = 5;
  int branch_pool = 5;
  int conv2_filters = 16;
  int conv2_kernel = 3;
  int pool2 = 5;
  int dense_units = 64;
  int latent = 12;
  int output_kernel = 3;
  Variant variant = Variant::grouped;

  // 20 x 4 input, latent 3, same layer types. Used for gradient checks.
  static Architecture miniature();
};

struct NetworkSpec {
  Shape input;
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> decoder;
};

NetworkSpec make_network_spec(const Architecture& arch);

namespace detail {
struct Compiled;
struct Cache;
}  // namespace detail

// Per-layer forward state kept for the backward pass.
struct Trace {
  Trace();
  ~Trace();
  Trace(Trace&&) noexcept;
  Trace& operator=(Trace&&) noexcept;
  std::unique_ptr<detail::Cache> encoder;
  std::unique_ptr<detail::Cache> decoder;
};

// A shape-checked network. Parameters live in one flat array owned by the
// caller, which keeps the optimizer and persistence trivial.
class Network {
 public:
  explicit Network(NetworkSpec spec);
  ~Network();
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;

  const NetworkSpec& spec() const { return spec_; }
  Shape input_shape() const { return spec_.input; }
  Shape latent_shape() const;
  std::size_t parameter_count() const;

  std::vector<double> initial_parameters(Rng& rng) const;

  Tensor encode(std::span<const double> params, const Tensor& input) const;
  Tensor decode(std::span<const double> params, const Tensor& latent) const;
  Tensor forward(std::span<const double> params, const Tensor& input, Trace* trace = nullptr) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(std::span<const double> params, const Trace& trace, const Tensor& grad_output,
                std::span<double> grad) const;

 private:
  NetworkSpec spec_;
  std::unique_ptr<detail::Compiled> encoder_;
  std::unique_ptr<detail::Compiled> decoder_;
};

// Single-layer entry points, used by the gradient tests.
Shape layer_output_shape(const LayerSpec& spec, Shape input);
std::size_t layer_parameter_count(const LayerSpec& spec, Shape input);
Tensor layer_forward(const LayerSpec& spec, std::span<const double> params, const Tensor& input);
// Returns the input gradient; parameter gradients are accumulated into `grad`.
Tensor layer_backward(const LayerSpec& spec, std::span<const double> params, const Tensor& input,
                      const Tensor& grad_output, std::span<double> grad);

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// mean(logcosh(Yhat - I)) + 0.1 * mean(logcosh(Y - I)), where Yhat zeroes the
// cells of Y at which I is exactly zero.
LossResult masked_logcosh_loss(const Tensor& output, const Tensor& input);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void update(std::span<double> params, std::span<const double> grad, double learning_rate);
};

struct TrainConfig {
  double learning_rate = 0.0012;
  std::size_t batch_size = 16;
  std::size_t epochs = 100;
  double validation_fraction = 0.1;
};

struct LossCurve {
  std::vector<double> train;
  std::vector<double> validation;  // empty when there is no validation split
};

struct TrainedNetwork {
  std::vector<double> params;
  LossCurve curve;
};

// Adam on the masked log-cosh reconstruction loss. The last
// floor(validation_fraction * n) inputs are held out for the validation
// curve; the rest are reshuffled every epoch from `seed`.
TrainedNetwork train_network(const Network& net, std::span<const Tensor> inputs, const TrainConfig& config,
                             std::uint64_t seed);

struct AutoencoderModel {
  Architecture architecture;
  TrainConfig config;
  std::uint64_t seed = 0;
  std::vector<double> params;
  GridScaler scaler;
  LossCurve curve;
};

// Trains on patches already normalized by `scaler`, which is attached to the model.
AutoencoderModel train_autoencoder(const GridScaler& scaler, std::span<const FacadePatch> normalized,
                                   const Architecture& arch, const TrainConfig& config, std::uint64_t seed);

// Fits the grid scaler on raw patches, then trains.
AutoencoderModel fit_autoencoder(std::span<const FacadePatch> raw, const Architecture& arch,
                                 const TrainConfig& config, std::uint64_t seed);

// Latent features for a patch normalized with the model's scaler.
Eigen::VectorXd encode(const AutoencoderModel& model, const FacadePatch& normalized);
FacadePatch decode(const AutoencoderModel& model, const Eigen::VectorXd& latent);

// Normalizes each raw patch with the model's scaler and encodes it.
Eigen::MatrixXd encode_raw(const AutoencoderModel& model, std::span<const FacadePatch> raw);

void save_autoencoder(const std::filesystem::path& path, const AutoencoderModel& model);
AutoencoderModel load_autoencoder(const std::filesystem::path& path);

}  // namespace canyonpl::ae
