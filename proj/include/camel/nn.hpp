#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "camel/common.hpp"

namespace camel {

enum class Activation { kRelu, kTanh, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// One affine layer, `weight` is (out x in).
struct Layer {
  Matrix weight;
  Vector bias;
};

/// Parameter-shaped gradient (or Adam moment) storage.
using LayerGrads = std::vector<Layer>;

class Mlp;

/// Activations saved by a forward pass. Columns are batch samples.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> outputs;  // activation output of each layer
  const Mlp* owner = nullptr;
  std::uint64_t generation = 0;
};

/// Dense rectifier network with a configurable output activation.
///
/// Inputs are matrices whose columns are samples, so one call evaluates a whole
/// minibatch. Parameters are plain values; copying an Mlp copies its weights.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<Layer> layers, Activation output_activation);
  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  /// Builds a network with layer widths `sizes` (input first, output last).
  /// Weights and biases are uniform in +-1/sqrt(fan_in); the final layer is
  /// additionally multiplied by `final_layer_scale`.
  static Mlp create(std::span<const int> sizes, Activation output_activation, Rng& rng,
                    double final_layer_scale = 1.0);

  int input_size() const;
  int output_size() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_parameters() const;
  Activation output_activation() const { return output_activation_; }

  const std::vector<Layer>& layers() const { return layers_; }
  /// Mutable access invalidates outstanding forward caches.
  std::vector<Layer>& mutable_layers();

  Matrix forward(const Matrix& input) const;
  Vector forward(const Vector& input) const;
  Matrix forward(const Matrix& input, ForwardCache& cache) const;

  /// Reverse-mode pass for the scalar sum(output .* output_grad), summed over
  /// batch columns. Writes parameter gradients and, if `input_grad` is given,
  /// the gradient with respect to the input.
  LayerGrads backward(const ForwardCache& cache, const Matrix& output_grad,
                      Matrix* input_grad = nullptr) const;

  LayerGrads zeros_like() const;

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);
  void save_file(const std::string& path) const;
  static Mlp load_file(const std::string& path);

  bool operator==(const Mlp& other) const;

 private:
  void check_chain() const;

  std::vector<Layer> layers_;
  Activation output_activation_ = Activation::kIdentity;
  std::uint64_t generation_ = 0;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam moments for one network.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& params, AdamConfig config = {});

  void step(Mlp& params, const LayerGrads& grads);

  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  LayerGrads first_;
  LayerGrads second_;
  std::int64_t steps_ = 0;
};

/// target <- tau * source + (1 - tau) * target, elementwise.
void polyak_update(Mlp& target, const Mlp& source, double tau);

/// Euclidean distance between two equally shaped networks' parameters.
double parameter_distance(const Mlp& a, const Mlp& b);

}  // namespace camel
