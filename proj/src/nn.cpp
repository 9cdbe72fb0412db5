#include "camel/nn.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace camel {

namespace {

constexpr const char* kMagic = "camel-mlp";
constexpr int kFormatVersion = 1;

void apply_activation(Matrix& m, Activation a) {
  switch (a) {
    case Activation::kRelu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      m = m.array().tanh();
      break;
    case Activation::kIdentity:
      break;
  }
}

// Multiplies `grad` in place by the activation derivative, given the activation output.
void apply_derivative(Matrix& grad, const Matrix& activated, Activation a) {
  switch (a) {
    case Activation::kRelu:
      grad = (activated.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::kTanh:
      grad.array() *= 1.0 - activated.array().square();
      break;
    case Activation::kIdentity:
      break;
  }
}

void write_values(std::ostream& out, const double* data, Eigen::Index n) {
  char buf[32];
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data[i]);
    out << (i == 0 ? "" : " ") << buf;
  }
  out << '\n';
}

double read_value(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error("checkpoint truncated");
  std::size_t used = 0;
  double v = std::stod(token, &used);
  if (used != token.size()) throw std::runtime_error("bad number in checkpoint: " + token);
  return v;
}

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw std::runtime_error("unknown activation '" + s + "'");
}

Mlp::Mlp(std::vector<Layer> layers, Activation output_activation)
    : layers_(std::move(layers)),
      output_activation_(output_activation),
      generation_(next_generation()) {
  check_chain();
}

Mlp::Mlp(const Mlp& other)
    : layers_(other.layers_),
      output_activation_(other.output_activation_),
      generation_(next_generation()) {}

Mlp& Mlp::operator=(const Mlp& other) {
  layers_ = other.layers_;
  output_activation_ = other.output_activation_;
  generation_ = next_generation();
  return *this;
}

std::vector<Layer>& Mlp::mutable_layers() {
  generation_ = next_generation();
  return layers_;
}

Mlp Mlp::create(std::span<const int> sizes, Activation output_activation, Rng& rng,
                double final_layer_scale) {
  if (sizes.size() < 2) throw ShapeError("an Mlp needs at least input and output sizes");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int in = sizes[i];
    const int out = sizes[i + 1];
    if (in <= 0 || out <= 0) throw ShapeError("layer sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer l{Matrix(out, in), Vector(out)};
    // fill row-major so the draw order does not depend on Eigen's storage order
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) l.weight(r, c) = dist(rng);
    for (int r = 0; r < out; ++r) l.bias[r] = dist(rng);
    layers.push_back(std::move(l));
  }
  layers.back().weight *= final_layer_scale;
  layers.back().bias *= final_layer_scale;
  return Mlp(std::move(layers), output_activation);
}

void Mlp::check_chain() const {
  if (layers_.empty()) throw ShapeError("an Mlp needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.bias.size() != l.weight.rows()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias length does not match weight rows");
    }
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
      throw ShapeError("layer " + std::to_string(i) + ": input size does not chain");
    }
  }
}

int Mlp::input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
int Mlp::output_size() const { return static_cast<int>(layers_.back().weight.rows()); }

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Matrix Mlp::forward(const Matrix& input) const {
  ForwardCache scratch;
  return forward(input, scratch);
}

Vector Mlp::forward(const Vector& input) const {
  return forward(Matrix(input)).col(0);
}

Matrix Mlp::forward(const Matrix& input, ForwardCache& cache) const {
  if (input.rows() != input_size()) {
    throw ShapeError("forward: input has " + std::to_string(input.rows()) + " rows, expected " +
                     std::to_string(input_size()));
  }
  cache.inputs.resize(layers_.size());
  cache.outputs.resize(layers_.size());
  cache.owner = this;
  cache.generation = generation_;

  const Matrix* x = &input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    cache.inputs[i] = *x;
    Matrix& z = cache.outputs[i];
    z.resize(l.weight.rows(), x->cols());
    z.noalias() = l.weight * *x;
    z.colwise() += l.bias;
    apply_activation(z, i + 1 == layers_.size() ? output_activation_ : Activation::kRelu);
    x = &z;
  }
  return cache.outputs.back();
}

LayerGrads Mlp::backward(const ForwardCache& cache, const Matrix& output_grad,
                         Matrix* input_grad) const {
  if (cache.owner != this || cache.generation != generation_ ||
      cache.outputs.size() != layers_.size()) {
    throw UsageError("backward: cache does not come from a forward pass on these parameters");
  }
  const Matrix& out = cache.outputs.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw ShapeError("backward: output gradient shape does not match the forward output");
  }

  LayerGrads grads(layers_.size());
  Matrix delta = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& l = layers_[k];
    apply_derivative(delta, cache.outputs[k],
                     k + 1 == layers_.size() ? output_activation_ : Activation::kRelu);
    grads[k].weight.noalias() = delta * cache.inputs[k].transpose();
    grads[k].bias = delta.rowwise().sum();
    if (k > 0 || input_grad != nullptr) {
      Matrix upstream(l.weight.cols(), delta.cols());
      upstream.noalias() = l.weight.transpose() * delta;
      delta.swap(upstream);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
  return grads;
}

LayerGrads Mlp::zeros_like() const {
  LayerGrads z;
  z.reserve(layers_.size());
  for (const Layer& l : layers_) {
    z.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return z;
}

void Mlp::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "output " << to_string(output_activation_) << '\n';
  out << "layers " << layers_.size() << '\n';
  for (const Layer& l : layers_) {
    out << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = l.weight;
    write_values(out, rm.data(), rm.size());
    write_values(out, l.bias.data(), l.bias.size());
  }
}

Mlp Mlp::load(std::istream& in) {
  std::string magic, key, act;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != kMagic || version != kFormatVersion) {
    throw std::runtime_error("not a camel-mlp checkpoint");
  }
  if (!(in >> key >> act) || key != "output") throw std::runtime_error("checkpoint: missing output");
  if (!(in >> key >> count) || key != "layers" || count == 0) {
    throw std::runtime_error("checkpoint: missing layer count");
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) {
      throw std::runtime_error("checkpoint: bad layer shape");
    }
    Layer l{Matrix(rows, cols), Vector(rows)};
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = read_value(in);
    for (Eigen::Index r = 0; r < rows; ++r) l.bias[r] = read_value(in);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers), activation_from_string(act));
}

void Mlp::save_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  save(f);
}

Mlp Mlp::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return load(f);
}

bool Mlp::operator==(const Mlp& other) const {
  if (output_activation_ != other.output_activation_ || layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& a = layers_[i];
    const Layer& b = other.layers_[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Adam::Adam(const Mlp& params, AdamConfig config)
    : config_(config), first_(params.zeros_like()), second_(params.zeros_like()) {}

void Adam::step(Mlp& params, const LayerGrads& grads) {
  if (grads.size() != first_.size() || params.num_layers() != first_.size()) {
    throw ShapeError("adam: gradient/parameter layer counts differ from optimizer state");
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };

  auto& layers = params.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads[i].weight.rows() != layers[i].weight.rows() ||
        grads[i].weight.cols() != layers[i].weight.cols() ||
        grads[i].bias.size() != layers[i].bias.size()) {
      throw ShapeError("adam: gradient shape mismatch in layer " + std::to_string(i));
    }
    update(layers[i].weight, grads[i].weight, first_[i].weight, second_[i].weight);
    update(layers[i].bias, grads[i].bias, first_[i].bias, second_[i].bias);
  }
}

void polyak_update(Mlp& target, const Mlp& source, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("polyak: tau must lie in [0, 1]");
  if (target.num_layers() != source.num_layers()) throw ShapeError("polyak: layer count mismatch");
  auto& dst = target.mutable_layers();
  const auto& src = source.layers();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].weight.rows() != src[i].weight.rows() ||
        dst[i].weight.cols() != src[i].weight.cols()) {
      throw ShapeError("polyak: shape mismatch in layer " + std::to_string(i));
    }
    dst[i].weight = tau * src[i].weight + (1.0 - tau) * dst[i].weight;
    dst[i].bias = tau * src[i].bias + (1.0 - tau) * dst[i].bias;
  }
}

double parameter_distance(const Mlp& a, const Mlp& b) {
  if (a.num_layers() != b.num_layers()) throw ShapeError("distance: layer count mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.num_layers(); ++i) {
    sq += (a.layers()[i].weight - b.layers()[i].weight).squaredNorm();
    sq += (a.layers()[i].bias - b.layers()[i].bias).squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace camel
