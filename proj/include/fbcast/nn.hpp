#pragma once

// Fully connected ReLU networks with hand-written backpropagation and Adam.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace fbcast {

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
};

// Layer sizes (input, hidden..., output) and the weights between them. Hidden
// layers use ReLU; the output layer is affine.
struct MlpParams {
  std::vector<std::size_t> sizes;
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;

  std::size_t input_size() const { return sizes.front(); }
  std::size_t output_size() const { return sizes.back(); }
  std::size_t parameter_count() const;
  double& parameter(std::size_t index);
  double parameter(std::size_t index) const;
};

// Same shape as MlpParams; holds dLoss/dParam.
using MlpGradient = MlpParams;

// He-uniform weights on ReLU layers, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) on the
// output layer, zero biases.
MlpParams make_mlp(std::vector<std::size_t> sizes, std::uint64_t seed);

MlpGradient zeros_like(const MlpParams& params);

// Inputs to every layer (post-ReLU for hidden layers) and hidden pre-activations.
struct MlpCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
};

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input,
                                MlpCache* cache = nullptr);

// Adds d(output . output_grad)/dparams into `grads`. ReLU subgradient at 0 is 0.
void mlp_backward(const MlpParams& params, const MlpCache& cache, std::span<const double> output_grad,
                  MlpGradient& grads);

MlpGradient mlp_backward(const MlpParams& params, const MlpCache& cache,
                         std::span<const double> output_grad);

// grads *= factor
void scale_gradient(MlpGradient& grads, double factor);
// into += other
void add_gradient(MlpGradient& into, const MlpGradient& other);

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  std::uint64_t step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const MlpParams& params, double lr);

// Bias-corrected Adam update. Throws NumericalError naming the layer if any
// gradient is non-finite; parameters are left untouched in that case.
void adam_step(MlpParams& params, const MlpGradient& grads, AdamState& state);

// Throws NumericalError if any parameter is non-finite.
void require_finite(const MlpParams& params, const char* what);

// Checkpoint layout (little-endian):
//   8 bytes  magic "FBMLP001"
//   u64      seed
//   u64      number of sizes K, then K x u64 sizes
//   per layer: out*in f64 weights (row-major), out f64 biases
void save_checkpoint(std::ostream& os, const MlpParams& params);
MlpParams load_checkpoint(std::istream& is);

}  // namespace fbcast
