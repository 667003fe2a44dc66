#include "fbcast/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "fbcast/error.hpp"
#include "fbcast/rng.hpp"

namespace fbcast {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

double& MlpParams::parameter(std::size_t index) {
  for (auto& l : layers) {
    if (index < l.w.size()) return l.w[index];
    index -= l.w.size();
    if (index < l.b.size()) return l.b[index];
    index -= l.b.size();
  }
  throw std::out_of_range("MlpParams::parameter index out of range");
}

double MlpParams::parameter(std::size_t index) const {
  return const_cast<MlpParams&>(*this).parameter(index);
}

MlpParams make_mlp(std::vector<std::size_t> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw DomainError("make_mlp: need at least input and output sizes");
  for (auto s : sizes)
    if (s == 0) throw DomainError("make_mlp: layer sizes must be >= 1");
  MlpParams p;
  p.sizes = std::move(sizes);
  p.seed = seed;
  Rng rng(stream_seed(seed, 0x6d6c70));
  const std::size_t nl = p.sizes.size() - 1;
  for (std::size_t k = 0; k < nl; ++k) {
    DenseLayer l;
    l.in = p.sizes[k];
    l.out = p.sizes[k + 1];
    l.w.resize(l.in * l.out);
    l.b.assign(l.out, 0.0);
    const double fan_in = static_cast<double>(l.in);
    const double limit = (k + 1 < nl) ? std::sqrt(6.0 / fan_in) : 1.0 / std::sqrt(fan_in);
    for (double& w : l.w) w = limit * (2.0 * uniform01(rng) - 1.0);
    p.layers.push_back(std::move(l));
  }
  return p;
}

MlpGradient zeros_like(const MlpParams& params) {
  MlpGradient g = params;
  for (auto& l : g.layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  return g;
}

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input, MlpCache* cache) {
  if (input.size() != params.input_size())
    throw DomainError("mlp_forward: input has " + std::to_string(input.size()) + " entries, network expects " +
                      std::to_string(params.input_size()));
  std::vector<double> x(input.begin(), input.end());
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  const std::size_t nl = params.layers.size();
  for (std::size_t k = 0; k < nl; ++k) {
    const DenseLayer& l = params.layers[k];
    std::vector<double> z(l.b);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = l.w.data() + o * l.in;
      double acc = 0.0;
      for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * x[i];
      z[o] += acc;
    }
    if (cache) cache->inputs.push_back(x);
    if (k + 1 < nl) {
      if (cache) cache->pre.push_back(z);
      for (double& v : z) v = v < 0.0 ? 0.0 : v;  // NaN passes through
    }
    x = std::move(z);
  }
  return x;
}

void mlp_backward(const MlpParams& params, const MlpCache& cache, std::span<const double> output_grad,
                  MlpGradient& grads) {
  const std::size_t nl = params.layers.size();
  if (cache.inputs.size() != nl || cache.pre.size() + 1 != nl)
    throw DomainError("mlp_backward: cache does not match network");
  if (output_grad.size() != params.output_size())
    throw DomainError("mlp_backward: output gradient has wrong length");
  if (grads.layers.size() != nl) throw DomainError("mlp_backward: gradient shape mismatch");

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t k = nl; k-- > 0;) {
    const DenseLayer& l = params.layers[k];
    DenseLayer& g = grads.layers[k];
    const std::vector<double>& x = cache.inputs[k];
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* grow = g.w.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) grow[i] += d * x[i];
      g.b[o] += d;
    }
    if (k == 0) break;
    std::vector<double> prev(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = l.w.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) prev[i] += d * row[i];
    }
    const std::vector<double>& pre = cache.pre[k - 1];
    for (std::size_t i = 0; i < l.in; ++i)
      if (!(pre[i] > 0.0)) prev[i] = 0.0;
    delta = std::move(prev);
  }
}

MlpGradient mlp_backward(const MlpParams& params, const MlpCache& cache, std::span<const double> output_grad) {
  MlpGradient g = zeros_like(params);
  mlp_backward(params, cache, output_grad, g);
  return g;
}

void scale_gradient(MlpGradient& grads, double factor) {
  for (auto& l : grads.layers) {
    for (double& v : l.w) v *= factor;
    for (double& v : l.b) v *= factor;
  }
}

void add_gradient(MlpGradient& into, const MlpGradient& other) {
  if (into.layers.size() != other.layers.size()) throw DomainError("add_gradient: shape mismatch");
  for (std::size_t k = 0; k < into.layers.size(); ++k) {
    auto& a = into.layers[k];
    const auto& b = other.layers[k];
    if (a.w.size() != b.w.size() || a.b.size() != b.b.size()) throw DomainError("add_gradient: shape mismatch");
    for (std::size_t i = 0; i < a.w.size(); ++i) a.w[i] += b.w[i];
    for (std::size_t i = 0; i < a.b.size(); ++i) a.b[i] += b.b[i];
  }
}

AdamState make_adam(const MlpParams& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (const auto& l : params.layers) {
    s.m_w.emplace_back(l.w.size(), 0.0);
    s.v_w.emplace_back(l.w.size(), 0.0);
    s.m_b.emplace_back(l.b.size(), 0.0);
    s.v_b.emplace_back(l.b.size(), 0.0);
  }
  return s;
}

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, const AdamState& s, double c1, double c2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace

void adam_step(MlpParams& params, const MlpGradient& grads, AdamState& state) {
  if (grads.layers.size() != params.layers.size() || state.m_w.size() != params.layers.size())
    throw DomainError("adam_step: shape mismatch");
  for (std::size_t k = 0; k < grads.layers.size(); ++k) {
    if (grads.layers[k].w.size() != params.layers[k].w.size() ||
        grads.layers[k].b.size() != params.layers[k].b.size())
      throw DomainError("adam_step: shape mismatch in layer " + std::to_string(k));
    if (!all_finite(grads.layers[k].w) || !all_finite(grads.layers[k].b))
      throw NumericalError("adam_step: non-finite gradient in layer " + std::to_string(k));
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    adam_update(params.layers[k].w, grads.layers[k].w, state.m_w[k], state.v_w[k], state, c1, c2);
    adam_update(params.layers[k].b, grads.layers[k].b, state.m_b[k], state.v_b[k], state, c1, c2);
  }
}

void require_finite(const MlpParams& params, const char* what) {
  for (std::size_t k = 0; k < params.layers.size(); ++k)
    if (!all_finite(params.layers[k].w) || !all_finite(params.layers[k].b))
      throw NumericalError(std::string(what) + ": non-finite parameter in layer " + std::to_string(k));
}

namespace {

constexpr char kMagic[8] = {'F', 'B', 'M', 'L', 'P', '0', '0', '1'};

void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_f64s(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("checkpoint: truncated header");
  return v;
}

void get_f64s(std::istream& is, std::vector<double>& v) {
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
    throw std::runtime_error("checkpoint: truncated weights");
}

}  // namespace

void save_checkpoint(std::ostream& os, const MlpParams& params) {
  os.write(kMagic, sizeof kMagic);
  put_u64(os, params.seed);
  put_u64(os, params.sizes.size());
  for (auto s : params.sizes) put_u64(os, s);
  for (const auto& l : params.layers) {
    put_f64s(os, l.w);
    put_f64s(os, l.b);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

MlpParams load_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const std::uint64_t seed = get_u64(is);
  const std::uint64_t k = get_u64(is);
  if (k < 2 || k > 64) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<std::size_t> sizes(k);
  for (auto& s : sizes) {
    s = get_u64(is);
    if (s == 0 || s > (1u << 24)) throw std::runtime_error("checkpoint: implausible layer size");
  }
  MlpParams p = make_mlp(sizes, seed);
  for (auto& l : p.layers) {
    get_f64s(is, l.w);
    get_f64s(is, l.b);
  }
  return p;
}

}  // namespace fbcast
