#include "fbcast/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "fbcast/error.hpp"

namespace fbcast {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

struct HeadLayout {
  std::size_t n, m;
  std::size_t cache_mean() const { return 0; }
  std::size_t alpha_mean() const { return n; }
  std::size_t log_std() const { return 2 * n; }
  std::size_t logits() const { return 4 * n; }
};

double clamp_log_std(double v) { return std::clamp(v, kLogStdMin, kLogStdMax); }

bool log_std_free(double v) { return v > kLogStdMin && v < kLogStdMax; }

std::vector<double> softmax(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - zmax));
  for (double& v : p) v /= s;
  return p;
}

std::vector<double> checked_forward(const PolicyHead& head, std::span<const double> features, MlpCache* cache) {
  if (features.size() != head.feature_size()) throw DomainError("policy: feature vector has wrong length");
  for (double f : features)
    if (!std::isfinite(f)) throw DomainError("policy: non-finite state feature");
  std::vector<double> out = mlp_forward(head.actor, features, cache);
  for (double v : out)
    if (!std::isfinite(v)) throw NumericalError("policy: non-finite actor output");
  return out;
}

}  // namespace

void HarmonicMenu::validate() const {
  if (values.empty()) throw DomainError("HarmonicMenu: empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 1) throw DomainError("HarmonicMenu: entries must be >= 1");
    if (i > 0 && values[i] <= values[i - 1]) throw DomainError("HarmonicMenu: entries must be strictly increasing");
  }
}

PolicyHead make_policy_head(std::size_t num_files, std::size_t cache_cap, HarmonicMenu menu,
                            const std::vector<std::size_t>& hidden, std::uint64_t seed, double init_log_std,
                            double alpha_floor) {
  if (num_files == 0 || cache_cap == 0 || cache_cap > num_files)
    throw DomainError("make_policy_head: need 1 <= C <= N");
  menu.validate();
  if (!(alpha_floor > 0.0)) throw DomainError("make_policy_head: alpha floor must be > 0");
  PolicyHead head;
  head.num_files = num_files;
  head.cache_cap = cache_cap;
  head.menu = std::move(menu);
  head.alpha_floor = alpha_floor;
  std::vector<std::size_t> sizes{head.feature_size()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(head.output_size());
  head.actor = make_mlp(sizes, seed);
  auto& out = head.actor.layers.back();
  const HeadLayout lay{num_files, head.menu.values.size()};
  for (std::size_t i = 0; i < 2 * num_files; ++i) out.b[lay.log_std() + i] = init_log_std;
  return head;
}

std::vector<double> state_features(const ForwardState& state, std::size_t horizon) {
  std::vector<double> f(state.p_req);
  f.push_back(static_cast<double>(state.slot + 1) / static_cast<double>(horizon));
  return f;
}

std::vector<double> transform_cache(std::span<const double> raw, std::size_t cap) {
  const std::size_t n = raw.size();
  if (cap > n) throw DomainError("transform_cache: capacity exceeds library size");
  for (double v : raw)
    if (!std::isfinite(v)) throw DomainError("transform_cache: non-finite input");
  if (cap == n) return std::vector<double>(n, 1.0);
  if (cap == 0) return std::vector<double>(n, 0.0);

  const double target = static_cast<double>(cap);
  auto mass = [&](double tau) {
    double s = 0.0;
    for (double v : raw) s += std::clamp(v - tau, 0.0, 1.0);
    return s;
  };
  // mass(lo) = n > cap, mass(hi) = 0 < cap
  double lo = *std::min_element(raw.begin(), raw.end()) - 1.0;
  double hi = *std::max_element(raw.begin(), raw.end());
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > target) lo = mid;
    else hi = mid;
  }
  double tau = 0.5 * (lo + hi);

  // Exact shift for the active set found by bisection.
  double free_sum = 0.0;
  std::size_t free_count = 0, ones = 0;
  for (double v : raw) {
    const double x = v - tau;
    if (x >= 1.0) ++ones;
    else if (x > 0.0) {
      free_sum += v;
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum - (target - static_cast<double>(ones))) / static_cast<double>(free_count);
    if (std::abs(exact - tau) <= 1e-9) tau = exact;
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(raw[i] - tau, 0.0, 1.0);
  return x;
}

std::vector<double> transform_alpha(std::span<const double> raw, double floor) {
  std::vector<double> a(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double r = raw[i];
    // softplus without overflow
    const double sp = r > 0.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r));
    a[i] = sp + floor;
  }
  return a;
}

SlotAction to_action(const PolicyHead& head, const RawSample& raw) {
  SlotAction a;
  a.p_cach = transform_cache(raw.cache, head.cache_cap);
  a.alpha = transform_alpha(raw.alpha, head.alpha_floor);
  a.n_hb = head.menu.values.at(raw.harmonic_choice);
  return a;
}

namespace {

double gaussian_log_prob(std::span<const double> out, const HeadLayout& lay, const RawSample& raw) {
  double lp = 0.0;
  for (std::size_t i = 0; i < 2 * lay.n; ++i) {
    const double mean = out[i];
    const double x = i < lay.n ? raw.cache[i] : raw.alpha[i - lay.n];
    const double ls = clamp_log_std(out[lay.log_std() + i]);
    const double z = (x - mean) * std::exp(-ls);
    lp += -0.5 * z * z - ls - kHalfLog2Pi;
  }
  return lp;
}

}  // namespace

SampledAction sample_action(const PolicyHead& head, std::span<const double> features, Rng& rng) {
  const std::vector<double> out = checked_forward(head, features, nullptr);
  const HeadLayout lay{head.num_files, head.menu.values.size()};
  SampledAction s;
  s.raw.cache.resize(lay.n);
  s.raw.alpha.resize(lay.n);
  for (std::size_t i = 0; i < 2 * lay.n; ++i) {
    const double sigma = std::exp(clamp_log_std(out[lay.log_std() + i]));
    const double x = out[i] + sigma * standard_normal(rng);
    (i < lay.n ? s.raw.cache[i] : s.raw.alpha[i - lay.n]) = x;
  }
  const std::vector<double> probs = softmax(std::span<const double>(out).subspan(lay.logits(), lay.m));
  const double u = uniform01(rng);
  double acc = 0.0;
  s.raw.harmonic_choice = lay.m - 1;
  for (std::size_t k = 0; k < lay.m; ++k) {
    acc += probs[k];
    if (u < acc) {
      s.raw.harmonic_choice = k;
      break;
    }
  }
  s.log_prob = gaussian_log_prob(out, lay, s.raw) + std::log(probs[s.raw.harmonic_choice]);
  s.action = to_action(head, s.raw);
  return s;
}

SampledAction greedy_action(const PolicyHead& head, std::span<const double> features) {
  const std::vector<double> out = checked_forward(head, features, nullptr);
  const HeadLayout lay{head.num_files, head.menu.values.size()};
  SampledAction s;
  s.raw.cache.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(lay.n));
  s.raw.alpha.assign(out.begin() + static_cast<std::ptrdiff_t>(lay.n),
                     out.begin() + static_cast<std::ptrdiff_t>(2 * lay.n));
  const auto logits = std::span<const double>(out).subspan(lay.logits(), lay.m);
  s.raw.harmonic_choice = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  const std::vector<double> probs = softmax(logits);
  s.log_prob = gaussian_log_prob(out, lay, s.raw) + std::log(probs[s.raw.harmonic_choice]);
  s.action = to_action(head, s.raw);
  return s;
}

PolicyTerms policy_terms(const PolicyHead& head, std::span<const double> features, const RawSample& raw) {
  const HeadLayout lay{head.num_files, head.menu.values.size()};
  if (raw.cache.size() != lay.n || raw.alpha.size() != lay.n || raw.harmonic_choice >= lay.m)
    throw DomainError("policy_terms: raw sample does not match head dimensions");
  PolicyTerms t;
  const std::vector<double> out = checked_forward(head, features, &t.cache);
  t.dlogp_dout.assign(out.size(), 0.0);
  t.dentropy_dout.assign(out.size(), 0.0);

  for (std::size_t i = 0; i < 2 * lay.n; ++i) {
    const double x = i < lay.n ? raw.cache[i] : raw.alpha[i - lay.n];
    const double raw_ls = out[lay.log_std() + i];
    const double ls = clamp_log_std(raw_ls);
    const double inv_var = std::exp(-2.0 * ls);
    const double diff = x - out[i];
    t.log_prob += -0.5 * diff * diff * inv_var - ls - kHalfLog2Pi;
    t.entropy += ls + 0.5 + kHalfLog2Pi;
    t.dlogp_dout[i] = diff * inv_var;
    if (log_std_free(raw_ls)) {
      t.dlogp_dout[lay.log_std() + i] = diff * diff * inv_var - 1.0;
      t.dentropy_dout[lay.log_std() + i] = 1.0;
    }
  }

  const auto logits = std::span<const double>(out).subspan(lay.logits(), lay.m);
  const std::vector<double> p = softmax(logits);
  double cat_entropy = 0.0;
  for (std::size_t k = 0; k < lay.m; ++k)
    if (p[k] > 0.0) cat_entropy -= p[k] * std::log(p[k]);
  t.log_prob += std::log(p[raw.harmonic_choice]);
  t.entropy += cat_entropy;
  for (std::size_t k = 0; k < lay.m; ++k) {
    t.dlogp_dout[lay.logits() + k] = (k == raw.harmonic_choice ? 1.0 : 0.0) - p[k];
    const double logp = p[k] > 0.0 ? std::log(p[k]) : 0.0;
    t.dentropy_dout[lay.logits() + k] = -p[k] * (logp + cat_entropy);
  }
  return t;
}

LogProbGrad log_prob_and_grad(const PolicyHead& head, std::span<const double> features, const RawSample& raw) {
  PolicyTerms t = policy_terms(head, features, raw);
  return {t.log_prob, mlp_backward(head.actor, t.cache, t.dlogp_dout)};
}

namespace {

constexpr char kHeadMagic[8] = {'F', 'B', 'H', 'E', 'A', 'D', '0', '1'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("policy checkpoint: truncated");
  return v;
}

}  // namespace

void save_policy(std::ostream& os, const PolicyHead& head) {
  os.write(kHeadMagic, sizeof kHeadMagic);
  put<std::uint64_t>(os, head.num_files);
  put<std::uint64_t>(os, head.cache_cap);
  put<double>(os, head.alpha_floor);
  put<std::uint64_t>(os, head.menu.values.size());
  for (long v : head.menu.values) put<std::int64_t>(os, v);
  save_checkpoint(os, head.actor);
}

PolicyHead load_policy(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kHeadMagic, sizeof magic) != 0)
    throw std::runtime_error("policy checkpoint: bad magic");
  PolicyHead head;
  head.num_files = get<std::uint64_t>(is);
  head.cache_cap = get<std::uint64_t>(is);
  head.alpha_floor = get<double>(is);
  const auto m = get<std::uint64_t>(is);
  if (m == 0 || m > 4096) throw std::runtime_error("policy checkpoint: implausible menu size");
  head.menu.values.clear();
  for (std::uint64_t i = 0; i < m; ++i) head.menu.values.push_back(static_cast<long>(get<std::int64_t>(is)));
  head.menu.validate();
  head.actor = load_checkpoint(is);
  if (head.actor.input_size() != head.feature_size() || head.actor.output_size() != head.output_size())
    throw std::runtime_error("policy checkpoint: network shape does not match head");
  return head;
}

SlotAction HeadPolicy::act(const ForwardState& state, std::size_t horizon, Rng& rng) {
  const std::vector<double> f = state_features(state, horizon);
  return greedy_ ? greedy_action(*head_, f).action : sample_action(*head_, f, rng).action;
}

}  // namespace fbcast
