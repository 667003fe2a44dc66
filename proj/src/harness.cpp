#include "fbcast/harness.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>

#include "fbcast/csv.hpp"
#include "fbcast/error.hpp"

namespace fbcast {

namespace {

double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

void ExperimentConfig::resolve() {
  auto require = [](bool ok, const std::string& field, const std::string& rule) {
    if (!ok) throw ConfigError(field + " " + rule, 0, field);
  };
  for (auto [v, name] : {std::pair{link.p_tx_dbm, "p_tx_dbm"}, {link.antenna_gain_dbi, "antenna_gain_dbi"},
                         {link.noise_psd_dbm_hz, "noise_psd_dbm_hz"}, {link.noise_figure_db, "noise_figure_db"},
                         {link.path_loss_ref_db, "path_loss_ref_db"}})
    require(std::isfinite(v), name, "must be finite");
  require(link.carrier_ghz > 0.0, "carrier_ghz", "must be > 0");
  radio.p_tx = from_db(link.p_tx_dbm - 30.0);
  radio.antenna_gain = from_db(link.antenna_gain_dbi);
  radio.n0 = from_db(link.noise_psd_dbm_hz + link.noise_figure_db - 30.0);
  radio.path_loss_ref = from_db(link.path_loss_ref_db);

  if (radio.cache_cap_C > radio.num_files_N)
    throw ConfigError("cache_cap_C = " + std::to_string(radio.cache_cap_C) + " exceeds num_files_N = " +
                          std::to_string(radio.num_files_N) + " (infeasible cache constraint)",
                      0, "cache_cap_C,num_files_N");
  try {
    radio.validate();
  } catch (const DomainError& e) {
    std::string field = e.what();
    field = field.substr(0, field.find(' '));
    if (field.rfind("RadioConfig.", 0) == 0) field = field.substr(12);
    throw ConfigError(e.what(), 0, field);
  }
  require(popularity.horizon >= 1, "horizon_T", "must be >= 1");
  require(popularity.skew >= 0.0 && std::isfinite(popularity.skew), "zipf_skew", "must be >= 0");
  learner.seed = seed;
  auto wrap = [](const std::function<void()>& check, const std::string& prefix) {
    try {
      check();
    } catch (const DomainError& e) {
      std::string msg = e.what();
      std::string field = msg.substr(0, msg.find(' '));
      if (field.rfind(prefix, 0) == 0) field = field.substr(prefix.size());
      throw ConfigError(msg, 0, field);
    }
  };
  wrap([&] { learner.validate(); }, "LearnerConfig.");
  wrap([&] { unicast.validate(); }, "UnicastConfig.");
  require(ppo.clip > 0.0, "ppo_clip", "must be > 0");
  require(ppo.epochs >= 1, "ppo_epochs", "must be >= 1");
  require(eval_episodes >= 1, "eval_episodes", "must be >= 1");
  require(mc_samples >= 1, "mc_samples", "must be >= 1");
  require(learner.alpha_floor > 0.0, "alpha_floor", "must be > 0");
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "paper") {
    // defaults already describe the full-scale setting
  } else if (name == "tiny") {
    cfg.radio.num_files_N = 20;
    cfg.popularity.horizon = 32;
    cfg.learner.hidden = {64};
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected paper or tiny)", 0, "preset");
  }
  cfg.resolve();
  return cfg;
}

// --- key table ------------------------------------------------------------

namespace {

struct Key {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

template <class U>
U to_unsigned(const std::string& s) {
  U v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  return v;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) out += fmt_double(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

template <class Getter>
Key real_key(std::string name, Getter ref) {
  return {name, [ref](const ExperimentConfig& c) { return fmt_double(ref(const_cast<ExperimentConfig&>(c))); },
          [ref](ExperimentConfig& c, const std::string& v) { ref(c) = to_double(v); }};
}

template <class U, class Getter>
Key count_key(std::string name, Getter ref) {
  return {name, [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); },
          [ref](ExperimentConfig& c, const std::string& v) { ref(c) = to_unsigned<U>(v); }};
}

std::vector<Key> build_keys() {
  using C = ExperimentConfig;
  std::vector<Key> k;
  k.push_back(count_key<std::uint64_t>("seed", [](C& c) -> std::uint64_t& { return c.seed; }));
  k.push_back(real_key("lambda_bs", [](C& c) -> double& { return c.radio.lambda_bs; }));
  k.push_back(real_key("p_tx_dbm", [](C& c) -> double& { return c.link.p_tx_dbm; }));
  k.push_back(real_key("antenna_gain_dbi", [](C& c) -> double& { return c.link.antenna_gain_dbi; }));
  k.push_back(real_key("noise_psd_dbm_hz", [](C& c) -> double& { return c.link.noise_psd_dbm_hz; }));
  k.push_back(real_key("noise_figure_db", [](C& c) -> double& { return c.link.noise_figure_db; }));
  k.push_back(real_key("path_loss_ref_db", [](C& c) -> double& { return c.link.path_loss_ref_db; }));
  k.push_back(real_key("path_loss_exp", [](C& c) -> double& { return c.radio.path_loss_exp; }));
  k.push_back(real_key("carrier_ghz", [](C& c) -> double& { return c.link.carrier_ghz; }));
  k.push_back(real_key("rate_R", [](C& c) -> double& { return c.radio.rate_R; }));
  k.push_back(real_key("file_len_L", [](C& c) -> double& { return c.radio.file_len_L; }));
  k.push_back(count_key<std::size_t>("num_files_N", [](C& c) -> std::size_t& { return c.radio.num_files_N; }));
  k.push_back(count_key<std::size_t>("cache_cap_C", [](C& c) -> std::size_t& { return c.radio.cache_cap_C; }));
  k.push_back(count_key<std::size_t>("horizon_T", [](C& c) -> std::size_t& { return c.popularity.horizon; }));
  k.push_back(real_key("zipf_skew", [](C& c) -> double& { return c.popularity.skew; }));
  k.push_back({"churn_k",
               [](const C& c) { return c.popularity.auto_churn ? std::string("auto") : std::to_string(c.popularity.churn_k); },
               [](C& c, const std::string& v) {
                 if (v == "auto") {
                   c.popularity.auto_churn = true;
                   c.popularity.churn_k = 0;
                 } else {
                   c.popularity.auto_churn = false;
                   c.popularity.churn_k = to_unsigned<std::size_t>(v);
                 }
               }});
  k.push_back(real_key("gamma", [](C& c) -> double& { return c.learner.gamma; }));
  k.push_back({"preference", [](const C& c) { return join(std::vector<double>(c.learner.preference.begin(), c.learner.preference.end())); },
               [](C& c, const std::string& v) {
                 const auto parts = split_list(v);
                 if (parts.size() != 3) throw std::invalid_argument("expected three comma-separated weights");
                 for (std::size_t i = 0; i < 3; ++i) c.learner.preference[i] = to_double(parts[i]);
               }});
  k.push_back(real_key("gamma_mov", [](C& c) -> double& { return c.learner.gamma_mov; }));
  k.push_back(real_key("lr_actor", [](C& c) -> double& { return c.learner.lr_actor; }));
  k.push_back(real_key("lr_forward_critic", [](C& c) -> double& { return c.learner.lr_forward_critic; }));
  k.push_back(real_key("lr_backward_critic", [](C& c) -> double& { return c.learner.lr_backward_critic; }));
  k.push_back(count_key<std::size_t>("episodes", [](C& c) -> std::size_t& { return c.learner.episodes; }));
  k.push_back(real_key("entropy_coef", [](C& c) -> double& { return c.learner.entropy_coef; }));
  k.push_back({"hidden", [](const C& c) { return join(c.learner.hidden); },
               [](C& c, const std::string& v) {
                 c.learner.hidden.clear();
                 if (trim(v).empty()) return;
                 for (const auto& p : split_list(v)) c.learner.hidden.push_back(to_unsigned<std::size_t>(p));
               }});
  k.push_back(real_key("init_log_std", [](C& c) -> double& { return c.learner.init_log_std; }));
  k.push_back(real_key("alpha_floor", [](C& c) -> double& { return c.learner.alpha_floor; }));
  k.push_back({"harmonic_menu", [](const C& c) { return join(c.learner.menu.values); },
               [](C& c, const std::string& v) {
                 c.learner.menu.values.clear();
                 for (const auto& p : split_list(v)) c.learner.menu.values.push_back(static_cast<long>(to_unsigned<std::uint64_t>(p)));
               }});
  k.push_back(real_key("ppo_clip", [](C& c) -> double& { return c.ppo.clip; }));
  k.push_back(count_key<std::size_t>("ppo_epochs", [](C& c) -> std::size_t& { return c.ppo.epochs; }));
  k.push_back(real_key("lambda_ue", [](C& c) -> double& { return c.unicast.lambda_ue; }));
  k.push_back(real_key("unicast_area_km2", [](C& c) -> double& { return c.unicast.area_km2; }));
  k.push_back(real_key("unicast_alpha", [](C& c) -> double& { return c.unicast.alpha_uc; }));
  k.push_back(real_key("unicast_target_outage", [](C& c) -> double& { return c.unicast.target_outage; }));
  k.push_back(count_key<std::size_t>("eval_episodes", [](C& c) -> std::size_t& { return c.eval_episodes; }));
  k.push_back(count_key<std::uint64_t>("mc_samples", [](C& c) -> std::uint64_t& { return c.mc_samples; }));
  return k;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = build_keys();
  return k;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : keys()) n.push_back(k.name);
    return n;
  }();
  return names;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return k.name == name; });
    if (it == keys().end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + name + "'", line_no, name);
    try {
      it->set(base, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + name + ": " + e.what(), line_no, name);
    }
  }
  base.resolve();
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::string git_blob_sha1(const std::string& content) {
  const std::string framed = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(framed.data()), framed.size(), digest);
  std::ostringstream hex;
  for (unsigned char b : digest) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
  return hex.str();
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::filesystem::filesystem_error("cannot write", p, std::make_error_code(std::errc::io_error));
  out << content;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::filesystem::filesystem_error("cannot read", p, std::make_error_code(std::errc::io_error));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void prepare_run_dir(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                     const std::vector<std::pair<std::string, std::string>>& inputs) {
  std::filesystem::create_directories(dir);
  const std::string resolved = dump_config(cfg);
  write_file(dir / "config.resolved", resolved);
  write_file(dir / "seed", std::to_string(cfg.seed) + "\n");
  std::string manifest;
  for (const auto& [name, content] : inputs) manifest += git_blob_sha1(content) + "  input:" + name + "\n";
  manifest += git_blob_sha1(resolved) + "  config.resolved\n";
  write_file(dir / "manifest.txt", manifest);
}

void record_output(const std::filesystem::path& dir, const std::string& file) {
  const std::string content = read_file(dir / file);
  std::ofstream out(dir / "manifest.txt", std::ios::binary | std::ios::app);
  out << git_blob_sha1(content) << "  " << file << "\n";
}

Environment environment(const ExperimentConfig& cfg) { return {cfg.radio, cfg.popularity}; }

std::vector<std::uint64_t> eval_seeds(const ExperimentConfig& cfg) {
  const std::uint64_t base = stream_seed(cfg.seed, 0x6576616c);
  std::vector<std::uint64_t> s(cfg.eval_episodes);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = stream_seed(base, i);
  return s;
}

LearnerKind parse_learner(const std::string& name) {
  if (name == "fb") return LearnerKind::fb;
  if (name == "a2c") return LearnerKind::a2c;
  if (name == "ppo") return LearnerKind::ppo;
  throw ConfigError("unknown learner '" + name + "' (expected fb, a2c or ppo)", 0, "learner");
}

std::string learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::fb: return "fb";
    case LearnerKind::a2c: return "a2c";
    case LearnerKind::ppo: return "ppo";
  }
  return "?";
}

PolicyHead train_learner(LearnerKind kind, const ExperimentConfig& cfg, std::ostream* csv) {
  if (csv) write_episode_header(*csv);
  const Environment env = environment(cfg);
  if (kind == LearnerKind::fb) {
    FbMoacLearner learner(env, cfg.learner);
    learner.train(cfg.learner.episodes, csv);
    return learner.actor();
  }
  const auto variant = kind == LearnerKind::a2c ? ForwardOnlyVariant::a2c : ForwardOnlyVariant::ppo;
  return forward_only_learner(variant, env, cfg.learner, csv, cfg.ppo);
}

// --- outage validation -------------------------------------------------------

double OutagePoint::z_score() const {
  // An estimate with no outages (or only outages) has zero empirical spread;
  // the binomial spread at the analytic value then sets the scale.
  const double diff = std::abs(mc.probability - analytic);
  const double null_se = std::sqrt(analytic * (1.0 - analytic) / static_cast<double>(std::max<std::uint64_t>(mc.samples, 1)));
  const double se = std::max(mc.std_error, null_se);
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : INFINITY;
}

std::vector<OutagePoint> validate_outage(std::uint64_t samples, std::uint64_t seed) {
  constexpr double kReferenceSnrFactor = 1e-4;
  std::vector<OutagePoint> points;
  std::uint64_t index = 0;
  for (double lambda : {50.0, 100.0}) {
    for (double p : {0.05, 0.2, 0.8}) {
      for (double alpha : {0.5, 2.0}) {
        RadioConfig r;
        r.num_files_N = 1;
        r.cache_cap_C = 1;
        r.lambda_bs = lambda;
        r.path_loss_ref = r.p_tx * r.antenna_gain / (r.n0 * r.rate_R * kReferenceSnrFactor);
        const SlotAction a{{p}, {alpha}, 1};
        OutagePoint pt;
        pt.lambda_bs = lambda;
        pt.p_cach = p;
        pt.alpha = alpha;
        pt.analytic = outage_analytic(r, a, 0);
        pt.mc = mc_outage_oracle(r, a, 0, samples, stream_seed(seed, index++));
        points.push_back(pt);
      }
    }
  }
  return points;
}

void write_outage_csv(std::ostream& os, const std::vector<OutagePoint>& points) {
  write_schema_line(os, kOutageSchema);
  os << "lambda_bs,p_cach,alpha,analytic,monte_carlo,std_error,samples,z,pass\n";
  for (const auto& p : points)
    os << fmt_double(p.lambda_bs) << ',' << fmt_double(p.p_cach) << ',' << fmt_double(p.alpha) << ','
       << fmt_double(p.analytic) << ',' << fmt_double(p.mc.probability) << ',' << fmt_double(p.mc.std_error) << ','
       << p.mc.samples << ',' << fmt_double(p.z_score()) << ',' << (p.pass() ? "pass" : "fail") << '\n';
}

// --- comparison ---------------------------------------------------------------

namespace {

PolicyFactory greedy_head(const PolicyHead& head) {
  return [&head] { return std::unique_ptr<ActionSource>(new HeadPolicy(head, true)); };
}

void write_cost_table(std::ostream& os, const DominanceReport& r) {
  write_schema_line(os, kCostSchema);
  os << "policy,r_qos,r_bw,r_lat,norm_qos,norm_bw,norm_lat,dominated\n";
  std::array<double, 3> worst{};
  for (const auto& p : r.policies)
    for (std::size_t i = 0; i < 3; ++i) worst[i] = std::max(worst[i], p.cost[i]);
  for (std::size_t k = 0; k < r.policies.size(); ++k) {
    const auto& p = r.policies[k];
    os << p.name;
    for (double c : p.cost) os << ',' << fmt_double(c);
    for (std::size_t i = 0; i < 3; ++i) os << ',' << fmt_double(worst[i] > 0.0 ? p.cost[i] / worst[i] : 0.0);
    os << ',' << (r.is_dominated(k) ? 1 : 0) << '\n';
  }
}

void write_dominance(std::ostream& os, const DominanceReport& r) {
  write_schema_line(os, kDominanceSchema);
  os << "winner,loser\n";
  for (const auto& [w, l] : r.dominates) os << r.policies[w].name << ',' << r.policies[l].name << '\n';
}

void write_unicast_sweep(std::ostream& os, const ExperimentConfig& cfg, const Environment& env,
                         std::span<const std::uint64_t> seeds, double fb_bw) {
  write_schema_line(os, kUnicastSweepSchema);
  os << "lambda_ue,area_km2,alpha_uc,outage,r_qos,r_bw,bw_ratio_to_fb\n";
  for (double lambda_ue : {10.0, 100.0, 1000.0, 10000.0}) {
    UnicastConfig uc = cfg.unicast;
    uc.lambda_ue = lambda_ue;
    const double alpha = tune_unicast_alpha(env.radio, uc);
    const auto c = evaluate_unicast(uc, env, seeds);
    os << fmt_double(lambda_ue) << ',' << fmt_double(uc.area_km2) << ',' << fmt_double(alpha) << ','
       << fmt_double(unicast_outage(env.radio, uc, alpha)) << ',' << fmt_double(c[0]) << ',' << fmt_double(c[1])
       << ',' << fmt_double(fb_bw > 0.0 ? c[1] / fb_bw : 0.0) << '\n';
  }
}

}  // namespace

ComparisonResult run_compare(const ExperimentConfig& cfg, int jobs, const std::filesystem::path& out) {
  const Environment env = environment(cfg);
  const std::array<LearnerKind, 3> kinds{LearnerKind::fb, LearnerKind::a2c, LearnerKind::ppo};
  std::array<PolicyHead, 3> heads;
  std::array<std::string, 3> logs;
  std::exception_ptr failure;
  const int threads = std::max(1, jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < 3; ++i) {
    try {
      std::ostringstream csv;
      heads[i] = train_learner(kinds[i], cfg, &csv);
      logs[i] = csv.str();
    } catch (...) {
#pragma omp critical(fbcast_compare_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ComparisonResult res;
  res.fb = heads[0];
  res.a2c = heads[1];
  res.ppo = heads[2];
  const auto seeds = eval_seeds(cfg);

  // LFU gets the FB policy's average spectral efficiencies and harmonic index.
  std::vector<Trajectory> fb_trajs;
  for (std::uint64_t s : seeds) {
    HeadPolicy p(res.fb, true);
    fb_trajs.push_back(rollout(p, env.track(stream_seed(s, 1)), env.radio, stream_seed(s, 2)));
  }
  res.lfu = lfu_from_trajectories(fb_trajs);

  const std::size_t cap = cfg.radio.cache_cap_C;
  std::vector<NamedPolicy> policies{
      {"fb", greedy_head(res.fb)},
      {"a2c", greedy_head(res.a2c)},
      {"ppo", greedy_head(res.ppo)},
      {"lfu", [&res, cap] { return std::unique_ptr<ActionSource>(new LfuPolicy(res.lfu, cap)); }},
  };
  std::vector<PolicyCosts> costs;
  for (const auto& p : policies) costs.push_back({p.name, evaluate_policy(p.make, env, seeds)});
  res.unicast_alpha = tune_unicast_alpha(env.radio, cfg.unicast);
  res.unicast_outage = unicast_outage(env.radio, cfg.unicast, res.unicast_alpha);
  costs.push_back({"unicast", evaluate_unicast(cfg.unicast, env, seeds)});
  res.report = dominance_report(std::move(costs));

  if (!out.empty()) {
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string name = learner_name(kinds[i]);
      write_file(out / (name + "_episodes.csv"), logs[i]);
      record_output(out, name + "_episodes.csv");
      std::ofstream ck(out / (name + ".policy"), std::ios::binary);
      save_policy(ck, heads[i]);
      ck.close();
      record_output(out, name + ".policy");
    }
    {
      std::ofstream os(out / "costs.csv", std::ios::binary);
      write_cost_table(os, res.report);
    }
    record_output(out, "costs.csv");
    {
      std::ofstream os(out / "dominance.csv", std::ios::binary);
      write_dominance(os, res.report);
    }
    record_output(out, "dominance.csv");
    {
      std::ofstream os(out / "unicast_sweep.csv", std::ios::binary);
      write_unicast_sweep(os, cfg, env, seeds, res.report.policies[0].cost[1]);
    }
    record_output(out, "unicast_sweep.csv");
    {
      std::ofstream os(out / "lfu.csv", std::ios::binary);
      write_schema_line(os, "fbcast.lfu/1");
      os << "file,alpha_star,m_star\n";
      for (std::size_t i = 0; i < res.lfu.alpha_star.size(); ++i)
        os << i + 1 << ',' << fmt_double(res.lfu.alpha_star[i]) << ',' << res.lfu.m_star << '\n';
    }
    record_output(out, "lfu.csv");
  }
  return res;
}

}  // namespace fbcast
