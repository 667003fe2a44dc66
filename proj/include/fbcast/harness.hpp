#pragma once

// Experiment configuration, run directories and the end-to-end drivers behind
// the `fbcast` command line.
//
// Configuration files are flat `key = value` text. Blank lines and text after
// `#` are ignored; list values are comma separated. Every key is optional and
// unknown keys are rejected. Radio parameters are given in the units engineers
// quote them in (dBm, dBi, dB) and converted to linear scale once, in
// ExperimentConfig::resolve().

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fbcast/baselines.hpp"
#include "fbcast/dynamics.hpp"
#include "fbcast/fbmoac.hpp"
#include "fbcast/netmodel.hpp"

namespace fbcast {

struct LinkBudget {
  double p_tx_dbm = 23.0;
  double antenna_gain_dbi = 8.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  double path_loss_ref_db = 128.1;  // at 1 km
  double carrier_ghz = 2.0;         // recorded only; the path-loss reference already folds it in
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  LinkBudget link;
  RadioConfig radio;  // linear fields are derived from `link` by resolve()
  PopularityParams popularity;
  LearnerConfig learner;
  PpoConfig ppo;
  UnicastConfig unicast{1000.0, 10.0, 0.0, 0.01};
  std::size_t eval_episodes = 32;
  std::uint64_t mc_samples = 100000;

  // Recomputes the linear radio fields from the link budget, copies the
  // global seed into the learner and checks every invariant. Throws
  // ConfigError naming the field(s) at fault.
  void resolve();
};

// Named starting points; a config file is applied on top of one.
//   paper: N=200, C=10, T=256, hidden 100, 2000 episodes
//   tiny : N=20,  C=10, T=32,  hidden 64,  2000 episodes
ExperimentConfig preset(const std::string& name);

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = preset("paper"));
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = preset("paper"));

// Every key, one per line, in a form parse_config reads back to an identical
// configuration.
std::string dump_config(const ExperimentConfig& cfg);

// Names accepted by parse_config, in dump order.
const std::vector<std::string>& config_keys();

// SHA-1 of `content` framed the way git frames a blob object.
std::string git_blob_sha1(const std::string& content);

// Creates `dir` and writes config.resolved, seed and manifest.txt. `inputs`
// are (name, content) pairs hashed into the manifest next to the resolved
// configuration.
void prepare_run_dir(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                     const std::vector<std::pair<std::string, std::string>>& inputs = {});

// Appends `file` with its blob hash to dir/manifest.txt.
void record_output(const std::filesystem::path& dir, const std::string& file);

Environment environment(const ExperimentConfig& cfg);

// Evaluation seeds derived from the global seed, one per evaluation episode.
std::vector<std::uint64_t> eval_seeds(const ExperimentConfig& cfg);

enum class LearnerKind { fb, a2c, ppo };
LearnerKind parse_learner(const std::string& name);
std::string learner_name(LearnerKind kind);

// Trains one learner, streaming episode rows to `csv` when given.
PolicyHead train_learner(LearnerKind kind, const ExperimentConfig& cfg, std::ostream* csv = nullptr);

// --- outage validation -----------------------------------------------------------

struct OutagePoint {
  double lambda_bs = 0.0;
  double p_cach = 0.0;
  double alpha = 0.0;
  double analytic = 0.0;
  McEstimate mc;
  double z_score() const;
  bool pass() const { return z_score() < 3.0; }
};

// The analytic-vs-Monte-Carlo grid: p_cach in {0.05, 0.2, 0.8}, alpha in
// {0.5, 2}, lambda_bs in {50, 100}, a single broadcast file without harmonic
// broadcasting. The link budget is rescaled so the reference SNR factor is
// 1e-4; at the paper's budget every grid point would sit at zero outage and
// the check would be vacuous.
std::vector<OutagePoint> validate_outage(std::uint64_t samples, std::uint64_t seed);

inline constexpr const char* kOutageSchema = "fbcast.outage_validation/1";
void write_outage_csv(std::ostream& os, const std::vector<OutagePoint>& points);

// --- comparison -------------------------------------------------------------------

struct ComparisonResult {
  DominanceReport report;  // fb, a2c, ppo, lfu, unicast in that order
  LfuState lfu;
  double unicast_alpha = 0.0;
  double unicast_outage = 0.0;
  PolicyHead fb, a2c, ppo;
};

// Trains the three learners (up to `jobs` at a time), derives LFU from the
// FB policy and evaluates everything greedily on the evaluation seeds. When
// `out` is non-empty, episode CSVs, checkpoints and the comparison tables
// are written there.
ComparisonResult run_compare(const ExperimentConfig& cfg, int jobs, const std::filesystem::path& out = {});

inline constexpr const char* kCostSchema = "fbcast.costs/1";
inline constexpr const char* kDominanceSchema = "fbcast.dominance/1";
inline constexpr const char* kUnicastSweepSchema = "fbcast.unicast_sweep/1";

// --- self test ---------------------------------------------------------------------

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SelftestResult> run_selftest(const ExperimentConfig& cfg);

// --- command line -------------------------------------------------------------------

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitDomain = 4,
  kExitNumerical = 5,
  kExitCheckFailed = 6,
  kExitIo = 7,
};

int run_cli(int argc, char** argv);

}  // namespace fbcast
