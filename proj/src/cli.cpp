#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fbcast/csv.hpp"
#include "fbcast/error.hpp"
#include "fbcast/harness.hpp"

namespace fbcast {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> episodes;
  std::string preset = "paper";
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--out", o.out, "run directory (default: $FBCAST_OUT/<command>-<preset>-seed<seed>)");
  cmd->add_option("--episodes", o.episodes, "training episodes");
  cmd->add_option("--preset", o.preset, "starting configuration")->check(CLI::IsMember({"paper", "tiny"}));
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

struct Resolved {
  ExperimentConfig cfg;
  fs::path out;
  std::vector<std::pair<std::string, std::string>> inputs;
};

Resolved resolve(const std::string& command, const CommonOptions& o) {
  Resolved r;
  r.cfg = preset(o.preset);
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.inputs.emplace_back(fs::path(o.config_path).filename().string(), ss.str());
    r.cfg = parse_config(ss.str(), r.cfg);
  }
  if (o.seed) r.cfg.seed = *o.seed;
  if (o.episodes) r.cfg.learner.episodes = *o.episodes;
  r.cfg.resolve();
  if (!o.out.empty()) {
    r.out = o.out;
  } else {
    const char* root = std::getenv("FBCAST_OUT");
    r.out = fs::path(root && *root ? root : "runs") /
            (command + "-" + o.preset + "-seed" + std::to_string(r.cfg.seed));
  }
  if (o.jobs > 0) omp_set_num_threads(o.jobs);
  return r;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw fs::filesystem_error("cannot write", p, std::make_error_code(std::errc::io_error));
  return os;
}

int cmd_train(const CommonOptions& o, const std::string& learner) {
  const LearnerKind kind = parse_learner(learner);
  Resolved r = resolve("train", o);
  prepare_run_dir(r.out, r.cfg, r.inputs);
  PolicyHead head;
  {
    std::ofstream csv = open_out(r.out / "episodes.csv");
    head = train_learner(kind, r.cfg, &csv);
  }
  record_output(r.out, "episodes.csv");
  {
    std::ofstream ck = open_out(r.out / "policy.bin");
    save_policy(ck, head);
  }
  record_output(r.out, "policy.bin");
  std::cout << "trained " << learner_name(kind) << " for " << r.cfg.learner.episodes << " episodes -> "
            << r.out.string() << "\n";
  return kExitOk;
}

int cmd_eval(const CommonOptions& o, const std::string& checkpoint, bool sample) {
  Resolved r = resolve("eval", o);
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw fs::filesystem_error("cannot read", fs::path(checkpoint), std::make_error_code(std::errc::io_error));
  const PolicyHead head = load_policy(in);
  if (head.num_files != r.cfg.radio.num_files_N || head.cache_cap != r.cfg.radio.cache_cap_C)
    throw ConfigError("checkpoint was trained for N=" + std::to_string(head.num_files) + ", C=" +
                          std::to_string(head.cache_cap) + " but the configuration has num_files_N=" +
                          std::to_string(r.cfg.radio.num_files_N) + ", cache_cap_C=" +
                          std::to_string(r.cfg.radio.cache_cap_C),
                      0, "num_files_N,cache_cap_C");
  prepare_run_dir(r.out, r.cfg, r.inputs);
  const Environment env = environment(r.cfg);
  const auto seeds = eval_seeds(r.cfg);
  const std::string config_hash = git_blob_sha1(dump_config(r.cfg));

  std::ofstream costs = open_out(r.out / "costs.csv");
  write_schema_line(costs, "fbcast.eval_costs/1");
  costs << "episode,r_qos,r_bw,r_lat\n";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    HeadPolicy policy(head, !sample);
    Trajectory traj = rollout(policy, env.track(stream_seed(seeds[i], 1)), env.radio, stream_seed(seeds[i], 2));
    traj.config_hash = config_hash;
    const auto c = cumulative_costs(traj);
    costs << i + 1 << ',' << fmt_double(c[0]) << ',' << fmt_double(c[1]) << ',' << fmt_double(c[2]) << '\n';
    if (i == 0) {
      std::ofstream tr = open_out(r.out / "trajectory.csv");
      write_trajectory_csv(tr, traj);
    }
  }
  costs.close();
  record_output(r.out, "trajectory.csv");
  record_output(r.out, "costs.csv");
  std::cout << "evaluated " << seeds.size() << " episodes -> " << r.out.string() << "\n";
  return kExitOk;
}

int cmd_compare(const CommonOptions& o) {
  Resolved r = resolve("compare", o);
  prepare_run_dir(r.out, r.cfg, r.inputs);
  const int jobs = o.jobs > 0 ? o.jobs : omp_get_max_threads();
  const ComparisonResult res = run_compare(r.cfg, jobs, r.out);
  for (std::size_t i = 0; i < res.report.policies.size(); ++i) {
    const auto& p = res.report.policies[i];
    std::cout << p.name << " r_qos=" << p.cost[0] << " r_bw=" << p.cost[1] << " r_lat=" << p.cost[2]
              << (res.report.is_dominated(i) ? " dominated" : "") << "\n";
  }
  std::cout << "-> " << r.out.string() << "\n";
  return kExitOk;
}

int cmd_validate(const CommonOptions& o, std::optional<std::uint64_t> samples) {
  Resolved r = resolve("validate-outage", o);
  prepare_run_dir(r.out, r.cfg, r.inputs);
  const auto points = validate_outage(samples.value_or(r.cfg.mc_samples), r.cfg.seed);
  {
    std::ofstream os = open_out(r.out / "outage_validation.csv");
    write_outage_csv(os, points);
  }
  record_output(r.out, "outage_validation.csv");
  std::size_t failed = 0;
  for (const auto& p : points) failed += !p.pass();
  std::cout << points.size() - failed << "/" << points.size() << " grid points agree -> " << r.out.string() << "\n";
  if (failed) {
    std::cerr << "error: kind=check message=" << failed << " outage grid point(s) exceed 3 standard errors\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_selftest(const CommonOptions& o) {
  Resolved r = resolve("selftest", o);
  prepare_run_dir(r.out, r.cfg, r.inputs);
  const auto results = run_selftest(r.cfg);
  std::size_t failed = 0;
  {
    std::ofstream os = open_out(r.out / "selftest.csv");
    write_schema_line(os, "fbcast.selftest/1");
    os << "suite,passed,detail\n";
    for (const auto& t : results) {
      os << t.name << ',' << (t.passed ? 1 : 0) << ',' << t.detail << '\n';
      std::cout << (t.passed ? "ok   " : "FAIL ") << t.name << (t.passed ? "" : ": " + t.detail) << "\n";
      failed += !t.passed;
    }
  }
  record_output(r.out, "selftest.csv");
  if (failed) {
    std::cerr << "error: kind=check message=" << failed << " selftest suite(s) failed\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"fbcast: cache-aided multicast streaming simulator and learners"};
  app.require_subcommand(1);

  CommonOptions train_o, eval_o, compare_o, validate_o, selftest_o;
  std::string learner = "fb", checkpoint;
  bool sample = false;
  std::optional<std::uint64_t> samples;

  auto* train = app.add_subcommand("train", "train FB-MOAC or a forward-only baseline");
  add_common(train, train_o);
  train->add_option("--learner", learner, "fb, a2c or ppo")->check(CLI::IsMember({"fb", "a2c", "ppo"}));

  auto* eval = app.add_subcommand("eval", "roll out a saved policy on the evaluation seeds");
  add_common(eval, eval_o);
  eval->add_option("--checkpoint", checkpoint, "policy file written by train")->required()->check(CLI::ExistingFile);
  eval->add_flag("--sample", sample, "sample actions instead of acting greedily");

  auto* compare = app.add_subcommand("compare", "train all learners and tabulate Pareto dominance");
  add_common(compare, compare_o);

  auto* validate = app.add_subcommand("validate-outage", "closed-form outage against Monte Carlo");
  add_common(validate, validate_o);
  validate->add_option("--samples", samples, "Monte-Carlo samples per grid point");

  auto* selftest = app.add_subcommand("selftest", "run the built-in invariant suites");
  add_common(selftest, selftest_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: kind=usage message=" << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_o, learner);
    if (*eval) return cmd_eval(eval_o, checkpoint, sample);
    if (*compare) return cmd_compare(compare_o);
    if (*validate) return cmd_validate(validate_o, samples);
    if (*selftest) return cmd_selftest(selftest_o);
  } catch (const ConfigError& e) {
    std::cerr << "error: kind=config";
    if (e.line()) std::cerr << " line=" << e.line();
    if (!e.field().empty()) std::cerr << " field=" << e.field();
    std::cerr << " message=" << one_line(e.what()) << "\n";
    return kExitConfig;
  } catch (const EnvironmentError& e) {
    std::cerr << "error: kind=environment slot=" << e.slot() << " message=" << one_line(e.what()) << "\n";
    return kExitDomain;
  } catch (const DomainError& e) {
    std::cerr << "error: kind=domain message=" << one_line(e.what()) << "\n";
    return kExitDomain;
  } catch (const UnsupportedModelError& e) {
    std::cerr << "error: kind=unsupported message=" << one_line(e.what()) << "\n";
    return kExitDomain;
  } catch (const NumericalError& e) {
    std::cerr << "error: kind=numerical message=" << one_line(e.what()) << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: kind=io message=" << one_line(e.what()) << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=runtime message=" << one_line(e.what()) << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace fbcast
