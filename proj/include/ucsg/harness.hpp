#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ucsg/diagnostics.hpp"
#include "ucsg/envgen.hpp"
#include "ucsg/model_io.hpp"
#include "ucsg/ucsg.hpp"

namespace ucsg {
namespace harness {

// ---------------------------------------------------------------------------
// Logging.  Controlled by the UCSG_LOG environment variable: "info" for
// per-run progress, "debug" to add per-phase detail.  Unset means quiet.

enum class LogLevel { none = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* e = std::getenv("UCSG_LOG");
    if (e == nullptr) return LogLevel::none;
    const std::string v(e);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    std::cerr << "[ucsg] unknown UCSG_LOG value '" << v
              << "', treating as info\n";
    return LogLevel::info;
  }();
  return lvl;
}

inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

inline void log_at(LogLevel at, const std::string& msg) {
  if (log_level() >= at) {
    std::lock_guard<std::mutex> lock(log_mutex());
    std::cerr << "[ucsg] " << msg << "\n";
  }
}

inline void log_info(const std::string& msg) { log_at(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_at(LogLevel::debug, msg); }

// ---------------------------------------------------------------------------
// CSV plumbing.  Header row, RFC-style quoting, floats at 17 significant
// digits so every value round-trips exactly.

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_num(double x) { return detail::fmt17(x); }

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ParseError("cannot open for writing: " + path);
    path_ = path;
  }

  void row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw ParseError("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Opponent specs.  A JSON string covers the common cases:
//
//   "uniform"                uniform stationary policy
//   "best_response"          exact best response, refreshed each phase
//   "best_response:500"      ... refreshed at least every 500 steps
//   "random:123"             fresh random distribution each step, seed 123
//
// and a JSON object covers the rest:
//
//   {"kind": "stationary", "policy": "uniform" | [[...], ...]}
//   {"kind": "best_response", "period": 500}
//   {"kind": "switching", "cuts": [1000], "policies": [POLICY, POLICY]}
//   {"kind": "random_seeded", "seed": 123}

inline StationaryPolicy parse_policy(const nlohmann::json& j, int S, int A2) {
  if (j.is_string() && j.get<std::string>() == "uniform")
    return StationaryPolicy::uniform(Player::two, S, A2);
  if (!j.is_array())
    throw ParseError("policy must be \"uniform\" or an S x A2 matrix");
  if (static_cast<int>(j.size()) != S)
    throw ParseError("policy matrix needs one row per state");
  StationaryPolicy pi(Player::two, S, A2);
  for (int s = 0; s < S; ++s) {
    const nlohmann::json& row = j.at(s);
    if (!row.is_array() || static_cast<int>(row.size()) != A2)
      throw ParseError("policy row " + std::to_string(s) +
                       " needs one weight per action");
    for (int a = 0; a < A2; ++a)
      pi.prob[static_cast<size_t>(s) * A2 + a] = row.at(a).get<double>();
  }
  pi.validate(1e-9);
  return pi;
}

inline Opponent parse_opponent(const nlohmann::json& j, int S, int A2) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "uniform" || s == "stationary:uniform")
      return Opponent::stationary(StationaryPolicy::uniform(Player::two, S, A2));
    if (s == "best_response") return Opponent::best_response();
    if (s.rfind("best_response:", 0) == 0)
      return Opponent::best_response(std::stoll(s.substr(14)));
    if (s.rfind("random:", 0) == 0)
      return Opponent::random_seeded(std::stoull(s.substr(7)));
    throw ParseError("unknown opponent spec string: " + s);
  }
  if (!j.is_object()) throw ParseError("opponent spec must be string or object");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "stationary") return Opponent::stationary(parse_policy(j.at("policy"), S, A2));
  if (kind == "best_response")
    return Opponent::best_response(j.value("period", int64_t{0}));
  if (kind == "random_seeded")
    return Opponent::random_seeded(j.at("seed").get<uint64_t>());
  if (kind == "switching") {
    std::vector<int64_t> cuts = j.at("cuts").get<std::vector<int64_t>>();
    std::vector<StationaryPolicy> pis;
    for (const nlohmann::json& p : j.at("policies"))
      pis.push_back(parse_policy(p, S, A2));
    return Opponent::switching(std::move(pis), std::move(cuts));
  }
  throw ParseError("unknown opponent kind: " + kind);
}

// ---------------------------------------------------------------------------
// Experiment configuration (JSON).

struct ExperimentConfig {
  std::string model_file;        // exactly one of these two is set
  std::optional<GenSpec> gen;
  RunConfig run;                 // run.seed is ignored; seeds below drive runs
  std::vector<uint64_t> seeds;
  std::string out_dir = "out";
  nlohmann::json opponent = "uniform";  // parsed once the model shape is known
};

inline Family parse_family(const std::string& name) {
  if (name == "ergodic_random") return Family::ergodic_random;
  if (name == "garnet") return Family::garnet;
  if (name == "turn_based") return Family::turn_based;
  if (name == "river_swim_2p") return Family::river_swim_2p;
  throw ParseError("unknown family: " + name);
}

inline GenSpec parse_gen_spec(const nlohmann::json& j) {
  GenSpec spec;
  spec.family = parse_family(j.at("family").get<std::string>());
  spec.S = j.value("S", spec.S);
  spec.A1 = j.value("A1", spec.A1);
  spec.A2 = j.value("A2", spec.A2);
  spec.eps_mix = j.value("eps_mix", spec.eps_mix);
  spec.branching = j.value("branching", spec.branching);
  spec.seed = j.value("seed", spec.seed);
  spec.exact_diameters = j.value("exact_diameters", spec.exact_diameters);
  spec.enum_budget = j.value("enum_budget", spec.enum_budget);
  return spec;
}

inline RunMode parse_mode(const std::string& name) {
  if (name == "online") return RunMode::online;
  if (name == "offline") return RunMode::offline;
  throw ParseError("mode must be online or offline, got: " + name);
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  const nlohmann::json& model = j.at("model");
  const bool has_file = model.contains("file");
  const bool has_gen = model.contains("generate");
  if (has_file == has_gen)
    throw ParseError("model needs exactly one of \"file\" or \"generate\"");
  if (has_file)
    cfg.model_file = model.at("file").get<std::string>();
  else
    cfg.gen = parse_gen_spec(model.at("generate"));

  const nlohmann::json& run = j.at("run");
  cfg.run.T = run.at("T").get<int64_t>();
  cfg.run.delta = run.value("delta", cfg.run.delta);
  if (run.contains("mode")) cfg.run.mode = parse_mode(run.at("mode"));
  cfg.run.initial_state = run.value("initial_state", cfg.run.initial_state);
  cfg.run.exact_gaps = run.value("exact_gaps", cfg.run.exact_gaps);
  cfg.run.log_pi2 = run.value("log_pi2", cfg.run.log_pi2);
  cfg.run.rho_star_gamma = run.value("rho_star_gamma", cfg.run.rho_star_gamma);
  cfg.run.vi.max_iters = run.value("vi_max_iters", cfg.run.vi.max_iters);
  cfg.run.response_enum_budget =
      run.value("response_enum_budget", cfg.run.response_enum_budget);

  if (j.contains("epsilons")) {
    cfg.run.epsilons = j.at("epsilons").get<std::vector<double>>();
    for (double e : cfg.run.epsilons)
      if (!(e > 0.0 && e < 1.0))
        throw ParseError("epsilons must lie in (0,1)");
  }
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    if (cfg.seeds.empty()) throw ParseError("seed list must be nonempty");
  } else {
    cfg.seeds = {1};
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  if (j.contains("opponent")) cfg.opponent = j.at("opponent");
  return cfg;
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

inline SGModel build_model(const ExperimentConfig& cfg) {
  if (!cfg.model_file.empty()) {
    log_info("loading model from " + cfg.model_file);
    return load_model(cfg.model_file);
  }
  GeneratedGame g = generate(*cfg.gen);
  log_info("generated model: S=" + std::to_string(g.model.S) +
           " A1=" + std::to_string(g.model.A1) +
           " A2=" + std::to_string(g.model.A2) +
           " diameter1=" + csv_num(g.diameter1) +
           " diameter2=" + csv_num(g.diameter2) +
           (g.exact ? " (enumerated)" : " (analytic bound)"));
  return std::move(g.model);
}

// ---------------------------------------------------------------------------
// Report serialization.  One trio of files per seed:
//
//   steps_seed<k>.csv    t,s,a1,a2,r,phase,cum_regret
//   phases_seed<k>.csv   k,t_start,length,gamma,optimistic_rho,contained,
//                        exact_gap[,pessimistic_rho,u],pi1_s*_a*[,pi2_s*_a*]
//   summary_seed<k>.csv  key,value rows
//
// plus a cross-seed batch.csv.  All schemas are version 1 (the summary
// carries a schema_version row).

inline void write_steps_csv(const std::string& path, const RunReport& rep) {
  CsvWriter w(path);
  w.row({"t", "s", "a1", "a2", "r", "phase", "cum_regret"});
  double cum_reward = 0.0;
  for (const StepRecord& st : rep.steps) {
    cum_reward += st.r;
    const double reg = static_cast<double>(st.t) * rep.rho_star - cum_reward;
    w.row({std::to_string(st.t), std::to_string(st.s), std::to_string(st.a1),
           std::to_string(st.a2), csv_num(st.r), std::to_string(st.phase),
           csv_num(reg)});
  }
  w.close();
}

inline void write_phases_csv(const std::string& path, const RunReport& rep,
                             int S, int A1, int A2) {
  const bool offline = rep.mode == RunMode::offline;
  CsvWriter w(path);
  std::vector<std::string> head = {"k",         "t_start",   "length",
                                   "gamma",     "optimistic_rho",
                                   "contained", "exact_gap"};
  if (offline) {
    head.push_back("pessimistic_rho");
    head.push_back("u");
  }
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A1; ++a)
      head.push_back("pi1_s" + std::to_string(s) + "_a" + std::to_string(a));
  if (offline)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A2; ++a)
        head.push_back("pi2_s" + std::to_string(s) + "_a" + std::to_string(a));
  w.row(head);

  for (const PhaseRecord& ph : rep.phases) {
    std::vector<std::string> row = {
        std::to_string(ph.k),          std::to_string(ph.t_start),
        std::to_string(ph.length),     csv_num(ph.gamma),
        csv_num(ph.optimistic_rho),    ph.contained ? "1" : "0",
        csv_num(ph.exact_gap)};
    if (offline) {
      row.push_back(csv_num(ph.pessimistic_rho));
      row.push_back(csv_num(ph.u));
    }
    for (double p : ph.pi1.prob) row.push_back(csv_num(p));
    if (offline)
      for (double p : ph.pi2.prob) row.push_back(csv_num(p));
    w.row(row);
  }
  w.close();
}

inline void write_summary_csv(const std::string& path, const RunReport& rep) {
  CsvWriter w(path);
  w.row({"key", "value"});
  w.row({"schema_version", "1"});
  w.row({"mode", rep.mode == RunMode::offline ? "offline" : "online"});
  w.row({"T", std::to_string(rep.T)});
  w.row({"seed", std::to_string(rep.seed)});
  w.row({"initial_state", std::to_string(rep.initial_state)});
  w.row({"rho_star", csv_num(rep.rho_star)});
  w.row({"rho_star_lo", csv_num(rep.rho_star_lo)});
  w.row({"rho_star_hi", csv_num(rep.rho_star_hi)});
  w.row({"total_reward", csv_num(rep.total_reward)});
  w.row({"regret", csv_num(rep.regret)});
  w.row({"num_phases", std::to_string(rep.phases.size())});
  w.row({"aborted", rep.aborted ? "1" : "0"});
  w.row({"abort_reason", rep.abort_reason});
  for (const auto& [eps, steps] : rep.l_eps)
    w.row({"l_eps[" + csv_num(eps) + "]", std::to_string(steps)});
  if (rep.mode == RunMode::offline) {
    w.row({"min_u", csv_num(rep.min_u)});
    w.row({"argmin_u_phase", std::to_string(rep.argmin_u_phase)});
    const StationaryPolicy& bp = rep.best_policy;
    for (int s = 0; s < bp.S; ++s)
      for (int a = 0; a < bp.A; ++a)
        w.row({"best_pi1_s" + std::to_string(s) + "_a" + std::to_string(a),
               csv_num(bp.prob[static_cast<size_t>(s) * bp.A + a])});
  }
  w.close();
}

inline void write_batch_csv(const std::string& path,
                            const std::vector<RunReport>& reps) {
  CsvWriter w(path);
  const bool offline = !reps.empty() && reps[0].mode == RunMode::offline;
  std::vector<std::string> head = {"seed", "total_reward", "regret",
                                   "num_phases", "aborted"};
  if (offline) head.push_back("min_u");
  w.row(head);
  for (const RunReport& rep : reps) {
    std::vector<std::string> row = {
        std::to_string(rep.seed), csv_num(rep.total_reward),
        csv_num(rep.regret), std::to_string(rep.phases.size()),
        rep.aborted ? "1" : "0"};
    if (offline) row.push_back(csv_num(rep.min_u));
    w.row(row);
  }
  w.close();
}

// ---------------------------------------------------------------------------
// Subcommands.  Each returns a process exit code and reports errors on
// stderr rather than throwing across the CLI boundary.

inline int cmd_run(const std::string& config_path,
                   const std::string& out_override,
                   std::optional<uint64_t> seed_override,
                   const std::string& mode_override) {
  try {
    ExperimentConfig cfg = parse_experiment_config(load_json(config_path));
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_override) cfg.seeds = {*seed_override};
    if (!mode_override.empty()) cfg.run.mode = parse_mode(mode_override);

    SGModel model = build_model(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    const size_t n = cfg.seeds.size();
    std::vector<RunReport> reports(n);
    std::vector<std::exception_ptr> errors(n);
    auto one_seed = [&](size_t i) {
      try {
        RunConfig rc = cfg.run;
        rc.seed = cfg.seeds[i];
        RunReport rep;
        if (rc.mode == RunMode::online) {
          Opponent opp = parse_opponent(cfg.opponent, model.S, model.A2);
          rep = run_online(model, opp, rc);
        } else {
          rep = run_offline(model, rc);
        }
        const std::string tag = "_seed" + std::to_string(rc.seed) + ".csv";
        write_steps_csv(cfg.out_dir + "/steps" + tag, rep);
        write_phases_csv(cfg.out_dir + "/phases" + tag, rep, model.S,
                         model.A1, model.A2);
        write_summary_csv(cfg.out_dir + "/summary" + tag, rep);
        log_info("seed " + std::to_string(rc.seed) + ": " +
                 (rep.aborted ? "ABORTED (" + rep.abort_reason + ")"
                              : "regret=" + csv_num(rep.regret) + " phases=" +
                                    std::to_string(rep.phases.size())));
        reports[i] = std::move(rep);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };

    // Seeds are independent; run them in bounded waves of threads.
    const size_t width = std::max(1u, std::thread::hardware_concurrency());
    for (size_t base = 0; base < n; base += width) {
      std::vector<std::thread> pool;
      for (size_t i = base; i < std::min(n, base + width); ++i)
        pool.emplace_back(one_seed, i);
      for (std::thread& th : pool) th.join();
    }
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);

    write_batch_csv(cfg.out_dir + "/batch.csv", reports);
    bool any_aborted = false;
    for (const RunReport& rep : reports) any_aborted |= rep.aborted;
    if (any_aborted) {
      std::cerr << "ucsg run: some seeds aborted; partial logs written to "
                << cfg.out_dir << "\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ucsg run: " << e.what() << "\n";
    return 1;
  }
}

struct DiagnoseConfig {
  int mfpt_count = 100;
  int stationary_count = 100;
  int wrapped_count = 100;
  int span_count = 100;
  int max_states = 6;
  double scale = 0.05;
  int64_t wrapped_max_length = 400;
  uint64_t seed = 1;
  bool force_scale = false;
  std::string out_dir;  // per-case CSVs land here when nonempty
};

inline DiagnoseConfig parse_diagnose_config(const nlohmann::json& j) {
  DiagnoseConfig cfg;
  cfg.mfpt_count = j.value("mfpt_count", cfg.mfpt_count);
  cfg.stationary_count = j.value("stationary_count", cfg.stationary_count);
  cfg.wrapped_count = j.value("wrapped_count", cfg.wrapped_count);
  cfg.span_count = j.value("span_count", cfg.span_count);
  cfg.max_states = j.value("max_states", cfg.max_states);
  cfg.scale = j.value("scale", cfg.scale);
  cfg.wrapped_max_length = j.value("wrapped_max_length", cfg.wrapped_max_length);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.force_scale = j.value("force_scale", cfg.force_scale);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

inline int cmd_diagnose(const std::string& config_path) {
  try {
    DiagnoseConfig cfg = parse_diagnose_config(load_json(config_path));
    const bool dump = !cfg.out_dir.empty();
    if (dump) std::filesystem::create_directories(cfg.out_dir);

    int fatal = 0;
    // The table goes to stdout and, when an output directory is given,
    // to a file as well; buffer the rows and emit at the end.
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"suite", "count", "failures", "status"});

    auto add = [&](const std::string& suite, int count, int failures,
                   bool informational) {
      std::string status = failures == 0 ? "pass" : "FAIL";
      if (informational) status = "info";
      if (!informational) fatal += failures;
      rows.push_back({suite, std::to_string(count), std::to_string(failures),
                      status});
    };

    if (cfg.mfpt_count > 0) {
      auto reps = mfpt_perturbation_suite(cfg.mfpt_count, cfg.max_states,
                                          cfg.scale, cfg.seed, cfg.force_scale);
      int failures = 0;
      for (const PerturbationReport& r : reps)
        failures += r.in_hypothesis && !r.bound_holds;
      add("mfpt_perturbation", cfg.mfpt_count, failures, cfg.force_scale);
      if (dump) {
        CsvWriter w(cfg.out_dir + "/mfpt_perturbation.csv");
        w.row({"S", "D_before", "E_norm", "D_after", "in_hypothesis",
               "bound_holds"});
        for (const PerturbationReport& r : reps)
          w.row({std::to_string(r.S), csv_num(r.D_before), csv_num(r.E_norm),
                 csv_num(r.D_after), r.in_hypothesis ? "1" : "0",
                 r.bound_holds ? "1" : "0"});
        w.close();
      }
    } else {
      add("mfpt_perturbation", 0, 0, cfg.force_scale);
    }

    if (cfg.stationary_count > 0) {
      auto checks = stationary_perturbation_suite(
          cfg.stationary_count, cfg.max_states, cfg.scale, cfg.seed);
      int failures = 0;
      for (const StationaryCheck& c : checks)
        failures += !c.bound_holds || !c.perturbed_irreducible;
      add("stationary_perturbation", cfg.stationary_count, failures, false);
      if (dump) {
        CsvWriter w(cfg.out_dir + "/stationary_perturbation.csv");
        w.row({"S", "E_norm", "irr_threshold", "perturbed_irreducible",
               "bound_holds"});
        for (const StationaryCheck& c : checks)
          w.row({std::to_string(c.S), csv_num(c.E_norm),
                 csv_num(c.irr_threshold), c.perturbed_irreducible ? "1" : "0",
                 c.bound_holds ? "1" : "0"});
        w.close();
      }
    } else {
      add("stationary_perturbation", 0, 0, false);
    }

    if (cfg.wrapped_count > 0) {
      auto rows_w = wrapped_chain_suite(cfg.wrapped_count, cfg.max_states,
                                        cfg.wrapped_max_length, cfg.seed);
      int failures = 0;
      for (const WrappedSuiteRow& r : rows_w) failures += r.residual > 1e-10;
      add("wrapped_chain", cfg.wrapped_count, failures, false);
      if (dump) {
        CsvWriter w(cfg.out_dir + "/wrapped_chain.csv");
        w.row({"S", "length", "residual"});
        for (const WrappedSuiteRow& r : rows_w)
          w.row({std::to_string(r.S), std::to_string(r.length),
                 csv_num(r.residual)});
        w.close();
      }
    } else {
      add("wrapped_chain", 0, 0, false);
    }

    if (cfg.span_count > 0) {
      auto checks = span_bound_suite(cfg.span_count, cfg.max_states, cfg.seed);
      int failures = 0;
      for (const SpanCheck& c : checks) failures += !c.holds;
      add("span_bound", cfg.span_count, failures, false);
      if (dump) {
        CsvWriter w(cfg.out_dir + "/span_bound.csv");
        w.row({"span_h", "max_mfpt", "holds"});
        for (const SpanCheck& c : checks)
          w.row({csv_num(c.span_h), csv_num(c.max_mfpt), c.holds ? "1" : "0"});
        w.close();
      }
    } else {
      add("span_bound", 0, 0, false);
    }

    for (const auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i)
        std::cout << (i ? "," : "") << csv_field(r[i]);
      std::cout << "\n";
    }
    if (dump) {
      CsvWriter table(cfg.out_dir + "/diagnose.csv");
      for (const auto& r : rows) table.row(r);
      table.close();
    }
    return fatal > 0 ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "ucsg diagnose: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_gen(const std::string& spec_path, const std::string& out_path) {
  try {
    GenSpec spec = parse_gen_spec(load_json(spec_path));
    GeneratedGame g = generate(spec);
    save_model(g.model, out_path);
    std::cout << "S,A1,A2,diameter1,diameter2,exact,analytic_bound\n"
              << g.model.S << ',' << g.model.A1 << ',' << g.model.A2 << ','
              << csv_num(g.diameter1) << ',' << csv_num(g.diameter2) << ','
              << (g.exact ? 1 : 0) << ',' << csv_num(g.analytic_bound) << "\n";
    log_info("wrote model to " + out_path);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ucsg gen: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace harness
}  // namespace ucsg
