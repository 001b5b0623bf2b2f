// qpk: query-pack toolkit. Subcommands: generate-bongard, run, mine, bench.
// Exit codes: 0 success, 2 parse/config error, 3 evaluation error.

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qp/bongard.hpp"
#include "qp/costmodel.hpp"
#include "qp/database.hpp"
#include "qp/engine.hpp"
#include "qp/errors.hpp"
#include "qp/miner.hpp"
#include "qp/pack.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitEval = 3;

struct FileError : qp::Error {
  using qp::Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qp::Error("cannot write file: " + path);
  out << data;
}

double wall_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

int cmd_generate_bongard(const std::string& out_path, int n, const std::string& complexity,
                         uint64_t seed) {
  auto parsed = qp::bongard_complexity_from_string(complexity);
  if (!parsed) {
    std::cerr << "unknown complexity '" << complexity << "' (simple|medium|none)\n";
    return kExitConfig;
  }
  if (n < 1) {
    std::cerr << "--n must be >= 1\n";
    return kExitConfig;
  }
  qp::BongardConfig config{n, *parsed, seed};
  qp::Database db = qp::generate_bongard(config);
  write_file(out_path, qp::serialize_program(db));
  std::cout << "wrote " << n << " examples to " << out_path << "\n";
  return 0;
}

int cmd_run(const std::string& db_path, const std::string& pack_path,
            const std::string& strategy_name, const std::string& out_prefix) {
  auto strategy = qp::strategy_from_string(strategy_name);
  if (!strategy) {
    std::cerr << "unknown strategy '" << strategy_name << "' (separate|disjoint|packed)\n";
    return kExitConfig;
  }
  qp::Database db = qp::load_program(read_file(db_path));
  qp::QueryPack pack = qp::parse_pack(read_file(pack_path));
  qp::label_pack(pack);
  std::vector<std::string> violations = qp::validate_pack(pack);
  if (!violations.empty()) {
    for (const std::string& v : violations) std::cerr << "pack warning: " << v << "\n";
  }

  qp::EvalResult result = qp::evaluate_pack_on_examples(pack, db, *strategy);

  {
    std::ofstream csv(out_prefix + ".csv", std::ios::binary);
    if (!csv) throw qp::Error("cannot write file: " + out_prefix + ".csv");
    result.results.write_csv(csv, db);
  }
  {
    std::ofstream bits(out_prefix + ".bits", std::ios::binary);
    if (!bits) throw qp::Error("cannot write file: " + out_prefix + ".bits");
    result.results.write_bitmap(bits);
  }
  write_file(out_prefix + ".counters.json", qp::work_report(result.counters).dump(2) + "\n");

  std::cout << "queries: " << pack.query_count << ", examples: " << db.examples().examples.size()
            << ", work units: " << result.counters.work_units() << "\n";
  return 0;
}

int cmd_mine(const std::string& db_path, const std::string& bias_path, int minfreq, int maxlevel,
             const std::string& out_prefix) {
  if (minfreq < 1) {
    std::cerr << "--minfreq must be >= 1\n";
    return kExitConfig;
  }
  qp::Database db = qp::load_program(read_file(db_path));
  qp::LanguageBias bias = qp::parse_bias(read_file(bias_path));
  const std::vector<qp::Term>& key_vars = db.examples().key_vars;

  qp::WarmrResult result;
  if (maxlevel >= 1) result = qp::warmr_levelwise(bias, db, key_vars, minfreq, maxlevel);

  write_file(out_prefix + ".tsv", qp::warmr_to_tsv(result, key_vars));
  write_file(out_prefix + ".summary.json", qp::warmr_summary_json(result).dump(2) + "\n");
  std::cout << "frequent queries: " << result.frequent.size() << "\n";
  return 0;
}

struct BenchCell {
  int lookahead = 0;
  qp::QueryPack pack;
};

int cmd_bench(const std::string& config_path) {
  nlohmann::json config = nlohmann::json::parse(read_file(config_path));
  std::string db_path = config.at("db").get<std::string>();
  int repetitions = config.value("repetitions", 1);
  if (repetitions < 1) throw qp::Error("repetitions must be >= 1");
  std::string out_path = config.value("out", std::string("bench_report.json"));
  uint64_t seed = config.value("seed", uint64_t{0});

  // Baseline first, treatment last; exec speedup = first work / last work.
  std::vector<std::string> strategy_names =
      config.value("strategies", std::vector<std::string>{"disjoint", "packed"});
  std::vector<qp::Strategy> strategies;
  for (const std::string& name : strategy_names) {
    auto s = qp::strategy_from_string(name);
    if (!s) throw qp::Error("unknown strategy in config: " + name);
    strategies.push_back(*s);
  }
  if (strategies.size() < 2) throw qp::Error("config must list at least two strategies");

  qp::Database db = qp::load_program(read_file(db_path));

  // Cells: either an explicit pack, or brooms built from a stick + bias over
  // the requested lookahead settings.
  std::vector<BenchCell> cells;
  if (config.contains("pack")) {
    BenchCell cell;
    cell.pack = qp::parse_pack(read_file(config.at("pack").get<std::string>()));
    qp::label_pack(cell.pack);
    cells.push_back(std::move(cell));
  } else {
    qp::LanguageBias bias = qp::parse_bias(read_file(config.at("bias").get<std::string>()));
    std::vector<std::pair<std::string, int32_t>> seeded;
    for (const qp::Term& k : db.examples().key_vars)
      seeded.emplace_back(qp::to_string(k), k.var_id());
    qp::Conjunction stick;
    if (config.contains("stick") && !config.at("stick").get<std::string>().empty())
      stick = qp::parse_conjunction(config.at("stick").get<std::string>(), seeded);
    std::vector<int> lookaheads = config.value("lookaheads", std::vector<int>{0, 1, 2});
    for (int la : lookaheads) {
      BenchCell cell;
      cell.lookahead = la;
      cell.pack = qp::build_broom(stick, bias, la, db.examples().key_vars);
      cells.push_back(std::move(cell));
    }
  }

  nlohmann::json report;
  report["db"] = db_path;
  report["seed"] = seed;
  report["strategies"] = strategy_names;
  report["cells"] = nlohmann::json::array();

  std::cout << std::left << std::setw(4) << "la" << std::setw(8) << "queries" << std::setw(5)
            << "bf" << std::setw(7) << "depth" << std::setw(14) << strategy_names.front()
            << std::setw(14) << strategy_names.back() << std::setw(10) << "speedup"
            << std::setw(8) << "bounds" << "wall_ms\n";

  for (BenchCell& cell : cells) {
    std::vector<qp::EvalResult> results(strategies.size());
    std::vector<double> best_ms(strategies.size(), 0.0);
    for (int rep = 0; rep < repetitions; ++rep) {
      for (size_t s = 0; s < strategies.size(); ++s) {
        auto t0 = std::chrono::steady_clock::now();
        results[s] = qp::evaluate_pack_on_examples(cell.pack, db, strategies[s]);
        double ms = wall_ms(t0);
        if (rep == 0 || ms < best_ms[s]) best_ms[s] = ms;
      }
    }
    for (size_t s = 1; s < strategies.size(); ++s)
      if (!(results[s].results == results[0].results))
        throw qp::Error("strategy results disagree (this is a bug)");

    double work_base = static_cast<double>(results.front().counters.work_units());
    double work_last = static_cast<double>(results.back().counters.work_units());
    double speedup = work_last > 0 ? work_base / work_last : 1.0;

    nlohmann::json cell_json;
    cell_json["lookahead"] = cell.lookahead;
    cell_json["queries"] = cell.pack.query_count;
    cell_json["bf"] = cell.pack.max_branching;
    cell_json["depth"] = cell.pack.depth;
    double wall_total = 0.0;
    for (size_t s = 0; s < strategies.size(); ++s) {
      cell_json["work_" + strategy_names[s]] = results[s].counters.work_units();
      wall_total += best_ms[s];
    }
    cell_json["exec_speedup"] = speedup;

    // Bound validation needs per-node attribution from an unshared baseline.
    std::string verdict_text = "n/a";
    if (strategies.front() == qp::Strategy::Disjoint) {
      qp::MultiLevelParams fitted =
          qp::fit_from_counters(results.front().counters, cell.pack);
      qp::SpeedupReport predicted = qp::multi_level(fitted);
      qp::BoundsVerdict verdict = qp::validate_bounds(work_base, work_last, predicted);
      cell_json["model"] = qp::speedup_report_to_json(predicted);
      cell_json["bounds_verdict"] = verdict.pass;
      if (!verdict.diagnostic.empty()) cell_json["bounds_diagnostic"] = verdict.diagnostic;
      verdict_text = verdict.pass ? "ok" : "FAIL";
    }
    report["cells"].push_back(cell_json);

    // Wall clock is auxiliary: printed for orientation, never in the report
    // file so outputs stay byte-identical across runs.
    std::cout << std::left << std::setw(4) << cell.lookahead << std::setw(8)
              << cell.pack.query_count << std::setw(5) << cell.pack.max_branching << std::setw(7)
              << cell.pack.depth << std::setw(14) << results.front().counters.work_units()
              << std::setw(14) << results.back().counters.work_units() << std::setw(10)
              << std::fixed << std::setprecision(2) << speedup << std::setw(8) << verdict_text
              << std::fixed << std::setprecision(1) << wall_total << "\n";
  }

  write_file(out_path, report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"query pack execution toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate-bongard", "generate a scene-classification dataset");
  int gen_n = 100;
  std::string gen_complexity = "simple";
  uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--n", gen_n, "number of examples");
  gen->add_option("--complexity", gen_complexity, "simple|medium|none");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output file")->required();

  auto* run = app.add_subcommand("run", "evaluate a pack against a database");
  std::string run_db, run_pack, run_strategy = "packed", run_out;
  run->add_option("--db", run_db, "database file")->required();
  run->add_option("--pack", run_pack, "pack file")->required();
  run->add_option("--strategy", run_strategy, "separate|disjoint|packed");
  run->add_option("--out", run_out, "output prefix (.csv/.bits/.counters.json)")->required();

  auto* mine = app.add_subcommand("mine", "level-wise frequent query discovery");
  std::string mine_db, mine_bias, mine_out;
  int mine_minfreq = 1, mine_maxlevel = 3;
  mine->add_option("--db", mine_db, "database file")->required();
  mine->add_option("--bias", mine_bias, "bias file")->required();
  mine->add_option("--minfreq", mine_minfreq, "minimum frequency");
  mine->add_option("--maxlevel", mine_maxlevel, "maximum refinement level");
  mine->add_option("--out", mine_out, "output prefix (.tsv/.summary.json)")->required();

  auto* bench = app.add_subcommand("bench", "disjoint-vs-packed work comparison");
  std::string bench_config;
  bench->add_option("--config", bench_config, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate_bongard(gen_out, gen_n, gen_complexity, gen_seed);
    if (run->parsed()) return cmd_run(run_db, run_pack, run_strategy, run_out);
    if (mine->parsed()) return cmd_mine(mine_db, mine_bias, mine_minfreq, mine_maxlevel, mine_out);
    if (bench->parsed()) return cmd_bench(bench_config);
  } catch (const qp::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qp::EvalError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitEval;
  } catch (const qp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEval;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEval;
  }
  return 0;
}
