// Acceptance suite: one check per shipped guarantee, one PASS/FAIL line each.
// Exits nonzero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qp/bongard.hpp"
#include "qp/costmodel.hpp"
#include "qp/engine.hpp"
#include "qp/miner.hpp"
#include "qp/rng.hpp"
#include "testutil.hpp"

using namespace qp;
namespace fs = std::filesystem;

namespace {

struct Harness {
  int failures = 0;

  void criterion(int number, const std::string& title, const std::function<void()>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      body();
    } catch (const std::exception& e) {
      error = e.what();
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty()) {
      std::printf("[PASS] criterion %d: %s (%.1fs)\n", number, title.c_str(), secs);
    } else {
      ++failures;
      std::printf("[FAIL] criterion %d: %s (%.1fs)\n       %s\n", number, title.c_str(), secs,
                  error.c_str());
    }
    std::fflush(stdout);
  }
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

// ---------------------------------------------------------------------------
// Criteria 1 + 2: randomized strategy-equivalence corpus with the pruning
// monitor enabled.

void run_equivalence_corpus() {
  Rng rng(20260810);
  for (int iter = 0; iter < 500; ++iter) {
    testutil::RandomInstance inst = testutil::make_random_instance(rng);
    EvalOptions opts;
    opts.check_invariants = true;
    EvalResult packed = evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Packed, opts);
    EvalResult disjoint = evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Disjoint);
    EvalResult separate = evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Separate);
    require(packed.results == disjoint.results,
            "packed vs disjoint bits differ on instance " + std::to_string(iter));
    require(packed.results == separate.results,
            "packed vs separate bits differ on instance " + std::to_string(iter));
    require(packed.counters.duplicate_reports == 0,
            "a leaf reported success twice on instance " + std::to_string(iter));
    require(packed.counters.invariant_violations == 0,
            "pruning invariant violated on instance " + std::to_string(iter));
    require(packed.counters.work_units() <= disjoint.counters.work_units(),
            "packed work exceeds disjoint work on instance " + std::to_string(iter));
  }
}

// ---------------------------------------------------------------------------
// Criterion 4 helpers: synthetic uniform one-level brooms with a chosen
// shared/private work ratio realized purely by fact counts.

struct BroomInstance {
  Database db;
  QueryPack pack;
  double target_c;
};

BroomInstance make_uniform_broom(int n, double target_c, int scale) {
  BroomInstance inst;
  inst.target_c = target_c;

  int shared_facts;       // solutions of the stick literal
  int decoy_every = 0;    // a decoy bucket at every multiple of this
  int decoys_per_sigma = 1;
  if (target_c < 1.0) {
    shared_facts = 40 * scale;
    decoy_every = 1;
    decoys_per_sigma = 10;
  } else if (target_c == 1.0) {
    shared_facts = 40 * scale;
    decoy_every = 1;
  } else {
    shared_facts = static_cast<int>(10.0 * target_c) * scale;
    decoy_every = static_cast<int>(target_c);
  }

  for (int j = 1; j <= shared_facts; ++j)
    inst.db.add_background(Atom("sh", {Term::integer(j)}));
  for (int i = 0; i < n; ++i) {
    std::string pred = "br" + std::to_string(i);
    for (int sigma = 1; sigma < shared_facts; ++sigma) {
      if (sigma % decoy_every != 0) continue;
      for (int d = 0; d < decoys_per_sigma; ++d)
        inst.db.add_background(Atom(pred, {Term::integer(sigma), Term::integer(-d)}));
    }
    inst.db.add_background(Atom(pred, {Term::integer(shared_facts), Term::integer(1)}));
  }
  inst.db.set_key_arity(0);
  inst.db.add_example(0, {});
  inst.db.finalize();

  Term x = Term::variable(0, "X");
  std::vector<Conjunction> queries;
  for (int i = 0; i < n; ++i) {
    Conjunction q;
    q.atoms.push_back(Atom("sh", {x}));
    q.atoms.push_back(Atom("br" + std::to_string(i), {x, Term::integer(1)}));
    queries.push_back(std::move(q));
  }
  inst.pack = build_pack(queries);
  label_pack(inst.pack);
  return inst;
}

void run_one_level_bounds() {
  int instances = 0;
  for (int n : {4, 8, 16, 32}) {
    for (double target : {0.1, 1.0, 10.0, 100.0}) {
      // The 0.8n floor needs c >= ~4n (speedup = n(c+1)/(c+n)), so the
      // "c >= 100" bucket scales its realized ratio with n.
      double c_eff = target == 100.0 ? std::max(100.0, 5.0 * n) : target;
      for (int scale = 1; scale <= 7; ++scale) {
        BroomInstance inst = make_uniform_broom(n, c_eff, scale);
        ++instances;

        EvalResult disjoint =
            evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Disjoint);
        EvalResult packed = evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Packed);
        double ts = static_cast<double>(disjoint.counters.work_units());
        double tp = static_cast<double>(packed.counters.work_units());
        require(tp > 0 && ts > 0, "empty work measurement");
        double speedup = ts / tp;

        // Fit one-level parameters from the disjoint per-node counters.
        OneLevelParams fit;
        double root_work = static_cast<double>(disjoint.counters.node(0).literal_calls);
        for (int32_t leaf : inst.pack.leaf_ids())
          fit.t_prime.push_back(
              static_cast<double>(disjoint.counters.node(leaf).literal_calls));
        fit.t.assign(static_cast<size_t>(n), root_work / n);
        SpeedupReport model = one_level(fit);
        require(model.bounds.has_value(), "fit degenerated");
        double c_fit = model.c.value();

        require(speedup >= 1.0 - 0.05,
                "speedup " + std::to_string(speedup) + " below 1 (n=" + std::to_string(n) +
                    ", c=" + std::to_string(c_eff) + ")");
        double upper = std::min(c_fit + 1.0, static_cast<double>(n)) * 1.05;
        require(speedup <= upper, "speedup " + std::to_string(speedup) + " above bound " +
                                      std::to_string(upper) + " (n=" + std::to_string(n) +
                                      ", c=" + std::to_string(c_eff) + ")");
        if (c_eff >= 100.0)
          require(speedup >= 0.8 * n, "speedup " + std::to_string(speedup) + " below 0.8*n for n=" +
                                          std::to_string(n) + ", c=" + std::to_string(c_eff));
      }
    }
  }
  require(instances >= 100, "corpus too small: " + std::to_string(instances));
}

// ---------------------------------------------------------------------------
// Criterion 5 helpers: complete b-ary packs with constructed per-level work.
// Each node contributes exactly W_l + 1 work units and one solution.

struct DeepPackInstance {
  Database db;
  QueryPack pack;
};

DeepPackInstance make_uniform_deep_pack(int b, int d, const std::vector<int>& level_work) {
  DeepPackInstance inst;
  inst.db.set_key_arity(0);
  inst.db.add_example(0, {});

  std::vector<Conjunction> queries;
  int32_t next_var = 0;
  int next_node = 0;

  std::function<void(const Conjunction&, int)> grow = [&](const Conjunction& prefix, int depth) {
    int id = next_node++;
    int w = level_work[static_cast<size_t>(depth)];
    std::string scan_pred = "n" + std::to_string(id);
    std::string pick_pred = "e" + std::to_string(id);
    for (int j = 1; j <= w; ++j) inst.db.add_background(Atom(scan_pred, {Term::integer(j)}));
    inst.db.add_background(Atom(pick_pred, {Term::integer(w)}));

    Term y = Term::variable(next_var, "Y" + std::to_string(next_var));
    ++next_var;
    Conjunction here = prefix;
    here.atoms.push_back(Atom(scan_pred, {y}));
    here.atoms.push_back(Atom(pick_pred, {y}));

    if (depth == d) {
      queries.push_back(here);
      return;
    }
    for (int child = 0; child < b; ++child) grow(here, depth + 1);
  };
  grow(Conjunction{}, 0);

  inst.db.finalize();
  inst.pack = build_pack(queries);
  label_pack(inst.pack);
  return inst;
}

void run_multi_level_fit() {
  for (int b : {2, 3}) {
    for (int d : {1, 2, 3}) {
      std::vector<int> level_work;
      for (int l = 0; l <= d; ++l) level_work.push_back(40 / (l + 1) + 3);

      DeepPackInstance inst = make_uniform_deep_pack(b, d, level_work);
      require(inst.pack.depth == d, "constructed pack has wrong depth");
      require(inst.pack.max_branching == b, "constructed pack has wrong branching");

      EvalResult disjoint = evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Disjoint);
      EvalResult packed = evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Packed);
      require(packed.results == disjoint.results, "bits differ on the deep pack");

      MultiLevelParams fitted = fit_from_counters(disjoint.counters, inst.pack);
      require(fitted.uniform_branching, "constructed pack not recognized as uniform");
      SpeedupReport model = multi_level(fitted);

      double ts = static_cast<double>(disjoint.counters.work_units());
      double tp = static_cast<double>(packed.counters.work_units());
      require(std::abs(model.Ts - ts) <= 0.15 * ts,
              "Ts prediction off by more than 15% (b=" + std::to_string(b) +
                  ", d=" + std::to_string(d) + "): predicted " + std::to_string(model.Ts) +
                  ", measured " + std::to_string(ts));
      require(std::abs(model.Tp - tp) <= 0.15 * tp,
              "Tp prediction off by more than 15% (b=" + std::to_string(b) +
                  ", d=" + std::to_string(d) + "): predicted " + std::to_string(model.Tp) +
                  ", measured " + std::to_string(tp));
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 6: algebraic identities on random parameter vectors.

void run_algebraic_identities() {
  Rng rng(606060);
  for (int iter = 0; iter < 10000; ++iter) {
    size_t n = 1 + rng.below(24);
    OneLevelParams p;
    for (size_t i = 0; i < n; ++i) {
      p.t.push_back(static_cast<double>(rng.below(10000)));
      p.t_prime.push_back(static_cast<double>(1 + rng.below(10000)));
    }
    SpeedupReport r = one_level(p);
    double raw = r.Ts / r.Tp;
    require(std::abs(r.speedup - raw) <= 1e-12 * std::max(1.0, std::abs(raw)),
            "Eq.(2) disagrees with raw Ts/Tp");
    require(r.speedup >= 1.0 - 1e-12, "speedup below 1");
    require(r.speedup <= r.bounds->upper + 1e-12, "speedup above min(c+1, n)");
  }
  for (int iter = 0; iter < 10000; ++iter) {
    MultiLevelParams p;
    p.b = static_cast<int>(rng.range(2, 6));
    p.d = static_cast<int>(rng.range(0, 4));
    for (int l = 0; l <= p.d; ++l) p.tbar.push_back(static_cast<double>(1 + rng.below(10000)));
    SpeedupReport r = multi_level(p);
    for (int l = 0; l <= p.d; ++l)
      for (int m = l; m <= p.d; ++m) {
        double val = r.R[static_cast<size_t>(l)][static_cast<size_t>(m)];
        require(val >= 1.0 - 1e-9, "R below 1");
        require(val <= std::pow(p.b, m - l) + 1e-9, "R above b^(m-l)");
      }
  }
}

// ---------------------------------------------------------------------------
// Criterion 7: mining equivalence on the fixed toy fixture.

void run_mining_equivalence() {
  Database db = load_program(testutil::toy_mining_db());
  LanguageBias bias = parse_bias(testutil::toy_mining_bias());
  const std::vector<Term>& keys = db.examples().key_vars;
  const int minfreq = 3, maxlevel = 3;

  WarmrResult mined = warmr_levelwise(bias, db, keys, minfreq, maxlevel);

  std::map<std::string, std::pair<int, int64_t>> expected;
  for (const Conjunction& q : oracle::enumerate_bias_queries(bias, keys, maxlevel)) {
    WorkCounters wc;
    int64_t freq = 0;
    for (const Example& ex : db.examples().examples) {
      std::vector<bool> bits = evaluate_separate(std::vector<Conjunction>{q}, db, ex, wc, keys);
      if (bits[0]) ++freq;
    }
    if (freq >= minfreq) expected[canonical_text(q, keys)] = {static_cast<int>(q.size()), freq};
  }

  std::map<std::string, std::pair<int, int64_t>> actual;
  for (const FrequentQuery& fq : mined.frequent)
    actual[canonical_text(fq.conj, keys)] = {fq.level, fq.frequency};

  require(actual.size() == expected.size(),
          "frequent set size: mined " + std::to_string(actual.size()) + ", oracle " +
              std::to_string(expected.size()));
  for (const auto& [canon, lv_freq] : expected) {
    auto it = actual.find(canon);
    require(it != actual.end(), "oracle query missing from mined set: " + canon);
    require(it->second == lv_freq, "level/frequency mismatch for: " + canon);
  }

  // Anti-monotonicity at every level.
  std::set<std::string> frequent_canon;
  for (const FrequentQuery& fq : mined.frequent)
    frequent_canon.insert(canonical_text(fq.conj, keys));
  for (const FrequentQuery& fq : mined.frequent) {
    if (fq.conj.size() <= 1) continue;
    Conjunction prefix = fq.conj;
    prefix.atoms.pop_back();
    require(frequent_canon.count(canonical_text(prefix, keys)) == 1,
            "frequent query has an infrequent prefix: " + canonical_text(fq.conj, keys));
  }
}

// ---------------------------------------------------------------------------
// Criterion 8: speedup trend on generated scene data.

void run_trend_reproduction() {
  LanguageBias bias = parse_bias(
      "template triangle/1 +\n"
      "template leftof/2 +,-\n"
      "template in/2 +,+\n"
      "maxnewvars 1\n");
  Conjunction stick = parse_conjunction("circle(A), leftof(A,B), above(B,C)");

  for (int n : {1000, 2500}) {
    BongardConfig config{n, BongardComplexity::Simple, 42};
    Database db = generate_bongard(config);

    std::vector<double> speedups;
    for (int lookahead : {0, 1, 2}) {
      QueryPack broom = build_broom(stick, bias, lookahead);
      EvalResult disjoint = evaluate_pack_on_examples(broom, db, Strategy::Disjoint);
      EvalResult packed = evaluate_pack_on_examples(broom, db, Strategy::Packed);
      require(packed.results == disjoint.results, "strategy bits differ in the trend bench");
      double speedup = static_cast<double>(disjoint.counters.work_units()) /
                       static_cast<double>(packed.counters.work_units());
      speedups.push_back(speedup);
    }
    require(speedups[1] >= speedups[0] - 1e-9,
            "speedup not monotone 0->1 on n=" + std::to_string(n) + ": " +
                std::to_string(speedups[0]) + " -> " + std::to_string(speedups[1]));
    require(speedups[2] >= speedups[1] - 1e-9,
            "speedup not monotone 1->2 on n=" + std::to_string(n) + ": " +
                std::to_string(speedups[1]) + " -> " + std::to_string(speedups[2]));
    require(speedups[2] > 2.0, "lookahead-2 speedup " + std::to_string(speedups[2]) +
                                   " does not exceed 2x on n=" + std::to_string(n));
  }
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical CLI outputs under a fixed seed.

int run_cmd(const std::string& cmd) {
  int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing output file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

void run_cli_determinism() {
  const std::string bin = QPK_BIN;
  fs::path tmp = fs::temp_directory_path() / ("qpk_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  struct Cleanup {
    fs::path p;
    ~Cleanup() { fs::remove_all(p); }
  } cleanup{tmp};

  auto identical = [&](const std::string& cmd_a, const std::string& cmd_b,
                       const std::vector<fs::path>& a_files,
                       const std::vector<fs::path>& b_files, const std::string& what) {
    require(run_cmd(cmd_a) == 0, what + ": first run failed");
    require(run_cmd(cmd_b) == 0, what + ": second run failed");
    for (size_t i = 0; i < a_files.size(); ++i)
      require(slurp(a_files[i]) == slurp(b_files[i]),
              what + ": " + a_files[i].filename().string() + " differs between runs");
  };

  // generate-bongard
  identical(bin + " generate-bongard --n 50 --complexity medium --seed 12 --out " +
                (tmp / "g1.pl").string(),
            bin + " generate-bongard --n 50 --complexity medium --seed 12 --out " +
                (tmp / "g2.pl").string(),
            {tmp / "g1.pl"}, {tmp / "g2.pl"}, "generate-bongard");

  // run (all strategies)
  spit(tmp / "db.pl", "p(1).\np(2).\nq(1).\nr(2).\n#example 0 key().\n#example 1 key().\n");
  spit(tmp / "q.pack", "p(X), (q(X) or r(X))\n");
  for (const std::string strategy : {"separate", "disjoint", "packed"}) {
    std::string base = bin + " run --db " + (tmp / "db.pl").string() + " --pack " +
                       (tmp / "q.pack").string() + " --strategy " + strategy + " --out ";
    identical(base + (tmp / ("r1_" + strategy)).string(),
              base + (tmp / ("r2_" + strategy)).string(),
              {tmp / ("r1_" + strategy + ".csv"), tmp / ("r1_" + strategy + ".bits"),
               tmp / ("r1_" + strategy + ".counters.json")},
              {tmp / ("r2_" + strategy + ".csv"), tmp / ("r2_" + strategy + ".bits"),
               tmp / ("r2_" + strategy + ".counters.json")},
              "run --strategy " + strategy);
  }

  // mine
  spit(tmp / "mine.pl", testutil::toy_mining_db());
  spit(tmp / "bias.txt", testutil::toy_mining_bias());
  std::string mine_base = bin + " mine --db " + (tmp / "mine.pl").string() + " --bias " +
                          (tmp / "bias.txt").string() + " --minfreq 3 --maxlevel 3 --out ";
  identical(mine_base + (tmp / "m1").string(), mine_base + (tmp / "m2").string(),
            {tmp / "m1.tsv", tmp / "m1.summary.json"}, {tmp / "m2.tsv", tmp / "m2.summary.json"},
            "mine");

  // bench
  require(run_cmd(bin + " generate-bongard --n 120 --complexity simple --seed 4 --out " +
                  (tmp / "bench_data.pl").string()) == 0,
          "bench data generation failed");
  spit(tmp / "bench_bias.txt",
       "template triangle/1 +\ntemplate leftof/2 +,-\ntemplate in/2 +,+\nmaxnewvars 1\n");
  auto bench_config = [&](const fs::path& out) {
    return std::string("{\n  \"db\": \"") + (tmp / "bench_data.pl").string() +
           "\",\n  \"bias\": \"" + (tmp / "bench_bias.txt").string() +
           "\",\n  \"stick\": \"circle(A), leftof(A,B)\",\n  \"lookaheads\": [0, 1],\n  \"out\": \"" +
           out.string() + "\"\n}\n";
  };
  spit(tmp / "b1.json", bench_config(tmp / "rep1.json"));
  spit(tmp / "b2.json", bench_config(tmp / "rep2.json"));
  identical(bin + " bench --config " + (tmp / "b1.json").string(),
            bin + " bench --config " + (tmp / "b2.json").string(), {tmp / "rep1.json"},
            {tmp / "rep2.json"}, "bench");
}

}  // namespace

int main() {
  Harness h;

  h.criterion(1, "strategy equivalence on 500 randomized instances", run_equivalence_corpus);

  h.criterion(2, "pruning invariants (single report, no zombie solutions, early stop)", [] {
    // The monitor ran inside the criterion-1 corpus; re-run a slice with the
    // monitor on to keep this criterion independently executable.
    Rng rng(1701);
    for (int iter = 0; iter < 150; ++iter) {
      testutil::RandomInstance inst = testutil::make_random_instance(rng);
      EvalOptions opts;
      opts.check_invariants = true;
      EvalResult packed = evaluate_pack_on_examples(inst.pack, inst.db, Strategy::Packed, opts);
      require(packed.counters.duplicate_reports == 0, "leaf reported twice");
      require(packed.counters.invariant_violations == 0, "zombie solution or late re-entry");
    }
  });

  h.criterion(3, "two-branch regression: both bits set, at most 2 root solutions", [] {
    Database db = load_program("p(1).\np(2).\nq(1).\nr(2).\n#example 0 key().\n");
    QueryPack pack = parse_pack("p(X), (q(X) or r(X))");
    label_pack(pack);
    EvalResult res = evaluate_pack_on_examples(pack, db, Strategy::Packed);
    require(res.results.get(0, 0), "first query bit not set");
    require(res.results.get(1, 0), "second query bit not set");
    require(res.counters.node(0).solutions <= 2,
            "root conjunction enumerated more than 2 solutions");
  });

  h.criterion(4, "one-level speedup bounds on 112 synthetic uniform brooms",
              run_one_level_bounds);

  h.criterion(5, "multi-level Ts/Tp predictions within 15% on uniform packs",
              run_multi_level_fit);

  h.criterion(6, "algebraic identities on 10^4 random parameter vectors",
              run_algebraic_identities);

  h.criterion(7, "mining equals brute-force enumeration on the toy fixture",
              run_mining_equivalence);

  h.criterion(8, "speedup trend: non-decreasing in lookahead, >2x at lookahead 2",
              run_trend_reproduction);

  h.criterion(9, "CLI determinism: byte-identical outputs under fixed seeds",
              run_cli_determinism);

  if (h.failures == 0) {
    std::printf("all 9 criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", h.failures);
  return 1;
}
