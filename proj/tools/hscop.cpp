// Copyright 2026 The hscop Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// hscop command-line tool.
//
//   hscop gen-data --distinct 25 --samples 1000 --seed 1 --out data.csv
//   hscop solve --data data.csv --method pip --cap 0.4 --out run.json
//   hscop compare --runs runs/ [--out table.csv]
//   hscop classify --mode standard|np|tree --data labeled.csv [--out report.json]
//
// Exit codes: 0 success, 1 usage or input error, 2 infeasible at exit
// (gamma > 0), 3 solver abort.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hscop/classify.hpp"
#include "hscop/hscop.hpp"
#include "hscop/pip.hpp"
#include "hscop/synthdata.hpp"
#include "hscop/treatment.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitAbort = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return ss.str();
}

/// Time tiers by atom count: 600 s up to ~100 atoms, 1800 s up to ~300,
/// 3600 s beyond.
double tier_seconds(std::size_t atoms) {
  if (atoms <= 150) return 600.0;
  if (atoms <= 400) return 1800.0;
  return 3600.0;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

// gen-data

struct GenArgs {
  hscop::synthdata::SynthConfig config;
  std::string out;
  std::string manifest;
  double outcome_bound = 0.0;
};

int run_gen(const GenArgs& args) {
  auto config = args.config;
  if (args.outcome_bound > 0.0) config.outcome_bound = args.outcome_bound;
  const auto data = hscop::synthdata::generate(config);
  std::ostringstream csv;
  hscop::treatment::write_dataset_csv(csv, data);
  write_file(args.out, csv.str());
  auto m = hscop::synthdata::manifest(config);
  m["output"] = {{"path", args.out}, {"sha256", sha256_hex(csv.str())}};
  write_file(args.manifest.empty() ? args.out + ".manifest.json" : args.manifest, m.dump(2) + "\n");
  std::cerr << "wrote " << data.samples.size() << " samples over " << data.covariate_table().size()
            << " covariates to " << args.out << "\n";
  return kExitOk;
}

// solve

struct SolveArgs {
  std::string data;
  std::string propensity_csv;
  std::string propensity_mode = "known";
  std::string method = "pip";
  int arms = 4;
  double alpha = 0.7;
  double lambda = 0.01;
  double rho = 1e8;
  double tau = 0.001;
  double beta_bound = 1.0;
  double cap = 0.6;
  double outcome_bound = 0.0;
  std::optional<double> time_limit;
  double scale = 1.0;
  int stale = 10;
  std::string out;
};

int run_solve(const SolveArgs& args) {
  namespace tr = hscop::treatment;
  const std::string bytes = read_file(args.data);
  std::istringstream in(bytes);
  auto data = tr::read_dataset_csv(in, args.arms);
  json inputs = {{"data", {{"path", args.data}, {"sha256", sha256_hex(bytes)}}}};
  if (!args.propensity_csv.empty()) {
    const std::string pbytes = read_file(args.propensity_csv);
    std::istringstream pin(pbytes);
    tr::read_propensity_csv(pin, data);
    inputs["propensity"] = {{"path", args.propensity_csv}, {"sha256", sha256_hex(pbytes)}};
  } else if (args.propensity_mode == "empirical") {
    tr::estimate_empirical_propensities(data);
  } else {
    tr::set_known_propensities(data, 1.0 / args.arms);
  }
  if (args.outcome_bound > 0.0) data.outcome_bound = args.outcome_bound;
  tr::TreatmentSpec spec;
  spec.num_arms = args.arms;
  spec.margins.assign(static_cast<std::size_t>(args.arms), args.tau);
  spec.alpha = args.alpha;
  spec.lambda = args.lambda;
  spec.rho = args.rho;
  spec.beta_bound = args.beta_bound;
  tr::TreatmentLayout layout;
  const auto problem = tr::build_treatment_hscop(data, spec, &layout);
  const double limit = args.time_limit.value_or(tier_seconds(problem.atoms.size()) * args.scale);

  json result = {{"schema", "hscop-result"},
                 {"version", 1},
                 {"method", args.method},
                 {"label", args.method == "pip" ? "PIP (" + fmt(args.cap) + ")" : "full MIP"},
                 {"inputs", inputs},
                 {"config",
                  {{"alpha", args.alpha}, {"lambda", args.lambda}, {"rho", args.rho}, {"tau", args.tau},
                   {"beta_bound", args.beta_bound}, {"cap", args.cap}, {"stale", args.stale},
                   {"time_limit", limit}, {"propensity", args.propensity_csv.empty() ? args.propensity_mode : "file"},
                   {"outcome_bound", data.bound()}}},
                 {"atoms", problem.atoms.size()},
                 {"samples", data.samples.size()}};

  std::optional<hscop::Point> point;
  int code = kExitOk;
  const auto t0 = std::chrono::steady_clock::now();
  if (args.method == "full") {
    const auto sol = hscop::solve_full(problem, limit);
    result["status"] = hscop::milp::to_string(sol.mip.status);
    result["certificate"] = sol.mip.status == hscop::milp::SolveStatus::Optimal;
    result["mip"] = {{"objective", sol.mip.objective}, {"bound", sol.mip.bound}, {"gap", sol.mip.gap},
                     {"nodes", sol.mip.nodes}, {"binaries", sol.binaries}};
    point = sol.x;
  } else {
    hscop::PipConfig config;
    config.cap_fraction = args.cap;
    config.max_stale_expansions = args.stale;
    config.total_time_limit = limit;
    config.subproblem_time_limit = limit;
    const auto res = hscop::run_pip(problem, config);
    result["status"] = res.termination;
    result["certificate"] = res.certificate;
    json log = json::array();
    for (const auto& l : res.history) log.push_back(hscop::to_json(l));
    result["iterations"] = log;
    result["binaries_solved"] = res.binaries_solved;
    point = res.x;
  }
  result["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!point) {
    result["feasible"] = false;
    code = kExitAbort;
  } else {
    const auto ev = hscop::evaluate(problem, *point);
    const auto params = tr::params_from_point(*point, args.arms, layout.p);
    const double welfare = tr::welfare_ipw(data, params, spec);
    result["objective"] = ev.objective;
    result["welfare"] = welfare;
    result["gamma"] = point->gamma;
    result["feasible"] = point->gamma <= 0.0;
    if (welfare > 0.0) result["gini"] = tr::gini_ipw(data, params, spec);
    result["beta"] = point->x;
    if (point->gamma > 0.0) code = kExitInfeasible;
  }
  const std::string text = result.dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_file(args.out, text);
  }
  std::cerr << result["label"].get<std::string>() << ": status " << result["status"].get<std::string>();
  if (result.contains("welfare")) std::cerr << ", welfare " << fmt(result["welfare"].get<double>());
  std::cerr << ", gamma " << (point ? fmt(point->gamma) : "n/a") << "\n";
  return code;
}

// compare

int run_compare(const std::string& dir, const std::string& out_path) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::ostringstream csv;
  csv << "run,method,welfare,gini,time\n";
  for (const auto& f : files) {
    json r;
    try {
      r = json::parse(read_file(f));
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed run file " + f.string() + ": " + e.what());
    }
    if (r.value("schema", "") != "hscop-result") {
      throw std::runtime_error("malformed run file " + f.string() + ": not an hscop result");
    }
    const bool feasible = r.value("feasible", false);
    const std::string welfare = r.contains("welfare") ? fmt(r["welfare"].get<double>()) : "";
    const std::string gini = feasible && r.contains("gini") ? fmt(r["gini"].get<double>()) : "infeas.";
    csv << csv_quote(f.stem().string()) << ',' << csv_quote(r.value("label", r.value("method", ""))) << ','
        << welfare << ',' << gini << ',' << fmt(r.value("seconds", 0.0)) << '\n';
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_file(out_path, csv.str());
  }
  return kExitOk;
}

// classify

struct ClassifyArgs {
  std::string mode = "standard";
  std::string data;
  std::string method = "full";
  double tau = 0.0;
  double lambda = 0.0;
  double beta_bound = 1.0;
  std::vector<std::string> e1;
  std::vector<std::string> weights;
  double threshold = 0.1;
  int depth = 1;
  double epsilon = 1e-3;
  double cap = 0.6;
  std::optional<double> time_limit;
  std::string out;
};

hscop::classify::LabelPair parse_pair(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("label pair must look like i:j, got " + s);
  return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
}

std::optional<hscop::Point> solve_with(const hscop::HscopProblem& problem, const ClassifyArgs& args) {
  if (args.method == "full") return hscop::solve_full(problem, args.time_limit).x;
  hscop::PipConfig config;
  config.cap_fraction = args.cap;
  config.total_time_limit = args.time_limit;
  return hscop::run_pip(problem, config).x;
}

int run_classify(const ClassifyArgs& args) {
  namespace cl = hscop::classify;
  const std::string bytes = read_file(args.data);
  std::istringstream in(bytes);
  const auto data = cl::read_labeled_csv(in);
  json report = {{"schema", "hscop-classify"},
                 {"version", 1},
                 {"mode", args.mode},
                 {"method", args.method},
                 {"inputs", {{"data", {{"path", args.data}, {"sha256", sha256_hex(bytes)}}}}},
                 {"samples", data.samples.size()},
                 {"classes", data.num_classes}};
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  if (args.mode == "tree") {
    const cl::TreeShape shape{.depth = args.depth, .epsilon = args.epsilon};
    const auto search = cl::enumerate_label_tuples(
        data, shape, args.lambda, [&](const hscop::HscopProblem& p) { return solve_with(p, args); });
    const auto& best = search.best_tuple();
    report["tuples_solved"] = search.tuples.size();
    report["labels"] = best.labels;
    report["objective"] = best.value;
    if (best.x) {
      report["params"] = best.x->x;
      report["accuracy"] = static_cast<double>(cl::tree_correct(data, shape, best.labels, best.x->x)) /
                           static_cast<double>(data.samples.size());
    } else {
      code = kExitAbort;
    }
  } else {
    cl::ScoreSpec score;
    score.default_margin = args.tau;
    score.lambda = args.lambda;
    score.beta_bound = args.beta_bound;
    hscop::HscopProblem problem;
    cl::NpSpec np;
    if (args.mode == "standard") {
      problem = cl::build_standard_classification(data, score);
    } else if (args.mode == "np") {
      std::vector<cl::LabelPair> e1;
      for (const auto& s : args.e1) e1.push_back(parse_pair(s));
      np = cl::NpSpec::complement_of(data.num_classes, e1);
      // NP margins must be positive.
      score.default_margin = args.tau > 0.0 ? args.tau : 0.001;
      np.score = score;
      np.threshold = args.threshold;
      for (const auto& w : args.weights) {
        const auto eq = w.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("weight must look like i:j=w, got " + w);
        np.weights[parse_pair(w.substr(0, eq))] = std::stod(w.substr(eq + 1));
      }
      problem = cl::build_np_classification(data, np);
    } else {
      throw std::invalid_argument("unknown mode " + args.mode);
    }
    const auto point = solve_with(problem, args);
    report["atoms"] = problem.atoms.size();
    if (point) {
      report["objective"] = hscop::evaluate(problem, *point).objective;
      report["beta"] = point->x;
      report["accuracy"] = cl::accuracy(data, score, point->x);
      if (args.mode == "np") {
        report["controlled_error"] = cl::np_error(data, np, np.e1, point->x);
        report["objective_error"] = cl::np_error(data, np, np.e2, point->x);
      }
    } else {
      code = kExitAbort;
    }
  }
  report["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string text = report.dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_file(args.out, text);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heaviside composite optimization: full MIP and PIP solves"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic treatment dataset");
  gen_cmd->add_option("--distinct", gen.config.num_distinct, "Distinct covariate vectors");
  gen_cmd->add_option("--samples", gen.config.num_samples, "Total samples");
  gen_cmd->add_option("--seed", gen.config.seed, "RNG seed");
  gen_cmd->add_option("--covariates", gen.config.num_covariates, "Covariate dimension");
  gen_cmd->add_option("--outcome-bound", gen.outcome_bound, "Fixed outcome bound M (default: largest outcome)");
  gen_cmd->add_option("--out", gen.out, "Dataset CSV path")->required();
  gen_cmd->add_option("--manifest", gen.manifest, "Manifest path (default: <out>.manifest.json)");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve the Gini-constrained treatment problem");
  solve_cmd->add_option("--data", solve.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--method", solve.method, "full or pip")->check(CLI::IsMember({"full", "pip"}));
  solve_cmd->add_option("--arms", solve.arms, "Number of arms");
  solve_cmd->add_option("--alpha", solve.alpha, "Gini bound");
  solve_cmd->add_option("--lambda", solve.lambda, "l1 weight");
  solve_cmd->add_option("--rho", solve.rho, "Residual penalty");
  solve_cmd->add_option("--tau", solve.tau, "Score margin for every arm");
  solve_cmd->add_option("--beta-bound", solve.beta_bound, "Box bound on beta");
  solve_cmd->add_option("--cap", solve.cap, "PIP cap on binaries as a fraction of atoms");
  solve_cmd->add_option("--outcome-bound", solve.outcome_bound, "Outcome bound M (default: largest outcome)");
  solve_cmd->add_option("--propensity", solve.propensity_mode, "known (uniform) or empirical")
      ->check(CLI::IsMember({"known", "empirical"}));
  solve_cmd->add_option("--propensity-csv", solve.propensity_csv, "Propensity table")->check(CLI::ExistingFile);
  solve_cmd->add_option("--time-limit", solve.time_limit, "Wall-clock limit in seconds");
  solve_cmd->add_option("--scale", solve.scale, "Multiplier on the default time tier");
  solve_cmd->add_option("--stale", solve.stale, "PIP stale expansions before stopping");
  solve_cmd->add_option("--out", solve.out, "Result JSON path (default: stdout)");

  std::string runs_dir, compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate result files");
  compare_cmd->add_option("--runs", runs_dir, "Directory of result JSON files")->required();
  compare_cmd->add_option("--out", compare_out, "CSV path (default: stdout)");

  ClassifyArgs cls;
  auto* cls_cmd = app.add_subcommand("classify", "Train a classifier");
  cls_cmd->add_option("--mode", cls.mode, "standard, np or tree")->check(CLI::IsMember({"standard", "np", "tree"}));
  cls_cmd->add_option("--data", cls.data, "Labeled CSV")->required()->check(CLI::ExistingFile);
  cls_cmd->add_option("--method", cls.method, "full or pip")->check(CLI::IsMember({"full", "pip"}));
  cls_cmd->add_option("--tau", cls.tau, "Score margin");
  cls_cmd->add_option("--lambda", cls.lambda, "l1 weight");
  cls_cmd->add_option("--beta-bound", cls.beta_bound, "Box bound on the score parameters");
  cls_cmd->add_option("--e1", cls.e1, "Controlled pairs i:j (np mode)");
  cls_cmd->add_option("--weight", cls.weights, "Pair weights i:j=w (np mode, default 1)");
  cls_cmd->add_option("--threshold", cls.threshold, "Bound on the controlled error (np mode)");
  cls_cmd->add_option("--depth", cls.depth, "Tree depth (tree mode)");
  cls_cmd->add_option("--epsilon", cls.epsilon, "Branch margin (tree mode)");
  cls_cmd->add_option("--cap", cls.cap, "PIP cap fraction");
  cls_cmd->add_option("--time-limit", cls.time_limit, "Per-solve limit in seconds");
  cls_cmd->add_option("--out", cls.out, "Report JSON path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; every parse error maps to the input code.
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }
  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (solve_cmd->parsed()) return run_solve(solve);
    if (compare_cmd->parsed()) return run_compare(runs_dir, compare_out);
    if (cls_cmd->parsed()) return run_classify(cls);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAbort;
  }
  return kExitInput;
}
