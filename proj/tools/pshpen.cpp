// Command-line interface: fit penalized PSH models on CSV data, generate
// benchmark datasets, run selection studies, evaluate prognostic performance
// and score donor-factor prognostic indices.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "pshpen/csv.hpp"
#include "pshpen/inference.hpp"
#include "pshpen/parallel.hpp"
#include "pshpen/prognostics.hpp"
#include "pshpen/simulate.hpp"

using nlohmann::ordered_json;
using namespace pshpen;

namespace {

constexpr int kSchemaVersion = 1;

constexpr int kExitOk = 0;
constexpr int kExitDataError = 2;
constexpr int kExitNonconvergence = 3;
constexpr int kExitConfigError = 4;

ModelKind model_from_name(const std::string& name) {
  if (name == "pooled") return ModelKind::PooledPsh;
  if (name == "stratified") return ModelKind::StratifiedRegular;
  if (name == "stratified-high") return ModelKind::StratifiedHigh;
  if (name == "marginal") return ModelKind::Marginal;
  throw ConfigError("unknown model kind: " + name);
}

SolverKind solver_from_name(const std::string& name) {
  if (name == "auto") return SolverKind::Auto;
  if (name == "lqa") return SolverKind::Lqa;
  if (name == "cd") return SolverKind::Cd;
  throw ConfigError("unknown solver: " + name);
}

std::vector<std::vector<int>> parse_groups(const std::string& labels, int d) {
  if (labels.empty()) return {};
  std::vector<std::string> parts;
  std::string cur;
  for (char c : labels) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (static_cast<int>(parts.size()) != d)
    throw ConfigError("--groups needs one label per covariate column");
  std::vector<std::vector<int>> groups;
  std::map<std::string, int> index;
  for (int j = 0; j < d; ++j) {
    auto [it, fresh] = index.emplace(parts[j], static_cast<int>(groups.size()));
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(j);
  }
  return groups;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write to " + path);
  out << content;
}

ordered_json beta_json(const Eigen::VectorXd& b) {
  ordered_json arr = ordered_json::array();
  for (int j = 0; j < b.size(); ++j) arr.push_back(b[j]);
  return arr;
}

SimScenario::CenterSizes sizes_from_name(const std::string& s) {
  if (s == "2") return SimScenario::CenterSizes::Fixed2;
  if (s == "2-5") return SimScenario::CenterSizes::Uniform2to5;
  if (s == "25") return SimScenario::CenterSizes::Fixed25;
  if (s == "50") return SimScenario::CenterSizes::Fixed50;
  throw ConfigError("unknown --sizes value: " + s);
}

struct FitArgs {
  std::string input, output;
  std::string model = "stratified";
  std::string penalty = "none";
  std::string solver = "auto";
  std::string meat = "corrected";
  std::string groups;
  double fixed_lambda = -1.0;
  int nlambda = 50;
  double lambda_min_ratio = 1e-3;
  double scad_a = 3.7;
  double mcp_gamma = 2.7;
  bool standardize = false;
  bool allow_extra = false;
};

int cmd_fit(const FitArgs& args) {
  const ModelKind model = model_from_name(args.model);
  const PenaltyFamily family = penalty_family_from_name(args.penalty);
  const SolverKind solver = solver_from_name(args.solver);
  if (args.meat != "corrected" && args.meat != "simple")
    throw ConfigError("--meat must be corrected or simple");

  Dataset raw = read_dataset_csv(args.input, args.allow_extra);
  std::optional<Standardization> transform;
  Dataset ds = raw;
  if (args.standardize) {
    auto [std_ds, tf] = standardize_covariates(raw);
    ds = std_ds;
    transform = tf;
  }
  const PshLikelihood lik(ds, model);

  PenaltySpec pen;
  pen.family = family;
  pen.scad_a = args.scad_a;
  pen.mcp_gamma = args.mcp_gamma;
  pen.groups = parse_groups(args.groups, ds.d());
  FitResult mple;
  if (family == PenaltyFamily::AdaptiveLasso || family == PenaltyFamily::None)
    mple = fit_unpenalized(lik);
  if (family == PenaltyFamily::AdaptiveLasso)
    pen.adaptive_weights = alasso_weights(mple.beta, pen.groups);

  PathResult path;
  if (family == PenaltyFamily::None) {
    path.lambdas = {0.0};
    path.fits.push_back(mple);
  } else {
    if (args.fixed_lambda >= 0.0)
      path.lambdas = {args.fixed_lambda};
    else
      path.lambdas = lambda_path(lik, pen, args.nlambda, args.lambda_min_ratio);
    path = fit_path(lik, pen, path.lambdas, solver);
  }
  const int best = select_bic(path, lik);
  const FitResult& selected = path.fits[best];

  auto report_beta = [&](const Eigen::VectorXd& b) {
    return transform ? transform->unstandardize(b) : b;
  };

  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["model"] = model_kind_name(model);
  doc["penalty"] = {{"family", penalty_family_name(family)},
                    {"scad_a", args.scad_a},
                    {"mcp_gamma", args.mcp_gamma}};
  doc["standardized"] = args.standardize;
  doc["lambda_grid"] = path.lambdas;
  ordered_json jpath = ordered_json::array();
  for (size_t i = 0; i < path.fits.size(); ++i) {
    const FitResult& f = path.fits[i];
    jpath.push_back({{"lambda", path.lambdas[i]},
                     {"beta", beta_json(report_beta(f.beta))},
                     {"active_set", f.active},
                     {"loglik", f.loglik},
                     {"df", f.df},
                     {"bic", f.bic},
                     {"converged", f.converged}});
  }
  doc["path"] = jpath;
  doc["selected_index"] = best;

  ordered_json jsel;
  jsel["lambda"] = path.lambdas[best];
  jsel["beta"] = beta_json(report_beta(selected.beta));
  jsel["active_set"] = selected.active;
  jsel["loglik"] = selected.loglik;
  jsel["df"] = selected.df;
  jsel["bic"] = selected.bic;
  if (!selected.active.empty()) {
    const MeatKind meat =
        args.meat == "corrected" ? MeatKind::Corrected : MeatKind::Simple;
    const CovarianceReport cov = model == ModelKind::Marginal
                                     ? sandwich_marginal(lik, selected, meat)
                                     : sandwich_stratified(lik, selected, meat);
    Eigen::MatrixXd cmat = cov.covariance;
    Eigen::VectorXd se = cov.se;
    if (transform) {
      cmat = transform->unstandardize_cov(cmat, selected.active);
      se = cmat.diagonal().cwiseMax(0.0).cwiseSqrt();
    }
    jsel["se_method"] = cov.method;
    jsel["meat"] = args.meat;
    ordered_json jse = ordered_json::array();
    ordered_json jcov = ordered_json::array();
    for (int p = 0; p < se.size(); ++p) {
      jse.push_back(se[p]);
      ordered_json row = ordered_json::array();
      for (int q = 0; q < se.size(); ++q) row.push_back(cmat(p, q));
      jcov.push_back(row);
    }
    jsel["se"] = jse;
    jsel["covariance"] = jcov;
  }
  doc["selected"] = jsel;

  ordered_json diag;
  diag["iterations"] = selected.iterations;
  diag["converged"] = selected.converged;
  diag["warnings"] = selected.warnings;
  diag["dropped_centers"] = lik.dropped_centers();
  doc["diagnostics"] = diag;

  write_output(args.output, doc.dump(2) + "\n");
  return selected.converged ? kExitOk : kExitNonconvergence;
}

struct ScenarioArgs {
  std::string scenario;
  uint64_t seed = 0;
  int n = 0;
  int k = 0;
  double alpha1 = 0.0;
  std::string sizes;
};

std::vector<NamedStudy> resolve_studies(const ScenarioArgs& args) {
  std::vector<NamedStudy> studies =
      named_studies(args.scenario, args.seed, args.n, args.k, args.alpha1);
  if (!args.sizes.empty())
    for (NamedStudy& s : studies)
      s.scenario.center_sizes = sizes_from_name(args.sizes);
  return studies;
}

int cmd_simulate(const ScenarioArgs& args, const std::string& output) {
  const std::vector<NamedStudy> studies = resolve_studies(args);
  Rng rng(derive_seed(args.seed, 0));
  const Dataset ds = generate(studies.front().scenario, rng);
  write_output(output, dataset_to_csv(ds));
  return kExitOk;
}

int cmd_bench(const ScenarioArgs& args, int reps, int threads,
              const std::string& output) {
  StudyTable combined;
  for (const NamedStudy& study : resolve_studies(args)) {
    const StudyTable t =
        run_study(study.scenario, study.methods, reps, threads, study.label);
    combined.rows.insert(combined.rows.end(), t.rows.begin(), t.rows.end());
  }
  write_output(output, combined.to_csv());
  if (!output.empty() && output != "-") std::cerr << combined.to_text();
  return kExitOk;
}

struct EvaluateArgs {
  std::string input, output;
  std::string model = "stratified";
  std::string penalty = "scad";
  int splits = 100;
  double train_fraction = 0.8;
  double horizon = 0.0;
  uint64_t seed = 0;
  double scad_a = 3.7;
  double mcp_gamma = 2.7;
  bool allow_extra = false;
  std::string solver = "auto";
};

int cmd_evaluate(const EvaluateArgs& args, int threads) {
  const ModelKind model = model_from_name(args.model);
  const Dataset ds = read_dataset_csv(args.input, args.allow_extra);
  PenaltySpec pen;
  pen.family = penalty_family_from_name(args.penalty);
  pen.scad_a = args.scad_a;
  pen.mcp_gamma = args.mcp_gamma;
  const SplitEvalResult r =
      split_eval(ds, model, pen, args.splits, args.train_fraction, args.seed,
                 args.horizon, threads, solver_from_name(args.solver));

  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["model"] = model_kind_name(model);
  doc["penalty"] = penalty_family_from_name(args.penalty) == PenaltyFamily::None
                       ? "none"
                       : args.penalty;
  doc["splits"] = args.splits;
  doc["train_fraction"] = args.train_fraction;
  doc["splits_used"] = r.splits_used;
  doc["failures"] = r.failures;
  doc["c_index"] = {{"mean", r.c_mean}, {"se", r.c_se}};
  doc["d_index"] = {{"mean", r.d_mean}, {"se", r.d_se}};
  if (model == ModelKind::StratifiedHigh) {
    doc["prediction_error"] = nullptr;
    doc["note"] =
        "prediction error is unavailable for the highly stratified model: "
        "its baseline cumulative subdistribution hazard is not estimable";
    std::cerr << doc["note"].get<std::string>() << "\n";
  } else if (r.pe_available) {
    doc["prediction_error"] = {{"mean", r.pe_mean}, {"se", r.pe_se}};
  } else {
    doc["prediction_error"] = nullptr;
  }
  write_output(args.output, doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_score(const std::string& table_path, const std::string& input,
              const std::string& output) {
  std::ifstream tf(table_path);
  if (!tf) throw DataError("cannot open index table: " + table_path);
  std::stringstream buf;
  buf << tf.rdbuf();
  const IndexTable table = IndexTable::from_json(buf.str());
  const NamedTable donors = read_named_csv(input);

  std::ostringstream os;
  for (const std::string& c : donors.columns) os << c << ",";
  os << "pi,index\n";
  char num[64];
  for (const std::vector<double>& row : donors.rows) {
    std::map<std::string, double> values;
    for (size_t j = 0; j < donors.columns.size(); ++j)
      values[donors.columns[j]] = row[j];
    const double pi = table.prognostic_index(values);
    for (double v : row) {
      std::snprintf(num, sizeof(num), "%.17g", v);
      os << num << ",";
    }
    std::snprintf(num, sizeof(num), "%.6f", pi);
    os << num << ",";
    std::snprintf(num, sizeof(num), "%.6f", std::exp(pi));
    os << num << "\n";
  }
  write_output(output, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized competing-risks regression for multi-center data"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (default: CRR_THREADS or all cores)");

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "fit a model on a CSV dataset");
  fit->add_option("--input", fit_args.input)->required();
  fit->add_option("--output", fit_args.output, "JSON report (default stdout)");
  fit->add_option("--model", fit_args.model,
                  "pooled | stratified | stratified-high | marginal");
  fit->add_option("--penalty", fit_args.penalty,
                  "none | lasso | alasso | scad | mcp");
  fit->add_option("--solver", fit_args.solver, "auto | lqa | cd");
  fit->add_option("--lambda", fit_args.fixed_lambda, "fixed lambda (skips the path)");
  fit->add_option("--nlambda", fit_args.nlambda);
  fit->add_option("--lambda-min-ratio", fit_args.lambda_min_ratio);
  fit->add_option("--scad-a", fit_args.scad_a);
  fit->add_option("--mcp-gamma", fit_args.mcp_gamma);
  fit->add_option("--groups", fit_args.groups,
                  "comma-separated group label per covariate column");
  fit->add_option("--meat", fit_args.meat, "corrected | simple");
  fit->add_flag("--standardize", fit_args.standardize);
  fit->add_flag("--allow-extra", fit_args.allow_extra);

  ScenarioArgs sim_args;
  std::string sim_output;
  CLI::App* sim = app.add_subcommand("simulate", "generate one benchmark dataset");
  sim->add_option("--scenario", sim_args.scenario)->required();
  sim->add_option("--seed", sim_args.seed)->required();
  sim->add_option("--n", sim_args.n);
  sim->add_option("--k", sim_args.k);
  sim->add_option("--alpha1", sim_args.alpha1);
  sim->add_option("--sizes", sim_args.sizes, "2 | 2-5 | 25 | 50");
  sim->add_option("--output", sim_output);

  ScenarioArgs bench_args;
  std::string bench_output;
  int bench_reps = 100;
  CLI::App* bench = app.add_subcommand("bench", "run a selection study");
  bench->add_option("--scenario", bench_args.scenario)->required();
  bench->add_option("--seed", bench_args.seed)->required();
  bench->add_option("--reps", bench_reps);
  bench->add_option("--n", bench_args.n);
  bench->add_option("--k", bench_args.k);
  bench->add_option("--alpha1", bench_args.alpha1);
  bench->add_option("--sizes", bench_args.sizes, "2 | 2-5 | 25 | 50");
  bench->add_option("--output", bench_output);

  EvaluateArgs eval_args;
  CLI::App* eval = app.add_subcommand("evaluate", "split-sample prognostic metrics");
  eval->add_option("--input", eval_args.input)->required();
  eval->add_option("--output", eval_args.output);
  eval->add_option("--model", eval_args.model);
  eval->add_option("--penalty", eval_args.penalty);
  eval->add_option("--solver", eval_args.solver);
  eval->add_option("--splits", eval_args.splits);
  eval->add_option("--train-fraction", eval_args.train_fraction);
  eval->add_option("--horizon", eval_args.horizon, "prediction-error horizon");
  eval->add_option("--seed", eval_args.seed)->required();
  eval->add_option("--scad-a", eval_args.scad_a);
  eval->add_option("--mcp-gamma", eval_args.mcp_gamma);
  eval->add_flag("--allow-extra", eval_args.allow_extra);

  std::string score_table, score_input, score_output;
  CLI::App* score = app.add_subcommand("score", "score a donor-factor index");
  score->add_option("--table", score_table, "coefficient table JSON")->required();
  score->add_option("--input", score_input, "donor CSV")->required();
  score->add_option("--output", score_output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*fit) return cmd_fit(fit_args);
    if (*sim) return cmd_simulate(sim_args, sim_output);
    if (*bench) return cmd_bench(bench_args, bench_reps, threads, bench_output);
    if (*eval) return cmd_evaluate(eval_args, threads);
    if (*score) return cmd_score(score_table, score_input, score_output);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitConfigError;
}
