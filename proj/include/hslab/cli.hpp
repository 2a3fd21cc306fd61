#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hslab/bounds.hpp"
#include "hslab/experiments.hpp"
#include "hslab/report_io.hpp"

namespace hslab::cli {

struct CommonOpts {
  int d = 2;
  double lambda = 0.25;
  std::vector<double> box_sides{10.0};
  std::vector<std::string> tau_balls;  // "c1,...,cd,radius"
  double tau_shell = -1.0;
  std::uint64_t seed = 0;
  std::string out_path;
  bool csv = false;
  int threads = 1;
  long volume_samples = 4096;
};

inline Box box_from_sides(int d, const std::vector<double>& sides) {
  if (sides.size() == 1) return make_cube(d, sides[0]);
  if (static_cast<int>(sides.size()) != d)
    throw std::invalid_argument("--box expects one side or exactly d sides");
  Point lo = zero_point(d), hi = zero_point(d);
  for (int i = 0; i < d; ++i) hi[i] = sides[static_cast<std::size_t>(i)];
  return make_box(lo, hi);
}

inline std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

inline Box box_from_corner_list(int d, const std::string& text) {
  const auto v = parse_csv_doubles(text);
  if (static_cast<int>(v.size()) != 2 * d)
    throw std::invalid_argument("region expects 2d comma-separated values: low coords then high");
  Point lo = zero_point(d), hi = zero_point(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = v[static_cast<std::size_t>(i)];
    hi[i] = v[static_cast<std::size_t>(i + d)];
  }
  return make_box(lo, hi);
}

inline BoundaryCondition tau_from(const CommonOpts& o) {
  BoundaryCondition tau;
  for (const auto& spec : o.tau_balls) {
    const auto v = parse_csv_doubles(spec);
    if (static_cast<int>(v.size()) != o.d + 1)
      throw std::invalid_argument("--tau-ball expects d center coordinates plus a radius");
    Point c = zero_point(o.d);
    for (int i = 0; i < o.d; ++i) c[i] = v[static_cast<std::size_t>(i)];
    tau.forbidden_balls.push_back(Ball{c, v[static_cast<std::size_t>(o.d)]});
  }
  if (o.tau_shell >= 0.0) tau.shell_width = o.tau_shell;
  return tau;
}

inline void add_common(CLI::App* cmd, CommonOpts& o, bool with_lambda = true) {
  cmd->add_option("--d", o.d, "dimension")->capture_default_str()->check(CLI::Range(1, kMaxDim));
  if (with_lambda)
    cmd->add_option("--lambda", o.lambda, "fugacity")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
  cmd->add_option("--box", o.box_sides, "domain box sides (one value or d values)")
      ->capture_default_str()
      ->expected(-1);
  cmd->add_option("--tau-ball", o.tau_balls,
                  "forbidden ball \"c1,...,cd,radius\" (repeatable)");
  cmd->add_option("--tau-shell", o.tau_shell, "forbidden shell width inside the interior");
  cmd->add_option("--seed", o.seed, "rng seed (env HSLAB_SEED, else entropy)");
  cmd->add_option("--out", o.out_path, "report sink path (default stdout)");
  cmd->add_flag("--csv", o.csv, "emit CSV instead of JSON lines");
  cmd->add_option("--threads", o.threads, "worker threads for replicas")->capture_default_str();
  cmd->add_option("--volume-samples", o.volume_samples, "hit-or-miss samples per volume estimate")
      ->capture_default_str();
}

inline std::uint64_t resolve_seed(const CLI::App* cmd, CommonOpts& o, std::ostream& out) {
  if (cmd->count("--seed") > 0) return o.seed;
  if (const char* env = std::getenv("HSLAB_SEED")) {
    o.seed = std::strtoull(env, nullptr, 10);
    return o.seed;
  }
  std::random_device rd;
  o.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  out << "# seed drawn from entropy: " << o.seed << " (pass --seed " << o.seed
      << " to reproduce)\n";
  return o.seed;
}

class ReportSink {
 public:
  ReportSink(const std::string& path, bool csv, std::ostream& fallback)
      : csv_(csv), fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open report sink " + path);
    }
    if (csv_) stream() << report_record_csv_header() << '\n';
  }

  void write(const ExperimentReport& r) {
    any_fail_ = any_fail_ || r.verdict == "fail";
    if (csv_)
      stream() << report_record_csv(r) << '\n';
    else
      write_report_record(r, stream());
  }

  bool any_fail() const { return any_fail_; }

 private:
  std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }
  bool csv_ = false;
  std::ofstream file_;
  std::ostream& fallback_;
  bool any_fail_ = false;
};

inline void print_bounds(std::ostream& out, int d, std::optional<double> lambda,
                         std::optional<double> gamma, double n, double eps) {
  char line[256];
  const double r = sphere_radius(d);
  const auto fb = fugacity_bounds(d);
  std::snprintf(line, sizeof(line), "hard sphere bounds, d = %d (r_d = %.6f)\n", d, r);
  out << line;
  out << "  fugacity threshold lower bound   2^(1-d)    = " << to_shortest_string(fb.lower_bound)
      << '\n';
  std::snprintf(line, sizeof(line),
                "  cluster expansion reference      e^-1 2^-d  = %.7f\n",
                fb.cluster_expansion_ref);
  out << line;
  std::snprintf(line, sizeof(line), "  critical density lower bound     2/(3*2^d)  = %.6f\n",
                density_bound_easy(fb.lower_bound, d));
  out << line;
  std::snprintf(line, sizeof(line), "  asymptotic density factor        W(2)       = %.4f\n",
                lambert_w(2.0));
  out << line;
  const double l = lambda ? *lambda : fb.lower_bound;
  std::snprintf(line, sizeof(line),
                "  at lambda = %g: density >= %.6f (free volume), >= %.6f (refined), c = %.6f\n",
                l, density_bound_easy(l, d), density_bound_jjp(l, d), vigoda_c(l, d));
  out << line;
  if (gamma) {
    const auto cr = contraction_rate_bound(n, d, *gamma);
    std::snprintf(line, sizeof(line),
                  "  at gamma = %g, n = %g: lambda = %.6f, drift <= %.6f, factor = %.8f, "
                  "mixing time <= %ld steps (eps = %g)\n",
                  *gamma, n, cr.lambda, cr.drift_bound, cr.per_step_factor,
                  mixing_time_bound(n, d, *gamma, eps), eps);
    out << line;
  }
  if (d == 2) {
    out << "  published d=2 comparisons: cluster expansion .1277; disagreement percolation "
           ".1367 (.28175 high-confidence); partial rejection sampling .21027 / .2344\n";
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hard sphere Markov chain laboratory"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a config file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  int exit_code = 0;

  // bounds ------------------------------------------------------------------
  auto* bounds_cmd = app.add_subcommand("bounds", "closed-form bound calculators");
  struct {
    int d = 2;
    double lambda = -1.0;
    double gamma = -1.0;
    double n = 100.0;
    double eps = 0.01;
  } bopt;
  bounds_cmd->add_option("--d", bopt.d, "dimension")->capture_default_str();
  bounds_cmd->add_option("--lambda", bopt.lambda, "fugacity for the density bounds");
  bounds_cmd->add_option("--gamma", bopt.gamma, "contraction parameter in (0,1)");
  bounds_cmd->add_option("--n", bopt.n, "volume for the mixing/contraction bounds")
      ->capture_default_str();
  bounds_cmd->add_option("--eps", bopt.eps, "target accuracy")->capture_default_str();
  bounds_cmd->callback([&] {
    print_bounds(out, bopt.d,
                 bopt.lambda >= 0.0 ? std::optional<double>(bopt.lambda) : std::nullopt,
                 bopt.gamma >= 0.0 ? std::optional<double>(bopt.gamma) : std::nullopt, bopt.n,
                 bopt.eps);
  });

  // sample ------------------------------------------------------------------
  auto* sample_cmd = app.add_subcommand("sample", "exact rejection sampler");
  CommonOpts sopt;
  long sample_draws = 100;
  long sample_budget = 1000000;
  std::string sample_snapshot;
  add_common(sample_cmd, sopt);
  sample_cmd->add_option("--draws", sample_draws, "number of exact draws")->capture_default_str();
  sample_cmd->add_option("--max-attempts", sample_budget, "rejection budget per draw")
      ->capture_default_str();
  sample_cmd->add_option("--snapshot-out", sample_snapshot, "write the last draw here");
  sample_cmd->callback([&] {
    const auto seed = resolve_seed(sample_cmd, sopt, out);
    const auto params =
        make_model_params(sopt.d, sopt.lambda, box_from_sides(sopt.d, sopt.box_sides),
                          tau_from(sopt));
    RngStream rng(seed, 0);
    long attempts_total = 0;
    double count_sum = 0.0;
    std::optional<ChainState> last;
    for (long i = 0; i < sample_draws; ++i) {
      auto s = sample_hard_sphere_rejection(params, rng, sample_budget);
      attempts_total += s.attempts;
      count_sum += s.config.size();
      if (i + 1 == sample_draws && !sample_snapshot.empty()) {
        ChainState cs = make_chain_state(params, rng);
        for (const Point& p : s.config.centers()) cs.config.add(p);
        last = std::move(cs);
      }
    }
    const double rate = static_cast<double>(sample_draws) / static_cast<double>(attempts_total);
    ExperimentReport rep;
    rep.name = "rejection_sampler";
    rep.add_param("d", static_cast<long>(sopt.d));
    rep.add_param("lambda", sopt.lambda);
    rep.add_param("draws", sample_draws);
    rep.add_param("attempts", attempts_total);
    rep.add_param("mean_count", count_sum / static_cast<double>(sample_draws));
    rep.estimate = rate;
    rep.std_error = std::sqrt(rate * (1.0 - rate) / static_cast<double>(attempts_total));
    rep.bound = 0.0;
    rep.comparison = ">=";
    rep.replicas = sample_draws;
    rep.seed = seed;
    rep.verdict = judge_verdict(rep.estimate, rep.std_error, rep.bound, rep.comparison);
    ReportSink sink(sopt.out_path, sopt.csv, out);
    sink.write(rep);
    if (last) write_snapshot(*last, seed, sample_snapshot);
    if (sink.any_fail()) exit_code = 1;
  });

  // chain -------------------------------------------------------------------
  auto* chain_cmd = app.add_subcommand("chain", "run a Markov chain");
  CommonOpts copt;
  std::string chain_kernel = "single-center";
  double chain_l_over_r = 2.0;
  long chain_steps = 100000, chain_burn = -1, chain_stride = 100;
  std::string chain_in, chain_out_snap, chain_class = "omega";
  add_common(chain_cmd, copt);
  chain_cmd->add_option("--kernel", chain_kernel, "single-center | heat-bath")
      ->capture_default_str()
      ->check(CLI::IsMember({"single-center", "heat-bath"}));
  chain_cmd->add_option("--L-over-r", chain_l_over_r, "heat-bath update radius / r")
      ->capture_default_str();
  chain_cmd->add_option("--steps", chain_steps, "steps after burn-in")->capture_default_str();
  chain_cmd->add_option("--burn-in", chain_burn, "burn-in steps (default 10 n (1+lambda))");
  chain_cmd->add_option("--stride", chain_stride, "observer stride")->capture_default_str();
  chain_cmd->add_option("--snapshot-in", chain_in, "start from this snapshot");
  chain_cmd->add_option("--snapshot-out", chain_out_snap, "write the final state here");
  chain_cmd->add_option("--state-class", chain_class, "omega | omega-star")
      ->capture_default_str()
      ->check(CLI::IsMember({"omega", "omega-star"}));
  chain_cmd->callback([&] {
    const auto seed = resolve_seed(chain_cmd, copt, out);
    ChainState state = [&] {
      if (!chain_in.empty()) return read_snapshot(chain_in);
      const auto params =
          make_model_params(copt.d, copt.lambda, box_from_sides(copt.d, copt.box_sides),
                            tau_from(copt));
      return make_chain_state(params, RngStream(seed, 0),
                              chain_class == "omega" ? StateClass::omega
                                                     : StateClass::omega_star);
    }();
    const double n = state.params.domain.volume();
    const double update_radius = chain_l_over_r * state.params.radius;
    auto kernel = [&](ChainState& s) {
      if (chain_kernel == "single-center")
        single_center_step(s);
      else
        heat_bath_step(s, update_radius);
    };
    const long burn = chain_burn >= 0 ? chain_burn : default_burn_in(n, state.params.lambda);
    run_chain(state, burn, kernel);
    detail::MeanAccumulator density;
    run_chain(
        state, chain_steps, kernel,
        [&](const ChainState& s) { density.add(static_cast<double>(s.config.size()) / n); },
        chain_stride);
    ExperimentReport rep;
    rep.name = "chain_density";
    rep.add_param("d", static_cast<long>(state.params.dim));
    rep.add_param("lambda", state.params.lambda);
    rep.add_param("kernel", chain_kernel);
    if (chain_kernel == "heat-bath") rep.add_param("update_radius", update_radius);
    rep.add_param("steps", chain_steps);
    rep.add_param("burn_in", burn);
    rep.add_param("stride", chain_stride);
    rep.estimate = density.mean();
    rep.std_error = density.std_error();
    rep.bound = 0.0;
    rep.comparison = ">=";
    rep.replicas = 1;
    rep.seed = seed;
    rep.verdict = judge_verdict(rep.estimate, rep.std_error, rep.bound, rep.comparison);
    ReportSink sink(copt.out_path, copt.csv, out);
    sink.write(rep);
    if (!chain_out_snap.empty()) write_snapshot(state, seed, chain_out_snap);
    if (sink.any_fail()) exit_code = 1;
  });

  // contraction ---------------------------------------------------------------
  auto* contraction_cmd = app.add_subcommand("contraction", "edge-drift certification");
  CommonOpts xopt;
  ContractionOptions xdrv;
  add_common(contraction_cmd, xopt, /*with_lambda=*/false);
  contraction_cmd->add_option("--gamma", xdrv.gamma, "contraction parameter in (0,1)")
      ->required();
  contraction_cmd->add_option("--trials", xdrv.trials, "independent edge trials")
      ->capture_default_str();
  contraction_cmd->add_option("--burn-in", xdrv.burn_in, "burn-in steps per trial");
  contraction_cmd->add_option("--outer-samples", xdrv.outer_samples, "update-point samples")
      ->capture_default_str();
  contraction_cmd->add_option("--inner-samples", xdrv.inner_samples, "nested volume samples")
      ->capture_default_str();
  contraction_cmd->callback([&] {
    if (!(xdrv.gamma > 0.0 && xdrv.gamma < 1.0))
      throw std::invalid_argument("gamma must lie in (0,1)");
    xdrv.dim = xopt.d;
    xdrv.box = box_from_sides(xopt.d, xopt.box_sides);
    xdrv.tau = tau_from(xopt);
    xdrv.volume_samples = xopt.volume_samples;
    xdrv.seed = resolve_seed(contraction_cmd, xopt, out);
    xdrv.threads = xopt.threads;
    auto res = contraction_experiment(xdrv);
    res.report.add_param("case_delete_extra", res.breakdown.a1);
    res.report.add_param("case_add_smaller_only", res.breakdown.a2);
    res.report.add_param("case_add_both", res.breakdown.a3);
    res.report.add_param("case_delete_elsewhere", res.breakdown.a4);
    ReportSink sink(xopt.out_path, xopt.csv, out);
    sink.write(res.report);
    if (sink.any_fail()) exit_code = 1;
  });

  // disagreement --------------------------------------------------------------
  auto* disagreement_cmd =
      app.add_subcommand("disagreement", "coupled-chain disagreement propagation");
  CommonOpts dopt;
  DisagreementOptions ddrv;
  std::string region_a_spec, region_b_spec;
  add_common(disagreement_cmd, dopt);
  disagreement_cmd
      ->add_option("--region-a", region_a_spec, "initial disagreement box: low...,high...")
      ->required();
  disagreement_cmd
      ->add_option("--region-b", region_b_spec, "observation box: low...,high...")
      ->required();
  disagreement_cmd->add_option("--eta", ddrv.eta, "time scale (default: admissible maximum)");
  disagreement_cmd->add_option("--trials", ddrv.trials, "coupled trials")->capture_default_str();
  disagreement_cmd->add_option("--burn-in", ddrv.burn_in, "burn-in steps per trial");
  disagreement_cmd->callback([&] {
    ddrv.dim = dopt.d;
    ddrv.lambda = dopt.lambda;
    ddrv.box = box_from_sides(dopt.d, dopt.box_sides);
    ddrv.region_a = box_from_corner_list(dopt.d, region_a_spec);
    ddrv.region_b = box_from_corner_list(dopt.d, region_b_spec);
    ddrv.tau = tau_from(dopt);
    ddrv.seed = resolve_seed(disagreement_cmd, dopt, out);
    ddrv.threads = dopt.threads;
    ReportSink sink(dopt.out_path, dopt.csv, out);
    sink.write(disagreement_experiment(ddrv));
    if (sink.any_fail()) exit_code = 1;
  });

  // density ---------------------------------------------------------------
  auto* density_cmd = app.add_subcommand("density", "packing density vs lower bounds");
  CommonOpts nopt;
  DensityOptions ndrv;
  std::string lambda_list = "0.1,0.25,0.5";
  std::string sides_list = "10";
  add_common(density_cmd, nopt, /*with_lambda=*/false);
  density_cmd->add_option("--lambda-list", lambda_list, "comma-separated fugacities")
      ->capture_default_str();
  density_cmd->add_option("--sides-list", sides_list, "comma-separated box sides")
      ->capture_default_str();
  density_cmd->add_option("--steps", ndrv.steps, "measurement steps per replica")
      ->capture_default_str();
  density_cmd->add_option("--burn-in", ndrv.burn_in, "burn-in steps");
  density_cmd->add_option("--replicas", ndrv.replicas, "independent replicas")
      ->capture_default_str();
  density_cmd->callback([&] {
    ndrv.dim = nopt.d;
    ndrv.lambdas = parse_csv_doubles(lambda_list);
    ndrv.box_sides = parse_csv_doubles(sides_list);
    ndrv.seed = resolve_seed(density_cmd, nopt, out);
    ndrv.threads = nopt.threads;
    ReportSink sink(nopt.out_path, nopt.csv, out);
    for (const auto& rep : density_sweep(ndrv)) sink.write(rep);
    if (sink.any_fail()) exit_code = 1;
  });

  // stationarity ------------------------------------------------------------
  auto* stationarity_cmd =
      app.add_subcommand("stationarity", "chain law vs small-domain oracle");
  CommonOpts topt;
  StationarityOptions tdrv;
  std::string st_kernel = "single-center";
  double st_l_over_r = 4.0;
  add_common(stationarity_cmd, topt);
  stationarity_cmd->add_option("--kernel", st_kernel, "single-center | heat-bath")
      ->capture_default_str()
      ->check(CLI::IsMember({"single-center", "heat-bath"}));
  stationarity_cmd->add_option("--L-over-r", st_l_over_r, "heat-bath update radius / r")
      ->capture_default_str();
  stationarity_cmd->add_option("--steps", tdrv.steps, "measurement steps")->capture_default_str();
  stationarity_cmd->add_option("--stride", tdrv.stride, "sample stride")->capture_default_str();
  stationarity_cmd->add_option("--burn-in", tdrv.burn_in, "burn-in steps");
  stationarity_cmd->add_option("--bins", tdrv.bins_per_axis, "position bins per axis")
      ->capture_default_str();
  stationarity_cmd->add_option("--oracle-cells", tdrv.oracle_cells, "quadrature cells per axis")
      ->capture_default_str();
  stationarity_cmd->add_option("--tolerance", tdrv.tolerance, "pass threshold on TV")
      ->capture_default_str();
  stationarity_cmd->callback([&] {
    tdrv.dim = topt.d;
    tdrv.lambda = topt.lambda;
    tdrv.box = box_from_sides(topt.d, topt.box_sides);
    tdrv.tau = tau_from(topt);
    tdrv.kernel =
        st_kernel == "single-center" ? KernelKind::single_center : KernelKind::heat_bath;
    tdrv.update_radius = st_l_over_r * sphere_radius(topt.d);
    tdrv.seed = resolve_seed(stationarity_cmd, topt, out);
    ReportSink sink(topt.out_path, topt.csv, out);
    sink.write(stationarity_check(tdrv));
    if (sink.any_fail()) exit_code = 1;
  });

  // ssm-scan ------------------------------------------------------------------
  auto* ssm_cmd = app.add_subcommand("ssm-scan", "projected influence of boundary differences");
  CommonOpts mopt;
  SsmOptions mdrv;
  double ssm_sub_side = 2.0;
  std::string ssm_distances = "1,2,3";
  add_common(ssm_cmd, mopt);
  ssm_cmd->add_option("--sub-side", ssm_sub_side, "projection sub-box side")
      ->capture_default_str();
  ssm_cmd->add_option("--distances", ssm_distances,
                      "comma-separated separations (units of r)")
      ->capture_default_str();
  ssm_cmd->add_option("--samples-per-pair", mdrv.samples_per_pair, "samples per law")
      ->capture_default_str();
  ssm_cmd->add_option("--grid", mdrv.grid_per_axis, "occupancy grid per axis")
      ->capture_default_str();
  ssm_cmd->callback([&] {
    mdrv.dim = mopt.d;
    mdrv.lambda = mopt.lambda;
    mdrv.box = box_from_sides(mopt.d, mopt.box_sides);
    mdrv.seed = resolve_seed(ssm_cmd, mopt, out);
    mdrv.threads = mopt.threads;
    const double r = sphere_radius(mopt.d);
    const auto interior = box_interior(mdrv.box, r);
    if (!interior) throw std::invalid_argument("ssm-scan: domain interior is empty");
    // sub-box anchored just inside the interior's low corner
    Point lo = interior->low, hi = interior->low;
    for (int i = 0; i < mopt.d; ++i) hi[i] = lo[i] + ssm_sub_side;
    mdrv.subregion = make_box(lo, hi);
    for (double s_over_r : parse_csv_doubles(ssm_distances)) {
      const double s = s_over_r * r;
      Point c = mdrv.subregion.center();
      c[0] = mdrv.subregion.high[0] + s + 2.0 * r;  // ball separated from the sub-box by s
      if (!inside_margin(mdrv.box, c, r))
        throw std::invalid_argument("ssm-scan: separation " + to_shortest_string(s_over_r) +
                                    "r places the forbidden ball outside the interior");
      SsmPair pair;
      pair.tau_a.forbidden_balls.push_back(Ball{c, 2.0 * r});
      mdrv.pairs.push_back(std::move(pair));  // tau_b stays free
    }
    ReportSink sink(mopt.out_path, mopt.csv, out);
    for (const auto& rep : spatial_mixing_scan(mdrv)) sink.write(rep);
    if (sink.any_fail()) exit_code = 1;
  });

  // free-volume ---------------------------------------------------------------
  auto* fv_cmd = app.add_subcommand("free-volume", "density = lambda * free volume identity");
  CommonOpts fopt;
  FreeVolumeOptions fdrv;
  add_common(fv_cmd, fopt);
  fv_cmd->add_option("--steps", fdrv.steps, "measurement steps per replica")
      ->capture_default_str();
  fv_cmd->add_option("--stride", fdrv.stride, "sample stride")->capture_default_str();
  fv_cmd->add_option("--burn-in", fdrv.burn_in, "burn-in steps");
  fv_cmd->add_option("--replicas", fdrv.replicas, "independent replicas")->capture_default_str();
  fv_cmd->callback([&] {
    fdrv.dim = fopt.d;
    fdrv.lambda = fopt.lambda;
    fdrv.box = box_from_sides(fopt.d, fopt.box_sides);
    fdrv.tau = tau_from(fopt);
    fdrv.volume_samples = fopt.volume_samples;
    fdrv.seed = resolve_seed(fv_cmd, fopt, out);
    fdrv.threads = fopt.threads;
    ReportSink sink(fopt.out_path, fopt.csv, out);
    sink.write(free_volume_identity_check(fdrv));
    if (sink.any_fail()) exit_code = 1;
  });

  std::vector<const char*> argv;
  argv.push_back("hslab");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}

}  // namespace hslab::cli
