#pragma once

// Experiment configuration and runners behind the CLI: invariant probes,
// construction reports, the matched-budget approximation comparison, flow
// traces, the critical-point campaign, and density diagnostics. Every
// runner returns named checks plus CSV report files; identical config and
// seed give byte-identical files.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "crnet/constructions.hpp"
#include "crnet/csv.hpp"
#include "crnet/ctensor.hpp"
#include "crnet/dynamics.hpp"
#include "crnet/networks.hpp"
#include "crnet/radial.hpp"
#include "crnet/rng.hpp"
#include "crnet/symmetry.hpp"
#include "crnet/training.hpp"

namespace crnet {

struct ExperimentConfig {
  std::string kind = "probe";
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;  // 0: CRNET_THREADS env or hardware count

  // Radial target.
  int d = 2;
  int shells = 8;
  double c2 = 1.0;
  std::vector<int> eps;  // empty: alternating starting at +1

  // Density experiment.
  std::vector<int> density_dims = {2, 4, 6};
  int density_samples = 1000000;
  int ks_samples = 100000;

  // Separation experiment. Budgets are real-parameter counts and must be
  // divisible by 2 (d + 2) and (2 d + 2) for exact parity.
  std::vector<int> budgets = {120, 240, 480};
  int exp_seeds = 5;
  int train_samples = 20000;
  int eval_samples = 100000;
  int train_steps = 3000;
  double lr = 0.05;
  double out_init = 0.05;

  // Flow experiment.
  std::vector<int> widths = {8, 8};
  int flow_samples = 16;
  double step_size = 1e-3;
  int steps = 100;
  int record_every = 5;
  double eta = 1.0;

  // Symmetry campaign. separation_factor is frozen from pilot runs.
  int sym_seeds = 10;
  int sym_width = 4;
  int sym_data = 16;
  double g0 = 1e-6;
  double separation_factor = 100.0;
  std::vector<std::array<double, 2>> rho_values = {
      {0.3, 0.0}, {-0.7, 0.0}, {0.3, 0.5}, {0.3, -0.5}, {-0.7, 0.4}, {0.0, 0.25}};

  // Construction experiment.
  std::vector<double> ridge_deltas = {0.1, 0.05, 0.02};
  std::vector<int> gadget_sectors = {4, 8, 16};
  double radial_delta = 0.2;

  std::vector<int> target_eps() const {
    if (!eps.empty()) return eps;
    std::vector<int> e(shells);
    for (int i = 0; i < shells; ++i) e[i] = i % 2 == 0 ? 1 : -1;
    return e;
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"kind", c.kind},
                     {"seed", c.seed},
                     {"out_dir", c.out_dir},
                     {"threads", c.threads},
                     {"d", c.d},
                     {"shells", c.shells},
                     {"c2", c.c2},
                     {"eps", c.eps},
                     {"density_dims", c.density_dims},
                     {"density_samples", c.density_samples},
                     {"ks_samples", c.ks_samples},
                     {"budgets", c.budgets},
                     {"exp_seeds", c.exp_seeds},
                     {"train_samples", c.train_samples},
                     {"eval_samples", c.eval_samples},
                     {"train_steps", c.train_steps},
                     {"lr", c.lr},
                     {"out_init", c.out_init},
                     {"widths", c.widths},
                     {"flow_samples", c.flow_samples},
                     {"step_size", c.step_size},
                     {"steps", c.steps},
                     {"record_every", c.record_every},
                     {"eta", c.eta},
                     {"sym_seeds", c.sym_seeds},
                     {"sym_width", c.sym_width},
                     {"sym_data", c.sym_data},
                     {"g0", c.g0},
                     {"separation_factor", c.separation_factor},
                     {"rho_values", c.rho_values},
                     {"ridge_deltas", c.ridge_deltas},
                     {"gadget_sectors", c.gadget_sectors},
                     {"radial_delta", c.radial_delta}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  ExperimentConfig defaults;
  auto get = [&](const char* key, auto& field, const auto& fallback) {
    field = j.contains(key) ? j.at(key).get<std::decay_t<decltype(field)>>() : fallback;
  };
  get("kind", c.kind, defaults.kind);
  get("seed", c.seed, defaults.seed);
  get("out_dir", c.out_dir, defaults.out_dir);
  get("threads", c.threads, defaults.threads);
  get("d", c.d, defaults.d);
  get("shells", c.shells, defaults.shells);
  get("c2", c.c2, defaults.c2);
  get("eps", c.eps, defaults.eps);
  get("density_dims", c.density_dims, defaults.density_dims);
  get("density_samples", c.density_samples, defaults.density_samples);
  get("ks_samples", c.ks_samples, defaults.ks_samples);
  get("budgets", c.budgets, defaults.budgets);
  get("exp_seeds", c.exp_seeds, defaults.exp_seeds);
  get("train_samples", c.train_samples, defaults.train_samples);
  get("eval_samples", c.eval_samples, defaults.eval_samples);
  get("train_steps", c.train_steps, defaults.train_steps);
  get("lr", c.lr, defaults.lr);
  get("out_init", c.out_init, defaults.out_init);
  get("widths", c.widths, defaults.widths);
  get("flow_samples", c.flow_samples, defaults.flow_samples);
  get("step_size", c.step_size, defaults.step_size);
  get("steps", c.steps, defaults.steps);
  get("record_every", c.record_every, defaults.record_every);
  get("eta", c.eta, defaults.eta);
  get("sym_seeds", c.sym_seeds, defaults.sym_seeds);
  get("sym_width", c.sym_width, defaults.sym_width);
  get("sym_data", c.sym_data, defaults.sym_data);
  get("g0", c.g0, defaults.g0);
  get("separation_factor", c.separation_factor, defaults.separation_factor);
  get("rho_values", c.rho_values, defaults.rho_values);
  get("ridge_deltas", c.ridge_deltas, defaults.ridge_deltas);
  get("gadget_sectors", c.gadget_sectors, defaults.gadget_sectors);
  get("radial_delta", c.radial_delta, defaults.radial_delta);
}

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string note;
};

struct ExperimentReport {
  std::vector<CheckResult> checks;
  std::map<std::string, std::string> files;  // relative name -> CSV content

  bool ok() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return !checks.empty();
  }

  void add(const std::string& name, bool pass, double measured, double threshold,
           const std::string& note = "") {
    checks.push_back({name, pass, measured, threshold, note});
  }

  void write_files(const std::string& out_dir) const {
    for (const auto& [name, content] : files) {
      const std::filesystem::path p = std::filesystem::path(out_dir) / name;
      std::filesystem::create_directories(p.parent_path());
      std::ofstream out(p, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + p.string());
      out << content;
    }
  }
};

inline int thread_budget(int requested) {
  if (const char* env = std::getenv("CRNET_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on a fixed pool; outputs must go to
// pre-allocated per-index slots so the schedule cannot affect results.
template <typename Fn>
void parallel_for(int n, int threads, const Fn& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Density models are expensive; share per dimension within the process.
inline const DensityModel& cached_density_model(int n) {
  static std::map<int, std::unique_ptr<DensityModel>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_unique<DensityModel>(n)).first;
  }
  return *it->second;
}

// ---- density ----

inline ExperimentReport run_density(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  CsvWriter csv("density.v1", {"n", "ball_radius", "r_trunc", "truncated_mass",
                               "phi2_mc", "phi2_stderr", "ks", "tail_estimate"});
  for (int n : cfg.density_dims) {
    const DensityModel& m = cached_density_model(n);
    const auto est = mc_phi2_integral(m, cfg.density_samples, Rng::derive(cfg.seed, n));
    const auto pts = sample_mu(m, cfg.ks_samples, Rng::derive(cfg.seed, 100 + n));
    std::vector<double> radii(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) radii[i] = norm2(pts[i]);
    std::sort(radii.begin(), radii.end());
    double ks = 0.0;
    for (size_t i = 0; i < radii.size(); ++i) {
      const double fq = m.radial_cdf(radii[i]) / m.truncated_mass();
      ks = std::max(ks, std::abs(fq - static_cast<double>(i + 1) / radii.size()));
      ks = std::max(ks, std::abs(fq - static_cast<double>(i) / radii.size()));
    }
    csv.cell(n).cell(m.ball_radius()).cell(m.r_trunc()).cell(m.truncated_mass());
    csv.cell(est.value).cell(est.stderr_).cell(ks).cell(m.tail_estimate());
    csv.end_row();
    rep.add("density_norm_n" + std::to_string(n), std::abs(est.value - 1.0) <= 0.02,
            est.value, 0.02, "target 1 within 2%");
    rep.add("radial_ks_n" + std::to_string(n), ks < 0.02, ks, 0.02);
  }
  rep.files["density.csv"] = csv.str();
  return rep;
}

// ---- probe (invariant battery) ----

inline ExperimentReport run_probe(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  Rng rng(cfg.seed);

  {  // activation identities
    double worst_h = 0.0, worst_g = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const cplx z(rng.normal(), rng.normal());
      const double alpha = std::exp(rng.normal());
      worst_h = std::max(worst_h, std::abs(zrelu(alpha * z) - alpha * zrelu(z)));
      worst_g = std::max(worst_g, std::abs(zrelu(z) - zrelu_wirtinger(z).dz * z));
    }
    rep.add("zrelu_homogeneity", worst_h <= 1e-12, worst_h, 1e-12);
    rep.add("zrelu_gate_identity", worst_g <= 1e-12, worst_g, 1e-12);
  }

  {  // gradients vs finite differences (spot check)
    double worst = 0.0;
    int done = 0;
    while (done < 10) {
      CRNetwork net = random_cr_network(2, {3, 2}, rng);
      RVector x(4);
      for (double& v : x) v = rng.normal();
      CRTrace tr = forward_cr_trace(net, x);
      bool near_gate = false;
      for (size_t l = 0; l + 1 < tr.a.size(); ++l) {
        for (const cplx& a : tr.a[l]) {
          if (std::min(std::abs(a.real()), std::abs(a.imag())) < 1e-4 * std::abs(a)) {
            near_gate = true;
          }
        }
      }
      if (near_gate) continue;
      ++done;
      const auto g = grad_cr(net, x);
      for (size_t l = 0; l < net.layers.size(); ++l) {
        for (size_t k = 0; k < net.layers[l].data().size(); ++k) {
          for (int part = 0; part < 2; ++part) {
            const double step = 1e-6;
            CRNetwork p = net, q = net;
            const cplx dz = part == 0 ? cplx(step, 0.0) : cplx(0.0, step);
            p.layers[l].data()[k] += dz;
            q.layers[l].data()[k] -= dz;
            const double fd = (forward_cr(p, x) - forward_cr(q, x)) / (2.0 * step);
            const double an = part == 0 ? g[l].data()[k].real() : g[l].data()[k].imag();
            worst = std::max(worst, std::abs(an - fd) /
                                        std::max({1e-3, std::abs(an), std::abs(fd)}));
          }
        }
      }
    }
    rep.add("wirtinger_grad_vs_fd", worst < 1e-5, worst, 1e-5);
  }

  {  // normalization matrix identities
    double worst = 0.0;
    for (int n : {2, 8, 64}) {
      for (int repn = 0; repn < 10; ++repn) {
        const RVector v = random_unit_vector(rng, n);
        const RMatrix s = smatrix(v);
        const RVector sv = matvec(s, v);
        for (double x : sv) worst = std::max(worst, std::abs(x));
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += s(i, k) * s(k, j);
            worst = std::max(worst, std::abs(acc - s(i, j)));
          }
        }
      }
    }
    rep.add("smatrix_identities", worst <= 1e-12, worst, 1e-12);
  }

  {  // flow tangency + growth spread on a short run
    CRNetwork net = random_cr_network(cfg.d, {4, 4}, rng);
    Dataset data;
    for (int i = 0; i < 8; ++i) {
      RVector x(2 * cfg.d);
      for (double& v : x) v = rng.normal();
      data.x.push_back(x);
      data.y.push_back(rng.sign());
    }
    auto st = cr_flow_state(net);
    const auto tr = integrate_flow(st, data, cfg.eta, cfg.step_size, 20,
                                   Integrator::kRk4, 2);
    const double spread = growth_rate_spread(tr);
    rep.add("equal_growth_spread", spread < 1e-8, spread, 1e-8);
  }

  CsvWriter csv("probe.v1", {"check", "pass", "measured", "threshold"});
  for (const auto& c : rep.checks) {
    csv.cell(c.name).cell(c.pass ? 1 : 0).cell(c.measured).cell(c.threshold);
    csv.end_row();
  }
  rep.files["probe.csv"] = csv.str();
  return rep;
}

// ---- construct ----

inline ExperimentReport run_construct(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  CsvWriter csv("construct.v1",
                {"item", "requested_delta", "achieved", "width", "budget"});

  const auto abs_fn = [](double x) { return std::abs(x); };
  for (double delta : cfg.ridge_deltas) {
    const auto ridge = build_1d_relu(abs_fn, 1.0, 1.0, delta);
    const double err = measure_sup_error_1d(ridge, abs_fn, -1.0, 1.0);
    const double budget = 2.0 * 1.0 * 1.0 / delta;
    csv.cell("ridge_abs").cell(delta).cell(err).cell(ridge.width()).cell(budget);
    csv.end_row();
    rep.add("ridge_abs_delta_" + fmt17(delta),
            err <= delta && ridge.width() <= budget, err, delta);
  }

  for (int m : cfg.gadget_sectors) {
    const auto gadget = build_modulus_gadget(m, 4.0);
    const double sweep = measure_gadget_sweep(gadget, 1.0, 10000);
    csv.cell("modulus_gadget_m" + std::to_string(m))
        .cell(gadget.rel_error_bound)
        .cell(sweep)
        .cell(gadget.hidden_units)
        .cell(0.0);
    csv.end_row();
    rep.add("gadget_m" + std::to_string(m), sweep <= gadget.rel_error_bound, sweep,
            gadget.rel_error_bound);
  }

  {
    const RadialTarget target(cfg.d, cfg.shells, cfg.c2, cfg.target_eps());
    const LipschitzSurrogate surr(target);
    const auto gfun = [&](double s) { return surr.eval_radius(s); };
    const double lip = surr.lipschitz_bound();
    const double lo = target.base(), hi = 2.0 * target.base();
    const auto approx =
        build_radial_cr(gfun, lip, lo, hi, cfg.radial_delta, cfg.d);
    const double err = measure_radial_sup_error(approx, gfun, lo, hi, cfg.d,
                                                100000, Rng::derive(cfg.seed, 1));
    csv.cell("radial_surrogate").cell(cfg.radial_delta).cell(err)
        .cell(approx.hidden_units).cell(approx.width_budget);
    csv.end_row();
    rep.add("radial_surrogate_sup", err <= cfg.radial_delta, err, cfg.radial_delta);
    const double lemma_width =
        2.0 * std::pow(cfg.c2, 1.5) * lip * std::pow(2.0 * cfg.d, 1.75) /
        cfg.radial_delta;
    rep.add("radial_width_budget",
            approx.hidden_units <= std::min(approx.width_budget, lemma_width),
            approx.hidden_units, std::min(approx.width_budget, lemma_width));
  }

  rep.files["construct.csv"] = csv.str();
  return rep;
}

// ---- flow ----

inline ExperimentReport run_flow(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  Rng rng(cfg.seed);
  Dataset data;
  for (int i = 0; i < cfg.flow_samples; ++i) {
    RVector x(2 * cfg.d);
    for (double& v : x) v = rng.normal();
    data.x.push_back(x);
    data.y.push_back(rng.sign());
  }

  CRNetwork cnet = random_cr_network(cfg.d, cfg.widths, rng);
  auto cstate = cr_flow_state(cnet);
  const auto ctrace = integrate_flow(cstate, data, cfg.eta, cfg.step_size,
                                     cfg.steps, Integrator::kRk4, cfg.record_every);
  rep.files["flow_complex.csv"] = flow_trace_csv(ctrace);
  const double cspread = growth_rate_spread(ctrace);
  rep.add("flow_complex_equal_growth", !ctrace.diverged && cspread < 1e-8, cspread,
          1e-8);

  RNetwork rnet = random_r_network(2 * cfg.d, cfg.widths, rng);
  auto rstate = r_flow_state(rnet);
  const auto rtrace = integrate_flow(rstate, data, cfg.eta, cfg.step_size,
                                     cfg.steps, Integrator::kRk4, cfg.record_every);
  rep.files["flow_real.csv"] = flow_trace_csv(rtrace);
  const double rspread = growth_rate_spread(rtrace);
  rep.add("flow_real_equal_growth", !rtrace.diverged && rspread < 1e-8, rspread, 1e-8);

  double cnorm_dev = 0.0;
  for (const auto& v : cstate.p.dirs) {
    for (int r = 0; r < v.rows(); ++r) {
      cnorm_dev = std::max(cnorm_dev, std::abs(detail::row_norm(v, r) - 1.0));
    }
  }
  rep.add("flow_unit_directions", cnorm_dev < 1e-8, cnorm_dev, 1e-8);
  return rep;
}

// ---- symmetry campaign ----

struct SymmetryRun {
  int seed_index = 0;
  bool trained = false;
  double train_loss = 0.0;
  double before_norm = 0.0;
  std::vector<CriticalPointReport> probes;
  double real_max = 0.0;
  double complex_min = 0.0;
  bool dichotomy = false;
};

inline SymmetryRun symmetry_run(const ExperimentConfig& cfg, int seed_index) {
  SymmetryRun run;
  run.seed_index = seed_index;
  for (int attempt = 0; attempt < 5 && !run.trained; ++attempt) {
    Rng rng(Rng::derive(cfg.seed, 17 * seed_index + attempt));
    Dataset data;
    for (int i = 0; i < cfg.sym_data; ++i) {
      RVector x(2 * cfg.d);
      for (double& v : x) v = rng.normal();
      data.x.push_back(x);
      data.y.push_back(rng.sign());
    }
    CRNetwork net = random_cr_network(cfg.d, {cfg.sym_width}, rng);
    const auto res = train_exp_loss(net, data, 0.5, 400000, cfg.g0 / 5.0);
    if (!res.reached_target) continue;
    CRNetwork dup = duplicate_unit(net, 0, 0);
    std::vector<CMatrix> g;
    loss_gradient_cr(dup, data, &g);
    const double before = gradient_norm(g);
    if (before >= cfg.g0) continue;
    run.trained = true;
    run.train_loss = res.loss;
    run.before_norm = before;
    const int i = 0, j = dup.layers[0].rows() - 1;
    run.real_max = 0.0;
    run.complex_min = 1e300;
    for (const auto& [rr, ri] : cfg.rho_values) {
      const auto probe = critical_point_probe(dup, data, 0, i, j, cplx(rr, ri), cfg.g0);
      run.probes.push_back(probe);
      if (ri == 0.0) {
        run.real_max = std::max(run.real_max, probe.after_norm);
      } else if (std::abs(ri) >= 0.25) {
        run.complex_min = std::min(run.complex_min, probe.after_norm);
      }
    }
    run.dichotomy = run.real_max < 10.0 * cfg.g0 &&
                    run.complex_min > cfg.separation_factor * run.real_max;
  }
  return run;
}

inline ExperimentReport run_symmetry(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  std::vector<SymmetryRun> runs(cfg.sym_seeds);
  parallel_for(cfg.sym_seeds, thread_budget(cfg.threads),
               [&](int i) { runs[i] = symmetry_run(cfg, i); });

  CsvWriter csv("symmetry_probe.v1",
                {"seed", "rho_re", "rho_im", "before_norm", "after_norm",
                 "gate_stable_fraction", "verdict"});
  int dichotomy_count = 0, trained_count = 0, stable_majority_rows = 0, rows = 0;
  for (const auto& run : runs) {
    trained_count += run.trained ? 1 : 0;
    dichotomy_count += run.dichotomy ? 1 : 0;
    for (const auto& p : run.probes) {
      csv.cell(run.seed_index).cell(p.rho.real()).cell(p.rho.imag());
      csv.cell(p.before_norm).cell(p.after_norm).cell(p.gate_stable_fraction);
      csv.cell(p.verdict);
      csv.end_row();
      ++rows;
      stable_majority_rows += p.gate_stable_fraction >= 0.5 ? 1 : 0;
    }
  }
  rep.files["symmetry_probe.csv"] = csv.str();
  rep.add("critical_points_trained", trained_count == cfg.sym_seeds,
          trained_count, cfg.sym_seeds);
  rep.add("lemma12_dichotomy_runs", dichotomy_count >= cfg.sym_seeds - 1,
          dichotomy_count, cfg.sym_seeds - 1,
          "complex-rho gradient exceeds real-rho by configured factor");
  rep.add("gate_stable_majority_rows",
          rows == 0 || stable_majority_rows >= (9 * rows) / 10,
          stable_majority_rows, (9 * rows) / 10.0);
  return rep;
}

// ---- separation ----

struct SeparationCell {
  int budget = 0;
  int seed_index = 0;
  std::string family;
  int params = 0;
  int hidden = 0;
  double train_mse = 0.0;
  double l2 = 0.0;
  double l2_stderr = 0.0;
};

inline ExperimentReport run_separation(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  if (cfg.d > 4) throw std::invalid_argument("separation: d must be <= 4");
  const RadialTarget target(cfg.d, cfg.shells, cfg.c2, cfg.target_eps());
  const DensityModel& model = cached_density_model(2 * cfg.d);

  // Exact real-parameter parity: complex and real nets with bias and linear
  // output have 2 m_c (d + 2) and m_r (2 d + 2) real parameters.
  const int cdiv = 2 * (cfg.d + 2), rdiv = 2 * cfg.d + 2;
  for (int b : cfg.budgets) {
    if (b % cdiv != 0 || b % rdiv != 0) {
      throw std::invalid_argument(
          "separation: budget " + std::to_string(b) + " not divisible by " +
          std::to_string(cdiv) + " and " + std::to_string(rdiv));
    }
  }

  const int cells_n = static_cast<int>(cfg.budgets.size()) * cfg.exp_seeds * 2;
  std::vector<SeparationCell> cells(cells_n);
  parallel_for(cells_n, thread_budget(cfg.threads), [&](int idx) {
    const int family = idx % 2;
    const int seed_index = (idx / 2) % cfg.exp_seeds;
    const int budget = cfg.budgets[idx / (2 * cfg.exp_seeds)];
    SeparationCell cell;
    cell.budget = budget;
    cell.seed_index = seed_index;
    cell.family = family == 0 ? "complex" : "real";

    const std::uint64_t train_seed = Rng::derive(cfg.seed, 1000 + seed_index);
    const std::uint64_t eval_seed = Rng::derive(cfg.seed, 2000 + seed_index);
    const auto train_x = sample_mu(model, cfg.train_samples, train_seed);
    const auto eval_x = sample_mu(model, cfg.eval_samples, eval_seed);
    std::vector<double> train_t(train_x.size()), eval_t(eval_x.size());
    for (size_t i = 0; i < train_x.size(); ++i) train_t[i] = target(train_x[i]);
    for (size_t i = 0; i < eval_x.size(); ++i) eval_t[i] = target(eval_x[i]);

    SqTrainOptions opt;
    opt.lr = cfg.lr;
    opt.steps = cfg.train_steps;
    Rng init_rng(Rng::derive(cfg.seed, 3000 + 10 * seed_index + family));

    if (family == 0) {
      ShallowCRModel net(cfg.d, budget / cdiv, true);
      cell.params = net.real_param_count();
      cell.hidden = net.hidden();
      net.init(init_rng, cfg.out_init);
      const auto ztrain = ShallowCRModel::embed_batch(train_x, cfg.d, true);
      cell.train_mse = train_squared_loss(net, ztrain, train_t, opt);
      const auto zeval = ShallowCRModel::embed_batch(eval_x, cfg.d, true);
      double sum = 0.0, sum2 = 0.0;
      for (size_t i = 0; i < eval_x.size(); ++i) {
        const double e = net.forward_one(&zeval[i * net.cols()]) - eval_t[i];
        sum += e * e;
        sum2 += e * e * e * e;
      }
      cell.l2 = sum / eval_x.size();
      cell.l2_stderr = std::sqrt(
          std::max(0.0, sum2 / eval_x.size() - cell.l2 * cell.l2) / eval_x.size());
    } else {
      ShallowRModel net(2 * cfg.d, budget / rdiv, true);
      cell.params = net.real_param_count();
      cell.hidden = net.hidden();
      net.init(init_rng, cfg.out_init);
      const auto xtrain = ShallowRModel::augment_batch(train_x, 2 * cfg.d, true);
      cell.train_mse = train_squared_loss(net, xtrain, train_t, opt);
      const auto xeval = ShallowRModel::augment_batch(eval_x, 2 * cfg.d, true);
      double sum = 0.0, sum2 = 0.0;
      for (size_t i = 0; i < eval_x.size(); ++i) {
        const double e = net.forward_one(&xeval[i * net.cols()]) - eval_t[i];
        sum += e * e;
        sum2 += e * e * e * e;
      }
      cell.l2 = sum / eval_x.size();
      cell.l2_stderr = std::sqrt(
          std::max(0.0, sum2 / eval_x.size() - cell.l2 * cell.l2) / eval_x.size());
    }
    cells[idx] = std::move(cell);
  });

  CsvWriter csv("separation.v1", {"budget", "family", "seed", "params", "hidden",
                                  "train_mse", "l2_error", "l2_stderr"});
  for (const auto& c : cells) {
    csv.cell(c.budget).cell(c.family).cell(c.seed_index).cell(c.params);
    csv.cell(c.hidden).cell(c.train_mse).cell(c.l2).cell(c.l2_stderr);
    csv.end_row();
  }
  rep.files["separation.csv"] = csv.str();

  // Summary: medians and quartiles per (budget, family).
  CsvWriter summary("separation_summary.v1",
                    {"budget", "family", "median_l2", "q1_l2", "q3_l2", "params"});
  struct Quartiles {
    double q1, med, q3;
    int params;
  };
  std::map<std::pair<int, std::string>, Quartiles> stats;
  for (int b : cfg.budgets) {
    for (const std::string fam : {"complex", "real"}) {
      std::vector<double> vals;
      int params = 0;
      for (const auto& c : cells) {
        if (c.budget == b && c.family == fam) {
          vals.push_back(c.l2);
          params = c.params;
        }
      }
      std::sort(vals.begin(), vals.end());
      const auto quantile = [&](double q) {
        const double pos = q * (vals.size() - 1);
        const size_t lo = static_cast<size_t>(pos);
        const size_t hi = std::min(lo + 1, vals.size() - 1);
        return vals[lo] + (pos - lo) * (vals[hi] - vals[lo]);
      };
      const Quartiles s{quantile(0.25), quantile(0.5), quantile(0.75), params};
      stats[{b, fam}] = s;
      summary.cell(b).cell(fam).cell(s.med).cell(s.q1).cell(s.q3).cell(params);
      summary.end_row();
    }
  }
  rep.files["separation_summary.csv"] = summary.str();

  bool medians_ordered = true;
  for (int b : cfg.budgets) {
    const auto& c = stats[{b, "complex"}];
    const auto& r = stats[{b, "real"}];
    if (c.params != r.params) {
      rep.add("budget_parity_b" + std::to_string(b), false, c.params, r.params);
      return rep;
    }
    rep.add("budget_parity_b" + std::to_string(b), true, c.params, r.params);
    medians_ordered = medians_ordered && c.med < r.med;
    rep.add("median_order_b" + std::to_string(b), c.med < r.med, c.med, r.med,
            "complex median below real median");
  }
  const int bmax = *std::max_element(cfg.budgets.begin(), cfg.budgets.end());
  const auto& cb = stats[{bmax, "complex"}];
  const auto& rb = stats[{bmax, "real"}];
  rep.add("iqr_separation_largest_budget", cb.q3 < rb.q1, cb.q3, rb.q1,
          "complex Q3 below real Q1");

  // Monotone trend of the complex medians across growing budgets, within
  // an MC-noise allowance.
  if (cfg.budgets.size() >= 2) {
    bool monotone = true;
    for (size_t i = 1; i < cfg.budgets.size(); ++i) {
      const double prev = stats[{cfg.budgets[i - 1], "complex"}].med;
      const double cur = stats[{cfg.budgets[i], "complex"}].med;
      monotone = monotone && cur <= prev * 1.15 + 1e-4;
    }
    rep.add("complex_error_monotone_in_budget", monotone, monotone ? 1.0 : 0.0, 1.0);
  }
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  if (cfg.kind == "probe") {
    rep = run_probe(cfg);
  } else if (cfg.kind == "construct") {
    rep = run_construct(cfg);
  } else if (cfg.kind == "separation") {
    rep = run_separation(cfg);
  } else if (cfg.kind == "flow") {
    rep = run_flow(cfg);
  } else if (cfg.kind == "symmetry") {
    rep = run_symmetry(cfg);
  } else if (cfg.kind == "density") {
    rep = run_density(cfg);
  } else {
    throw std::invalid_argument("unknown experiment kind: " + cfg.kind);
  }
  rep.write_files(cfg.out_dir);
  return rep;
}

}  // namespace crnet
