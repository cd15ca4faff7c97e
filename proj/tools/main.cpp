#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "countmc/engine.hpp"
#include "countmc/errors.hpp"
#include "countmc/io.hpp"
#include "countmc/simulate.hpp"
#include "countmc/version.hpp"

namespace {

using namespace countmc;
using nlohmann::json;

constexpr const char* kStepNames[7] = {"epsilon", "gamma", "nu",  "tau",
                                       "beta",    "theta", "sigma"};

int resolve_workers(bool flag_given, int flag_value, int fallback) {
  if (flag_given) return flag_value;
  if (const char* env = std::getenv("COUNTMC_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env == '\0' || *end != '\0' || v < 1)
      throw ConfigError("COUNTMC_WORKERS must be a positive integer, got '" +
                        std::string(env) + "'");
    return static_cast<int>(v);
  }
  return fallback;
}

struct GlobalFlags {
  int workers = 0;
  bool workers_given = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;
};

int run_fit(const std::string& manifest_path, const GlobalFlags& flags) {
  LoadedRun lr = load_manifest(manifest_path);
  if (!lr.have_inputs)
    throw ConfigError("fit manifest must name both counts and model_matrix");
  if (flags.seed_given) lr.run.seed = flags.seed;
  lr.run.workers = resolve_workers(flags.workers_given, flags.workers,
                                   lr.run.workers);
  lr.run.resolve();

  ensure_writable(lr.manifest.output_dir);

  GibbsEngine engine(lr.counts, lr.model, lr.run, lr.contrasts);
  if (!flags.quiet) {
    std::printf("run G=%zu N=%zu L=%zu chains=%ld iterations=%ld burnin=%ld "
                "thin=%ld seed=%llu workers=%d mode=%s\n",
                lr.counts.G(), lr.counts.N(), lr.model.L(), lr.run.chains,
                lr.run.iterations, lr.run.burnin, lr.run.thin,
                static_cast<unsigned long long>(lr.run.seed), lr.run.workers,
                lr.run.sampler_mode == SamplerMode::slice_faithful
                    ? "slice-faithful"
                    : "conjugate-direct");
    const long total = lr.run.burnin + lr.run.iterations;
    const long stride = std::max(1L, total / 10);
    engine.set_progress([stride, total](long chain, long m, long tot) {
      (void)total;
      if (m % stride == 0 || m == tot)
        std::printf("progress chain=%ld iteration=%ld total=%ld\n", chain + 1,
                    m, tot);
    });
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ChainOutput> chains = engine.run();
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  write_results(lr.manifest.output_dir, lr.counts, lr.model, lr.run, chains,
                wall);

  if (!flags.quiet) {
    for (int s = 0; s < 7; ++s) {
      double secs = 0.0;
      for (const auto& ch : chains)
        secs += ch.timings.seconds[static_cast<std::size_t>(s)];
      std::printf("timing step=%s seconds=%s\n", kStepNames[s],
                  fmt17(secs).c_str());
    }
    std::uint64_t clamps = 0;
    for (const auto& ch : chains) clamps += ch.clamp_events;
    std::printf("done wall_seconds=%s clamp_events=%llu output=%s\n",
                fmt17(wall).c_str(), static_cast<unsigned long long>(clamps),
                lr.manifest.output_dir.c_str());
  }
  return 0;
}

std::vector<double> real_list(const json& v, const char* key) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
    return out;
  }
  if (!v.is_array())
    throw ConfigError(std::string("simspec key '") + key +
                      "' must be a number or array of numbers");
  for (const auto& e : v) {
    if (!e.is_number())
      throw ConfigError(std::string("simspec key '") + key +
                        "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

int run_simulate(const std::string& spec_path, const std::string& out_path,
                 const GlobalFlags& flags) {
  std::ifstream in(spec_path);
  if (!in) throw ConfigError("cannot open simspec '" + spec_path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("simspec JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("simspec must be a JSON object");

  static const std::set<std::string> known = {
      "G", "N", "design", "model_matrix", "h",    "nu",
      "tau", "theta", "sigma",  "gamma",        "seed"};
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw ConfigError("unknown simspec key '" + item.key() + "'");

  SimSpec spec;
  if (!j.contains("G") || !j.contains("N") || !j.at("G").is_number_integer() ||
      !j.at("N").is_number_integer())
    throw ConfigError("simspec needs integer keys G and N");
  const long long Gv = j.at("G").get<long long>();
  const long long Nv = j.at("N").get<long long>();
  if (Gv < 1 || Nv < 1) throw ConfigError("simspec needs G >= 1 and N >= 1");
  spec.G = static_cast<std::size_t>(Gv);
  spec.N = static_cast<std::size_t>(Nv);

  const bool have_design = j.contains("design");
  const bool have_mm = j.contains("model_matrix");
  if (have_design == have_mm)
    throw ConfigError("simspec needs exactly one of 'design' or 'model_matrix'");
  if (have_design) {
    spec.X = builtin_design(j.at("design").get<std::string>(), spec.N);
  } else {
    const DesignTable t = load_model_matrix(j.at("model_matrix").get<std::string>());
    if (t.X.rows() != spec.N)
      throw ConfigError("model matrix row count does not equal N");
    spec.X = t.X;
  }

  if (j.contains("h")) {
    spec.h = real_list(j.at("h"), "h");
    if (spec.h.size() == 1 && spec.N > 1) spec.h.assign(spec.N, spec.h[0]);
  }
  if (j.contains("nu")) spec.nu = j.at("nu").get<double>();
  if (j.contains("tau")) spec.tau = j.at("tau").get<double>();
  if (j.contains("theta")) spec.theta = real_list(j.at("theta"), "theta");
  if (j.contains("sigma")) spec.sigma = real_list(j.at("sigma"), "sigma");
  if (spec.theta.size() == 1 && spec.L() > 1)
    spec.theta.assign(spec.L(), spec.theta[0]);
  if (spec.sigma.size() == 1 && spec.L() > 1)
    spec.sigma.assign(spec.L(), spec.sigma[0]);
  if (j.contains("gamma")) spec.gamma_fixed = real_list(j.at("gamma"), "gamma");
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (flags.seed_given) spec.seed = flags.seed;
  spec.validate();

  const auto [counts, truth] = generate(spec);
  write_counts(counts, out_path);

  json t;
  t["seed"] = spec.seed;
  t["G"] = spec.G;
  t["N"] = spec.N;
  t["nu"] = truth.nu;
  t["tau"] = truth.tau;
  t["theta"] = truth.theta;
  t["sigma"] = truth.sigma;
  t["gamma"] = truth.gamma;
  json beta = json::array();
  for (std::size_t g = 0; g < truth.beta.rows(); ++g) {
    json row = json::array();
    for (std::size_t l = 0; l < truth.beta.cols(); ++l)
      row.push_back(truth.beta(g, l));
    beta.push_back(std::move(row));
  }
  t["beta"] = std::move(beta);
  const std::string truth_path = out_path + ".truth.json";
  std::ofstream tout(truth_path);
  if (!tout) throw ConfigError("cannot write truth file '" + truth_path + "'");
  tout << t.dump(2) << '\n';

  if (!flags.quiet)
    std::printf("simulated G=%zu N=%zu counts=%s truth=%s\n", spec.G, spec.N,
                out_path.c_str(), truth_path.c_str());
  return 0;
}

int run_resample(const std::string& base_path, long genes, long samples,
                 std::uint64_t seed, const std::string& out_path,
                 const GlobalFlags& flags) {
  if (genes < 1 || samples < 1)
    throw ConfigError("resample needs --genes >= 1 and --samples >= 1");
  const CountMatrix base = load_counts(base_path);
  if (flags.seed_given) seed = flags.seed;
  const CountMatrix big =
      resample(base, static_cast<std::size_t>(genes),
               static_cast<std::size_t>(samples), seed);
  write_counts(big, out_path);
  if (!flags.quiet)
    std::printf("resampled G=%zu N=%zu output=%s\n", big.G(), big.N(),
                out_path.c_str());
  return 0;
}

int run_diagnose(const std::string& dir, const GlobalFlags& flags) {
  const std::vector<DiagRow> rows = diagnose_samples_dir(dir);
  std::size_t failed = 0;
  for (const auto& r : rows) {
    std::printf("param=%s rhat=%s ess=%s status=%s pass=%d\n", r.param.c_str(),
                fmt17(r.rhat).c_str(),
                r.has_ess ? fmt17(r.ess).c_str() : "NA",
                r.degenerate ? "degenerate" : r.ess_status.c_str(),
                r.pass ? 1 : 0);
    if (!r.pass) ++failed;
  }
  if (!flags.quiet)
    std::printf("diagnosed params=%zu failed=%zu\n", rows.size(), failed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"countmc: parallel Gibbs sampler for hierarchical Poisson "
               "count models"};
  app.set_version_flag("--version", countmc::kVersion);
  app.require_subcommand(1);

  GlobalFlags flags;
  auto* wopt = app.add_option("--workers", flags.workers,
                              "worker thread count (overrides manifest and "
                              "COUNTMC_WORKERS)")
                   ->check(CLI::PositiveNumber);
  auto* sopt = app.add_option("--seed-override", flags.seed,
                              "replace the configured random seed");
  app.add_flag("--quiet", flags.quiet, "suppress progress output");

  std::string manifest_path;
  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler from a manifest");
  fit->fallthrough();
  fit->add_option("manifest", manifest_path, "JSON run manifest")->required();

  std::string sim_spec, sim_out;
  auto* sim = app.add_subcommand("simulate", "draw a dataset from the model");
  sim->fallthrough();
  sim->add_option("simspec", sim_spec, "JSON simulation spec")->required();
  sim->add_option("out", sim_out, "output counts CSV")->required();

  std::string rs_base, rs_out;
  long rs_genes = 0, rs_samples = 0;
  std::uint64_t rs_seed = 1;
  auto* rs = app.add_subcommand("resample",
                                "inflate a counts table by resampling");
  rs->fallthrough();
  rs->add_option("counts", rs_base, "base counts CSV")->required();
  rs->add_option("--genes", rs_genes, "target gene count")->required();
  rs->add_option("--samples", rs_samples, "target sample count")->required();
  rs->add_option("--seed", rs_seed, "resampling seed");
  rs->add_option("--out", rs_out, "output counts CSV")->required();

  std::string diag_dir;
  auto* diag = app.add_subcommand("diagnose",
                                  "recompute R-hat/ESS from saved samples");
  diag->fallthrough();
  diag->add_option("samples_dir", diag_dir, "directory of chain_*.csv files")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  flags.workers_given = wopt->count() > 0;
  flags.seed_given = sopt->count() > 0;

  try {
    if (*fit) return run_fit(manifest_path, flags);
    if (*sim) return run_simulate(sim_spec, sim_out, flags);
    if (*rs)
      return run_resample(rs_base, rs_genes, rs_samples, rs_seed, rs_out,
                          flags);
    if (*diag) return run_diagnose(diag_dir, flags);
  } catch (const countmc::SamplerStallError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const countmc::SimulationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
