#pragma once

#include <string>
#include <vector>

#include "countmc/engine.hpp"
#include "countmc/streaming.hpp"
#include "countmc/types.hpp"

namespace countmc {

// Doubles print with 17 significant digits so write/load round-trips
// reproduce the exact bit pattern.
std::string fmt17(double v);

CountMatrix load_counts(const std::string& path);
void write_counts(const CountMatrix& m, const std::string& path);

struct DesignTable {
  Matrix X;
  std::vector<std::string> effects;
};
DesignTable load_model_matrix(const std::string& path);
void write_model_matrix(const Matrix& X, const std::vector<std::string>& effects,
                        const std::string& path);

// Two-column CSV (sample, offset), one row per sample.
std::vector<double> load_offsets(const std::string& path);
void write_offsets(const std::vector<std::string>& samples,
                   const std::vector<double>& h, const std::string& path);

struct RunManifest {
  std::string counts_path;
  std::string model_matrix_path;
  std::string offsets_path;
  std::string output_dir = "out";
};

// Fully loaded fit configuration. When the manifest names no input files
// the counts/model fields stay empty and have_inputs is false (defaults
// can still be inspected).
struct LoadedRun {
  RunManifest manifest;
  RunConfig run;
  PriorConfig priors;
  std::vector<ContrastSpec> contrasts;
  CountMatrix counts;
  ModelSpec model;
  bool have_inputs = false;
};

// JSON manifest with keys: counts, model_matrix, offsets, output_dir,
// priors{a,b,d,c,s}, chains, iterations, burnin, tune_cutoff, thin, seed,
// max_step_out, save_genes, workers, sampler_mode, contrasts. Unknown keys
// are rejected. When counts and model_matrix are both given the input
// files load immediately; offsets default to median-of-ratios estimates.
LoadedRun load_manifest(const std::string& path);

// Creates the output directory (and samples/) and verifies writability by
// writing and removing a probe file. Called before sampling begins.
void ensure_writable(const std::string& outdir);

void write_results(const std::string& outdir, const CountMatrix& data,
                   const ModelSpec& spec, const RunConfig& cfg,
                   const std::vector<ChainOutput>& chains,
                   double wall_seconds);

// Thinned sample table: first column is the iteration index.
struct SampleTable {
  std::vector<std::string> names;           // excludes "iteration"
  std::vector<long> iters;
  std::vector<std::vector<double>> columns; // [column][row]
};
SampleTable load_samples(const std::string& path);

struct DiagRow {
  std::string param;
  double rhat = 1.0;
  bool degenerate = false;
  double ess = 0.0;
  bool has_ess = false;
  std::string ess_status;
  bool pass = true;
};

// R-hat (from accumulators) for every monitored parameter: hyperparameters,
// all beta_gl, all gamma_g. ESS only for the retained thinned series.
std::vector<DiagRow> build_diagnostics(const ModelSpec& spec,
                                       const std::vector<ChainOutput>& chains);

// Recomputed diagnostics from saved per-chain sample files.
std::vector<DiagRow> diagnose_samples_dir(const std::string& dir);

}  // namespace countmc
