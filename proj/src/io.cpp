#include "countmc/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "countmc/diagnostics.hpp"
#include "countmc/model.hpp"
#include "countmc/version.hpp"

#include "json.hpp"

namespace countmc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find(',') == std::string::npos && s.find('"') == std::string::npos)
    return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"')
      out += "\"\"";
    else
      out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

long long parse_count(const std::string& cell, std::size_t row, std::size_t col,
                      const std::string& gene, const std::string& sample) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(cell.c_str(), &end, 10);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
    std::ostringstream msg;
    msg << "non-integer count '" << cell << "' for gene '" << gene
        << "', sample '" << sample << "' (row " << row << ", column " << col
        << ")";
    throw LoadError(msg.str());
  }
  if (v < 0) {
    std::ostringstream msg;
    msg << "negative count " << v << " for gene '" << gene << "', sample '"
        << sample << "' (row " << row << ", column " << col << ")";
    throw LoadError(msg.str());
  }
  return v;
}

double parse_real(const std::string& cell, std::size_t row, std::size_t col,
                  const char* what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    std::ostringstream msg;
    msg << "malformed " << what << " '" << cell << "' (row " << row
        << ", column " << col << ")";
    throw LoadError(msg.str());
  }
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file '" + path + "'");
  return out;
}

}  // namespace

CountMatrix load_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open counts file '" + path + "'");

  std::string line;
  if (!read_line(in, line)) throw LoadError("counts file '" + path + "' is empty");
  const auto header = split_csv(line);
  if (header.size() < 2)
    throw LoadError("counts header needs a gene column plus sample columns");

  CountMatrix out;
  out.samples.assign(header.begin() + 1, header.end());
  const std::size_t N = out.samples.size();

  std::vector<long long> cells;
  std::size_t row = 1;
  std::set<std::string> seen;
  while (read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (parts.size() != N + 1) {
      std::ostringstream msg;
      msg << "row " << row << " has " << parts.size() << " cells, expected "
          << (N + 1);
      throw LoadError(msg.str());
    }
    if (!seen.insert(parts[0]).second) out.duplicate_genes = true;
    out.genes.push_back(parts[0]);
    for (std::size_t n = 0; n < N; ++n)
      cells.push_back(parse_count(parts[n + 1], row, n + 2, parts[0],
                                  out.samples[n]));
  }
  if (out.genes.empty()) throw LoadError("counts file has no gene rows");

  out.counts = Grid<long long>(out.genes.size(), N, 0);
  out.counts.data() = std::move(cells);
  out.validate();
  return out;
}

void write_counts(const CountMatrix& m, const std::string& path) {
  auto out = open_out(path);
  out << "gene";
  for (const auto& s : m.samples) out << ',' << csv_escape(s);
  out << '\n';
  for (std::size_t g = 0; g < m.G(); ++g) {
    out << csv_escape(m.genes[g]);
    for (std::size_t n = 0; n < m.N(); ++n) out << ',' << m.counts(g, n);
    out << '\n';
  }
}

DesignTable load_model_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open model matrix file '" + path + "'");
  std::string line;
  if (!read_line(in, line))
    throw LoadError("model matrix file '" + path + "' is empty");
  DesignTable table;
  table.effects = split_csv(line);
  const std::size_t L = table.effects.size();

  std::vector<double> cells;
  std::size_t rows = 0, row = 1;
  while (read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (parts.size() != L) {
      std::ostringstream msg;
      msg << "model matrix row " << row << " has " << parts.size()
          << " cells, expected " << L;
      throw LoadError(msg.str());
    }
    for (std::size_t l = 0; l < L; ++l)
      cells.push_back(parse_real(parts[l], row, l + 1, "model matrix entry"));
    ++rows;
  }
  if (rows == 0) throw LoadError("model matrix has no rows");
  table.X = Matrix(rows, L, 0.0);
  table.X.data() = std::move(cells);
  return table;
}

void write_model_matrix(const Matrix& X, const std::vector<std::string>& effects,
                        const std::string& path) {
  auto out = open_out(path);
  for (std::size_t l = 0; l < X.cols(); ++l)
    out << (l ? "," : "") << csv_escape(l < effects.size()
                                            ? effects[l]
                                            : "x" + std::to_string(l + 1));
  out << '\n';
  for (std::size_t n = 0; n < X.rows(); ++n) {
    for (std::size_t l = 0; l < X.cols(); ++l)
      out << (l ? "," : "") << fmt17(X(n, l));
    out << '\n';
  }
}

std::vector<double> load_offsets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open offsets file '" + path + "'");
  std::string line;
  if (!read_line(in, line))
    throw LoadError("offsets file '" + path + "' is empty");
  std::vector<double> h;
  std::size_t row = 1;
  while (read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (parts.size() != 2) {
      std::ostringstream msg;
      msg << "offsets row " << row << " has " << parts.size()
          << " cells, expected 2";
      throw LoadError(msg.str());
    }
    h.push_back(parse_real(parts[1], row, 2, "offset"));
  }
  if (h.empty()) throw LoadError("offsets file has no rows");
  return h;
}

void write_offsets(const std::vector<std::string>& samples,
                   const std::vector<double>& h, const std::string& path) {
  auto out = open_out(path);
  out << "sample,offset\n";
  for (std::size_t n = 0; n < h.size(); ++n)
    out << csv_escape(n < samples.size() ? samples[n]
                                         : "s" + std::to_string(n + 1))
        << ',' << fmt17(h[n]) << '\n';
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& item : obj.items())
    if (!known.count(item.key()))
      throw ConfigError("unknown " + where + " key '" + item.key() + "'");
}

long get_long(const json& obj, const char* key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(std::string("manifest key '") + key +
                      "' must be an integer");
  return v.get<long>();
}

double get_real(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number())
    throw ConfigError(std::string("manifest key '") + key +
                      "' must be a number");
  return v.get<double>();
}

std::string get_string(const json& obj, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string())
    throw ConfigError(std::string("manifest key '") + key +
                      "' must be a string");
  return v.get<std::string>();
}

std::vector<double> get_real_list(const json& obj, const char* key) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const auto& v = obj.at(key);
  if (v.is_number()) {
    out.push_back(v.get<double>());
    return out;
  }
  if (!v.is_array())
    throw ConfigError(std::string("key '") + key +
                      "' must be a number or an array of numbers");
  for (const auto& e : v) {
    if (!e.is_number())
      throw ConfigError(std::string("key '") + key +
                        "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<ContrastSpec> parse_contrasts(const json& arr, std::size_t L) {
  std::vector<ContrastSpec> out;
  if (!arr.is_array()) throw ConfigError("'contrasts' must be an array");
  for (const auto& c : arr) {
    if (!c.is_object()) throw ConfigError("each contrast must be an object");
    reject_unknown(c, {"id", "terms"}, "contrast");
    ContrastSpec spec;
    spec.id = get_string(c, "id", "contrast" + std::to_string(out.size() + 1));
    if (!c.contains("terms") || !c.at("terms").is_array())
      throw ConfigError("contrast '" + spec.id + "' needs a 'terms' array");
    for (const auto& t : c.at("terms")) {
      if (!t.is_object())
        throw ConfigError("contrast '" + spec.id + "' terms must be objects");
      reject_unknown(t, {"coeffs", "threshold"}, "contrast term");
      ContrastTerm term;
      term.threshold = get_real(t, "threshold", 0.0);
      if (!t.contains("coeffs") || !t.at("coeffs").is_object())
        throw ConfigError("contrast '" + spec.id +
                          "' terms need a 'coeffs' object");
      for (const auto& item : t.at("coeffs").items()) {
        if (!item.value().is_number())
          throw ConfigError("contrast coefficient for '" + item.key() +
                            "' must be a number");
        term.coeffs.emplace_back(parse_param_ref(item.key(), L),
                                 item.value().get<double>());
      }
      spec.terms.push_back(std::move(term));
    }
    spec.finalize();
    out.push_back(std::move(spec));
  }
  return out;
}

std::string resolve_path(const std::string& manifest_path,
                         const std::string& rel) {
  if (rel.empty()) return rel;
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(manifest_path).parent_path() / p).string();
}

}  // namespace

LoadedRun load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");

  static const std::set<std::string> known = {
      "counts",       "model_matrix", "offsets",     "output_dir",
      "priors",       "chains",       "iterations",  "burnin",
      "tune_cutoff",  "thin",         "seed",        "max_step_out",
      "save_genes",   "workers",      "sampler_mode", "contrasts"};
  reject_unknown(j, known, "manifest");

  LoadedRun lr;
  lr.manifest.counts_path = resolve_path(path, get_string(j, "counts", ""));
  lr.manifest.model_matrix_path =
      resolve_path(path, get_string(j, "model_matrix", ""));
  lr.manifest.offsets_path = resolve_path(path, get_string(j, "offsets", ""));
  lr.manifest.output_dir = get_string(j, "output_dir", "out");

  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    if (!p.is_object()) throw ConfigError("'priors' must be an object");
    reject_unknown(p, {"a", "b", "d", "c", "s"}, "priors");
    lr.priors.a = get_real(p, "a", 1.0);
    lr.priors.b = get_real(p, "b", 1.0);
    lr.priors.d = get_real(p, "d", 1000.0);
    lr.priors.c = get_real_list(p, "c");
    lr.priors.s = get_real_list(p, "s");
  }

  lr.run.chains = get_long(j, "chains", 4);
  lr.run.iterations = get_long(j, "iterations", 4000);
  lr.run.burnin = get_long(j, "burnin", 2000);
  lr.run.tune_cutoff = get_long(j, "tune_cutoff", -1);
  lr.run.thin = get_long(j, "thin", 20);
  lr.run.save_genes = get_long(j, "save_genes", 20);
  lr.run.workers = static_cast<int>(get_long(j, "workers", 1));
  lr.run.slice.max_step_out =
      static_cast<int>(get_long(j, "max_step_out", 100));
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0 && !v.is_number_unsigned()))
      throw ConfigError("manifest key 'seed' must be a nonnegative integer");
    lr.run.seed = v.get<std::uint64_t>();
  }
  const std::string mode = get_string(j, "sampler_mode", "slice-faithful");
  if (mode == "slice-faithful") {
    lr.run.sampler_mode = SamplerMode::slice_faithful;
  } else if (mode == "conjugate-direct") {
    lr.run.sampler_mode = SamplerMode::conjugate_direct;
  } else {
    throw ConfigError("sampler_mode must be 'slice-faithful' or "
                      "'conjugate-direct', got '" + mode + "'");
  }
  lr.run.resolve();

  const bool have_counts = !lr.manifest.counts_path.empty();
  const bool have_model = !lr.manifest.model_matrix_path.empty();
  if (have_counts != have_model)
    throw ConfigError("manifest must name both counts and model_matrix (or "
                      "neither)");
  if (!have_counts) {
    if (j.contains("contrasts") && !j.at("contrasts").empty())
      throw ConfigError("contrasts require a model matrix");
    lr.priors.resolve(lr.priors.c.empty() ? 1 : lr.priors.c.size());
    return lr;
  }

  lr.counts = load_counts(lr.manifest.counts_path);
  DesignTable design = load_model_matrix(lr.manifest.model_matrix_path);
  if (design.X.rows() != lr.counts.N())
    throw ConfigError("model matrix has " + std::to_string(design.X.rows()) +
                      " rows but counts have " + std::to_string(lr.counts.N()) +
                      " samples");
  std::vector<double> h;
  if (!lr.manifest.offsets_path.empty()) {
    h = load_offsets(lr.manifest.offsets_path);
    if (h.size() != lr.counts.N())
      throw ConfigError("offsets length does not match the sample count");
  } else {
    h = estimate_offsets(lr.counts);
  }
  lr.priors.resolve(design.X.cols());
  lr.model.X = std::move(design.X);
  lr.model.h = std::move(h);
  lr.model.priors = lr.priors;
  lr.model.validate();
  if (j.contains("contrasts"))
    lr.contrasts = parse_contrasts(j.at("contrasts"), lr.model.L());
  lr.have_inputs = true;
  return lr;
}

void ensure_writable(const std::string& outdir) {
  std::error_code ec;
  fs::create_directories(fs::path(outdir) / "samples", ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + outdir +
                      "': " + ec.message());
  const fs::path probe = fs::path(outdir) / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out)
      throw ConfigError("output directory '" + outdir + "' is not writable");
    out << "ok";
  }
  fs::remove(probe, ec);
}

namespace {

struct Pooled {
  double mean = 0.0;
  double meansq = 0.0;
};

template <typename Get>
Pooled pool_moments(const std::vector<ChainOutput>& chains, Get&& get) {
  Pooled p;
  for (const auto& ch : chains) {
    const MomentAccumulator& acc = get(ch);
    p.mean += acc.mean();
    p.meansq += acc.meansq();
  }
  p.mean /= static_cast<double>(chains.size());
  p.meansq /= static_cast<double>(chains.size());
  return p;
}

void write_estimate(std::ostream& out, const Pooled& p) {
  const double var = std::max(0.0, p.meansq - p.mean * p.mean);
  const Interval ci = credible_interval(p.mean, p.meansq, 0.05);
  out << ',' << fmt17(p.mean) << ',' << fmt17(std::sqrt(var)) << ','
      << fmt17(ci.lo) << ',' << fmt17(ci.hi);
}

const char* kStepNames[7] = {"epsilon", "gamma", "nu",
                             "tau",     "beta",  "theta", "sigma"};

}  // namespace

std::vector<DiagRow> build_diagnostics(const ModelSpec& spec,
                                       const std::vector<ChainOutput>& chains) {
  const std::size_t C = chains.size();
  const std::size_t L = spec.L();
  const std::size_t G = chains[0].gamma_acc.size();

  std::map<std::string, std::size_t> columns;
  for (std::size_t k = 0; k < chains[0].sample_names.size(); ++k)
    columns[chains[0].sample_names[k]] = k;

  auto ess_for = [&](const std::string& name, DiagRow& row) {
    const auto it = columns.find(name);
    if (it == columns.end()) {
      row.has_ess = false;
      row.ess_status = "not-retained";
      return;
    }
    std::vector<std::vector<double>> series;
    series.reserve(C);
    for (const auto& ch : chains) series.push_back(ch.samples[it->second]);
    const EssResult res = effective_sample_size(series);
    row.has_ess = res.status == EssResult::Status::ok;
    row.ess = res.value;
    row.ess_status = res.status == EssResult::Status::ok ? "ok"
                     : res.status == EssResult::Status::undefined
                         ? "undefined"
                         : "degenerate";
  };

  auto make_row = [&](const std::string& name, auto&& get) {
    std::vector<MomentAccumulator> accs;
    accs.reserve(C);
    for (const auto& ch : chains) accs.push_back(get(ch));
    const RhatResult r = gelman_rhat(accs);
    DiagRow row;
    row.param = name;
    row.rhat = r.value;
    row.degenerate = r.degenerate;
    row.pass = r.degenerate ? true : r.value < 1.1;
    ess_for(name, row);
    return row;
  };

  std::vector<DiagRow> rows;
  rows.reserve(2 + 2 * L + G * (L + 1));
  rows.push_back(make_row("nu", [](const ChainOutput& c) { return c.nu_acc; }));
  rows.push_back(make_row("tau", [](const ChainOutput& c) { return c.tau_acc; }));
  for (std::size_t l = 0; l < L; ++l)
    rows.push_back(make_row("theta[" + std::to_string(l + 1) + "]",
                            [l](const ChainOutput& c) { return c.theta_acc[l]; }));
  for (std::size_t l = 0; l < L; ++l)
    rows.push_back(make_row("sigma[" + std::to_string(l + 1) + "]",
                            [l](const ChainOutput& c) { return c.sigma_acc[l]; }));
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t l = 0; l < L; ++l)
      rows.push_back(make_row(
          "beta[" + std::to_string(g + 1) + "," + std::to_string(l + 1) + "]",
          [g, l, L](const ChainOutput& c) { return c.beta_acc[g * L + l]; }));
  for (std::size_t g = 0; g < G; ++g)
    rows.push_back(make_row("gamma[" + std::to_string(g + 1) + "]",
                            [g](const ChainOutput& c) { return c.gamma_acc[g]; }));
  return rows;
}

void write_results(const std::string& outdir, const CountMatrix& data,
                   const ModelSpec& spec, const RunConfig& cfg,
                   const std::vector<ChainOutput>& chains,
                   double wall_seconds) {
  if (chains.empty()) throw ConfigError("write_results needs chain outputs");
  const std::size_t C = chains.size(), G = data.G(), L = spec.L();
  ensure_writable(outdir);
  const fs::path root(outdir);

  {
    auto out = open_out((root / "gene_estimates.csv").string());
    out << "gene";
    for (std::size_t l = 0; l < L; ++l) {
      const std::string base = "beta[" + std::to_string(l + 1) + "]";
      out << ',' << base << "_mean," << base << "_sd," << base << "_lo95,"
          << base << "_hi95";
    }
    out << ",gamma_mean,gamma_sd,gamma_lo95,gamma_hi95";
    std::vector<std::size_t> per_gene;
    for (std::size_t k = 0; k < chains[0].contrasts.size(); ++k)
      if (chains[0].contrasts[k].spec().per_gene) {
        per_gene.push_back(k);
        out << ",prob_" << chains[0].contrasts[k].spec().id;
      }
    out << '\n';
    for (std::size_t g = 0; g < G; ++g) {
      out << csv_escape(data.genes[g]);
      for (std::size_t l = 0; l < L; ++l)
        write_estimate(out, pool_moments(chains, [&](const ChainOutput& c) {
                         return c.beta_acc[g * L + l];
                       }));
      write_estimate(out, pool_moments(chains, [&](const ChainOutput& c) {
                       return c.gamma_acc[g];
                     }));
      for (std::size_t k : per_gene) {
        double p = 0.0;
        for (const auto& ch : chains) p += ch.contrasts[k].prob()[g];
        out << ',' << fmt17(p / static_cast<double>(C));
      }
      out << '\n';
    }
  }

  {
    auto out = open_out((root / "hyper_estimates.csv").string());
    out << "param,mean,sd,lo95,hi95\n";
    auto row = [&](const std::string& name, const Pooled& p) {
      out << name;
      write_estimate(out, p);
      out << '\n';
    };
    row("nu", pool_moments(chains, [](const ChainOutput& c) { return c.nu_acc; }));
    row("tau", pool_moments(chains, [](const ChainOutput& c) { return c.tau_acc; }));
    for (std::size_t l = 0; l < L; ++l)
      row("theta[" + std::to_string(l + 1) + "]",
          pool_moments(chains, [&](const ChainOutput& c) { return c.theta_acc[l]; }));
    for (std::size_t l = 0; l < L; ++l)
      row("sigma[" + std::to_string(l + 1) + "]",
          pool_moments(chains, [&](const ChainOutput& c) { return c.sigma_acc[l]; }));
    for (std::size_t k = 0; k < chains[0].contrasts.size(); ++k) {
      if (chains[0].contrasts[k].spec().per_gene) continue;
      double p = 0.0;
      for (const auto& ch : chains) p += ch.contrasts[k].prob()[0];
      p /= static_cast<double>(C);
      // indicator stream: mean of squares equals the mean
      row("contrast[" + chains[0].contrasts[k].spec().id + "]", {p, p});
    }
  }

  {
    auto out = open_out((root / "diagnostics.csv").string());
    out << "param,rhat,ess,status,pass\n";
    for (const auto& rowv : build_diagnostics(spec, chains)) {
      out << csv_escape(rowv.param) << ',' << fmt17(rowv.rhat) << ',';
      if (rowv.has_ess)
        out << fmt17(rowv.ess);
      else
        out << "NA";
      out << ',' << (rowv.degenerate ? "degenerate" : rowv.ess_status) << ','
          << (rowv.pass ? 1 : 0) << '\n';
    }
  }

  for (std::size_t c = 0; c < C; ++c) {
    const auto& ch = chains[c];
    auto out = open_out(
        (root / "samples" / ("chain_" + std::to_string(c + 1) + ".csv")).string());
    out << "iteration";
    for (const auto& name : ch.sample_names) out << ',' << csv_escape(name);
    out << '\n';
    for (std::size_t r = 0; r < ch.sample_iters.size(); ++r) {
      out << ch.sample_iters[r];
      for (const auto& col : ch.samples) out << ',' << fmt17(col[r]);
      out << '\n';
    }
  }

  {
    json report;
    report["version"] = kVersion;
    report["seed"] = cfg.seed;
    report["chains"] = cfg.chains;
    report["iterations"] = cfg.iterations;
    report["burnin"] = cfg.burnin;
    report["tune_cutoff"] = cfg.tune_cutoff;
    report["thin"] = cfg.thin;
    report["workers"] = cfg.workers;
    report["max_step_out"] = cfg.slice.max_step_out;
    report["save_genes"] = cfg.save_genes;
    report["sampler_mode"] = cfg.sampler_mode == SamplerMode::slice_faithful
                                 ? "slice-faithful"
                                 : "conjugate-direct";
    report["G"] = data.G();
    report["N"] = data.N();
    report["L"] = L;
    report["wall_seconds"] = wall_seconds;

    json steps;
    for (int s = 0; s < 7; ++s) {
      double total = 0.0;
      for (const auto& ch : chains)
        total += ch.timings.seconds[static_cast<std::size_t>(s)];
      steps[kStepNames[s]] = total;
    }
    report["step_seconds"] = steps;

    json per_chain = json::array();
    std::uint64_t clamp_total = 0;
    for (const auto& ch : chains) {
      json entry;
      entry["chain"] = ch.chain + 1;
      entry["clamp_events"] = ch.clamp_events;
      json cs;
      for (int s = 0; s < 7; ++s)
        cs[kStepNames[s]] = ch.timings.seconds[static_cast<std::size_t>(s)];
      entry["step_seconds"] = cs;
      per_chain.push_back(entry);
      clamp_total += ch.clamp_events;
    }
    report["per_chain"] = per_chain;
    report["clamp_events"] = clamp_total;

    json saved = json::array();
    for (std::size_t g : chains[0].saved_genes) saved.push_back(g + 1);
    report["saved_genes"] = saved;

    auto out = open_out((root / "run_report.json").string());
    out << report.dump(2) << '\n';
  }
}

SampleTable load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open samples file '" + path + "'");
  std::string line;
  if (!read_line(in, line))
    throw LoadError("samples file '" + path + "' is empty");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "iteration")
    throw LoadError("samples header must start with 'iteration'");

  SampleTable table;
  table.names.assign(header.begin() + 1, header.end());
  table.columns.assign(table.names.size(), {});

  std::size_t row = 1;
  while (read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (parts.size() != header.size()) {
      std::ostringstream msg;
      msg << "samples row " << row << " has " << parts.size()
          << " cells, expected " << header.size();
      throw LoadError(msg.str());
    }
    table.iters.push_back(
        static_cast<long>(parse_real(parts[0], row, 1, "iteration")));
    for (std::size_t k = 0; k < table.names.size(); ++k)
      table.columns[k].push_back(parse_real(parts[k + 1], row, k + 2, "sample"));
  }
  return table;
}

std::vector<DiagRow> diagnose_samples_dir(const std::string& dir) {
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("chain_", 0) == 0 && entry.path().extension() == ".csv")
      files.push_back(entry.path().string());
  }
  if (ec) throw LoadError("cannot read samples directory '" + dir + "'");
  std::sort(files.begin(), files.end());
  if (files.size() < 2)
    throw ConfigError("diagnose needs at least 2 chain_*.csv files in '" +
                      dir + "'");

  std::vector<SampleTable> tables;
  tables.reserve(files.size());
  for (const auto& f : files) tables.push_back(load_samples(f));
  for (const auto& t : tables) {
    if (t.names != tables[0].names)
      throw ConfigError("sample files disagree on parameter columns");
    if (t.iters.size() != tables[0].iters.size())
      throw ConfigError("sample files disagree on row counts");
  }

  std::vector<DiagRow> rows;
  for (std::size_t k = 0; k < tables[0].names.size(); ++k) {
    std::vector<std::vector<double>> series;
    series.reserve(tables.size());
    for (const auto& t : tables) series.push_back(t.columns[k]);

    DiagRow row;
    row.param = tables[0].names[k];
    const RhatResult r = gelman_rhat_series(series);
    row.rhat = r.value;
    row.degenerate = r.degenerate;
    row.pass = r.degenerate ? true : r.value < 1.1;
    const EssResult e = effective_sample_size(series);
    row.has_ess = e.status == EssResult::Status::ok;
    row.ess = e.value;
    row.ess_status = e.status == EssResult::Status::ok ? "ok"
                     : e.status == EssResult::Status::undefined ? "undefined"
                                                                : "degenerate";
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace countmc
