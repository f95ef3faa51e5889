#include "lidkit/bench.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lidkit/oracles.hpp"
#include "lidkit/parallel.hpp"

namespace lidkit {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::kSpec, where + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
    require(allowed.count(key) > 0, ErrorKind::kSpec, where + ": unknown key \"" + key + "\"");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kSpec, std::string("config key \"") + key + "\": " + e.what());
  }
}

DivergenceMethod parse_divergence(const std::string& s) {
  if (s == "exact") return DivergenceMethod::kExact;
  if (s == "hutchinson") return DivergenceMethod::kHutchinson;
  fail(ErrorKind::kSpec, "unknown divergence method: " + s);
}

ManifoldSpec parse_manifold(const json& j, std::uint64_t default_seed) {
  check_keys(j, {"family", "d", "n", "N", "seed", "rotate", "permute_dims", "radius", "height", "scale", "anchors"},
             "manifold");
  require(j.contains("family") && j.contains("d") && j.contains("n"), ErrorKind::kSpec,
          "manifold: family, d and n are required");
  ManifoldSpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  s.seed = default_seed;
  read(j, "d", s.d);
  read(j, "n", s.n);
  read(j, "N", s.N);
  read(j, "seed", s.seed);
  read(j, "rotate", s.rotate);
  read(j, "permute_dims", s.permute_dims);
  read(j, "radius", s.radius);
  read(j, "height", s.height);
  read(j, "scale", s.scale);
  read(j, "anchors", s.anchors);
  s.validate();
  return s;
}

void parse_mlp(const json& j, MlpConfig& c) {
  check_keys(j, {"width", "depth", "activation", "embedding", "frequencies", "target"}, "mlp");
  read(j, "width", c.width);
  read(j, "depth", c.depth);
  read(j, "frequencies", c.frequencies);
  if (j.contains("activation")) {
    const auto a = j.at("activation").get<std::string>();
    if (a == "silu")
      c.activation = Activation::kSilu;
    else if (a == "tanh")
      c.activation = Activation::kTanh;
    else if (a == "identity")
      c.activation = Activation::kIdentity;
    else
      fail(ErrorKind::kSpec, "unknown activation: " + a);
  }
  if (j.contains("embedding")) {
    const auto e = j.at("embedding").get<std::string>();
    require(e == "scalar" || e == "sinusoidal", ErrorKind::kSpec, "unknown sigma embedding: " + e);
    c.embedding = e == "scalar" ? SigmaEmbedding::kScalar : SigmaEmbedding::kSinusoidal;
  }
  if (j.contains("target")) {
    const auto t = j.at("target").get<std::string>();
    require(t == "epsilon" || t == "velocity", ErrorKind::kSpec, "unknown prediction target: " + t);
    c.target = t == "epsilon" ? Target::kEpsilon : Target::kVelocity;
  }
}

void parse_train(const json& j, TrainConfig& t) {
  check_keys(j, {"batches", "batch_size", "lr", "lr_final", "sigma_min", "sigma_max", "seed"}, "train");
  read(j, "batches", t.batches);
  read(j, "batch_size", t.batch_size);
  read(j, "lr", t.learning_rate);
  read(j, "lr_final", t.final_learning_rate);
  read(j, "sigma_min", t.sigma_min);
  read(j, "sigma_max", t.sigma_max);
  read(j, "seed", t.seed);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kSpec, std::string("invalid JSON: ") + e.what());
  }
}

bool is_nonparametric(const std::string& name) { return name == "mle" || name == "twonn"; }

std::string fmt_fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

void BenchConfig::validate() const {
  require(!manifolds.empty(), ErrorKind::kSpec, "bench: empty grid (no manifolds)");
  require(!estimators.empty(), ErrorKind::kSpec, "bench: empty grid (no estimators)");
  bool parametric = false;
  for (const auto& e : estimators) {
    parse_estimator(e);
    parametric = parametric || !is_nonparametric(e);
    if (is_nonparametric(e)) require(!ks.empty(), ErrorKind::kSpec, "bench: non-parametric estimators need ks");
  }
  if (parametric) require(!sigmas.empty(), ErrorKind::kSpec, "bench: empty sigma grid");
  for (double s : sigmas) require(s > 0, ErrorKind::kSpec, "bench: sigmas must be positive");
  require(m >= 1, ErrorKind::kSpec, "bench: m must be >= 1");
  for (const auto& s : manifolds) s.validate();
}

BenchConfig parse_bench_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  check_keys(j, {"manifolds", "estimators", "sigmas", "m", "ks", "field", "mlp", "train", "divergence", "probes", "seed",
                 "output_dir"},
             "bench config");
  BenchConfig c;
  read(j, "seed", c.seed);
  c.train.seed = c.seed;
  if (j.contains("manifolds")) {
    require(j.at("manifolds").is_array(), ErrorKind::kSpec, "manifolds must be an array");
    for (const auto& mj : j.at("manifolds")) c.manifolds.push_back(parse_manifold(mj, c.seed));
  }
  read(j, "estimators", c.estimators);
  read(j, "sigmas", c.sigmas);
  read(j, "m", c.m);
  read(j, "ks", c.ks);
  read(j, "output_dir", c.output_dir);
  read(j, "probes", c.probes);
  if (j.contains("divergence")) c.divergence = parse_divergence(j.at("divergence").get<std::string>());
  if (j.contains("field")) {
    const auto f = j.at("field").get<std::string>();
    if (f == "trained")
      c.field = FieldSource::kTrained;
    else if (f == "oracle")
      c.field = FieldSource::kOracle;
    else if (f == "random")
      c.field = FieldSource::kRandomInit;
    else
      fail(ErrorKind::kSpec, "unknown field source: " + f);
  }
  if (j.contains("mlp")) parse_mlp(j.at("mlp"), c.mlp);
  if (j.contains("train")) parse_train(j.at("train"), c.train);
  c.validate();
  return c;
}

std::string manifold_json(const ManifoldSpec& s) {
  nlohmann::ordered_json j;
  j["family"] = std::string(family_name(s.family));
  j["d"] = s.d;
  j["n"] = s.n;
  j["N"] = s.N;
  j["seed"] = s.seed;
  j["rotate"] = s.rotate;
  j["permute_dims"] = s.permute_dims;
  j["radius"] = s.radius;
  j["height"] = s.height;
  j["scale"] = s.scale;
  j["anchors"] = s.anchors;
  return j.dump(2) + "\n";
}

ManifoldSpec parse_manifold_json(const std::string& json_text) { return parse_manifold(parse_json(json_text), 0); }

std::size_t BenchResult::failures() const {
  std::size_t f = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) ++f;
  return f;
}

std::shared_ptr<const ScoreField> make_field(const BenchConfig& cfg, const PointCloud& cloud, std::ostream* log) {
  const ManifoldSpec& spec = cloud.spec;
  switch (cfg.field) {
    case FieldSource::kOracle:
      if (spec.family == Family::kAffineGaussian) return std::make_shared<AffineField>(affine_oracle_for(spec));
      if (spec.family == Family::kPointMixture) return std::make_shared<MixtureField>(mixture_oracle_for(spec));
      fail(ErrorKind::kCapability, "no analytic oracle for family " + std::string(family_name(spec.family)));
    case FieldSource::kRandomInit: {
      MlpConfig mc = cfg.mlp;
      mc.input_dim = cloud.dim();
      MlpModel model = MlpModel::initialized(mc, cfg.seed);
      RngStream rng(cfg.seed, make_stream(stream_tag::kInit, 0xffff));
      const auto& out = model.output_layer().weight;
      model.view(out) = gaussian_matrix(rng, out.rows, out.cols) / std::sqrt(static_cast<double>(out.cols));
      return std::make_shared<MlpField>(std::move(model));
    }
    case FieldSource::kTrained: {
      MlpConfig mc = cfg.mlp;
      mc.input_dim = cloud.dim();
      TrainResult tr = train(MlpModel::initialized(mc, cfg.train.seed), cloud, cfg.train);
      if (log)
        *log << "trained " << spec.label() << ": loss " << tr.initial_window_mean << " -> " << tr.final_window_mean
             << '\n';
      return std::make_shared<MlpField>(std::move(tr.model));
    }
  }
  fail(ErrorKind::kSpec, "unknown field source");
}

BenchResult run_bench(const BenchConfig& cfg, int threads, std::ostream* log) {
  cfg.validate();
  const int workers = resolve_threads(threads);
  const std::size_t nm = cfg.manifolds.size();

  std::vector<PointCloud> clouds(nm);
  for (std::size_t i = 0; i < nm; ++i) clouds[i] = sample(cfg.manifolds[i]);

  bool parametric = false;
  for (const auto& e : cfg.estimators) parametric = parametric || !is_nonparametric(e);

  std::vector<std::shared_ptr<const ScoreField>> fields(nm);
  std::vector<std::string> field_errors(nm);
  if (parametric) {
    std::vector<std::ostringstream> logs(nm);
    BenchConfig inner = cfg;
    inner.train.threads = nm > 1 ? 1 : workers;
    parallel_for(
        nm,
        [&](std::size_t i) {
          try {
            fields[i] = make_field(inner, clouds[i], &logs[i]);
          } catch (const Error& e) {
            field_errors[i] = e.what();
          }
        },
        workers);
    if (log)
      for (auto& l : logs) *log << l.str();
  }

  struct Cell {
    std::size_t manifold;
    std::string estimator;
    double sigma;
    int k;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < nm; ++i)
    for (const auto& e : cfg.estimators) {
      if (is_nonparametric(e))
        for (int k : cfg.ks) cells.push_back({i, e, 0.0, k});
      else
        for (double s : cfg.sigmas) cells.push_back({i, e, s, 0});
    }

  BenchResult result;
  result.rows.resize(cells.size());
  parallel_for(
      cells.size(),
      [&](std::size_t c) {
        const Cell& cell = cells[c];
        const PointCloud& cloud = clouds[cell.manifold];
        BenchRow& row = result.rows[c];
        row.manifold = cloud.spec.label();
        row.d = cloud.spec.d;
        row.n = cloud.spec.n;
        const bool np = is_nonparametric(cell.estimator);
        row.estimator = np ? cell.estimator + "_k" + std::to_string(cell.k) : cell.estimator;
        row.sigma = cell.sigma;
        row.m = np ? 0 : cfg.m;
        row.mae = row.mean = row.stddev = std::nan("");
        if (!np && !field_errors[cell.manifold].empty()) {
          row.error = field_errors[cell.manifold];
          return;
        }
        EstimatorParams p;
        p.sigma = np ? 1.0 : cell.sigma;
        p.m = cfg.m;
        p.k = np ? cell.k : 50;
        p.divergence = cfg.divergence;
        p.probes = cfg.probes;
        p.seed = cfg.seed;
        try {
          const LIDReport r = estimate_cloud(fields[cell.manifold].get(), cloud, parse_estimator(cell.estimator), p,
                                             cells.size() > 1 ? 1 : workers);
          row.mae = r.mae().value_or(std::nan(""));
          row.mean = r.mean();
          row.stddev = r.stddev();
          const EvalCounts total = r.total_counts();
          row.score_evals = total.score;
          row.jvp_evals = total.jvp;
          row.runtime_ms = r.runtime_ms;
        } catch (const Error& e) {
          row.error = e.what();
        }
      },
      workers);
  return result;
}

std::string bench_csv(const BenchResult& r, bool timing) {
  std::ostringstream os;
  os << "manifold,d,n,estimator,sigma,m,mae,mean,stddev,score_evals,jvp_evals,runtime_ms\n";
  for (const auto& row : r.rows) {
    os << row.manifold << ',' << row.d << ',' << row.n << ',' << row.estimator << ',' << format_double(row.sigma) << ','
       << row.m << ',' << format_double(row.mae) << ',' << format_double(row.mean) << ','
       << format_double(row.stddev) << ',' << row.score_evals << ',' << row.jvp_evals << ','
       << (timing ? fmt_fixed(row.runtime_ms, 3) : "0") << '\n';
  }
  return os.str();
}

std::string bench_table(const BenchResult& r) {
  std::vector<std::string> columns;
  std::vector<std::string> manifolds;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& row : r.rows) {
    const std::string col =
        row.m == 0 ? row.estimator : row.estimator + " s=" + format_double(row.sigma);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(manifolds.begin(), manifolds.end(), row.manifold) == manifolds.end())
      manifolds.push_back(row.manifold);
    cell[{row.manifold, col}] = row.mae;
  }
  std::size_t label_w = 7;
  for (const auto& m : manifolds) label_w = std::max(label_w, m.size());
  std::size_t col_w = 8;
  for (const auto& c : columns) col_w = std::max(col_w, c.size());

  std::ostringstream os;
  os << "LID estimate mean absolute error (MAE)\n";
  os << std::left << std::setw(static_cast<int>(label_w)) << "Manifold";
  for (const auto& c : columns) os << "  " << std::right << std::setw(static_cast<int>(col_w)) << c;
  os << '\n';
  std::vector<double> sums(columns.size(), 0.0);
  std::vector<int> counts(columns.size(), 0);
  for (const auto& m : manifolds) {
    os << std::left << std::setw(static_cast<int>(label_w)) << m;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto it = cell.find({m, columns[c]});
      const double v = it == cell.end() ? std::nan("") : it->second;
      if (!std::isnan(v)) {
        sums[c] += v;
        ++counts[c];
      }
      os << "  " << std::right << std::setw(static_cast<int>(col_w)) << (it == cell.end() ? "-" : fmt_fixed(v, 2));
    }
    os << '\n';
  }
  os << std::left << std::setw(static_cast<int>(label_w)) << "Average";
  for (std::size_t c = 0; c < columns.size(); ++c)
    os << "  " << std::right << std::setw(static_cast<int>(col_w))
       << (counts[c] ? fmt_fixed(sums[c] / counts[c], 2) : "nan");
  os << '\n';
  return os.str();
}

std::vector<SpectrumEntry> spectrum_study(const ScoreField& field, const Vector& x, double sigma, std::uint64_t seed,
                                          std::uint64_t point_index, const std::vector<int>& ms) {
  require(!ms.empty(), ErrorKind::kParam, "spectrum: m list must not be empty");
  std::vector<SpectrumEntry> out;
  for (int m : ms) {
    EstimatorParams p;
    p.sigma = sigma;
    p.m = m;
    p.seed = seed;
    FieldProbe probe(field);
    SpectrumEntry e;
    e.m = m;
    e.spectrum = error_bundle_spectrum(probe, x, p, point_index);
    e.dsm = dsm_lid(probe, x, p, point_index);
    out.push_back(std::move(e));
  }
  return out;
}

std::string spectrum_csv(const std::vector<SpectrumEntry>& entries) {
  std::ostringstream os;
  os << "m,rank,eigenvalue\n";
  for (const auto& e : entries)
    for (Eigen::Index i = 0; i < e.spectrum.size(); ++i)
      os << e.m << ',' << (i + 1) << ',' << format_double(e.spectrum.eigenvalues[i]) << '\n';
  return os.str();
}

void ScalingConfig::validate() const {
  require(!pairs.empty(), ErrorKind::kSpec, "scaling: empty (d, n) grid");
  for (const auto& [d, n] : pairs)
    require(d >= 1 && n == 2 * d, ErrorKind::kSpec,
            "scaling: each pair must satisfy n = 2d (got d=" + std::to_string(d) + ", n=" + std::to_string(n) + ")");
  require(m >= 1 && points >= 1 && probes >= 1, ErrorKind::kSpec, "scaling: m, points and probes must be >= 1");
  require(sigma > 0, ErrorKind::kSpec, "scaling: sigma must be positive");
  require(field == "oracle" || field == "mlp", ErrorKind::kSpec, "scaling: field must be \"oracle\" or \"mlp\"");
}

ScalingConfig parse_scaling_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  check_keys(j, {"pairs", "m", "sigma", "divergence", "probes", "points", "field", "width", "depth", "seed"},
             "scaling config");
  ScalingConfig c;
  if (j.contains("pairs")) {
    for (const auto& pj : j.at("pairs")) {
      require(pj.is_array() && pj.size() == 2, ErrorKind::kSpec, "scaling: pairs must be [d, n] arrays");
      c.pairs.emplace_back(pj[0].get<Eigen::Index>(), pj[1].get<Eigen::Index>());
    }
  }
  read(j, "m", c.m);
  read(j, "sigma", c.sigma);
  read(j, "probes", c.probes);
  read(j, "points", c.points);
  read(j, "field", c.field);
  read(j, "width", c.width);
  read(j, "depth", c.depth);
  read(j, "seed", c.seed);
  if (j.contains("divergence")) c.divergence = parse_divergence(j.at("divergence").get<std::string>());
  c.validate();
  return c;
}

long peak_rss_kb() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream is(line.substr(6));
      long kb = -1;
      is >> kb;
      return kb;
    }
  }
  return -1;
}

std::vector<ScalingRow> scaling_study(const ScalingConfig& cfg, int threads) {
  cfg.validate();
  std::vector<ScalingRow> rows;
  for (const auto& [d, n] : cfg.pairs) {
    ManifoldSpec spec;
    spec.family = Family::kAffineGaussian;
    spec.d = d;
    spec.n = n;
    spec.N = cfg.points;
    spec.seed = cfg.seed;
    const PointCloud cloud = sample(spec);
    std::shared_ptr<const ScoreField> field;
    if (cfg.field == "oracle") {
      field = std::make_shared<AffineField>(affine_oracle_for(spec));
    } else {
      MlpConfig mc;
      mc.input_dim = n;
      mc.width = cfg.width;
      mc.depth = cfg.depth;
      field = std::make_shared<MlpField>(MlpModel::initialized(mc, cfg.seed));
    }
    EstimatorParams p;
    p.sigma = cfg.sigma;
    p.m = cfg.m;
    p.divergence = cfg.divergence;
    p.probes = cfg.probes;
    p.seed = cfg.seed;
    const LIDReport dsm = estimate_cloud(field.get(), cloud, EstimatorId::kDsm, p, threads);
    const LIDReport fl = estimate_cloud(field.get(), cloud, EstimatorId::kFlipd, p, threads);
    // Counts are per point and identical across points by construction.
    ScalingRow row;
    row.d = d;
    row.n = n;
    row.m = cfg.m;
    for (const auto& c : dsm.counts) {
      row.dsm_score_evals = std::max(row.dsm_score_evals, c.score);
      row.dsm_jvp_evals = std::max(row.dsm_jvp_evals, c.jvp);
    }
    for (const auto& c : fl.counts) {
      row.flipd_score_evals = std::max(row.flipd_score_evals, c.score);
      row.flipd_jvp_evals = std::max(row.flipd_jvp_evals, c.jvp);
    }
    row.peak_rss_kb = peak_rss_kb();
    rows.push_back(row);
  }
  return rows;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows, const ScalingConfig& cfg, bool timing) {
  std::ostringstream os;
  os << "d,n,m,divergence,dsm_score_evals,dsm_jvp_evals,flipd_score_evals,flipd_jvp_evals,peak_rss_kb\n";
  const char* div = cfg.divergence == DivergenceMethod::kExact ? "exact" : "hutchinson";
  for (const auto& r : rows)
    os << r.d << ',' << r.n << ',' << r.m << ',' << div << ',' << r.dsm_score_evals << ',' << r.dsm_jvp_evals << ','
       << r.flipd_score_evals << ',' << r.flipd_jvp_evals << ',' << (timing ? r.peak_rss_kb : -1) << '\n';
  return os.str();
}

}  // namespace lidkit
