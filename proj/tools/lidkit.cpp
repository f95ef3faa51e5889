// lidkit command-line harness: gen | train | estimate | bench | spectrum | scaling.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lidkit/bench.hpp"
#include "lidkit/estimators.hpp"
#include "lidkit/mlp.hpp"
#include "lidkit/oracles.hpp"

namespace {

using namespace lidkit;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitCapability = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDiverged:
      return kExitDiverged;
    case ErrorKind::kCapability:
      return kExitCapability;
    default:
      return kExitUsage;
  }
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::kIo, "cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path + " for writing");
  os << text;
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed: " + path);
}

std::string sidecar(const std::string& cloud_path) { return cloud_path + ".spec.json"; }

struct GlobalOpts {
  int threads = 0;
  bool no_timing = false;
};

struct FieldOpts {
  std::string oracle;
  std::string checkpoint;
  std::string spec_path;  // defaults to the cloud's sidecar

  void add(CLI::App* app) {
    auto* o = app->add_option("--oracle", oracle, "analytic score field: affine | mixture")
                  ->check(CLI::IsMember({"affine", "mixture"}));
    auto* c = app->add_option("--checkpoint", checkpoint, "trained model checkpoint");
    o->excludes(c);
    app->add_option("--spec", spec_path, "manifold spec JSON for --oracle (default: <cloud>.spec.json)");
  }

  std::shared_ptr<const ScoreField> load(const std::string& cloud_path) const {
    if (!checkpoint.empty()) return std::make_shared<MlpField>(read_checkpoint(checkpoint));
    if (oracle.empty()) return nullptr;
    const ManifoldSpec spec = parse_manifold_json(read_text(spec_path.empty() ? sidecar(cloud_path) : spec_path));
    if (oracle == "affine") {
      require(spec.family == Family::kAffineGaussian, ErrorKind::kSpec,
              "--oracle affine needs an affine_gaussian cloud spec");
      return std::make_shared<AffineField>(affine_oracle_for(spec));
    }
    require(spec.family == Family::kPointMixture, ErrorKind::kSpec,
            "--oracle mixture needs a point_mixture cloud spec");
    return std::make_shared<MixtureField>(mixture_oracle_for(spec));
  }
};

DivergenceMethod divergence_from(const std::string& s) {
  return s == "exact" ? DivergenceMethod::kExact : DivergenceMethod::kHutchinson;
}

// --- gen ---------------------------------------------------------------------

void add_gen(CLI::App& app, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("gen", "sample a synthetic manifold point cloud");
  auto spec = std::make_shared<ManifoldSpec>();
  auto family = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto no_rotate = std::make_shared<bool>(false);
  cmd->add_option("--family", *family, "hypersphere | hyperball | twinpeaks_graph | clifford_torus | nonlinear | "
                                       "affine_gaussian | point_mixture")
      ->required();
  cmd->add_option("--d", spec->d, "intrinsic dimension")->required();
  cmd->add_option("--n", spec->n, "ambient dimension")->required();
  cmd->add_option("--N", spec->N, "number of points")->capture_default_str();
  cmd->add_option("--seed", spec->seed)->capture_default_str();
  cmd->add_flag("--no-rotate", *no_rotate, "skip the random rotation");
  cmd->add_flag("--permute-dims", spec->permute_dims, "permute coordinates after rotating");
  cmd->add_option("--radius", spec->radius)->capture_default_str();
  cmd->add_option("--height", spec->height)->capture_default_str();
  cmd->add_option("--scale", spec->scale)->capture_default_str();
  cmd->add_option("--anchors", spec->anchors)->capture_default_str();
  cmd->add_option("--out", *out, "output file (.csv for text, anything else binary)")->required();
  cmd->callback([=, &action] {
    action = [=] {
      ManifoldSpec s = *spec;
      s.family = parse_family(*family);
      s.rotate = !*no_rotate;
      s.validate();
      const PointCloud cloud = sample(s);
      write_cloud(cloud, *out);
      write_text(sidecar(*out), manifold_json(s));
      std::cout << "wrote " << *out << ": " << s.label() << " N=" << cloud.size() << " n=" << cloud.dim()
                << " seed=" << s.seed << '\n';
    };
  });
}

// --- train -------------------------------------------------------------------

void add_train(CLI::App& app, std::function<void()>& action, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("train", "train a noise-prediction MLP on a point cloud");
  struct Opts {
    std::string cloud, out, loss_csv;
    MlpConfig mlp;
    TrainConfig train;
    std::string activation = "silu", embedding = "sinusoidal", target = "epsilon";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--cloud", o->cloud)->required();
  cmd->add_option("--out", o->out, "checkpoint path")->required();
  cmd->add_option("--loss-csv", o->loss_csv, "loss trace (default: <out>.loss.csv)");
  cmd->add_option("--batches", o->train.batches)->capture_default_str();
  cmd->add_option("--batch-size", o->train.batch_size)->capture_default_str();
  cmd->add_option("--lr", o->train.learning_rate)->capture_default_str();
  cmd->add_option("--lr-final", o->train.final_learning_rate)->capture_default_str();
  cmd->add_option("--sigma-min", o->train.sigma_min)->capture_default_str();
  cmd->add_option("--sigma-max", o->train.sigma_max)->capture_default_str();
  cmd->add_option("--seed", o->train.seed)->capture_default_str();
  cmd->add_option("--width", o->mlp.width)->capture_default_str();
  cmd->add_option("--depth", o->mlp.depth)->capture_default_str();
  cmd->add_option("--frequencies", o->mlp.frequencies)->capture_default_str();
  cmd->add_option("--activation", o->activation)->check(CLI::IsMember({"silu", "tanh", "identity"}));
  cmd->add_option("--embedding", o->embedding)->check(CLI::IsMember({"scalar", "sinusoidal"}));
  cmd->add_option("--target", o->target)->check(CLI::IsMember({"epsilon", "velocity"}));
  cmd->callback([=, &action, &g] {
    action = [=, &g] {
      const PointCloud cloud = read_cloud(o->cloud);
      MlpConfig mc = o->mlp;
      mc.input_dim = cloud.dim();
      mc.activation = o->activation == "silu"   ? Activation::kSilu
                      : o->activation == "tanh" ? Activation::kTanh
                                                : Activation::kIdentity;
      mc.embedding = o->embedding == "scalar" ? SigmaEmbedding::kScalar : SigmaEmbedding::kSinusoidal;
      mc.target = o->target == "epsilon" ? Target::kEpsilon : Target::kVelocity;
      TrainConfig tc = o->train;
      tc.threads = g.threads;
      tc.validate();
      const TrainResult r = train(MlpModel::initialized(mc, tc.seed), cloud, tc);
      write_checkpoint(r.model, o->out);
      std::ostringstream csv;
      csv << "batch,loss,lr\n";
      for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
        csv << i << ',' << format_double(r.loss_trace[i]) << ',' << format_double(r.lr_trace[i]) << '\n';
      write_text(o->loss_csv.empty() ? o->out + ".loss.csv" : o->loss_csv, csv.str());
      std::cout << "trained " << o->out << ": initial mean loss " << format_double(r.initial_window_mean)
                << ", final mean loss " << format_double(r.final_window_mean) << '\n';
    };
  });
}

// --- estimate ----------------------------------------------------------------

void add_estimate(CLI::App& app, std::function<void()>& action, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("estimate", "run one LID estimator over a point cloud");
  struct Opts {
    std::string cloud, estimator, out = "report", divergence = "exact";
    FieldOpts field;
    EstimatorParams p;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--cloud", o->cloud)->required();
  cmd->add_option("--estimator", o->estimator, "dsm | flipd | nb | eb | mle | twonn")->required();
  o->field.add(cmd);
  cmd->add_option("--sigma", o->p.sigma)->capture_default_str();
  cmd->add_option("--m", o->p.m, "noise samples per point")->capture_default_str();
  cmd->add_option("--divergence", o->divergence)->check(CLI::IsMember({"exact", "hutchinson"}));
  cmd->add_option("--probes", o->p.probes)->capture_default_str();
  cmd->add_option("--nb-tau", o->p.nb_tau)->capture_default_str();
  cmd->add_option("--eb-tau", o->p.eb_tau)->capture_default_str();
  cmd->add_flag("--noised-flipd", o->p.noised_flipd, "average FLIPD over noised copies of each point");
  cmd->add_option("--k", o->p.k, "neighborhood size (mle, twonn)")->capture_default_str();
  cmd->add_option("--seed", o->p.seed)->capture_default_str();
  cmd->add_option("--out", o->out, "output prefix; writes <out>.csv and <out>.json")->capture_default_str();
  cmd->callback([=, &action, &g] {
    action = [=, &g] {
      const EstimatorId id = parse_estimator(o->estimator);
      EstimatorParams p = o->p;
      p.divergence = divergence_from(o->divergence);
      p.validate();
      const PointCloud cloud = read_cloud(o->cloud);
      const auto field = o->field.load(o->cloud);
      LIDReport r = estimate_cloud(field.get(), cloud, id, p, g.threads);
      if (g.no_timing) r.runtime_ms = 0.0;
      write_report_csv(r, o->out + ".csv");
      write_report_json(r, o->out + ".json");
      if (r.negative_estimates > 0)
        std::cerr << "warning: " << r.negative_estimates << " negative estimates\n";
      std::cout << report_json(r);
    };
  });
}

// --- bench -------------------------------------------------------------------

void add_bench(CLI::App& app, std::function<void()>& action, const GlobalOpts& g, int& status) {
  auto* cmd = app.add_subcommand("bench", "run an estimator grid over benchmark manifolds");
  struct Opts {
    std::string config, out_dir;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON bench config")->required();
  cmd->add_option("--out-dir", o->out_dir, "output directory (overrides the config)");
  cmd->callback([=, &action, &g, &status] {
    action = [=, &g, &status] {
      BenchConfig cfg = parse_bench_config(read_text(o->config));
      if (!o->out_dir.empty()) cfg.output_dir = o->out_dir;
      std::filesystem::create_directories(cfg.output_dir);
      const BenchResult r = run_bench(cfg, g.threads, &std::cerr);
      for (const auto& row : r.rows)
        if (!row.error.empty())
          std::cerr << "warning: " << row.manifold << ' ' << row.estimator << " sigma=" << format_double(row.sigma)
                    << " failed: " << row.error << '\n';
      const std::string table = bench_table(r);
      write_text(cfg.output_dir + "/bench.csv", bench_csv(r, !g.no_timing));
      write_text(cfg.output_dir + "/bench_table.txt", table);
      std::cout << table;
      if (r.failures() == r.rows.size()) {
        std::cerr << "error: every grid cell failed\n";
        status = kExitUsage;
      }
    };
  });
}

// --- spectrum ----------------------------------------------------------------

void add_spectrum(CLI::App& app, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("spectrum", "error-bundle spectra at one point for several m");
  struct Opts {
    std::string cloud, out = "spectrum.csv";
    FieldOpts field;
    Eigen::Index point = 0;
    std::vector<int> ms{8, 64, 256};
    double sigma = 0.01;
    double nb_tau = 0.1;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--cloud", o->cloud)->required();
  o->field.add(cmd);
  cmd->add_option("--point", o->point, "row index of the point")->capture_default_str();
  cmd->add_option("--m", o->ms, "noise sample counts")->delimiter(',')->capture_default_str();
  cmd->add_option("--sigma", o->sigma)->capture_default_str();
  cmd->add_option("--nb-tau", o->nb_tau)->capture_default_str();
  cmd->add_option("--seed", o->seed)->capture_default_str();
  cmd->add_option("--out", o->out)->capture_default_str();
  cmd->callback([=, &action] {
    action = [=] {
      const PointCloud cloud = read_cloud(o->cloud);
      const auto field = o->field.load(o->cloud);
      require(field != nullptr, ErrorKind::kCapability, "spectrum needs --oracle or --checkpoint");
      require(field->dim() == cloud.dim(), ErrorKind::kShape, "field dimension does not match the cloud");
      require(o->point >= 0 && o->point < cloud.size(), ErrorKind::kParam, "--point out of range");
      const Vector x = cloud.points.row(o->point).transpose();
      const auto idx = static_cast<std::uint64_t>(o->point);
      const auto entries = spectrum_study(*field, x, o->sigma, o->seed, idx, o->ms);
      write_text(o->out, spectrum_csv(entries));
      for (const auto& e : entries) {
        EstimatorParams p;
        p.sigma = o->sigma;
        p.m = e.m;
        p.nb_tau = o->nb_tau;
        p.seed = o->seed;
        FieldProbe probe(*field);
        const int nb = normal_bundle_lid(probe, x, p, idx);
        const double trace = e.spectrum.sum();
        std::cout << "m=" << e.m << " trace=" << format_double(trace) << " dsm=" << format_double(e.dsm)
                  << " |trace-dsm|=" << format_double(std::abs(trace - e.dsm)) << " nb_lid=" << nb << '\n';
      }
    };
  });
}

// --- scaling -----------------------------------------------------------------

void add_scaling(CLI::App& app, std::function<void()>& action, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("scaling", "evaluation counters as the dimension grows");
  struct Opts {
    std::string config, out = "scaling.csv";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON scaling config")->required();
  cmd->add_option("--out", o->out)->capture_default_str();
  cmd->callback([=, &action, &g] {
    action = [=, &g] {
      const ScalingConfig cfg = parse_scaling_config(read_text(o->config));
      const auto rows = scaling_study(cfg, g.threads);
      const std::string csv = scaling_csv(rows, cfg, !g.no_timing);
      write_text(o->out, csv);
      std::cout << csv;
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local intrinsic dimension estimation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOpts g;
  app.add_option("--threads", g.threads, "worker threads (default: LIDKIT_THREADS or all cores)");
  app.add_flag("--no-timing", g.no_timing, "write zero for runtimes and memory samples");

  std::function<void()> action;
  int status = kExitOk;
  add_gen(app, action);
  add_train(app, action, g);
  add_estimate(app, action, g);
  add_bench(app, action, g, status);
  add_spectrum(app, action);
  add_scaling(app, action, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (action) action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return status;
}
