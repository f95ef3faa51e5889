#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "lidkit/estimators.hpp"

namespace lidkit {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_report_csv(const LIDReport& r, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path + " for writing");
  os << "point_index,estimate,true_lid,score_evals,jvp_evals\n";
  for (std::size_t i = 0; i < r.estimates.size(); ++i) {
    os << i << ',' << format_double(r.estimates[i]) << ',';
    if (!r.true_lid.empty()) os << r.true_lid[i];
    os << ',' << r.counts[i].score << ',' << r.counts[i].jvp << '\n';
  }
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed: " + path);
}

std::string report_json(const LIDReport& r) {
  nlohmann::ordered_json j;
  j["estimator"] = r.estimator;
  const EstimatorParams& p = r.params;
  nlohmann::ordered_json params;
  if (r.estimator == "mle" || r.estimator == "twonn") {
    params["k"] = p.k;
  } else {
    params["sigma"] = p.sigma;
    params["m"] = p.m;
    params["seed"] = p.seed;
    if (r.estimator == "flipd") {
      params["divergence"] = p.divergence == DivergenceMethod::kExact ? "exact" : "hutchinson";
      if (p.divergence == DivergenceMethod::kHutchinson) params["probes"] = p.probes;
      params["noised"] = p.noised_flipd;
    }
    if (r.estimator == "nb") params["tau"] = p.nb_tau;
    if (r.estimator == "eb") params["tau"] = p.eb_tau;
  }
  j["params"] = params;
  const auto mae = r.mae();
  j["mae"] = mae ? nlohmann::ordered_json(*mae) : nlohmann::ordered_json(nullptr);
  j["mean"] = r.mean();
  j["stddev"] = r.stddev();
  j["runtime_ms"] = r.runtime_ms;
  j["points"] = r.estimates.size();
  const EvalCounts total = r.total_counts();
  j["score_evals"] = total.score;
  j["jvp_evals"] = total.jvp;
  j["negative_estimates"] = r.negative_estimates;
  return j.dump(2) + "\n";
}

void write_report_json(const LIDReport& r, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path + " for writing");
  os << report_json(r);
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed: " + path);
}

}  // namespace lidkit
