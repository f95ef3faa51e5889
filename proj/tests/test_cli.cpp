#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sys/wait.h>

#include <json.hpp>

#include "lidkit/manifolds.hpp"
#include "lidkit/mlp.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::current_path() / "cli_work";

int run(const std::string& args) {
  fs::create_directories(kDir);
  const std::string cmd = "cd '" + kDir.string() + "' && '" LIDKIT_CLI "' " + args + " > last.out 2> last.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& name) {
  std::ifstream is(kDir / name, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void write(const std::string& name, const std::string& text) { std::ofstream(kDir / name) << text; }

}  // namespace

TEST_CASE("gen") {
  REQUIRE(run("gen --family hypersphere --d 4 --n 16 --N 2000 --seed 7 --out s.lidc") == 0);
  CHECK(slurp("last.out").find("N=2000 n=16") != std::string::npos);
  const lidkit::PointCloud c = lidkit::read_cloud((kDir / "s.lidc").string());
  CHECK(c.size() == 2000);
  CHECK(c.dim() == 16);
  const std::string first = slurp("s.lidc");
  REQUIRE(run("gen --family hypersphere --d 4 --n 16 --N 2000 --seed 7 --out s.lidc") == 0);
  CHECK(slurp("s.lidc") == first);

  CHECK(run("gen --family hypersphere --d 20 --n 16 --out bad.lidc") == 2);
  CHECK(slurp("last.err").find("d must satisfy family constraint") != std::string::npos);
  CHECK(run("gen --family moebius --d 2 --n 3 --out bad.lidc") == 2);
  CHECK(run("gen --d 2") == 2);
  CHECK(run("") == 2);
}

TEST_CASE("train") {
  REQUIRE(run("gen --family affine_gaussian --d 2 --n 4 --N 200 --seed 1 --out a.lidc") == 0);
  const std::string args = "train --cloud a.lidc --batches 40 --batch-size 16 --width 16 --depth 2 --seed 3";
  REQUIRE(run(args + " --out m1.lidm") == 0);
  REQUIRE(run(args + " --out m2.lidm") == 0);
  CHECK(slurp("m1.lidm") == slurp("m2.lidm"));
  CHECK(slurp("m1.lidm").substr(0, 5) == "LIDM1");
  const std::string loss = slurp("m1.lidm.loss.csv");
  CHECK(loss.rfind("batch,loss,lr\n", 0) == 0);
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 41);
  CHECK(run("train --cloud a.lidc --batches 0 --out m3.lidm") == 2);
  CHECK(run("train --cloud a.lidc --batches 30 --lr 1000 --lr-final 1000 --width 16 --depth 2 --out m4.lidm") == 3);
  CHECK(run("train --cloud missing.lidc --out m5.lidm") == 2);
}

TEST_CASE("estimate") {
  REQUIRE(run("gen --family affine_gaussian --d 8 --n 32 --N 2000 --seed 2 --out a8.lidc") == 0);
  REQUIRE(run("estimate --cloud a8.lidc --oracle affine --estimator dsm --sigma 0.01 --m 256 --out dsm") == 0);
  const auto doc = nlohmann::json::parse(slurp("dsm.json"));
  CHECK(doc["mae"].get<double>() <= 0.3);
  CHECK(doc["points"] == 2000);
  CHECK(slurp("dsm.csv").rfind("point_index,estimate,true_lid,score_evals,jvp_evals\n", 0) == 0);

  REQUIRE(run("estimate --cloud a8.lidc --oracle affine --estimator flipd --sigma 0.05 --out fl") == 0);
  CHECK(nlohmann::json::parse(slurp("fl.json"))["mae"].get<double>() <= 0.1);

  REQUIRE(run("estimate --cloud a8.lidc --estimator mle --k 20 --out mle") == 0);
  CHECK(run("estimate --cloud a8.lidc --oracle affine --estimator bogus") == 2);
  CHECK(run("estimate --cloud a8.lidc --estimator flipd") == 4);
  CHECK(run("estimate --cloud a8.lidc --oracle mixture --estimator dsm") == 2);
  CHECK(run("estimate --cloud a8.lidc --oracle affine --estimator dsm --sigma -1") == 2);

  // A field without Jacobian-vector products cannot run flipd: checkpoint
  // fields always have them, so check the mixture/affine mismatch path instead
  // and a checkpoint of the wrong dimension.
  lidkit::MlpConfig c;
  c.input_dim = 5;
  c.width = 4;
  c.depth = 1;
  lidkit::write_checkpoint(lidkit::MlpModel::initialized(c, 0), (kDir / "wrong.lidm").string());
  CHECK(run("estimate --cloud a8.lidc --checkpoint wrong.lidm --estimator dsm") == 2);
}

TEST_CASE("bench") {
  write("oracle.json", R"({
    "manifolds": [{"family": "affine_gaussian", "d": 4, "n": 16, "N": 500},
                  {"family": "point_mixture", "d": 0, "n": 8, "N": 200}],
    "estimators": ["dsm"], "sigmas": [0.01, 0.02, 0.05], "m": 256, "field": "oracle"})");
  REQUIRE(run("bench --config oracle.json --out-dir bench_out --no-timing") == 0);
  const std::string csv = slurp("bench_out/bench.csv");
  CHECK(csv.rfind("manifold,d,n,estimator,sigma,m,mae,mean,stddev,score_evals,jvp_evals,runtime_ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(slurp("last.out").find("Average") != std::string::npos);

  write("allfail.json", R"({"manifolds": [{"family": "hyperball", "d": 2, "n": 3, "N": 50}],
    "estimators": ["dsm"], "sigmas": [0.01], "field": "oracle"})");
  CHECK(run("bench --config allfail.json --out-dir bench_fail") == 2);
  write("empty.json", R"({"manifolds": [], "estimators": ["dsm"], "sigmas": [0.01]})");
  CHECK(run("bench --config empty.json") == 2);
}

TEST_CASE("spectrum") {
  REQUIRE(run("gen --family affine_gaussian --d 8 --n 16 --N 4 --out sp.lidc") == 0);
  REQUIRE(run("spectrum --cloud sp.lidc --oracle affine --point 1 --m 8,64 --out spec.csv") == 0);
  const std::string csv = slurp("spec.csv");
  CHECK(csv.rfind("m,rank,eigenvalue\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 16);
  CHECK(slurp("last.out").find("m=64 trace=") != std::string::npos);
  CHECK(run("spectrum --cloud sp.lidc --oracle affine --point 9") == 2);
  CHECK(run("spectrum --cloud sp.lidc --point 0") == 4);
}

TEST_CASE("scaling") {
  write("scaling.json", R"({"pairs": [[4, 8], [8, 16]], "m": 8, "points": 2})");
  REQUIRE(run("scaling --config scaling.json --out scaling.csv") == 0);
  const std::string csv = slurp("scaling.csv");
  CHECK(csv.rfind("d,n,m,divergence,dsm_score_evals,dsm_jvp_evals,flipd_score_evals,flipd_jvp_evals,peak_rss_kb\n", 0) ==
        0);
  CHECK(csv.find("4,8,8,exact,8,0,1,8,") != std::string::npos);
  CHECK(csv.find("8,16,8,exact,8,0,1,16,") != std::string::npos);
  write("scaling_bad.json", R"({"pairs": [[4, 9]]})");
  CHECK(run("scaling --config scaling_bad.json") == 2);
}
