#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "qmc/frechet.hpp"
#include "qmc/gaussianize.hpp"
#include "qmc/io.hpp"
#include "qmc/sampler.hpp"

using namespace qmc;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

// Runs the CLI binary, capturing stdout; stderr goes to a file we can read.
RunResult run_cli(const std::string& args, const std::string& stderr_path = "/dev/null") {
  const std::string command = std::string(QMC_CLI_PATH) + " " + args + " 2>" + stderr_path;
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer;
  std::size_t got;
  while ((got = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.stdout_text.append(buffer.data(), got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("qmc_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("sample/stats/fid pipeline matches the library") {
  TempDir dir;
  const std::string gen_file = dir.file("gen.fmat");
  const std::string ref_file = dir.file("ref.fmat");
  const std::string stats_file = dir.file("ref.gsta");

  auto r1 = run_cli("sample --kind sobol --dim 6 --n 4000 --seed 3 --transform icdf --out " +
                    gen_file);
  REQUIRE(r1.exit_code == 0);
  auto r2 = run_cli("sample --kind uniform --dim 6 --n 4000 --seed 9 --transform icdf --out " +
                    ref_file);
  REQUIRE(r2.exit_code == 0);
  auto r3 = run_cli("stats --features " + ref_file + " --out " + stats_file);
  REQUIRE(r3.exit_code == 0);

  auto fid_run = run_cli("fid --gen " + gen_file + " --ref-stats " + stats_file);
  REQUIRE(fid_run.exit_code == 0);

  const auto gen = load_features(gen_file);
  const auto ref = load_stats(stats_file);
  const double expected = frechet_distance(gaussian_stats(gen), ref);
  CHECK(std::stod(fid_run.stdout_text) == doctest::Approx(expected).epsilon(1e-9));

  // the sample output itself matches the library sampler bit-for-bit
  auto direct = normal_points(SamplerSpec{SamplerKind::sobol, 6, 3, true}, NormalTransform::icdf,
                              kDefaultSobolStart, 4000);
  CHECK((gen.data - direct.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fid-infinity JSON carries replicates and is byte-stable") {
  TempDir dir;
  const std::string gen_file = dir.file("gen.fmat");
  const std::string ref_file = dir.file("ref.gsta");
  REQUIRE(run_cli("sample --kind sobol --dim 4 --n 3000 --seed 1 --transform icdf --out " +
                  gen_file).exit_code == 0);
  {
    GaussianStats ref{Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4), 0};
    save_stats(ref_file, ref);
  }

  const std::string flags = "fid-infinity --gen " + gen_file + " --ref-stats " + ref_file +
                            " --pool-size 3000 --min-batch 200 --points 8 --replicates 5 --seed 7";
  auto a = run_cli(flags + " --json " + dir.file("a.json"));
  REQUIRE(a.exit_code == 0);
  auto b = run_cli(flags + " --json " + dir.file("b.json"));
  REQUIRE(b.exit_code == 0);

  const std::string json_a = slurp(dir.file("a.json"));
  CHECK(json_a == slurp(dir.file("b.json")));
  CHECK(a.stdout_text == b.stdout_text);
  CHECK(json_a.find("\"schema\": 1") != std::string::npos);
  CHECK(json_a.find("\"replicate_intercepts\"") != std::string::npos);
  CHECK(json_a.find("\"replicate_std\"") != std::string::npos);
  // five replicate intercepts listed
  std::size_t pos = json_a.find("\"replicate_intercepts\"");
  std::size_t end = json_a.find(']', pos);
  int commas = 0;
  for (std::size_t i = pos; i < end; ++i) commas += json_a[i] == ',';
  CHECK(commas == 4);
}

TEST_CASE("is subcommand handles splits and JSON") {
  TempDir dir;
  const std::string posteriors = dir.file("p.csv");
  {
    std::ofstream out(posteriors);
    out << "p0,p1\n";
    for (int i = 0; i < 64; ++i) out << (i % 2 ? "0.9,0.1\n" : "0.2,0.8\n");
  }
  auto run = run_cli("is --posteriors " + posteriors + " --splits 4 --seed 2 --json " +
                     dir.file("is.json"));
  REQUIRE(run.exit_code == 0);
  double mean, stddev;
  REQUIRE(std::sscanf(run.stdout_text.c_str(), "%lf %lf", &mean, &stddev) == 2);
  CHECK(mean > 1.0);
  CHECK(mean < 2.0);
  CHECK(stddev >= 0.0);
  CHECK(slurp(dir.file("is.json")).find("\"splits\": 4") != std::string::npos);
}

TEST_CASE("missing files exit 2 and name the path") {
  TempDir dir;
  const std::string err_file = dir.file("err.txt");
  auto run = run_cli("fid --gen /nonexistent/g.fmat --ref-stats /nonexistent/r.gsta", err_file);
  CHECK(run.exit_code == 2);
  CHECK(slurp(err_file).find("/nonexistent/g.fmat") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli("fid --no-such-flag").exit_code == 1);
  CHECK(run_cli("").exit_code == 1);
  CHECK(run_cli("sample --kind sobol --dim 2").exit_code == 1);  // missing required flags
}

TEST_CASE("numerical failures exit 2") {
  TempDir dir;
  // a feature file with a single row cannot produce covariance statistics
  save_features(dir.file("one.fmat"), Eigen::MatrixXd::Ones(1, 3));
  auto run = run_cli("stats --features " + dir.file("one.fmat") + " --out " + dir.file("o.gsta"));
  CHECK(run.exit_code == 2);
}

TEST_CASE("sample runs are deterministic at the byte level") {
  TempDir dir;
  REQUIRE(run_cli("sample --kind sobol --dim 3 --n 500 --seed 11 --out " + dir.file("a.fmat"))
              .exit_code == 0);
  REQUIRE(run_cli("sample --kind sobol --dim 3 --n 500 --seed 11 --out " + dir.file("b.fmat"))
              .exit_code == 0);
  CHECK(slurp(dir.file("a.fmat")) == slurp(dir.file("b.fmat")));

  REQUIRE(run_cli("sample --kind uniform --dim 2 --n 100 --seed 1 --transform bm --out " +
                  dir.file("bm.fmat")).exit_code == 0);
  CHECK(load_features(dir.file("bm.fmat")).data.rows() == 100);
}

TEST_CASE("every run logs its resolved config to stderr") {
  TempDir dir;
  const std::string err_file = dir.file("err.txt");
  REQUIRE(run_cli("sample --kind sobol --dim 2 --n 16 --seed 5 --out " + dir.file("s.fmat"),
                  err_file).exit_code == 0);
  const std::string log = slurp(err_file);
  CHECK(log.find("config:") != std::string::npos);
  CHECK(log.find("\"seed\":5") != std::string::npos);
}
