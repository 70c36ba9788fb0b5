#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = OPKERN_BIN;
const std::string kData = OPKERN_DATA;

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("opkern_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct ScratchCleanup {
  ScratchCleanup() { scratch(); }
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(scratch(), ec);
  }
} cleanup;

std::string data(const std::string& name) { return kData + "/" + name; }

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path out = scratch() / ("stdout_" + std::to_string(counter++));
  const std::string cmd = env + " " + kBin + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

json report(const Result& r) { return json::parse(r.out); }

std::string scalar_kernel(double x) {
  return R"({"labels":["s1"],"dim_h":1,"kind":"explicit","blocks":[[[[[)" + std::to_string(x) + ",0]]]]]}";
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("check-pd --spec /nonexistent.json").code == 2);
  CHECK(run("check-pd").code == 2);
  CHECK(run("check-pd --spec " + write_temp("broken.json", "{not json")).code == 2);
  CHECK(run("check-pd --spec " + write_temp("nolabels.json", R"({"dim_h":1})")).code == 2);
  CHECK(run("sample --spec " + data("identity.json") + " --samples nope").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("check-pd") {
  const auto id = run("check-pd --no-timestamp --spec " + data("identity.json"));
  CHECK(id.code == 0);
  CHECK(report(id)["pd"] == true);
  CHECK(report(id)["n"] == 2);
  CHECK(report(id)["d"] == 2);

  const auto bad = run("check-pd --no-timestamp --spec " + data("indefinite.json"));
  CHECK(bad.code == 1);
  CHECK(report(bad)["min_eig"].get<double>() == doctest::Approx(-1.0));

  const auto h0 = write_temp("cp0.json", R"({"labels":["a","b"],"dim_h":1,"kind":"builder",
      "builder":{"name":"cp_contraction","params":{"h":[[[0,0]]],"points":[[[[1,0]]],[[[0.5,0]]]]}}})");
  CHECK(run("check-pd --spec " + h0).code == 0);

  const auto h1 = write_temp("cp1.json", R"({"labels":["a"],"dim_h":1,"kind":"builder",
      "builder":{"name":"cp_contraction","params":{"h":[[[1,0]]],"points":[[[[1,0]]]]}}})");
  CHECK(run("check-pd --spec " + h1).code == 2);
}

TEST_CASE("reports carry hashes and optional timestamps") {
  const auto with = report(run("check-pd --spec " + data("identity.json")));
  CHECK(with.contains("timestamp"));
  CHECK(with["spec_sha256"].get<std::string>().size() == 64);
  const auto without = report(run("check-pd --no-timestamp --spec " + data("identity.json")));
  CHECK_FALSE(without.contains("timestamp"));
}

TEST_CASE("factorize") {
  const auto ok = run("factorize --no-timestamp --spec " + data("random_pd.json"));
  CHECK(ok.code == 0);
  CHECK(report(ok)["r"] == 4);
  CHECK(run("factorize --spec " + data("indefinite.json")).code == 1);
}

TEST_CASE("realize") {
  const auto a = run("realize --no-timestamp --spec " + data("system_4141.json"));
  CHECK(a.code == 0);
  CHECK(report(a)["eq_c8_residual"].get<double>() < 1e-12);

  const auto b = run("realize --no-timestamp --spec " + data("system_1414.json"));
  CHECK(b.code == 0);
  const auto rb = report(b);
  CHECK(rb["rn_vs_transfer"].get<double>() <= 1e-12);
  CHECK(rb["rn_spectrum"][0].get<double>() == doctest::Approx(0.25));
  for (const char* key : {"c11_residual", "partial_isometry_defect", "eq_a6_residual", "eq_c8_residual",
                          "eq_c10_residual", "rn_spectrum", "rn_vs_transfer"})
    CHECK(rb.contains(key));

  const auto bad = run("realize --no-timestamp --spec " + data("system_invalid.json"));
  CHECK(bad.code == 1);
  CHECK(report(bad)["c11_residual"].get<double>() == doctest::Approx(3.0));

  const auto sing = run("realize --no-timestamp --spec " + data("system_singular.json"));
  CHECK(sing.code == 3);
  CHECK(report(sing)["not_invertible"]["label"] == "s1");

  CHECK(run("realize --spec " + data("identity.json")).code == 2);
}

TEST_CASE("rn") {
  const auto r = run("rn --no-timestamp --spec " + data("rn_scalar.json"));
  CHECK(r.code == 0);
  CHECK(report(r)["sqrt_phi"][0][0][0].get<double>() == doctest::Approx(0.5));
  const auto flipped = write_temp("rn_flip.json", "{\"L\":" + scalar_kernel(4) + ",\"K\":" + scalar_kernel(1) + "}");
  CHECK(run("rn --spec " + flipped).code == 3);
  CHECK(run("rn --spec " + data("system_1414.json")).code == 0);
  CHECK(run("rn --spec " + data("system_4141.json")).code == 3);
  CHECK(run("rn --spec " + data("system_singular.json")).code == 3);
}

TEST_CASE("sample") {
  const auto one = write_temp("k1.json", scalar_kernel(1));
  const auto a = run("sample --spec " + one + " --samples 3 --seed 7");
  const auto b = run("sample --spec " + one + " --samples 3 --seed 7");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("sample,label,coordinate,re,im\n", 0) == 0);
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 4);
  CHECK(run("sample --spec " + one + " --samples 3 --seed 8").out != a.out);
  CHECK(run("sample --spec " + one + " --samples 0").code == 2);
  CHECK(run("sample --spec " + data("indefinite.json") + " --samples 3").code == 1);

  const fs::path file = scratch() / "paths.csv";
  CHECK(run("sample --spec " + one + " --samples 3 --seed 7 --out " + file.string()).code == 0);
  CHECK(slurp(file) == a.out);
}

TEST_CASE("OPKERN_SEED replaces the default seed only") {
  const auto one = write_temp("k1s.json", scalar_kernel(1));
  const auto seven = run("sample --spec " + one + " --samples 3 --seed 7").out;
  const auto three = run("sample --spec " + one + " --samples 3 --seed 3").out;
  const auto zero = run("sample --spec " + one + " --samples 3").out;
  CHECK(run("sample --spec " + one + " --samples 3", "OPKERN_SEED=7").out == seven);
  CHECK(run("sample --spec " + one + " --samples 3 --seed 3", "OPKERN_SEED=7").out == three);
  CHECK(run("sample --spec " + one + " --samples 3 --seed 0").out == zero);
  CHECK(run("sample --spec " + one + " --samples 3", "OPKERN_SEED=abc").code == 2);
}

TEST_CASE("mc-verify") {
  const auto r = run("mc-verify --no-timestamp --spec " + data("joint_scalar.json") + " --samples 200000 --seed 1");
  CHECK(r.code == 0);
  CHECK(report(r)["pass"] == true);
  const auto bad = write_temp("joint_bad.json", "{\"K\":" + scalar_kernel(1) + ",\"L\":" + scalar_kernel(1) +
                                                    ",\"T\":[[[[[2,0]]]]]}");
  CHECK(run("mc-verify --spec " + bad + " --samples 1000").code == 1);
  CHECK(run("mc-verify --spec " + data("joint_scalar.json") + " --samples 10").code == 2);
}

TEST_CASE("condition") {
  const auto r = run("condition --no-timestamp --spec " + data("joint_scalar.json"));
  CHECK(r.code == 0);
  CHECK(report(r)["mean"][0][0][0].get<double>() == doctest::Approx(1.0));
  CHECK(report(r)["cond_cov"][0][0][0][0][0].get<double>() == doctest::Approx(0.75));
  const auto no_obs = write_temp("joint_noobs.json", "{\"K\":" + scalar_kernel(1) + ",\"L\":" + scalar_kernel(1) +
                                                         ",\"T\":[[[[[0,0]]]]]}");
  CHECK(run("condition --spec " + no_obs).code == 2);
  const auto singular = write_temp("joint_sing.json", "{\"K\":" + scalar_kernel(1) + ",\"L\":" + scalar_kernel(0) +
                                                          ",\"T\":[[[[[0,0]]]]],\"observed_L\":[[[1,0]]]}");
  CHECK(run("condition --spec " + singular).code == 3);
}

TEST_CASE("krr-fit and krr-predict") {
  const fs::path fit = scratch() / "fit.json";
  const auto r = run("krr-fit --no-timestamp --spec " + data("krr_scalar.json") + " --train " +
                     data("krr_train.csv") + " --out " + fit.string());
  CHECK(r.code == 0);
  const json f = json::parse(slurp(fit));
  CHECK(f["fitted"][0][0].get<double>() == doctest::Approx(1.0));
  CHECK(f["coefficients"][0][0].get<double>() == doctest::Approx(1.0));
  CHECK(f["kernel_sha256"]["K"].get<std::string>().size() == 64);

  const auto p = run("krr-predict --no-timestamp --fit " + fit.string() + " --query " + data("krr_query.csv"));
  CHECK(p.code == 0);
  CHECK(report(p)["predictions"][0]["prediction"][0].get<double>() == doctest::Approx(1.0));
  CHECK(report(p)["predictions"][1]["prediction"][0].get<double>() == 0.0);

  const auto dup = write_temp("dup.csv", "label,a_0_re,a_0_im,y_re,y_im\ns1,1,0,1,0\ns1,1,0,2,0\n");
  const auto noiseless = write_temp("krr0.json", "{\"K\":" + scalar_kernel(1) + ",\"L\":" + scalar_kernel(0) + "}");
  CHECK(run("krr-fit --spec " + noiseless + " --train " + dup).code == 3);
  const auto garbage = write_temp("bad.csv", "label,a_0_re\ns1\n");
  CHECK(run("krr-fit --spec " + data("krr_scalar.json") + " --train " + garbage).code == 2);
  const auto unknown = write_temp("unknown.csv", "label,a_0_re,a_0_im,y_re,y_im\nzz,1,0,1,0\n");
  CHECK(run("krr-fit --spec " + data("krr_scalar.json") + " --train " + unknown).code == 2);
  CHECK(run("krr-fit --spec " + data("krr_scalar.json")).code == 2);
  CHECK(run("krr-predict --fit " + fit.string()).code == 2);
}
