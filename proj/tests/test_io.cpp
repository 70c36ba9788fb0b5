#include <doctest.h>

#include <sstream>

#include "opkern/builders.hpp"
#include "opkern/io.hpp"
#include "oracles.hpp"

using namespace opkern;
using io::json;

TEST_CASE("complex numbers and matrices use [re, im] pairs") {
  CHECK(io::to_json(cplx(1.5, -2.0)) == json::array({1.5, -2.0}));
  CHECK(io::complex_from_json(json::array({0.25, 3})) == cplx(0.25, 3.0));
  CHECK_THROWS_AS(io::complex_from_json(json::array({1})), io::SpecError);
  CHECK_THROWS_AS(io::complex_from_json(json("x")), io::SpecError);

  const Mat m = random_complex_matrix(1, 50, 2, 3);
  CHECK(io::matrix_from_json(io::to_json(m)) == m);
  CHECK_THROWS_AS(io::matrix_from_json(json::parse("[[[1,0]],[[1,0],[2,0]]]")), io::SpecError);
}

TEST_CASE("explicit kernel specs round-trip") {
  const auto k = random_pd_kernel(3, 3, 2, 4);
  const auto back = io::kernel_from_spec(io::kernel_to_spec(k));
  CHECK(back.labels() == k.labels());
  CHECK(oracle::max_abs_diff(back.gram(), k.gram()) == 0.0);
}

TEST_CASE("builder specs expand to the zoo") {
  const json id = json::parse(R"({"labels":["a","b"],"dim_h":2,"kind":"builder",
                                  "builder":{"name":"identity","params":{}}})");
  CHECK(oracle::max_abs_diff(io::kernel_from_spec(id).gram(), Mat::Identity(4, 4)) == 0.0);

  const json cp = json::parse(R"({"labels":["a"],"dim_h":1,"kind":"builder",
      "builder":{"name":"cp_contraction","params":{"h":[[[0,0]]],"points":[[[[1,0]]]]}}})");
  CHECK(io::kernel_from_spec(cp).block(0, 0)(0, 0) == cplx(1.0, 0.0));

  const json neu = json::parse(R"({"labels":["a","b"],"dim_h":1,"kind":"builder",
      "builder":{"name":"neumann_series","params":{"h":[[[0.5,0]]],"points":[[[[1,0]]],[[[2,0]]]]}}})");
  CHECK(std::abs(io::kernel_from_spec(neu).block(1, 1)(0, 0) - cplx(16.0 / 3.0, 0.0)) < 1e-11);

  const json rnd = json::parse(R"({"labels":["p","q","r"],"dim_h":2,"kind":"builder",
      "builder":{"name":"random_pd","params":{"seed":7,"rank":4}}})");
  const auto k = io::kernel_from_spec(rnd);
  CHECK(k.labels()[2] == "r");
  CHECK(oracle::max_abs_diff(k.gram(), random_pd_kernel(7, 3, 2, 4).gram()) == 0.0);

  const json con = json::parse(R"({"labels":["a","b"],"dim_h":1,"kind":"builder",
      "builder":{"name":"constant","params":{"value":[[[3,0]]]}}})");
  CHECK(io::kernel_from_spec(con).block(0, 1)(0, 0) == cplx(3.0, 0.0));
}

TEST_CASE("malformed kernel specs are input errors") {
  CHECK_THROWS_AS(io::kernel_from_spec(json::parse(R"({"labels":["a"],"dim_h":1,"kind":"other"})")),
                  io::SpecError);
  CHECK_THROWS_AS(io::kernel_from_spec(json::parse(R"({"labels":["a"],"kind":"explicit"})")), io::SpecError);
  CHECK_THROWS_AS(io::kernel_from_spec(json::parse(
                      R"({"labels":["a"],"dim_h":1,"kind":"builder","builder":{"name":"nope"}})")),
                  io::SpecError);
  CHECK_THROWS_AS(io::kernel_from_spec(json::parse(
                      R"({"labels":["a","b"],"dim_h":1,"kind":"explicit","blocks":[[[[[1,0]]]]]})")),
                  io::SpecError);
  CHECK_THROWS_AS(io::kernel_from_spec(json::parse(
                      R"({"labels":["a","a"],"dim_h":1,"kind":"builder","builder":{"name":"identity"}})")),
                  LabelError);
  CHECK_THROWS_AS(io::kernel_from_spec(json::parse(
                      R"({"labels":["a","b"],"dim_h":1,"kind":"explicit",
                          "blocks":[[[[[1,0]]],[[[2,0]]]],[[[[3,0]]],[[[1,0]]]]]})")),
                  InvalidKernel);
}

TEST_CASE("system and joint specs") {
  const json k = json::parse(R"({"labels":["s1"],"dim_h":1,"kind":"explicit","blocks":[[[[[4,0]]]]]})");
  const json sys{{"K1", k}, {"K2", k}, {"L1", k}, {"L2", k}, {"T", json::parse("[[[1,0]]]")}};
  CHECK(io::system_from_json(sys).t(0, 0) == cplx(1.0, 0.0));
  json missing = sys;
  missing.erase("T");
  CHECK_THROWS_AS(io::system_from_json(missing), io::SpecError);

  json joint{{"K", k}, {"L", k}, {"T", json::parse("[[[[[0.5,0]]]]]")}};
  CHECK_FALSE(io::joint_from_json(joint).observed_l.has_value());
  joint["observed_L"] = json::parse("[[[2,0]]]");
  CHECK(io::joint_from_json(joint).observed_l->operator()(0, 0) == cplx(2.0, 0.0));
}

TEST_CASE("feature systems export labels, shapes and features") {
  const auto f = kolmogorov_factorize(random_pd_kernel(2, 2, 2, 3));
  const json j = io::feature_system_to_json(f);
  CHECK(j["r"] == 3);
  CHECK(j["d"] == 2);
  CHECK(j["labels"] == json::array({"s1", "s2"}));
  CHECK(io::matrix_from_json(j["features"][1]) == f.feature(1));
}

TEST_CASE("path batches write one CSV row per coordinate") {
  PathBatch b(LabelSet::numbered(2), 1, 2, 0, 5);
  b.at(1, 1, 0) = cplx(0.1, -2.5);
  std::ostringstream out;
  io::write_paths_csv(out, b);
  CHECK(out.str() == "sample,label,coordinate,re,im\n5,s1,0,0,0\n5,s2,0,0,0\n6,s1,0,0,0\n6,s2,0,0.1,-2.5\n");
}

TEST_CASE("training CSV round-trip and errors") {
  TrainingSet t{{TrainingSample{"s1", Vec::Unit(2, 0), cplx(1, 2)},
                 TrainingSample{"s2", Vec::Constant(2, cplx(0.5, -0.25)), cplx(-3, 0)}}};
  std::stringstream buf;
  io::write_training_csv(buf, t);
  const auto back = io::read_training_csv(buf, 2);
  REQUIRE(back.size() == 2);
  CHECK(back.samples[1].label == "s2");
  CHECK(back.samples[1].a == t.samples[1].a);
  CHECK(back.samples[0].y == cplx(1, 2));

  std::istringstream no_y("label,a_0_re,a_0_im\ns1,1,0\n");
  CHECK(io::read_training_csv(no_y, 1, false).samples[0].y == cplx(0, 0));
  std::istringstream bad("label,a_0_re,a_0_im,y_re,y_im\ns1,1,x,2,0\n");
  CHECK_THROWS_AS(io::read_training_csv(bad, 1), io::SpecError);
  std::istringstream short_row("label,a_0_re,a_0_im,y_re,y_im\ns1,1\n");
  CHECK_THROWS_AS(io::read_training_csv(short_row, 1), io::SpecError);
  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_training_csv(empty, 1), io::SpecError);
}

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-2.0) == "-2");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
