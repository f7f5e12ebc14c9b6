#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "locality_lab/cli.hpp"
#include "locality_lab/io.hpp"
#include "locality_lab/rng.hpp"

using namespace locality_lab;

namespace {

std::string tmp(const std::string& name) { return std::string(LOCALITY_LAB_TEST_TMP) + "/" + name; }

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  Philox rng(seed, 0);
  Matrix m(r, c);
  for (Eigen::Index q = 0; q < m.size(); ++q) m.data()[q] = rng.normal() * std::pow(10.0, rng.normal() * 4);
  return m;
}

}  // namespace

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min()})
    CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
  CHECK(format_number(Index{42}) == "42");
}

TEST_CASE("matrix CSV and binary round trips") {
  const Matrix m = random_matrix(7, 3, 1);
  write_matrix_csv(tmp("m.csv"), m, {"a", "b", "c"});
  CHECK(read_matrix_csv(tmp("m.csv")) == m);
  write_matrix_binary(tmp("m.bin"), m);
  CHECK(read_matrix(tmp("m.bin")) == m);
  CHECK(std::filesystem::file_size(tmp("m.bin")) == 16 + 7 * 3 * 8);

  std::ofstream(tmp("bad.bin"), std::ios::binary) << "NOPE";
  CHECK_THROWS_AS(read_matrix_binary(tmp("bad.bin")), IoError);
  CHECK_THROWS_AS(read_matrix_csv(tmp("does_not_exist.csv")), IoError);
}

TEST_CASE("graph and model JSON") {
  const auto g = lattice_graph({3, 4});
  CHECK(graph_from_json(graph_to_json(g)) == g);

  const auto gl = model_from_json(Json::parse(R"({"type":"gl_chain","n":5,"lambda":1,"m_param":0,"beta":0.5,"pinning":1})"));
  CHECK(gl->kind() == "gl_chain");
  CHECK(gl->dim() == 5);

  const auto gauss = model_from_json(Json::parse(R"({"type":"gaussian","precision":[[2,-1],[-1,2]],"mean":[0,1]})"));
  CHECK(as_gaussian(*gauss)->mean()[1] == 1.0);

  CHECK_THROWS(model_from_json(Json::parse(R"({"type":"unknown"})")));
}

TEST_CASE("basis JSON round trip") {
  const auto cfg = Json::parse(R"({"type":"linear_gaussian","b":4,"block_size":2,"bandwidth":1,
                                   "obs_per_block":1,"prior_m":1,"prior_M":2,"tau":1,"seed":3})");
  const auto prob = problem_from_json(cfg);
  const auto post = exact_posterior(prob);
  const auto basis = build_basis(exact_diagnostics(prob, post, SamplingMeasure::target), 0.2);
  const auto back = basis_from_json(basis_to_json(basis, cfg));
  CHECK(back.ranks == basis.ranks);
  CHECK(back.epsilon == basis.epsilon);
  for (Index j = 0; j < basis.U.size(); ++j) CHECK(back.U[j] == basis.U[j]);
}

TEST_CASE("config hash is stable") {
  const auto a = Json::parse(R"({"x":1,"y":[1,2]})");
  const auto b = Json::parse(R"({"y":[1,2],"x":1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(Json::parse(R"({"x":2})")));
}

TEST_CASE("CLI exit codes") {
  CHECK(cli::run({"langevin", "run", "--out", tmp("x.csv")}) == cli::kExitUsage);
  CHECK(cli::run({"bounds", "delta", "--S", "2", "--nu", "1", "--m", "1", "--M", "2"}) ==
        cli::kExitOk);
  CHECK(cli::run({"graph", "certify", "--chain", "10", "--S", "2", "--nu", "1"}) == cli::kExitOk);
  CHECK(cli::run({"graph", "certify", "--chain", "10", "--S", "0.5", "--nu", "1"}) ==
        cli::kExitVerificationFailed);
}
