#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "htsysid/errors.hpp"
#include "htsysid/io.hpp"
#include "htsysid/lti.hpp"

using namespace htsysid;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("htsysid_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("format_double round-trips awkward values exactly") {
  for (const double v :
       {0.1, 1.0 / 3.0, 3.141592653589793, 1e-300, 1e300, -2.5e-8,
        0.36787944117144233, 123456789.123456789, 5e-324}) {
    CAPTURE(v);
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-3.0) == "-3");
}

TEST_CASE("fnv1a matches published 64-bit test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("dataset round trip is lossless") {
  TempDir tmp;
  const auto sys = default_system();
  NoiseSpecs specs;
  specs.u = DistributionSpec::student_t(2.5, 1.0);
  const auto ds = simulate_dataset(sys, 7, 4, specs, RngKey(12));
  const std::string path = tmp.file("data.txt");
  save_dataset(path, ds, sys.state_dim());

  const auto loaded = load_dataset(path);
  CHECK(loaded.n == 3);
  REQUIRE(loaded.rollouts.size() == 7);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK((loaded.rollouts[i].inputs - ds[i].inputs).norm() == 0.0);
    CHECK((loaded.rollouts[i].outputs - ds[i].outputs).norm() == 0.0);
    CHECK(!loaded.rollouts[i].has_noise_records());
  }

  // header is a single line naming all dimensions
  std::ifstream f(path);
  std::string first;
  std::getline(f, first);
  CHECK(first == "n=3 m=2 p=2 T=4 N=7");
}

TEST_CASE("dataset loader rejects malformed files") {
  TempDir tmp;
  const std::string path = tmp.file("bad.txt");
  CHECK_THROWS_AS(load_dataset(tmp.file("missing.txt")), IoError);

  {
    std::ofstream f(path);
    f << "n=1 m=1 T=2 N=1\n1 2\n3 4\n";  // p missing
  }
  CHECK_THROWS_AS(load_dataset(path), IoError);

  {
    std::ofstream f(path);
    f << "n=1 m=1 p=1 T=2 N=2\n1 2\n3 4\n";  // second rollout truncated
  }
  CHECK_THROWS_AS(load_dataset(path), IoError);

  {
    std::ofstream f(path);
    f << "n=1 m=1 p=1 T=2 N=1\n1 2\n3 oops\n";
  }
  CHECK_THROWS_AS(load_dataset(path), IoError);
}

TEST_CASE("matrix and markov round trips") {
  TempDir tmp;
  Eigen::MatrixXd M(2, 3);
  M << 0.1, -1.0 / 3.0, 5e-17, 2.0, 3.5, -0.25;
  const std::string path = tmp.file("mat.txt");
  save_matrix(path, M);
  CHECK((load_matrix(path) - M).norm() == 0.0);

  MarkovMatrix g;
  g.entries = M;
  g.block_width = 1;
  const std::string gpath = tmp.file("markov.txt");
  save_markov(gpath, g);
  std::map<std::string, std::string> hdr;
  const auto back = load_matrix(gpath, &hdr);
  CHECK(hdr.at("m") == "1");
  CHECK((back - M).norm() == 0.0);

  const auto gg = load_markov(gpath);
  CHECK(gg.block_width == 1);
  CHECK(gg.block_count() == 3);

  // explicit block width overrides the header
  const auto gg3 = load_markov(gpath, 3);
  CHECK(gg3.block_count() == 1);
  CHECK_THROWS_AS(load_markov(gpath, 2), IoError);  // 3 % 2 != 0
}

TEST_CASE("section files hold whole systems") {
  TempDir tmp;
  const auto sys = seeded_system(3, 2, 1, 77, 0.7);
  const std::string path = tmp.file("sys.txt");
  save_system(path, sys);
  const auto back = load_system(path);
  CHECK((back.A - sys.A).norm() == 0.0);
  CHECK((back.B - sys.B).norm() == 0.0);
  CHECK((back.C - sys.C).norm() == 0.0);
  CHECK((back.D - sys.D).norm() == 0.0);

  const auto sections = load_sections(path);
  CHECK(sections.size() == 4);
  CHECK(sections.count("A") == 1);

  {
    std::ofstream f(tmp.file("partial.txt"));
    f << "section=A rows=1 cols=1\n0.5\n";
  }
  CHECK_THROWS_AS(load_system(tmp.file("partial.txt")), IoError);
}

TEST_CASE("kv rendering") {
  const auto text = render_kv({{"K", "32"}, {"median_residual", "1e-12"}});
  CHECK(text == "K = 32\nmedian_residual = 1e-12\n");
  TempDir tmp;
  save_kv(tmp.file("diag.txt"), {{"a", "1"}});
  std::ifstream f(tmp.file("diag.txt"));
  std::string line;
  std::getline(f, line);
  CHECK(line == "a = 1");
}
