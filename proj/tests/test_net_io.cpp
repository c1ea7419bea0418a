#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "qcomp/net_io.hpp"

using namespace qcomp;

namespace {

Mlp random_net(const std::vector<int>& sizes, std::uint64_t seed) {
  Mlp net(sizes);
  Rng rng(seed);
  init_glorot(net, rng);
  for (float& v : net.params()) v *= static_cast<float>(uniform(rng, 0.1, 1000.0));
  for (std::size_t i = 0; i < net.input_mean.size(); ++i) {
    net.input_mean[i] = static_cast<float>(uniform(rng, -5000.0, 5000.0));
    net.input_range[i] = static_cast<float>(uniform(rng, 0.1, 60000.0));
  }
  net.output_mean = static_cast<float>(uniform(rng, -50.0, 0.0));
  net.output_range = static_cast<float>(uniform(rng, 1.0, 120.0));
  return net;
}

NetworkArray random_array(std::size_t taus, const std::vector<int>& sizes) {
  std::vector<double> cuts;
  for (std::size_t t = 0; t < taus; ++t) cuts.push_back(static_cast<double>(10 * t));
  std::vector<Mlp> members;
  for (std::size_t m = 0; m < taus * kNumAdvisories; ++m) members.push_back(random_net(sizes, 100 + m));
  return NetworkArray(cuts, members, true);
}

std::size_t line_of(const std::string& text) {
  try {
    (void)decode_net(text);
  } catch (const NetFormatError& e) {
    return e.line();
  }
  FAIL("decode succeeded");
  return 0;
}

}  // namespace

TEST_CASE("network text round trip is exact") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Mlp net = random_net({5, 7, 6, 5}, seed);
    const Mlp back = decode_net(encode_net(net, {"source=test", "seed=1"}));
    CHECK(back == net);
    CHECK(encode_net(back) == encode_net(net));
  }
}

TEST_CASE("network comments") {
  const std::string text = encode_net(random_net({2, 2}, 4), {"a=1", " b = two"});
  CHECK(text.starts_with("//a=1\n// b = two\n1\n2,2\n"));
  CHECK(net_comments(text) == std::vector<std::string>{"a=1", " b = two"});
  CHECK(net_comments(encode_net(random_net({2, 2}, 4))).empty());
}

TEST_CASE("network format errors name the line") {
  const std::string good = encode_net(random_net({3, 4, 5}, 5), {"c"});
  std::vector<std::string> lines;
  std::istringstream is(good);
  for (std::string l; std::getline(is, l);) lines.push_back(l);
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& l : v) s += l + "\n";
    return s;
  };

  auto bad_sizes = lines;
  bad_sizes[2] = "3,4";  // two sizes for two layers
  CHECK(line_of(join(bad_sizes)) == 3);

  auto bad_token = lines;
  bad_token[7] = bad_token[7].substr(0, bad_token[7].find(',')) + ",x" + bad_token[7].substr(bad_token[7].find(','));
  CHECK(line_of(join(bad_token)) == 8);

  auto short_row = lines;
  short_row[7] = short_row[7].substr(0, short_row[7].rfind(','));
  CHECK(line_of(join(short_row)) == 8);

  auto truncated = lines;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_net(join(truncated)), NetFormatError);

  auto extra = lines;
  extra.push_back("1,2,3,4,5");
  CHECK(line_of(join(extra)) == extra.size());
}

TEST_CASE("array save and load") {
  const auto dir = qcomp::testing::scratch_dir("net_io_array");
  const NetworkArray array = random_array(3, {5, 6, 5});
  const std::size_t bytes = save_array(array, dir, {"run=x"});
  CHECK(bytes == array_serialized_bytes(array, {"run=x"}));
  std::size_t on_disk = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) on_disk += std::filesystem::file_size(e);
  CHECK(on_disk == bytes);

  const NetworkArray back = load_array(dir);
  CHECK(back.tau_cuts() == array.tau_cuts());
  CHECK(back.members() == array.members());
  CHECK(back.coc_penalty_stripped());

  std::filesystem::remove(dir / member_filename(2, Advisory::SR));
  CHECK_THROWS_AS(load_array(dir), Error);
  CHECK_THROWS_AS(load_array(dir / "nope"), Error);
}

TEST_CASE("default-grid array has 45 members in its manifest") {
  const auto dir = qcomp::testing::scratch_dir("net_io_45");
  const std::vector<int> sizes = {5, 32, 32, 32, 32, 5};
  const NetworkArray array = random_array(default_grid().size(Dim::Tau), sizes);
  save_array(array, dir);
  std::ifstream in(dir / kManifestName);
  std::size_t entries = 0;
  for (std::string l; std::getline(in, l);) entries += !l.starts_with("//");
  CHECK(entries == 45);

  // Text cost per parameter: up to 9 significant digits, sign, exponent and
  // separator, so between 8 and 17 bytes.
  const double per_param = static_cast<double>(array_serialized_bytes(array)) / (45.0 * static_cast<double>(mlp_param_count(sizes)));
  CHECK(per_param > 8.0);
  CHECK(per_param < 17.0);
}
