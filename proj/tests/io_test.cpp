#include <doctest.h>

#include <filesystem>
#include <random>

#include "siedob/dataset.hpp"
#include "siedob/frechet.hpp"
#include "siedob/image_io.hpp"
#include "siedob/style_bank.hpp"

using namespace siedob;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("siedob_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("base64 round trip at every padding length") {
  for (size_t n = 0; n < 10; ++n) {
    Bytes b(n);
    for (size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(i * 37 + 5);
    CHECK(base64_decode(base64_encode(b)) == b);
  }
  CHECK(base64_encode(Bytes{'f', 'o', 'o'}) == "Zm9v");
  CHECK_THROWS_AS(base64_decode("abc"), ValidationError);
}

TEST_CASE("PNG encode/decode is lossless on 8-bit data") {
  Sample s = make_toy_sample(32, 3);
  Image q = quantize8(s.image);
  CHECK(decode_png_image(encode_png(q)) == q);
  CHECK(decode_png_labels(encode_png(s.seg.labels)) == s.seg.labels);
  Mask m(8, 8, 0);
  m.at(2, 3) = 1;
  CHECK(decode_png_mask(encode_png(m)) == m);
  CHECK_THROWS_AS(decode_png_image(Bytes{1, 2, 3}), ValidationError);
}

TEST_CASE("toy dataset round trips through disk") {
  auto dir = scratch("toy");
  write_toy_dataset(dir.string(), 3, 32, 10);
  auto classes = load_classes((dir / "classes.json").string());
  CHECK(classes.names.size() == 5);
  CHECK(classes.foreground == std::vector<int>{3, 4});
  auto samples = load_dataset(dir.string(), classes);
  REQUIRE(samples.size() == 3);
  Sample ref = make_toy_sample(32, 10);
  CHECK(samples[0].seg.labels == ref.seg.labels);
  CHECK(*samples[0].instances == *ref.instances);
  CHECK(samples[0].image == quantize8(ref.image));
  // Every instance id lives on a single foreground class.
  auto recs = extract_instances(samples[0].seg, samples[0].instances);
  CHECK_FALSE(recs.empty());
  CHECK_THROWS_AS(load_dataset((dir / "missing").string(), classes), IoError);
}

TEST_CASE("style bank file round trip is bitwise") {
  auto dir = scratch("bank");
  StyleBank bank;
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n;
  for (int i = 0; i < 7; ++i) {
    StyleCode c;
    c.class_id = i % 2 ? 3 : 4;
    for (auto& v : c.vector) v = n(rng);
    bank.add(c);
  }
  bank.dataset_id = "toy";
  const auto path = (dir / "bank.sbnk").string();
  save_style_bank(path, bank);
  StyleBank back = load_style_bank(path);
  CHECK(back.by_class == bank.by_class);
  CHECK(back.dataset_id == "toy");
  CHECK(fs::exists(path + ".json"));
  CHECK_THROWS_AS(back.entries(0), NoStylesError);
}

TEST_CASE("sample_style is uniform, reproducible and class pure") {
  StyleBank bank;
  for (int i = 0; i < 10; ++i) {
    StyleCode c;
    c.class_id = 3;
    c.vector[0] = static_cast<float>(i);
    bank.add(c);
  }
  StyleCode only;
  only.class_id = 4;
  only.vector[1] = 9.0f;
  bank.add(only);

  std::mt19937_64 a(8), b(8);
  CHECK(sample_style(bank, 3, a) == sample_style(bank, 3, b));
  for (int i = 0; i < 20; ++i) CHECK(sample_style(bank, 4, a) == only);

  std::mt19937_64 rng(99);
  int counts[10] = {};
  for (int i = 0; i < 10000; ++i) {
    auto code = sample_style(bank, 3, rng);
    CHECK(code.class_id == 3);
    ++counts[static_cast<int>(code.vector[0])];
  }
  for (int c : counts) {
    CHECK(c >= 900);
    CHECK(c <= 1100);
  }
  CHECK_THROWS_AS(sample_style(bank, 1, rng), NoStylesError);
}

TEST_CASE("frechet distance closed forms") {
  Eigen::MatrixXd a(4, 2);
  a << 0.1, 1.0, -0.3, 0.5, 0.7, -0.2, 0.0, 0.4;
  CHECK(frechet_distance(a, a) < 1e-6);

  // Two unit-variance 1-D samples with means 0 and m.
  const double m = 2.5;
  Eigen::MatrixXd r(2, 1), f(2, 1);
  r << -std::sqrt(0.5), std::sqrt(0.5);
  f = r.array() + m;
  CHECK(frechet_distance(r, f) == doctest::Approx(m * m).epsilon(0.01));

  Eigen::MatrixXd one(1, 2);
  one << 0, 0;
  CHECK_THROWS_AS(frechet_distance(one, a), ValidationError);
}

TEST_CASE("frechet distance matches a general eigensolver route and is symmetric") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd r(12, 3), f(15, 3);
    for (int i = 0; i < r.size(); ++i) r.data()[i] = n(rng);
    for (int i = 0; i < f.size(); ++i) f.data()[i] = 0.5 * n(rng) + 0.3;
    // Oracle: eigenvalues of the (non-symmetric) product Σr Σf are the squares of the singular
    // values of its square root, so Tr((Σr Σf)^{1/2}) = Σ sqrt(λ_i).
    auto cov = [](const Eigen::MatrixXd& x) {
      Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
      return Eigen::MatrixXd((c.transpose() * c) / double(x.rows() - 1));
    };
    Eigen::MatrixXd cr = cov(r), cf = cov(f);
    Eigen::EigenSolver<Eigen::MatrixXd> es(cr * cf);
    double tr_sqrt = 0.0;
    for (int i = 0; i < 3; ++i) tr_sqrt += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
    const double expect =
        (r.colwise().mean() - f.colwise().mean()).squaredNorm() + cr.trace() + cf.trace() - 2 * tr_sqrt;
    CHECK(frechet_distance(r, f) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(frechet_distance(r, f) == doctest::Approx(frechet_distance(f, r)).epsilon(1e-9));
  }
}
