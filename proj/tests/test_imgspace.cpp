#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "tsimg/error.hpp"
#include "tsimg/imgspace.hpp"
#include "tsimg/rng.hpp"

using namespace tsimg;

namespace {

const SpaceParams kDefault{128, 3.5};

BinaryImage one_hot(const SpaceParams& p, std::int32_t row) {
  BinaryImage img(p, 1, 1);
  img.set_row(0, 0, row);
  return img;
}

SoftImage column_image(const SpaceParams& p, const std::vector<double>& col) {
  SoftImage img(p, 1, 1);
  std::copy(col.begin(), col.end(), img.column(0, 0).begin());
  return img;
}

std::vector<double> random_column(Rng& rng, std::size_t h, bool sparse = false) {
  std::vector<double> v(h);
  double s = 0.0;
  for (auto& x : v) {
    x = (sparse && rng.uniform() < 0.4) ? 0.0 : rng.uniform();
    s += x;
  }
  if (s == 0.0) {
    v[0] = 1.0;
    s = 1.0;
  }
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace

TEST_CASE("space parameters") {
  CHECK(kDefault.bin_width() == 0.0546875);
  CHECK_THROWS_AS((SpaceParams{1, 3.5}.validate()), ConfigError);
  CHECK_THROWS_AS((SpaceParams{8, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((SpaceParams{8, INFINITY}.validate()), ConfigError);
}

TEST_CASE("encode maps values to rows (0-based, half-open bins)") {
  CHECK(value_to_row(5.0, kDefault) == 127);   // upper saturation, 1-based j = 128
  CHECK(value_to_row(0.0, kDefault) == 64);    // floor(3.5 / 0.0546875) = 64
  CHECK(value_to_row(-5.0, kDefault) == 0);    // lower saturation, 1-based j = 1
  CHECK(value_to_row(3.5, kDefault) == 127);
  CHECK(value_to_row(-3.5, kDefault) == 0);
  CHECK(value_to_row(-0.0546875, kDefault) == 63);  // exact lower edge of row 63
  CHECK_THROWS_AS(value_to_row(NAN, kDefault), InputError);
}

TEST_CASE("decode returns bin centres") {
  CHECK(decode(one_hot(kDefault, 63)).at(0, 0) == -0.02734375);
  CHECK(decode(one_hot(kDefault, 127)).at(0, 0) == 3.47265625);
  const SpaceParams two{2, 1.0};
  CHECK(decode(one_hot(two, 0)).at(0, 0) == -0.5);
  CHECK(decode(one_hot(two, 1)).at(0, 0) == 0.5);
}

TEST_CASE("saturation decodes to the outermost centres exactly") {
  for (double s : {3.5, 3.6, 10.0, 1e300}) {
    CHECK(decode(encode(TimeSeries::univariate({s}), kDefault)).at(0, 0) == 3.5 - 3.5 / 128);
    CHECK(decode(encode(TimeSeries::univariate({-s}), kDefault)).at(0, 0) == -(3.5 - 3.5 / 128));
  }
}

TEST_CASE("roundtrip error is at most MS/h on 1e5 in-range samples") {
  for (const SpaceParams p : {SpaceParams{128, 3.5}, SpaceParams{32, 2.1}}) {
    Rng rng(RngStream{17, p.h});
    std::vector<double> xs(100000);
    for (auto& x : xs) {
      do x = rng.uniform(-p.max_scale, p.max_scale);
      while (x == -p.max_scale);
    }
    const auto back = decode(encode(TimeSeries::univariate(xs), p));
    std::size_t violations = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      violations += std::abs(back.at(0, i) - xs[i]) > p.max_scale / static_cast<double>(p.h);
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("row index is monotone in the value") {
  Rng rng(RngStream{3, 3});
  std::vector<double> xs(20000);
  for (auto& x : xs) x = rng.uniform(-5.0, 5.0);
  std::sort(xs.begin(), xs.end());
  std::int32_t prev = -1;
  for (double x : xs) {
    const auto r = value_to_row(x, kDefault);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("binary image invariants") {
  BinaryImage img(kDefault, 2, 3);
  CHECK(img.has_missing());
  CHECK_THROWS_AS(img.set_row(0, 0, 128), StructuralError);
  img.set_row(1, 2, 5);
  CHECK(img.pixel(1, 5, 2) == 1);
  CHECK(img.pixel(1, 4, 2) == 0);
  CHECK_THROWS_AS(BinaryImage(kDefault, 1, 2, {0}), InputError);
}

TEST_CASE("normalize") {
  SUBCASE("constant zero lookback uses the std floor") {
    const auto [out, st] = normalize(TimeSeries::univariate({0, 0, 0, 0}), 4);
    for (double v : out.values()) CHECK(v == 0.0);
    CHECK(st.mean[0] == 0.0);
    CHECK(st.std[0] == 1e-8);
    CHECK(st.floored[0]);
  }
  SUBCASE("hand statistics") {
    const auto [out, st] = normalize(TimeSeries::univariate({1, 3}), 2);
    CHECK(st.mean[0] == 2.0);
    CHECK(st.std[0] == 1.0);
    CHECK(out.values() == std::vector<double>{-1, 1});
  }
  SUBCASE("standardised input is a fixed point and denormalize inverts") {
    const auto [z, st0] = normalize(TimeSeries::univariate({0.3, -1.2, 2.5, 0.1, -0.7, 4.0}), 6);
    const auto [again, st] = normalize(z, 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(again.at(0, i) - z.at(0, i)) < 1e-9);
    const auto back = denormalize(z, st0);
    CHECK(std::abs(back.at(0, 2) - 2.5) < 1e-12);
  }
  SUBCASE("statistics come from the lookback only") {
    const auto [out, st] = normalize(TimeSeries::univariate({1, 3, 100}), 2);
    CHECK(out.at(0, 2) == 98.0);
  }
  CHECK_THROWS_AS(normalize(TimeSeries::univariate({1, 2}), 3), InputError);
}

TEST_CASE("missing observations become empty columns") {
  MaskedSeries m(TimeSeries::univariate({0.0, 1.0, 2.0}), {0, 1, 0});
  const auto img = encode(m, kDefault);
  CHECK(img.is_missing(0, 1));
  CHECK_THROWS_AS(decode(img), StructuralError);
  const auto back = decode_masked(img);
  CHECK(back.missing == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(back.values.at(0, 1) == back.values.at(0, 0));  // carried forward
}

TEST_CASE("soft decode") {
  SUBCASE("one-hot matches hard decode") {
    Rng rng(RngStream{1, 1});
    std::vector<double> xs(500);
    for (auto& x : xs) x = rng.uniform(-4.0, 4.0);
    const auto img = encode(TimeSeries::univariate(xs), kDefault);
    CHECK(soft_decode(img.to_soft()) == decode(img));
  }
  SUBCASE("uniform column decodes to zero") {
    for (std::size_t h : {2u, 7u, 128u}) {
      const SpaceParams p{h, 2.7};
      const auto v = soft_decode(column_image(p, std::vector<double>(h, 1.0 / h))).at(0, 0);
      CHECK(std::abs(v) < 1e-12);
    }
  }
  SUBCASE("two equal masses decode to the midpoint centre") {
    std::vector<double> col(128, 0.0);
    col[40] = col[42] = 0.5;
    CHECK(std::abs(soft_decode(column_image(kDefault, col)).at(0, 0) - kDefault.bin_center(41)) < 1e-12);
  }
  SUBCASE("all-zero column is missing") {
    const auto m = soft_decode_masked(SoftImage(kDefault, 1, 2));
    CHECK(m.missing == std::vector<std::uint8_t>{1, 1});
  }
}

TEST_CASE("column EMD") {
  std::vector<double> a(32, 0.0), b(32, 0.0);
  a[10] = 1.0;
  b[20] = 1.0;
  CHECK(column_emd(a, b) == 10.0);
  CHECK(column_emd(a, a) == 0.0);

  SUBCASE("matches brute-force transport for h = 4..8") {
    Rng rng(RngStream{5, 5});
    for (int i = 0; i < 1000; ++i) {
      const std::size_t h = 4 + i % 5;
      const auto p = random_column(rng, h, i % 2 == 0);
      const auto q = random_column(rng, h, i % 3 == 0);
      CHECK(std::abs(column_emd(p, q) - oracle::transport_cost(p, q)) < 1e-9);
    }
  }
  SUBCASE("metric axioms") {
    Rng rng(RngStream{6, 6});
    for (int i = 0; i < 1000; ++i) {
      const std::size_t h = 4 + i % 5;
      const auto x = random_column(rng, h), y = random_column(rng, h), z = random_column(rng, h);
      const double xy = column_emd(x, y), yx = column_emd(y, x);
      CHECK(xy >= 0.0);
      CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
      CHECK(xy <= column_emd(x, z) + column_emd(z, y) + 1e-12);
    }
  }
}

TEST_CASE("image EMD sums columns and checks its inputs") {
  const auto a = encode(TimeSeries::univariate({0.0, 1.0, -1.0}), kDefault);
  const auto b = encode(TimeSeries::univariate({0.1, 1.0, 2.0}), kDefault);
  const double expected = std::abs(value_to_row(0.0, kDefault) - value_to_row(0.1, kDefault)) +
                          std::abs(value_to_row(-1.0, kDefault) - value_to_row(2.0, kDefault));
  CHECK(emd(a, b) == expected);
  CHECK(emd(a.to_soft(), b.to_soft()) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(emd(a, a) == 0.0);
  CHECK_THROWS_AS(emd(a, encode(TimeSeries::univariate({0.0, 1.0, -1.0}), SpaceParams{64, 3.5})), InputError);
  CHECK_THROWS_AS(emd(SoftImage(kDefault, 1, 3), a.to_soft()), InputError);
}

TEST_CASE("KL divergence") {
  const SpaceParams p4{4, 1.0};
  CHECK(kld(column_image(p4, {0.1, 0.2, 0.3, 0.4}), column_image(p4, {0.1, 0.2, 0.3, 0.4})) == 0.0);
  const double v = kld(column_image(p4, {1, 0, 0, 0}), column_image(p4, {0.25, 0.25, 0.25, 0.25}), 1e-15);
  CHECK(std::abs(v - std::log(4.0)) < 1e-9);
  Rng rng(RngStream{7, 7});
  for (int i = 0; i < 200; ++i) {
    const auto x = column_image(p4, random_column(rng, 4, true));
    const auto y = column_image(p4, random_column(rng, 4, true));
    CHECK(kld(x, y) >= 0.0);
  }
  CHECK_THROWS_AS(kld(column_image(p4, {1, 0, 0, 0}), column_image(p4, {1, 0, 0, 0}), 0.0), ConfigError);
}

TEST_CASE("loss composes EMD and KL") {
  const SpaceParams p{16, 2.0};
  Rng rng(RngStream{8, 8});
  for (int i = 0; i < 100; ++i) {
    const auto x = column_image(p, random_column(rng, 16));
    const auto y = column_image(p, random_column(rng, 16));
    // Independent recomposition from the oracle transport cost and a direct KL sum.
    std::vector<double> xc(x.column(0, 0).begin(), x.column(0, 0).end());
    std::vector<double> yc(y.column(0, 0).begin(), y.column(0, 0).end());
    const double eps = 1e-8;
    double kl = 0.0;
    for (std::size_t r = 0; r < 16; ++r) {
      const double a = (xc[r] + eps) / (1.0 + 16 * eps), b = (yc[r] + eps) / (1.0 + 16 * eps);
      kl += a * std::log(a / b);
    }
    CHECK(std::abs(loss(x, y) - (oracle::transport_cost(xc, yc) + 0.2 * kl)) < 1e-9);
    CHECK(loss(x, y, 0.0) == emd(x, y));
    CHECK(loss(x, x) == 0.0);
  }
}

TEST_CASE("preprocess blur") {
  Rng rng(RngStream{9, 9});
  std::vector<double> xs(200);
  for (auto& x : xs) x = rng.uniform(-3.0, 3.0);
  const auto img = encode(TimeSeries::univariate(xs), kDefault);

  SUBCASE("identity kernel") {
    const auto out = preprocess(img, BlurKernel{1, 1, std::nullopt});
    const auto soft = img.to_soft();
    for (std::size_t col = 0; col < 200; ++col) {
      for (std::size_t r = 0; r < 128; ++r) CHECK(out.at(0, r, col) == soft.at(0, r, col));
    }
  }
  SUBCASE("columns sum to one") {
    const auto out = preprocess(img);
    for (std::size_t col = 0; col < 200; ++col) CHECK(std::abs(out.column_mass(0, col) - 1.0) < 1e-9);
  }
  SUBCASE("argmax of an isolated one-hot stays put away from the borders") {
    for (std::int32_t row = 15; row <= 128 - 16; row += 7) {
      BinaryImage single(kDefault, 1, 1);
      single.set_row(0, 0, row);
      const auto out = preprocess(single);
      const auto col = out.column(0, 0);
      CHECK(std::max_element(col.begin(), col.end()) - col.begin() == row);
    }
  }
  SUBCASE("slowly varying series survive blur + soft decode within two bins") {
    std::vector<double> s(512);
    for (std::size_t t = 0; t < 512; ++t) s[t] = 1.5 * std::sin(2 * std::numbers::pi * t / 512.0) + 0.3;
    const auto enc = encode(TimeSeries::univariate(s), kDefault);
    const auto hard = decode(enc);
    const auto soft = soft_decode(preprocess(enc));
    for (std::size_t t = 0; t < 512; ++t) {
      CHECK(std::abs(soft.at(0, t) - hard.at(0, t)) <= 2 * kDefault.bin_width());
    }
  }
  CHECK_THROWS_AS(preprocess(img, BlurKernel{30, 31, std::nullopt}), ConfigError);
  CHECK_THROWS_AS(preprocess(img, BlurKernel{31, 31, -1.0}), ConfigError);
}

TEST_CASE("2x upsampling is exact linear interpolation") {
  const auto up = upsample2x(TimeSeries::univariate({0, 2, 4}));
  CHECK(up.values() == std::vector<double>{0, 1, 2, 3, 4, 4});
}

TEST_CASE("perturbation stability and path complexity bounds") {
  Rng rng(RngStream{10, 10});
  std::size_t violations = 0;
  for (int i = 0; i < 200; ++i) {
    const SpaceParams p{static_cast<std::size_t>(8 << (i % 5)), rng.uniform(1.0, 5.0)};
    const double w = p.bin_width();
    std::vector<double> s(64), s2(64);
    const double eps = rng.uniform(0.0, 1.0);
    s[0] = rng.normal();
    for (std::size_t t = 1; t < 64; ++t) s[t] = s[t - 1] + rng.normal(0.0, 0.5);
    for (std::size_t t = 0; t < 64; ++t) s2[t] = s[t] + rng.uniform(-eps, eps);
    double G = 0.0;
    for (std::size_t t = 1; t < 64; ++t) G = std::max(G, std::abs(s[t] - s[t - 1]));
    const auto a = encode(TimeSeries::univariate(s), p);
    const auto b = encode(TimeSeries::univariate(s2), p);
    for (std::size_t t = 0; t < 64; ++t) {
      violations += std::abs(a.row(0, t) - b.row(0, t)) > std::floor(eps / w) + 1;
      if (t > 0) violations += std::abs(a.row(0, t) - a.row(0, t - 1)) > std::floor(G / w) + 1;
    }
  }
  CHECK(violations == 0);
}
