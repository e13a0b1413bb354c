#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "daec/metrics.hpp"
#include "helpers.hpp"

using namespace daec;

TEST(Mse, Examples) {
  const std::vector<double> a{1.0, 2.0}, b{0.0, 2.0};
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_EQ(mse(a, b), 0.5);
  EXPECT_EQ(mse(a, b), mse(b, a));
  EXPECT_THROW(mse(a, std::vector<double>{1.0}), DomainError);
  EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST(Mse, ConstantOffset) {
  std::mt19937_64 rng(1);
  const auto a = testutil::uniform(100, rng, 10, 20);
  for (double c : {0.1, 1.0, 10.0}) {
    auto b = a;
    for (double& v : b) v += c;
    EXPECT_NEAR(mse(a, b), c * c, 1e-9 * c * c);
  }
}

TEST(Rmse, Examples) {
  const std::vector<double> a{1.0, 2.0}, b{0.0, 2.0};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_NEAR(rmse(a, b), 0.7071067811865476, 1e-15);
}

TEST(Rmse, SquareIsMse) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const auto a = testutil::uniform(30, rng, -5, 5);
    const auto b = testutil::uniform(30, rng, -5, 5);
    const double r = rmse(a, b);
    EXPECT_NEAR(r * r, mse(a, b), 1e-12);
  }
}

TEST(Mape, Examples) {
  const std::vector<double> t{100.0}, p{99.0};
  EXPECT_EQ(mape(t, t), 0.0);
  EXPECT_NEAR(mape(t, p), 0.01, 1e-15);
  EXPECT_EQ(format_mape(mape(t, p)), "1.00%");
}

TEST(Mape, ZeroTruthNamesIndex) {
  try {
    mape(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 1.0});
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
  }
}

TEST(Metrics, ScaleEquivariance) {
  std::mt19937_64 rng(3);
  const auto t = testutil::uniform(40, rng, 1, 2);
  const auto p = testutil::uniform(40, rng, 1, 2);
  const double s = 3.5;
  auto ts = t, ps = p;
  for (double& v : ts) v *= s;
  for (double& v : ps) v *= s;
  EXPECT_NEAR(mse(ts, ps), s * s * mse(t, p), 1e-12);
  EXPECT_NEAR(rmse(ts, ps), s * rmse(t, p), 1e-12);
  EXPECT_NEAR(mape(ts, ps), mape(t, p), 1e-12);
}

TEST(Report, PerfectAndCounts) {
  const std::vector<double> t{20.0, 21.0, 22.0};
  const auto r = report(t, t);
  EXPECT_EQ(r.n, 3u);
  EXPECT_EQ(format_mse(r.mse), "0.0000");
  EXPECT_EQ(format_mape(r.mape), "0.00%");
}

TEST(Report, RowFormatting) {
  MetricsReport r;
  r.mse = 0.0007;
  r.mape = 0.0010;
  EXPECT_EQ(render_row(r), "0.0007, 0.10%");
  r.mse = 0.0034;
  r.mape = 0.0023;
  EXPECT_EQ(render_row(r), "0.0034, 0.23%");
}

TEST(Report, TableAligned) {
  std::vector<NamedReport> rows{{"lstm", {0.0034, 0.0583, 0.0023, 400}}, {"daec-lstm", {0.0007, 0.0265, 0.0010, 400}}};
  const std::string table = render_table(rows);
  EXPECT_NE(table.find("Method"), std::string::npos);
  EXPECT_NE(table.find("0.0007"), std::string::npos);
  EXPECT_NE(table.find("0.10%"), std::string::npos);
  const auto line2 = table.find('\n') + 1;
  const auto line3 = table.find('\n', line2) + 1;
  EXPECT_EQ(table.find("MSE"), table.find("0.0034") - line2);
  EXPECT_EQ(table.find("MSE"), table.find("0.0007") - line3);
  EXPECT_EQ(table.find("MAPE"), table.find("0.23%") - line2);
}
