#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "riocpd/correlation.hpp"

using namespace riocpd;
using Catch::Approx;

namespace {

WindowedSeries make_window(std::vector<std::vector<double>> rows) {
  Matrix block(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return WindowedSeries(0, std::move(block));
}

WindowedSeries random_window(std::mt19937_64& rng, Eigen::Index m, Eigen::Index w) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix block(m, w);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < w; ++j) block(i, j) = gauss(rng);
  return WindowedSeries(0, std::move(block));
}

} // namespace

TEST_CASE("SeriesFrame validates shape and content") {
  CHECK_THROWS_AS(SeriesFrame(Matrix::Zero(0, 2)), ContractError);
  CHECK_THROWS_AS(SeriesFrame(Matrix::Zero(5, 1)), ContractError);
  Matrix bad = Matrix::Zero(3, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(SeriesFrame(bad), NumericError);
  CHECK_THROWS_AS(SeriesFrame(Matrix::Zero(3, 2), {0.0, 1.0}), ContractError);
  CHECK_THROWS_AS(SeriesFrame(Matrix::Zero(3, 2), {0.0, 2.0, 1.0}), ContractError);
  CHECK_NOTHROW(SeriesFrame(Matrix::Zero(3, 2), {0.0, 1.0, 2.5}));
}

TEST_CASE("window_at slices the frame") {
  Matrix values(5, 2);
  values << 0, 10, 1, 11, 2, 12, 3, 13, 4, 14;
  SeriesFrame frame(values);
  WindowedSeries w = window_at(frame, 1, 3);
  CHECK(w.start == 1);
  CHECK(w.block(0, 0) == 1.0);
  CHECK(w.block(1, 2) == 13.0);
  CHECK_THROWS_AS(window_at(frame, 3, 3), ContractError);
  CHECK_THROWS_AS(window_at(frame, 0, 1), ContractError);
}

TEST_CASE("normalize_window on fixed rows") {
  SECTION("hand-computed standardization") {
    auto norm = normalize_window(make_window({{1, 2, 3}, {5, 5, 5}}));
    CHECK(norm.values(0, 0) == Approx(-1.0));
    CHECK(norm.values(0, 1) == Approx(0.0).margin(1e-15));
    CHECK(norm.values(0, 2) == Approx(1.0));
    CHECK_FALSE(norm.degenerate[0]);
    SECTION("constant row is zeroed and flagged") {
      CHECK(norm.values.row(1).norm() == 0.0);
      CHECK(norm.degenerate[1]);
    }
  }
  SECTION("standardized rows are fixed points") {
    std::mt19937_64 rng(7);
    auto w = random_window(rng, 3, 20);
    auto once = normalize_window(w);
    auto twice = normalize_window(WindowedSeries(0, once.values));
    CHECK((twice.values - once.values).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SECTION("width below 2 is rejected") {
    CHECK_THROWS_AS(make_window({{1}, {2}}), ContractError);
  }
}

TEST_CASE("raw correlation matches the Pearson oracle") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto w = random_window(rng, 3, 20);
    Matrix b = raw_correlation(w);
    for (Eigen::Index i = 0; i < 3; ++i) {
      CHECK(b(i, i) == Approx(1.0).margin(1e-12));
      for (Eigen::Index j = 0; j < 3; ++j) {
        if (i == j) continue;
        std::vector<double> xi(w.block.row(i).begin(), w.block.row(i).end());
        std::vector<double> xj(w.block.row(j).begin(), w.block.row(j).end());
        CHECK(b(i, j) == Approx(oracles::pearson(xi, xj)).margin(1e-10));
      }
    }
  }
}

TEST_CASE("perfectly correlated and anticorrelated rows") {
  std::vector<double> x{1, 2, 3, 4, 5, 6};
  std::vector<double> ax_b, neg;
  for (double v : x) {
    ax_b.push_back(2 * v + 3);
    neg.push_back(-v);
  }
  CHECK(raw_correlation(make_window({x, ax_b}))(0, 1) == Approx(1.0).margin(1e-12));
  CHECK(raw_correlation(make_window({x, neg}))(0, 1) == Approx(-1.0).margin(1e-12));
}

TEST_CASE("correlation is invariant to positive affine transforms") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::uniform_real_distribution<double> shift(-100.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto w = random_window(rng, 4, 15);
    Matrix before = raw_correlation(w);
    Matrix transformed = w.block;
    for (Eigen::Index i = 0; i < 4; ++i)
      transformed.row(i) = scale(rng) * transformed.row(i).array() + shift(rng);
    Matrix after = raw_correlation(WindowedSeries(0, transformed));
    CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("correlation_matrix produces a valid SPD matrix") {
  std::mt19937_64 rng(10);
  auto w = random_window(rng, 3, 20);
  CorrelationMatrix b = correlation_matrix(w, 1e-6);
  CHECK(b.jitter_applied() == 1e-6);
  CHECK(b.dim() == 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(b.spd().entries()(i, i) == Approx(1.0 + 1e-6).margin(1e-12));
}

TEST_CASE("degenerate series yield identity-like correlation") {
  auto w = make_window({{5, 5, 5, 5}, {1, 2, 3, 4}});
  Matrix b = raw_correlation(w);
  CHECK(b(0, 0) == 1.0);
  CHECK(b(0, 1) == 0.0);
  CHECK(b(1, 0) == 0.0);
  CHECK_NOTHROW(correlation_matrix(w, 1e-6));
}

TEST_CASE("jitter escalates on singular windows") {
  // Exactly collinear rows: raw correlation [[1,1],[1,1]] is singular, and a
  // ridge below machine epsilon cannot fix it.
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y{5, 7, 9, 11, 13};
  auto w = make_window({x, y});
  SECTION("first working ridge is recorded") {
    CorrelationMatrix b = correlation_matrix(w, 1e-16);
    CHECK(b.jitter_applied() > 1e-16);
    CHECK(b.jitter_applied() <= 1e-13);
  }
  SECTION("zero jitter cannot escalate and reports the window") {
    try {
      correlation_matrix(w, 0.0);
      FAIL("expected DegenerateWindowError");
    } catch (const DegenerateWindowError& e) {
      CHECK(e.window_index() == 0);
    }
  }
  SECTION("a healthy ridge works on the first try") {
    CorrelationMatrix b = correlation_matrix(w, 1e-6);
    CHECK(b.jitter_applied() == 1e-6);
  }
}
