#include "support.hpp"

#include <gtest/gtest.h>

using namespace cmds;
using namespace testing_support;

namespace {

Matrix random_rotation(Index k, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(k, k, rng));
  return qr.householderQ() * Matrix::Identity(k, k);
}

}  // namespace

TEST(Impute, AllMissingIdentityB) {
  std::mt19937_64 rng(1);
  const Matrix vt = random_matrix(3, 2, rng);
  const Matrix v2 = Matrix::Constant(3, 2, std::numeric_limits<double>::quiet_NaN());
  const ImputedConditioning r = impute(v2, Mask::Constant(3, 2, true), vt, Matrix::Identity(2, 2));
  EXPECT_LT((r.v2_hat - vt).norm(), 1e-15);
  EXPECT_FALSE(r.preserved_mask.any());
}

TEST(Impute, AllMissingReducesToVtildeBInverse) {
  std::mt19937_64 rng(2);
  const Matrix vt = random_matrix(4, 3, rng);
  const Matrix b = random_matrix(3, 3, rng) + 3.0 * Matrix::Identity(3, 3);
  const ImputedConditioning r = impute(Matrix::Zero(4, 3), Mask::Constant(4, 3, true), vt, b);
  EXPECT_LT(rel_diff(r.v2_hat, vt * b.inverse()), 1e-13);
}

TEST(Impute, ObservedRowReturnedVerbatim) {
  const Matrix v2{{0.1234567890123, -7.5}};
  const ImputedConditioning r =
      impute(v2, Mask::Constant(1, 2, false), Matrix{{9.0, 9.0}}, Matrix{{2.0, 0.3}, {0.1, 1.0}});
  EXPECT_EQ(r.v2_hat, v2);
  EXPECT_TRUE(r.preserved_mask.all());
}

TEST(Impute, HandExpansionTwoByTwo) {
  // v2 = (3, ?) with mask (0, 1).
  const Matrix b{{2.0, 1.0}, {0.5, 4.0}};
  const Matrix vt{{1.0, 6.0}};
  Mask m(1, 2);
  m << false, true;
  const Matrix v2{{3.0, std::numeric_limits<double>::quiet_NaN()}};
  const ImputedConditioning r = impute(v2, m, vt, b);
  // residual = (Ṽ2 − (3, 0)B)∘(0, 1) = (0, 6 − 3·1) = (0, 3)
  // correction = (0, 3)B⁻¹, det B = 7.5, B⁻¹ row 2 = (−0.5, 2)/7.5
  EXPECT_EQ(r.v2_hat(0, 0), 3.0);
  EXPECT_NEAR(r.v2_hat(0, 1), 3.0 * 2.0 / 7.5, 1e-15);
  EXPECT_TRUE(r.preserved_mask(0, 0));
  EXPECT_FALSE(r.preserved_mask(0, 1));
}

TEST(Impute, Idempotent) {
  std::mt19937_64 rng(3);
  const Matrix vt = random_matrix(6, 3, rng);
  const Matrix b = random_matrix(3, 3, rng) + 2.0 * Matrix::Identity(3, 3);
  Matrix v2 = random_matrix(6, 3, rng);
  Mask m = Mask::Constant(6, 3, false);
  m(0, 1) = m(2, 0) = m(2, 2) = true;
  m.row(4).setConstant(true);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 3; ++j)
      if (m(i, j)) v2(i, j) = std::numeric_limits<double>::quiet_NaN();
  const Matrix once = impute(v2, m, vt, b).v2_hat;
  const Matrix twice = impute(once, m, vt, b).v2_hat;
  EXPECT_EQ(once, twice);
  EXPECT_TRUE(once.allFinite());
}

TEST(Impute, SingularB) {
  try {
    impute(Matrix::Zero(1, 2), Mask::Constant(1, 2, true), Matrix::Zero(1, 2), Matrix{{1, 2}, {2, 4}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularB);
  }
}

TEST(Acc, InvariantToInvertibleMaps) {
  std::mt19937_64 rng(4);
  const Matrix u = random_matrix(40, 3, rng);
  EXPECT_NEAR(acc(u, u), 1.0, 1e-12);
  const Matrix a = random_matrix(3, 3, rng) + 2.0 * Matrix::Identity(3, 3);
  Matrix shifted = u * a;
  shifted.rowwise() += RowVector{{1.0, -2.0, 5.0}};
  EXPECT_NEAR(acc(shifted, u), 1.0, 1e-10);
}

TEST(Acc, WhitenedCrossCovarianceOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix x = random_matrix(50, 3, rng);
    const Matrix y = 0.5 * x * random_matrix(3, 3, rng) + random_matrix(50, 3, rng);
    const Matrix xc = x.rowwise() - x.colwise().mean();
    const Matrix yc = y.rowwise() - y.colwise().mean();
    const Matrix sxx = xc.transpose() * xc, syy = yc.transpose() * yc, sxy = xc.transpose() * yc;
    Eigen::SelfAdjointEigenSolver<Matrix> ex(sxx), ey(syy);
    const Matrix wx = ex.operatorInverseSqrt(), wy = ey.operatorInverseSqrt();
    Eigen::JacobiSVD<Matrix> svd(wx * sxy * wy);
    EXPECT_NEAR(acc(x, y), svd.singularValues().mean(), 1e-10);
    EXPECT_NEAR(acc(x, y), acc(y, x), 1e-12);
    const double a = acc(x, y);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(Acc, DifferentWidthsAndErrors) {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(30, 2, rng), y = random_matrix(30, 3, rng);
  EXPECT_EQ(canonical_correlations(x, y).size(), 2);
  EXPECT_THROW(acc(random_matrix(4, 2, rng), random_matrix(4, 2, rng)), Error);
  Matrix collapsed = random_matrix(20, 2, rng);
  collapsed.col(1) = collapsed.col(0);
  EXPECT_THROW(acc(collapsed, random_matrix(20, 2, rng)), Error);
}

TEST(Procrustes, SimilarityInvariant) {
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(25, 3, rng);
  Matrix y = 2.0 * x * random_rotation(3, rng);
  y.rowwise() += RowVector{{4.0, 0.0, -1.0}};
  EXPECT_NEAR(procrustes_statistic(x, y), 0.0, 1e-10);
  const double ps = procrustes_statistic(x, random_matrix(25, 3, rng));
  EXPECT_GT(ps, 0.0);
  EXPECT_LE(ps, 1.0);
}

TEST(Procrustes, AlignmentOracle) {
  // Optimal similarity alignment of unit-norm centered configurations:
  // residual ‖X̂·Q·s − Ŷ‖² with s = Σσ equals 1 − (Σσ)².
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed + 10);
    const Matrix x = random_matrix(30, 2, rng), y = x + 0.7 * random_matrix(30, 2, rng);
    Matrix xc = x.rowwise() - x.colwise().mean();
    Matrix yc = y.rowwise() - y.colwise().mean();
    xc /= xc.norm();
    yc /= yc.norm();
    const Matrix q = procrustes_rotation(xc, yc);
    const double s = (xc * q).cwiseProduct(yc).sum();
    const double residual = (s * xc * q - yc).squaredNorm();
    EXPECT_NEAR(procrustes_statistic(x, y), residual, 1e-12);
    EXPECT_NEAR(procrustes_statistic(x, y), procrustes_statistic(y, x), 1e-12);
  }
}

TEST(Procrustes, Degenerate) {
  EXPECT_THROW(procrustes_statistic(Matrix::Ones(5, 2), Matrix::Random(5, 2)), Error);
}

TEST(MseB, RightOrthogonalInvariance) {
  std::mt19937_64 rng(7);
  const Matrix b = random_matrix(4, 4, rng);
  EXPECT_NEAR(mse_b(b, b), 0.0, 1e-28);
  EXPECT_NEAR(mse_b(b * random_rotation(4, rng), b), 0.0, 1e-20);
  // B·Q and B give identical embedded distances
  const Matrix v = random_matrix(5, 4, rng), q = random_rotation(4, rng);
  EXPECT_NEAR((v * b).row(0).norm(), (v * b * q).row(0).norm(), 1e-12);
}

TEST(MseV, ConstantOffset) {
  std::mt19937_64 rng(8);
  const Matrix v = random_matrix(5, 3, rng);
  EXPECT_NEAR(mse_v(v.array() + 1.0, v), 1.0, 1e-14);
  EXPECT_THROW(mse_v(v, Matrix::Zero(5, 2)), Error);
  EXPECT_THROW(mse_b(Matrix::Zero(2, 2), Matrix::Zero(3, 3)), Error);
}
