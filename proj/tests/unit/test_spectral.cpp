#include "layersplit/spectral.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

#include <gtest/gtest.h>

using namespace layersplit;
using layersplit::testing::Gen;

TEST(Spectral, PowerSpectrumOfForwardDifference) {
  const auto p = filter_power_spectrum<double>(DerivativeFilter::forward_difference(), 8);
  for (int m = 0; m < 8; ++m) EXPECT_NEAR(p[static_cast<std::size_t>(m)], 2 - 2 * std::cos(2 * std::numbers::pi * m / 8), 1e-14);
}

TEST(Spectral, DenominatorMatchesDenseEigenvalues) {
  for (const auto& sc : layersplit::testing::small_shapes()) {
    const double shift = 0.7;
    const auto den = build_denominator<double>(sc.dims, sc.axes, DerivativeFilter::forward_difference(), shift);
    const Eigen::MatrixXd f = oracle::dense_gradient(sc.dims, sc.axes);
    const Eigen::MatrixXd a = f.transpose() * f + shift * Eigen::MatrixXd::Identity(f.cols(), f.cols());
    Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    Eigen::VectorXd ours = den.values();
    std::sort(ours.data(), ours.data() + ours.size());
    EXPECT_LE((eig - ours).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(den.values().minCoeff(), shift);
  }
}

TEST(Spectral, SolveMatchesDenseSolveOnSmallShapes) {
  Gen gen(31);
  for (const auto& sc : layersplit::testing::small_shapes()) {
    CirculantSolver<double> solver(sc.dims, sc.axes);
    const Eigen::MatrixXd f = oracle::dense_gradient(sc.dims, sc.axes);
    for (double shift : {1.0, 2.0 / 0.03 + 1.0, 2.0 / 40.0 + 1.0, 1e-3}) {
      for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd b = gen.vector(f.cols());
        const Eigen::VectorXd expect = oracle::dense_solve(f, b, shift);
        const Eigen::VectorXd got = solver.solve(b, shift);
        EXPECT_LE((got - expect).norm() / expect.norm(), 1e-8) << to_string(sc.dims) << " shift " << shift;
        EXPECT_LE(solver.last_imaginary_residue(), 1e-10);
      }
    }
  }
}

TEST(Spectral, ChannelAxisIsBatched) {
  Gen gen(32);
  const Dims dims{6, 5, 3};
  CirculantSolver<double> solver(dims, {0, 1});
  const Eigen::VectorXd b = gen.vector(90);
  const Eigen::VectorXd x = solver.solve(b, 1.5);
  CirculantSolver<double> plane({6, 5}, {0, 1});
  for (int c = 0; c < 3; ++c)
    EXPECT_LE((x.segment(30 * c, 30) - plane.solve(b.segment(30 * c, 30), 1.5)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Spectral, LargerShapeAgainstOperatorResidual) {
  Gen gen(33);
  const Dims dims{32, 24};
  CirculantSolver<double> solver(dims, {0, 1});
  const auto op = GradientOperator<double>(dims, {0, 1});
  const Eigen::VectorXd b = gen.vector(32 * 24);
  const Eigen::VectorXd x = solver.solve(b, 0.4);
  const Eigen::VectorXd back = op.adjoint(op.apply(x)) + 0.4 * x;
  EXPECT_LE((back - b).norm() / b.norm(), 1e-12);
}

TEST(Spectral, Errors) {
  EXPECT_THROW(build_denominator<double>({4, 4}, {0, 1}, DerivativeFilter::forward_difference(), 0.0),
               std::invalid_argument);
  EXPECT_THROW(build_denominator<double>({4, 4}, {0, 1}, DerivativeFilter::forward_difference(), -1.0),
               std::invalid_argument);
  CirculantSolver<double> solver({4, 4}, {0, 1});
  EXPECT_THROW(solver.solve(Eigen::VectorXd::Zero(15), 1.0), DimensionError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(16);
  bad[3] = std::numeric_limits<double>::infinity();
  EXPECT_ANY_THROW(solver.solve(bad, 1.0));
}
