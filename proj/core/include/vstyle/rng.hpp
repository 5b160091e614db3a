#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace vstyle {

// Deterministic gaussian stream. Consumption order is part of every
// consumer's contract: weights and noise are always drawn in a fixed
// sequence from a single stream per seeded object.
class SeededGaussian {
public:
    explicit SeededGaussian(std::uint64_t seed) : engine_(seed) {}

    double next(double stddev = 1.0) { return dist_(engine_) * stddev; }

    void fill(Eigen::MatrixXd& m, double stddev) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = next(stddev);
    }

    void fill(Eigen::VectorXd& v, double stddev) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = next(stddev);
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace vstyle
