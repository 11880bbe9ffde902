#pragma once

// Shared helpers for the test suites: random builders, finite differences,
// and scratch directories.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "malt/linalg.hpp"
#include "malt/model.hpp"
#include "malt/rng.hpp"

namespace testsupport {

inline malt::Vector randomVector(malt::Rng& rng, std::size_t d, double scale = 1.0) {
    malt::Vector v(d);
    for (double& x : v) x = scale * rng.gaussian();
    return v;
}

inline malt::Matrix randomMatrix(malt::Rng& rng, std::size_t rows, std::size_t cols,
                                 double scale = 1.0) {
    malt::Matrix M(rows, cols);
    for (double& x : M.data) x = scale * rng.gaussian();
    return M;
}

inline malt::Vector randomUnit(malt::Rng& rng, std::size_t d) {
    for (;;) {
        malt::Vector v = randomVector(rng, d);
        double n = malt::norm2(v);
        if (n > 1e-6) return malt::scaled(v, 1.0 / n);
    }
}

inline malt::LinearModel randomLinear(malt::Rng& rng, std::size_t m, std::size_t d,
                                      double scale = 1.0, bool withBias = true) {
    malt::Vector b(m, 0.0);
    if (withBias)
        for (double& x : b) x = 0.2 * scale * rng.gaussian();
    return malt::LinearModel(randomMatrix(rng, m, d, scale), std::move(b));
}

inline malt::MlpModel randomMlp(malt::Rng& rng, std::size_t m, std::size_t k,
                                std::size_t d, double scale = 0.7) {
    return malt::MlpModel(randomMatrix(rng, k, d, scale), randomVector(rng, k, 0.2),
                          randomMatrix(rng, m, k, scale), randomVector(rng, m, 0.2));
}

/// Labels in {-1, +1}.
inline malt::Vector randomLabels(malt::Rng& rng, std::size_t m) {
    malt::Vector y(m);
    for (double& v : y) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return y;
}

/// Central finite differences of a scalar function of a flat parameter
/// vector.
inline malt::Vector centralDifference(const std::function<double(const malt::Vector&)>& f,
                                      const malt::Vector& params, double h) {
    malt::Vector grad(params.size());
    malt::Vector p = params;
    for (std::size_t t = 0; t < params.size(); ++t) {
        double orig = p[t];
        p[t] = orig + h;
        double up = f(p);
        p[t] = orig - h;
        double down = f(p);
        p[t] = orig;
        grad[t] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double maxRelError(const malt::Vector& got, const malt::Vector& want,
                          double floor = 1e-8) {
    double worst = 0.0;
    for (std::size_t t = 0; t < got.size(); ++t) {
        double denom = std::max(std::abs(want[t]), floor);
        worst = std::max(worst, std::abs(got[t] - want[t]) / denom);
    }
    return worst;
}

/// Fresh scratch directory under the system temp root, removed on destruction.
class ScratchDir {
  public:
    explicit ScratchDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("malt_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

} // namespace testsupport
