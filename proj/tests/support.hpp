#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "strudel/autograd.hpp"
#include "strudel/encoder.hpp"

namespace strudel::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(STRUDEL_FIXTURES) / name;
}

// Relative error with a floor so that two near-zero values compare by
// absolute difference instead of blowing up.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("strudel-test-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

struct GradCheck {
    double worst = 0.0;
    std::string worst_at;
    std::size_t checked = 0;
};

// Compares backprop gradients of loss() with central differences on up to
// `per_tensor` evenly spaced coordinates of every parameter.
inline GradCheck check_gradients(const std::function<Var()>& loss, std::vector<NamedParameter> params,
                                 std::size_t per_tensor = 6, double h = 1e-5) {
    for (auto& p : params) p.var.zero_grad();
    loss().backward();
    std::vector<Matrix> analytic;
    for (const auto& p : params) {
        analytic.push_back(p.var.grad().empty() ? Matrix(p.var.rows(), p.var.cols()) : p.var.grad());
    }
    GradCheck out;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& w = params[t].var.mutable_value();
        const std::size_t stride = std::max<std::size_t>(1, w.size() / per_tensor);
        for (std::size_t k = 0; k < w.size(); k += stride) {
            const double orig = w[k];
            w[k] = orig + h;
            const double up = loss().scalar();
            w[k] = orig - h;
            const double down = loss().scalar();
            w[k] = orig;
            const double err = relative_error(analytic[t][k], (up - down) / (2.0 * h));
            ++out.checked;
            if (err > out.worst) {
                out.worst = err;
                out.worst_at = params[t].name + "[" + std::to_string(k) + "]";
            }
        }
    }
    return out;
}

}  // namespace strudel::testing
