// types.hpp: shared numeric aliases and the time-series record

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace qle {

using cplx = std::complex<double>;
using Mat3 = Eigen::Matrix3cd;
using Vec3 = Eigen::Vector3cd;
using Vec3r = Eigen::Vector3d;

// Ordered (t, <sx>, <sy>, <sz>) records. Standard errors are only filled in
// by ensemble runs; diagnostics carry per-run scalars such as the largest
// imaginary leakage or a kernel fit residual.
struct TimeSeries {
    std::vector<double> t;
    std::vector<Vec3r> bloch;
    std::vector<Vec3r> std_error;
    std::vector<double> max_imag;
    std::map<std::string, double> diagnostics;

    std::size_t size() const noexcept { return t.size(); }
    bool has_std_error() const noexcept { return !std_error.empty(); }

    void push(double time, const Vec3r& value, double imag = 0.0) {
        t.push_back(time);
        bloch.push_back(value);
        max_imag.push_back(imag);
    }

    std::vector<double> component(int axis) const {
        std::vector<double> out(bloch.size());
        for (std::size_t i = 0; i < bloch.size(); ++i) out[i] = bloch[i][axis];
        return out;
    }
};

} // namespace qle
