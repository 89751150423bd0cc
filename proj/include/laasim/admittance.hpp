#pragma once

#include <complex>
#include <map>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "laasim/network.hpp"

namespace laasim {

using Complex = std::complex<double>;

/// Sparse complex nodal admittance matrix in per unit. Entry presence is
/// structural: (i,j) exists iff some in-service branch or shunt contributes,
/// and presence is symmetric by construction.
struct AdmittanceMatrix {
    int n = 0;
    std::map<std::pair<int, int>, Complex> entries;

    Complex at(int i, int j) const {
        auto it = entries.find({i, j});
        return it == entries.end() ? Complex{0.0, 0.0} : it->second;
    }

    bool structurally_symmetric() const {
        for (const auto& [key, v] : entries)
            if (!entries.count({key.second, key.first})) return false;
        return true;
    }

    Complex row_sum(int i) const {
        Complex s{0.0, 0.0};
        for (const auto& [key, v] : entries)
            if (key.first == i) s += v;
        return s;
    }

    Eigen::MatrixXcd dense() const {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
        for (const auto& [key, v] : entries) m(key.first, key.second) += v;
        return m;
    }
};

/// Standard pi-model assembly with off-nominal taps, phase shift, line
/// charging and bus shunts. Deactivated branches contribute nothing.
inline AdmittanceMatrix build_admittance(const Network& net) {
    AdmittanceMatrix Y;
    Y.n = net.n_bus();
    auto add = [&Y](int i, int j, Complex v) {
        Y.entries[{i, j}] += v;
    };
    for (const auto& br : net.branches) {
        if (!br.in_service()) continue;
        const Complex ys = 1.0 / Complex{br.r, br.x};
        const Complex ych{0.0, br.b_charging / 2.0};
        const double shift = br.shift_deg * std::numbers::pi / 180.0;
        const Complex tap = br.tap * std::exp(Complex{0.0, shift});
        add(br.from_bus, br.from_bus, (ys + ych) / (br.tap * br.tap));
        add(br.to_bus, br.to_bus, ys + ych);
        add(br.from_bus, br.to_bus, -ys / std::conj(tap));
        add(br.to_bus, br.from_bus, -ys / tap);
    }
    for (const auto& b : net.buses) {
        if (b.g_shunt_mw != 0.0 || b.b_shunt_mvar != 0.0)
            add(b.id, b.id, Complex{b.g_shunt_mw, b.b_shunt_mvar} / net.base_mva);
    }
    return Y;
}

}  // namespace laasim
