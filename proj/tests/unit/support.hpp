#pragma once

#include <random>
#include <vector>

#include "threshold_lab/model.hpp"

namespace support {

inline threshold_lab::FractionState random_state(std::mt19937_64& gen, int m, int k_trunc) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(k_trunc));
    std::vector<double> v(static_cast<std::size_t>(m));
    u[0] = unit(gen);
    for (int k = 1; k < k_trunc; ++k) u[static_cast<std::size_t>(k)] = u[static_cast<std::size_t>(k - 1)] * unit(gen);
    v[0] = 1.0 - u[0];
    for (int j = 1; j < m; ++j) v[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(j - 1)] * unit(gen);
    return threshold_lab::FractionState(u, v);
}

}  // namespace support
