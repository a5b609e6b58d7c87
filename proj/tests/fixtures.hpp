#pragma once

#include "alpharobust/density.hpp"

namespace alpharobust::fixtures {

// Symmetric two-component Gaussian mixture noise and its copy shifted by A = 1.
inline NominalPair mixture_problem(std::size_t points = 4001) {
    const auto noise = DensityModel::mixture({{0.5, -2.0, 1.0}, {0.5, 2.0, 1.0}});
    return NominalPair::on_grid(noise, DensityModel::shifted(noise, 1.0),
                                QuadratureGrid::uniform(-8.0, 9.0, points));
}

// N(-1, 1) against N(1, 1) on a grid symmetric about zero.
inline NominalPair gaussian_problem(std::size_t points = 3001, double half_width = 7.5) {
    return NominalPair::on_grid(DensityModel::gaussian(-1.0, 1.0), DensityModel::gaussian(1.0, 1.0),
                                QuadratureGrid::uniform(-half_width, half_width, points));
}

}  // namespace alpharobust::fixtures
