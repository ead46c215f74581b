// SPDX-License-Identifier: Apache-2.0

#include "otfsce/transceiver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "otfsce/errors.hpp"

namespace otfsce {

void PilotConfig::validate(const DdGrid& grid) const {
    if (k_pilot >= grid.N() || l_pilot >= grid.M()) {
        throw ConfigError("pilot position (" + std::to_string(k_pilot) + ", " +
                          std::to_string(l_pilot) + ") outside the grid");
    }
    if (!(energy > 0.0)) throw ConfigError("pilot energy must be positive");
}

double PilotConfig::amplitude(const DdGrid& grid) const {
    return std::sqrt(static_cast<double>(grid.size()) * energy);
}

DdMatrix make_pilot_frame(const PilotConfig& cfg, const DdGrid& grid) {
    cfg.validate(grid);
    DdMatrix x(grid);
    x(cfg.k_pilot, cfg.l_pilot) = cfg.amplitude(grid);
    return x;
}

DdMatrix recover_effective_channel(const DdMatrix& y, const PilotConfig& cfg) {
    const DdGrid& grid = y.grid();
    cfg.validate(grid);
    const double inv_amp = 1.0 / cfg.amplitude(grid);
    DdMatrix h(grid);
    for (std::size_t k = 0; k < grid.N(); ++k) {
        const std::size_t ks = (k + cfg.k_pilot) % grid.N();
        for (std::size_t l = 0; l < grid.M(); ++l) {
            h(k, l) = y(ks, (l + cfg.l_pilot) % grid.M()) * inv_amp;
        }
    }
    return h;
}

Constellation::Constellation(int order) : order_(order) {
    // Per-axis Gray levels; index = (i_bits << bits_per_axis) | q_bits.
    std::vector<double> levels;
    double scale = 1.0;
    if (order == 4) {
        levels = {-1.0, 1.0};
        scale = 1.0 / std::sqrt(2.0);
    } else if (order == 16) {
        levels = {-3.0, -1.0, 3.0, 1.0};  // Gray: 00, 01, 10, 11
        scale = 1.0 / std::sqrt(10.0);
    } else {
        throw ConfigError("unsupported constellation order " + std::to_string(order) +
                          " (expected 4 or 16)");
    }
    const std::size_t side = levels.size();
    points_.reserve(side * side);
    for (std::size_t i = 0; i < side; ++i) {
        for (std::size_t q = 0; q < side; ++q) {
            points_.emplace_back(levels[i] * scale, levels[q] * scale);
        }
    }
}

int Constellation::slice(Complex z) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const double d = std::norm(z - points_[i]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

DataFrame make_data_frame(int order, Rng& rng, const DdGrid& grid) {
    const Constellation constellation(order);
    std::uniform_int_distribution<int> pick(0, order - 1);
    DataFrame frame{DdMatrix(grid), std::vector<int>(grid.size()), order};
    auto data = frame.symbols.data();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        frame.indices[i] = pick(rng);
        data[i] = constellation.point(frame.indices[i]);
    }
    return frame;
}

DenseMatrix build_effective_matrix(const DdMatrix& channel) {
    const DdGrid& grid = channel.grid();
    const std::size_t N = grid.N();
    const std::size_t M = grid.M();
    const std::size_t mn = grid.size();
    if (mn > kMaxDenseSize) {
        throw DimensionError("build_effective_matrix: M*N = " + std::to_string(mn) +
                             " exceeds dense limit " + std::to_string(kMaxDenseSize));
    }
    DenseMatrix g(static_cast<Eigen::Index>(mn), static_cast<Eigen::Index>(mn));
    for (std::size_t l = 0; l < M; ++l) {
        for (std::size_t k = 0; k < N; ++k) {
            const auto row = static_cast<Eigen::Index>(l * N + k);
            for (std::size_t lp = 0; lp < M; ++lp) {
                const std::size_t dl = (l + M - lp) % M;
                for (std::size_t kp = 0; kp < N; ++kp) {
                    const std::size_t dk = (k + N - kp) % N;
                    g(row, static_cast<Eigen::Index>(lp * N + kp)) = channel(dk, dl);
                }
            }
        }
    }
    return g;
}

DenseMatrix build_effective_matrix(std::span<const PathParams> paths, const DdGrid& grid) {
    if (grid.size() > kMaxDenseSize) {
        throw DimensionError("build_effective_matrix: grid too large for dense storage");
    }
    return build_effective_matrix(generate_dd_channel(paths, grid));
}

DenseVector lmmse_equalize(const DenseVector& y, const DenseMatrix& heff, double sigma2) {
    if (heff.rows() != y.size() || heff.rows() != heff.cols()) {
        throw DimensionError("lmmse_equalize: dimension mismatch");
    }
    if (!(sigma2 > 0.0)) throw ConfigError("lmmse_equalize: sigma2 must be positive");
    DenseMatrix gram = heff * heff.adjoint();
    gram.diagonal().array() += sigma2;
    Eigen::LLT<DenseMatrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw SolverError("lmmse_equalize: regularized Gram matrix is not positive definite");
    }
    DenseVector z = llt.solve(y);
    if (!z.allFinite()) throw SolverError("lmmse_equalize: non-finite solution");
    return heff.adjoint() * z;
}

std::vector<int> lmmse_detect(const DenseVector& y, const DenseMatrix& heff, double sigma2,
                              int order) {
    const Constellation constellation(order);
    const DenseVector x = lmmse_equalize(y, heff, sigma2);
    std::vector<int> out(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out[static_cast<std::size_t>(i)] = constellation.slice(x(i));
    }
    return out;
}

std::vector<int> indices_in_vec_order(const DataFrame& frame) {
    const DdGrid& grid = frame.symbols.grid();
    std::vector<int> out(grid.size());
    for (std::size_t l = 0; l < grid.M(); ++l) {
        for (std::size_t k = 0; k < grid.N(); ++k) {
            out[l * grid.N() + k] = frame.indices[k * grid.M() + l];
        }
    }
    return out;
}

}  // namespace otfsce
