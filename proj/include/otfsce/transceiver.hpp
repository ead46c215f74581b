// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "otfsce/channel.hpp"
#include "otfsce/dd_grid.hpp"

namespace otfsce {

/// Single-impulse pilot of amplitude sqrt(M N E_p) at (k_pilot, l_pilot).
struct PilotConfig {
    std::size_t k_pilot = 0;
    std::size_t l_pilot = 0;
    double energy = 1.0;

    void validate(const DdGrid& grid) const;
    double amplitude(const DdGrid& grid) const;
};

DdMatrix make_pilot_frame(const PilotConfig& cfg, const DdGrid& grid);

/// Undo the cyclic shift and scale the channel applies to the pilot impulse.
DdMatrix recover_effective_channel(const DdMatrix& y, const PilotConfig& cfg);

// Square Gray-labelled QAM with unit average energy.
class Constellation {
public:
    explicit Constellation(int order);

    int order() const { return order_; }
    const std::vector<Complex>& points() const { return points_; }
    Complex point(int index) const { return points_.at(static_cast<std::size_t>(index)); }
    /// Index of the nearest constellation point.
    int slice(Complex z) const;

private:
    int order_;
    std::vector<Complex> points_;
};

struct DataFrame {
    DdMatrix symbols;
    std::vector<int> indices;  // row-major, same layout as symbols.data()
    int order;
};

DataFrame make_data_frame(int order, Rng& rng, const DdGrid& grid);

using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

inline constexpr std::size_t kMaxDenseSize = 4096;

/// Dense MN x MN matrix G with vec(H (*) X) = G vec(X) for the given channel.
DenseMatrix build_effective_matrix(const DdMatrix& channel);
DenseMatrix build_effective_matrix(std::span<const PathParams> paths, const DdGrid& grid);

/// Pre-slicing LMMSE estimate H^H (H H^H + sigma2 I)^{-1} y.
DenseVector lmmse_equalize(const DenseVector& y, const DenseMatrix& heff, double sigma2);

/// Detected symbol indices in vec (column-stacked) order.
std::vector<int> lmmse_detect(const DenseVector& y, const DenseMatrix& heff, double sigma2,
                              int order);

/// Reorders row-major frame indices into vec order.
std::vector<int> indices_in_vec_order(const DataFrame& frame);

}  // namespace otfsce
