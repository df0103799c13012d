#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lm3fe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace detail {

inline std::string shape_str(Index rows, Index cols)
{
    return std::to_string(rows) + "x" + std::to_string(cols);
}

inline void require_shape(const Matrix& m, Index rows, Index cols, const char* what)
{
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(std::string(what) + ": expected " + shape_str(rows, cols) +
                         ", got " + shape_str(m.rows(), m.cols()));
    }
}

inline void require_size(const Vector& v, Index size, const char* what)
{
    if (v.size() != size) {
        throw ShapeError(std::string(what) + ": expected length " + std::to_string(size) +
                         ", got " + std::to_string(v.size()));
    }
}

} // namespace detail

/// Sum of the Euclidean norms of the rows of `u`.
inline double l21_norm(const Matrix& u)
{
    return u.rowwise().norm().sum();
}

} // namespace lm3fe
