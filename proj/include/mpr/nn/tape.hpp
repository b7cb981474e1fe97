#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "mpr/nn/parameters.hpp"

namespace mpr::nn {

class tape;

/// Handle to a node recorded on a tape.
struct var {
    tape* owner = nullptr;
    std::size_t id = 0;

    const matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode recording of matrix operations. Parameter leaves reference the
/// parameter storage directly, so parameters must not change while a tape is alive.
class tape {
public:
    using backward_fn = std::function<void(tape&, std::size_t)>;

    tape() = default;
    tape(const tape&) = delete;
    tape& operator=(const tape&) = delete;

    var constant(matrix value);
    var parameter(parameter_set& params, std::string_view name);

    /// Records an op node; `backward` reads grad(self) and accumulates into its inputs.
    var push(matrix value, backward_fn backward);

    const matrix& value(std::size_t id) const;
    /// Gradient buffer of a node, allocated as zeros on first access.
    matrix& grad(std::size_t id);
    bool has_grad(std::size_t id) const { return nodes_[id].grad_set; }

    /// Seeds the given output gradients and propagates to every parameter leaf.
    void backward(const std::vector<std::pair<var, matrix>>& seeds);
    void backward(var scalar_output);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct node {
        matrix owned;
        const matrix* ref = nullptr;
        matrix grad;
        bool grad_set = false;
        backward_fn backward;
    };

    std::vector<node> nodes_;
    std::map<std::pair<const parameter_set*, std::size_t>, std::size_t> param_leaves_;
};

var matmul(var a, var b);
/// a * b^T
var matmul_bt(var a, var b);
var transpose(var a);
var add(var a, var b);
var sub(var a, var b);
/// Adds a 1 x n row to every row of a.
var add_row(var a, var row);
/// Adds an m x 1 column to every column of a.
var add_col(var a, var col);
var scale(var a, double s);
/// Exact-erf GELU.
var gelu(var a);
/// Per-row layer normalization with 1 x n gain and bias.
var layer_norm_rows(var x, var gain, var bias, double eps = 1e-5);
var softmax_rows(var a);
var col_block(var a, Eigen::Index start, Eigen::Index count);
var hcat(const std::vector<var>& parts);
/// 1 x n column sums.
var col_sums(var a);
/// Row i of a times s(i), where s is m x 1 or 1 x m.
var scale_rows(var a, var s);
/// Each row divided by sqrt(|row|^2 + eps).
var l2_normalize_rows(var a, double eps = 1e-24);
/// Row-major flatten to 1 x (rows * cols).
var flatten(var a);
/// 3x3 patches with zero padding 1. Input is channels x (height * width), output
/// is (channels * 9) x (out_h * out_w) with out = ceil(in / stride).
var im2col3x3(var x, Eigen::Index channels, Eigen::Index height, Eigen::Index width, Eigen::Index stride);
/// Sum of all entries as a 1 x 1 node.
var sum(var a);
/// Elementwise product.
var hadamard(var a, var b);

inline Eigen::Index conv_out_extent(const Eigen::Index in, const Eigen::Index stride) { return (in + stride - 1) / stride; }

} // namespace mpr::nn
