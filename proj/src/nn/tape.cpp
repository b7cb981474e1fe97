#include "mpr/nn/tape.hpp"

#include <cmath>

#include "mpr/core/error.hpp"

namespace mpr::nn {

namespace {

void require(const bool ok, const char* what) {
    if (!ok) {
        throw error(error_category::dimension, what);
    }
}

tape& owner_of(const var a) {
    require(a.owner != nullptr, "variable without a tape");
    return *a.owner;
}

tape& owner_of(const var a, const var b) {
    require(a.owner != nullptr && a.owner == b.owner, "variables from different tapes");
    return *a.owner;
}

} // namespace

const matrix& var::value() const { return owner->value(id); }

var tape::constant(matrix value) {
    nodes_.push_back(node{std::move(value), nullptr, {}, false, {}});
    return {this, nodes_.size() - 1};
}

var tape::parameter(parameter_set& params, const std::string_view name) {
    const std::size_t index = params.index_of(name);
    const auto key = std::make_pair(static_cast<const parameter_set*>(&params), index);
    if (const auto it = param_leaves_.find(key); it != param_leaves_.end()) {
        return {this, it->second};
    }
    auto* entry = &params.at(index);
    node n;
    n.ref = &entry->value;
    n.backward = [entry](tape& t, const std::size_t self) { entry->grad += t.grad(self); };
    nodes_.push_back(std::move(n));
    param_leaves_.emplace(key, nodes_.size() - 1);
    return {this, nodes_.size() - 1};
}

var tape::push(matrix value, backward_fn backward) {
    nodes_.push_back(node{std::move(value), nullptr, {}, false, std::move(backward)});
    return {this, nodes_.size() - 1};
}

const matrix& tape::value(const std::size_t id) const {
    const node& n = nodes_[id];
    return n.ref != nullptr ? *n.ref : n.owned;
}

matrix& tape::grad(const std::size_t id) {
    node& n = nodes_[id];
    if (!n.grad_set) {
        const matrix& v = value(id);
        n.grad = matrix::Zero(v.rows(), v.cols());
        n.grad_set = true;
    }
    return n.grad;
}

void tape::backward(const std::vector<std::pair<var, matrix>>& seeds) {
    for (const auto& [v, g] : seeds) {
        require(v.owner == this, "seed from another tape");
        matrix& dst = grad(v.id);
        require(dst.rows() == g.rows() && dst.cols() == g.cols(), "seed shape mismatch");
        dst += g;
    }
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        node& n = nodes_[i];
        if (n.grad_set && n.backward) {
            n.backward(*this, i);
        }
    }
}

void tape::backward(const var scalar_output) {
    require(scalar_output.rows() == 1 && scalar_output.cols() == 1, "backward needs a 1x1 output");
    backward({{scalar_output, matrix::Ones(1, 1)}});
}

var matmul(const var a, const var b) {
    tape& t = owner_of(a, b);
    require(a.cols() == b.rows(), "matmul inner dimension mismatch");
    matrix out = a.value() * b.value();
    return t.push(std::move(out), [ai = a.id, bi = b.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        t.grad(ai).noalias() += g * t.value(bi).transpose();
        t.grad(bi).noalias() += t.value(ai).transpose() * g;
    });
}

var matmul_bt(const var a, const var b) {
    tape& t = owner_of(a, b);
    require(a.cols() == b.cols(), "matmul_bt inner dimension mismatch");
    matrix out = a.value() * b.value().transpose();
    return t.push(std::move(out), [ai = a.id, bi = b.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        t.grad(ai).noalias() += g * t.value(bi);
        t.grad(bi).noalias() += g.transpose() * t.value(ai);
    });
}

var transpose(const var a) {
    tape& t = owner_of(a);
    matrix out = a.value().transpose();
    return t.push(std::move(out), [ai = a.id](tape& t, const std::size_t self) {
        t.grad(ai) += t.grad(self).transpose();
    });
}

var add(const var a, const var b) {
    tape& t = owner_of(a, b);
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
    matrix out = a.value() + b.value();
    return t.push(std::move(out), [ai = a.id, bi = b.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        t.grad(ai) += g;
        t.grad(bi) += g;
    });
}

var sub(const var a, const var b) {
    tape& t = owner_of(a, b);
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
    matrix out = a.value() - b.value();
    return t.push(std::move(out), [ai = a.id, bi = b.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        t.grad(ai) += g;
        t.grad(bi) -= g;
    });
}

var add_row(const var a, const var row) {
    tape& t = owner_of(a, row);
    require(row.rows() == 1 && row.cols() == a.cols(), "add_row shape mismatch");
    matrix out = a.value().rowwise() + row.value().row(0);
    return t.push(std::move(out), [ai = a.id, ri = row.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        t.grad(ai) += g;
        t.grad(ri) += g.colwise().sum();
    });
}

var add_col(const var a, const var col) {
    tape& t = owner_of(a, col);
    require(col.cols() == 1 && col.rows() == a.rows(), "add_col shape mismatch");
    matrix out = a.value().colwise() + col.value().col(0);
    return t.push(std::move(out), [ai = a.id, ci = col.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        t.grad(ai) += g;
        t.grad(ci) += g.rowwise().sum();
    });
}

var scale(const var a, const double s) {
    tape& t = owner_of(a);
    matrix out = a.value() * s;
    return t.push(std::move(out), [ai = a.id, s](tape& t, const std::size_t self) { t.grad(ai) += t.grad(self) * s; });
}

var gelu(const var a) {
    tape& t = owner_of(a);
    const matrix& x = a.value();
    matrix out(x.rows(), x.cols());
    matrix slope(x.rows(), x.cols());
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    constexpr double inv_sqrt_2 = 0.70710678118654752440;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x.data()[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt_2));
        out.data()[i] = v * cdf;
        slope.data()[i] = cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
    }
    return t.push(std::move(out), [ai = a.id, slope = std::move(slope)](tape& t, const std::size_t self) {
        t.grad(ai) += t.grad(self).cwiseProduct(slope);
    });
}

var layer_norm_rows(const var x, const var gain, const var bias, const double eps) {
    tape& t = owner_of(x, gain);
    require(gain.owner == bias.owner, "variables from different tapes");
    const Eigen::Index n = x.cols();
    require(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n,
            "layer_norm parameter shape mismatch");
    const matrix& xv = x.value();
    matrix normalized(xv.rows(), n);
    Eigen::VectorXd inv_sigma(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const double mu = xv.row(r).mean();
        const double var = (xv.row(r).array() - mu).square().mean();
        inv_sigma(r) = 1.0 / std::sqrt(var + eps);
        normalized.row(r) = (xv.row(r).array() - mu) * inv_sigma(r);
    }
    matrix out = (normalized.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
    return t.push(std::move(out), [xi = x.id, gi = gain.id, bi = bias.id, normalized = std::move(normalized),
                                   inv_sigma = std::move(inv_sigma)](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        const auto gain_row = t.value(gi).row(0).array();
        t.grad(gi) += (g.array() * normalized.array()).colwise().sum().matrix();
        t.grad(bi) += g.colwise().sum();
        matrix& dx = t.grad(xi);
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const Eigen::ArrayXd dn = (g.row(r).array() * gain_row).transpose();
            const Eigen::ArrayXd nr = normalized.row(r).array().transpose();
            const double mean_dn = dn.mean();
            const double mean_dn_n = (dn * nr).mean();
            dx.row(r).array() += ((dn - mean_dn - nr * mean_dn_n) * inv_sigma(r)).transpose();
        }
    });
}

var softmax_rows(const var a) {
    tape& t = owner_of(a);
    const matrix& x = a.value();
    matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        out.row(r) = (x.row(r).array() - m).exp();
        out.row(r) /= out.row(r).sum();
    }
    return t.push(std::move(out), [ai = a.id](tape& t, const std::size_t self) {
        const matrix& s = t.value(self);
        const matrix& g = t.grad(self);
        const Eigen::VectorXd dots = (g.array() * s.array()).rowwise().sum();
        t.grad(ai).array() += s.array() * (g.array().colwise() - dots.array());
    });
}

var col_block(const var a, const Eigen::Index start, const Eigen::Index count) {
    tape& t = owner_of(a);
    require(start >= 0 && count >= 0 && start + count <= a.cols(), "col_block out of range");
    matrix out = a.value().middleCols(start, count);
    return t.push(std::move(out), [ai = a.id, start, count](tape& t, const std::size_t self) {
        t.grad(ai).middleCols(start, count) += t.grad(self);
    });
}

var hcat(const std::vector<var>& parts) {
    require(!parts.empty(), "hcat of nothing");
    tape& t = owner_of(parts.front());
    Eigen::Index cols = 0;
    for (const var p : parts) {
        require(p.owner == &t && p.rows() == parts.front().rows(), "hcat shape mismatch");
        cols += p.cols();
    }
    matrix out(parts.front().rows(), cols);
    std::vector<std::pair<std::size_t, Eigen::Index>> layout;
    Eigen::Index at = 0;
    for (const var p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        layout.emplace_back(p.id, at);
        at += p.cols();
    }
    return t.push(std::move(out), [layout = std::move(layout)](tape& t, const std::size_t self) {
        for (const auto& [id, offset] : layout) {
            const Eigen::Index c = t.value(id).cols();
            t.grad(id) += t.grad(self).middleCols(offset, c);
        }
    });
}

var col_sums(const var a) {
    tape& t = owner_of(a);
    matrix out = a.value().colwise().sum();
    return t.push(std::move(out), [ai = a.id](tape& t, const std::size_t self) {
        t.grad(ai).rowwise() += t.grad(self).row(0);
    });
}

var scale_rows(const var a, const var s) {
    tape& t = owner_of(a, s);
    require(s.value().size() == a.rows() && (s.rows() == 1 || s.cols() == 1), "scale_rows shape mismatch");
    const Eigen::VectorXd sv = Eigen::Map<const Eigen::VectorXd>(s.value().data(), s.value().size());
    matrix out = sv.asDiagonal() * a.value();
    return t.push(std::move(out), [ai = a.id, si = s.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        const matrix& sval = t.value(si);
        const Eigen::VectorXd sv = Eigen::Map<const Eigen::VectorXd>(sval.data(), sval.size());
        t.grad(ai) += sv.asDiagonal() * g;
        const Eigen::VectorXd ds = (g.array() * t.value(ai).array()).rowwise().sum();
        matrix& dst = t.grad(si);
        Eigen::Map<Eigen::VectorXd>(dst.data(), dst.size()) += ds;
    });
}

var l2_normalize_rows(const var a, const double eps) {
    tape& t = owner_of(a);
    const matrix& x = a.value();
    Eigen::VectorXd norms = (x.rowwise().squaredNorm().array() + eps).sqrt();
    matrix out = norms.cwiseInverse().asDiagonal() * x;
    return t.push(std::move(out), [ai = a.id, norms = std::move(norms)](tape& t, const std::size_t self) {
        const matrix& y = t.value(self);
        const matrix& g = t.grad(self);
        const Eigen::VectorXd dots = (g.array() * y.array()).rowwise().sum();
        const matrix proj = g - dots.asDiagonal() * y;
        t.grad(ai) += norms.cwiseInverse().asDiagonal() * proj;
    });
}

var flatten(const var a) {
    tape& t = owner_of(a);
    const matrix& x = a.value();
    matrix out(1, x.size());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out.middleCols(r * x.cols(), x.cols()) = x.row(r);
    }
    return t.push(std::move(out), [ai = a.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        matrix& dst = t.grad(ai);
        for (Eigen::Index r = 0; r < dst.rows(); ++r) {
            dst.row(r) += g.middleCols(r * dst.cols(), dst.cols());
        }
    });
}

var im2col3x3(const var x, const Eigen::Index channels, const Eigen::Index height, const Eigen::Index width,
              const Eigen::Index stride) {
    tape& t = owner_of(x);
    require(stride >= 1 && x.rows() == channels && x.cols() == height * width, "im2col input shape mismatch");
    const Eigen::Index out_h = conv_out_extent(height, stride);
    const Eigen::Index out_w = conv_out_extent(width, stride);
    const matrix& in = x.value();
    matrix out = matrix::Zero(channels * 9, out_h * out_w);
    for (Eigen::Index c = 0; c < channels; ++c) {
        for (Eigen::Index ky = 0; ky < 3; ++ky) {
            for (Eigen::Index kx = 0; kx < 3; ++kx) {
                const Eigen::Index row = c * 9 + ky * 3 + kx;
                for (Eigen::Index oy = 0; oy < out_h; ++oy) {
                    const Eigen::Index iy = oy * stride - 1 + ky;
                    if (iy < 0 || iy >= height) {
                        continue;
                    }
                    for (Eigen::Index ox = 0; ox < out_w; ++ox) {
                        const Eigen::Index ix = ox * stride - 1 + kx;
                        if (ix < 0 || ix >= width) {
                            continue;
                        }
                        out(row, oy * out_w + ox) = in(c, iy * width + ix);
                    }
                }
            }
        }
    }
    return t.push(std::move(out), [xi = x.id, channels, height, width, stride, out_h,
                                   out_w](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        matrix& dst = t.grad(xi);
        for (Eigen::Index c = 0; c < channels; ++c) {
            for (Eigen::Index ky = 0; ky < 3; ++ky) {
                for (Eigen::Index kx = 0; kx < 3; ++kx) {
                    const Eigen::Index row = c * 9 + ky * 3 + kx;
                    for (Eigen::Index oy = 0; oy < out_h; ++oy) {
                        const Eigen::Index iy = oy * stride - 1 + ky;
                        if (iy < 0 || iy >= height) {
                            continue;
                        }
                        for (Eigen::Index ox = 0; ox < out_w; ++ox) {
                            const Eigen::Index ix = ox * stride - 1 + kx;
                            if (ix < 0 || ix >= width) {
                                continue;
                            }
                            dst(c, iy * width + ix) += g(row, oy * out_w + ox);
                        }
                    }
                }
            }
        }
    });
}

var sum(const var a) {
    tape& t = owner_of(a);
    matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return t.push(std::move(out), [ai = a.id](tape& t, const std::size_t self) {
        t.grad(ai).array() += t.grad(self)(0, 0);
    });
}

var hadamard(const var a, const var b) {
    tape& t = owner_of(a, b);
    require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard shape mismatch");
    matrix out = a.value().cwiseProduct(b.value());
    return t.push(std::move(out), [ai = a.id, bi = b.id](tape& t, const std::size_t self) {
        const matrix& g = t.grad(self);
        t.grad(ai) += g.cwiseProduct(t.value(bi));
        t.grad(bi) += g.cwiseProduct(t.value(ai));
    });
}

} // namespace mpr::nn
