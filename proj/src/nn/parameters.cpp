#include "mpr/nn/parameters.hpp"

#include "mpr/core/error.hpp"

namespace mpr::nn {

void parameter_set::add(std::string name, matrix value) {
    if (index_.count(name) != 0) {
        throw error(error_category::invalid_argument, "duplicate parameter " + name);
    }
    index_.emplace(name, entries_.size());
    matrix grad = matrix::Zero(value.rows(), value.cols());
    entries_.push_back({std::move(name), std::move(value), std::move(grad)});
}

bool parameter_set::contains(const std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t parameter_set::index_of(const std::string_view name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) {
        throw error(error_category::invalid_argument, "unknown parameter " + std::string(name));
    }
    return it->second;
}

void parameter_set::zero_grad() {
    for (auto& e : entries_) {
        e.grad.setZero();
    }
}

std::size_t parameter_set::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
        n += static_cast<std::size_t>(e.value.size());
    }
    return n;
}

bool parameter_set::operator==(const parameter_set& other) const {
    if (entries_.size() != other.entries_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols() ||
            a.value != b.value) {
            return false;
        }
    }
    return true;
}

} // namespace mpr::nn
