#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mpr::nn {

using matrix = Eigen::MatrixXd;

/// Named trainable tensors in insertion order, each with a gradient buffer.
class parameter_set {
public:
    struct entry {
        std::string name;
        matrix value;
        matrix grad;
    };

    void add(std::string name, matrix value);

    bool contains(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;

    matrix& value(std::string_view name) { return entries_[index_of(name)].value; }
    const matrix& value(std::string_view name) const { return entries_[index_of(name)].value; }
    matrix& grad(std::string_view name) { return entries_[index_of(name)].grad; }

    entry& at(std::size_t i) { return entries_[i]; }
    const entry& at(std::size_t i) const { return entries_[i]; }
    std::size_t size() const noexcept { return entries_.size(); }

    std::vector<entry>::iterator begin() { return entries_.begin(); }
    std::vector<entry>::iterator end() { return entries_.end(); }
    std::vector<entry>::const_iterator begin() const { return entries_.begin(); }
    std::vector<entry>::const_iterator end() const { return entries_.end(); }

    void zero_grad();
    std::size_t scalar_count() const;

    bool operator==(const parameter_set& other) const;

private:
    std::vector<entry> entries_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

} // namespace mpr::nn
