#include "gatepose/neural/tensor.hpp"

#include <stdexcept>

namespace gatepose::neural {

int shape_size(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
        n *= d;
    }
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(std::vector<int> s, double fill)
    : shape(std::move(s)), data(shape_size(shape), fill) {}

Tensor Tensor::of(std::vector<int> shape, std::vector<double> values) {
    if (shape_size(shape) != static_cast<int>(values.size()))
        throw std::invalid_argument("tensor values do not match shape " +
                                    shape_to_string(shape));
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::move(values);
    return t;
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

}  // namespace gatepose::neural
