#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace gatepose::neural {

/// Dense row-major tensor of doubles. Shapes are small and known up front;
/// this is storage plus indexing, nothing more.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0);
    static Tensor of(std::vector<int> shape, std::vector<double> values);

    int size() const { return static_cast<int>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[i]; }

    double& operator[](int i) { return data[i]; }
    double operator[](int i) const { return data[i]; }

    // [rows, cols]
    double& at(int i, int j) { return data[i * shape[1] + j]; }
    double at(int i, int j) const { return data[i * shape[1] + j]; }
    // [d0, d1, d2]
    double& at(int i, int j, int k) { return data[(i * shape[1] + j) * shape[2] + k]; }
    double at(int i, int j, int k) const { return data[(i * shape[1] + j) * shape[2] + k]; }

    bool same_shape(const std::vector<int>& s) const { return shape == s; }
    std::string shape_str() const;
};

int shape_size(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace gatepose::neural
