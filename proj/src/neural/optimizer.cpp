#include "gatepose/neural/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace gatepose::neural {

void adam_step(std::span<double> param, std::span<const double> grad, std::span<double> m,
               std::span<double> v, int step, const AdamConfig& cfg) {
    if (param.size() != grad.size() || param.size() != m.size() || param.size() != v.size())
        throw std::invalid_argument("adam_step: mismatched spans");
    if (step < 1) throw std::invalid_argument("adam_step: step counts from 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step);
    for (size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

Adam::Adam(const std::vector<ParamView>& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamView& p : params) {
        m_.emplace_back(p.value->size(), 0.0);
        v_.emplace_back(p.value->size(), 0.0);
    }
}

void Adam::step(const std::vector<ParamView>& params) {
    if (params.size() != m_.size())
        throw std::invalid_argument("Adam: parameter structure changed");
    ++t_;
    for (size_t k = 0; k < params.size(); ++k)
        adam_step(*params[k].value, *params[k].grad, m_[k], v_[k], t_, cfg_);
}

}  // namespace gatepose::neural
