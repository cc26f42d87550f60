#include "spikeseg/srm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikeseg {

void SrmParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("SrmParams: ") + name + " must be > 0");
        }
    };
    positive(tau_s_ms, "tau_s_ms");
    positive(tau_r_ms, "tau_r_ms");
    positive(theta, "theta");
    positive(surrogate_alpha, "surrogate_alpha");
    positive(surrogate_beta, "surrogate_beta");
    positive(sim_step_ms, "sim_step_ms");
}

double eps_kernel(double t_ms, double tau_s_ms) {
    if (!(tau_s_ms > 0.0)) throw std::invalid_argument("eps_kernel: tau_s must be > 0");
    if (t_ms < 0.0) return 0.0;
    const double r = t_ms / tau_s_ms;
    return r * std::exp(1.0 - r);
}

double ref_kernel(double t_ms, double tau_r_ms, double theta) {
    if (!(tau_r_ms > 0.0)) throw std::invalid_argument("ref_kernel: tau_r must be > 0");
    if (t_ms < 0.0) return 0.0;
    return -2.0 * theta * std::exp(1.0 - t_ms / tau_r_ms);
}

double surrogate_grad(double u, const SrmParams& params) {
    return params.surrogate_alpha * std::exp(-params.surrogate_beta * std::abs(u - params.theta));
}

double relaxed_spike(double u, const SrmParams& params) {
    const double scale = params.surrogate_alpha / params.surrogate_beta;
    const double d = u - params.theta;
    if (d < 0.0) return scale * std::exp(params.surrogate_beta * d);
    return scale * (2.0 - std::exp(-params.surrogate_beta * d));
}

KernelTable KernelTable::build(const SrmParams& params) {
    params.validate();
    const double horizon_ms = 5.0 * std::max(params.tau_s_ms, params.tau_r_ms);
    const int length = static_cast<int>(std::ceil(horizon_ms / params.sim_step_ms));
    KernelTable table;
    table.length = length;
    table.eps.resize(length);
    table.nu.resize(length);
    for (int k = 0; k < length; ++k) {
        const double t = k * params.sim_step_ms;
        table.eps[k] = eps_kernel(t, params.tau_s_ms);
        table.nu[k] = ref_kernel(t, params.tau_r_ms, params.theta);
    }
    return table;
}

std::pair<std::vector<std::uint8_t>, std::vector<double>> simulate_neuron(
    const std::vector<std::vector<std::uint8_t>>& inputs, const std::vector<double>& weights,
    const SrmParams& params) {
    if (inputs.size() != weights.size()) {
        throw std::invalid_argument("simulate_neuron: weight count does not match input count");
    }
    const std::size_t steps = inputs.empty() ? 0 : inputs.front().size();
    for (const auto& train : inputs) {
        if (train.size() != steps) {
            throw std::invalid_argument("simulate_neuron: input trains differ in length");
        }
    }
    const KernelTable table = KernelTable::build(params);
    std::vector<std::uint8_t> out(steps, 0);
    std::vector<double> membrane(steps, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        double u = 0.0;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
            const auto& train = inputs[j];
            double psp = 0.0;
            const std::size_t lo = k + 1 >= static_cast<std::size_t>(table.length)
                                       ? k + 1 - table.length
                                       : 0;
            for (std::size_t m = lo; m <= k; ++m) {
                if (train[m]) psp += table.eps[k - m];
            }
            u += weights[j] * psp;
        }
        // Refractory path: own spikes strictly before k.
        const std::size_t rlo =
            k >= static_cast<std::size_t>(table.length) ? k - table.length + 1 : 0;
        for (std::size_t m = rlo; m < k; ++m) {
            if (out[m]) u += table.nu[k - m];
        }
        membrane[k] = u;
        out[k] = static_cast<std::uint8_t>(spike_function(u, params.theta));
    }
    return {std::move(out), std::move(membrane)};
}

}  // namespace spikeseg
