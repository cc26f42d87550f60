#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace spikeseg {

// Spike Response Model constants. Times are in milliseconds; the membrane
// threshold is dimensionless.
struct SrmParams {
    double tau_s_ms = 2.0;         // spike-response time constant
    double tau_r_ms = 2.0;         // refractory time constant
    double theta = 1.0;            // firing threshold
    double surrogate_alpha = 1.0;  // surrogate gradient peak
    double surrogate_beta = 10.0;  // surrogate gradient decay rate
    double sim_step_ms = 1.0;

    void validate() const;  // throws std::invalid_argument

    friend bool operator==(const SrmParams&, const SrmParams&) = default;
};

// epsilon(t) = (t/tau_s) e^{1 - t/tau_s} for t >= 0, zero before. Peaks at
// exactly 1 when t = tau_s.
double eps_kernel(double t_ms, double tau_s_ms);

// nu(t) = -2 theta e^{1 - t/tau_r} for t >= 0, zero before. Always <= 0.
double ref_kernel(double t_ms, double tau_r_ms, double theta);

// Threshold function: 1 iff u >= theta ("reaches" is inclusive).
inline int spike_function(double u, double theta) { return u >= theta ? 1 : 0; }

// Surrogate derivative of the threshold: alpha * exp(-beta * |u - theta|).
// Strictly positive, maximal at u = theta, symmetric about it.
double surrogate_grad(double u, const SrmParams& params);

// Antiderivative of surrogate_grad. Used as a smooth stand-in for the
// threshold when checking gradients against finite differences; its
// derivative is exactly surrogate_grad.
double relaxed_spike(double u, const SrmParams& params);

// Response and refractory kernels sampled at k * sim_step for
// k = 0..length-1, truncated where the tail is below e^-4 of the peak.
struct KernelTable {
    std::vector<double> eps;  // eps[0] == 0
    std::vector<double> nu;   // all entries <= 0
    int length = 0;

    static KernelTable build(const SrmParams& params);
};

// Single-neuron reference dynamics over binary input trains:
//   u[k] = sum_j w_j (eps (*) s_j)[k] + (nu (*) s_out)[k]
// with causal discrete convolutions; the refractory term sees only output
// spikes strictly before k. Returns the output train and membrane trace.
std::pair<std::vector<std::uint8_t>, std::vector<double>> simulate_neuron(
    const std::vector<std::vector<std::uint8_t>>& inputs, const std::vector<double>& weights,
    const SrmParams& params);

}  // namespace spikeseg
