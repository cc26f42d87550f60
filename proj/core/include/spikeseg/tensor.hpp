#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spikeseg/event.hpp"

namespace spikeseg {

struct PlaneDims {
    int channels = 0;
    int height = 0;
    int width = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(channels) * height * width;
    }
    friend bool operator==(const PlaneDims&, const PlaneDims&) = default;
};

// Dense real-valued spatio-temporal volume, stored time-major so each
// simulation step is one contiguous (C, H, W) plane.
struct TimeTensor {
    int steps = 0;
    PlaneDims dims;
    std::vector<double> data;

    static TimeTensor zeros(int steps, PlaneDims dims);

    double* plane(int k) { return data.data() + static_cast<std::size_t>(k) * dims.size(); }
    const double* plane(int k) const {
        return data.data() + static_cast<std::size_t>(k) * dims.size();
    }
    double at(int c, int y, int x, int k) const {
        return plane(k)[(static_cast<std::size_t>(c) * dims.height + y) * dims.width + x];
    }
    double& at(int c, int y, int x, int k) {
        return plane(k)[(static_cast<std::size_t>(c) * dims.height + y) * dims.width + x];
    }
    std::size_t size() const { return data.size(); }
};

TimeTensor to_time_tensor(const SpikeTensor& spikes);
SpikeTensor to_spike_tensor(const TimeTensor& tensor, std::int64_t bin_width_us);

// Strided 2-D convolution over one plane:
//   y[oc,oy,ox] += sum_{ic,ky,kx} w[oc,ic,ky,kx] * x[ic, oy*s+ky-p, ox*s+kx-p]
// Out-of-range input positions contribute zero.
void conv_plane(const double* x, PlaneDims xd, const float* w, int kernel, int stride,
                int pad, double* y, PlaneDims yd);

// Exact adjoint of conv_plane: scatters g (the conv output side) back
// through the same weights onto the conv input side.
void conv_plane_adjoint(const double* g, PlaneDims gd, const float* w, int kernel,
                        int stride, int pad, double* x, PlaneDims xd);

// Weight gradient of conv_plane:
//   dw[oc,ic,ky,kx] += sum_{oy,ox} g[oc,oy,ox] * x[ic, oy*s+ky-p, ox*s+kx-p]
void conv_plane_wgrad(const double* g, PlaneDims gd, const double* x, PlaneDims xd,
                      int kernel, int stride, int pad, double* dw);

// Causal temporal convolution, plane-wise: out[k] += kern[j] * in[k-j].
void temporal_conv(const TimeTensor& in, std::span<const double> kern, TimeTensor& out);

// Temporal correlation (time-reversed kernel): out[k] += kern[j] * in[k+j].
void temporal_corr(const TimeTensor& in, std::span<const double> kern, TimeTensor& out);

}  // namespace spikeseg
