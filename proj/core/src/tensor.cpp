#include "spikeseg/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace spikeseg {

TimeTensor TimeTensor::zeros(int steps, PlaneDims dims) {
    TimeTensor t;
    t.steps = steps;
    t.dims = dims;
    t.data.assign(static_cast<std::size_t>(steps) * dims.size(), 0.0);
    return t;
}

TimeTensor to_time_tensor(const SpikeTensor& spikes) {
    TimeTensor t = TimeTensor::zeros(spikes.steps,
                                     {spikes.channels, spikes.height, spikes.width});
    for (std::size_t i = 0; i < spikes.data.size(); ++i) {
        t.data[i] = spikes.data[i] ? 1.0 : 0.0;
    }
    return t;
}

SpikeTensor to_spike_tensor(const TimeTensor& tensor, std::int64_t bin_width_us) {
    SpikeTensor s = SpikeTensor::zeros(tensor.dims.channels, tensor.dims.height,
                                       tensor.dims.width, tensor.steps, bin_width_us);
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
        s.data[i] = tensor.data[i] != 0.0 ? 1 : 0;
    }
    return s;
}

void conv_plane(const double* x, PlaneDims xd, const float* w, int kernel, int stride,
                int pad, double* y, PlaneDims yd) {
    const int H = xd.height, W = xd.width;
    const int OH = yd.height, OW = yd.width;
    for (int oc = 0; oc < yd.channels; ++oc) {
        for (int ic = 0; ic < xd.channels; ++ic) {
            const float* wk = w + (static_cast<std::size_t>(oc) * xd.channels + ic) *
                                      kernel * kernel;
            const double* xc = x + static_cast<std::size_t>(ic) * H * W;
            double* ycz = y + static_cast<std::size_t>(oc) * OH * OW;
            for (int oy = 0; oy < OH; ++oy) {
                const int iy0 = oy * stride - pad;
                double* yrow = ycz + static_cast<std::size_t>(oy) * OW;
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = iy0 + ky;
                    if (iy < 0 || iy >= H) continue;
                    const double* xrow = xc + static_cast<std::size_t>(iy) * W;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const double wv = wk[ky * kernel + kx];
                        const int off = kx - pad;
                        // valid ox range: 0 <= ox*stride + off < W
                        int lo = off < 0 ? (-off + stride - 1) / stride : 0;
                        int hi = (W - 1 - off) / stride;
                        if (hi >= OW) hi = OW - 1;
                        for (int ox = lo; ox <= hi; ++ox) {
                            yrow[ox] += wv * xrow[ox * stride + off];
                        }
                    }
                }
            }
        }
    }
}

void conv_plane_adjoint(const double* g, PlaneDims gd, const float* w, int kernel,
                        int stride, int pad, double* x, PlaneDims xd) {
    const int H = xd.height, W = xd.width;
    const int OH = gd.height, OW = gd.width;
    for (int ic = 0; ic < xd.channels; ++ic) {
        double* xc = x + static_cast<std::size_t>(ic) * H * W;
        for (int oc = 0; oc < gd.channels; ++oc) {
            const float* wk = w + (static_cast<std::size_t>(oc) * xd.channels + ic) *
                                      kernel * kernel;
            const double* gc = g + static_cast<std::size_t>(oc) * OH * OW;
            for (int oy = 0; oy < OH; ++oy) {
                const int iy0 = oy * stride - pad;
                const double* grow = gc + static_cast<std::size_t>(oy) * OW;
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = iy0 + ky;
                    if (iy < 0 || iy >= H) continue;
                    double* xrow = xc + static_cast<std::size_t>(iy) * W;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const double wv = wk[ky * kernel + kx];
                        const int off = kx - pad;
                        int lo = off < 0 ? (-off + stride - 1) / stride : 0;
                        int hi = (W - 1 - off) / stride;
                        if (hi >= OW) hi = OW - 1;
                        for (int ox = lo; ox <= hi; ++ox) {
                            xrow[ox * stride + off] += wv * grow[ox];
                        }
                    }
                }
            }
        }
    }
}

void conv_plane_wgrad(const double* g, PlaneDims gd, const double* x, PlaneDims xd,
                      int kernel, int stride, int pad, double* dw) {
    const int H = xd.height, W = xd.width;
    const int OH = gd.height, OW = gd.width;
    for (int oc = 0; oc < gd.channels; ++oc) {
        const double* gc = g + static_cast<std::size_t>(oc) * OH * OW;
        for (int ic = 0; ic < xd.channels; ++ic) {
            const double* xc = x + static_cast<std::size_t>(ic) * H * W;
            double* dwk = dw + (static_cast<std::size_t>(oc) * xd.channels + ic) *
                                   kernel * kernel;
            for (int ky = 0; ky < kernel; ++ky) {
                for (int kx = 0; kx < kernel; ++kx) {
                    const int offx = kx - pad;
                    int lo = offx < 0 ? (-offx + stride - 1) / stride : 0;
                    int hi = (W - 1 - offx) / stride;
                    if (hi >= OW) hi = OW - 1;
                    double acc = 0.0;
                    for (int oy = 0; oy < OH; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= H) continue;
                        const double* grow = gc + static_cast<std::size_t>(oy) * OW;
                        const double* xrow = xc + static_cast<std::size_t>(iy) * W;
                        for (int ox = lo; ox <= hi; ++ox) {
                            acc += grow[ox] * xrow[ox * stride + offx];
                        }
                    }
                    dwk[ky * kernel + kx] += acc;
                }
            }
        }
    }
}

void temporal_conv(const TimeTensor& in, std::span<const double> kern, TimeTensor& out) {
    if (in.dims != out.dims || in.steps != out.steps) {
        throw std::invalid_argument("temporal_conv: shape mismatch");
    }
    const std::size_t plane = in.dims.size();
    const int T = in.steps;
    const int K = static_cast<int>(kern.size());
    for (int j = 0; j < K; ++j) {
        const double kv = kern[j];
        if (kv == 0.0) continue;
        for (int k = j; k < T; ++k) {
            const double* src = in.plane(k - j);
            double* dst = out.plane(k);
            for (std::size_t i = 0; i < plane; ++i) dst[i] += kv * src[i];
        }
    }
}

void temporal_corr(const TimeTensor& in, std::span<const double> kern, TimeTensor& out) {
    if (in.dims != out.dims || in.steps != out.steps) {
        throw std::invalid_argument("temporal_corr: shape mismatch");
    }
    const std::size_t plane = in.dims.size();
    const int T = in.steps;
    const int K = static_cast<int>(kern.size());
    for (int j = 0; j < K; ++j) {
        const double kv = kern[j];
        if (kv == 0.0) continue;
        for (int k = 0; k + j < T; ++k) {
            const double* src = in.plane(k + j);
            double* dst = out.plane(k);
            for (std::size_t i = 0; i < plane; ++i) dst[i] += kv * src[i];
        }
    }
}

}  // namespace spikeseg
