#include "spikeseg/event.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spikeseg {

void EventStream::validate() const {
    std::int64_t prev_t = t_start_us;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.polarity != 1 && e.polarity != -1) {
            throw std::runtime_error("event " + std::to_string(i) + ": polarity " +
                                     std::to_string(int(e.polarity)) + " not in {+1,-1}");
        }
        if (e.x >= width || e.y >= height) {
            throw std::runtime_error("event " + std::to_string(i) + ": pixel (" +
                                     std::to_string(e.x) + "," + std::to_string(e.y) +
                                     ") outside sensor " + std::to_string(width) + "x" +
                                     std::to_string(height));
        }
        if (e.t_us < t_start_us || e.t_us >= t_end_us) {
            throw std::runtime_error("event " + std::to_string(i) + ": t=" +
                                     std::to_string(e.t_us) + "us outside window [" +
                                     std::to_string(t_start_us) + "," +
                                     std::to_string(t_end_us) + ")");
        }
        if (e.t_us < prev_t) {
            throw std::runtime_error("event " + std::to_string(i) + ": timestamps not sorted");
        }
        prev_t = e.t_us;
    }
}

SpikeTensor SpikeTensor::zeros(int channels, int height, int width, int steps,
                               std::int64_t bin_width_us) {
    SpikeTensor t;
    t.channels = channels;
    t.height = height;
    t.width = width;
    t.steps = steps;
    t.bin_width_us = bin_width_us;
    t.data.assign(static_cast<std::size_t>(channels) * height * width * steps, 0);
    return t;
}

std::size_t SpikeTensor::count_nonzero() const {
    return std::accumulate(data.begin(), data.end(), std::size_t{0},
                           [](std::size_t acc, std::uint8_t v) { return acc + (v != 0); });
}

std::optional<int> trigger_event(double log_prev, double log_curr, double threshold) {
    if (!std::isfinite(log_prev) || !std::isfinite(log_curr)) {
        throw std::invalid_argument("trigger_event: non-finite log brightness");
    }
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw std::invalid_argument("trigger_event: threshold must be finite and > 0");
    }
    const double delta = log_curr - log_prev;
    if (delta >= threshold) return 1;
    if (-delta >= threshold) return -1;
    return std::nullopt;
}

SpikeTensor discretize(const EventStream& stream, std::int64_t bin_width_us) {
    if (bin_width_us <= 0) {
        throw std::invalid_argument("discretize: bin width must be > 0");
    }
    if (stream.t_end_us <= stream.t_start_us) {
        throw std::invalid_argument("discretize: empty window (t_end <= t_start)");
    }
    const std::int64_t span = stream.t_end_us - stream.t_start_us;
    const int steps = static_cast<int>((span + bin_width_us - 1) / bin_width_us);
    SpikeTensor out = SpikeTensor::zeros(2, stream.height, stream.width, steps, bin_width_us);
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        if (e.x >= stream.width || e.y >= stream.height) {
            throw std::runtime_error("discretize: event " + std::to_string(i) +
                                     " outside sensor dims");
        }
        if (e.t_us < stream.t_start_us || e.t_us >= stream.t_end_us) {
            throw std::runtime_error("discretize: event " + std::to_string(i) +
                                     " outside stream window");
        }
        if (e.polarity != 1 && e.polarity != -1) {
            throw std::runtime_error("discretize: event " + std::to_string(i) +
                                     " has invalid polarity");
        }
        const int k = static_cast<int>((e.t_us - stream.t_start_us) / bin_width_us);
        const int c = e.polarity > 0 ? 0 : 1;
        out.set(c, e.y, e.x, k, 1);
    }
    return out;
}

SpikeProjection project(const SpikeTensor& tensor) {
    SpikeProjection p;
    p.height = tensor.height;
    p.width = tensor.width;
    p.counts.assign(static_cast<std::size_t>(tensor.height) * tensor.width, 0);
    const std::size_t plane = static_cast<std::size_t>(tensor.height) * tensor.width;
    for (int k = 0; k < tensor.steps; ++k) {
        for (int c = 0; c < tensor.channels; ++c) {
            const std::uint8_t* src =
                tensor.data.data() + (static_cast<std::size_t>(k) * tensor.channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) p.counts[i] += src[i];
        }
    }
    return p;
}

}  // namespace spikeseg
