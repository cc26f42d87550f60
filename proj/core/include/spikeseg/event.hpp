#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace spikeseg {

// Per-event ground-truth class. Labels ride on events because segmentation
// ground truth is defined by masking the event cloud itself.
enum class EventLabel : std::uint8_t {
    background = 0,
    foreground = 1,
    none = 2,
};

// One camera event: a signed log-brightness change at pixel (x, y).
struct Event {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int64_t t_us = 0;
    std::int8_t polarity = 1;  // +1 or -1, never 0
    EventLabel label = EventLabel::none;

    friend bool operator==(const Event&, const Event&) = default;
};

// Time-ordered events inside the half-open window [t_start_us, t_end_us).
struct EventStream {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::int64_t t_start_us = 0;
    std::int64_t t_end_us = 0;
    std::vector<Event> events;

    // Throws std::runtime_error on the first violated invariant:
    // ordering, window containment, sensor bounds, or polarity.
    void validate() const;

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

// Binary spike volume, logically indexed (channel, y, x, time_bin).
// Channel 0 holds positive polarity, channel 1 negative. Values are 0/1.
struct SpikeTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    int steps = 0;
    std::int64_t bin_width_us = 0;
    std::vector<std::uint8_t> data;  // layout: ((k*C + c)*H + y)*W + x

    static SpikeTensor zeros(int channels, int height, int width, int steps,
                             std::int64_t bin_width_us);

    std::size_t index(int c, int y, int x, int k) const {
        return ((static_cast<std::size_t>(k) * channels + c) * height + y) * width + x;
    }
    std::uint8_t at(int c, int y, int x, int k) const { return data[index(c, y, x, k)]; }
    void set(int c, int y, int x, int k, std::uint8_t v) { data[index(c, y, x, k)] = v; }
    std::size_t size() const { return data.size(); }
    std::size_t count_nonzero() const;

    friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;
};

// Per-pixel spike counts, summed over channels and time bins.
struct SpikeProjection {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;  // row-major (y, x)

    std::uint32_t at(int y, int x) const { return counts[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const SpikeProjection&, const SpikeProjection&) = default;
};

// Sensor trigger rule on log-brightness. Returns +1 when the increase
// reaches the threshold, -1 when the decrease does, nothing otherwise.
// The comparison is inclusive (>= threshold fires).
std::optional<int> trigger_event(double log_prev, double log_curr, double threshold);

// Bins a stream into a binary (2, H, W, T) tensor with
// T = ceil(window / bin_width_us). Multiple same-polarity events in one
// pixel and bin collapse into a single 1.
SpikeTensor discretize(const EventStream& stream, std::int64_t bin_width_us);

// Collapses the temporal axis: per-pixel count over channels and bins.
SpikeProjection project(const SpikeTensor& tensor);

}  // namespace spikeseg
