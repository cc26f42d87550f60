#pragma once

#include "spikeseg/event.hpp"
#include "spikeseg/tensor.hpp"

namespace spikeseg {

// Segmentation ground truth for one window: the per-pixel foreground map
// and the input spike train with background events zeroed out.
struct GroundTruth {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> mask;  // row-major, 1 = foreground
    SpikeTensor fg_spikes;

    bool fg(int y, int x) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }

    // Checks fg_spikes <= input and fg_spikes == 0 outside the mask.
    void validate_against(const SpikeTensor& input) const;
};

// Builds ground truth from per-event labels: the mask marks pixels with at
// least one foreground event, fg_spikes discretizes only those events.
GroundTruth make_ground_truth(const EventStream& window, std::int64_t bin_width_us);

bool has_labels(const EventStream& stream);

struct LossConfig {
    double lambda = 1.0;           // spike-loss weight in the total
    double projection_norm = 0.0;  // <= 0 selects the bin count T
    double smoothing_tau_ms = 2.0; // 0 disables smoothing (raw squared difference)
    double clamp_eps = 1e-7;
    double step_ms = 1.0;          // integration scale of the spike loss
};

struct LossResult {
    double value = 0.0;
    TimeTensor grad;  // dL/d(predicted spikes), same shape as the prediction
};

// Binary cross entropy between the clamped projection rate and the mask,
// averaged over pixels. Depends on the prediction only through its
// projection; the gradient spreads uniformly over each pixel's bins.
LossResult bce_loss(const TimeTensor& pred, const GroundTruth& gt, const LossConfig& cfg);

// Squared distance between exponentially smoothed spike trains, restricted
// to foreground pixels by the mask. smoothing_tau_ms = 0 gives the raw
// squared difference.
LossResult spike_loss(const TimeTensor& pred, const GroundTruth& gt, const LossConfig& cfg);

// bce + lambda * spike.
LossResult total_loss(const TimeTensor& pred, const GroundTruth& gt, const LossConfig& cfg);

}  // namespace spikeseg
