#include "spikeseg/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

namespace spikeseg {

namespace {

void spatial_forward(const LayerSpec& spec, const float* w, const double* in,
                     PlaneDims ind, double* out, PlaneDims outd) {
    if (spec.kind == LayerKind::conv) {
        conv_plane(in, ind, w, spec.kernel, spec.stride, spec.padding, out, outd);
    } else {
        conv_plane_adjoint(in, ind, w, spec.kernel, spec.stride, spec.padding, out, outd);
    }
}

void spatial_upstream(const LayerSpec& spec, const float* w, const double* du,
                      PlaneDims outd, double* ga, PlaneDims ind) {
    if (spec.kind == LayerKind::conv) {
        conv_plane_adjoint(du, outd, w, spec.kernel, spec.stride, spec.padding, ga, ind);
    } else {
        conv_plane(du, outd, w, spec.kernel, spec.stride, spec.padding, ga, ind);
    }
}

void spatial_wgrad(const LayerSpec& spec, const double* du, PlaneDims outd,
                   const double* psp, PlaneDims ind, double* dw) {
    if (spec.kind == LayerKind::conv) {
        conv_plane_wgrad(du, outd, psp, ind, spec.kernel, spec.stride, spec.padding, dw);
    } else {
        conv_plane_wgrad(psp, ind, du, outd, spec.kernel, spec.stride, spec.padding, dw);
    }
}

}  // namespace

int LayerSpec::out_extent(int in) const {
    if (kind == LayerKind::conv) {
        return (in + 2 * padding - kernel) / stride + 1;
    }
    return (in - 1) * stride - 2 * padding + kernel + output_padding;
}

void LayerSpec::validate() const {
    if (in_channels <= 0 || out_channels <= 0) {
        throw std::invalid_argument("LayerSpec: channel counts must be positive");
    }
    if (kernel < 1 || stride < 1 || padding < 0 || delay_steps < 0) {
        throw std::invalid_argument("LayerSpec: invalid geometry");
    }
    if (kind == LayerKind::transposed_conv &&
        (output_padding < 0 || output_padding >= stride)) {
        throw std::invalid_argument("LayerSpec: output_padding must be in [0, stride)");
    }
    srm.validate();
}

Network::Network(std::vector<LayerSpec> layers, int input_height, int input_width,
                 int train_steps)
    : layers_(std::move(layers)),
      input_height_(input_height),
      input_width_(input_width),
      train_steps_(train_steps) {
    if (layers_.empty()) throw std::invalid_argument("Network: no layers");
    if (input_height <= 0 || input_width <= 0 || train_steps <= 0) {
        throw std::invalid_argument("Network: invalid input dims or steps");
    }
    int h = input_height, w = input_width;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        layers_[l].validate();
        if (l > 0 && layers_[l].in_channels != layers_[l - 1].out_channels) {
            throw std::invalid_argument("Network: channel mismatch entering layer " +
                                        std::to_string(l));
        }
        h = layers_[l].out_extent(h);
        w = layers_[l].out_extent(w);
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("Network: layer " + std::to_string(l) +
                                        " collapses spatial extent");
        }
    }
    weights_.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        weights_[l].assign(weight_count(static_cast<int>(l)), 0.0f);
    }
    rebuild_caches();
}

Network Network::encoder_decoder(int input_height, int input_width, int train_steps,
                                 const SrmParams& srm) {
    if (input_height % 8 != 0 || input_width % 8 != 0) {
        throw std::invalid_argument("encoder_decoder: input dims must be divisible by 8");
    }
    const int enc_ch[4] = {2, 16, 32, 64};
    std::vector<LayerSpec> layers;
    for (int i = 0; i < 3; ++i) {
        LayerSpec s;
        s.kind = LayerKind::conv;
        s.in_channels = enc_ch[i];
        s.out_channels = enc_ch[i + 1];
        s.srm = srm;
        layers.push_back(s);
    }
    for (int i = 3; i > 0; --i) {
        LayerSpec s;
        s.kind = LayerKind::transposed_conv;
        s.in_channels = enc_ch[i];
        s.out_channels = enc_ch[i - 1];
        s.srm = srm;
        layers.push_back(s);
    }
    return Network(std::move(layers), input_height, input_width, train_steps);
}

void Network::rebuild_caches() {
    tables_.clear();
    delayed_eps_.clear();
    for (const LayerSpec& spec : layers_) {
        KernelTable table = KernelTable::build(spec.srm);
        std::vector<double> delayed(spec.delay_steps, 0.0);
        delayed.insert(delayed.end(), table.eps.begin(), table.eps.end());
        tables_.push_back(std::move(table));
        delayed_eps_.push_back(std::move(delayed));
    }
}

PlaneDims Network::in_dims(int l) const {
    int h = input_height_, w = input_width_;
    for (int i = 0; i < l; ++i) {
        h = layers_[i].out_extent(h);
        w = layers_[i].out_extent(w);
    }
    return {layers_[l].in_channels, h, w};
}

PlaneDims Network::out_dims(int l) const {
    const PlaneDims in = in_dims(l);
    return {layers_[l].out_channels, layers_[l].out_extent(in.height),
            layers_[l].out_extent(in.width)};
}

std::size_t Network::weight_count(int l) const {
    const LayerSpec& s = layers_[l];
    return static_cast<std::size_t>(s.in_channels) * s.out_channels * s.kernel * s.kernel;
}

void Network::init_weights(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int l = 0; l < layer_count(); ++l) {
        const LayerSpec& spec = layers_[l];
        double psp_gain = 0.0;
        for (double e : delayed_eps_[l]) psp_gain += e;
        const double fan_in =
            static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel;
        const double bound = std::sqrt(6.0 / (fan_in * psp_gain));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (float& w : weights_[l]) w = static_cast<float>(dist(rng));
    }
    adam_ = AdamState{};
    bump_revision();
}

bool operator==(const Network& a, const Network& b) {
    return a.layers_ == b.layers_ && a.weights_ == b.weights_ && a.adam_ == b.adam_ &&
           a.input_height_ == b.input_height_ && a.input_width_ == b.input_width_ &&
           a.train_steps_ == b.train_steps_;
}

ForwardTrace forward_trace(const Network& net, const TimeTensor& input, bool relaxed) {
    const PlaneDims expected = net.in_dims(0);
    if (input.dims.channels != expected.channels || input.dims.height != expected.height ||
        input.dims.width != expected.width) {
        throw std::invalid_argument("forward: input dims do not match network input");
    }
    if (input.steps <= 0) throw std::invalid_argument("forward: empty time axis");

    const int T = input.steps;
    ForwardTrace trace;
    trace.relaxed = relaxed;
    trace.net_revision = net.revision();
    trace.spikes.reserve(net.layer_count() + 1);
    trace.psp.reserve(net.layer_count());
    trace.membrane.reserve(net.layer_count());
    trace.spikes.push_back(input);

    for (int l = 0; l < net.layer_count(); ++l) {
        const LayerSpec& spec = net.layer(l);
        const PlaneDims ind = net.in_dims(l);
        const PlaneDims outd = net.out_dims(l);
        const std::size_t plane = outd.size();
        const std::vector<double>& nu = net.kernels(l).nu;
        const int K = net.kernels(l).length;

        TimeTensor psp = TimeTensor::zeros(T, ind);
        temporal_conv(trace.spikes[l], net.delayed_eps(l), psp);

        TimeTensor u = TimeTensor::zeros(T, outd);
        TimeTensor s = TimeTensor::zeros(T, outd);
        const float* w = net.weights(l).data();
        const double theta = spec.srm.theta;

        for (int k = 0; k < T; ++k) {
            double* up = u.plane(k);
            spatial_forward(spec, w, psp.plane(k), ind, up, outd);
            const int jmax = std::min(k, K - 1);
            for (int j = 1; j <= jmax; ++j) {
                const double nv = nu[j];
                const double* sp = s.plane(k - j);
                for (std::size_t i = 0; i < plane; ++i) up[i] += nv * sp[i];
            }
            double* sp = s.plane(k);
            for (std::size_t i = 0; i < plane; ++i) {
                if (!std::isfinite(up[i])) {
                    throw std::runtime_error("forward: non-finite membrane at layer " +
                                             std::to_string(l) + ", step " +
                                             std::to_string(k));
                }
                sp[i] = relaxed ? relaxed_spike(up[i], spec.srm)
                                : static_cast<double>(up[i] >= theta);
            }
        }
        trace.psp.push_back(std::move(psp));
        trace.membrane.push_back(std::move(u));
        trace.spikes.push_back(std::move(s));
    }
    return trace;
}

std::pair<SpikeTensor, ForwardTrace> forward(const Network& net, const SpikeTensor& input) {
    ForwardTrace trace = forward_trace(net, to_time_tensor(input), false);
    return {to_spike_tensor(trace.output(), input.bin_width_us), std::move(trace)};
}

Gradients backward(const Network& net, const ForwardTrace& trace,
                   const TimeTensor& loss_grad) {
    const int L = net.layer_count();
    if (trace.net_revision != net.revision()) {
        throw std::invalid_argument("backward: trace is stale (weights changed since forward)");
    }
    if (static_cast<int>(trace.spikes.size()) != L + 1 ||
        static_cast<int>(trace.psp.size()) != L ||
        static_cast<int>(trace.membrane.size()) != L) {
        throw std::invalid_argument("backward: trace does not match network depth");
    }
    const PlaneDims out_last = net.out_dims(L - 1);
    if (loss_grad.dims != out_last || loss_grad.steps != trace.output().steps) {
        throw std::invalid_argument("backward: loss gradient dims mismatch");
    }

    const int T = loss_grad.steps;
    Gradients grads(L);
    TimeTensor g_s = loss_grad;

    for (int l = L - 1; l >= 0; --l) {
        const LayerSpec& spec = net.layer(l);
        const PlaneDims ind = net.in_dims(l);
        const PlaneDims outd = net.out_dims(l);
        const std::size_t plane = outd.size();
        const std::vector<double>& nu = net.kernels(l).nu;
        const int K = net.kernels(l).length;
        const TimeTensor& u = trace.membrane[l];

        // dL/du, including the layer's own refractory feedback from the future.
        TimeTensor du = TimeTensor::zeros(T, outd);
        for (int k = T - 1; k >= 0; --k) {
            double* dup = du.plane(k);
            std::memcpy(dup, g_s.plane(k), plane * sizeof(double));
            const int jmax = std::min(T - 1 - k, K - 1);
            for (int j = 1; j <= jmax; ++j) {
                const double nv = nu[j];
                const double* fut = du.plane(k + j);
                for (std::size_t i = 0; i < plane; ++i) dup[i] += nv * fut[i];
            }
            const double* up = u.plane(k);
            for (std::size_t i = 0; i < plane; ++i) {
                dup[i] *= surrogate_grad(up[i], spec.srm);
            }
        }

        grads[l].assign(net.weight_count(l), 0.0);
        const float* w = net.weights(l).data();
        for (int k = 0; k < T; ++k) {
            spatial_wgrad(spec, du.plane(k), outd, trace.psp[l].plane(k), ind,
                          grads[l].data());
        }

        if (l > 0) {
            TimeTensor ga = TimeTensor::zeros(T, ind);
            for (int k = 0; k < T; ++k) {
                spatial_upstream(spec, w, du.plane(k), outd, ga.plane(k), ind);
            }
            TimeTensor next = TimeTensor::zeros(T, ind);
            temporal_corr(ga, net.delayed_eps(l), next);
            g_s = std::move(next);
        }
    }
    return grads;
}

void step(Network& net, const Gradients& grads, const AdamConfig& cfg) {
    const int L = net.layer_count();
    if (static_cast<int>(grads.size()) != L) {
        throw std::invalid_argument("step: gradient layer count mismatch");
    }
    for (int l = 0; l < L; ++l) {
        if (grads[l].size() != net.weight_count(l)) {
            throw std::invalid_argument("step: gradient size mismatch at layer " +
                                        std::to_string(l));
        }
        for (double g : grads[l]) {
            if (!std::isfinite(g)) {
                throw std::runtime_error("step: non-finite gradient at layer " +
                                         std::to_string(l) + "; update aborted");
            }
        }
    }
    AdamState& st = net.optimizer_state();
    if (st.m.empty()) {
        st.m.resize(L);
        st.v.resize(L);
        for (int l = 0; l < L; ++l) {
            st.m[l].assign(net.weight_count(l), 0.0);
            st.v[l].assign(net.weight_count(l), 0.0);
        }
    }
    st.step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step_count));
    for (int l = 0; l < L; ++l) {
        std::vector<float>& w = net.weights(l);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = grads[l][i];
            double& m = st.m[l][i];
            double& v = st.v[l][i];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            const double update =
                cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.epsilon);
            w[i] = static_cast<float>(static_cast<double>(w[i]) - update);
        }
    }
    net.bump_revision();
}

namespace {

constexpr char kCkptMagic[4] = {'S', 'P', 'K', 'S'};
constexpr std::uint32_t kCkptVersion = 1;

struct Writer {
    std::string buf;
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
        }
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        le(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        le(bits);
    }
};

struct Reader {
    const unsigned char* p;
    std::size_t size;
    std::size_t pos = 0;
    std::string name;

    void need(std::size_t n, const char* what) {
        if (pos + n > size) {
            throw std::runtime_error(name + ": truncated checkpoint while reading " +
                                     what + " at offset " + std::to_string(pos));
        }
    }
    template <typename T>
    T le(const char* what) {
        need(sizeof(T), what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        }
        pos += sizeof(T);
        return static_cast<T>(v);
    }
    float f32(const char* what) {
        const std::uint32_t bits = le<std::uint32_t>(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64(const char* what) {
        const std::uint64_t bits = le<std::uint64_t>(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    Writer w;
    w.buf.append(kCkptMagic, 4);
    w.le(kCkptVersion);
    w.le<std::uint32_t>(net.layer_count());
    w.le<std::uint32_t>(net.input_height());
    w.le<std::uint32_t>(net.input_width());
    w.le<std::uint32_t>(net.train_steps());
    for (int l = 0; l < net.layer_count(); ++l) {
        const LayerSpec& s = net.layer(l);
        w.buf.push_back(static_cast<char>(static_cast<std::uint8_t>(s.kind)));
        w.le<std::uint32_t>(s.in_channels);
        w.le<std::uint32_t>(s.out_channels);
        w.le<std::uint32_t>(s.kernel);
        w.le<std::uint32_t>(s.stride);
        w.le<std::uint32_t>(s.padding);
        w.le<std::uint32_t>(s.output_padding);
        w.le<std::uint32_t>(s.delay_steps);
        w.f64(s.srm.tau_s_ms);
        w.f64(s.srm.tau_r_ms);
        w.f64(s.srm.theta);
        w.f64(s.srm.surrogate_alpha);
        w.f64(s.srm.surrogate_beta);
        w.f64(s.srm.sim_step_ms);
    }
    const AdamState& st = net.optimizer_state();
    w.le<std::uint64_t>(st.step_count);
    const bool has_moments = !st.m.empty();
    w.buf.push_back(has_moments ? 1 : 0);
    for (int l = 0; l < net.layer_count(); ++l) {
        const std::vector<float>& weights = net.weights(l);
        w.le<std::uint64_t>(weights.size());
        for (float v : weights) w.f32(v);
        if (has_moments) {
            for (double v : st.m[l]) w.f64(v);
            for (double v : st.v[l]) w.f64(v);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r{reinterpret_cast<const unsigned char*>(raw.data()), raw.size(), 0,
             path.string()};

    r.need(4, "magic");
    if (std::memcmp(raw.data(), kCkptMagic, 4) != 0) {
        throw std::runtime_error(path.string() + ": not a checkpoint (bad magic)");
    }
    r.pos = 4;
    const auto version = r.le<std::uint32_t>("version");
    if (version != kCkptVersion) {
        throw std::runtime_error(path.string() + ": unsupported checkpoint version " +
                                 std::to_string(version));
    }
    const auto layer_count = r.le<std::uint32_t>("layer count");
    const auto in_h = r.le<std::uint32_t>("input height");
    const auto in_w = r.le<std::uint32_t>("input width");
    const auto steps = r.le<std::uint32_t>("train steps");
    if (layer_count == 0 || layer_count > 64) {
        throw std::runtime_error(path.string() + ": implausible layer count");
    }
    std::vector<LayerSpec> layers(layer_count);
    for (auto& s : layers) {
        const auto kind = r.le<std::uint8_t>("layer kind");
        if (kind > 1) throw std::runtime_error(path.string() + ": invalid layer kind");
        s.kind = static_cast<LayerKind>(kind);
        s.in_channels = static_cast<int>(r.le<std::uint32_t>("in channels"));
        s.out_channels = static_cast<int>(r.le<std::uint32_t>("out channels"));
        s.kernel = static_cast<int>(r.le<std::uint32_t>("kernel"));
        s.stride = static_cast<int>(r.le<std::uint32_t>("stride"));
        s.padding = static_cast<int>(r.le<std::uint32_t>("padding"));
        s.output_padding = static_cast<int>(r.le<std::uint32_t>("output padding"));
        s.delay_steps = static_cast<int>(r.le<std::uint32_t>("delay steps"));
        s.srm.tau_s_ms = r.f64("tau_s");
        s.srm.tau_r_ms = r.f64("tau_r");
        s.srm.theta = r.f64("theta");
        s.srm.surrogate_alpha = r.f64("surrogate alpha");
        s.srm.surrogate_beta = r.f64("surrogate beta");
        s.srm.sim_step_ms = r.f64("sim step");
    }
    Network net(std::move(layers), static_cast<int>(in_h), static_cast<int>(in_w),
                static_cast<int>(steps));
    AdamState st;
    st.step_count = r.le<std::uint64_t>("optimizer step count");
    const auto has_moments = r.le<std::uint8_t>("optimizer moment flag");
    if (has_moments) {
        st.m.resize(layer_count);
        st.v.resize(layer_count);
    }
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        const auto n = r.le<std::uint64_t>("weight count");
        if (n != net.weight_count(static_cast<int>(l))) {
            throw std::runtime_error(path.string() + ": weight count mismatch at layer " +
                                     std::to_string(l));
        }
        std::vector<float>& w = net.weights(static_cast<int>(l));
        for (std::uint64_t i = 0; i < n; ++i) w[i] = r.f32("weights");
        if (has_moments) {
            st.m[l].resize(n);
            st.v[l].resize(n);
            for (std::uint64_t i = 0; i < n; ++i) st.m[l][i] = r.f64("first moment");
            for (std::uint64_t i = 0; i < n; ++i) st.v[l][i] = r.f64("second moment");
        }
    }
    if (r.pos != r.size) {
        throw std::runtime_error(path.string() + ": trailing bytes after checkpoint body");
    }
    net.optimizer_state() = std::move(st);
    return net;
}

}  // namespace spikeseg
