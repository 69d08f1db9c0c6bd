#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmsense/ops.hpp"
#include "mmsense/rng.hpp"

namespace mmsense {

inline constexpr int kModelFormatVersion = 1;
inline constexpr char kModelMagic[9] = "MMSENSE1";

struct ModelConfig {
    int in_channels = 36;      // 36 for beam SNR, 256 for CSI amplitude
    int n_classes = 10;
    int input_length = 128;
    std::uint64_t seed = 1;

    void validate() const {
        if (in_channels < 1 || n_classes < 1) {
            throw ConfigError("model config: channels and classes must be positive");
        }
        if (input_length < 2) {
            throw ConfigError("model config: input_length too short for the stride chain");
        }
    }

    bool operator==(const ModelConfig&) const = default;
};

/// Branch widths of an inception block: 1-wide conv, bottleneck + 3-wide,
/// bottleneck + 5-wide, max-pool + 1-wide projection.
struct InceptionWidths {
    int b1;
    int b2_reduce;
    int b2;
    int b3_reduce;
    int b3;
    int pool_proj;

    int out_channels() const { return b1 + b2 + b3 + pool_proj; }
};

// Same widths as the original GoogLeNet table, translated to 1-D kernels.
inline constexpr InceptionWidths kInception3a{64, 96, 128, 16, 32, 32};
inline constexpr InceptionWidths kInception3b{128, 128, 192, 32, 96, 64};

template <typename S>
struct ConvLayer {
    TensorT<S> weight;  // out x in x kernel
    TensorT<S> bias;    // out
    ConvSpec spec;
};

template <typename S>
struct InceptionBlock {
    ConvLayer<S> b1;
    ConvLayer<S> b2_reduce;
    ConvLayer<S> b2;
    ConvLayer<S> b3_reduce;
    ConvLayer<S> b3;
    ConvLayer<S> pool_proj;
    InceptionWidths widths;
};

template <typename S>
struct NamedParam {
    std::string name;
    TensorT<S>* tensor;
};

namespace detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Intermediate activations of one forward pass, kept for the backward walk.
template <typename S>
struct InceptionTrace {
    TensorT<S> input;
    TensorT<S> b1_pre;
    TensorT<S> b2r_pre;
    TensorT<S> b2r_act;
    TensorT<S> b2_pre;
    TensorT<S> b3r_pre;
    TensorT<S> b3r_act;
    TensorT<S> b3_pre;
    MaxPoolResult<S> pool;
    TensorT<S> proj_pre;
};

template <typename S>
struct ForwardTrace {
    TensorT<S> input;
    TensorT<S> conv1_pre;
    TensorT<S> conv1_act;
    MaxPoolResult<S> pool1;
    InceptionTrace<S> inc3a;
    InceptionTrace<S> inc3b;
    TensorT<S> inc3b_out;
    TensorT<S> avg_out;
    TensorT<S> reduce_pre;
    TensorT<S> reduce_act;
    TensorT<S> gap;
    TensorT<S> logits;
};

/// Kaiming-style fan-in scaled uniform init from a named counter-based
/// stream, so each parameter's draw depends only on (seed, name).
template <typename S>
TensorT<S> init_uniform_tensor(std::vector<std::size_t> shape, std::size_t fan_in,
                               std::uint64_t seed, const std::string& name) {
    TensorT<S> t(std::move(shape));
    Rng rng(seed, name);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.values) v = static_cast<S>(rng.uniform(-bound, bound));
    return t;
}

template <typename S>
ConvLayer<S> make_conv_layer(int in_ch, int out_ch, int kernel, int stride, int padding,
                             std::uint64_t seed, const std::string& name) {
    ConvLayer<S> layer;
    layer.spec = ConvSpec{in_ch, out_ch, kernel, stride, padding};
    layer.weight = init_uniform_tensor<S>(
        {static_cast<std::size_t>(out_ch), static_cast<std::size_t>(in_ch),
         static_cast<std::size_t>(kernel)},
        static_cast<std::size_t>(in_ch) * static_cast<std::size_t>(kernel), seed,
        name + ".weight");
    layer.bias = TensorT<S>::zeros({static_cast<std::size_t>(out_ch)});
    return layer;
}

template <typename S>
InceptionBlock<S> make_inception_block(int in_ch, const InceptionWidths& w, std::uint64_t seed,
                                       const std::string& name) {
    InceptionBlock<S> b;
    b.widths = w;
    b.b1 = make_conv_layer<S>(in_ch, w.b1, 1, 1, 0, seed, name + ".b1");
    b.b2_reduce = make_conv_layer<S>(in_ch, w.b2_reduce, 1, 1, 0, seed, name + ".b2reduce");
    b.b2 = make_conv_layer<S>(w.b2_reduce, w.b2, 3, 1, 1, seed, name + ".b2");
    b.b3_reduce = make_conv_layer<S>(in_ch, w.b3_reduce, 1, 1, 0, seed, name + ".b3reduce");
    b.b3 = make_conv_layer<S>(w.b3_reduce, w.b3, 5, 1, 2, seed, name + ".b3");
    b.pool_proj = make_conv_layer<S>(in_ch, w.pool_proj, 1, 1, 0, seed, name + ".pool_proj");
    return b;
}

/// Four parallel branches, each conv followed by ReLU, concatenated across
/// channels. Temporal length is preserved.
template <typename S>
TensorT<S> inception_forward(const InceptionBlock<S>& block, const TensorT<S>& x,
                             InceptionTrace<S>& tr) {
    if (x.dim(0) != static_cast<std::size_t>(block.b1.spec.in_channels)) {
        throw ShapeError("inception: input has " + std::to_string(x.dim(0)) +
                         " channels, block expects " +
                         std::to_string(block.b1.spec.in_channels));
    }
    tr.input = x;
    tr.b1_pre = conv1d_forward(x, block.b1.weight, block.b1.bias, block.b1.spec);
    tr.b2r_pre = conv1d_forward(x, block.b2_reduce.weight, block.b2_reduce.bias,
                                block.b2_reduce.spec);
    tr.b2r_act = relu(tr.b2r_pre);
    tr.b2_pre = conv1d_forward(tr.b2r_act, block.b2.weight, block.b2.bias, block.b2.spec);
    tr.b3r_pre = conv1d_forward(x, block.b3_reduce.weight, block.b3_reduce.bias,
                                block.b3_reduce.spec);
    tr.b3r_act = relu(tr.b3r_pre);
    tr.b3_pre = conv1d_forward(tr.b3r_act, block.b3.weight, block.b3.bias, block.b3.spec);
    tr.pool = maxpool1d(x, 3, 1, 1);
    tr.proj_pre = conv1d_forward(tr.pool.output, block.pool_proj.weight, block.pool_proj.bias,
                                 block.pool_proj.spec);

    const TensorT<S> b1 = relu(tr.b1_pre);
    const TensorT<S> b2 = relu(tr.b2_pre);
    const TensorT<S> b3 = relu(tr.b3_pre);
    const TensorT<S> b4 = relu(tr.proj_pre);
    return concat_channels(std::vector<const TensorT<S>*>{&b1, &b2, &b3, &b4});
}

template <typename S>
TensorT<S> inception_forward(const InceptionBlock<S>& block, const TensorT<S>& x) {
    InceptionTrace<S> tr;
    return inception_forward(block, x, tr);
}

/// Returns the gradient w.r.t. the block input; the six conv layers' grads
/// land at grads[grad_base..grad_base+11] in parameter order.
template <typename S>
TensorT<S> inception_backward(const InceptionBlock<S>& block, const InceptionTrace<S>& tr,
                              const TensorT<S>& upstream, std::vector<TensorT<S>>& grads,
                              std::size_t grad_base) {
    const auto parts = concat_channels_backward(
        upstream,
        {static_cast<std::size_t>(block.widths.b1), static_cast<std::size_t>(block.widths.b2),
         static_cast<std::size_t>(block.widths.b3),
         static_cast<std::size_t>(block.widths.pool_proj)});

    TensorT<S> g_input = TensorT<S>::zeros(tr.input.shape);
    auto add_into = [](TensorT<S>& acc, const TensorT<S>& inc) {
        for (std::size_t i = 0; i < acc.numel(); ++i) acc.at(i) += inc.at(i);
    };

    // Branch 1: 1-wide conv.
    {
        const TensorT<S> g_pre = relu_backward(tr.b1_pre, parts[0]);
        const auto g = conv1d_backward(tr.input, block.b1.weight, block.b1.spec, g_pre);
        grads[grad_base + 0] = g.weights;
        grads[grad_base + 1] = g.bias;
        add_into(g_input, g.input);
    }
    // Branch 2: bottleneck then 3-wide conv.
    {
        const TensorT<S> g_pre = relu_backward(tr.b2_pre, parts[1]);
        const auto g = conv1d_backward(tr.b2r_act, block.b2.weight, block.b2.spec, g_pre);
        grads[grad_base + 4] = g.weights;
        grads[grad_base + 5] = g.bias;
        const TensorT<S> g_red_pre = relu_backward(tr.b2r_pre, g.input);
        const auto gr = conv1d_backward(tr.input, block.b2_reduce.weight, block.b2_reduce.spec,
                                        g_red_pre);
        grads[grad_base + 2] = gr.weights;
        grads[grad_base + 3] = gr.bias;
        add_into(g_input, gr.input);
    }
    // Branch 3: bottleneck then 5-wide conv.
    {
        const TensorT<S> g_pre = relu_backward(tr.b3_pre, parts[2]);
        const auto g = conv1d_backward(tr.b3r_act, block.b3.weight, block.b3.spec, g_pre);
        grads[grad_base + 8] = g.weights;
        grads[grad_base + 9] = g.bias;
        const TensorT<S> g_red_pre = relu_backward(tr.b3r_pre, g.input);
        const auto gr = conv1d_backward(tr.input, block.b3_reduce.weight, block.b3_reduce.spec,
                                        g_red_pre);
        grads[grad_base + 6] = gr.weights;
        grads[grad_base + 7] = gr.bias;
        add_into(g_input, gr.input);
    }
    // Branch 4: 3-wide max-pool then projection.
    {
        const TensorT<S> g_pre = relu_backward(tr.proj_pre, parts[3]);
        const auto g = conv1d_backward(tr.pool.output, block.pool_proj.weight,
                                       block.pool_proj.spec, g_pre);
        grads[grad_base + 10] = g.weights;
        grads[grad_base + 11] = g.bias;
        add_into(g_input, maxpool1d_backward(tr.pool.argmax, tr.input.shape, g.input));
    }
    return g_input;
}

/// The depth-7 1-D GoogLeNet variant:
///   Conv1D(7, s2, p3, 64) + ReLU -> MaxPool(3, s2, p1) -> Inception3a ->
///   Inception3b -> AvgPool(3, s2, p1) -> Conv1D(1, 64) + ReLU ->
///   global average pool -> Linear(64 -> n_classes).
template <typename S>
class ModelT {
public:
    static ModelT build(const ModelConfig& config) {
        config.validate();
        ModelT m;
        m.config_ = config;
        m.conv1_ = make_conv_layer<S>(config.in_channels, 64, 7, 2, 3, config.seed, "conv1");
        m.inc3a_ = make_inception_block<S>(64, kInception3a, config.seed, "inception3a");
        m.inc3b_ = make_inception_block<S>(kInception3a.out_channels(), kInception3b, config.seed,
                                           "inception3b");
        m.reduce_ = make_conv_layer<S>(kInception3b.out_channels(), 64, 1, 1, 0, config.seed,
                                       "reduce");
        m.fc_w_ = init_uniform_tensor<S>({static_cast<std::size_t>(config.n_classes), 64}, 64,
                                         config.seed, "fc.weight");
        m.fc_b_ = TensorT<S>::zeros({static_cast<std::size_t>(config.n_classes)});

        // Reject configurations the stride chain cannot carry.
        try {
            m.stage_lengths();
        } catch (const ShapeError&) {
            throw ConfigError("model config: input_length too short for the stride chain");
        }
        return m;
    }

    const ModelConfig& config() const { return config_; }

    /// Temporal length after each stage: input, conv1, maxpool, 3a, 3b,
    /// avgpool, reduce conv, global pool.
    std::vector<std::size_t> stage_lengths() const {
        std::vector<std::size_t> lens;
        std::size_t t = static_cast<std::size_t>(config_.input_length);
        lens.push_back(t);
        t = conv_out_len(t, 7, 2, 3);
        lens.push_back(t);
        t = conv_out_len(t, 3, 2, 1);
        lens.push_back(t);
        lens.push_back(t);  // inception 3a preserves length
        lens.push_back(t);  // inception 3b
        t = conv_out_len(t, 3, 2, 1);
        lens.push_back(t);
        lens.push_back(t);  // 1-wide reduce conv
        lens.push_back(1);  // global average pool
        return lens;
    }

    std::vector<NamedParam<S>> parameters() {
        std::vector<NamedParam<S>> ps;
        auto add_conv = [&](const std::string& prefix, ConvLayer<S>& c) {
            ps.push_back({prefix + ".weight", &c.weight});
            ps.push_back({prefix + ".bias", &c.bias});
        };
        auto add_block = [&](const std::string& prefix, InceptionBlock<S>& b) {
            add_conv(prefix + ".b1", b.b1);
            add_conv(prefix + ".b2reduce", b.b2_reduce);
            add_conv(prefix + ".b2", b.b2);
            add_conv(prefix + ".b3reduce", b.b3_reduce);
            add_conv(prefix + ".b3", b.b3);
            add_conv(prefix + ".pool_proj", b.pool_proj);
        };
        add_conv("conv1", conv1_);
        add_block("inception3a", inc3a_);
        add_block("inception3b", inc3b_);
        add_conv("reduce", reduce_);
        ps.push_back({"fc.weight", &fc_w_});
        ps.push_back({"fc.bias", &fc_b_});
        return ps;
    }

    std::vector<NamedParam<S>> parameters() const {
        return const_cast<ModelT*>(this)->parameters();
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : parameters()) n += p.tensor->numel();
        return n;
    }

    /// One sample (channels x time) to a logit vector.
    TensorT<S> forward(const TensorT<S>& x) const {
        ForwardTrace<S> trace;
        return forward_traced(x, trace);
    }

    /// Batch (batch x channels x time) to logits (batch x n_classes).
    /// Samples are independent, so rows only depend on their own input.
    TensorT<S> forward_batch(const TensorT<S>& batch) const {
        if (batch.rank() != 3) throw ShapeError("forward_batch: expects batch x channels x time");
        const std::size_t b_n = batch.dim(0);
        const std::size_t c_n = batch.dim(1);
        const std::size_t t_n = batch.dim(2);
        TensorT<S> logits({b_n, static_cast<std::size_t>(config_.n_classes)});
        TensorT<S> sample({c_n, t_n});
        for (std::size_t b = 0; b < b_n; ++b) {
            std::copy(batch.data() + b * c_n * t_n, batch.data() + (b + 1) * c_n * t_n,
                      sample.data());
            const TensorT<S> row = forward(sample);
            std::copy(row.values.begin(), row.values.end(),
                      logits.data() + b * static_cast<std::size_t>(config_.n_classes));
        }
        return logits;
    }

    TensorT<S> forward_traced(const TensorT<S>& x, ForwardTrace<S>& trace) const {
        if (x.rank() != 2) throw ShapeError("forward: expects channels x time");
        if (x.dim(1) != static_cast<std::size_t>(config_.input_length)) {
            throw ShapeError("forward: input length " + std::to_string(x.dim(1)) +
                             " does not match configured " +
                             std::to_string(config_.input_length));
        }
        trace.input = x;
        trace.conv1_pre = conv1d_forward(x, conv1_.weight, conv1_.bias, conv1_.spec);
        trace.conv1_act = relu(trace.conv1_pre);
        trace.pool1 = maxpool1d(trace.conv1_act, 3, 2, 1);
        const TensorT<S> a_out = inception_forward(inc3a_, trace.pool1.output, trace.inc3a);
        trace.inc3b_out = inception_forward(inc3b_, a_out, trace.inc3b);
        trace.avg_out = avgpool1d(trace.inc3b_out, 3, 2, 1);
        trace.reduce_pre = conv1d_forward(trace.avg_out, reduce_.weight, reduce_.bias,
                                          reduce_.spec);
        trace.reduce_act = relu(trace.reduce_pre);
        trace.gap = global_avg(trace.reduce_act);
        trace.logits = linear(trace.gap, fc_w_, fc_b_);
        return trace.logits;
    }

    /// Gradients of a scalar loss with upstream d(loss)/d(logits), in the
    /// same order as parameters(). Pure: results go to `grads`, not into
    /// the shared parameter tensors.
    void backward(const ForwardTrace<S>& trace, const TensorT<S>& grad_logits,
                  std::vector<TensorT<S>>& grads) const {
        grads.clear();
        grads.resize(30);

        const auto fc = linear_backward(trace.gap, fc_w_, grad_logits);
        grads[28] = fc.weights;
        grads[29] = fc.bias;

        // Global average pool backward: spread evenly across time.
        const std::size_t t_red = trace.reduce_act.dim(1);
        TensorT<S> g_red_act(trace.reduce_act.shape);
        for (std::size_t c = 0; c < trace.reduce_act.dim(0); ++c) {
            const S share = fc.input.at(c) / static_cast<S>(t_red);
            for (std::size_t t = 0; t < t_red; ++t) g_red_act.at(c, t) = share;
        }

        const TensorT<S> g_red_pre = relu_backward(trace.reduce_pre, g_red_act);
        const auto red = conv1d_backward(trace.avg_out, reduce_.weight, reduce_.spec, g_red_pre);
        grads[26] = red.weights;
        grads[27] = red.bias;

        const TensorT<S> g_3b_out =
            avgpool1d_backward(trace.inc3b_out.shape, 3, 2, 1, red.input);
        const TensorT<S> g_3a_out =
            inception_backward(inc3b_, trace.inc3b, g_3b_out, grads, 14);
        const TensorT<S> g_pool1 = inception_backward(inc3a_, trace.inc3a, g_3a_out, grads, 2);

        const TensorT<S> g_conv1_act =
            maxpool1d_backward(trace.pool1.argmax, trace.conv1_act.shape, g_pool1);
        const TensorT<S> g_conv1_pre = relu_backward(trace.conv1_pre, g_conv1_act);
        const auto c1 = conv1d_backward(trace.input, conv1_.weight, conv1_.spec, g_conv1_pre);
        grads[0] = c1.weights;
        grads[1] = c1.bias;
    }

    void save(const std::filesystem::path& path) const {
        std::string blob;
        for (const auto& p : parameters()) {
            for (const S v : p.tensor->values) {
                detail::put_u32_le(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            }
        }
        const std::uint32_t checksum =
            detail::crc32(reinterpret_cast<const unsigned char*>(blob.data()), blob.size());

        nlohmann::json header;
        header["format_version"] = kModelFormatVersion;
        header["checksum"] = checksum;
        header["config"] = {{"in_channels", config_.in_channels},
                            {"n_classes", config_.n_classes},
                            {"input_length", config_.input_length},
                            {"seed", config_.seed}};
        auto& params = header["params"] = nlohmann::json::array();
        for (const auto& p : parameters()) {
            params.push_back({{"name", p.name}, {"shape", p.tensor->shape}});
        }
        const std::string header_text = header.dump();

        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open model file for writing: " + path.string());
        out.write(kModelMagic, 8);
        std::string len;
        detail::put_u32_le(len, static_cast<std::uint32_t>(header_text.size()));
        out.write(len.data(), 4);
        out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw IoError("short write while saving model: " + path.string());
    }

    static ModelT load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open model file: " + path.string());

        char magic[8];
        if (!in.read(magic, 8)) throw ModelTruncatedError("model file shorter than its magic");
        if (std::memcmp(magic, kModelMagic, 8) != 0) {
            throw ModelFormatError("not a model file (bad magic)");
        }
        unsigned char len_bytes[4];
        if (!in.read(reinterpret_cast<char*>(len_bytes), 4)) {
            throw ModelTruncatedError("model file truncated in header length");
        }
        const std::uint32_t header_len = detail::get_u32_le(len_bytes);
        if (header_len > (1u << 24)) throw ModelFormatError("unreasonable header length");
        std::string header_text(header_len, '\0');
        if (!in.read(header_text.data(), header_len)) {
            throw ModelTruncatedError("model file truncated in header");
        }

        nlohmann::json header;
        try {
            header = nlohmann::json::parse(header_text);
        } catch (const nlohmann::json::exception& e) {
            throw ModelFormatError(std::string("model header is not valid JSON: ") + e.what());
        }
        const int version = header.value("format_version", -1);
        if (version != kModelFormatVersion) {
            throw ModelVersionError("unsupported model format version " +
                                    std::to_string(version));
        }

        ModelConfig config;
        try {
            const auto& c = header.at("config");
            config.in_channels = c.at("in_channels").get<int>();
            config.n_classes = c.at("n_classes").get<int>();
            config.input_length = c.at("input_length").get<int>();
            config.seed = c.at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ModelFormatError(std::string("model header config malformed: ") + e.what());
        }

        ModelT m = build(config);
        auto params = m.parameters();
        const auto& manifest = header.at("params");
        if (!manifest.is_array() || manifest.size() != params.size()) {
            throw ModelFormatError("model parameter manifest does not match architecture");
        }
        std::size_t total = 0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& entry = manifest[i];
            if (entry.at("name").get<std::string>() != params[i].name ||
                entry.at("shape").get<std::vector<std::size_t>>() != params[i].tensor->shape) {
                throw ModelFormatError("model parameter manifest does not match architecture");
            }
            total += params[i].tensor->numel();
        }

        std::string blob(total * 4, '\0');
        if (!in.read(blob.data(), static_cast<std::streamsize>(blob.size()))) {
            throw ModelTruncatedError("model file truncated in parameter blob");
        }
        const std::uint32_t checksum =
            detail::crc32(reinterpret_cast<const unsigned char*>(blob.data()), blob.size());
        if (checksum != header.at("checksum").get<std::uint32_t>()) {
            throw ModelChecksumError("model parameter blob failed its checksum");
        }

        const unsigned char* p = reinterpret_cast<const unsigned char*>(blob.data());
        for (auto& param : params) {
            for (auto& v : param.tensor->values) {
                v = static_cast<S>(std::bit_cast<float>(detail::get_u32_le(p)));
                p += 4;
            }
        }
        return m;
    }

    template <typename U>
    ModelT<U> cast() const {
        ModelT<U> out = ModelT<U>::build(config_);
        auto src = parameters();
        auto dst = out.parameters();
        for (std::size_t i = 0; i < src.size(); ++i) {
            for (std::size_t j = 0; j < src[i].tensor->numel(); ++j) {
                dst[i].tensor->at(j) = static_cast<U>(src[i].tensor->at(j));
            }
        }
        return out;
    }

private:
    static TensorT<S> global_avg(const TensorT<S>& x) {
        TensorT<S> out({x.dim(0)});
        const std::size_t len = x.dim(1);
        for (std::size_t c = 0; c < x.dim(0); ++c) {
            S acc = S(0);
            const S* row = x.data() + c * len;
            for (std::size_t t = 0; t < len; ++t) acc += row[t];
            out.at(c) = acc / static_cast<S>(len);
        }
        return out;
    }

    ModelConfig config_;
    ConvLayer<S> conv1_;
    InceptionBlock<S> inc3a_;
    InceptionBlock<S> inc3b_;
    ConvLayer<S> reduce_;
    TensorT<S> fc_w_;
    TensorT<S> fc_b_;

    template <typename U>
    friend class ModelT;
};

using Model = ModelT<float>;

inline Model build_model(const ModelConfig& config) { return Model::build(config); }

inline void save_model(const Model& model, const std::filesystem::path& path) {
    model.save(path);
}

inline Model load_model(const std::filesystem::path& path) { return Model::load(path); }

}  // namespace mmsense
