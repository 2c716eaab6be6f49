#include "nlpvq/codec.hpp"

#include <bit>
#include <cmath>
#include <variant>

#include "nlpvq/error.hpp"
#include "nlpvq/rng.hpp"

namespace nlpvq {

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::scalar_adpcm: return "scalar-adpcm";
        case Scheme::vpred_scalar: return "vpred-scalar";
        case Scheme::nlpvq: return "nlpvq";
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view name) {
    if (name == "scalar-adpcm") return Scheme::scalar_adpcm;
    if (name == "vpred-scalar") return Scheme::vpred_scalar;
    if (name == "nlpvq") return Scheme::nlpvq;
    throw Error(Errc::invalid_argument, "unknown scheme '" + std::string(name) + "'");
}

double nq_equivalent(std::size_t codebook_size, std::size_t vector_dim) {
    if (codebook_size == 0 || vector_dim == 0) throw Error(Errc::invalid_argument, "nq_equivalent needs M, N >= 1");
    return std::log2(static_cast<double>(codebook_size)) / static_cast<double>(vector_dim);
}

TrainingConfig codec_training_defaults() {
    TrainingConfig t;
    t.max_lm_iterations = kCodecLmIterations;
    return t;
}

int CodecConfig::scalar_bits() const {
    const double rounded = std::round(nq_bits_per_sample);
    if (rounded != nq_bits_per_sample || rounded < kMinQuantizerBits || rounded > kMaxQuantizerBits) {
        throw Error(Errc::invalid_argument, "scalar quantizer schemes need an integer Nq in [2, 5]");
    }
    return static_cast<int>(rounded);
}

JayantState CodecConfig::jayant_state() const {
    JayantState s = JayantState::make(scalar_bits(), initial_step, multipliers);
    s.step_min = step_min;
    s.step_max = step_max;
    s.validate();
    return s;
}

std::size_t CodecConfig::alphabet_size(const Codebook* codebook) const {
    if (scheme == Scheme::nlpvq) {
        if (codebook == nullptr) throw Error(Errc::invalid_argument, "nlpvq requires a codebook");
        return codebook->size();
    }
    return std::size_t{1} << scalar_bits();
}

void CodecConfig::validate(const Codebook* codebook) const {
    const std::size_t unit = unit_dim();
    if (predictor_order == 0 || predictor_order > 255) throw Error(Errc::invalid_argument, "predictor order must be in [1, 255]");
    if (vector_dim == 0 || vector_dim > 255) throw Error(Errc::invalid_argument, "vector dimension must be in [1, 255]");
    if (frame_len == 0 || frame_len > 65535) throw Error(Errc::invalid_argument, "frame_len must be in [1, 65535]");
    FramePlan{frame_len}.validate(unit);
    if (predictor_order + unit > frame_len) throw Error(Errc::invalid_argument, "predictor_order + N must not exceed frame_len");
    if (scheme == Scheme::scalar_adpcm && frame_len < 2 * predictor_order) {
        throw Error(Errc::invalid_argument, "frame_len must hold 2*order samples for LPC fitting");
    }
    if (scheme != Scheme::scalar_adpcm) training.validate();

    if (scheme == Scheme::nlpvq) {
        if (codebook == nullptr) throw Error(Errc::invalid_argument, "nlpvq requires a codebook");
        codebook->validate();
        if (codebook->dim != vector_dim) {
            throw Error(Errc::dimension_mismatch, "codebook dimension " + std::to_string(codebook->dim) +
                                                      " != vector dimension " + std::to_string(vector_dim));
        }
        if (codebook->size() > 65535) throw Error(Errc::invalid_argument, "codebook too large for the bitstream");
        if (std::abs(nq_equivalent(codebook->size(), vector_dim) - nq_bits_per_sample) > 1e-9) {
            throw Error(Errc::invalid_argument, "codebook size does not match nq_bits_per_sample");
        }
        if (codebook_ref && *codebook_ref != codebook_sha256(*codebook)) {
            throw Error(Errc::hash_mismatch, "codebook does not match the configured codebook hash");
        }
    } else {
        if (codebook != nullptr) throw Error(Errc::invalid_argument, "scalar-quantizer schemes take no codebook");
        jayant_state();
    }
}

namespace {

// Shared encoder/decoder state machine. Both sides drive the same
// predictor retraining and reconstruction code; only the quantizer call
// differs, so the reconstructions agree bit for bit.
class CodecEngine {
public:
    CodecEngine(const CodecConfig& cfg, const Codebook* codebook, std::size_t total_samples)
        : cfg_(cfg), codebook_(codebook), unit_(cfg.unit_dim()) {
        const std::size_t units = (total_samples + unit_ - 1) / unit_;
        padded_ = units * unit_;
        history_.assign(cfg.predictor_order, 0.0);
        history_.reserve(cfg.predictor_order + padded_);
        if (cfg.scheme != Scheme::nlpvq) jayant_ = cfg.jayant_state();
        prediction_.assign(unit_, 0.0);
    }

    std::size_t padded_length() const noexcept { return padded_; }
    std::size_t unit() const noexcept { return unit_; }
    JayantState& jayant() noexcept { return jayant_; }

    // Called before the first unit of every frame.
    void begin_frame(std::size_t frame) {
        if (frame == 0) return;
        const std::size_t start = (frame - 1) * cfg_.frame_len;
        const auto recon = reconstructed();
        if (cfg_.scheme == Scheme::scalar_adpcm) {
            predictor_ = fit_linear_predictor(recon.subspan(start, cfg_.frame_len), cfg_.predictor_order);
            return;
        }
        PredictorDataset data;
        data.input_dim = cfg_.predictor_order;
        data.output_dim = unit_;
        for (std::size_t pos = start; pos + unit_ <= start + cfg_.frame_len; pos += unit_) {
            data.add(context(pos), recon.subspan(pos, unit_));
        }
        TrainingConfig tc = cfg_.training;
        tc.rng_seed = mix_seed(cfg_.seed, frame);
        const Committee* warm = nullptr;
        if (cfg_.warm_start) {
            if (const auto* prev = std::get_if<Committee>(&predictor_)) warm = prev;
        }
        predictor_ = multi_start_train(data, tc, warm);
    }

    // Prediction for the unit starting at absolute sample position pos.
    std::span<const double> predict(std::size_t pos) {
        if (const auto* lp = std::get_if<LinearPredictor>(&predictor_)) {
            prediction_[0] = predict_linear(*lp, context(pos));
        } else if (const auto* committee = std::get_if<Committee>(&predictor_)) {
            prediction_ = committee_forward(*committee, context(pos));
        } else {
            std::fill(prediction_.begin(), prediction_.end(), 0.0);
        }
        return prediction_;
    }

    void commit(std::span<const double> dequantized) {
        for (std::size_t k = 0; k < unit_; ++k) history_.push_back(prediction_[k] + dequantized[k]);
    }

    std::span<const double> reconstructed() const {
        return std::span<const double>(history_).subspan(cfg_.predictor_order);
    }

private:
    // Most recent sample first.
    std::span<const double> context(std::size_t pos) {
        context_.resize(cfg_.predictor_order);
        const std::size_t end = cfg_.predictor_order + pos;  // index into history_
        for (std::size_t k = 0; k < cfg_.predictor_order; ++k) context_[k] = history_[end - 1 - k];
        return context_;
    }

    const CodecConfig& cfg_;
    const Codebook* codebook_;
    std::size_t unit_;
    std::size_t padded_ = 0;
    std::vector<double> history_;
    std::vector<double> context_;
    std::vector<double> prediction_;
    JayantState jayant_{};
    std::variant<std::monostate, LinearPredictor, Committee> predictor_;
};

StreamHeader make_header(const CodecConfig& cfg, const Codebook* codebook, const SignalBuffer& signal) {
    StreamHeader h;
    h.scheme = cfg.scheme;
    h.sample_rate = static_cast<std::uint32_t>(signal.sample_rate_hz);
    h.frame_len = static_cast<std::uint16_t>(cfg.frame_len);
    h.vector_dim = static_cast<std::uint8_t>(cfg.unit_dim());
    h.order = static_cast<std::uint8_t>(cfg.predictor_order);
    h.alphabet_size = static_cast<std::uint16_t>(cfg.alphabet_size(codebook));
    h.initial_step = cfg.scheme == Scheme::nlpvq ? 0.0 : cfg.initial_step;
    if (codebook != nullptr) h.codebook_hash = codebook_sha256(*codebook);
    h.total_samples = signal.size();
    return h;
}

}  // namespace

EncodeResult encode(const SignalBuffer& signal, const CodecConfig& cfg, const Codebook* codebook) {
    cfg.validate(codebook);
    signal.validate();
    if (signal.size() < cfg.frame_len) throw Error(Errc::invalid_argument, "signal is shorter than one frame");

    EncodeResult result;
    result.stream.header = make_header(cfg, codebook, signal);
    result.stream.codes.alphabet_size = result.stream.header.alphabet_size;

    CodecEngine engine(cfg, codebook, signal.size());
    const std::size_t unit = engine.unit();
    std::vector<double> input(signal.samples);
    input.resize(engine.padded_length(), 0.0);

    result.residuals.dim = unit;
    result.residuals.vectors.reserve(engine.padded_length());
    auto& codes = result.stream.codes.indices;
    std::vector<double> residual(unit);
    std::vector<double> dequantized(unit);

    for (std::size_t pos = 0; pos < engine.padded_length(); pos += unit) {
        if (pos % cfg.frame_len == 0) engine.begin_frame(pos / cfg.frame_len);
        const auto pred = engine.predict(pos);
        for (std::size_t k = 0; k < unit; ++k) residual[k] = input[pos + k] - pred[k];
        result.residuals.add(residual);

        if (cfg.scheme == Scheme::nlpvq) {
            const auto match = vq_encode(*codebook, residual);
            codes.push_back(static_cast<std::uint32_t>(match.index));
            std::copy(match.codeword.begin(), match.codeword.end(), dequantized.begin());
        } else {
            const auto q = sq_quantize_vector(engine.jayant(), residual);
            for (int c : q.codes) codes.push_back(static_cast<std::uint32_t>(c));
            dequantized = q.values;
            engine.jayant() = q.next;
        }
        engine.commit(dequantized);
    }

    const auto recon = engine.reconstructed();
    result.reconstruction.sample_rate_hz = signal.sample_rate_hz;
    result.reconstruction.samples.assign(recon.begin(), recon.begin() + static_cast<std::ptrdiff_t>(signal.size()));
    return result;
}

SignalBuffer decode(const EncodedStream& stream, const CodecConfig& profile, const Codebook* codebook) {
    const StreamHeader& h = stream.header;
    CodecConfig cfg = profile;
    cfg.scheme = h.scheme;
    cfg.frame_len = h.frame_len;
    cfg.predictor_order = h.order;
    if (h.scheme != Scheme::scalar_adpcm) cfg.vector_dim = h.vector_dim;
    cfg.initial_step = h.scheme == Scheme::nlpvq ? profile.initial_step : h.initial_step;
    if (h.scheme == Scheme::nlpvq) {
        if (codebook == nullptr) throw Error(Errc::invalid_argument, "nlpvq stream requires a codebook");
        if (codebook_sha256(*codebook) != h.codebook_hash) {
            throw Error(Errc::hash_mismatch, "codebook SHA-256 does not match the stream header");
        }
        if (codebook->size() != h.alphabet_size) throw Error(Errc::format, "codebook size != stream alphabet size");
        cfg.nq_bits_per_sample = nq_equivalent(codebook->size(), h.vector_dim);
        cfg.codebook_ref = h.codebook_hash;
    } else {
        if (h.alphabet_size == 0 || !std::has_single_bit(static_cast<unsigned>(h.alphabet_size))) {
            throw Error(Errc::format, "scalar stream alphabet is not a power of two");
        }
        cfg.nq_bits_per_sample = std::log2(static_cast<double>(h.alphabet_size));
        cfg.codebook_ref.reset();
        codebook = nullptr;
    }

    SignalBuffer out;
    out.sample_rate_hz = static_cast<int>(h.sample_rate);
    if (h.total_samples == 0) return out;

    cfg.validate(codebook);
    if (stream.codes.indices.size() != h.code_count()) throw Error(Errc::truncated, "code count does not match header");
    if (cfg.alphabet_size(codebook) != h.alphabet_size) throw Error(Errc::format, "alphabet size mismatch");

    CodecEngine engine(cfg, codebook, static_cast<std::size_t>(h.total_samples));
    const std::size_t unit = engine.unit();
    std::vector<double> dequantized(unit);
    std::size_t next_code = 0;
    for (std::size_t pos = 0; pos < engine.padded_length(); pos += unit) {
        if (pos % cfg.frame_len == 0) engine.begin_frame(pos / cfg.frame_len);
        engine.predict(pos);
        if (cfg.scheme == Scheme::nlpvq) {
            const std::uint32_t index = stream.codes.indices[next_code++];
            if (index >= codebook->size()) throw Error(Errc::format, "code index out of range");
            const auto w = codebook->codeword(index);
            std::copy(w.begin(), w.end(), dequantized.begin());
        } else {
            for (std::size_t k = 0; k < unit; ++k) {
                const auto q = sq_dequantize(engine.jayant(), static_cast<int>(stream.codes.indices[next_code++]));
                dequantized[k] = q.value;
                engine.jayant() = q.next;
            }
        }
        engine.commit(dequantized);
    }
    const auto recon = engine.reconstructed();
    out.samples.assign(recon.begin(), recon.begin() + static_cast<std::ptrdiff_t>(h.total_samples));
    return out;
}

}  // namespace nlpvq
