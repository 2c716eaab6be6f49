#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "nlpvq/predictor.hpp"
#include "nlpvq/scalar_quantizer.hpp"
#include "nlpvq/signal.hpp"
#include "nlpvq/vector_quantizer.hpp"

namespace nlpvq {

// The three backward-adaptive ADPCM variants:
//   scalar_adpcm  - order-10 LPC predictor, Jayant quantizer per sample
//   vpred_scalar  - MLP vector predictor, Jayant quantizer per component
//   nlpvq         - MLP vector predictor, codebook VQ of the residual vector
enum class Scheme : std::uint8_t { scalar_adpcm = 0, vpred_scalar = 1, nlpvq = 2 };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

// Equivalent bits per sample of a size-M codebook of dimension N.
double nq_equivalent(std::size_t codebook_size, std::size_t vector_dim);

// Per-frame MLP retraining budget used inside the codec loop.
inline constexpr int kCodecLmIterations = 15;

TrainingConfig codec_training_defaults();

struct CodecConfig {
    Scheme scheme = Scheme::scalar_adpcm;
    std::size_t frame_len = 200;
    std::size_t vector_dim = 2;
    std::size_t predictor_order = 10;
    double nq_bits_per_sample = 3.0;
    TrainingConfig training = codec_training_defaults();
    MultiplierTables multipliers = default_multiplier_tables();
    double initial_step = kDefaultInitialStep;
    double step_min = kDefaultStepMin;
    double step_max = kDefaultStepMax;
    std::optional<Digest> codebook_ref;
    // Seeds per-frame retraining (frame t uses mix_seed(seed, t)). Shared by
    // encoder and decoder like the codebook; it is not in the bitstream.
    std::uint64_t seed = 1;
    // Start each frame's LM runs from the previous frame's committee.
    bool warm_start = false;

    // Samples per prediction/quantization unit: 1 for scalar_adpcm, N otherwise.
    std::size_t unit_dim() const noexcept { return scheme == Scheme::scalar_adpcm ? 1 : vector_dim; }
    int scalar_bits() const;
    JayantState jayant_state() const;
    // Size of the code alphabet (2^bits, or the codebook size for nlpvq).
    std::size_t alphabet_size(const Codebook* codebook) const;
    void validate(const Codebook* codebook) const;
};

inline constexpr std::uint8_t kStreamVersion = 1;

struct StreamHeader {
    Scheme scheme = Scheme::scalar_adpcm;
    std::uint32_t sample_rate = 8000;
    std::uint16_t frame_len = 200;
    std::uint8_t vector_dim = 1;
    std::uint8_t order = 10;
    std::uint16_t alphabet_size = 8;
    double initial_step = kDefaultInitialStep;
    Digest codebook_hash{};
    std::uint64_t total_samples = 0;

    double nq() const;
    // Number of code indices the payload carries.
    std::size_t code_count() const;

    bool operator==(const StreamHeader&) const = default;
};

struct CodewordStream {
    std::vector<std::uint32_t> indices;
    std::size_t alphabet_size = 0;

    void validate() const;
    bool operator==(const CodewordStream&) const = default;
};

struct EncodedStream {
    StreamHeader header;
    CodewordStream codes;

    bool operator==(const EncodedStream&) const = default;
};

struct EncodeResult {
    EncodedStream stream;
    SignalBuffer reconstruction;  // exactly what decode() returns
    TrainingSet residuals;        // unquantized prediction residuals, one per unit
};

// Backward-adaptive encoding. Frame 0 uses a zero predictor; frame t >= 1
// retrains the predictor on the reconstruction of frame t-1 only. A trailing
// partial frame is encoded too (zero-padded to a whole unit).
EncodeResult encode(const SignalBuffer& signal, const CodecConfig& cfg, const Codebook* codebook = nullptr);

// Replays the encoder's adaptation from the codes alone. Header fields
// override the corresponding fields of `profile`; training settings, seed and
// multiplier tables come from `profile`.
SignalBuffer decode(const EncodedStream& stream, const CodecConfig& profile, const Codebook* codebook = nullptr);

// Bitstream: "NLPQ", version u8, scheme u8, sample_rate u32, frame_len u16,
// N u8, order u8, M u16, initial step f64, codebook SHA-256 (32 bytes, zero
// for scalar schemes), total_samples u64, then indices packed ceil(log2 M)
// bits each, LSB first. Everything little-endian.
inline constexpr std::size_t kStreamHeaderBytes = 64;

std::vector<std::uint8_t> serialize_stream(const EncodedStream& stream);
EncodedStream parse_stream(std::span<const std::uint8_t> bytes);
void save_stream(const std::filesystem::path& path, const EncodedStream& stream);
EncodedStream load_stream(const std::filesystem::path& path);

// Closed-loop codebook design.
struct DesignOptions {
    double tol = kDefaultDesignTolerance;
    int max_iters = kDefaultDesignIterations;
    double split_epsilon = kDefaultSplitEpsilon;
    std::uint64_t seed = 1;  // random-init draws
};

inline constexpr double kBootstrapNq = 3.0;
inline constexpr std::size_t kMinResidualsPerCodeword = 50;

struct DistortionLogEntry {
    int round = 0;
    DesignAlgorithm algorithm = DesignAlgorithm::lbg;
    std::size_t codebook_size = 0;
    double nq = 0.0;
    std::size_t training_vectors = 0;
    // Previous round's codebook on this round's residuals (NaN in round 0).
    double previous_distortion = 0.0;
    double distortion = 0.0;
};

using CodebookKey = std::pair<DesignAlgorithm, std::size_t>;

struct ClosedLoopResult {
    std::map<CodebookKey, Codebook> codebooks;
    std::vector<DistortionLogEntry> log;
    TrainingSet bootstrap;  // round-0 residuals (vector predictor + scalar quantizer)
    // Residuals each codebook was last designed on.
    std::map<CodebookKey, TrainingSet> training_sets;
};

// Round 0 encodes the corpus with vpred_scalar at Nq=3 and designs one
// codebook per (algorithm, M). Each further round re-encodes the corpus with
// nlpvq using each codebook and refines that codebook by Lloyd iterations on
// its own residuals. LBG is skipped for sizes that are not powers of two.
ClosedLoopResult closed_loop_design(const SignalBuffer& corpus, const CodecConfig& base,
                                    std::span<const std::size_t> sizes,
                                    std::span<const DesignAlgorithm> algorithms, int rounds,
                                    const DesignOptions& options = {});

}  // namespace nlpvq
