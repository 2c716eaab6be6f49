#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nlpvq {

// Mono PCM samples normalized to [-1, 1).
struct SignalBuffer {
    std::vector<double> samples;
    int sample_rate_hz = 8000;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    void validate() const;
};

enum class PcmFormat { wav_pcm16, raw_pcm16_le };

PcmFormat parse_pcm_format(std::string_view name);
std::string_view to_string(PcmFormat format);

double from_pcm16(std::int16_t v) noexcept;
// Rounds to the nearest 16-bit code, saturating outside [-1, 32767/32768].
std::int16_t to_pcm16(double x) noexcept;
// Snap every sample onto the pcm16 grid (what save_pcm would write).
std::vector<double> round_to_pcm16(std::span<const double> samples);

SignalBuffer decode_pcm(std::span<const std::uint8_t> bytes, PcmFormat format,
                        std::optional<int> sample_rate_override = std::nullopt);
std::vector<std::uint8_t> encode_pcm(const SignalBuffer& buf, PcmFormat format);

SignalBuffer load_pcm(const std::filesystem::path& path, PcmFormat format,
                      std::optional<int> sample_rate_override = std::nullopt);
void save_pcm(const std::filesystem::path& path, const SignalBuffer& buf, PcmFormat format);

// Non-overlapping framing; hop equals frame_len.
struct FramePlan {
    std::size_t frame_len = 200;

    // frame_len > 0 and divisible by vector_dim.
    void validate(std::size_t vector_dim = 1) const;
};

struct FrameSplit {
    std::vector<std::span<const double>> frames;
    std::span<const double> remainder;

    bool has_remainder() const noexcept { return !remainder.empty(); }
};

FrameSplit frames(const SignalBuffer& buf, const FramePlan& plan);

inline constexpr double kSegSnrFloorDb = -10.0;
inline constexpr double kSegSnrCeilDb = 60.0;

struct SegSnrReport {
    std::vector<double> per_frame_db;
    double mean_db = 0.0;
    std::optional<double> across_files_std_db;
    std::size_t excluded_frames = 0;
};

// Segmental SNR: per frame 10*log10(sum x^2 / sum (x - y)^2), clamped to
// [-10, 60] dB; frames with zero signal energy are excluded. A trailing
// partial frame is zero-padded.
SegSnrReport segsnr(const SignalBuffer& original, const SignalBuffer& reconstructed,
                    const FramePlan& plan);

// Pool per-file reports: frames are concatenated (so mean_db stays the mean
// of per_frame_db) and across_files_std_db is the population standard
// deviation of the per-file means.
SegSnrReport pool_segsnr(std::span<const SegSnrReport> per_file);

}  // namespace nlpvq
