#include "nlpvq/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "nlpvq/error.hpp"

namespace nlpvq {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::vector<double> pcm16_samples(std::span<const std::uint8_t> data) {
    if (data.size() % 2 != 0) throw Error(Errc::format, "pcm16 payload has an odd byte count");
    std::vector<double> out(data.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = from_pcm16(static_cast<std::int16_t>(read_u16(data, 2 * i)));
    }
    return out;
}

SignalBuffer decode_wav(std::span<const std::uint8_t> b) {
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
        throw Error(Errc::format, "not a RIFF/WAVE file");
    }
    std::optional<int> rate;
    std::optional<std::span<const std::uint8_t>> data;
    std::size_t pos = 12;
    while (pos + 8 <= b.size()) {
        const std::uint32_t len = read_u32(b, pos + 4);
        const std::size_t body = pos + 8;
        if (len > b.size() - body) throw Error(Errc::format, "WAV chunk overruns file");
        if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
            if (len < 16) throw Error(Errc::format, "WAV fmt chunk too short");
            const std::uint16_t tag = read_u16(b, body);
            const std::uint16_t channels = read_u16(b, body + 2);
            const std::uint16_t bits = read_u16(b, body + 14);
            if (tag != 1 && tag != 0xFFFE) throw Error(Errc::format, "WAV is not integer PCM");
            if (channels != 1) {
                throw Error(Errc::format, "multichannel input (" + std::to_string(channels) +
                                              " channels); only mono is supported");
            }
            if (bits != 16) throw Error(Errc::format, "WAV is not 16-bit");
            rate = static_cast<int>(read_u32(b, body + 4));
        } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
            data = b.subspan(body, len);
        }
        pos = body + len + (len & 1u);
    }
    if (!rate) throw Error(Errc::format, "WAV has no fmt chunk");
    if (!data) throw Error(Errc::format, "WAV has no data chunk");
    SignalBuffer buf{pcm16_samples(*data), *rate};
    return buf;
}

}  // namespace

void SignalBuffer::validate() const {
    if (sample_rate_hz <= 0) throw Error(Errc::invalid_argument, "sample rate must be positive");
    for (double s : samples) {
        if (!std::isfinite(s)) throw Error(Errc::invalid_argument, "non-finite sample");
    }
}

PcmFormat parse_pcm_format(std::string_view name) {
    if (name == "wav" || name == "wav-pcm16") return PcmFormat::wav_pcm16;
    if (name == "raw" || name == "raw-pcm16-le") return PcmFormat::raw_pcm16_le;
    throw Error(Errc::invalid_argument, "unknown PCM format '" + std::string(name) + "'");
}

std::string_view to_string(PcmFormat format) {
    return format == PcmFormat::wav_pcm16 ? "wav-pcm16" : "raw-pcm16-le";
}

double from_pcm16(std::int16_t v) noexcept { return static_cast<double>(v) / 32768.0; }

std::int16_t to_pcm16(double x) noexcept {
    const double scaled = std::nearbyint(x * 32768.0);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

std::vector<double> round_to_pcm16(std::span<const double> samples) {
    std::vector<double> out(samples.size());
    std::transform(samples.begin(), samples.end(), out.begin(),
                   [](double x) { return from_pcm16(to_pcm16(x)); });
    return out;
}

SignalBuffer decode_pcm(std::span<const std::uint8_t> bytes, PcmFormat format,
                        std::optional<int> sample_rate_override) {
    SignalBuffer buf = format == PcmFormat::wav_pcm16 ? decode_wav(bytes)
                                                      : SignalBuffer{pcm16_samples(bytes), 8000};
    if (sample_rate_override) buf.sample_rate_hz = *sample_rate_override;
    if (buf.samples.empty()) throw Error(Errc::format, "zero-length PCM stream");
    buf.validate();
    return buf;
}

std::vector<std::uint8_t> encode_pcm(const SignalBuffer& buf, PcmFormat format) {
    std::vector<std::uint8_t> out;
    const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
    if (format == PcmFormat::wav_pcm16) {
        out.reserve(44 + data_bytes);
        out.insert(out.end(), {'R', 'I', 'F', 'F'});
        put_u32(out, 36 + data_bytes);
        out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
        put_u32(out, 16);
        put_u16(out, 1);
        put_u16(out, 1);
        put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
        put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * 2);
        put_u16(out, 2);
        put_u16(out, 16);
        out.insert(out.end(), {'d', 'a', 't', 'a'});
        put_u32(out, data_bytes);
    }
    for (double s : buf.samples) put_u16(out, static_cast<std::uint16_t>(to_pcm16(s)));
    return out;
}

SignalBuffer load_pcm(const std::filesystem::path& path, PcmFormat format,
                      std::optional<int> sample_rate_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_pcm(bytes, format, sample_rate_override);
}

void save_pcm(const std::filesystem::path& path, const SignalBuffer& buf, PcmFormat format) {
    const auto bytes = encode_pcm(buf, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "short write to " + path.string());
}

void FramePlan::validate(std::size_t vector_dim) const {
    if (frame_len == 0) throw Error(Errc::invalid_argument, "frame_len must be positive");
    if (vector_dim == 0 || frame_len < vector_dim || frame_len % vector_dim != 0) {
        throw Error(Errc::invalid_argument, "frame_len must be a positive multiple of the vector dimension");
    }
}

FrameSplit frames(const SignalBuffer& buf, const FramePlan& plan) {
    plan.validate();
    FrameSplit split;
    const std::span<const double> all(buf.samples);
    const std::size_t full = all.size() / plan.frame_len;
    split.frames.reserve(full);
    for (std::size_t i = 0; i < full; ++i) split.frames.push_back(all.subspan(i * plan.frame_len, plan.frame_len));
    split.remainder = all.subspan(full * plan.frame_len);
    return split;
}

SegSnrReport segsnr(const SignalBuffer& original, const SignalBuffer& reconstructed, const FramePlan& plan) {
    plan.validate();
    if (original.size() != reconstructed.size()) {
        throw Error(Errc::dimension_mismatch, "segsnr: original and reconstruction differ in length");
    }
    SegSnrReport report;
    const std::size_t n = original.size();
    for (std::size_t start = 0; start < n; start += plan.frame_len) {
        // Zero padding of a trailing partial frame adds nothing to either sum.
        const std::size_t end = std::min(n, start + plan.frame_len);
        double signal = 0.0;
        double noise = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            const double x = original.samples[i];
            const double e = x - reconstructed.samples[i];
            signal += x * x;
            noise += e * e;
        }
        if (signal == 0.0) {
            ++report.excluded_frames;
            continue;
        }
        const double db = noise == 0.0 ? kSegSnrCeilDb : 10.0 * std::log10(signal / noise);
        report.per_frame_db.push_back(std::clamp(db, kSegSnrFloorDb, kSegSnrCeilDb));
    }
    if (report.per_frame_db.empty()) throw Error(Errc::degenerate, "segsnr: zero frames after exclusion");
    report.mean_db = std::accumulate(report.per_frame_db.begin(), report.per_frame_db.end(), 0.0) /
                     static_cast<double>(report.per_frame_db.size());
    return report;
}

SegSnrReport pool_segsnr(std::span<const SegSnrReport> per_file) {
    if (per_file.empty()) throw Error(Errc::invalid_argument, "pool_segsnr: no reports");
    SegSnrReport pooled;
    double mean_of_means = 0.0;
    for (const auto& r : per_file) {
        pooled.per_frame_db.insert(pooled.per_frame_db.end(), r.per_frame_db.begin(), r.per_frame_db.end());
        pooled.excluded_frames += r.excluded_frames;
        mean_of_means += r.mean_db;
    }
    mean_of_means /= static_cast<double>(per_file.size());
    double var = 0.0;
    for (const auto& r : per_file) var += (r.mean_db - mean_of_means) * (r.mean_db - mean_of_means);
    pooled.across_files_std_db = std::sqrt(var / static_cast<double>(per_file.size()));
    pooled.mean_db = std::accumulate(pooled.per_frame_db.begin(), pooled.per_frame_db.end(), 0.0) /
                     static_cast<double>(pooled.per_frame_db.size());
    return pooled;
}

}  // namespace nlpvq
