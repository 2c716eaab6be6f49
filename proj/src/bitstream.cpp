#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nlpvq/codec.hpp"
#include "nlpvq/error.hpp"

namespace nlpvq {

namespace {

constexpr char kMagic[4] = {'N', 'L', 'P', 'Q'};

unsigned bits_per_index(std::size_t alphabet_size) {
    return alphabet_size <= 1 ? 0u : static_cast<unsigned>(std::bit_width(alphabet_size - 1));
}

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    template <class T>
    void put(T v) {
        const auto bits = std::bit_cast<std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::int64_t, T>>>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }

    void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    template <class T>
    T get() {
        using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::int64_t, T>>;
        need(sizeof(T));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return std::bit_cast<T>(v);
    }

    std::span<const std::uint8_t> raw(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw Error(Errc::truncated, "bitstream truncated");
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

double StreamHeader::nq() const {
    const double bits = std::log2(static_cast<double>(alphabet_size));
    return scheme == Scheme::nlpvq ? bits / vector_dim : bits;
}

std::size_t StreamHeader::code_count() const {
    const auto total = static_cast<std::size_t>(total_samples);
    switch (scheme) {
        case Scheme::scalar_adpcm: return total;
        case Scheme::vpred_scalar: return (total + vector_dim - 1) / vector_dim * vector_dim;
        case Scheme::nlpvq: return (total + vector_dim - 1) / vector_dim;
    }
    throw Error(Errc::format, "unknown scheme id");
}

void CodewordStream::validate() const {
    if (alphabet_size == 0) throw Error(Errc::invalid_argument, "codeword alphabet is empty");
    for (auto i : indices) {
        if (i >= alphabet_size) throw Error(Errc::invalid_argument, "codeword index out of range");
    }
}

std::vector<std::uint8_t> serialize_stream(const EncodedStream& stream) {
    const StreamHeader& h = stream.header;
    if (stream.codes.indices.size() != h.code_count()) {
        throw Error(Errc::invalid_argument, "code count inconsistent with header");
    }
    std::vector<std::uint8_t> out;
    const unsigned width = bits_per_index(h.alphabet_size);
    out.reserve(kStreamHeaderBytes + (stream.codes.indices.size() * width + 7) / 8);
    ByteWriter w(out);
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
    w.put<std::uint8_t>(kStreamVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(h.scheme));
    w.put<std::uint32_t>(h.sample_rate);
    w.put<std::uint16_t>(h.frame_len);
    w.put<std::uint8_t>(h.vector_dim);
    w.put<std::uint8_t>(h.order);
    w.put<std::uint16_t>(h.alphabet_size);
    w.put<double>(h.initial_step);
    w.raw(h.codebook_hash);
    w.put<std::uint64_t>(h.total_samples);

    std::uint64_t acc = 0;
    unsigned filled = 0;
    for (auto index : stream.codes.indices) {
        if (index >= h.alphabet_size) throw Error(Errc::invalid_argument, "code index out of range");
        acc |= static_cast<std::uint64_t>(index) << filled;
        filled += width;
        while (filled >= 8) {
            out.push_back(static_cast<std::uint8_t>(acc));
            acc >>= 8;
            filled -= 8;
        }
    }
    if (filled > 0) out.push_back(static_cast<std::uint8_t>(acc));
    return out;
}

EncodedStream parse_stream(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw Error(bytes.size() < 4 ? Errc::truncated : Errc::format, "not an NLPQ bitstream");
    }
    r.raw(4);
    if (const auto version = r.get<std::uint8_t>(); version != kStreamVersion) {
        throw Error(Errc::format, "unsupported bitstream version " + std::to_string(version));
    }
    EncodedStream s;
    StreamHeader& h = s.header;
    const auto scheme = r.get<std::uint8_t>();
    if (scheme > static_cast<std::uint8_t>(Scheme::nlpvq)) {
        throw Error(Errc::format, "unknown scheme id " + std::to_string(scheme));
    }
    h.scheme = static_cast<Scheme>(scheme);
    h.sample_rate = r.get<std::uint32_t>();
    h.frame_len = r.get<std::uint16_t>();
    h.vector_dim = r.get<std::uint8_t>();
    h.order = r.get<std::uint8_t>();
    h.alphabet_size = r.get<std::uint16_t>();
    h.initial_step = r.get<double>();
    const auto hash = r.raw(32);
    std::copy(hash.begin(), hash.end(), h.codebook_hash.begin());
    h.total_samples = r.get<std::uint64_t>();
    if (h.vector_dim == 0 || h.alphabet_size == 0 || h.sample_rate == 0) {
        throw Error(Errc::format, "bitstream header has zero-valued dimensions");
    }

    const std::size_t count = h.code_count();
    const unsigned width = bits_per_index(h.alphabet_size);
    const std::size_t payload = (count * width + 7) / 8;
    if (r.remaining() < payload) throw Error(Errc::truncated, "bitstream payload truncated");
    if (r.remaining() > payload) throw Error(Errc::format, "trailing bytes after bitstream payload");
    const auto data = r.raw(payload);

    s.codes.alphabet_size = h.alphabet_size;
    s.codes.indices.resize(count);
    const std::uint32_t mask = width == 0 ? 0u : (1u << width) - 1u;
    std::size_t bit = 0;
    for (auto& index : s.codes.indices) {
        std::uint32_t v = 0;
        for (unsigned b = 0; b < width; ++b, ++bit) v |= static_cast<std::uint32_t>((data[bit / 8] >> (bit % 8)) & 1u) << b;
        index = v & mask;
        if (index >= h.alphabet_size) throw Error(Errc::format, "code index out of range");
    }
    return s;
}

void save_stream(const std::filesystem::path& path, const EncodedStream& stream) {
    const auto bytes = serialize_stream(stream);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "short write to " + path.string());
}

EncodedStream load_stream(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_stream(bytes);
}

}  // namespace nlpvq
