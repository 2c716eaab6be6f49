#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "nlpvq/error.hpp"
#include "nlpvq/vector_quantizer.hpp"

namespace nlpvq {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

}  // namespace

std::string to_hex(const Digest& digest) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : digest) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0xF]);
    }
    return s;
}

Digest digest_from_hex(std::string_view hex) {
    if (hex.size() != 64) throw Error(Errc::format, "SHA-256 hex digest must have 64 characters");
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw Error(Errc::format, "invalid hex digit in digest");
    };
    Digest d{};
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return d;
}

std::vector<std::uint8_t> codebook_canonical_bytes(const Codebook& cb) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + 8 * cb.codewords.size());
    put_u32(out, static_cast<std::uint32_t>(cb.dim));
    put_u32(out, static_cast<std::uint32_t>(cb.size()));
    for (double v : cb.codewords) put_f64(out, v);
    return out;
}

Digest codebook_sha256(const Codebook& cb) {
    const auto bytes = codebook_canonical_bytes(cb);
    Digest d{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size()) {
        throw Error(Errc::io, "SHA-256 computation failed");
    }
    return d;
}

std::string codebook_to_json(const Codebook& cb) {
    cb.validate();
    nlohmann::json j;
    j["dim"] = cb.dim;
    j["size"] = cb.size();
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < cb.size(); ++i) {
        const auto w = cb.codeword(i);
        rows.push_back(std::vector<double>(w.begin(), w.end()));
    }
    j["codewords"] = std::move(rows);
    j["provenance"] = {{"algorithm", std::string(to_string(cb.provenance.algorithm))},
                       {"closed_loop_iteration", cb.provenance.closed_loop_iteration},
                       {"training_size", cb.provenance.training_size}};
    j["sha256"] = to_hex(codebook_sha256(cb));
    return j.dump(2);
}

Codebook codebook_from_json(const std::string& text) {
    Codebook cb;
    try {
        const auto j = nlohmann::json::parse(text);
        cb.dim = j.at("dim").get<std::size_t>();
        for (const auto& row : j.at("codewords")) {
            const auto w = row.get<std::vector<double>>();
            if (w.size() != cb.dim) throw Error(Errc::format, "codeword row length != dim");
            cb.codewords.insert(cb.codewords.end(), w.begin(), w.end());
        }
        if (j.contains("size") && j.at("size").get<std::size_t>() != cb.size()) {
            throw Error(Errc::format, "codebook size field disagrees with codeword count");
        }
        if (j.contains("provenance")) {
            const auto& p = j.at("provenance");
            cb.provenance.algorithm = parse_design_algorithm(p.at("algorithm").get<std::string>());
            cb.provenance.closed_loop_iteration = p.value("closed_loop_iteration", 0);
            cb.provenance.training_size = p.value("training_size", std::size_t{0});
        }
        cb.validate();
        if (j.contains("sha256") && digest_from_hex(j.at("sha256").get<std::string>()) != codebook_sha256(cb)) {
            throw Error(Errc::hash_mismatch, "codebook file sha256 does not match its codewords");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format, std::string("codebook JSON: ") + e.what());
    }
    return cb;
}

void save_codebook(const std::filesystem::path& path, const Codebook& cb) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out << codebook_to_json(cb) << '\n';
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return codebook_from_json(ss.str());
}

}  // namespace nlpvq
