#include "nlpvq/analysis.hpp"

#include <cmath>
#include <sstream>

#include "nlpvq/error.hpp"

namespace nlpvq {

namespace {

void check_stream(std::span<const std::uint32_t> stream, std::size_t alphabet_size, std::size_t min_length) {
    if (alphabet_size == 0) throw Error(Errc::invalid_argument, "alphabet size must be >= 1");
    if (stream.size() < min_length) {
        throw Error(Errc::invalid_argument, min_length == 1 ? "empty codeword stream"
                                                            : "first-order entropy needs at least 2 codewords");
    }
    for (auto s : stream) {
        if (s >= alphabet_size) {
            throw Error(Errc::invalid_argument, "codeword " + std::to_string(s) + " outside alphabet of size " +
                                                    std::to_string(alphabet_size));
        }
    }
}

std::vector<std::uint64_t> histogram(std::span<const std::uint32_t> stream, std::size_t m) {
    std::vector<std::uint64_t> counts(m, 0);
    for (auto s : stream) ++counts[s];
    return counts;
}

std::vector<std::uint64_t> pair_counts(std::span<const std::uint32_t> stream, std::size_t m) {
    std::vector<std::uint64_t> t(m * m, 0);
    for (std::size_t n = 1; n < stream.size(); ++n) ++t[stream[n - 1] * m + stream[n]];
    return t;
}

double h0_from_counts(const std::vector<std::uint64_t>& counts, std::uint64_t total) {
    const double inv = 1.0 / static_cast<double>(total);
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) * inv;
        h -= p * std::log2(p);
    }
    return h;
}

double h1_from_transitions(const std::vector<std::uint64_t>& t, std::size_t m) {
    std::uint64_t total = 0;
    for (auto c : t) total += c;
    const double inv = 1.0 / static_cast<double>(total);
    double h = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        std::uint64_t row = 0;
        for (std::size_t i = 0; i < m; ++i) row += t[j * m + i];
        if (row == 0) continue;
        for (std::size_t i = 0; i < m; ++i) {
            const auto c = t[j * m + i];
            if (c == 0) continue;
            h -= static_cast<double>(c) * inv * std::log2(static_cast<double>(c) / static_cast<double>(row));
        }
    }
    return h;
}

}  // namespace

double entropy_h0(std::span<const std::uint32_t> stream, std::size_t alphabet_size) {
    check_stream(stream, alphabet_size, 1);
    return h0_from_counts(histogram(stream, alphabet_size), stream.size());
}

double entropy_h1(std::span<const std::uint32_t> stream, std::size_t alphabet_size) {
    check_stream(stream, alphabet_size, 2);
    return h1_from_transitions(pair_counts(stream, alphabet_size), alphabet_size);
}

EntropyReport analyze_stream(std::span<const std::uint32_t> stream, std::size_t alphabet_size,
                             std::size_t vector_dim) {
    check_stream(stream, alphabet_size, 2);
    if (vector_dim == 0) throw Error(Errc::invalid_argument, "vector dimension must be >= 1");
    EntropyReport r;
    r.alphabet_size = alphabet_size;
    r.vector_dim = vector_dim;
    const double n = static_cast<double>(vector_dim);
    r.nq = std::log2(static_cast<double>(alphabet_size)) / n;
    r.counts = histogram(stream, alphabet_size);
    r.transition_counts = pair_counts(stream, alphabet_size);
    r.h0 = h0_from_counts(r.counts, stream.size());
    r.h1 = h1_from_transitions(r.transition_counts, alphabet_size);
    r.h0_per_sample = r.h0 / n;
    r.h1_per_sample = r.h1 / n;
    return r;
}

Diagnosis quantizer_diagnosis(const EntropyReport& report, double design_tol, double memory_tol) {
    const double bits = report.nq * static_cast<double>(report.vector_dim);
    return {bits - report.h0 <= design_tol, report.h0 - report.h1 <= memory_tol};
}

nlohmann::json report_to_json(const EntropyReport& report, const Diagnosis& diagnosis) {
    return {
        {"M", report.alphabet_size},
        {"N", report.vector_dim},
        {"nq", report.nq},
        {"h0", report.h0},
        {"h1", report.h1},
        {"h0_per_sample", report.h0_per_sample},
        {"h1_per_sample", report.h1_per_sample},
        {"estimator", "plug-in (maximum likelihood), no bias correction"},
        {"counts", report.counts},
        {"transition_counts", report.transition_counts},
        {"well_designed", diagnosis.well_designed},
        {"exploits_memory", diagnosis.exploits_memory},
    };
}

std::string report_csv_header() {
    return "file,scheme,M,N,nq,h0,h1,h0_per_sample,h1_per_sample,well_designed,exploits_memory";
}

std::string report_csv_row(const std::string& label, const std::string& scheme, const EntropyReport& report,
                           const Diagnosis& diagnosis) {
    std::ostringstream row;
    row.precision(6);
    row << label << ',' << scheme << ',' << report.alphabet_size << ',' << report.vector_dim << ',' << report.nq
        << ',' << report.h0 << ',' << report.h1 << ',' << report.h0_per_sample << ',' << report.h1_per_sample << ','
        << (diagnosis.well_designed ? "true" : "false") << ',' << (diagnosis.exploits_memory ? "true" : "false");
    return row.str();
}

}  // namespace nlpvq
