#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace nlpvq {

// Plug-in estimators over a codeword stream, in bits. 0*log(0) = 0.
//   H0 = sum_i P_i log2(1/P_i)
//   H1 = sum_j sum_i P(ij) log2(1/P(i|j)),  P(i|j) = P(ij)/P(j)
// P(ij) comes from the length-1 adjacent pairs and P(j) from the first
// element of each pair.
double entropy_h0(std::span<const std::uint32_t> stream, std::size_t alphabet_size);
double entropy_h1(std::span<const std::uint32_t> stream, std::size_t alphabet_size);

struct EntropyReport {
    std::size_t alphabet_size = 0;  // M
    std::size_t vector_dim = 1;     // N
    double nq = 0.0;                // log2(M) / N
    double h0 = 0.0;                // per codeword
    double h1 = 0.0;
    double h0_per_sample = 0.0;     // divided by N
    double h1_per_sample = 0.0;
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> transition_counts;  // M x M, row = previous codeword

    std::uint64_t transitions(std::size_t from, std::size_t to) const {
        return transition_counts[from * alphabet_size + to];
    }
};

EntropyReport analyze_stream(std::span<const std::uint32_t> stream, std::size_t alphabet_size,
                             std::size_t vector_dim = 1);

inline constexpr double kDefaultDesignTol = 0.15;
inline constexpr double kDefaultMemoryTol = 0.15;

struct Diagnosis {
    bool well_designed = false;    // nq*N - h0 <= design_tol
    bool exploits_memory = false;  // h0 - h1 <= memory_tol
};

Diagnosis quantizer_diagnosis(const EntropyReport& report, double design_tol = kDefaultDesignTol,
                              double memory_tol = kDefaultMemoryTol);

nlohmann::json report_to_json(const EntropyReport& report, const Diagnosis& diagnosis);
std::string report_csv_header();
std::string report_csv_row(const std::string& label, const std::string& scheme, const EntropyReport& report,
                           const Diagnosis& diagnosis);

}  // namespace nlpvq
