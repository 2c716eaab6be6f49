#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlpvq {

enum class DesignAlgorithm { random_lloyd, lbg };

std::string_view to_string(DesignAlgorithm algorithm);
DesignAlgorithm parse_design_algorithm(std::string_view name);

struct Provenance {
    DesignAlgorithm algorithm = DesignAlgorithm::lbg;
    int closed_loop_iteration = 0;
    std::size_t training_size = 0;

    bool operator==(const Provenance&) const = default;
};

// M codewords of dimension dim, stored row-major.
struct Codebook {
    std::size_t dim = 2;
    std::vector<double> codewords;
    Provenance provenance;

    std::size_t size() const noexcept { return dim == 0 ? 0 : codewords.size() / dim; }
    std::span<const double> codeword(std::size_t i) const {
        return std::span<const double>(codewords).subspan(i * dim, dim);
    }
    // M >= 1, finite, pairwise distinct (squared distance > 1e-24).
    void validate() const;

    bool operator==(const Codebook&) const = default;
};

struct TrainingSet {
    std::size_t dim = 2;
    std::vector<double> vectors;

    std::size_t size() const noexcept { return dim == 0 ? 0 : vectors.size() / dim; }
    std::span<const double> vector(std::size_t i) const {
        return std::span<const double>(vectors).subspan(i * dim, dim);
    }
    void add(std::span<const double> v);
    void validate() const;
};

struct VqMatch {
    std::size_t index = 0;
    std::span<const double> codeword;
    double distance = 0.0;  // squared Euclidean
};

// Exhaustive nearest neighbour; ties go to the lowest index.
VqMatch vq_encode(const Codebook& cb, std::span<const double> v);

double vq_distortion(const Codebook& cb, const TrainingSet& ts);
std::vector<std::size_t> cell_populations(const Codebook& cb, const TrainingSet& ts);

struct LloydStep {
    Codebook codebook;
    double distortion = 0.0;  // of the input codebook, before re-centering
    std::size_t repaired_cells = 0;
};

// One generalized Lloyd iteration. Empty cells are re-seeded next to the
// centroid of the most populous cell.
LloydStep lloyd_iterate(const Codebook& cb, const TrainingSet& ts);

inline constexpr double kDefaultDesignTolerance = 1e-6;
inline constexpr int kDefaultDesignIterations = 100;
inline constexpr double kDefaultSplitEpsilon = 0.01;
inline constexpr double kZeroSplitOffset = 1e-4;

struct CodebookDesign {
    Codebook codebook;
    // Distortion reported by each Lloyd iteration, followed by the distortion
    // of the returned codebook. Non-increasing. For LBG this covers the last
    // doubling stage only (a split may raise distortion slightly).
    std::vector<double> distortions;
};

// Lloyd iterations from a given starting codebook until the relative
// decrease drops below tol (or max_iters).
CodebookDesign lloyd_refine(Codebook cb, const TrainingSet& ts, double tol = kDefaultDesignTolerance,
                            int max_iters = kDefaultDesignIterations);

CodebookDesign design_random_lloyd(const TrainingSet& ts, std::size_t codebook_size, std::uint64_t seed,
                                   double tol = kDefaultDesignTolerance, int max_iters = kDefaultDesignIterations);

CodebookDesign design_lbg(const TrainingSet& ts, std::size_t codebook_size, double epsilon = kDefaultSplitEpsilon,
                          double tol = kDefaultDesignTolerance, int max_iters = kDefaultDesignIterations);

using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(const Digest& digest);
Digest digest_from_hex(std::string_view hex);

// u32 dim, u32 M, then M*dim little-endian f64, row-major.
std::vector<std::uint8_t> codebook_canonical_bytes(const Codebook& cb);
Digest codebook_sha256(const Codebook& cb);

std::string codebook_to_json(const Codebook& cb);
Codebook codebook_from_json(const std::string& text);
void save_codebook(const std::filesystem::path& path, const Codebook& cb);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace nlpvq
