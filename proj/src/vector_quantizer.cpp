#include "nlpvq/vector_quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "nlpvq/error.hpp"
#include "nlpvq/rng.hpp"

namespace nlpvq {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        d += diff * diff;
    }
    return d;
}

constexpr double kDuplicateSquaredDistance = 1e-24;

void check_dims(const Codebook& cb, const TrainingSet& ts) {
    if (cb.dim != ts.dim) throw Error(Errc::dimension_mismatch, "codebook and training set dimensions differ");
    if (ts.size() == 0) throw Error(Errc::invalid_argument, "empty training set");
}

std::vector<double> global_centroid(const TrainingSet& ts) {
    std::vector<double> c(ts.dim, 0.0);
    for (std::size_t n = 0; n < ts.size(); ++n) {
        const auto v = ts.vector(n);
        for (std::size_t k = 0; k < ts.dim; ++k) c[k] += v[k];
    }
    for (double& x : c) x /= static_cast<double>(ts.size());
    return c;
}

bool has_empty_cell(const Codebook& cb, const TrainingSet& ts) {
    const auto pops = cell_populations(cb, ts);
    return std::find(pops.begin(), pops.end(), std::size_t{0}) != pops.end();
}

}  // namespace

std::string_view to_string(DesignAlgorithm algorithm) {
    return algorithm == DesignAlgorithm::lbg ? "lbg" : "random";
}

DesignAlgorithm parse_design_algorithm(std::string_view name) {
    if (name == "lbg") return DesignAlgorithm::lbg;
    if (name == "random" || name == "random-lloyd") return DesignAlgorithm::random_lloyd;
    throw Error(Errc::invalid_argument, "unknown codebook design algorithm '" + std::string(name) + "'");
}

void Codebook::validate() const {
    if (dim == 0) throw Error(Errc::invalid_argument, "codebook dimension must be positive");
    if (codewords.size() % dim != 0) throw Error(Errc::dimension_mismatch, "codebook storage is not a multiple of dim");
    if (size() == 0) throw Error(Errc::invalid_argument, "codebook is empty");
    for (double v : codewords) {
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite codeword");
    }
    for (std::size_t i = 0; i < size(); ++i) {
        for (std::size_t j = i + 1; j < size(); ++j) {
            if (squared_distance(codeword(i), codeword(j)) <= kDuplicateSquaredDistance) {
                throw Error(Errc::invalid_argument,
                            "codewords " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            }
        }
    }
}

void TrainingSet::add(std::span<const double> v) {
    if (v.size() != dim) throw Error(Errc::dimension_mismatch, "training vector has wrong dimension");
    vectors.insert(vectors.end(), v.begin(), v.end());
}

void TrainingSet::validate() const {
    if (dim == 0 || vectors.size() % dim != 0) throw Error(Errc::dimension_mismatch, "malformed training set");
    if (vectors.empty()) throw Error(Errc::invalid_argument, "empty training set");
    for (double v : vectors) {
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite training vector");
    }
}

VqMatch vq_encode(const Codebook& cb, std::span<const double> v) {
    if (v.size() != cb.dim) throw Error(Errc::dimension_mismatch, "vector dimension != codebook dimension");
    if (cb.size() == 0) throw Error(Errc::invalid_argument, "codebook is empty");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    const double* w = cb.codewords.data();
    for (std::size_t i = 0; i < cb.size(); ++i, w += cb.dim) {
        double d = 0.0;
        for (std::size_t k = 0; k < cb.dim; ++k) {
            const double diff = v[k] - w[k];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return {best, cb.codeword(best), best_d};
}

double vq_distortion(const Codebook& cb, const TrainingSet& ts) {
    check_dims(cb, ts);
    double total = 0.0;
    for (std::size_t n = 0; n < ts.size(); ++n) total += vq_encode(cb, ts.vector(n)).distance;
    return total / static_cast<double>(ts.size());
}

std::vector<std::size_t> cell_populations(const Codebook& cb, const TrainingSet& ts) {
    check_dims(cb, ts);
    std::vector<std::size_t> pops(cb.size(), 0);
    for (std::size_t n = 0; n < ts.size(); ++n) ++pops[vq_encode(cb, ts.vector(n)).index];
    return pops;
}

LloydStep lloyd_iterate(const Codebook& cb, const TrainingSet& ts) {
    check_dims(cb, ts);
    const std::size_t m = cb.size();
    const std::size_t dim = cb.dim;
    std::vector<double> sums(m * dim, 0.0);
    std::vector<double> lo(m * dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(m * dim, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> counts(m, 0);

    double total = 0.0;
    for (std::size_t n = 0; n < ts.size(); ++n) {
        const auto v = ts.vector(n);
        const auto match = vq_encode(cb, v);
        total += match.distance;
        ++counts[match.index];
        for (std::size_t k = 0; k < dim; ++k) {
            const std::size_t at = match.index * dim + k;
            sums[at] += v[k];
            lo[at] = std::min(lo[at], v[k]);
            hi[at] = std::max(hi[at], v[k]);
        }
    }

    LloydStep step;
    step.distortion = total / static_cast<double>(ts.size());
    step.codebook = cb;
    auto& words = step.codebook.codewords;
    for (std::size_t i = 0; i < m; ++i) {
        if (counts[i] == 0) continue;
        for (std::size_t k = 0; k < dim; ++k) words[i * dim + k] = sums[i * dim + k] / static_cast<double>(counts[i]);
    }

    // Repair empty cells: seed each next to the centroid of the currently most
    // populous splittable cell, alternating the offset direction on reuse.
    std::vector<double> weight(counts.begin(), counts.end());
    std::vector<int> uses(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        if (counts[i] != 0) continue;
        std::size_t donor = m;
        for (std::size_t c = 0; c < m; ++c) {
            if (counts[c] < 2) continue;
            bool spread = false;
            for (std::size_t k = 0; k < dim; ++k) spread = spread || hi[c * dim + k] > lo[c * dim + k];
            if (spread && (donor == m || weight[c] > weight[donor])) donor = c;
        }
        if (donor == m) break;
        const int u = uses[donor]++;
        const double sign = (u % 2 == 0) ? 1.0 : -1.0;
        const double scale = sign * kDefaultSplitEpsilon * static_cast<double>(u / 2 + 1);
        for (std::size_t k = 0; k < dim; ++k) {
            words[i * dim + k] = words[donor * dim + k] + scale * (hi[donor * dim + k] - lo[donor * dim + k]);
        }
        weight[donor] *= 0.5;
        ++step.repaired_cells;
    }
    return step;
}

CodebookDesign lloyd_refine(Codebook cb, const TrainingSet& ts, double tol, int max_iters) {
    check_dims(cb, ts);
    if (max_iters < 1) throw Error(Errc::invalid_argument, "max_iters must be >= 1");
    CodebookDesign design;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        auto step = lloyd_iterate(cb, ts);
        design.distortions.push_back(step.distortion);
        cb = std::move(step.codebook);
        if (step.distortion == 0.0) break;
        if (step.repaired_cells == 0 && std::isfinite(prev) && (prev - step.distortion) / prev < tol) break;
        prev = step.distortion;
    }
    // A repaired codeword can still end up winning nothing; keep iterating
    // until every cell is populated (bounded by a second budget).
    for (int extra = 0; extra < max_iters && has_empty_cell(cb, ts); ++extra) {
        auto step = lloyd_iterate(cb, ts);
        design.distortions.push_back(step.distortion);
        cb = std::move(step.codebook);
    }
    design.distortions.push_back(vq_distortion(cb, ts));
    cb.provenance.training_size = ts.size();
    design.codebook = std::move(cb);
    return design;
}

CodebookDesign design_random_lloyd(const TrainingSet& ts, std::size_t codebook_size, std::uint64_t seed,
                                   double tol, int max_iters) {
    ts.validate();
    if (codebook_size == 0) throw Error(Errc::invalid_argument, "codebook size must be >= 1");
    if (codebook_size > ts.size()) {
        throw Error(Errc::invalid_argument, "codebook size " + std::to_string(codebook_size) +
                                                " exceeds training set size " + std::to_string(ts.size()));
    }
    Codebook cb;
    cb.dim = ts.dim;
    cb.provenance = {DesignAlgorithm::random_lloyd, 0, ts.size()};
    cb.codewords.reserve(codebook_size * ts.dim);

    // Partial Fisher-Yates over indices, skipping vectors equal to one already drawn.
    std::vector<std::size_t> order(ts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < order.size() && cb.size() < codebook_size; ++i) {
        const std::size_t j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
        const auto v = ts.vector(order[i]);
        bool duplicate = false;
        for (std::size_t c = 0; c < cb.size() && !duplicate; ++c) {
            duplicate = squared_distance(cb.codeword(c), v) <= kDuplicateSquaredDistance;
        }
        if (!duplicate) cb.codewords.insert(cb.codewords.end(), v.begin(), v.end());
    }
    if (cb.size() < codebook_size) {
        throw Error(Errc::degenerate, "training set has fewer distinct vectors than the codebook size");
    }
    return lloyd_refine(std::move(cb), ts, tol, max_iters);
}

CodebookDesign design_lbg(const TrainingSet& ts, std::size_t codebook_size, double epsilon, double tol,
                          int max_iters) {
    ts.validate();
    if (codebook_size == 0 || !std::has_single_bit(codebook_size)) {
        throw Error(Errc::invalid_argument, "LBG codebook size must be a power of two");
    }
    if (codebook_size > ts.size()) throw Error(Errc::invalid_argument, "codebook size exceeds training set size");

    Codebook cb;
    cb.dim = ts.dim;
    cb.provenance = {DesignAlgorithm::lbg, 0, ts.size()};
    cb.codewords = global_centroid(ts);
    CodebookDesign design{cb, {vq_distortion(cb, ts)}};

    while (cb.size() < codebook_size) {
        std::vector<double> split;
        split.reserve(2 * cb.codewords.size());
        for (std::size_t i = 0; i < cb.size(); ++i) {
            const auto c = cb.codeword(i);
            const bool zero = std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; });
            for (const double sign : {1.0, -1.0}) {
                for (double x : c) split.push_back(zero ? x + sign * kZeroSplitOffset : x * (1.0 + sign * epsilon));
            }
        }
        cb.codewords = std::move(split);
        design = lloyd_refine(std::move(cb), ts, tol, max_iters);
        cb = design.codebook;
    }
    design.codebook.provenance.algorithm = DesignAlgorithm::lbg;
    return design;
}

}  // namespace nlpvq
