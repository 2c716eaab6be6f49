#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "nlpvq/codec.hpp"
#include "nlpvq/error.hpp"

namespace nlpvq {

ClosedLoopResult closed_loop_design(const SignalBuffer& corpus, const CodecConfig& base,
                                    std::span<const std::size_t> sizes,
                                    std::span<const DesignAlgorithm> algorithms, int rounds,
                                    const DesignOptions& options) {
    if (sizes.empty() || algorithms.empty()) throw Error(Errc::invalid_argument, "no codebook sizes or algorithms");
    if (rounds < 0) throw Error(Errc::invalid_argument, "rounds must be >= 0");
    for (auto m : sizes) {
        if (m == 0 || m > 65535) throw Error(Errc::invalid_argument, "codebook sizes must be in [1, 65535]");
    }

    CodecConfig bootstrap_cfg = base;
    bootstrap_cfg.scheme = Scheme::vpred_scalar;
    bootstrap_cfg.nq_bits_per_sample = kBootstrapNq;
    bootstrap_cfg.codebook_ref.reset();

    ClosedLoopResult result;
    result.bootstrap = encode(corpus, bootstrap_cfg).residuals;
    const std::size_t max_m = *std::max_element(sizes.begin(), sizes.end());
    if (result.bootstrap.size() < kMinResidualsPerCodeword * max_m) {
        throw Error(Errc::degenerate, "corpus yields " + std::to_string(result.bootstrap.size()) +
                                          " residual vectors; need at least " +
                                          std::to_string(kMinResidualsPerCodeword * max_m));
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (auto algorithm : algorithms) {
        for (auto m : sizes) {
            if (algorithm == DesignAlgorithm::lbg && !std::has_single_bit(m)) continue;
            CodebookDesign design =
                algorithm == DesignAlgorithm::lbg
                    ? design_lbg(result.bootstrap, m, options.split_epsilon, options.tol, options.max_iters)
                    : design_random_lloyd(result.bootstrap, m, options.seed, options.tol, options.max_iters);
            result.log.push_back({0, algorithm, m, nq_equivalent(m, base.vector_dim), result.bootstrap.size(), nan,
                                  design.distortions.back()});
            result.codebooks.emplace(CodebookKey{algorithm, m}, std::move(design.codebook));
            result.training_sets.emplace(CodebookKey{algorithm, m}, result.bootstrap);
        }
    }

    for (int round = 1; round <= rounds; ++round) {
        for (auto& [key, codebook] : result.codebooks) {
            CodecConfig cfg = base;
            cfg.scheme = Scheme::nlpvq;
            cfg.nq_bits_per_sample = nq_equivalent(codebook.size(), base.vector_dim);
            cfg.codebook_ref.reset();
            TrainingSet& residuals = result.training_sets.at(key);
            residuals = encode(corpus, cfg, &codebook).residuals;
            const double previous = vq_distortion(codebook, residuals);
            const Provenance provenance = codebook.provenance;
            CodebookDesign design = lloyd_refine(codebook, residuals, options.tol, options.max_iters);
            codebook = std::move(design.codebook);
            codebook.provenance.algorithm = provenance.algorithm;
            codebook.provenance.closed_loop_iteration = round;
            codebook.provenance.training_size = residuals.size();
            result.log.push_back({round, key.first, key.second, cfg.nq_bits_per_sample, residuals.size(), previous,
                                  design.distortions.back()});
        }
    }
    return result;
}

}  // namespace nlpvq
