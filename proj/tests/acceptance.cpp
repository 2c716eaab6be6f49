// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "nlpvq/analysis.hpp"
#include "nlpvq/codec.hpp"
#include "nlpvq/predictor.hpp"
#include "nlpvq/rng.hpp"
#include "nlpvq/signal.hpp"
#include "nlpvq/vector_quantizer.hpp"

using namespace nlpvq;
using Clock = std::chrono::steady_clock;
using Stream = std::vector<std::uint32_t>;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& detail) {
    verdicts.push_back({id, pass, detail});
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(NLPVQ_FIXTURE_DIR) / name;
}

// ------------------------------------------------------------ stream generators

Stream iid_stream(Rng& rng, std::size_t m, std::size_t len) {
    Stream s(len);
    for (auto& c : s) c = static_cast<std::uint32_t>(rng.below(m));
    return s;
}

// Geometric-like skew towards low indices.
Stream skewed_stream(Rng& rng, std::size_t m, std::size_t len) {
    Stream s(len);
    const double q = rng.uniform(0.05, 0.9);
    for (auto& c : s) {
        std::size_t k = 0;
        while (k + 1 < m && rng.uniform() > q) ++k;
        c = static_cast<std::uint32_t>(k);
    }
    return s;
}

Stream markov_stream(Rng& rng, std::size_t m, std::size_t len) {
    Stream s(len);
    const double stay = rng.uniform();
    std::uint32_t c = static_cast<std::uint32_t>(rng.below(m));
    for (auto& v : s) {
        const double u = rng.uniform();
        if (u >= stay) {
            c = u < stay + (1.0 - stay) / 2 ? static_cast<std::uint32_t>((c + 1) % m)
                                             : static_cast<std::uint32_t>(rng.below(m));
        }
        v = c;
    }
    return s;
}

Stream periodic_stream(Rng& rng, std::size_t m, std::size_t len) {
    const std::size_t period = 1 + rng.below(std::min<std::size_t>(m, 32));
    Stream pattern(period);
    for (auto& c : pattern) c = static_cast<std::uint32_t>(rng.below(m));
    Stream s(len);
    for (std::size_t i = 0; i < len; ++i) s[i] = pattern[i % period];
    return s;
}

Stream any_stream(Rng& rng, std::size_t m, std::size_t len) {
    switch (rng.below(4)) {
        case 0: return iid_stream(rng, m, len);
        case 1: return skewed_stream(rng, m, len);
        case 2: return markov_stream(rng, m, len);
        default: return periodic_stream(rng, m, len);
    }
}

// ------------------------------------------------------------ 1, 2: entropy

void entropy_chain() {
    const auto t0 = Clock::now();
    Rng rng(101);
    const int trials = 1200;
    int violations = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const std::size_t m = 1 + rng.below(256);
        // Log-uniform length in [10, 1e5].
        const auto len = static_cast<std::size_t>(std::round(std::pow(10.0, rng.uniform(1.0, 5.0))));
        const auto s = any_stream(rng, m, len);
        const double h0 = entropy_h0(s, m);
        const double h1 = entropy_h1(s, m);
        const double logm = std::log2(static_cast<double>(m));
        const double excess = std::max({-h1, h1 - h0, h0 - logm});
        worst = std::max(worst, excess);
        if (excess > 1e-9) ++violations;
    }
    const double elapsed = seconds_since(t0);
    report(1, violations == 0 && elapsed < 30.0,
           fmt("entropy chain 0<=H1<=H0<=log2M on %d streams: %d violations, worst excess %.3g bits, %.1f s",
               trials, violations, worst, elapsed));
}

// Count-and-sum over observed symbols and pairs, using maps.
std::pair<double, double> brute_force_entropies(const Stream& s) {
    std::map<std::uint32_t, std::size_t> n1, first;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> n2;
    for (auto c : s) ++n1[c];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        ++n2[{s[i], s[i + 1]}];
        ++first[s[i]];
    }
    double h0 = 0.0;
    for (const auto& [c, n] : n1) {
        const double p = static_cast<double>(n) / static_cast<double>(s.size());
        h0 -= p * std::log2(p);
    }
    double h1 = 0.0;
    const double pairs = static_cast<double>(s.size() - 1);
    for (const auto& [key, n] : n2) {
        const double pji = static_cast<double>(n) / pairs;
        const double pj = static_cast<double>(first[key.first]) / pairs;
        h1 -= pji * std::log2(pji / pj);
    }
    return {h0, h1};
}

void entropy_oracle() {
    Rng rng(202);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = 1 + rng.below(8);
        const std::size_t len = 2 + rng.below(49);
        const auto s = any_stream(rng, m, len);
        const auto [h0, h1] = brute_force_entropies(s);
        worst = std::max({worst, std::abs(entropy_h0(s, m) - h0), std::abs(entropy_h1(s, m) - h1)});
    }
    report(2, worst <= 1e-12, fmt("entropy vs brute-force oracle on 100 streams: max |diff| %.3g", worst));
}

// ------------------------------------------------------------ 3: Lloyd and LBG

double kmeans_oracle(const TrainingSet& ts, std::size_t k) {
    const std::size_t n = ts.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= k;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> label(n);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i, c /= k) label[i] = c % k;
        std::vector<double> sum(k * ts.dim, 0.0);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[label[i]];
            for (std::size_t d = 0; d < ts.dim; ++d) sum[label[i] * ts.dim + d] += ts.vector(i)[d];
        }
        if (std::count(count.begin(), count.end(), 0u) > 0) continue;
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < ts.dim; ++d) {
                const double e = ts.vector(i)[d] - sum[label[i] * ts.dim + d] / static_cast<double>(count[label[i]]);
                err += e * e;
            }
        }
        best = std::min(best, err / static_cast<double>(n));
    }
    return best;
}

TrainingSet planted(const std::vector<std::pair<double, double>>& centres, std::size_t per, double spread,
                    Rng& rng) {
    TrainingSet ts;
    for (const auto& [x, y] : centres) {
        for (std::size_t i = 0; i < per; ++i) {
            const std::vector<double> v = {x + rng.uniform(-spread, spread), y + rng.uniform(-spread, spread)};
            ts.add(v);
        }
    }
    return ts;
}

void lloyd_and_lbg(const TrainingSet& bootstrap) {
    const auto t0 = Clock::now();
    Rng rng(303);

    // Raw Lloyd iterations from random starts, on Gaussian data and on codec residuals.
    std::size_t checked = 0, increases = 0;
    auto check_run = [&](const TrainingSet& ts, std::size_t m, std::uint64_t seed) {
        Codebook cb = design_random_lloyd(ts, m, seed, 0.0, 1).codebook;
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 30; ++it) {
            const auto step = lloyd_iterate(cb, ts);
            if (step.distortion > prev + 1e-12) ++increases;
            prev = step.distortion;
            cb = step.codebook;
            ++checked;
        }
        if (vq_distortion(cb, ts) > prev + 1e-12) ++increases;
    };
    for (std::uint64_t s = 0; s < 10; ++s) {
        TrainingSet g;
        for (int i = 0; i < 2000; ++i) {
            const std::vector<double> v = {rng.uniform(-1, 1) * rng.uniform(), rng.uniform(-1, 1)};
            g.add(v);
        }
        check_run(g, 4 + rng.below(60), s);
    }
    TrainingSet sub;
    for (std::size_t i = 0; i < std::min<std::size_t>(bootstrap.size(), 8000); ++i) sub.add(bootstrap.vector(i));
    for (std::uint64_t s = 0; s < 3; ++s) check_run(sub, 64, s);

    // Design traces.
    for (std::uint64_t s = 0; s < 3; ++s) {
        for (const auto& d : {design_lbg(sub, 32), design_random_lloyd(sub, 32, s)}) {
            for (std::size_t i = 1; i < d.distortions.size(); ++i) {
                if (d.distortions[i] > d.distortions[i - 1] + 1e-12) ++increases;
            }
        }
    }

    // LBG vs exhaustive partition oracle.
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
        const double cx = rng.uniform(-5, 5), cy = rng.uniform(-5, 5);
        const auto two = planted({{cx, cy}, {cx + 3, cy + 2}}, 5, 0.4, rng);
        worst = std::max(worst, std::abs(design_lbg(two, 2).distortions.back() - kmeans_oracle(two, 2)));
        const auto four = planted({{cx, cy}, {cx, cy + 4}, {cx + 4, cy}, {cx + 4, cy + 4}}, 2, 0.3, rng);
        worst = std::max(worst, std::abs(design_lbg(four, 4).distortions.back() - kmeans_oracle(four, 4)));
    }
    const double elapsed = seconds_since(t0);
    report(3, increases == 0 && worst <= 1e-9 && elapsed < 10.0,
           fmt("Lloyd monotone over %zu iterations (%zu increases); LBG vs k-means oracle max |diff| %.3g; %.1f s",
               checked, increases, worst, elapsed));
}

// ------------------------------------------------------------ 4: codec round trip

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void backward_adaptation(const std::vector<SignalBuffer>& clips, const Codebook& cb) {
    const auto t0 = Clock::now();
    int runs = 0, mismatches = 0;
    for (const Scheme scheme : {Scheme::scalar_adpcm, Scheme::vpred_scalar, Scheme::nlpvq}) {
        for (const auto& x : clips) {
            for (std::uint64_t i = 0; i < 20; ++i) {
                CodecConfig cfg;
                cfg.scheme = scheme;
                cfg.nq_bits_per_sample = 3.0;
                cfg.seed = mix_seed(4004, i);
                const Codebook* book = scheme == Scheme::nlpvq ? &cb : nullptr;
                const auto enc = encode(x, cfg, book);
                const auto bytes = serialize_stream(enc.stream);
                const auto y = decode(parse_stream(bytes), cfg, book);
                ++runs;
                if (!bit_identical(y.samples, enc.reconstruction.samples)) ++mismatches;
            }
        }
    }
    const double elapsed = seconds_since(t0);
    report(4, mismatches == 0 && elapsed < 300.0,
           fmt("decode(encode(x)) bit-identical in %d/%d runs (3 schemes x 2 clips x 20 seeds), %.1f s",
               runs - mismatches, runs, elapsed));
}

// ------------------------------------------------------------ 5: Jacobian

void gradient_check() {
    Rng rng(505);
    const double h = 1e-5;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto net = MlpPredictor::random(10, 2, 2, mix_seed(505, static_cast<std::uint64_t>(t)));
        const double scale = std::pow(10.0, rng.uniform(-2.0, 0.5));
        std::vector<double> ctx(10);
        for (auto& c : ctx) c = rng.uniform(-scale, scale);
        const auto jac = mlp_jacobian(net, ctx);
        const auto theta = net.parameters();
        const std::size_t p = theta.size();
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            auto plus = theta, minus = theta;
            plus[i] += h;
            minus[i] -= h;
            MlpPredictor np = net, nm = net;
            np.set_parameters(plus);
            nm.set_parameters(minus);
            const auto fp = mlp_forward(np, ctx);
            const auto fm = mlp_forward(nm, ctx);
            for (std::size_t o = 0; o < net.output_dim; ++o) {
                const double fd = (fp[o] - fm[o]) / (2 * h);
                diff += (jac[o * p + i] - fd) * (jac[o * p + i] - fd);
                ref += fd * fd;
            }
        }
        worst = std::max(worst, std::sqrt(diff / ref));
    }
    report(5, worst < 1e-4, fmt("Jacobian vs central differences on 100 draws: max relative error %.3g", worst));
}

// ------------------------------------------------------------ 6, 7, 9: codec statistics

double written_segsnr(const SignalBuffer& x, const EncodeResult& r, std::size_t frame_len) {
    const SignalBuffer y{round_to_pcm16(r.reconstruction.samples), x.sample_rate_hz};
    return segsnr(x, y, FramePlan{frame_len}).mean_db;
}

void scalar_memory(const std::vector<SignalBuffer>& clips, const std::vector<std::string>& names) {
    bool pass = true;
    std::string detail = "scalar-adpcm H0-H1 per sample:";
    for (std::size_t c = 0; c < clips.size(); ++c) {
        for (int bits = 2; bits <= 5; ++bits) {
            CodecConfig cfg;
            cfg.scheme = Scheme::scalar_adpcm;
            cfg.nq_bits_per_sample = bits;
            const auto r = encode(clips[c], cfg);
            const auto e = analyze_stream(r.stream.codes.indices, r.stream.codes.alphabet_size, 1);
            const double gap = e.h0_per_sample - e.h1_per_sample;
            pass = pass && gap <= 0.15;
            detail += fmt(" %s/Nq%d=%.3f", names[c].c_str(), bits, gap);
        }
    }
    report(6, pass, detail + " (limit 0.15)");
}

void vq_memory_and_floor(const std::vector<SignalBuffer>& clips, const std::vector<std::string>& names,
                         const Codebook& cb) {
    bool memory_pass = true, floor_pass = true;
    std::string memory = "nlpvq LBG M=64 H0-H1 per sample:";
    std::string floor = "SEGSNR at Nq=3:";
    for (std::size_t c = 0; c < clips.size(); ++c) {
        CodecConfig cfg;
        cfg.scheme = Scheme::scalar_adpcm;
        cfg.nq_bits_per_sample = 3.0;
        const double scalar_db = written_segsnr(clips[c], encode(clips[c], cfg), cfg.frame_len);

        cfg.scheme = Scheme::nlpvq;
        cfg.vector_dim = cb.dim;
        const auto r = encode(clips[c], cfg, &cb);
        const double vq_db = written_segsnr(clips[c], r, cfg.frame_len);
        const auto e = analyze_stream(r.stream.codes.indices, r.stream.codes.alphabet_size, cb.dim);
        const auto d = quantizer_diagnosis(e);
        const double gap = e.h0_per_sample - e.h1_per_sample;
        memory_pass = memory_pass && gap >= 0.3 && !d.exploits_memory;
        memory += fmt(" %s=%.3f (H0 %.3f, H1 %.3f, exploits_memory=%s)", names[c].c_str(), gap, e.h0_per_sample,
                      e.h1_per_sample, d.exploits_memory ? "true" : "false");

        floor_pass = floor_pass && scalar_db >= 12.0 && vq_db >= 8.0;
        floor += fmt(" %s scalar-adpcm %.2f dB, nlpvq %.2f dB;", names[c].c_str(), scalar_db, vq_db);
    }
    report(7, memory_pass, memory + " (need >= 0.3)");
    report(9, floor_pass, floor + " (floors 12 / 8 dB)");
}

// ------------------------------------------------------------ 8: LBG vs random init

void lbg_vs_random(const TrainingSet& bootstrap) {
    bool pass = true;
    std::string detail = "round-0 distortion LBG vs mean of 10 random inits:";
    for (const std::size_t m : {16u, 64u, 256u}) {
        const double lbg = vq_distortion(design_lbg(bootstrap, m).codebook, bootstrap);
        double mean = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            mean += vq_distortion(design_random_lloyd(bootstrap, m, mix_seed(808, s)).codebook, bootstrap);
        }
        mean /= 10.0;
        pass = pass && lbg < mean;
        detail += fmt(" M=%zu %.4e vs %.4e (%s);", m, lbg, mean, lbg < mean ? "lower" : "not lower");
    }
    report(8, pass, detail);
}

// ------------------------------------------------------------ 10: closed loop

struct ClosedLoopRun {
    ClosedLoopResult result;
    double seconds = 0.0;
};

ClosedLoopRun closed_loop(const SignalBuffer& corpus) {
    const std::vector<std::size_t> sizes = {16, 32, 64, 128, 256};
    const std::vector<DesignAlgorithm> algos = {DesignAlgorithm::random_lloyd, DesignAlgorithm::lbg};
    CodecConfig base;
    const auto t0 = Clock::now();
    ClosedLoopRun run{closed_loop_design(corpus, base, sizes, algos, 2), 0.0};
    run.seconds = seconds_since(t0);

    const auto& r = run.result;
    std::size_t empty = 0, regressions = 0, refined = 0;
    int max_round = 0;
    for (const auto& [key, cb] : r.codebooks) {
        for (auto n : cell_populations(cb, r.training_sets.at(key))) empty += n == 0;
    }
    for (const auto& e : r.log) {
        max_round = std::max(max_round, e.round);
        if (e.round == 0) continue;
        ++refined;
        if (e.distortion > e.previous_distortion) ++regressions;
    }
    const bool pass = r.codebooks.size() == sizes.size() * algos.size() && max_round == 2 && empty == 0 &&
                      regressions == 0 && refined == 2 * r.codebooks.size() && run.seconds < 1800.0;
    report(10, pass,
           fmt("closed loop: %zu codebooks, %d rounds, %zu empty cells, %zu/%zu refinements above previous "
               "distortion, %.1f s",
               r.codebooks.size(), max_round, empty, regressions, refined, run.seconds));
    return run;
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    try {
        const auto corpus = load_pcm(fixture("train_female_10s.wav"), PcmFormat::wav_pcm16);
        const std::vector<std::string> names = {"female", "male"};
        const std::vector<SignalBuffer> clips = {load_pcm(fixture("clip_female_2s.wav"), PcmFormat::wav_pcm16),
                                                 load_pcm(fixture("clip_male_2s.wav"), PcmFormat::wav_pcm16)};

        entropy_chain();
        entropy_oracle();
        gradient_check();
        const auto loop = closed_loop(corpus);
        const auto& lbg64 = loop.result.codebooks.at({DesignAlgorithm::lbg, 64});
        lloyd_and_lbg(loop.result.bootstrap);
        scalar_memory(clips, names);
        vq_memory_and_floor(clips, names, lbg64);
        lbg_vs_random(loop.result.bootstrap);
        backward_adaptation(clips, lbg64);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }

    std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
    int failed = 0;
    std::printf("\nsummary (%.0f s):\n", seconds_since(t0));
    for (const auto& v : verdicts) {
        std::printf("  criterion %2d: %s\n", v.id, v.pass ? "PASS" : "FAIL");
        failed += !v.pass;
    }
    std::printf("%zu/%zu criteria passed\n", verdicts.size() - failed, verdicts.size());
    return failed == 0 ? 0 : 1;
}
