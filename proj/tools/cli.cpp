#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlpvq/analysis.hpp"
#include "nlpvq/codec.hpp"
#include "nlpvq/error.hpp"

namespace nlpvq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> frame_len;
    std::optional<int> rate;
    std::string config;
    std::string format = "wav";
};

struct Profile {
    CodecConfig codec;
    DesignOptions design;
};

// Config file values first, then command-line overrides.
Profile load_profile(const GlobalOptions& g) {
    Profile p;
    if (!g.config.empty()) {
        std::ifstream in(g.config);
        if (!in) throw Error(Errc::io, "cannot open config " + g.config);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw Error(Errc::format, std::string("config: ") + e.what());
        }
        if (!j.contains("seed")) throw Error(Errc::format, "config must set \"seed\"");
        auto& c = p.codec;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.frame_len = j.value("frame_len", c.frame_len);
        c.vector_dim = j.value("vector_dim", c.vector_dim);
        c.predictor_order = j.value("predictor_order", c.predictor_order);
        c.initial_step = j.value("initial_step", c.initial_step);
        c.step_min = j.value("step_min", c.step_min);
        c.step_max = j.value("step_max", c.step_max);
        c.warm_start = j.value("warm_start", c.warm_start);
        if (j.contains("multipliers_file")) {
            fs::path mf = j.at("multipliers_file").get<std::string>();
            if (mf.is_relative()) mf = fs::path(g.config).parent_path() / mf;
            for (auto& [bits, table] : load_multiplier_tables(mf)) c.multipliers[bits] = table;
        }
        if (j.contains("training")) {
            const auto& t = j.at("training");
            auto& tc = c.training;
            tc.hidden_dim = t.value("hidden_dim", tc.hidden_dim);
            tc.num_starts = t.value("num_starts", tc.num_starts);
            tc.max_lm_iterations = t.value("max_lm_iterations", tc.max_lm_iterations);
            tc.mu_init = t.value("mu_init", tc.mu_init);
            tc.mu_increase = t.value("mu_increase", tc.mu_increase);
            tc.mu_decrease = t.value("mu_decrease", tc.mu_decrease);
            tc.weight_decay = t.value("weight_decay", tc.weight_decay);
            tc.committee = t.value("committee", tc.committee);
        }
        if (j.contains("design")) {
            const auto& d = j.at("design");
            p.design.tol = d.value("tol", p.design.tol);
            p.design.max_iters = d.value("max_iters", p.design.max_iters);
            p.design.split_epsilon = d.value("split_epsilon", p.design.split_epsilon);
        }
    }
    if (g.seed) p.codec.seed = *g.seed;
    if (g.frame_len) p.codec.frame_len = *g.frame_len;
    p.design.seed = p.codec.seed;
    return p;
}

// Write to a sibling temp file, then rename into place.
class AtomicWriter {
public:
    AtomicWriter() = default;
    AtomicWriter(const AtomicWriter&) = delete;
    AtomicWriter& operator=(const AtomicWriter&) = delete;
    ~AtomicWriter() {
        std::error_code ec;
        for (const auto& [tmp, dst] : pending_) fs::remove(tmp, ec);
    }

    void stage(const fs::path& dst, const std::string& bytes) {
        fs::path tmp = dst;
        tmp += ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
        out << bytes;
        out.close();
        if (!out) throw Error(Errc::io, "short write to " + tmp.string());
        pending_.emplace_back(tmp, dst);
    }

    void stage(const fs::path& dst, const std::vector<std::uint8_t>& bytes) {
        stage(dst, std::string(bytes.begin(), bytes.end()));
    }

    void commit() {
        for (const auto& [tmp, dst] : pending_) fs::rename(tmp, dst);
        pending_.clear();
    }

private:
    std::vector<std::pair<fs::path, fs::path>> pending_;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string codebook_filename(DesignAlgorithm algorithm, std::size_t size) {
    return "codebook_" + std::string(to_string(algorithm)) + "_M" + std::to_string(size) + ".json";
}

SignalBuffer read_signal(const std::string& path, const GlobalOptions& g) {
    return load_pcm(path, parse_pcm_format(g.format), g.rate);
}

std::string fixed(double v, int digits = 12) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

// ---------------------------------------------------------------- train-codebook

struct TrainArgs {
    std::vector<std::string> inputs;
    std::string sizes = "16,32,64,128,256";
    std::string algos = "lbg,random";
    int rounds = 2;
    std::string out_dir = ".";
};

int cmd_train_codebook(const TrainArgs& a, const GlobalOptions& g, std::ostream& out) {
    const Profile p = load_profile(g);
    std::vector<std::size_t> sizes;
    for (const auto& s : split_list(a.sizes)) sizes.push_back(static_cast<std::size_t>(std::stoul(s)));
    std::vector<DesignAlgorithm> algos;
    for (const auto& s : split_list(a.algos)) algos.push_back(parse_design_algorithm(s));

    SignalBuffer corpus;
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        const auto part = read_signal(a.inputs[i], g);
        if (i == 0) corpus.sample_rate_hz = part.sample_rate_hz;
        corpus.samples.insert(corpus.samples.end(), part.samples.begin(), part.samples.end());
    }

    const auto result = closed_loop_design(corpus, p.codec, sizes, algos, a.rounds, p.design);

    fs::create_directories(a.out_dir);
    AtomicWriter writer;
    for (const auto& [key, cb] : result.codebooks) {
        writer.stage(fs::path(a.out_dir) / codebook_filename(key.first, key.second), codebook_to_json(cb) + "\n");
    }
    std::ostringstream log;
    log << "round,algorithm,M,nq,training_vectors,previous_distortion,distortion\n";
    log << std::setprecision(17);
    for (const auto& e : result.log) {
        log << e.round << ',' << to_string(e.algorithm) << ',' << e.codebook_size << ',' << e.nq << ','
            << e.training_vectors << ',';
        if (!std::isnan(e.previous_distortion)) log << e.previous_distortion;
        log << ',' << e.distortion << '\n';
    }
    writer.stage(fs::path(a.out_dir) / "distortion_log.csv", log.str());
    writer.commit();
    out << "wrote " << result.codebooks.size() << " codebooks to " << a.out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- encode / decode

struct EncodeArgs {
    std::string input;
    std::string output;
    std::string scheme = "scalar-adpcm";
    std::optional<double> nq;
    std::string codebook;
    std::string recon;
};

int cmd_encode(const EncodeArgs& a, const GlobalOptions& g, std::ostream& out) {
    Profile p = load_profile(g);
    CodecConfig& cfg = p.codec;
    cfg.scheme = parse_scheme(a.scheme);
    std::optional<Codebook> cb;
    if (!a.codebook.empty()) cb = load_codebook(a.codebook);
    if (cfg.scheme == Scheme::nlpvq) {
        cfg.vector_dim = cb->dim;
        cfg.nq_bits_per_sample = a.nq.value_or(nq_equivalent(cb->size(), cb->dim));
    } else {
        cfg.nq_bits_per_sample = a.nq.value_or(3.0);
    }
    const SignalBuffer x = read_signal(a.input, g);
    const auto result = encode(x, cfg, cb ? &*cb : nullptr);

    // Report fidelity of what the decoder will write: the pcm16-rounded reconstruction.
    const SignalBuffer written{round_to_pcm16(result.reconstruction.samples), result.reconstruction.sample_rate_hz};
    const auto snr = segsnr(x, written, FramePlan{cfg.frame_len});

    AtomicWriter writer;
    writer.stage(a.output, serialize_stream(result.stream));
    if (!a.recon.empty()) writer.stage(a.recon, encode_pcm(written, parse_pcm_format(g.format)));
    writer.commit();
    out << "scheme " << to_string(cfg.scheme) << " nq " << cfg.nq_bits_per_sample << " codes "
        << result.stream.codes.indices.size() << '\n';
    out << "SEGSNR " << fixed(snr.mean_db) << " dB\n";
    return kExitOk;
}

struct DecodeArgs {
    std::string input;
    std::string output;
    std::string codebook;
};

int cmd_decode(const DecodeArgs& a, const GlobalOptions& g, std::ostream& out) {
    const Profile p = load_profile(g);
    const EncodedStream stream = load_stream(a.input);
    std::optional<Codebook> cb;
    if (!a.codebook.empty()) cb = load_codebook(a.codebook);
    if (stream.header.scheme == Scheme::nlpvq && !cb) {
        throw CLI::ValidationError("--codebook", "required to decode an nlpvq stream");
    }
    const SignalBuffer y = decode(stream, p.codec, cb ? &*cb : nullptr);
    AtomicWriter writer;
    writer.stage(a.output, encode_pcm(y, parse_pcm_format(g.format)));
    writer.commit();
    out << "decoded " << y.size() << " samples\n";
    return kExitOk;
}

// ---------------------------------------------------------------- matrix runs

struct MatrixCell {
    Scheme scheme;
    double nq;
    std::string input;
    std::optional<Codebook> codebook;
};

struct ExperimentMatrix {
    std::vector<Scheme> schemes;
    std::vector<double> nq_values;
    std::vector<std::string> inputs;
    fs::path codebook_dir;
    DesignAlgorithm algorithm = DesignAlgorithm::lbg;
    std::uint64_t seed = 1;
    std::vector<MatrixCell> cells;
};

ExperimentMatrix load_matrix(const std::string& path, std::size_t vector_dim) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open matrix " + path);
    ExperimentMatrix m;
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& s) { return fs::path(s).is_relative() ? (base / s).string() : s; };
    try {
        const json j = json::parse(in);
        if (!j.contains("seed")) throw Error(Errc::format, "matrix must set \"seed\"");
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& s : j.at("schemes")) m.schemes.push_back(parse_scheme(s.get<std::string>()));
        m.nq_values = j.at("nq_values").get<std::vector<double>>();
        for (const auto& s : j.at("inputs")) m.inputs.push_back(resolve(s.get<std::string>()));
        m.codebook_dir = resolve(j.value("codebook_dir", std::string(".")));
        m.algorithm = parse_design_algorithm(j.value("algorithm", std::string("lbg")));
    } catch (const json::exception& e) {
        throw Error(Errc::format, std::string("matrix: ") + e.what());
    }
    for (auto scheme : m.schemes) {
        for (double nq : m.nq_values) {
            std::optional<Codebook> cb;
            if (scheme == Scheme::nlpvq) {
                const double size = std::exp2(nq * static_cast<double>(vector_dim));
                if (std::abs(size - std::round(size)) > 1e-9) {
                    throw Error(Errc::invalid_argument, "nq " + std::to_string(nq) + " gives a non-integer codebook size");
                }
                cb = load_codebook(m.codebook_dir / codebook_filename(m.algorithm, static_cast<std::size_t>(std::round(size))));
            } else {
                CodecConfig probe;
                probe.nq_bits_per_sample = nq;
                probe.scalar_bits();
            }
            for (const auto& input : m.inputs) m.cells.push_back({scheme, nq, input, cb});
        }
    }
    return m;
}

struct CellOutcome {
    EncodeResult encoded;
    SegSnrReport snr;
};

CellOutcome run_cell(const MatrixCell& cell, Profile p, const GlobalOptions& g) {
    p.codec.scheme = cell.scheme;
    p.codec.nq_bits_per_sample = cell.nq;
    if (cell.codebook) p.codec.vector_dim = cell.codebook->dim;
    const SignalBuffer x = read_signal(cell.input, g);
    CellOutcome o;
    o.encoded = encode(x, p.codec, cell.codebook ? &*cell.codebook : nullptr);
    const SignalBuffer written{round_to_pcm16(o.encoded.reconstruction.samples), x.sample_rate_hz};
    o.snr = segsnr(x, written, FramePlan{p.codec.frame_len});
    return o;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::vector<std::string> inputs;
    std::string matrix;
    std::string out;
    std::string json_out;
    double design_tol = kDefaultDesignTol;
    double memory_tol = kDefaultMemoryTol;
};

int cmd_analyze(const AnalyzeArgs& a, const GlobalOptions& g, std::ostream& out) {
    if (a.inputs.empty() == a.matrix.empty()) {
        throw CLI::ValidationError("analyze", "give either bitstream inputs or --matrix");
    }
    std::ostringstream csv;
    csv << report_csv_header() << '\n';
    json reports = json::array();
    auto add = [&](const std::string& label, const EncodedStream& s) {
        const auto report = analyze_stream(s.codes.indices, s.codes.alphabet_size,
                                           s.header.scheme == Scheme::nlpvq ? s.header.vector_dim : 1);
        const auto diag = quantizer_diagnosis(report, a.design_tol, a.memory_tol);
        csv << report_csv_row(label, std::string(to_string(s.header.scheme)), report, diag) << '\n';
        json j = report_to_json(report, diag);
        j["file"] = label;
        j["scheme"] = to_string(s.header.scheme);
        reports.push_back(std::move(j));
    };

    if (!a.matrix.empty()) {
        Profile p = load_profile(g);
        const auto m = load_matrix(a.matrix, p.codec.vector_dim);
        p.codec.seed = g.seed.value_or(m.seed);
        for (const auto& cell : m.cells) add(cell.input, run_cell(cell, p, g).encoded.stream);
    } else {
        for (const auto& in : a.inputs) add(in, load_stream(in));
    }

    AtomicWriter writer;
    if (!a.out.empty()) writer.stage(a.out, csv.str());
    if (!a.json_out.empty()) writer.stage(a.json_out, reports.dump(2) + "\n");
    writer.commit();
    if (a.out.empty()) out << csv.str();
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::string matrix;
    std::string out;
};

int cmd_report(const ReportArgs& a, const GlobalOptions& g, std::ostream& out) {
    Profile p = load_profile(g);
    const auto m = load_matrix(a.matrix, p.codec.vector_dim);
    p.codec.seed = g.seed.value_or(m.seed);

    std::map<std::pair<int, double>, std::vector<SegSnrReport>> groups;
    std::map<std::pair<int, double>, std::vector<EntropyReport>> entropies;
    for (const auto& cell : m.cells) {
        auto o = run_cell(cell, p, g);
        const auto key = std::make_pair(static_cast<int>(cell.scheme), cell.nq);
        groups[key].push_back(std::move(o.snr));
        const auto& s = o.encoded.stream;
        entropies[key].push_back(analyze_stream(s.codes.indices, s.codes.alphabet_size,
                                                cell.scheme == Scheme::nlpvq ? s.header.vector_dim : 1));
    }

    std::ostringstream csv;
    csv << "scheme,algorithm,nq,files,segsnr_db,sigma_db,h0_per_sample,h1_per_sample\n";
    csv << std::setprecision(6);
    for (const auto& [key, reports] : groups) {
        const auto pooled = pool_segsnr(reports);
        double mean_of_means = 0.0;
        for (const auto& r : reports) mean_of_means += r.mean_db;
        mean_of_means /= static_cast<double>(reports.size());
        double h0 = 0.0, h1 = 0.0;
        for (const auto& e : entropies[key]) {
            h0 += e.h0_per_sample;
            h1 += e.h1_per_sample;
        }
        const double n = static_cast<double>(entropies[key].size());
        const auto scheme = static_cast<Scheme>(key.first);
        csv << to_string(scheme) << ',' << (scheme == Scheme::nlpvq ? to_string(m.algorithm) : "-") << ','
            << key.second << ',' << reports.size() << ',' << mean_of_means << ','
            << pooled.across_files_std_db.value_or(0.0) << ',' << h0 / n << ',' << h1 / n << '\n';
    }
    AtomicWriter writer;
    if (!a.out.empty()) {
        writer.stage(a.out, csv.str());
        writer.commit();
    } else {
        out << csv.str();
    }
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonlinear predictive vector quantization speech codec"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Seed for predictor initialization and random codebooks");
    app.add_option("--frame-len", g.frame_len, "Frame length in samples (default 200)");
    app.add_option("--rate", g.rate, "Sample rate override (required meaning for raw input)");
    app.add_option("--config", g.config, "JSON config file (must contain \"seed\")")->check(CLI::ExistingFile);
    app.add_option("--format", g.format, "PCM file format: wav or raw")
        ->check(CLI::IsMember({"wav", "raw", "wav-pcm16", "raw-pcm16-le"}));

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train-codebook", "Closed-loop codebook design");
    train_cmd->add_option("--in", train.inputs, "Training audio (concatenated)")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--sizes", train.sizes, "Comma-separated codebook sizes");
    train_cmd->add_option("--algo", train.algos, "Comma-separated algorithms: lbg,random");
    train_cmd->add_option("--rounds", train.rounds, "Closed-loop redesign rounds")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--out-dir,--out", train.out_dir, "Output directory");

    EncodeArgs enc;
    auto* enc_cmd = app.add_subcommand("encode", "Encode PCM to an NLPQ bitstream");
    enc_cmd->add_option("--in", enc.input, "Input audio")->required()->check(CLI::ExistingFile);
    enc_cmd->add_option("--out", enc.output, "Output bitstream")->required();
    enc_cmd->add_option("--scheme", enc.scheme, "scalar-adpcm | vpred-scalar | nlpvq")
        ->check(CLI::IsMember({"scalar-adpcm", "vpred-scalar", "nlpvq"}));
    enc_cmd->add_option("--nq", enc.nq, "Bits per sample");
    enc_cmd->add_option("--codebook", enc.codebook, "Codebook JSON (nlpvq)")->check(CLI::ExistingFile);
    enc_cmd->add_option("--recon", enc.recon, "Also write the reconstruction as PCM");

    DecodeArgs dec;
    auto* dec_cmd = app.add_subcommand("decode", "Decode an NLPQ bitstream to PCM");
    dec_cmd->add_option("--in", dec.input, "Input bitstream")->required()->check(CLI::ExistingFile);
    dec_cmd->add_option("--out", dec.output, "Output audio")->required();
    dec_cmd->add_option("--codebook", dec.codebook, "Codebook JSON (nlpvq)")->check(CLI::ExistingFile);

    AnalyzeArgs ana;
    auto* ana_cmd = app.add_subcommand("analyze", "Zero/first-order codeword entropies");
    ana_cmd->add_option("--in", ana.inputs, "Bitstreams to analyze")->check(CLI::ExistingFile);
    ana_cmd->add_option("--matrix", ana.matrix, "Experiment matrix JSON")->check(CLI::ExistingFile);
    ana_cmd->add_option("--out", ana.out, "CSV output (default stdout)");
    ana_cmd->add_option("--json", ana.json_out, "JSON report output");
    ana_cmd->add_option("--design-tol", ana.design_tol, "Bits below log2(M) still counted as well designed");
    ana_cmd->add_option("--memory-tol", ana.memory_tol, "Maximum H0-H1 gap for a memory-exploiting quantizer");

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "SEGSNR table over an experiment matrix");
    rep_cmd->add_option("--matrix", rep.matrix, "Experiment matrix JSON")->required()->check(CLI::ExistingFile);
    rep_cmd->add_option("--out", rep.out, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
        if (enc_cmd->parsed() && enc.scheme == "nlpvq" && enc.codebook.empty()) {
            throw CLI::ValidationError("--codebook", "required for --scheme nlpvq");
        }
        if (enc_cmd->parsed() && enc.scheme != "nlpvq" && !enc.codebook.empty()) {
            throw CLI::ValidationError("--codebook", "only valid with --scheme nlpvq");
        }
        if (train_cmd->parsed()) return cmd_train_codebook(train, g, out);
        if (enc_cmd->parsed()) return cmd_encode(enc, g, out);
        if (dec_cmd->parsed()) return cmd_decode(dec, g, out);
        if (ana_cmd->parsed()) return cmd_analyze(ana, g, out);
        if (rep_cmd->parsed()) return cmd_report(rep, g, out);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace nlpvq::cli
