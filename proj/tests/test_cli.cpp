#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "nlpvq/signal.hpp"
#include "support.hpp"

using namespace nlpvq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "nlpvq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

double printed_segsnr(const std::string& out) {
    const auto pos = out.find("SEGSNR ");
    REQUIRE(pos != std::string::npos);
    return std::stod(out.substr(pos + 7));
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> f;
    std::istringstream in(line);
    for (std::string s; std::getline(in, s, ',');) f.push_back(s);
    return f;
}

const std::string kFemale = test::fixture("clip_female_2s.wav").string();
const std::string kMale = test::fixture("clip_male_2s.wav").string();

}  // namespace

TEST_SUITE("cli usage") {

TEST_CASE("help and unknown subcommand") {
    CHECK(run_cli({"--help"}).code == cli::kExitOk);
    CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run_cli({}).code == cli::kExitUsage);
}

TEST_CASE("nlpvq without a codebook is a usage error") {
    test::TempDir dir;
    const auto r = run_cli({"encode", "--in", kFemale, "--out", (dir / "x.nlpq").string(), "--scheme", "nlpvq"});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("--codebook") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "x.nlpq"));
}

TEST_CASE("missing input leaves no outputs") {
    test::TempDir dir;
    auto r = run_cli({"encode", "--in", (dir / "none.wav").string(), "--out", (dir / "x.nlpq").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(fs::is_empty(dir.path()));

    r = run_cli({"train-codebook", "--in", (dir / "none.wav").string(), "--sizes", "16", "--out-dir",
                 (dir / "cb").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(fs::is_empty(dir.path()));
}

TEST_CASE("config must carry a seed") {
    test::TempDir dir;
    {
        std::ofstream(dir / "bad.json") << R"({"frame_len": 200})";
        std::ofstream(dir / "good.json") << R"({"seed": 3, "frame_len": 160})";
    }
    auto r = run_cli({"--config", (dir / "bad.json").string(), "encode", "--in", kFemale, "--out",
                      (dir / "a.nlpq").string()});
    CHECK(r.code != cli::kExitOk);
    CHECK_FALSE(fs::exists(dir / "a.nlpq"));

    r = run_cli({"--config", (dir / "good.json").string(), "encode", "--in", kFemale, "--out",
                 (dir / "a.nlpq").string()});
    CHECK(r.code == cli::kExitOk);
}

TEST_CASE("unreadable stream") {
    test::TempDir dir;
    std::ofstream(dir / "junk.nlpq") << "not a stream";
    CHECK(run_cli({"decode", "--in", (dir / "junk.nlpq").string(), "--out", (dir / "y.wav").string()}).code ==
          cli::kExitFailure);
    CHECK(run_cli({"analyze", "--in", (dir / "junk.nlpq").string()}).code == cli::kExitFailure);
    CHECK_FALSE(fs::exists(dir / "y.wav"));
}

}

TEST_SUITE("cli encode and decode") {

TEST_CASE("printed SEGSNR matches the decoded file") {
    test::TempDir dir;
    for (const std::string scheme : {"scalar-adpcm", "vpred-scalar"}) {
        CAPTURE(scheme);
        const auto stream = (dir / (scheme + ".nlpq")).string();
        const auto decoded = (dir / (scheme + ".wav")).string();
        const auto r = run_cli({"encode", "--in", kFemale, "--out", stream, "--scheme", scheme, "--nq", "3",
                                "--seed", "5"});
        REQUIRE(r.code == cli::kExitOk);
        REQUIRE(run_cli({"decode", "--in", stream, "--out", decoded, "--seed", "5"}).code == cli::kExitOk);

        const auto x = load_pcm(kFemale, PcmFormat::wav_pcm16);
        const auto y = load_pcm(decoded, PcmFormat::wav_pcm16);
        const double direct = segsnr(x, y, FramePlan{200}).mean_db;
        CHECK(std::abs(direct - printed_segsnr(r.out)) <= 1e-9);
    }
}

TEST_CASE("reconstruction written at encode equals the decoded file") {
    test::TempDir dir;
    REQUIRE(run_cli({"encode", "--in", kMale, "--out", (dir / "s.nlpq").string(), "--recon",
                     (dir / "r.wav").string(), "--nq", "4"})
                .code == cli::kExitOk);
    REQUIRE(run_cli({"decode", "--in", (dir / "s.nlpq").string(), "--out", (dir / "d.wav").string()}).code ==
            cli::kExitOk);
    CHECK(slurp(dir / "r.wav") == slurp(dir / "d.wav"));
}

TEST_CASE("re-running produces identical bytes") {
    test::TempDir dir;
    for (const char* name : {"a.nlpq", "b.nlpq"}) {
        REQUIRE(run_cli({"encode", "--in", kFemale, "--out", (dir / name).string(), "--scheme", "vpred-scalar",
                         "--nq", "2", "--seed", "11"})
                    .code == cli::kExitOk);
    }
    CHECK(slurp(dir / "a.nlpq") == slurp(dir / "b.nlpq"));
}

TEST_CASE("raw input encodes like the equivalent wav") {
    test::TempDir dir;
    const auto x = load_pcm(kFemale, PcmFormat::wav_pcm16);
    save_pcm(dir / "x.raw", x, PcmFormat::raw_pcm16_le);
    REQUIRE(run_cli({"encode", "--in", kFemale, "--out", (dir / "w.nlpq").string()}).code == cli::kExitOk);
    REQUIRE(run_cli({"--format", "raw", "--rate", "8000", "encode", "--in", (dir / "x.raw").string(), "--out",
                     (dir / "x.nlpq").string()})
                .code == cli::kExitOk);
    CHECK(slurp(dir / "w.nlpq") == slurp(dir / "x.nlpq"));
    CHECK(run_cli({"--format", "flac", "encode", "--in", kFemale, "--out", (dir / "y.nlpq").string()}).code !=
          cli::kExitOk);
}

}

TEST_SUITE("cli codebooks and analysis") {

TEST_CASE("train, encode with the codebook, decode, analyze") {
    test::TempDir dir;
    const auto cbdir = dir / "cb";
    auto r = run_cli({"train-codebook", "--in", kFemale, kMale, "--sizes", "16,64", "--algo", "lbg", "--rounds",
                      "0", "--seed", "7", "--out-dir", cbdir.string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(fs::exists(cbdir / "codebook_lbg_M16.json"));
    CHECK(fs::exists(cbdir / "codebook_lbg_M64.json"));
    const auto log = csv_lines(slurp(cbdir / "distortion_log.csv"));
    REQUIRE(log.size() == 3);
    CHECK(fields(log[1])[0] == "0");

    const auto cb = (cbdir / "codebook_lbg_M64.json").string();
    const auto stream = (dir / "v.nlpq").string();
    r = run_cli({"encode", "--in", kFemale, "--out", stream, "--scheme", "nlpvq", "--codebook", cb, "--seed", "7"});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.find("nq 3") != std::string::npos);

    CHECK(run_cli({"decode", "--in", stream, "--out", (dir / "v.wav").string(), "--seed", "7"}).code ==
          cli::kExitUsage);
    CHECK(run_cli({"decode", "--in", stream, "--out", (dir / "v.wav").string(), "--codebook",
                   (cbdir / "codebook_lbg_M16.json").string(), "--seed", "7"})
              .code == cli::kExitFailure);
    CHECK_FALSE(fs::exists(dir / "v.wav"));
    CHECK(run_cli({"decode", "--in", stream, "--out", (dir / "v.wav").string(), "--codebook", cb, "--seed", "7"})
              .code == cli::kExitOk);

    const auto scalar = (dir / "s.nlpq").string();
    REQUIRE(run_cli({"encode", "--in", kFemale, "--out", scalar, "--nq", "3"}).code == cli::kExitOk);
    const auto csv = (dir / "report.csv").string();
    const auto js = (dir / "report.json").string();
    r = run_cli({"analyze", "--in", scalar, stream, "--out", csv, "--json", js});
    REQUIRE(r.code == cli::kExitOk);
    const auto lines = csv_lines(slurp(csv));
    REQUIRE(lines.size() == 3);
    const auto json = nlohmann::json::parse(slurp(js));
    REQUIRE(json.size() == 2);
    CHECK(json[0].at("M") == 8);
    CHECK(json[0].at("nq").get<double>() == 3.0);
    CHECK(json[0].at("h0_per_sample").get<double>() == json[0].at("h0").get<double>());
    CHECK(json[1].at("M") == 64);
    CHECK(json[1].at("nq").get<double>() == 3.0);
    CHECK(json[1].at("h0_per_sample").get<double>() == json[1].at("h0").get<double>() / 2);
    CHECK(json[1].at("h1_per_sample").get<double>() == json[1].at("h1").get<double>() / 2);
}

TEST_CASE("matrix runs give one row per cell") {
    test::TempDir dir;
    REQUIRE(run_cli({"train-codebook", "--in", kFemale, kMale, "--sizes", "16", "--algo", "lbg", "--rounds", "0",
                     "--seed", "3", "--out-dir", (dir / "cb").string()})
                .code == cli::kExitOk);
    fs::copy_file(kFemale, dir / "f.wav");
    fs::copy_file(kMale, dir / "m.wav");
    std::ofstream(dir / "matrix.json") << R"({
        "seed": 3,
        "schemes": ["scalar-adpcm", "nlpvq"],
        "nq_values": [2],
        "inputs": ["f.wav", "m.wav"],
        "codebook_dir": "cb"
    })";
    const auto matrix = (dir / "matrix.json").string();

    auto r = run_cli({"analyze", "--matrix", matrix});
    REQUIRE(r.code == cli::kExitOk);
    const auto rows = csv_lines(r.out);
    CHECK(rows.size() == 1 + 2 * 2);

    r = run_cli({"report", "--matrix", matrix, "--out", (dir / "table.csv").string()});
    REQUIRE(r.code == cli::kExitOk);
    const auto table = csv_lines(slurp(dir / "table.csv"));
    REQUIRE(table.size() == 3);
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto f = fields(table[i]);
        REQUIRE(f.size() == 8);
        CHECK(f[3] == "2");
        CHECK(std::stod(f[4]) > 0.0);
    }

    const auto again = run_cli({"report", "--matrix", matrix});
    CHECK(again.out == slurp(dir / "table.csv"));

    std::ofstream(dir / "nocb.json") << R"({"seed": 3, "schemes": ["nlpvq"], "nq_values": [3], "inputs": ["f.wav"],
        "codebook_dir": "cb"})";
    CHECK(run_cli({"report", "--matrix", (dir / "nocb.json").string()}).code == cli::kExitFailure);
}

TEST_CASE("train-codebook writes one file per algorithm and size") {
    test::TempDir dir;
    const auto cbdir = dir / "cb";
    const auto r = run_cli({"train-codebook", "--in", kFemale, kMale, "--sizes", "16,32,64,128,256", "--algo",
                            "lbg,random", "--rounds", "2", "--seed", "7", "--out-dir", cbdir.string()});
    REQUIRE(r.code == cli::kExitOk);
    std::size_t codebooks = 0;
    for (const auto& e : fs::directory_iterator(cbdir)) {
        const auto name = e.path().filename().string();
        CHECK(name.find(".tmp") == std::string::npos);
        if (name.rfind("codebook_", 0) == 0) ++codebooks;
    }
    CHECK(codebooks == 10);
    const auto log = csv_lines(slurp(cbdir / "distortion_log.csv"));
    CHECK(log.size() == 1 + 10 * 3);
    for (std::size_t i = 1; i < log.size(); ++i) {
        const auto f = fields(log[i]);
        if (f[0] == "0") continue;
        CHECK(std::stod(f[6]) <= std::stod(f[5]));
    }
}

}
