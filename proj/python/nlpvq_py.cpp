#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nlpvq/analysis.hpp"
#include "nlpvq/codec.hpp"
#include "nlpvq/error.hpp"

namespace py = pybind11;
using namespace nlpvq;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> to_matrix(const std::vector<double>& v, std::size_t cols) {
    const auto rows = static_cast<py::ssize_t>(cols == 0 ? 0 : v.size() / cols);
    py::array_t<double> out({rows, static_cast<py::ssize_t>(cols)});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

TrainingSet training_set_from(const DoubleArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected an (n, dim) array");
    TrainingSet ts;
    ts.dim = static_cast<std::size_t>(a.shape(1));
    ts.vectors.assign(a.data(), a.data() + a.size());
    return ts;
}

Codebook codebook_from(const DoubleArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected an (M, dim) array");
    Codebook cb;
    cb.dim = static_cast<std::size_t>(a.shape(1));
    cb.codewords.assign(a.data(), a.data() + a.size());
    return cb;
}

CodecConfig make_config(const std::string& scheme, double nq, std::uint64_t seed, std::size_t frame_len,
                        const Codebook* cb) {
    CodecConfig cfg;
    cfg.scheme = parse_scheme(scheme);
    cfg.nq_bits_per_sample = nq;
    cfg.seed = seed;
    cfg.frame_len = frame_len;
    if (cb) cfg.vector_dim = cb->dim;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(nlpvq, m) {
    m.doc() = "Backward-adaptive nonlinear predictive vector quantization of speech";

    static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            if (e.code() == Errc::invalid_argument || e.code() == Errc::dimension_mismatch) {
                PyErr_SetString(PyExc_ValueError, e.what());
            } else {
                py::set_error(error_type, e.what());
            }
        }
    });

    // Signal
    m.def("load_pcm",
          [](const std::filesystem::path& path, const std::string& format, std::optional<int> rate) {
              const auto s = load_pcm(path, parse_pcm_format(format), rate);
              return py::make_tuple(to_array(s.samples), s.sample_rate_hz);
          },
          py::arg("path"), py::arg("format") = "wav", py::arg("rate") = py::none(),
          "Read mono 16-bit PCM; returns (samples in [-1, 1), sample_rate).");
    m.def("save_pcm",
          [](const std::filesystem::path& path, const DoubleArray& samples, int rate, const std::string& format) {
              save_pcm(path, SignalBuffer{to_vector(samples), rate}, parse_pcm_format(format));
          },
          py::arg("path"), py::arg("samples"), py::arg("rate") = 8000, py::arg("format") = "wav");
    m.def("segsnr",
          [](const DoubleArray& original, const DoubleArray& reconstructed, std::size_t frame_len) {
              const auto r = segsnr(SignalBuffer{to_vector(original)}, SignalBuffer{to_vector(reconstructed)},
                                    FramePlan{frame_len});
              return py::make_tuple(r.mean_db, to_array(r.per_frame_db));
          },
          py::arg("original"), py::arg("reconstructed"), py::arg("frame_len") = 200,
          "Segmental SNR in dB; returns (mean, per-frame values).");

    // Predictors
    m.def("fit_lpc",
          [](const DoubleArray& history, std::size_t order) {
              const auto h = to_vector(history);
              const auto p = fit_linear_predictor(h, order);
              return to_array(p.coefficients);
          },
          py::arg("history"), py::arg("order") = 10);

    py::class_<MlpPredictor>(m, "MlpPredictor")
        .def_static("zeros", &MlpPredictor::zeros, py::arg("context_len") = 10, py::arg("hidden") = 2,
                    py::arg("outputs") = 2)
        .def_static(
            "random",
            [](std::uint64_t seed, std::size_t in, std::size_t hid, std::size_t out) {
                return MlpPredictor::random(in, hid, out, seed);
            },
            py::arg("seed"), py::arg("context_len") = 10, py::arg("hidden") = 2, py::arg("outputs") = 2)
        .def_property_readonly("parameter_count", &MlpPredictor::parameter_count)
        .def("parameters", [](const MlpPredictor& n) { return to_array(n.parameters()); })
        .def("set_parameters", [](MlpPredictor& n, const DoubleArray& p) { n.set_parameters(to_vector(p)); })
        .def("forward",
             [](const MlpPredictor& n, const DoubleArray& ctx) { return to_array(mlp_forward(n, to_vector(ctx))); },
             "Predict the next N samples from a context ordered most recent first.")
        .def("to_json", [](const MlpPredictor& n) { return predictor_to_json(n); })
        .def_static("from_json", &predictor_from_json);

    // Scalar quantizer
    m.def("jayant_quantize",
          [](const DoubleArray& residuals, int bits, double initial_step) {
              auto state = JayantState::make(bits, initial_step);
              std::vector<int> codes;
              std::vector<double> values;
              for (double r : to_vector(residuals)) {
                  auto q = sq_quantize(state, r);
                  codes.push_back(q.code);
                  values.push_back(q.value);
                  state = q.next;
              }
              return py::make_tuple(codes, to_array(values));
          },
          py::arg("residuals"), py::arg("bits"), py::arg("initial_step") = kDefaultInitialStep,
          "Quantize a residual sequence with an adapting step; returns (codes, values).");
    m.def("jayant_dequantize",
          [](const std::vector<int>& codes, int bits, double initial_step) {
              auto state = JayantState::make(bits, initial_step);
              std::vector<double> values;
              for (int c : codes) {
                  auto q = sq_dequantize(state, c);
                  values.push_back(q.value);
                  state = q.next;
              }
              return to_array(values);
          },
          py::arg("codes"), py::arg("bits"), py::arg("initial_step") = kDefaultInitialStep);

    // Vector quantizer
    py::class_<Codebook>(m, "Codebook")
        .def(py::init([](const DoubleArray& codewords) {
                 auto cb = codebook_from(codewords);
                 cb.validate();
                 return cb;
             }),
             py::arg("codewords"))
        .def_property_readonly("dim", [](const Codebook& cb) { return cb.dim; })
        .def_property_readonly("size", &Codebook::size)
        .def_property_readonly("codewords", [](const Codebook& cb) { return to_matrix(cb.codewords, cb.dim); })
        .def_property_readonly("algorithm", [](const Codebook& cb) { return std::string(to_string(cb.provenance.algorithm)); })
        .def("sha256", [](const Codebook& cb) { return to_hex(codebook_sha256(cb)); })
        .def("encode",
             [](const Codebook& cb, const DoubleArray& v) {
                 const auto x = to_vector(v);
                 const auto match = vq_encode(cb, x);
                 return py::make_tuple(match.index, match.distance);
             },
             "Nearest codeword; returns (index, squared distance).")
        .def("distortion", [](const Codebook& cb, const DoubleArray& vectors) {
            return vq_distortion(cb, training_set_from(vectors));
        })
        .def("save", [](const Codebook& cb, const std::filesystem::path& p) { save_codebook(p, cb); })
        .def_static("load", &load_codebook)
        .def("__len__", &Codebook::size);

    m.def("design_codebook",
          [](const DoubleArray& vectors, std::size_t size, const std::string& algorithm, std::uint64_t seed) {
              const auto ts = training_set_from(vectors);
              const auto algo = parse_design_algorithm(algorithm);
              auto d = algo == DesignAlgorithm::lbg ? design_lbg(ts, size) : design_random_lloyd(ts, size, seed);
              return py::make_tuple(d.codebook, to_array(d.distortions));
          },
          py::arg("vectors"), py::arg("size"), py::arg("algorithm") = "lbg", py::arg("seed") = 1,
          "Design a codebook; returns (codebook, distortion history).");

    // Codec
    py::class_<EncodedStream>(m, "EncodedStream")
        .def_property_readonly("scheme", [](const EncodedStream& s) { return std::string(to_string(s.header.scheme)); })
        .def_property_readonly("alphabet_size", [](const EncodedStream& s) { return s.codes.alphabet_size; })
        .def_property_readonly("vector_dim", [](const EncodedStream& s) { return s.header.vector_dim; })
        .def_property_readonly("total_samples", [](const EncodedStream& s) { return s.header.total_samples; })
        .def_property_readonly("nq", [](const EncodedStream& s) { return s.header.nq(); })
        .def_property_readonly("indices", [](const EncodedStream& s) { return s.codes.indices; })
        .def("to_bytes",
             [](const EncodedStream& s) {
                 const auto b = serialize_stream(s);
                 return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
             })
        .def_static("from_bytes", [](const py::bytes& data) {
            const std::string_view view = data;
            return parse_stream(std::span(reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
        });

    m.def("encode",
          [](const DoubleArray& samples, const std::string& scheme, double nq, const Codebook* codebook,
             std::uint64_t seed, std::size_t frame_len, int rate) {
              const auto cfg = make_config(scheme, nq, seed, frame_len, codebook);
              EncodeResult r;
              {
                  py::gil_scoped_release release;
                  r = encode(SignalBuffer{to_vector(samples), rate}, cfg, codebook);
              }
              return py::make_tuple(std::move(r.stream), to_array(r.reconstruction.samples),
                                    to_matrix(r.residuals.vectors, r.residuals.dim));
          },
          py::arg("samples"), py::arg("scheme") = "scalar-adpcm", py::arg("nq") = 3.0,
          py::arg("codebook") = nullptr, py::arg("seed") = 1, py::arg("frame_len") = 200, py::arg("rate") = 8000,
          "Encode; returns (stream, reconstruction, residual vectors).");

    m.def("decode",
          [](const EncodedStream& stream, const Codebook* codebook, std::uint64_t seed) {
              CodecConfig profile;
              profile.seed = seed;
              SignalBuffer y;
              {
                  py::gil_scoped_release release;
                  y = decode(stream, profile, codebook);
              }
              return to_array(y.samples);
          },
          py::arg("stream"), py::arg("codebook") = nullptr, py::arg("seed") = 1);

    // Analysis
    m.def("entropy_h0", [](const std::vector<std::uint32_t>& s, std::size_t m) { return entropy_h0(s, m); },
          py::arg("stream"), py::arg("alphabet_size"));
    m.def("entropy_h1", [](const std::vector<std::uint32_t>& s, std::size_t m) { return entropy_h1(s, m); },
          py::arg("stream"), py::arg("alphabet_size"));
    m.def("analyze",
          [](const EncodedStream& s, double design_tol, double memory_tol) {
              const std::size_t n = s.header.scheme == Scheme::nlpvq ? s.header.vector_dim : 1;
              const auto report = analyze_stream(s.codes.indices, s.codes.alphabet_size, n);
              const auto diag = quantizer_diagnosis(report, design_tol, memory_tol);
              py::dict d;
              d["M"] = report.alphabet_size;
              d["N"] = report.vector_dim;
              d["nq"] = report.nq;
              d["h0"] = report.h0;
              d["h1"] = report.h1;
              d["h0_per_sample"] = report.h0_per_sample;
              d["h1_per_sample"] = report.h1_per_sample;
              d["well_designed"] = diag.well_designed;
              d["exploits_memory"] = diag.exploits_memory;
              return d;
          },
          py::arg("stream"), py::arg("design_tol") = kDefaultDesignTol, py::arg("memory_tol") = kDefaultMemoryTol);
}
