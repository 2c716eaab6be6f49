#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nlpvq/error.hpp"
#include "nlpvq/predictor.hpp"
#include "nlpvq/rng.hpp"

namespace nlpvq {

MlpPredictor MlpPredictor::zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim) {
    MlpPredictor net;
    net.input_dim = input_dim;
    net.hidden_dim = hidden_dim;
    net.output_dim = output_dim;
    net.hidden_weights.assign(hidden_dim * input_dim, 0.0);
    net.hidden_bias.assign(hidden_dim, 0.0);
    net.output_weights.assign(output_dim * hidden_dim, 0.0);
    net.output_bias.assign(output_dim, 0.0);
    return net;
}

MlpPredictor MlpPredictor::random(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                                  std::uint64_t seed) {
    MlpPredictor net = zeros(input_dim, hidden_dim, output_dim);
    Rng rng(seed);
    for (auto* block : {&net.hidden_weights, &net.hidden_bias, &net.output_weights, &net.output_bias}) {
        for (double& w : *block) w = rng.uniform(-0.5, 0.5);
    }
    return net;
}

std::size_t MlpPredictor::parameter_count() const noexcept {
    return hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
}

std::vector<double> MlpPredictor::parameters() const {
    std::vector<double> theta;
    theta.reserve(parameter_count());
    for (const auto* block : {&hidden_weights, &hidden_bias, &output_weights, &output_bias}) {
        theta.insert(theta.end(), block->begin(), block->end());
    }
    return theta;
}

void MlpPredictor::set_parameters(std::span<const double> theta) {
    if (theta.size() != parameter_count()) throw Error(Errc::dimension_mismatch, "parameter vector size mismatch");
    auto it = theta.begin();
    for (auto* block : {&hidden_weights, &hidden_bias, &output_weights, &output_bias}) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(block->size()), block->begin());
        it += static_cast<std::ptrdiff_t>(block->size());
    }
}

void MlpPredictor::validate() const {
    if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
        throw Error(Errc::invalid_argument, "predictor dimensions must be positive");
    }
    if (hidden_weights.size() != hidden_dim * input_dim || hidden_bias.size() != hidden_dim ||
        output_weights.size() != output_dim * hidden_dim || output_bias.size() != output_dim) {
        throw Error(Errc::dimension_mismatch, "predictor shapes inconsistent with dimensions");
    }
    for (double w : parameters()) {
        if (!std::isfinite(w)) throw Error(Errc::invalid_argument, "non-finite predictor parameter");
    }
}

namespace {

void check_context(const MlpPredictor& net, std::span<const double> context) {
    if (context.size() != net.input_dim) {
        throw Error(Errc::dimension_mismatch, "context length " + std::to_string(context.size()) +
                                                  " != predictor input_dim " + std::to_string(net.input_dim));
    }
}

void hidden_activations(const MlpPredictor& net, std::span<const double> context, std::span<double> hidden) {
    for (std::size_t j = 0; j < net.hidden_dim; ++j) {
        double a = net.hidden_bias[j];
        const double* w = net.hidden_weights.data() + j * net.input_dim;
        for (std::size_t i = 0; i < net.input_dim; ++i) a += w[i] * context[i];
        hidden[j] = std::tanh(a);
    }
}

}  // namespace

std::vector<double> mlp_forward(const MlpPredictor& net, std::span<const double> context) {
    check_context(net, context);
    std::vector<double> hidden(net.hidden_dim);
    hidden_activations(net, context, hidden);
    std::vector<double> out(net.output_bias);
    for (std::size_t o = 0; o < net.output_dim; ++o) {
        const double* w = net.output_weights.data() + o * net.hidden_dim;
        for (std::size_t j = 0; j < net.hidden_dim; ++j) out[o] += w[j] * hidden[j];
    }
    return out;
}

std::vector<double> mlp_jacobian(const MlpPredictor& net, std::span<const double> context) {
    check_context(net, context);
    const std::size_t p = net.parameter_count();
    std::vector<double> hidden(net.hidden_dim);
    hidden_activations(net, context, hidden);

    const std::size_t off_hb = net.hidden_dim * net.input_dim;
    const std::size_t off_ow = off_hb + net.hidden_dim;
    const std::size_t off_ob = off_ow + net.output_dim * net.hidden_dim;

    std::vector<double> jac(net.output_dim * p, 0.0);
    for (std::size_t o = 0; o < net.output_dim; ++o) {
        double* row = jac.data() + o * p;
        for (std::size_t j = 0; j < net.hidden_dim; ++j) {
            const double slope = net.output_weights[o * net.hidden_dim + j] * (1.0 - hidden[j] * hidden[j]);
            for (std::size_t i = 0; i < net.input_dim; ++i) row[j * net.input_dim + i] = slope * context[i];
            row[off_hb + j] = slope;
            row[off_ow + o * net.hidden_dim + j] = hidden[j];
        }
        row[off_ob + o] = 1.0;
    }
    return jac;
}

void PredictorDataset::add(std::span<const double> context, std::span<const double> target) {
    if (context.size() != input_dim || target.size() != output_dim) {
        throw Error(Errc::dimension_mismatch, "dataset pair has wrong dimensions");
    }
    contexts.insert(contexts.end(), context.begin(), context.end());
    targets.insert(targets.end(), target.begin(), target.end());
}

void PredictorDataset::validate() const {
    if (input_dim == 0 || output_dim == 0) throw Error(Errc::invalid_argument, "dataset dimensions must be positive");
    if (contexts.size() % input_dim != 0 || targets.size() != size() * output_dim) {
        throw Error(Errc::dimension_mismatch, "dataset storage inconsistent with dimensions");
    }
    if (size() == 0) throw Error(Errc::invalid_argument, "empty training dataset");
    for (double v : targets) {
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite training target");
    }
    for (double v : contexts) {
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite training context");
    }
}

std::vector<double> committee_forward(const Committee& committee, std::span<const double> context) {
    if (committee.members.empty()) throw Error(Errc::invalid_argument, "empty committee");
    std::vector<double> sum = mlp_forward(committee.members.front(), context);
    for (std::size_t k = 1; k < committee.members.size(); ++k) {
        const auto out = mlp_forward(committee.members[k], context);
        if (out.size() != sum.size()) throw Error(Errc::dimension_mismatch, "committee members disagree on output_dim");
        for (std::size_t o = 0; o < sum.size(); ++o) sum[o] += out[o];
    }
    const double inv = 1.0 / static_cast<double>(committee.members.size());
    for (double& v : sum) v *= inv;
    return sum;
}

void Committee::validate() const {
    if (members.empty()) throw Error(Errc::invalid_argument, "empty committee");
    for (const auto& m : members) {
        m.validate();
        if (m.input_dim != members[0].input_dim || m.hidden_dim != members[0].hidden_dim ||
            m.output_dim != members[0].output_dim) {
            throw Error(Errc::dimension_mismatch, "committee members have different shapes");
        }
    }
}

std::string predictor_to_json(const MlpPredictor& net) {
    net.validate();
    nlohmann::json j;
    j["input_dim"] = net.input_dim;
    j["hidden_dim"] = net.hidden_dim;
    j["output_dim"] = net.output_dim;
    j["activation"] = "tanh";
    j["hidden_weights"] = net.hidden_weights;
    j["hidden_bias"] = net.hidden_bias;
    j["output_weights"] = net.output_weights;
    j["output_bias"] = net.output_bias;
    return j.dump(2);
}

MlpPredictor predictor_from_json(const std::string& text) {
    MlpPredictor net;
    try {
        const auto j = nlohmann::json::parse(text);
        net.input_dim = j.at("input_dim").get<std::size_t>();
        net.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        net.output_dim = j.at("output_dim").get<std::size_t>();
        net.hidden_weights = j.at("hidden_weights").get<std::vector<double>>();
        net.hidden_bias = j.at("hidden_bias").get<std::vector<double>>();
        net.output_weights = j.at("output_weights").get<std::vector<double>>();
        net.output_bias = j.at("output_bias").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format, std::string("predictor JSON: ") + e.what());
    }
    net.validate();
    return net;
}

void save_predictor(const std::filesystem::path& path, const MlpPredictor& net) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out << predictor_to_json(net) << '\n';
}

MlpPredictor load_predictor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return predictor_from_json(ss.str());
}

}  // namespace nlpvq
