#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nlpvq {

// Feed-forward predictor: output = W_out * tanh(W_hid * context + b_hid) + b_out.
// Weight matrices are row-major. Context is ordered most recent sample first.
struct MlpPredictor {
    std::size_t input_dim = 10;
    std::size_t hidden_dim = 2;
    std::size_t output_dim = 2;
    std::vector<double> hidden_weights;  // hidden_dim x input_dim
    std::vector<double> hidden_bias;     // hidden_dim
    std::vector<double> output_weights;  // output_dim x hidden_dim
    std::vector<double> output_bias;     // output_dim

    static MlpPredictor zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);
    // Every parameter uniform in [-0.5, 0.5].
    static MlpPredictor random(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                               std::uint64_t seed);

    std::size_t parameter_count() const noexcept;
    // Flattened as [hidden_weights, hidden_bias, output_weights, output_bias].
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> theta);
    void validate() const;

    bool operator==(const MlpPredictor&) const = default;
};

std::vector<double> mlp_forward(const MlpPredictor& net, std::span<const double> context);

// d output / d theta, row-major output_dim x parameter_count().
std::vector<double> mlp_jacobian(const MlpPredictor& net, std::span<const double> context);

// Row-major (context, target) pairs.
struct PredictorDataset {
    std::size_t input_dim = 10;
    std::size_t output_dim = 2;
    std::vector<double> contexts;
    std::vector<double> targets;

    std::size_t size() const noexcept { return input_dim == 0 ? 0 : contexts.size() / input_dim; }
    std::span<const double> context(std::size_t i) const {
        return std::span<const double>(contexts).subspan(i * input_dim, input_dim);
    }
    std::span<const double> target(std::size_t i) const {
        return std::span<const double>(targets).subspan(i * output_dim, output_dim);
    }
    void add(std::span<const double> context, std::span<const double> target);
    void validate() const;
};

struct TrainingConfig {
    std::size_t hidden_dim = 2;
    int num_starts = 5;
    int max_lm_iterations = 50;
    double mu_init = 1e-3;
    double mu_increase = 10.0;
    double mu_decrease = 0.1;
    double weight_decay = 1e-4;
    std::uint64_t rng_seed = 1;
    bool committee = true;

    void validate() const;
};

inline constexpr double kLmMuLimit = 1e10;
inline constexpr double kLmRelativeTolerance = 1e-9;

struct LmResult {
    MlpPredictor net;
    double sse = 0.0;
    double initial_sse = 0.0;
    // Regularized objective after each accepted step; element 0 is the start.
    std::vector<double> objective_history;
    int iterations = 0;
    bool aborted = false;
};

double dataset_sse(const MlpPredictor& net, const PredictorDataset& data);

// Levenberg-Marquardt on SSE + weight_decay * |theta|^2.
LmResult lm_train(const MlpPredictor& net, const PredictorDataset& data, const TrainingConfig& cfg);

struct Committee {
    std::vector<MlpPredictor> members;
    std::vector<double> member_sse;

    void validate() const;
};

std::vector<double> committee_forward(const Committee& committee, std::span<const double> context);

// num_starts seeded initializations, each LM-trained. Start i draws its
// weights from mix_seed(cfg.rng_seed, i), or copies warm->members[i] when a
// compatible warm committee is given.
Committee multi_start_train(const PredictorDataset& data, const TrainingConfig& cfg,
                            const Committee* warm = nullptr);

inline constexpr double kReflectionLimit = 0.999;

struct LinearPredictor {
    std::vector<double> coefficients;  // applied to context ordered most recent first
    std::vector<double> reflection;
    bool degenerate = false;           // history had zero energy

    std::size_t order() const noexcept { return coefficients.size(); }
};

// Autocorrelation method + Levinson-Durbin, reflection coefficients clamped
// to +-0.999 so the synthesis filter stays minimum phase.
LinearPredictor fit_linear_predictor(std::span<const double> history, std::size_t order = 10);

double predict_linear(const LinearPredictor& p, std::span<const double> context);

std::string predictor_to_json(const MlpPredictor& net);
MlpPredictor predictor_from_json(const std::string& text);
void save_predictor(const std::filesystem::path& path, const MlpPredictor& net);
MlpPredictor load_predictor(const std::filesystem::path& path);

}  // namespace nlpvq
