#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nlpvq {

inline constexpr int kMinQuantizerBits = 2;
inline constexpr int kMaxQuantizerBits = 5;
inline constexpr double kDefaultInitialStep = 0.02;
inline constexpr double kDefaultStepMin = 1e-5;
inline constexpr double kDefaultStepMax = 1.0;

// Classical Jayant multiplier table for a bit depth, indexed by magnitude level.
std::vector<double> default_multipliers(int bits);

// bits -> multiplier table
using MultiplierTables = std::map<int, std::vector<double>>;

MultiplierTables default_multiplier_tables();
// Text format: one table per line, "<bits> m0 m1 ...", '#' starts a comment.
MultiplierTables parse_multiplier_tables(const std::string& text);
MultiplierTables load_multiplier_tables(const std::filesystem::path& path);
std::string format_multiplier_tables(const MultiplierTables& tables);

// Backward-adaptive (Jayant) quantizer state. Plain value; copy it to fork.
struct JayantState {
    int bits = 3;
    double step = kDefaultInitialStep;
    double step_min = kDefaultStepMin;
    double step_max = kDefaultStepMax;
    std::array<double, 1u << (kMaxQuantizerBits - 1)> multipliers{};

    static JayantState make(int bits, double initial_step = kDefaultInitialStep,
                            const MultiplierTables& tables = default_multiplier_tables());

    int levels() const noexcept { return 1 << bits; }
    int half_levels() const noexcept { return 1 << (bits - 1); }
    std::span<const double> table() const noexcept {
        return std::span<const double>(multipliers).first(static_cast<std::size_t>(half_levels()));
    }
    void validate() const;

    bool operator==(const JayantState&) const = default;
};

struct ScalarQuantized {
    int code = 0;
    double value = 0.0;
    JayantState next;
};

// Mid-rise quantizer with levels +-(2k+1)*step/2. Codes are ordered by level:
// 0 is the most negative, levels()-1 the most positive. x == 0 maps to the
// positive inner level.
ScalarQuantized sq_quantize(const JayantState& state, double x);

// Decoder side: reconstruct the level for a code and adapt the step.
ScalarQuantized sq_dequantize(const JayantState& state, int code);

struct ScalarQuantizedVector {
    std::vector<int> codes;
    std::vector<double> values;
    JayantState next;
};

// Quantizes components in order, threading the step adaptation through.
ScalarQuantizedVector sq_quantize_vector(const JayantState& state, std::span<const double> residual);

}  // namespace nlpvq
