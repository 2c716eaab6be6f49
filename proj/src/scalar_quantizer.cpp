#include "nlpvq/scalar_quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nlpvq/error.hpp"

namespace nlpvq {

std::vector<double> default_multipliers(int bits) {
    switch (bits) {
        case 2: return {0.8, 1.6};
        case 3: return {0.9, 0.9, 1.25, 1.75};
        case 4: return {0.9, 0.9, 0.9, 0.9, 1.2, 1.6, 2.0, 2.4};
        case 5: return {0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85,
                        1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6};
        default:
            throw Error(Errc::invalid_argument, "quantizer bits must be in [2, 5], got " + std::to_string(bits));
    }
}

MultiplierTables default_multiplier_tables() {
    MultiplierTables tables;
    for (int b = kMinQuantizerBits; b <= kMaxQuantizerBits; ++b) tables[b] = default_multipliers(b);
    return tables;
}

MultiplierTables parse_multiplier_tables(const std::string& text) {
    MultiplierTables tables;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        int bits = 0;
        if (!(fields >> bits)) continue;
        std::vector<double> table;
        double m = 0.0;
        while (fields >> m) table.push_back(m);
        if (!fields.eof()) throw Error(Errc::format, "multiplier table line " + std::to_string(line_no) + ": bad number");
        if (bits < kMinQuantizerBits || bits > kMaxQuantizerBits ||
            table.size() != (std::size_t{1} << (bits - 1))) {
            throw Error(Errc::format, "multiplier table line " + std::to_string(line_no) +
                                          ": need 2^(bits-1) multipliers for bits in [2, 5]");
        }
        tables[bits] = std::move(table);
    }
    return tables;
}

MultiplierTables load_multiplier_tables(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_multiplier_tables(ss.str());
}

std::string format_multiplier_tables(const MultiplierTables& tables) {
    std::ostringstream out;
    out.precision(17);
    out << "# bits multipliers (inner level first)\n";
    for (const auto& [bits, table] : tables) {
        out << bits;
        for (double m : table) out << ' ' << m;
        out << '\n';
    }
    return out.str();
}

JayantState JayantState::make(int bits, double initial_step, const MultiplierTables& tables) {
    JayantState s;
    s.bits = bits;
    s.step = initial_step;
    const auto it = tables.find(bits);
    const std::vector<double> table = it != tables.end() ? it->second : default_multipliers(bits);
    if (table.size() != static_cast<std::size_t>(s.half_levels())) {
        throw Error(Errc::invalid_argument, "multiplier table size does not match bit depth");
    }
    std::copy(table.begin(), table.end(), s.multipliers.begin());
    s.validate();
    return s;
}

void JayantState::validate() const {
    if (bits < kMinQuantizerBits || bits > kMaxQuantizerBits) {
        throw Error(Errc::invalid_argument, "quantizer bits must be in [2, 5]");
    }
    if (!(step_min > 0.0 && step_min <= step_max)) throw Error(Errc::invalid_argument, "invalid step bounds");
    if (!(step >= step_min && step <= step_max)) throw Error(Errc::invalid_argument, "step outside [step_min, step_max]");
    const auto t = table();
    for (double m : t) {
        if (!(m > 0.0) || !std::isfinite(m)) throw Error(Errc::invalid_argument, "multipliers must be positive");
    }
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    if (!(*lo < 1.0 && *hi > 1.0)) {
        throw Error(Errc::invalid_argument, "multiplier table must contain values below and above 1");
    }
}

namespace {

JayantState adapt(const JayantState& state, int magnitude) {
    JayantState next = state;
    next.step = std::clamp(state.step * state.multipliers[static_cast<std::size_t>(magnitude)], state.step_min,
                           state.step_max);
    return next;
}

}  // namespace

ScalarQuantized sq_quantize(const JayantState& state, double x) {
    if (!std::isfinite(x)) throw Error(Errc::invalid_argument, "sq_quantize: non-finite input");
    const int half = state.half_levels();
    const double cell = std::floor(std::abs(x) / state.step);
    const int magnitude = cell >= static_cast<double>(half - 1) ? half - 1 : static_cast<int>(cell);
    const bool negative = x < 0.0;
    ScalarQuantized q;
    q.code = negative ? half - 1 - magnitude : half + magnitude;
    const double level = (2.0 * magnitude + 1.0) * state.step * 0.5;
    q.value = negative ? -level : level;
    q.next = adapt(state, magnitude);
    return q;
}

ScalarQuantized sq_dequantize(const JayantState& state, int code) {
    const int half = state.half_levels();
    if (code < 0 || code >= state.levels()) throw Error(Errc::invalid_argument, "scalar code out of range");
    const bool negative = code < half;
    const int magnitude = negative ? half - 1 - code : code - half;
    ScalarQuantized q;
    q.code = code;
    const double level = (2.0 * magnitude + 1.0) * state.step * 0.5;
    q.value = negative ? -level : level;
    q.next = adapt(state, magnitude);
    return q;
}

ScalarQuantizedVector sq_quantize_vector(const JayantState& state, std::span<const double> residual) {
    ScalarQuantizedVector out;
    out.codes.reserve(residual.size());
    out.values.reserve(residual.size());
    out.next = state;
    for (double r : residual) {
        auto q = sq_quantize(out.next, r);
        out.codes.push_back(q.code);
        out.values.push_back(q.value);
        out.next = q.next;
    }
    return out;
}

}  // namespace nlpvq
