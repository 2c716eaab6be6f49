#include <algorithm>
#include <cmath>

#include "nlpvq/error.hpp"
#include "nlpvq/predictor.hpp"

namespace nlpvq {

LinearPredictor fit_linear_predictor(std::span<const double> history, std::size_t order) {
    if (order == 0) throw Error(Errc::invalid_argument, "predictor order must be positive");
    if (history.size() < 2 * order) {
        throw Error(Errc::invalid_argument, "linear predictor needs at least 2*order samples of history");
    }

    LinearPredictor lp;
    lp.coefficients.assign(order, 0.0);
    lp.reflection.assign(order, 0.0);

    std::vector<double> r(order + 1, 0.0);
    for (std::size_t lag = 0; lag <= order; ++lag) {
        for (std::size_t n = lag; n < history.size(); ++n) r[lag] += history[n] * history[n - lag];
    }
    if (r[0] == 0.0) {
        lp.degenerate = true;
        return lp;
    }

    // Levinson-Durbin; a[k] multiplies x[n-1-k].
    std::vector<double> a(order, 0.0);
    std::vector<double> prev(order, 0.0);
    double err = r[0];
    for (std::size_t m = 0; m < order; ++m) {
        double acc = r[m + 1];
        for (std::size_t k = 0; k < m; ++k) acc -= a[k] * r[m - k];
        double k_m = err > 0.0 ? acc / err : 0.0;
        k_m = std::clamp(k_m, -kReflectionLimit, kReflectionLimit);
        lp.reflection[m] = k_m;
        prev = a;
        a[m] = k_m;
        for (std::size_t k = 0; k < m; ++k) a[k] = prev[k] - k_m * prev[m - 1 - k];
        err *= 1.0 - k_m * k_m;
    }
    lp.coefficients = a;
    return lp;
}

double predict_linear(const LinearPredictor& p, std::span<const double> context) {
    if (context.size() != p.order()) throw Error(Errc::dimension_mismatch, "context length != predictor order");
    double y = 0.0;
    for (std::size_t k = 0; k < p.order(); ++k) y += p.coefficients[k] * context[k];
    return y;
}

}  // namespace nlpvq
