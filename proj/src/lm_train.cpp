#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nlpvq/error.hpp"
#include "nlpvq/predictor.hpp"
#include "nlpvq/rng.hpp"

namespace nlpvq {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Residuals e = target - output over every (item, output) pair.
Vector residuals(const MlpPredictor& net, const PredictorDataset& data) {
    Vector e(static_cast<Eigen::Index>(data.size() * net.output_dim));
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto out = mlp_forward(net, data.context(n));
        const auto target = data.target(n);
        for (std::size_t o = 0; o < net.output_dim; ++o) {
            e[static_cast<Eigen::Index>(n * net.output_dim + o)] = target[o] - out[o];
        }
    }
    return e;
}

// Jacobian of the network outputs (not of e, which is its negative).
Matrix output_jacobian(const MlpPredictor& net, const PredictorDataset& data) {
    const auto p = static_cast<Eigen::Index>(net.parameter_count());
    Matrix jac(static_cast<Eigen::Index>(data.size() * net.output_dim), p);
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto rows = mlp_jacobian(net, data.context(n));
        jac.middleRows(static_cast<Eigen::Index>(n * net.output_dim), static_cast<Eigen::Index>(net.output_dim)) =
            Eigen::Map<const Matrix>(rows.data(), static_cast<Eigen::Index>(net.output_dim), p);
    }
    return jac;
}

double objective(const Vector& e, const Vector& theta, double weight_decay) {
    return e.squaredNorm() + weight_decay * theta.squaredNorm();
}

}  // namespace

void TrainingConfig::validate() const {
    if (hidden_dim == 0) throw Error(Errc::invalid_argument, "hidden_dim must be positive");
    if (num_starts < 1) throw Error(Errc::invalid_argument, "num_starts must be >= 1");
    if (max_lm_iterations < 0) throw Error(Errc::invalid_argument, "max_lm_iterations must be >= 0");
    if (!(mu_init > 0.0)) throw Error(Errc::invalid_argument, "mu_init must be positive");
    if (!(mu_increase > 1.0 && mu_decrease > 0.0 && mu_decrease < 1.0)) {
        throw Error(Errc::invalid_argument, "LM schedule requires mu_increase > 1 > mu_decrease > 0");
    }
    if (!(weight_decay >= 0.0)) throw Error(Errc::invalid_argument, "weight_decay must be non-negative");
}

double dataset_sse(const MlpPredictor& net, const PredictorDataset& data) {
    return residuals(net, data).squaredNorm();
}

LmResult lm_train(const MlpPredictor& initial, const PredictorDataset& data, const TrainingConfig& cfg) {
    cfg.validate();
    data.validate();
    initial.validate();
    if (data.input_dim != initial.input_dim || data.output_dim != initial.output_dim) {
        throw Error(Errc::dimension_mismatch, "dataset dimensions do not match the predictor");
    }

    LmResult result;
    result.net = initial;
    MlpPredictor& net = result.net;

    Vector e = residuals(net, data);
    result.initial_sse = e.squaredNorm();
    result.sse = result.initial_sse;
    if (result.initial_sse == 0.0) {
        result.objective_history.push_back(0.0);
        return result;
    }

    const auto p = static_cast<Eigen::Index>(net.parameter_count());
    const auto theta0 = net.parameters();
    Vector theta = Eigen::Map<const Vector>(theta0.data(), p);
    double obj = objective(e, theta, cfg.weight_decay);
    result.objective_history.push_back(obj);

    double mu = cfg.mu_init;
    const Matrix identity = Matrix::Identity(p, p);
    Matrix jac = output_jacobian(net, data);

    auto abort = [&] {
        result.net = initial;
        result.sse = result.initial_sse;
        result.aborted = true;
        return result;
    };
    if (!jac.allFinite()) return abort();

    MlpPredictor trial = net;
    while (result.iterations < cfg.max_lm_iterations) {
        const Matrix jtj = jac.transpose() * jac;
        const Vector grad = jac.transpose() * e - cfg.weight_decay * theta;

        bool accepted = false;
        double new_obj = obj;
        Vector new_theta;
        Vector new_e;
        while (mu <= kLmMuLimit) {
            const Matrix lhs = jtj + (cfg.weight_decay + mu) * identity;
            new_theta = theta + lhs.ldlt().solve(grad);
            if (new_theta.allFinite()) {
                trial.set_parameters(std::span<const double>(new_theta.data(), static_cast<std::size_t>(p)));
                new_e = residuals(trial, data);
                new_obj = objective(new_e, new_theta, cfg.weight_decay);
                if (std::isfinite(new_obj) && new_obj < obj) {
                    accepted = true;
                    mu *= cfg.mu_decrease;
                    break;
                }
            }
            mu *= cfg.mu_increase;
        }
        if (!accepted) break;

        ++result.iterations;
        const double rel = (obj - new_obj) / obj;
        theta = new_theta;
        e = new_e;
        obj = new_obj;
        net = trial;
        result.objective_history.push_back(obj);
        if (rel < kLmRelativeTolerance || obj == 0.0) break;

        jac = output_jacobian(net, data);
        if (!jac.allFinite()) return abort();
    }

    result.sse = e.squaredNorm();
    // The penalty can trade fit for smaller weights; never hand back a worse fit.
    if (result.sse > result.initial_sse) {
        result.net = initial;
        result.sse = result.initial_sse;
    }
    return result;
}

Committee multi_start_train(const PredictorDataset& data, const TrainingConfig& cfg, const Committee* warm) {
    cfg.validate();
    data.validate();
    const bool use_warm = warm != nullptr && warm->members.size() == static_cast<std::size_t>(cfg.num_starts) &&
                          warm->members.front().input_dim == data.input_dim &&
                          warm->members.front().hidden_dim == cfg.hidden_dim &&
                          warm->members.front().output_dim == data.output_dim;

    std::vector<LmResult> runs;
    runs.reserve(static_cast<std::size_t>(cfg.num_starts));
    for (int s = 0; s < cfg.num_starts; ++s) {
        const MlpPredictor init =
            use_warm ? warm->members[static_cast<std::size_t>(s)]
                     : MlpPredictor::random(data.input_dim, cfg.hidden_dim, data.output_dim,
                                            mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(s)));
        runs.push_back(lm_train(init, data, cfg));
    }

    Committee committee;
    if (cfg.committee) {
        for (auto& r : runs) {
            if (r.aborted) continue;
            committee.members.push_back(std::move(r.net));
            committee.member_sse.push_back(r.sse);
        }
    } else {
        const LmResult* best = nullptr;
        for (const auto& r : runs) {
            if (!r.aborted && (best == nullptr || r.sse < best->sse)) best = &r;
        }
        if (best != nullptr) {
            committee.members.push_back(best->net);
            committee.member_sse.push_back(best->sse);
        }
    }
    if (committee.members.empty()) throw Error(Errc::training_failed, "every multi-start initialization aborted");
    return committee;
}

}  // namespace nlpvq
