#include "seqab/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "seqab/errors.hpp"
#include "seqab/numerics.hpp"

namespace seqab::bayes {

void BetaPosterior::validate() const {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("Beta parameters must be positive and finite");
    }
}

BetaPosterior BetaPosterior::updated(std::uint64_t successes, std::uint64_t trials) const {
    if (successes > trials) {
        throw DomainError("successes exceed trials");
    }
    return {a + static_cast<double>(successes), b + static_cast<double>(trials - successes)};
}

void BhtConfig::validate() const {
    BetaPosterior{prior_a, prior_b}.validate();
    if (!(epsilon > 0.0)) {
        throw DomainError("threshold of caring must be positive");
    }
}

void BfConfig::validate() const {
    BetaPosterior{prior_a, prior_b}.validate();
    if (!(odds_threshold > 1.0)) {
        throw DomainError("Bayes-factor odds threshold must exceed 1");
    }
}

double single_arm_expected_loss(const BetaPosterior& post, double theta0, LossSide side) {
    post.validate();
    if (!(theta0 >= 0.0 && theta0 <= 1.0)) {
        throw DomainError("theta0 must lie in [0, 1]");
    }
    const double a = post.a;
    const double b = post.b;
    const double m = post.mean();
    double loss;
    if (side == LossSide::Below) {
        loss = theta0 * reg_inc_beta(theta0, a, b) - m * reg_inc_beta(theta0, a + 1.0, b);
    } else {
        loss = m * reg_inc_beta(1.0 - theta0, b, a + 1.0) - theta0 * reg_inc_beta(1.0 - theta0, b, a);
    }
    return std::max(loss, 0.0);
}

namespace {

bool is_integer(double v) {
    return v == std::floor(v) && v < 9.0e15;
}

// P(X > Y), X ~ Beta(ax, bx), Y ~ Beta(ay, by), ax a positive integer:
//   sum_{i < ax} B(ay + i, by + bx) / ((bx + i) B(1 + i, bx) B(ay, by))
// with consecutive-term ratio (ay + i)(bx + i) / ((ay + by + bx + i)(1 + i)).
double greater_series(double ax, double bx, double ay, double by) {
    const auto terms = static_cast<std::uint64_t>(ax);
    const double total = ay + by + bx;
    double log_term = log_beta(ay, by + bx) - log_beta(ay, by);
    double max_log = -std::numeric_limits<double>::infinity();
    double scaled = 0.0;
    for (std::uint64_t k = 0; k < terms; ++k) {
        if (log_term > max_log) {
            scaled = scaled * std::exp(max_log - log_term) + 1.0;
            max_log = log_term;
        } else {
            scaled += std::exp(log_term - max_log);
        }
        const double i = static_cast<double>(k);
        const double log_ratio =
            std::log((ay + i) * (bx + i)) - std::log((total + i) * (1.0 + i));
        // Ratios decrease in i, so once below one the tail is geometric.
        if (log_ratio < 0.0 && log_term - max_log < -40.0) {
            break;
        }
        log_term += log_ratio;
    }
    return std::clamp(std::exp(max_log) * scaled, 0.0, 1.0);
}

double exact_control_loss(const BetaPosterior& p0, const BetaPosterior& p1) {
    const double term1 = p1.mean() * prob_greater({p1.a + 1.0, p1.b}, p0);
    const double term0 = p0.mean() * prob_greater(p1, {p0.a + 1.0, p0.b});
    return std::max(term1 - term0, 0.0);
}

LossEstimate monte_carlo_loss(const BetaPosterior& p0, const BetaPosterior& p1, Arm choice,
                              const LossOptions& options) {
    if (options.mc_pairs < 2) {
        throw DomainError("Monte Carlo loss needs at least two pairs");
    }
    std::mt19937_64 rng(options.seed);
    std::gamma_distribution<double> g0a(p0.a, 1.0), g0b(p0.b, 1.0), g1a(p1.a, 1.0), g1b(p1.b, 1.0);
    StreamingMoments acc;
    for (std::uint64_t i = 0; i < options.mc_pairs; ++i) {
        const double x0a = g0a(rng), x0b = g0b(rng), x1a = g1a(rng), x1b = g1b(rng);
        const double theta0 = x0a / (x0a + x0b);
        const double theta1 = x1a / (x1a + x1b);
        const double diff = choice == Arm::Control ? theta1 - theta0 : theta0 - theta1;
        acc.push(std::max(diff, 0.0));
    }
    return {acc.mean(), std::sqrt(acc.unbiased_variance() / static_cast<double>(acc.count())), false};
}

}  // namespace

double prob_greater(const BetaPosterior& x, const BetaPosterior& y) {
    x.validate();
    y.validate();
    // Four equivalent series; use the shortest available one.
    struct Route {
        double cost;
        int kind;
    };
    Route best{std::numeric_limits<double>::infinity(), -1};
    const auto consider = [&](double param, int kind) {
        if (is_integer(param) && param < best.cost) best = {param, kind};
    };
    consider(x.a, 0);
    consider(y.b, 1);
    consider(y.a, 2);
    consider(x.b, 3);
    switch (best.kind) {
        case 0:
            return greater_series(x.a, x.b, y.a, y.b);
        case 1:  // P(1 - Y > 1 - X)
            return greater_series(y.b, y.a, x.b, x.a);
        case 2:
            return 1.0 - greater_series(y.a, y.b, x.a, x.b);
        case 3:
            return 1.0 - greater_series(x.b, x.a, y.b, y.a);
        default:
            throw SolverFailure("prob_greater: exact series needs an integer Beta parameter");
    }
}

LossEstimate two_arm_expected_loss(const BetaPosterior& post0, const BetaPosterior& post1, Arm choice,
                                   const LossOptions& options) {
    post0.validate();
    post1.validate();
    const bool integral =
        is_integer(post0.a) && is_integer(post0.b) && is_integer(post1.a) && is_integer(post1.b);
    LossBackend backend = options.backend;
    if (backend == LossBackend::Auto) {
        backend = integral ? LossBackend::Exact : LossBackend::MonteCarlo;
    }
    if (backend == LossBackend::MonteCarlo) {
        return monte_carlo_loss(post0, post1, choice, options);
    }
    if (!integral) {
        throw SolverFailure("exact loss backend requires integer Beta parameters");
    }
    const double control = exact_control_loss(post0, post1);
    if (choice == Arm::Control) {
        return {control, 0.0, true};
    }
    // E[max(t0 - t1, 0)] = E[max(t1 - t0, 0)] - (E t1 - E t0)
    return {std::max(control - (post1.mean() - post0.mean()), 0.0), 0.0, true};
}

BhtDecision bht_decide(std::uint64_t c0, std::uint64_t n0, std::uint64_t c1, std::uint64_t n1,
                       const BhtConfig& cfg, const LossOptions& options) {
    cfg.validate();
    const BetaPosterior prior{cfg.prior_a, cfg.prior_b};
    const BetaPosterior post0 = prior.updated(c0, n0);
    const BetaPosterior post1 = prior.updated(c1, n1);
    BhtDecision out;
    const LossEstimate control = two_arm_expected_loss(post0, post1, Arm::Control, options);
    out.loss_control = control.value;
    if (control.exact) {
        out.loss_treatment = std::max(control.value - (post1.mean() - post0.mean()), 0.0);
    } else {
        out.loss_treatment = two_arm_expected_loss(post0, post1, Arm::Treatment, options).value;
    }
    out.chosen = out.loss_treatment < out.loss_control ? Arm::Treatment : Arm::Control;
    out.stop = std::min(out.loss_control, out.loss_treatment) < cfg.epsilon;
    return out;
}

std::pair<std::uint64_t, std::uint64_t> binary_counts(const StreamingMoments& arm) {
    const double n = static_cast<double>(arm.count());
    const double s = std::round(arm.mean() * n);
    const double tol = 1e-9 * std::max(1.0, n);
    if (std::fabs(arm.mean() * n - s) > tol || s < 0.0 || s > n ||
        std::fabs(arm.m2() - (n > 0.0 ? s * (n - s) / n : 0.0)) > tol) {
        throw DomainError("Bayesian rules need binary (0/1) outcomes");
    }
    return {static_cast<std::uint64_t>(s), arm.count()};
}

BhtDecision bht_decide(const TwoArmState& state, const BhtConfig& cfg, const LossOptions& options) {
    const auto [c0, n0] = binary_counts(state.arm0);
    const auto [c1, n1] = binary_counts(state.arm1);
    return bht_decide(c0, n0, c1, n1, cfg, options);
}

SingleArmBhtDecision single_arm_bht_decide(const BetaPosterior& post, double theta0, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw DomainError("threshold of caring must be positive");
    }
    SingleArmBhtDecision out;
    out.above = post.mean() > theta0;
    // Deciding "above" risks the shortfall below theta0, and vice versa.
    out.loss = single_arm_expected_loss(post, theta0, out.above ? LossSide::Below : LossSide::Above);
    out.stop = out.loss < epsilon;
    return out;
}

double log_bayes_factor(std::uint64_t c0, std::uint64_t n0, std::uint64_t c1, std::uint64_t n1,
                        const BfConfig& cfg) {
    cfg.validate();
    if (c0 > n0 || c1 > n1) {
        throw DomainError("conversions cannot exceed trials");
    }
    const double a = cfg.prior_a;
    const double b = cfg.prior_b;
    const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
    return log_beta(a + d(c0), b + d(n0 - c0)) + log_beta(a + d(c1), b + d(n1 - c1)) -
           log_beta(a, b) - log_beta(a + d(c0 + c1), b + d(n0 + n1 - c0 - c1));
}

double bayes_factor(std::uint64_t c0, std::uint64_t n0, std::uint64_t c1, std::uint64_t n1,
                    const BfConfig& cfg) {
    return std::exp(log_bayes_factor(c0, n0, c1, n1, cfg));
}

}  // namespace seqab::bayes
