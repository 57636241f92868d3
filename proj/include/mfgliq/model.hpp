// SPDX-License-Identifier: MIT
//
// Problem instances for the constrained liquidation game: coefficient
// processes, their declared bounds, time grids with a terminal standoff,
// the binomial common-noise tree, and static checks of the standing
// assumptions.
#pragma once

#include "mfgliq/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mfgliq {

// ============================================================================
// Common-noise tree
// ============================================================================

struct TreeNode {
    int step = 0;
    int level = 0;  // number of up-moves, 0..step
    double t = 0.0;
    double w = 0.0;  // value of W0 at the node
};

// Recombining binomial tree for W0 on [0, T]: step k has k+1 nodes, each
// node moves by +-sqrt(dt) with probability 1/2.
class CommonNoiseTree {
public:
    CommonNoiseTree(double horizon, int depth) : horizon_(horizon), depth_(depth) {
        if (!(horizon > 0.0)) throw InvalidArgument("tree: horizon must be positive");
        if (depth < 1) throw InvalidArgument("tree: depth must be >= 1");
        dt_ = horizon / depth;
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] int depth() const noexcept { return depth_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] double time(int step) const noexcept {
        return step == depth_ ? horizon_ : step * dt_;
    }
    [[nodiscard]] TreeNode node(int step, int level) const noexcept {
        return TreeNode{step, level, time(step), (2.0 * level - step) * std::sqrt(dt_)};
    }
    [[nodiscard]] static constexpr double up_probability() noexcept { return 0.5; }
    [[nodiscard]] std::size_t node_count() const noexcept {
        return static_cast<std::size_t>(depth_ + 1) * static_cast<std::size_t>(depth_ + 2) / 2;
    }

private:
    double horizon_;
    int depth_;
    double dt_;
};

// Values of a scalar process on every tree node, indexed [step][level].
struct TreeProcess {
    std::vector<std::vector<double>> values;

    static TreeProcess zeros(const CommonNoiseTree& tree) {
        TreeProcess p;
        p.values.resize(static_cast<std::size_t>(tree.depth()) + 1);
        for (int k = 0; k <= tree.depth(); ++k) p.values[k].assign(static_cast<std::size_t>(k) + 1, 0.0);
        return p;
    }
    [[nodiscard]] double at(int step, int level) const { return values.at(step).at(level); }
    [[nodiscard]] int depth() const noexcept { return static_cast<int>(values.size()) - 1; }
};

// ============================================================================
// Time grid
// ============================================================================

enum class Refinement { Uniform, Geometric };

// Nodes 0 = t_0 < ... < t_K = T - epsilon_cut. The terminal time itself is
// never a node.
struct TimeGrid {
    std::vector<double> nodes;
    double horizon = 0.0;
    double epsilon_cut = 0.0;
    Refinement refinement = Refinement::Uniform;
    double ratio = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
    [[nodiscard]] int intervals() const noexcept { return static_cast<int>(nodes.size()) - 1; }
    [[nodiscard]] double last() const { return nodes.back(); }

    // Nodes followed by the terminal time T.
    [[nodiscard]] std::vector<double> extended() const {
        std::vector<double> out = nodes;
        out.push_back(horizon);
        return out;
    }
};

// Step sizes shrink by `ratio` from one interval to the next, so the grid
// clusters toward the terminal standoff when ratio > 1.
inline TimeGrid build_grid(double horizon, double epsilon_cut, int K, double ratio = 1.0) {
    if (!(horizon > 0.0)) throw InvalidArgument("grid: horizon must be positive");
    if (!(epsilon_cut > 0.0)) throw InvalidArgument("grid: epsilon_cut must be > 0 (A is singular at T)");
    if (!(epsilon_cut < horizon)) throw InvalidArgument("grid: epsilon_cut must be < T");
    if (K < 2) throw InvalidArgument("grid: K must be >= 2");
    if (!(ratio >= 1.0) || !std::isfinite(ratio)) throw InvalidArgument("grid: ratio must be >= 1");

    TimeGrid g;
    g.horizon = horizon;
    g.epsilon_cut = epsilon_cut;
    g.ratio = ratio;
    g.refinement = ratio > 1.0 ? Refinement::Geometric : Refinement::Uniform;

    const double length = horizon - epsilon_cut;
    g.nodes.resize(static_cast<std::size_t>(K) + 1);
    g.nodes[0] = 0.0;
    if (ratio == 1.0) {
        for (int k = 1; k < K; ++k) g.nodes[k] = length * k / K;
    } else {
        const double q = 1.0 / ratio;
        // geometric series: h0 * (1 - q^K) / (1 - q) = length
        const double h0 = length * (1.0 - q) / (1.0 - std::pow(q, K));
        double t = 0.0, h = h0;
        for (int k = 1; k < K; ++k) {
            t += h;
            g.nodes[k] = t;
            h *= q;
        }
    }
    g.nodes[K] = length;
    for (int k = 1; k <= K; ++k) {
        if (!(g.nodes[k] > g.nodes[k - 1]))
            throw InvalidArgument("grid: nodes not strictly increasing (ratio too large for K)");
    }
    return g;
}

// Uniform grid matching the step times of a tree, standoff = one tree step.
inline TimeGrid tree_time_grid(const CommonNoiseTree& tree) {
    TimeGrid g;
    g.horizon = tree.horizon();
    g.epsilon_cut = tree.dt();
    g.nodes.resize(static_cast<std::size_t>(tree.depth()));
    for (int k = 0; k < tree.depth(); ++k) g.nodes[k] = tree.time(k);
    return g;
}

// ============================================================================
// Coefficient processes
// ============================================================================

class CoefficientProcess {
public:
    enum class Kind { Constant, Deterministic, TreeAdapted };

    CoefficientProcess() : CoefficientProcess(constant(0.0)) {}

    static CoefficientProcess constant(double v) {
        CoefficientProcess c(Kind::Constant);
        c.value_ = v;
        c.label_ = "const";
        return c;
    }

    static CoefficientProcess deterministic(std::function<double(double)> f, std::string label = "fn") {
        if (!f) throw InvalidArgument("coefficient: empty sampler");
        CoefficientProcess c(Kind::Deterministic);
        c.fn_ = std::make_shared<std::function<double(double)>>(std::move(f));
        c.label_ = std::move(label);
        return c;
    }

    // Node map on a common-noise tree. Off-tree evaluation is an error.
    static CoefficientProcess tree_adapted(std::function<double(const TreeNode&)> f, std::string label = "tree") {
        if (!f) throw InvalidArgument("coefficient: empty node map");
        CoefficientProcess c(Kind::TreeAdapted);
        c.node_fn_ = std::make_shared<std::function<double(const TreeNode&)>>(std::move(f));
        c.label_ = std::move(label);
        return c;
    }

    static CoefficientProcess tree_table(std::vector<std::vector<double>> table) {
        auto shared = std::make_shared<std::vector<std::vector<double>>>(std::move(table));
        CoefficientProcess c = tree_adapted(
            [shared](const TreeNode& n) -> double {
                if (n.step < 0 || static_cast<std::size_t>(n.step) >= shared->size() ||
                    n.level < 0 || static_cast<std::size_t>(n.level) >= (*shared)[n.step].size())
                    throw InvalidArgument("coefficient: tree table has no entry for node (" +
                                          std::to_string(n.step) + "," + std::to_string(n.level) + ")");
                return (*shared)[n.step][n.level];
            },
            "tree-table");
        c.table_depth_ = static_cast<int>(shared->size()) - 1;
        return c;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_constant() const noexcept { return kind_ == Kind::Constant; }
    [[nodiscard]] bool is_deterministic() const noexcept { return kind_ != Kind::TreeAdapted; }
    [[nodiscard]] bool is_tree() const noexcept { return kind_ == Kind::TreeAdapted; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    [[nodiscard]] std::optional<int> table_depth() const noexcept { return table_depth_; }

    // Deterministic evaluation.
    [[nodiscard]] double at(double t) const {
        switch (kind_) {
        case Kind::Constant: return value_;
        case Kind::Deterministic: return (*fn_)(t);
        case Kind::TreeAdapted: break;
        }
        throw UnsupportedBackend("coefficient: tree-adapted process has no deterministic value at t");
    }

    [[nodiscard]] double at(const TreeNode& n) const {
        if (kind_ == Kind::TreeAdapted) return (*node_fn_)(n);
        return at(n.t);
    }

    [[nodiscard]] bool is_zero() const noexcept { return kind_ == Kind::Constant && value_ == 0.0; }
    [[nodiscard]] double constant_value() const {
        if (kind_ != Kind::Constant) throw UnsupportedBackend("coefficient: not constant");
        return value_;
    }

    // Pointwise product with a scalar (used for continuation in the coupling).
    [[nodiscard]] CoefficientProcess scaled(double s) const {
        switch (kind_) {
        case Kind::Constant: return constant(s * value_);
        case Kind::Deterministic: {
            auto f = fn_;
            return deterministic([f, s](double t) { return s * (*f)(t); }, label_);
        }
        case Kind::TreeAdapted: {
            auto f = node_fn_;
            return tree_adapted([f, s](const TreeNode& n) { return s * (*f)(n); }, label_);
        }
        }
        return *this;
    }

private:
    explicit CoefficientProcess(Kind k) : kind_(k) {}

    Kind kind_;
    double value_ = 0.0;
    std::shared_ptr<std::function<double(double)>> fn_;
    std::shared_ptr<std::function<double(const TreeNode&)>> node_fn_;
    std::string label_;
    std::optional<int> table_depth_;
};

struct CoefficientBounds {
    double kappa_max = 0.0;
    double eta_max = 0.0;
    double eta_star = 0.0;
    double lambda_max = 0.0;
    double lambda_star = 0.0;

    // Exponent of the discount bound: eta_star / eta_max, in (0, 1].
    [[nodiscard]] double alpha() const noexcept { return eta_star / eta_max; }

    void validate() const {
        if (!(kappa_max >= 0.0) || !std::isfinite(kappa_max))
            throw InvalidArgument("bounds: kappa_max must be finite and >= 0");
        if (!(eta_star > 0.0) || !(eta_star <= eta_max) || !std::isfinite(eta_max))
            throw InvalidArgument("bounds: need 0 < eta_star <= eta_max < inf");
        if (!(lambda_star > 0.0) || !(lambda_star <= lambda_max) || !std::isfinite(lambda_max))
            throw InvalidArgument("bounds: need 0 < lambda_star <= lambda_max < inf");
    }
};

struct ModelSpec {
    double horizon = 1.0;
    double x0 = 1.0;
    CoefficientProcess kappa = CoefficientProcess::constant(0.0);
    CoefficientProcess eta = CoefficientProcess::constant(1.0);
    CoefficientProcess lambda = CoefficientProcess::constant(1.0);
    CoefficientBounds bounds;

    // All-constant instance with tight bounds.
    static ModelSpec constant(double T, double x, double kappa, double eta, double lambda) {
        ModelSpec s;
        s.horizon = T;
        s.x0 = x;
        s.kappa = CoefficientProcess::constant(kappa);
        s.eta = CoefficientProcess::constant(eta);
        s.lambda = CoefficientProcess::constant(lambda);
        s.bounds = CoefficientBounds{std::fabs(kappa), eta, eta, lambda, lambda};
        return s;
    }

    [[nodiscard]] bool all_constant() const noexcept {
        return kappa.is_constant() && eta.is_constant() && lambda.is_constant();
    }
    [[nodiscard]] bool all_deterministic() const noexcept {
        return kappa.is_deterministic() && eta.is_deterministic() && lambda.is_deterministic();
    }
    [[nodiscard]] bool has_tree_coefficients() const noexcept { return !all_deterministic(); }
};

// ============================================================================
// Static validation
// ============================================================================

struct BoundsViolation {
    std::string coefficient;
    double t = 0.0;
    double value = 0.0;
};

namespace detail {

inline void check_value(std::vector<BoundsViolation>& out, const char* name, double v, double lo, double hi,
                        double t) {
    const double slack = 1e-12 * std::max(1.0, std::fabs(hi));
    if (!std::isfinite(v) || v < lo - slack || v > hi + slack) out.push_back({name, t, v});
}

inline void check_all(std::vector<BoundsViolation>& out, const ModelSpec& s, double t, const TreeNode* node) {
    auto val = [&](const CoefficientProcess& c) { return node ? c.at(*node) : c.at(t); };
    const auto& b = s.bounds;
    const double kap = val(s.kappa);
    check_value(out, "kappa", kap, 0.0, b.kappa_max, t);
    check_value(out, "eta", val(s.eta), b.eta_star, b.eta_max, t);
    check_value(out, "lambda", val(s.lambda), b.lambda_star, b.lambda_max, t);
}

}  // namespace detail

// Checks T > 0, the declared bounds, and that every coefficient value at
// the sample points lies inside them. Deterministic samplers are probed on
// a dense uniform mesh of [0, T]; tree maps on every node of `tree`.
inline std::vector<BoundsViolation> check_coefficients(const ModelSpec& s, const CommonNoiseTree* tree = nullptr,
                                                       int samples = 4096) {
    if (!(s.horizon > 0.0)) throw InvalidArgument("model: horizon must be positive");
    if (!std::isfinite(s.x0)) throw InvalidArgument("model: x0 must be finite");
    s.bounds.validate();
    std::vector<BoundsViolation> out;
    if (s.all_deterministic()) {
        for (int i = 0; i <= samples; ++i) {
            const double t = s.horizon * i / samples;
            detail::check_all(out, s, t, nullptr);
        }
    }
    if (tree) {
        for (int k = 0; k <= tree->depth(); ++k)
            for (int j = 0; j <= k; ++j) {
                TreeNode n = tree->node(k, j);
                detail::check_all(out, s, n.t, &n);
            }
    } else if (!s.all_deterministic()) {
        throw InvalidArgument("model: tree-adapted coefficients need a tree to be checked");
    }
    return out;
}

inline void validate_model(const ModelSpec& s, const CommonNoiseTree* tree = nullptr) {
    auto v = check_coefficients(s, tree);
    if (!v.empty()) {
        throw InvalidArgument("model: " + v.front().coefficient + " = " + format_g(v.front().value) +
                              " at t = " + format_g(v.front().t) + " outside declared bounds (" +
                              std::to_string(v.size()) + " violations)");
    }
}

struct ValidationReport {
    bool pass = false;
    double theta = 0.0;   // witness when pass
    double margin = 0.0;  // 16 eta_* lambda_* - ||kappa||^2
    double theta_lo = 0.0, theta_hi = 0.0;
};

// Weak-interaction condition: exists theta > 0 with
//   2 eta_* - ||kappa|| / (2 theta) > 0  and  2 lambda_* - ||kappa|| theta / 2 > 0,
// i.e. theta in (||kappa|| / (4 eta_*), 4 lambda_* / ||kappa||), which is
// nonempty iff ||kappa||^2 < 16 eta_* lambda_*.
inline ValidationReport validate_weak_interaction(const CoefficientBounds& b) {
    b.validate();
    ValidationReport r;
    const double k = b.kappa_max;
    r.margin = 16.0 * b.eta_star * b.lambda_star - k * k;
    if (k == 0.0) {
        r.pass = true;
        r.theta = 1.0;
        r.theta_lo = 0.0;
        r.theta_hi = std::numeric_limits<double>::infinity();
        return r;
    }
    r.theta_lo = k / (4.0 * b.eta_star);
    r.theta_hi = 4.0 * b.lambda_star / k;
    r.pass = r.margin > 0.0;
    if (r.pass) r.theta = 0.5 * (r.theta_lo + r.theta_hi);
    return r;
}

inline ValidationReport validate_weak_interaction(const ModelSpec& s) { return validate_weak_interaction(s.bounds); }

struct AssumptionCheck {
    enum class Status { HoldsBy, Unknown };
    Status status = Status::Unknown;
    std::string reason;

    [[nodiscard]] bool holds() const noexcept { return status == Status::HoldsBy; }
};

// Sufficient condition for the linear discount bound needed by the
// penalization limit. Only the deterministic-eta clause is detected.
inline AssumptionCheck check_assumption_app(const ModelSpec& s) {
    if (s.eta.is_deterministic()) return {AssumptionCheck::Status::HoldsBy, "deterministic eta"};
    return {AssumptionCheck::Status::Unknown, "eta depends on the common noise"};
}

}  // namespace mfgliq
