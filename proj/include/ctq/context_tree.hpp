#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace ctq {

using Symbol = uint32_t;

// Context strings hold the most recent symbol first, so context[0] is the
// symbol immediately preceding the current one.
using Context = std::vector<Symbol>;

// A complete, proper suffix set: every length-`depth` context has exactly one
// element of `leaves` as a prefix (in most-recent-first order).
struct Model {
    std::set<Context> leaves;

    bool operator==(const Model&) const = default;
};

// log2 of the estimator block probability for one count vector:
// sum_j [lgamma(a_j + 1/2) - lgamma(1/2)] - [lgamma(m/2 + M) - lgamma(m/2)].
double kt_log_prob(const std::vector<double>& counts);

// log2 of the tree prior (1-g)^((|S|-1)/(m-1)) * g^(|S|-L) of a valid model,
// where L counts leaves at the maximum depth. Validates the model.
double log_model_prior(const Model& model, uint32_t alphabet, int depth, double gamma);

// All complete proper suffix sets up to `depth`; guarded by alphabet^depth <= 4096.
std::vector<Model> enumerate_models(uint32_t alphabet, int depth);

// Counting tree over an m-ary alphabet with bounded context depth. Counts are
// real-valued to allow decay. Every node carries log2 of its estimator block
// probability, its mixture probability (weighting all subtree prunings) and
// its maximized probability (best pruning). Single writer per instance.
class ContextTree {
public:
    ContextTree(uint32_t alphabet, int depth, double gamma);

    uint32_t alphabet() const { return m_alphabet; }
    int depth() const { return m_depth; }
    double gamma() const { return m_gamma; }

    // Counts one symbol under an explicit context (length >= depth).
    void update(Symbol s, const Context& context);
    // Counts one symbol under the internal history, then shifts it.
    // The history starts as all zeros, which is the session padding rule.
    void observe(Symbol s);
    // Shifts the history without counting (used by skip-style updates).
    void advance_history(Symbol s);
    const Context& history() const { return m_history; }

    double ctw_log_prob() const;   // log2 mixture probability at the root
    double ctm_log_prob() const;   // log2 maximized probability at the root
    // Best pruning of the current tree; equal branch scores prune.
    Model map_model() const;

    // Next-symbol distribution (a_j + 1/2) / (m/2 + total) at the model
    // context matched by `context`. Dense; alphabet must be <= 2^20.
    Eigen::VectorXd predict(const Model& model, const Context& context) const;

    // The unique model leaf that prefixes `context`.
    Context model_context(const Model& model, const Context& context) const;

    // Sparse count access for rank-based coding. counts may be null when the
    // context was never visited.
    struct CountView {
        const std::map<Symbol, double>* counts;
        double total;
    };
    CountView counts_at(const Context& context) const;

    // Scales every count by factor in [0,1] and rebuilds all log values.
    void decay(double factor);

    double total_count() const;
    uint64_t update_touches() const { return m_touches; }

    // Text dump "context=<digits|-> counts=<c0,...,c_{m-1}>", preorder,
    // children in symbol order; requires alphabet <= 10.
    std::string snapshot() const;

    bool operator==(const ContextTree& other) const;

private:
    struct Node {
        std::map<Symbol, double> counts;
        double total = 0.0;
        double log_pe = 0.0;
        double log_pw = 0.0;
        double log_pm = 0.0;
        // Running sums of children's log_pw / log_pm (materialized only).
        double child_pw_sum = 0.0;
        double child_pm_sum = 0.0;
        std::map<Symbol, std::unique_ptr<Node>> children;
    };

    Node* child_get_or_create(Node& n, Symbol s, int child_depth);
    double child_pm_product(const Node& n, int node_depth) const;
    void refresh_mix(Node& n, int node_depth);
    void rebuild(Node& n, int node_depth);
    void collect_model(const Node* n, int node_depth, Context& walk, Model& out) const;
    const Node* walk(const Context& context, size_t length) const;

    uint32_t m_alphabet;
    int m_depth;
    double m_gamma;
    double m_log_gamma;
    double m_log_1mgamma;
    std::vector<double> m_empty_pm;  // log_pm of an untouched node per depth
    Node m_root;
    Context m_history;
    uint64_t m_touches = 0;
};

// ceil(-log2 Q) + 1 bits for an ideally coded block of given log2 probability.
uint64_t ideal_code_bits(double log2_prob);

// Same, reading the mixture probability off a tree that has seen >= 1 symbol.
uint64_t ctw_ideal_code_length(const ContextTree& tree);

} // namespace ctq
