#include "ctq/context_tree.hpp"
#include "ctq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ctq {

namespace {

const double kLn2 = std::log(2.0);

double log2_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp2(b - a)) / kLn2;
}

double kt_from_counts(const std::map<Symbol, double>& counts, double total, uint32_t m) {
    double half_m = 0.5 * static_cast<double>(m);
    double num = 0.0;
    for (const auto& [s, c] : counts)
        num += std::lgamma(c + 0.5) - std::lgamma(0.5);
    double den = std::lgamma(half_m + total) - std::lgamma(half_m);
    return (num - den) / kLn2;
}

} // namespace

double kt_log_prob(const std::vector<double>& counts) {
    if (counts.size() < 2)
        throw std::invalid_argument("count vector needs an alphabet of >= 2");
    std::map<Symbol, double> sparse;
    double total = 0.0;
    for (size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] < 0.0) throw std::invalid_argument("negative count");
        if (counts[j] > 0.0) sparse.emplace(static_cast<Symbol>(j), counts[j]);
        total += counts[j];
    }
    return kt_from_counts(sparse, total, static_cast<uint32_t>(counts.size()));
}

double log_model_prior(const Model& model, uint32_t alphabet, int depth, double gamma) {
    if (alphabet < 2 || alphabet > 4096)
        throw std::invalid_argument("alphabet out of supported range");
    if (depth < 0) throw std::invalid_argument("negative depth");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma must lie in (0,1)");
    if (model.leaves.empty())
        throw std::invalid_argument("empty model");

    size_t matched = 0;
    // Recursive completeness/properness check.
    std::function<bool(Context&, int)> check = [&](Context& prefix, int d) -> bool {
        if (model.leaves.count(prefix)) {
            ++matched;
            return true;
        }
        if (d == depth) return false;
        for (Symbol j = 0; j < alphabet; ++j) {
            prefix.push_back(j);
            bool ok = check(prefix, d + 1);
            prefix.pop_back();
            if (!ok) return false;
        }
        return true;
    };
    Context prefix;
    if (!check(prefix, 0) || matched != model.leaves.size())
        throw std::invalid_argument("model is not a complete proper suffix set");

    size_t full_depth = 0;
    for (const auto& c : model.leaves)
        if (static_cast<int>(c.size()) == depth) ++full_depth;
    double splits = (static_cast<double>(model.leaves.size()) - 1.0) / (alphabet - 1.0);
    double inner_leaves = static_cast<double>(model.leaves.size() - full_depth);
    return splits * std::log2(1.0 - gamma) + inner_leaves * std::log2(gamma);
}

std::vector<Model> enumerate_models(uint32_t alphabet, int depth) {
    if (alphabet < 2) throw std::invalid_argument("alphabet must be >= 2");
    if (depth < 0) throw std::invalid_argument("negative depth");
    double leaves = std::pow(static_cast<double>(alphabet), depth);
    if (leaves > 4096.0)
        throw std::invalid_argument("alphabet^depth exceeds enumeration guard");

    if (depth == 0) return {Model{{Context{}}}};
    std::vector<Model> sub = enumerate_models(alphabet, depth - 1);
    std::vector<Model> out;
    double count = 1.0 + std::pow(static_cast<double>(sub.size()), alphabet);
    if (count > 1e6)
        throw std::length_error("model class too large to enumerate");
    out.reserve(static_cast<size_t>(count));
    out.push_back(Model{{Context{}}});

    std::vector<size_t> pick(alphabet, 0);
    while (true) {
        Model m;
        for (Symbol j = 0; j < alphabet; ++j)
            for (const auto& rel : sub[pick[j]].leaves) {
                Context abs;
                abs.reserve(rel.size() + 1);
                abs.push_back(j);
                abs.insert(abs.end(), rel.begin(), rel.end());
                m.leaves.insert(std::move(abs));
            }
        out.push_back(std::move(m));
        size_t i = 0;
        while (i < pick.size() && ++pick[i] == sub.size()) pick[i++] = 0;
        if (i == pick.size()) break;
    }
    return out;
}

ContextTree::ContextTree(uint32_t alphabet, int depth, double gamma)
    : m_alphabet(alphabet), m_depth(depth), m_gamma(gamma) {
    if (alphabet < 2) throw std::invalid_argument("alphabet must be >= 2");
    if (depth < 0) throw std::invalid_argument("negative depth");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma must lie in (0,1)");
    m_log_gamma = std::log2(gamma);
    m_log_1mgamma = std::log2(1.0 - gamma);
    m_empty_pm.assign(depth + 1, 0.0);
    for (int d = depth - 1; d >= 0; --d)
        m_empty_pm[d] = std::max(m_log_gamma,
                                 m_log_1mgamma + static_cast<double>(alphabet) * m_empty_pm[d + 1]);
    m_root.log_pm = m_empty_pm[0];
    m_history.assign(depth, 0);
}

ContextTree::Node* ContextTree::child_get_or_create(Node& n, Symbol s, int child_depth) {
    auto it = n.children.find(s);
    if (it != n.children.end()) return it->second.get();
    auto node = std::make_unique<Node>();
    node->log_pm = m_empty_pm[child_depth];
    Node* raw = node.get();
    n.child_pm_sum += node->log_pm;
    n.children.emplace(s, std::move(node));
    return raw;
}

double ContextTree::child_pm_product(const Node& n, int node_depth) const {
    double missing = static_cast<double>(m_alphabet) - static_cast<double>(n.children.size());
    return n.child_pm_sum + missing * m_empty_pm[node_depth + 1];
}

void ContextTree::refresh_mix(Node& n, int node_depth) {
    if (node_depth == m_depth) {
        n.log_pw = n.log_pe;
        n.log_pm = n.log_pe;
        return;
    }
    n.log_pw = log2_add(m_log_gamma + n.log_pe, m_log_1mgamma + n.child_pw_sum);
    n.log_pm = std::max(m_log_gamma + n.log_pe,
                        m_log_1mgamma + child_pm_product(n, node_depth));
}

void ContextTree::update(Symbol s, const Context& context) {
    if (s >= m_alphabet) throw std::invalid_argument("symbol outside alphabet");
    if (static_cast<int>(context.size()) < m_depth)
        throw std::invalid_argument("context shorter than tree depth");

    std::vector<Node*> path(m_depth + 1);
    Node* n = &m_root;
    for (int d = 0;; ++d) {
        path[d] = n;
        auto it = n->counts.find(s);
        double a = it == n->counts.end() ? 0.0 : it->second;
        n->log_pe += std::log2((a + 0.5) / (0.5 * m_alphabet + n->total));
        if (it == n->counts.end()) n->counts.emplace(s, 1.0);
        else it->second += 1.0;
        n->total += 1.0;
        if (d == m_depth) break;
        n = child_get_or_create(*n, context[d], d + 1);
    }
    m_touches += static_cast<uint64_t>(m_depth) + 1;

    for (int d = m_depth; d >= 0; --d) {
        Node* node = path[d];
        double old_pw = node->log_pw, old_pm = node->log_pm;
        refresh_mix(*node, d);
        if (d > 0) {
            path[d - 1]->child_pw_sum += node->log_pw - old_pw;
            path[d - 1]->child_pm_sum += node->log_pm - old_pm;
        }
    }
}

void ContextTree::observe(Symbol s) {
    update(s, m_history);
    advance_history(s);
}

void ContextTree::advance_history(Symbol s) {
    if (s >= m_alphabet) throw std::invalid_argument("symbol outside alphabet");
    if (m_depth == 0) return;
    m_history.insert(m_history.begin(), s);
    m_history.pop_back();
}

double ContextTree::ctw_log_prob() const { return m_root.log_pw; }
double ContextTree::ctm_log_prob() const { return m_root.log_pm; }

void ContextTree::collect_model(const Node* n, int node_depth, Context& walk, Model& out) const {
    bool split = false;
    if (node_depth < m_depth) {
        double leaf_score = m_log_gamma + (n ? n->log_pe : 0.0);
        double split_score = m_log_1mgamma
            + (n ? child_pm_product(*n, node_depth)
                 : static_cast<double>(m_alphabet) * m_empty_pm[node_depth + 1]);
        split = split_score > leaf_score;
    }
    if (!split) {
        out.leaves.insert(walk);
        return;
    }
    if (!n && std::pow(static_cast<double>(m_alphabet), m_depth - node_depth) > (1 << 20))
        throw std::length_error("maximizing model too large to materialize");
    for (Symbol j = 0; j < m_alphabet; ++j) {
        const Node* child = nullptr;
        if (n) {
            auto it = n->children.find(j);
            if (it != n->children.end()) child = it->second.get();
        }
        walk.push_back(j);
        collect_model(child, node_depth + 1, walk, out);
        walk.pop_back();
    }
}

Model ContextTree::map_model() const {
    Model m;
    Context walk;
    collect_model(&m_root, 0, walk, m);
    return m;
}

Context ContextTree::model_context(const Model& model, const Context& context) const {
    if (static_cast<int>(context.size()) < m_depth)
        throw std::invalid_argument("context shorter than tree depth");
    Context prefix;
    for (int len = 0; len <= m_depth; ++len) {
        if (model.leaves.count(prefix)) return prefix;
        if (len < m_depth) prefix.push_back(context[len]);
    }
    throw std::invalid_argument("context matches no model leaf");
}

const ContextTree::Node* ContextTree::walk(const Context& context, size_t length) const {
    const Node* n = &m_root;
    for (size_t d = 0; d < length; ++d) {
        auto it = n->children.find(context[d]);
        if (it == n->children.end()) return nullptr;
        n = it->second.get();
    }
    return n;
}

ContextTree::CountView ContextTree::counts_at(const Context& context) const {
    if (static_cast<int>(context.size()) > m_depth)
        throw std::invalid_argument("context longer than tree depth");
    const Node* n = walk(context, context.size());
    if (!n) return {nullptr, 0.0};
    return {&n->counts, n->total};
}

Eigen::VectorXd ContextTree::predict(const Model& model, const Context& context) const {
    if (m_alphabet > (1u << 20))
        throw std::invalid_argument("alphabet too large for a dense distribution");
    Context mc = model_context(model, context);
    CountView view = counts_at(mc);
    double denom = 0.5 * m_alphabet + view.total;
    Eigen::VectorXd p = Eigen::VectorXd::Constant(m_alphabet, 0.5 / denom);
    if (view.counts)
        for (const auto& [s, c] : *view.counts)
            p[static_cast<Eigen::Index>(s)] = (c + 0.5) / denom;
    return p;
}

void ContextTree::rebuild(Node& n, int node_depth) {
    double total = 0.0;
    for (const auto& [s, c] : n.counts) total += c;
    n.total = total;
    n.log_pe = kt_from_counts(n.counts, n.total, m_alphabet);
    n.child_pw_sum = 0.0;
    n.child_pm_sum = 0.0;
    for (auto& [s, child] : n.children) {
        rebuild(*child, node_depth + 1);
        n.child_pw_sum += child->log_pw;
        n.child_pm_sum += child->log_pm;
    }
    refresh_mix(n, node_depth);
}

void ContextTree::decay(double factor) {
    if (!(factor >= 0.0 && factor <= 1.0))
        throw std::invalid_argument("decay factor must lie in [0,1]");
    std::function<void(Node&)> scale = [&](Node& n) {
        if (factor == 0.0) {
            n.counts.clear();
        } else {
            for (auto& [s, c] : n.counts) c *= factor;
        }
        for (auto& [s, child] : n.children) scale(*child);
    };
    scale(m_root);
    rebuild(m_root, 0);
}

double ContextTree::total_count() const { return m_root.total; }

std::string ContextTree::snapshot() const {
    if (m_alphabet > 10)
        throw std::logic_error("snapshot supports alphabets up to 10 symbols");
    std::ostringstream out;
    std::function<void(const Node&, const std::string&)> dump =
        [&](const Node& n, const std::string& walk_str) {
            out << "context=" << (walk_str.empty() ? "-" : walk_str) << " counts=";
            char buf[32];
            for (Symbol j = 0; j < m_alphabet; ++j) {
                auto it = n.counts.find(j);
                double c = it == n.counts.end() ? 0.0 : it->second;
                std::snprintf(buf, sizeof buf, "%.17g", c);
                out << (j ? "," : "") << buf;
            }
            out << '\n';
            for (const auto& [s, child] : n.children)
                dump(*child, walk_str + static_cast<char>('0' + s));
        };
    dump(m_root, "");
    return out.str();
}

bool ContextTree::operator==(const ContextTree& other) const {
    if (m_alphabet != other.m_alphabet || m_depth != other.m_depth || m_gamma != other.m_gamma)
        return false;
    if (m_history != other.m_history) return false;
    std::function<bool(const Node&, const Node&)> eq = [&](const Node& a, const Node& b) {
        if (a.total != b.total || a.counts != b.counts) return false;
        if (a.children.size() != b.children.size()) return false;
        auto ia = a.children.begin(), ib = b.children.begin();
        for (; ia != a.children.end(); ++ia, ++ib) {
            if (ia->first != ib->first) return false;
            if (!eq(*ia->second, *ib->second)) return false;
        }
        return true;
    };
    return eq(m_root, other.m_root);
}

uint64_t ideal_code_bits(double log2_prob) {
    return static_cast<uint64_t>(std::ceil(-log2_prob)) + 1;
}

uint64_t ctw_ideal_code_length(const ContextTree& tree) {
    if (tree.total_count() <= 0.0)
        throw std::invalid_argument("tree has not seen any symbol");
    return ideal_code_bits(tree.ctw_log_prob());
}

} // namespace ctq
