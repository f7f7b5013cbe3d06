#include "tadbench/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tadbench/error.hpp"

namespace tad::ad {

void Node::accumulate(const Tensor& g) {
    if (!has_grad) {
        grad = Tensor::zeros_like(value);
        has_grad = true;
    }
    grad.add_in_place(g);
}

void Node::zero_grad() {
    if (has_grad) grad.fill(0.0);
}

NodePtr leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

NodePtr constant(Tensor value) { return leaf(std::move(value), false); }

namespace {

NodePtr make(Tensor value, std::vector<NodePtr> parents,
             std::function<void(const Node&)> rule) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->requires_grad =
        std::any_of(n->parents.begin(), n->parents.end(),
                    [](const NodePtr& p) { return p->requires_grad; });
    if (n->requires_grad) n->backward_rule = std::move(rule);
    return n;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw NumericError(std::string(op) + ": shape mismatch");
}

}  // namespace

NodePtr add(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->value;
    out.add_in_place(b->value);
    return make(std::move(out), {a, b}, [](const Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) n.parents[1]->accumulate(n.grad);
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->value;
    out.add_scaled_in_place(b->value, -1.0);
    return make(std::move(out), {a, b}, [](const Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor g = n.grad;
            g.scale_in_place(-1.0);
            n.parents[1]->accumulate(g);
        }
    });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
    return make(std::move(out), {a, b}, [](const Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor g = Tensor::zeros_like(av);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] = n.grad[i] * bv[i];
            n.parents[0]->accumulate(g);
        }
        if (n.parents[1]->requires_grad) {
            Tensor g = Tensor::zeros_like(bv);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] = n.grad[i] * av[i];
            n.parents[1]->accumulate(g);
        }
    });
}

NodePtr scale(const NodePtr& a, double k) {
    Tensor out = a->value;
    out.scale_in_place(k);
    return make(std::move(out), {a}, [k](const Node& n) {
        Tensor g = n.grad;
        g.scale_in_place(k);
        n.parents[0]->accumulate(g);
    });
}

NodePtr add_scalar(const NodePtr& a, double c) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += c;
    return make(std::move(out), {a},
                [](const Node& n) { n.parents[0]->accumulate(n.grad); });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    Tensor out = matmul_value(a->value, b->value);
    return make(std::move(out), {a, b}, [](const Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        const std::size_t m = av.rows(), k = av.cols(), c = bv.cols();
        if (n.parents[0]->requires_grad) {
            // a.grad += g . b^T
            Tensor ga({m, k});
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    const double gv = n.grad.at(i, j);
                    if (gv == 0.0) continue;
                    for (std::size_t l = 0; l < k; ++l) ga.at(i, l) += gv * bv.at(l, j);
                }
            n.parents[0]->accumulate(ga);
        }
        if (n.parents[1]->requires_grad) {
            // b.grad += a^T . g
            Tensor gb({k, c});
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t l = 0; l < k; ++l) {
                    const double av_il = av.at(i, l);
                    if (av_il == 0.0) continue;
                    for (std::size_t j = 0; j < c; ++j) gb.at(l, j) += av_il * n.grad.at(i, j);
                }
            n.parents[1]->accumulate(gb);
        }
    });
}

NodePtr tanh(const NodePtr& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    Tensor saved = out;
    return make(std::move(out), {a}, [saved](const Node& n) {
        Tensor g = Tensor::zeros_like(saved);
        for (std::size_t i = 0; i < g.numel(); ++i)
            g[i] = n.grad[i] * (1.0 - saved[i] * saved[i]);
        n.parents[0]->accumulate(g);
    });
}

NodePtr relu(const NodePtr& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return make(std::move(out), {a}, [](const Node& n) {
        const Tensor& av = n.parents[0]->value;
        Tensor g = Tensor::zeros_like(av);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] = av[i] > 0.0 ? n.grad[i] : 0.0;
        n.parents[0]->accumulate(g);
    });
}

NodePtr abs(const NodePtr& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::fabs(out[i]);
    return make(std::move(out), {a}, [](const Node& n) {
        const Tensor& av = n.parents[0]->value;
        Tensor g = Tensor::zeros_like(av);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const double s = av[i] > 0.0 ? 1.0 : (av[i] < 0.0 ? -1.0 : 0.0);
            g[i] = n.grad[i] * s;
        }
        n.parents[0]->accumulate(g);
    });
}

NodePtr sum(const NodePtr& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a->value.numel(); ++i) s += a->value[i];
    return make(Tensor::scalar(s), {a}, [](const Node& n) {
        const double g = n.grad[0];
        Tensor t = Tensor::filled(n.parents[0]->value.shape(), g);
        n.parents[0]->accumulate(t);
    });
}

NodePtr mean(const NodePtr& a) {
    const double inv = 1.0 / static_cast<double>(a->value.numel());
    double s = 0.0;
    for (std::size_t i = 0; i < a->value.numel(); ++i) s += a->value[i];
    return make(Tensor::scalar(s * inv), {a}, [inv](const Node& n) {
        Tensor t = Tensor::filled(n.parents[0]->value.shape(), n.grad[0] * inv);
        n.parents[0]->accumulate(t);
    });
}

NodePtr mean_rows(const NodePtr& a) {
    const std::size_t r = a->value.rows(), c = a->value.cols();
    Tensor out({1, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(0, j) += a->value.at(i, j);
    const double inv = 1.0 / static_cast<double>(r);
    for (std::size_t j = 0; j < c; ++j) out.at(0, j) *= inv;
    return make(std::move(out), {a}, [inv](const Node& n) {
        const std::size_t r = n.parents[0]->value.rows();
        const std::size_t c = n.parents[0]->value.cols();
        Tensor g({r, c});
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g.at(i, j) = n.grad.at(0, j) * inv;
        n.parents[0]->accumulate(g);
    });
}

NodePtr sum_scalars(const std::vector<NodePtr>& xs) {
    if (xs.empty()) throw NumericError("sum_scalars: empty input");
    double s = 0.0;
    for (const auto& x : xs) s += x->value.item();
    return make(Tensor::scalar(s), xs, [](const Node& n) {
        const Tensor g = Tensor::scalar(n.grad[0]);
        for (const auto& p : n.parents)
            if (p->requires_grad) p->accumulate(g);
    });
}

NodePtr concat_scalars(const std::vector<NodePtr>& xs) {
    if (xs.empty()) throw NumericError("concat_scalars: empty input");
    Tensor out({std::size_t{1}, xs.size()});
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i]->value.item();
    return make(std::move(out), xs, [](const Node& n) {
        for (std::size_t i = 0; i < n.parents.size(); ++i)
            if (n.parents[i]->requires_grad)
                n.parents[i]->accumulate(Tensor::scalar(n.grad[i]));
    });
}

NodePtr softmax(const NodePtr& z) {
    std::vector<double> p = softmax_value(z->value.data());
    Tensor out(z->value.shape(), std::move(p));
    Tensor saved = out;
    return make(std::move(out), {z}, [saved](const Node& n) {
        // dz = y * (g - <g, y>)
        double dot = 0.0;
        for (std::size_t i = 0; i < saved.numel(); ++i) dot += n.grad[i] * saved[i];
        Tensor g = Tensor::zeros_like(saved);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] = saved[i] * (n.grad[i] - dot);
        n.parents[0]->accumulate(g);
    });
}

NodePtr entropy(const NodePtr& p) {
    const double h = entropy_value(p->value.data());
    return make(Tensor::scalar(h), {p}, [](const Node& n) {
        const Tensor& pv = n.parents[0]->value;
        Tensor g = Tensor::zeros_like(pv);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            // d(-p ln p)/dp = -(ln p + 1); the p == 0 limit is pinned to 0
            g[i] = pv[i] > 0.0 ? -n.grad[0] * (std::log(pv[i]) + 1.0) : 0.0;
        }
        n.parents[0]->accumulate(g);
    });
}

NodePtr cross_entropy(const NodePtr& logits, const Tensor& target) {
    const std::size_t c = logits->value.numel();
    if (target.numel() != c) throw NumericError("cross_entropy: shape mismatch");
    double tsum = 0.0;
    for (std::size_t i = 0; i < c; ++i) tsum += target[i];
    if (std::fabs(tsum - 1.0) > 1e-9)
        throw NumericError("cross_entropy: target does not sum to 1");
    const std::vector<double>& z = logits->value.data();
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    double loss = 0.0;
    for (std::size_t i = 0; i < c; ++i) loss += target[i] * (lse - z[i]);
    Tensor tgt = target;
    return make(Tensor::scalar(loss), {logits}, [tgt](const Node& n) {
        std::vector<double> p = softmax_value(n.parents[0]->value.data());
        Tensor g(n.parents[0]->value.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] = n.grad[0] * (p[i] - tgt[i]);
        n.parents[0]->accumulate(g);
    });
}

NodePtr embedding_lookup(const NodePtr& table, const std::vector<int>& ids) {
    const std::size_t v = table->value.rows(), d = table->value.cols();
    if (ids.empty()) throw NumericError("embedding_lookup: empty id sequence");
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw NumericError("embedding_lookup: id out of vocabulary");
    Tensor out({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            out.at(i, j) = table->value.at(static_cast<std::size_t>(ids[i]), j);
    return make(std::move(out), {table}, [ids](const Node& n) {
        const std::size_t d = n.parents[0]->value.cols();
        Tensor g = Tensor::zeros_like(n.parents[0]->value);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < d; ++j)
                g.at(static_cast<std::size_t>(ids[i]), j) += n.grad.at(i, j);
        n.parents[0]->accumulate(g);
    });
}

void backward(const NodePtr& root) {
    if (root->value.numel() != 1) throw NumericError("backward: root must be scalar");
    if (!root->requires_grad) return;

    // Topological order via iterative DFS.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->accumulate(Tensor::scalar(1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_rule && n->has_grad) n->backward_rule(*n);
    }
}

void zero_grads(const std::vector<NodePtr>& params) {
    for (const auto& p : params) p->zero_grad();
}

}  // namespace tad::ad
