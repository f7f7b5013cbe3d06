#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tadbench/tensor.hpp"

namespace tad::ad {

// One node of a dynamically built reverse-mode graph. Graphs are rebuilt per
// forward pass; parameter leaves persist across passes and accumulate
// gradients until zeroed.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation; same shape as value
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Node&)> backward_rule;  // reads this->grad, feeds parents

    void accumulate(const Tensor& g);
    void zero_grad();
};

using NodePtr = std::shared_ptr<Node>;

NodePtr leaf(Tensor value, bool requires_grad);
NodePtr constant(Tensor value);

NodePtr add(const NodePtr& a, const NodePtr& b);  // elementwise
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);  // elementwise
NodePtr scale(const NodePtr& a, double k);
NodePtr add_scalar(const NodePtr& a, double c);
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr tanh(const NodePtr& a);
NodePtr relu(const NodePtr& a);
NodePtr abs(const NodePtr& a);
NodePtr sum(const NodePtr& a);   // -> scalar
NodePtr mean(const NodePtr& a);  // -> scalar
NodePtr mean_rows(const NodePtr& a);               // {L,d} -> {1,d}
NodePtr sum_scalars(const std::vector<NodePtr>& xs);
NodePtr concat_scalars(const std::vector<NodePtr>& xs);  // -> {1,K}

// Probability-shaped ops. softmax/entropy/cross_entropy treat the tensor as a
// flat vector of length C.
NodePtr softmax(const NodePtr& z);
NodePtr entropy(const NodePtr& p);
NodePtr cross_entropy(const NodePtr& logits, const Tensor& target);

// Gathers rows of a {V,d} table; backward scatter-adds into the table.
NodePtr embedding_lookup(const NodePtr& table, const std::vector<int>& ids);

// Populates grad on every node reachable from root. root must be scalar.
void backward(const NodePtr& root);

void zero_grads(const std::vector<NodePtr>& params);

}  // namespace tad::ad
