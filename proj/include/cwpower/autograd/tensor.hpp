#pragma once

// Dense tensors with a reverse-mode tape. Every op result keeps shared ownership of its
// parents and a closure that pushes its gradient back into them; backward() walks the
// graph in reverse topological order.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace cwpower::ag {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += " x ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void accumulate_grad(std::span<const T> g) {
        if (grad.empty()) {
            grad.assign(g.begin(), g.end());
            return;
        }
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
    }

    std::vector<T>& ensure_grad() {
        if (grad.empty()) grad.assign(values.size(), T{0});
        return grad;
    }
};

template <typename T>
class Tensor {
public:
    Tensor() : node_(std::make_shared<Node<T>>()) {}

    Tensor(Shape shape, std::vector<T> values, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
        if (shape_size(shape) != values.size()) {
            throw std::invalid_argument("tensor: " + std::to_string(values.size()) + " values do not fill shape " +
                                        shape_str(shape));
        }
        node_->shape = std::move(shape);
        node_->values = std::move(values);
        node_->requires_grad = requires_grad;
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        const std::size_t n = shape_size(shape);
        return Tensor(std::move(shape), std::vector<T>(n, T{0}), requires_grad);
    }

    static Tensor scalar(T v, bool requires_grad = false) { return Tensor(Shape{}, {v}, requires_grad); }

    const Shape& shape() const noexcept { return node_->shape; }
    std::size_t size() const noexcept { return node_->values.size(); }
    std::size_t rank() const noexcept { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }

    std::span<const T> values() const noexcept { return node_->values; }
    std::span<T> mutable_values() noexcept { return node_->values; }
    T item() const {
        if (size() != 1) throw std::logic_error("item() on a tensor with " + std::to_string(size()) + " elements");
        return node_->values[0];
    }

    bool requires_grad() const noexcept { return node_->requires_grad; }
    void set_requires_grad(bool on) noexcept { node_->requires_grad = on; }

    bool has_grad() const noexcept { return !node_->grad.empty(); }
    /// Gradient, or an empty span if nothing has flowed into this tensor.
    std::span<const T> grad() const noexcept { return node_->grad; }
    void zero_grad() noexcept { node_->grad.clear(); }

    /// Fresh leaf holding a copy of the values.
    Tensor detached_copy(bool requires_grad = false) const {
        return Tensor(node_->shape, node_->values, requires_grad);
    }

    const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }

    /// Result of an op. Parents and the backward closure are only kept when some parent
    /// needs a gradient, so inference builds no graph.
    static Tensor from_op(Shape shape, std::vector<T> values, std::vector<Tensor> parents,
                          std::function<void(Node<T>&)> backward) {
        Tensor out(std::move(shape), std::move(values));
        const bool needs = std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
        if (needs) {
            out.node_->requires_grad = true;
            out.node_->parents.reserve(parents.size());
            for (const Tensor& p : parents) out.node_->parents.push_back(p.node_);
            out.node_->backward = std::move(backward);
        }
        return out;
    }

private:
    std::shared_ptr<Node<T>> node_;
};

/// Reverse sweep from a scalar root. Gradients accumulate into every tensor that requires them.
template <typename T>
void backward(const Tensor<T>& root) {
    if (root.size() != 1) {
        throw std::logic_error("backward: root must be a scalar, got shape " + shape_str(root.shape()));
    }
    if (!root.requires_grad()) {
        throw std::logic_error("backward: root does not depend on any tensor requiring grad");
    }
    // Iterative post-order DFS; graphs hold thousands of nodes per batch.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node<T>* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    Node<T>& r = *root.node();
    r.ensure_grad()[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>& n = **it;
        if (n.backward && !n.grad.empty()) n.backward(n);
    }
}

template <typename T>
bool all_finite(std::span<const T> v) {
    return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
}

}  // namespace cwpower::ag
