#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sanet/tensor.hpp"

namespace sanet {

template <typename T>
class GraphT;

// Handle to a node on a graph's tape. Cheap to copy; valid for the lifetime
// of the graph that produced it.
template <typename T>
struct ValueT {
    GraphT<T>* graph = nullptr;
    int id = -1;

    bool valid() const { return graph != nullptr && id >= 0; }
    const BasicTensor<T>& tensor() const { return graph->tensor(id); }
    const Shape& shape() const { return graph->tensor(id).shape; }
    const BasicTensor<T>& grad() const { return graph->grad(id); }
};

// Eager tape: every primitive computes its output immediately and records a
// backward rule. Node creation order is a topological order by construction,
// so backward is a single reverse sweep over the ancestors of the loss.
// A graph instance is confined to one thread; independent graphs are
// independent.
template <typename T>
class GraphT {
public:
    using Value = ValueT<T>;
    // backward rule: (graph, own node id); reads grad(id), accumulates into
    // parent grads.
    using BackwardFn = std::function<void(GraphT&, int)>;

    Value leaf(BasicTensor<T> t, bool trainable = false) {
        nodes_.push_back(Node{std::move(t), BasicTensor<T>(), false, trainable, {}, nullptr});
        return Value{this, static_cast<int>(nodes_.size()) - 1};
    }

    Value record(BasicTensor<T> out, std::vector<int> parents, BackwardFn backward) {
        nodes_.push_back(
            Node{std::move(out), BasicTensor<T>(), false, false, std::move(parents), std::move(backward)});
        return Value{this, static_cast<int>(nodes_.size()) - 1};
    }

    const BasicTensor<T>& tensor(int id) const { return nodes_.at(id).out; }
    BasicTensor<T>& mutable_tensor(int id) { return nodes_.at(id).out; }

    BasicTensor<T>& grad(int id) {
        Node& n = nodes_.at(id);
        if (!n.grad_alloc) {
            n.grad = BasicTensor<T>(n.out.shape);
            n.grad_alloc = true;
        }
        return n.grad;
    }

    bool has_grad(int id) const { return nodes_.at(id).grad_alloc; }
    bool is_trainable(int id) const { return nodes_.at(id).trainable; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Reverse-mode sweep from a scalar loss. Visits each ancestor exactly
    // once, in reverse topological order. Leaves marked trainable always end
    // up with an allocated grad, zero if the loss does not depend on them.
    void backward(Value loss) {
        if (loss.graph != this) {
            throw std::invalid_argument("backward: value belongs to a different graph");
        }
        const Shape& s = tensor(loss.id).shape;
        if (s.numel() != 1) {
            throw std::invalid_argument("backward requires a scalar loss, got shape " + s.str());
        }

        std::vector<char> reachable(nodes_.size(), 0);
        std::vector<int> stack{loss.id};
        reachable[loss.id] = 1;
        while (!stack.empty()) {
            int id = stack.back();
            stack.pop_back();
            for (int p : nodes_[id].parents) {
                if (!reachable[p]) {
                    reachable[p] = 1;
                    stack.push_back(p);
                }
            }
        }

        for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
            if (reachable[id] || nodes_[id].trainable) grad(id);  // zero-init
        }
        grad(loss.id).data[0] = T(1);

        for (int id = loss.id; id >= 0; --id) {
            if (reachable[id] && nodes_[id].backward) nodes_[id].backward(*this, id);
        }
    }

private:
    struct Node {
        BasicTensor<T> out;
        BasicTensor<T> grad;
        bool grad_alloc = false;
        bool trainable = false;
        std::vector<int> parents;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
};

using Graph = GraphT<float>;
using Value = ValueT<float>;

template <typename T>
void check_same_graph(ValueT<T> a, ValueT<T> b) {
    if (a.graph != b.graph) {
        throw std::invalid_argument("operation mixes values from different graphs");
    }
}

}  // namespace sanet
