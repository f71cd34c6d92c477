#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bype/tensor.hpp"

namespace bype {

using GradMap = std::map<std::string, Tensor>;

// Reverse-mode gradient tape. Executing a primitive records the value and a
// backward rule; backward(root) replays the records in exact reverse
// execution order and accumulates gradients into every registered parameter.
// A registered parameter that never entered the computation gets a zero
// gradient. Single-owner: one tape must not be shared across threads.
//
// Primitive set: matmul, add, broadcast-add, elementwise mul, exp, log,
// tanh, sigmoid, relu, square, sum, mean, log_sum_exp, slice/concat.
// Everything else is composed from these.
class Tape {
  public:
    int constant(Tensor v);
    int param(const std::string& name, const Tensor& v);

    const Tensor& val(int id) const { return nodes_[check(id)].value; }

    // out = op(a) * op(b); op transposes when the flag is set
    int matmul(int a, int b, bool ta = false, bool tb = false);
    int add(int a, int b);
    int sub(int a, int b); // composed: add(a, scale(b, -1))
    int mul(int a, int b);
    int scale(int a, double s);
    int add_const(int a, double s);
    int add_rowvec(int a, int v); // [r x c] + v[c] broadcast down rows
    int add_colvec(int a, int v); // [r x c] + v[r] broadcast across columns
    int mul_scalar(int a, int s); // elementwise mul by a [1] node, broadcast
    int add_scalar(int a, int s); // add a [1] node, broadcast
    int vexp(int a);
    int vlog(int a);
    int vtanh(int a);
    int vsigmoid(int a);
    int vrelu(int a);
    int vsquare(int a);
    int sum(int a);    // -> [1]
    int mean(int a);   // -> [1]
    int rowsum(int a); // [r x c] -> [r]
    int colsum(int a); // [r x c] -> [c]
    // rows[i] = log sum_j w_j exp(a[i,j]); weights constant, nonnegative,
    // at least one strictly positive.
    int lse_rows(int a, Tensor weights);
    int slice_rows(int a, std::size_t r0, std::size_t r1);
    int concat_rows(int a, int b);

    // Gradient of a one-element root with respect to every registered
    // parameter. May be called repeatedly; each call starts fresh.
    GradMap backward(int root);

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        std::function<void(Tape&, int)> back; // empty for leaves
    };

    int check(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
            throw UsageError("Tape: node id not on this tape");
        return id;
    }
    int push(Tensor v, std::function<void(Tape&, int)> back = {});
    Tensor& grad(int id); // lazily zero-initialized buffer
    bool has_grad(int id) const { return grads_[id].numel() > 0; }

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, int>> params_;
    std::vector<Tensor> grads_;
};

} // namespace bype
