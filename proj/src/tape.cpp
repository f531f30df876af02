#include "otgnn/tape.hpp"

#include <algorithm>
#include <cmath>

namespace otgnn {

namespace {

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_id(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
        throw Error("tape: invalid node id " + std::to_string(id));
}

Tape::Node& Tape::node(NodeId id) {
    check_id(id);
    return nodes_[static_cast<std::size_t>(id)];
}

const Tape::Node& Tape::node(NodeId id) const {
    check_id(id);
    return nodes_[static_cast<std::size_t>(id)];
}

const Tensor& Tape::value(NodeId id) const { return val_of(node(id)); }

bool Tape::requires_grad(NodeId id) const { return node(id).needs_grad; }

NodeId Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(value);
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

NodeId Tape::borrow(const Tensor* value, bool requires_grad) {
    if (value == nullptr) throw Error("tape: borrow of null tensor");
    Node n;
    n.op = Op::Leaf;
    n.ext = value;
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.rows())
        throw ShapeError("matmul: incompatible shapes " + av.shape_str() + " and " +
                         bv.shape_str());
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.val = Tensor(av.rows(), bv.cols());
    matmul_into(n.val, av, bv, false);
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
        throw ShapeError("add: incompatible shapes " + av.shape_str() + " and " + bv.shape_str());
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.val = av;
    axpy(n.val, 1.0, bv);
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
        throw ShapeError("sub: incompatible shapes " + av.shape_str() + " and " + bv.shape_str());
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.val = av;
    axpy(n.val, -1.0, bv);
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
        throw ShapeError("mul: incompatible shapes " + av.shape_str() + " and " + bv.shape_str());
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.val = av;
    double* o = n.val.data();
    const double* bd = bv.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) o[i] *= bd[i];
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double s) {
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.scalar = s;
    n.val = value(a);
    for (double& v : n.val.values()) v *= s;
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    Node n;
    n.op = Op::Relu;
    n.a = a;
    n.val = value(a);
    for (double& v : n.val.values()) v = v > 0.0 ? v : 0.0;
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a;
    n.val = value(a);
    for (double& v : n.val.values()) v = sigmoid_scalar(v);
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows() != bv.rows())
        throw ShapeError("concat: row mismatch between " + av.shape_str() + " and " +
                         bv.shape_str());
    Node n;
    n.op = Op::ConcatCols;
    n.a = a;
    n.b = b;
    n.val = Tensor(av.rows(), av.cols() + bv.cols());
    for (int i = 0; i < av.rows(); ++i) {
        double* o = n.val.row_ptr(i);
        const double* x = av.row_ptr(i);
        for (int j = 0; j < av.cols(); ++j) o[j] = x[j];
        const double* y = bv.row_ptr(i);
        for (int j = 0; j < bv.cols(); ++j) o[av.cols() + j] = y[j];
    }
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    Node n;
    n.op = Op::Sum;
    n.a = a;
    double acc = 0.0;
    for (double v : value(a).values()) acc += v;
    n.val = Tensor::row({acc});
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::mean(NodeId a) {
    const Tensor& av = value(a);
    if (av.size() == 0) throw ShapeError("mean: empty tensor");
    Node n;
    n.op = Op::Mean;
    n.a = a;
    double acc = 0.0;
    for (double v : av.values()) acc += v;
    n.val = Tensor::row({acc / static_cast<double>(av.size())});
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::sum_rows(NodeId a) {
    const Tensor& av = value(a);
    Node n;
    n.op = Op::SumRows;
    n.a = a;
    n.val = Tensor(1, av.cols());
    std::vector<double> col(static_cast<std::size_t>(av.rows()));
    for (int j = 0; j < av.cols(); ++j) {
        for (int i = 0; i < av.rows(); ++i) col[static_cast<std::size_t>(i)] = av.at(i, j);
        std::sort(col.begin(), col.end());
        double acc = 0.0;
        for (double v : col) acc += v;
        n.val.at(0, j) = acc;
    }
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::log_sum_exp(NodeId a) {
    const Tensor& av = value(a);
    if (av.size() == 0) throw ShapeError("log_sum_exp: empty tensor");
    Node n;
    n.op = Op::LogSumExp;
    n.a = a;
    double mx = av.values()[0];
    for (double v : av.values()) mx = std::max(mx, v);
    double acc = 0.0;
    for (double v : av.values()) acc += std::exp(v - mx);
    n.val = Tensor::row({mx + std::log(acc)});
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::stack_scalars(std::span<const NodeId> parts) {
    if (parts.empty()) throw ShapeError("stack_scalars: no inputs");
    Node n;
    n.op = Op::StackScalars;
    n.val = Tensor(1, static_cast<int>(parts.size()));
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const Tensor& pv = value(parts[j]);
        if (pv.rows() != 1 || pv.cols() != 1)
            throw ShapeError("stack_scalars: input " + std::to_string(j) + " has shape " +
                             pv.shape_str());
        n.val.at(0, static_cast<int>(j)) = pv.at(0, 0);
        n.needs_grad = n.needs_grad || node(parts[j]).needs_grad;
    }
    n.parts.assign(parts.begin(), parts.end());
    return push(std::move(n));
}

NodeId Tape::dropout(NodeId a, double p, bool train_mode, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0))
        throw ConfigError("dropout: probability must be in [0,1), got " + std::to_string(p));
    Node n;
    n.op = Op::Dropout;
    n.a = a;
    n.scalar = p;
    n.val = value(a);
    n.needs_grad = node(a).needs_grad;
    if (train_mode) {
        const double keep = 1.0 / (1.0 - p);
        n.aux = Tensor(n.val.rows(), n.val.cols());
        double* mask = n.aux.data();
        double* v = n.val.data();
        for (std::size_t i = 0; i < n.val.size(); ++i) {
            mask[i] = rng.uniform() < p ? 0.0 : keep;
            v[i] *= mask[i];
        }
    }
    return push(std::move(n));
}

NodeId Tape::gather_sum(NodeId a, std::shared_ptr<const GatherPlan> plan) {
    const Tensor& av = value(a);
    if (!plan) throw Error("gather_sum: null plan");
    Node n;
    n.op = Op::GatherSum;
    n.a = a;
    n.val = Tensor(plan->num_out(), av.cols());
    for (int i = 0; i < plan->num_out(); ++i) {
        double* o = n.val.row_ptr(i);
        for (std::int32_t k = plan->offsets[static_cast<std::size_t>(i)];
             k < plan->offsets[static_cast<std::size_t>(i) + 1]; ++k) {
            const std::int32_t src = plan->indices[static_cast<std::size_t>(k)];
            if (src < 0 || src >= av.rows())
                throw ShapeError("gather_sum: index " + std::to_string(src) + " out of range");
            const double* x = av.row_ptr(src);
            for (int j = 0; j < av.cols(); ++j) o[j] += x[j];
        }
    }
    n.gather = std::move(plan);
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeId Tape::transport_cost(NodeId cloud_x, NodeId cloud_y, Tensor plan, CostKind kind,
                            double scale) {
    const Tensor& xv = value(cloud_x);
    const Tensor& yv = value(cloud_y);
    if (xv.cols() != yv.cols())
        throw ShapeError("transport_cost: point dimensions differ, " + xv.shape_str() + " vs " +
                         yv.shape_str());
    if (plan.rows() != xv.rows() || plan.cols() != yv.rows())
        throw ShapeError("transport_cost: plan shape " + plan.shape_str() + " does not couple " +
                         xv.shape_str() + " with " + yv.shape_str());
    const int d = xv.cols();
    double acc = 0.0;
    for (int i = 0; i < plan.rows(); ++i) {
        const double* xi = xv.row_ptr(i);
        for (int j = 0; j < plan.cols(); ++j) {
            const double t = plan.at(i, j);
            if (t == 0.0) continue;
            const double* yj = yv.row_ptr(j);
            double c = 0.0;
            if (kind == CostKind::SquaredL2) {
                for (int k = 0; k < d; ++k) {
                    const double diff = xi[k] - yj[k];
                    c += diff * diff;
                }
            } else {
                for (int k = 0; k < d; ++k) c -= xi[k] * yj[k];
            }
            acc += t * c;
        }
    }
    Node n;
    n.op = Op::TransportCost;
    n.a = cloud_x;
    n.b = cloud_y;
    n.aux = std::move(plan);
    n.cost_kind = kind;
    n.cost_scale = scale;
    n.val = Tensor::row({scale * acc});
    n.needs_grad = node(cloud_x).needs_grad || node(cloud_y).needs_grad;
    return push(std::move(n));
}

NodeId Tape::squared_error(NodeId pred, double target) {
    const Tensor& pv = value(pred);
    if (pv.rows() != 1 || pv.cols() != 1)
        throw ShapeError("squared_error: prediction must be scalar, got " + pv.shape_str());
    Node n;
    n.op = Op::SquaredError;
    n.a = pred;
    n.scalar = target;
    const double d = pv.at(0, 0) - target;
    n.val = Tensor::row({d * d});
    n.needs_grad = node(pred).needs_grad;
    return push(std::move(n));
}

NodeId Tape::bce_with_logits(NodeId logit, double label) {
    const Tensor& lv = value(logit);
    if (lv.rows() != 1 || lv.cols() != 1)
        throw ShapeError("bce_with_logits: logit must be scalar, got " + lv.shape_str());
    Node n;
    n.op = Op::BceWithLogits;
    n.a = logit;
    n.scalar = label;
    double p = sigmoid_scalar(lv.at(0, 0));
    p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
    n.val = Tensor::row({-(label * std::log(p) + (1.0 - label) * std::log(1.0 - p))});
    n.needs_grad = node(logit).needs_grad;
    return push(std::move(n));
}

Tensor& Tape::grad_buf(NodeId id) {
    Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.size() == 0 && value(id).size() != 0) {
        const Tensor& v = value(id);
        g = Tensor(v.rows(), v.cols());
    }
    return g;
}

const Tensor& Tape::grad(NodeId id) {
    check_id(id);
    if (!ran_backward_) throw Error("tape: grad() before backward()");
    return grad_buf(id);
}

void Tape::backward(NodeId loss) {
    const Tensor& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1)
        throw ConfigError("backward: loss node must be a 1x1 scalar, got " + lv.shape_str());
    grads_.assign(nodes_.size(), Tensor());
    ran_backward_ = true;
    grad_buf(loss).at(0, 0) = 1.0;
    for (NodeId id = loss; id >= 0; --id) backward_node(id);
}

void Tape::backward_node(NodeId id) {
    Node& n = node(id);
    if (!n.needs_grad || n.op == Op::Leaf) return;
    const Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.size() == 0) return;  // not reached from the loss

    const bool need_a = n.a >= 0 && node(n.a).needs_grad;
    const bool need_b = n.b >= 0 && node(n.b).needs_grad;

    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::MatMul: {
            if (need_a) matmul_tb_into(grad_buf(n.a), g, value(n.b), true);
            if (need_b) matmul_ta_into(grad_buf(n.b), value(n.a), g, true);
            break;
        }
        case Op::Add: {
            if (need_a) axpy(grad_buf(n.a), 1.0, g);
            if (need_b) axpy(grad_buf(n.b), 1.0, g);
            break;
        }
        case Op::Sub: {
            if (need_a) axpy(grad_buf(n.a), 1.0, g);
            if (need_b) axpy(grad_buf(n.b), -1.0, g);
            break;
        }
        case Op::Mul: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const double* gb = g.data();
                const double* bv = value(n.b).data();
                double* o = ga.data();
                for (std::size_t i = 0; i < ga.size(); ++i) o[i] += gb[i] * bv[i];
            }
            if (need_b) {
                Tensor& gb2 = grad_buf(n.b);
                const double* gd = g.data();
                const double* av = value(n.a).data();
                double* o = gb2.data();
                for (std::size_t i = 0; i < gb2.size(); ++i) o[i] += gd[i] * av[i];
            }
            break;
        }
        case Op::Scale: {
            if (need_a) axpy(grad_buf(n.a), n.scalar, g);
            break;
        }
        case Op::Relu: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const double* x = value(n.a).data();
                const double* gd = g.data();
                double* o = ga.data();
                // Subgradient at exactly 0 is 0.
                for (std::size_t i = 0; i < ga.size(); ++i)
                    if (x[i] > 0.0) o[i] += gd[i];
            }
            break;
        }
        case Op::Sigmoid: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const double* y = n.val.data();
                const double* gd = g.data();
                double* o = ga.data();
                for (std::size_t i = 0; i < ga.size(); ++i) o[i] += gd[i] * y[i] * (1.0 - y[i]);
            }
            break;
        }
        case Op::ConcatCols: {
            const Tensor& av = value(n.a);
            const Tensor& bv = value(n.b);
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < av.rows(); ++i)
                    for (int j = 0; j < av.cols(); ++j) ga.at(i, j) += g.at(i, j);
            }
            if (need_b) {
                Tensor& gb = grad_buf(n.b);
                for (int i = 0; i < bv.rows(); ++i)
                    for (int j = 0; j < bv.cols(); ++j) gb.at(i, j) += g.at(i, av.cols() + j);
            }
            break;
        }
        case Op::Sum: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const double gs = g.at(0, 0);
                for (double& v : ga.values()) v += gs;
            }
            break;
        }
        case Op::Mean: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const double gs = g.at(0, 0) / static_cast<double>(ga.size());
                for (double& v : ga.values()) v += gs;
            }
            break;
        }
        case Op::SumRows: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < ga.rows(); ++i) {
                    double* o = ga.row_ptr(i);
                    const double* gd = g.row_ptr(0);
                    for (int j = 0; j < ga.cols(); ++j) o[j] += gd[j];
                }
            }
            break;
        }
        case Op::LogSumExp: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const Tensor& av = value(n.a);
                const double out = n.val.at(0, 0);
                const double gs = g.at(0, 0);
                double* o = ga.data();
                const double* x = av.data();
                for (std::size_t i = 0; i < ga.size(); ++i) o[i] += gs * std::exp(x[i] - out);
            }
            break;
        }
        case Op::StackScalars: {
            for (std::size_t j = 0; j < n.parts.size(); ++j) {
                const NodeId p = n.parts[j];
                if (node(p).needs_grad) grad_buf(p).at(0, 0) += g.at(0, static_cast<int>(j));
            }
            break;
        }
        case Op::Dropout: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const double* gd = g.data();
                double* o = ga.data();
                if (n.aux.size() != 0) {
                    const double* mask = n.aux.data();
                    for (std::size_t i = 0; i < ga.size(); ++i) o[i] += gd[i] * mask[i];
                } else {
                    for (std::size_t i = 0; i < ga.size(); ++i) o[i] += gd[i];
                }
            }
            break;
        }
        case Op::GatherSum: {
            if (need_a) {
                Tensor& ga = grad_buf(n.a);
                const GatherPlan& plan = *n.gather;
                for (int i = 0; i < plan.num_out(); ++i) {
                    const double* gd = g.row_ptr(i);
                    for (std::int32_t k = plan.offsets[static_cast<std::size_t>(i)];
                         k < plan.offsets[static_cast<std::size_t>(i) + 1]; ++k) {
                        double* o = ga.row_ptr(plan.indices[static_cast<std::size_t>(k)]);
                        for (int j = 0; j < ga.cols(); ++j) o[j] += gd[j];
                    }
                }
            }
            break;
        }
        case Op::TransportCost: {
            const Tensor& xv = value(n.a);
            const Tensor& yv = value(n.b);
            const Tensor& plan = n.aux;
            const double gs = g.at(0, 0) * n.cost_scale;
            const int d = xv.cols();
            Tensor* gx = need_a ? &grad_buf(n.a) : nullptr;
            Tensor* gy = need_b ? &grad_buf(n.b) : nullptr;
            for (int i = 0; i < plan.rows(); ++i) {
                const double* xi = xv.row_ptr(i);
                double* gxi = gx ? gx->row_ptr(i) : nullptr;
                for (int j = 0; j < plan.cols(); ++j) {
                    const double t = plan.at(i, j);
                    if (t == 0.0) continue;
                    const double w = gs * t;
                    const double* yj = yv.row_ptr(j);
                    double* gyj = gy ? gy->row_ptr(j) : nullptr;
                    if (n.cost_kind == CostKind::SquaredL2) {
                        for (int k = 0; k < d; ++k) {
                            const double diff = xi[k] - yj[k];
                            if (gxi) gxi[k] += w * 2.0 * diff;
                            if (gyj) gyj[k] -= w * 2.0 * diff;
                        }
                    } else {
                        for (int k = 0; k < d; ++k) {
                            if (gxi) gxi[k] -= w * yj[k];
                            if (gyj) gyj[k] -= w * xi[k];
                        }
                    }
                }
            }
            break;
        }
        case Op::SquaredError: {
            if (need_a) {
                const double p = value(n.a).at(0, 0);
                grad_buf(n.a).at(0, 0) += g.at(0, 0) * 2.0 * (p - n.scalar);
            }
            break;
        }
        case Op::BceWithLogits: {
            if (need_a) {
                const double z = value(n.a).at(0, 0);
                grad_buf(n.a).at(0, 0) += g.at(0, 0) * (sigmoid_scalar(z) - n.scalar);
            }
            break;
        }
    }
}

}  // namespace otgnn
