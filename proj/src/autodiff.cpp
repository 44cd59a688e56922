#include "duet/autodiff.hpp"

#include <cmath>

#include "duet/kg.hpp"

namespace duet {

namespace {

double stable_softplus(double x) {
    // log(1 + e^x) without overflow on either tail.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double logistic_fn(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

bool excludes(const Triple* excluded, const Triple& edge, int base_relations) {
    if (excluded == nullptr) return false;
    // A fact and its inverse twin are the same evidence; drop both.
    if (edge == *excluded) return true;
    return edge.head == excluded->tail && edge.tail == excluded->head &&
           edge.rel == excluded->rel + base_relations;
}

}  // namespace

NodeId Tape::push(OpKind kind, Tensor value, std::vector<NodeId> inputs,
                  std::function<void(Tape&, Node&)> back) {
    Node n;
    n.value = std::move(value);
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(Tensor v) { return push(OpKind::constant, std::move(v), {}, nullptr); }

NodeId Tape::watch(Parameter& p) {
    const NodeId id = push(OpKind::param, p.value, {}, nullptr);
    node(id).param = &p;
    return id;
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    Tensor out = duet::matmul(value(a), value(b));
    return push(OpKind::matmul, std::move(out), {a, b}, [](Tape& t, Node& n) {
        const Tensor& g = n.grad;
        t.grad(n.inputs[0]) = duet::add(t.grad(n.inputs[0]),
                                        duet::matmul(g, duet::transpose(t.value(n.inputs[1]))));
        t.grad(n.inputs[1]) = duet::add(t.grad(n.inputs[1]),
                                        duet::matmul(duet::transpose(t.value(n.inputs[0])), g));
    });
}

NodeId Tape::matvec(NodeId m, NodeId v) {
    Tensor out = duet::matvec(value(m), value(v));
    return push(OpKind::matvec, std::move(out), {m, v}, [](Tape& t, Node& n) {
        const Tensor& g = n.grad;
        const Tensor& mv = t.value(n.inputs[0]);
        const Tensor& vv = t.value(n.inputs[1]);
        Tensor& gm = t.grad(n.inputs[0]);
        Tensor& gv = t.grad(n.inputs[1]);
        const size_t r = mv.rows(), c = mv.cols();
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j) {
                gm.data[i * c + j] += g.data[i] * vv.data[j];
                gv.data[j] += g.data[i] * mv.data[i * c + j];
            }
    });
}

NodeId Tape::transpose(NodeId a) {
    Tensor out = duet::transpose(value(a));
    return push(OpKind::transpose, std::move(out), {a}, [](Tape& t, Node& n) {
        t.grad(n.inputs[0]) = duet::add(t.grad(n.inputs[0]), duet::transpose(n.grad));
    });
}

NodeId Tape::add(NodeId a, NodeId b) {
    Tensor out = duet::add(value(a), value(b));
    return push(OpKind::add, std::move(out), {a, b}, [](Tape& t, Node& n) {
        t.grad(n.inputs[0]) = duet::add(t.grad(n.inputs[0]), n.grad);
        t.grad(n.inputs[1]) = duet::add(t.grad(n.inputs[1]), n.grad);
    });
}

NodeId Tape::sub(NodeId a, NodeId b) {
    Tensor out = duet::sub(value(a), value(b));
    return push(OpKind::sub, std::move(out), {a, b}, [](Tape& t, Node& n) {
        t.grad(n.inputs[0]) = duet::add(t.grad(n.inputs[0]), n.grad);
        t.grad(n.inputs[1]) = duet::sub(t.grad(n.inputs[1]), n.grad);
    });
}

NodeId Tape::mul(NodeId a, NodeId b) {
    Tensor out = duet::mul(value(a), value(b));
    return push(OpKind::mul, std::move(out), {a, b}, [](Tape& t, Node& n) {
        t.grad(n.inputs[0]) =
            duet::add(t.grad(n.inputs[0]), duet::mul(n.grad, t.value(n.inputs[1])));
        t.grad(n.inputs[1]) =
            duet::add(t.grad(n.inputs[1]), duet::mul(n.grad, t.value(n.inputs[0])));
    });
}

NodeId Tape::scale(NodeId a, double c) {
    Tensor out = duet::scale(value(a), c);
    return push(OpKind::scale, std::move(out), {a}, [c](Tape& t, Node& n) {
        t.grad(n.inputs[0]) = duet::add(t.grad(n.inputs[0]), duet::scale(n.grad, c));
    });
}

NodeId Tape::neg(NodeId a) { return scale(a, -1.0); }

NodeId Tape::add_row_bias(NodeId m, NodeId bias) {
    const Tensor& mv = value(m);
    const Tensor& bv = value(bias);
    if (bv.rank() != 1 || mv.cols() != bv.shape[0])
        throw ShapeError("add_row_bias: bias length must equal column count");
    Tensor out = mv;
    const size_t r = mv.rows(), c = mv.cols();
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out.data[i * c + j] += bv.data[j];
    return push(OpKind::add_row_bias, std::move(out), {m, bias}, [](Tape& t, Node& n) {
        Tensor& gm = t.grad(n.inputs[0]);
        Tensor& gb = t.grad(n.inputs[1]);
        const size_t r = gm.rows(), c = gm.cols();
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j) {
                gm.data[i * c + j] += n.grad.data[i * c + j];
                gb.data[j] += n.grad.data[i * c + j];
            }
    });
}

NodeId Tape::relu(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return push(OpKind::relu, std::move(out), {a}, [](Tape& t, Node& n) {
        Tensor& ga = t.grad(n.inputs[0]);
        const Tensor& x = t.value(n.inputs[0]);
        for (size_t i = 0; i < ga.numel(); ++i)
            if (x.data[i] > 0.0) ga.data[i] += n.grad.data[i];
    });
}

NodeId Tape::tanh_act(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = std::tanh(v);
    return push(OpKind::tanh_act, std::move(out), {a}, [](Tape& t, Node& n) {
        Tensor& ga = t.grad(n.inputs[0]);
        for (size_t i = 0; i < ga.numel(); ++i)
            ga.data[i] += n.grad.data[i] * (1.0 - n.value.data[i] * n.value.data[i]);
    });
}

NodeId Tape::softplus(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = stable_softplus(v);
    return push(OpKind::softplus, std::move(out), {a}, [](Tape& t, Node& n) {
        Tensor& ga = t.grad(n.inputs[0]);
        const Tensor& x = t.value(n.inputs[0]);
        for (size_t i = 0; i < ga.numel(); ++i)
            ga.data[i] += n.grad.data[i] * logistic_fn(x.data[i]);
    });
}

NodeId Tape::logistic(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = logistic_fn(v);
    return push(OpKind::logistic, std::move(out), {a}, [](Tape& t, Node& n) {
        Tensor& ga = t.grad(n.inputs[0]);
        for (size_t i = 0; i < ga.numel(); ++i)
            ga.data[i] += n.grad.data[i] * n.value.data[i] * (1.0 - n.value.data[i]);
    });
}

NodeId Tape::reciprocal(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = 1.0 / v;
    return push(OpKind::reciprocal, std::move(out), {a}, [](Tape& t, Node& n) {
        Tensor& ga = t.grad(n.inputs[0]);
        for (size_t i = 0; i < ga.numel(); ++i)
            ga.data[i] -= n.grad.data[i] * n.value.data[i] * n.value.data[i];
    });
}

NodeId Tape::softmax_rows(NodeId m) {
    Tensor out = duet::softmax_rows(value(m));
    return push(OpKind::softmax_rows, std::move(out), {m}, [](Tape& t, Node& n) {
        Tensor& gm = t.grad(n.inputs[0]);
        const size_t r = n.value.rows(), c = n.value.cols();
        for (size_t i = 0; i < r; ++i) {
            const double* p = &n.value.data[i * c];
            const double* g = &n.grad.data[i * c];
            double dot = 0.0;
            for (size_t j = 0; j < c; ++j) dot += p[j] * g[j];
            double* gi = &gm.data[i * c];
            for (size_t j = 0; j < c; ++j) gi[j] += (g[j] - dot) * p[j];
        }
    });
}

NodeId Tape::row_sums(NodeId m) {
    const Tensor& mv = value(m);
    const size_t r = mv.rows(), c = mv.cols();
    Tensor out = Tensor::zeros({r});
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out.data[i] += mv.data[i * c + j];
    return push(OpKind::row_sums, std::move(out), {m}, [](Tape& t, Node& n) {
        Tensor& gm = t.grad(n.inputs[0]);
        const size_t r = gm.rows(), c = gm.cols();
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j) gm.data[i * c + j] += n.grad.data[i];
    });
}

NodeId Tape::col_sums(NodeId m) {
    const Tensor& mv = value(m);
    const size_t r = mv.rows(), c = mv.cols();
    Tensor out = Tensor::zeros({c});
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out.data[j] += mv.data[i * c + j];
    return push(OpKind::col_sums, std::move(out), {m}, [](Tape& t, Node& n) {
        Tensor& gm = t.grad(n.inputs[0]);
        const size_t r = gm.rows(), c = gm.cols();
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j) gm.data[i * c + j] += n.grad.data[j];
    });
}

NodeId Tape::sum_all(NodeId a) {
    double s = 0.0;
    for (double v : value(a).data) s += v;
    return push(OpKind::sum_all, Tensor::scalar(s), {a}, [](Tape& t, Node& n) {
        Tensor& ga = t.grad(n.inputs[0]);
        for (auto& v : ga.data) v += n.grad.data[0];
    });
}

NodeId Tape::rows_scale(NodeId m, NodeId s) {
    const Tensor& mv = value(m);
    const Tensor& sv = value(s);
    if (sv.rank() != 1 || sv.shape[0] != mv.rows())
        throw ShapeError("rows_scale: scale vector length must equal row count");
    Tensor out = mv;
    const size_t r = mv.rows(), c = mv.cols();
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out.data[i * c + j] *= sv.data[i];
    return push(OpKind::rows_scale, std::move(out), {m, s}, [](Tape& t, Node& n) {
        const Tensor& mv = t.value(n.inputs[0]);
        const Tensor& sv = t.value(n.inputs[1]);
        Tensor& gm = t.grad(n.inputs[0]);
        Tensor& gs = t.grad(n.inputs[1]);
        const size_t r = mv.rows(), c = mv.cols();
        for (size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (size_t j = 0; j < c; ++j) {
                gm.data[i * c + j] += n.grad.data[i * c + j] * sv.data[i];
                acc += n.grad.data[i * c + j] * mv.data[i * c + j];
            }
            gs.data[i] += acc;
        }
    });
}

NodeId Tape::rows_mul(NodeId m, NodeId v) {
    const Tensor& mv = value(m);
    const Tensor& vv = value(v);
    if (vv.rank() != 1 || vv.shape[0] != mv.cols())
        throw ShapeError("rows_mul: vector length must equal column count");
    Tensor out = mv;
    const size_t r = mv.rows(), c = mv.cols();
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out.data[i * c + j] *= vv.data[j];
    return push(OpKind::rows_mul, std::move(out), {m, v}, [](Tape& t, Node& n) {
        const Tensor& mv = t.value(n.inputs[0]);
        const Tensor& vv = t.value(n.inputs[1]);
        Tensor& gm = t.grad(n.inputs[0]);
        Tensor& gv = t.grad(n.inputs[1]);
        const size_t r = mv.rows(), c = mv.cols();
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j) {
                gm.data[i * c + j] += n.grad.data[i * c + j] * vv.data[j];
                gv.data[j] += n.grad.data[i * c + j] * mv.data[i * c + j];
            }
    });
}

NodeId Tape::gather_rows(NodeId m, std::vector<size_t> rows) {
    const Tensor& mv = value(m);
    const size_t c = mv.cols();
    Tensor out = Tensor::zeros({rows.size(), c});
    for (size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] >= mv.rows()) throw ContractError("gather_rows: row index out of range");
        for (size_t j = 0; j < c; ++j) out.data[k * c + j] = mv.data[rows[k] * c + j];
    }
    return push(OpKind::gather_rows, std::move(out), {m},
                [rows = std::move(rows)](Tape& t, Node& n) {
                    Tensor& gm = t.grad(n.inputs[0]);
                    const size_t c = gm.cols();
                    for (size_t k = 0; k < rows.size(); ++k)
                        for (size_t j = 0; j < c; ++j)
                            gm.data[rows[k] * c + j] += n.grad.data[k * c + j];
                });
}

NodeId Tape::gather(NodeId v, std::vector<size_t> idx) {
    const Tensor& vv = value(v);
    if (vv.rank() != 1) throw ShapeError("gather: vector required");
    Tensor out = Tensor::zeros({idx.size()});
    for (size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= vv.shape[0]) throw ContractError("gather: index out of range");
        out.data[k] = vv.data[idx[k]];
    }
    return push(OpKind::gather, std::move(out), {v}, [idx = std::move(idx)](Tape& t, Node& n) {
        Tensor& gv = t.grad(n.inputs[0]);
        for (size_t k = 0; k < idx.size(); ++k) gv.data[idx[k]] += n.grad.data[k];
    });
}

NodeId Tape::lerp(NodeId alpha, NodeId x, NodeId y) {
    const Tensor& av = value(alpha);
    if (!av.is_scalar()) throw ContractError("lerp: alpha must be scalar");
    const Tensor& xv = value(x);
    const Tensor& yv = value(y);
    if (!xv.same_shape(yv))
        throw ShapeError("lerp: shape mismatch, " + xv.shape_str() + " vs " + yv.shape_str());
    const double a = av.data[0];
    Tensor out = xv;
    for (size_t i = 0; i < out.numel(); ++i) out.data[i] = a * xv.data[i] + (1.0 - a) * yv.data[i];
    return push(OpKind::lerp, std::move(out), {alpha, x, y}, [](Tape& t, Node& n) {
        const double a = t.value(n.inputs[0]).data[0];
        const Tensor& xv = t.value(n.inputs[1]);
        const Tensor& yv = t.value(n.inputs[2]);
        Tensor& galpha = t.grad(n.inputs[0]);
        Tensor& gx = t.grad(n.inputs[1]);
        Tensor& gy = t.grad(n.inputs[2]);
        double acc = 0.0;
        for (size_t i = 0; i < xv.numel(); ++i) {
            gx.data[i] += a * n.grad.data[i];
            gy.data[i] += (1.0 - a) * n.grad.data[i];
            acc += n.grad.data[i] * (xv.data[i] - yv.data[i]);
        }
        galpha.data[0] += acc;
    });
}

NodeId Tape::seed_row(NodeId emb, size_t emb_row, size_t target, size_t n_rows) {
    const Tensor& ev = value(emb);
    const size_t d = ev.cols();
    if (emb_row >= ev.rows()) throw ContractError("seed_row: embedding row out of range");
    if (target >= n_rows) throw ContractError("seed_row: target row out of range");
    Tensor out = Tensor::zeros({n_rows, d});
    for (size_t j = 0; j < d; ++j) out.data[target * d + j] = ev.data[emb_row * d + j];
    return push(OpKind::seed_row, std::move(out), {emb}, [emb_row, target](Tape& t, Node& n) {
        Tensor& ge = t.grad(n.inputs[0]);
        const size_t d = ge.cols();
        for (size_t j = 0; j < d; ++j) ge.data[emb_row * d + j] += n.grad.data[target * d + j];
    });
}

NodeId Tape::reshape(NodeId a, Shape s) {
    const Tensor& av = value(a);
    if (shape_numel(s) != av.numel()) throw ShapeError("reshape: element count mismatch");
    Tensor out(std::move(s), av.data);
    return push(OpKind::reshape, std::move(out), {a}, [](Tape& t, Node& n) {
        Tensor& ga = t.grad(n.inputs[0]);
        for (size_t i = 0; i < ga.numel(); ++i) ga.data[i] += n.grad.data[i];
    });
}

NodeId Tape::relational_mean_pass(NodeId x, NodeId rel, const KnowledgeGraph& g,
                                  const Triple* excluded) {
    const Tensor& xv = value(x);
    const Tensor& rv = value(rel);
    const size_t n = xv.rows(), d = xv.cols();
    if (n != g.n_entities()) throw ShapeError("relational_mean_pass: row count != |V|");
    if (rv.rows() != g.n_relations_total() || rv.cols() != d)
        throw ShapeError("relational_mean_pass: relation embedding shape mismatch");
    const int base = static_cast<int>(g.n_relations_base());
    Tensor out = Tensor::zeros({n, d});
    for (const auto& e : g.triples()) {
        if (excludes(excluded, e, base)) continue;
        const double w = 1.0 / g.in_degree(e.tail);
        const double* xu = &xv.data[static_cast<size_t>(e.head) * d];
        const double* wr = &rv.data[static_cast<size_t>(e.rel) * d];
        double* ov = &out.data[static_cast<size_t>(e.tail) * d];
        for (size_t j = 0; j < d; ++j) ov[j] += w * xu[j] * wr[j];
    }
    Triple excl = excluded ? *excluded : Triple{};
    const bool has_excl = excluded != nullptr;
    return push(OpKind::relational_mean_pass, std::move(out), {x, rel},
                [&g, excl, has_excl, base](Tape& t, Node& n) {
                    const Tensor& xv = t.value(n.inputs[0]);
                    const Tensor& rv = t.value(n.inputs[1]);
                    Tensor& gx = t.grad(n.inputs[0]);
                    Tensor& gr = t.grad(n.inputs[1]);
                    const size_t d = xv.cols();
                    for (const auto& e : g.triples()) {
                        if (has_excl && excludes(&excl, e, base)) continue;
                        const double w = 1.0 / g.in_degree(e.tail);
                        const double* go = &n.grad.data[static_cast<size_t>(e.tail) * d];
                        const double* xu = &xv.data[static_cast<size_t>(e.head) * d];
                        const double* wr = &rv.data[static_cast<size_t>(e.rel) * d];
                        double* gxu = &gx.data[static_cast<size_t>(e.head) * d];
                        double* grr = &gr.data[static_cast<size_t>(e.rel) * d];
                        for (size_t j = 0; j < d; ++j) {
                            gxu[j] += w * go[j] * wr[j];
                            grr[j] += w * go[j] * xu[j];
                        }
                    }
                });
}

NodeId Tape::neighbor_average(NodeId x, const KnowledgeGraph& g, const Triple* excluded) {
    const Tensor& xv = value(x);
    const size_t n = xv.rows(), d = xv.cols();
    if (n != g.n_entities()) throw ShapeError("neighbor_average: row count != |V|");
    const int base = static_cast<int>(g.n_relations_base());
    Tensor out = Tensor::zeros({n, d});
    std::vector<double> inv(n);
    for (size_t v = 0; v < n; ++v) {
        inv[v] = 1.0 / (1.0 + g.in_degree(static_cast<int>(v)));
        for (size_t j = 0; j < d; ++j) out.data[v * d + j] = xv.data[v * d + j] * inv[v];
    }
    for (const auto& e : g.triples()) {
        if (excludes(excluded, e, base)) continue;
        const double w = inv[static_cast<size_t>(e.tail)];
        const double* xu = &xv.data[static_cast<size_t>(e.head) * d];
        double* ov = &out.data[static_cast<size_t>(e.tail) * d];
        for (size_t j = 0; j < d; ++j) ov[j] += w * xu[j];
    }
    Triple excl = excluded ? *excluded : Triple{};
    const bool has_excl = excluded != nullptr;
    return push(OpKind::neighbor_average, std::move(out), {x},
                [&g, excl, has_excl, base, inv = std::move(inv)](Tape& t, Node& n) {
                    Tensor& gx = t.grad(n.inputs[0]);
                    const size_t nrows = gx.rows(), d = gx.cols();
                    for (size_t v = 0; v < nrows; ++v)
                        for (size_t j = 0; j < d; ++j)
                            gx.data[v * d + j] += n.grad.data[v * d + j] * inv[v];
                    for (const auto& e : g.triples()) {
                        if (has_excl && excludes(&excl, e, base)) continue;
                        const double w = inv[static_cast<size_t>(e.tail)];
                        const double* go = &n.grad.data[static_cast<size_t>(e.tail) * d];
                        double* gxu = &gx.data[static_cast<size_t>(e.head) * d];
                        for (size_t j = 0; j < d; ++j) gxu[j] += w * go[j];
                    }
                });
}

void Tape::backward(NodeId loss) {
    if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
        throw ContractError("backward: unknown node");
    if (!node(loss).value.is_scalar())
        throw ContractError("backward: loss must be scalar, got shape " +
                            node(loss).value.shape_str());
    for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
    node(loss).grad.data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = node(id);
        if (n.back) n.back(*this, n);
    }
    for (auto& n : nodes_)
        if (n.param) n.param->grad = duet::add(n.param->grad, n.grad);
}

}  // namespace duet
