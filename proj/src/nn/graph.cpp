#include "sr/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sr/core/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sr::nn {

namespace {

bool any_grad(const std::vector<NodePtr>& parents) {
    return std::any_of(parents.begin(), parents.end(),
                       [](const NodePtr& p) { return p->requires_grad; });
}

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->requires_grad = any_grad(n->parents);
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// reflect-101 index (never repeats the border sample)
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

} // namespace

NodePtr constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = false;
    return n;
}

NodePtr leaf(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = true;
    return n;
}

namespace {

// Bounds of ox such that ix = ox*stride + kx - p stays inside [0, w).
struct XRange {
    int lo, hi;
};
XRange ox_range(int w, int ow, int stride, int kx, int p) {
    int lo = 0;
    const int off = kx - p;
    if (off < 0) lo = (-off + stride - 1) / stride;
    int hi = ow;
    // need ox*stride + off <= w-1
    const int max_ox = (w - 1 - off) / stride;
    if (max_ox + 1 < hi) hi = max_ox + 1;
    if (hi < lo) hi = lo;
    return {lo, hi};
}

} // namespace

NodePtr conv2d(const NodePtr& x, const NodePtr& w, const NodePtr& b, int stride,
               PadMode pad) {
    const Tensor& in = x->value;
    const Tensor& wt = w->value;
    const int ci = in.channels(), h = in.height(), wd = in.width();
    const int co = wt.channels();
    const int kk = wt.width();
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kk))));
    if (k * k != kk || wt.height() != ci)
        throw core::ContractError("conv2d: weight shape does not match input");
    if (b->value.channels() != co)
        throw core::ContractError("conv2d: bias shape does not match weight");
    const int p = k / 2;
    const int oh = ceil_div(h, stride), ow = ceil_div(wd, stride);
    const bool reflect = pad == PadMode::Reflect;

    Tensor out(co, oh, ow);
    // shifted-row accumulation: contiguous inner loops per (oc, ic, ky, kx)
#pragma omp parallel for schedule(static) if (static_cast<long>(co) * oh * ow > 8192)
    for (int oc = 0; oc < co; ++oc) {
        real* out_plane = out.data() + static_cast<size_t>(oc) * oh * ow;
        for (int i = 0; i < oh * ow; ++i) out_plane[i] = b->value[oc];
        for (int ic = 0; ic < ci; ++ic) {
            const real* in_plane = in.data() + static_cast<size_t>(ic) * h * wd;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const real wv = wt.at(oc, ic, ky * k + kx);
                    if (wv == 0.0) continue;
                    if (!reflect) {
                        const auto [lo, hi] = ox_range(wd, ow, stride, kx, p);
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride + ky - p;
                            if (iy < 0 || iy >= h) continue;
                            real* orow = out_plane + static_cast<size_t>(oy) * ow;
                            const real* irow =
                                in_plane + static_cast<size_t>(iy) * wd + (kx - p);
                            for (int ox = lo; ox < hi; ++ox)
                                orow[ox] += wv * irow[ox * stride];
                        }
                    } else {
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = reflect_index(oy * stride + ky - p, h);
                            real* orow = out_plane + static_cast<size_t>(oy) * ow;
                            const real* irow = in_plane + static_cast<size_t>(iy) * wd;
                            for (int ox = 0; ox < ow; ++ox)
                                orow[ox] +=
                                    wv * irow[reflect_index(ox * stride + kx - p, wd)];
                        }
                    }
                }
            }
        }
    }

    Node* xp = x.get();
    Node* wp = w.get();
    Node* bp = b.get();
    return make_node(std::move(out), {x, w, b}, [=, ci = ci, h = h, wd = wd, co = co,
                                                 k = k, p = p, oh = oh, ow = ow,
                                                 stride = stride,
                                                 reflect = reflect](Node& self) {
        const Tensor& g = self.grad;
        const Tensor& in = xp->value;
        const Tensor& wt = wp->value;

        if (bp->requires_grad) {
            bp->ensure_grad();
            for (int oc = 0; oc < co; ++oc) {
                const real* gp = g.data() + static_cast<size_t>(oc) * oh * ow;
                real s = 0;
                for (int i = 0; i < oh * ow; ++i) s += gp[i];
                bp->grad[oc] += s;
            }
        }

        if (wp->requires_grad) {
            wp->ensure_grad();
            Tensor& wg = wp->grad;
#pragma omp parallel for schedule(static) if (static_cast<long>(co) * ci * oh * ow > 8192)
            for (int oc = 0; oc < co; ++oc) {
                const real* g_plane = g.data() + static_cast<size_t>(oc) * oh * ow;
                for (int ic = 0; ic < ci; ++ic) {
                    const real* in_plane = in.data() + static_cast<size_t>(ic) * h * wd;
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            real s = 0;
                            if (!reflect) {
                                const auto [lo, hi] = ox_range(wd, ow, stride, kx, p);
                                for (int oy = 0; oy < oh; ++oy) {
                                    const int iy = oy * stride + ky - p;
                                    if (iy < 0 || iy >= h) continue;
                                    const real* grow =
                                        g_plane + static_cast<size_t>(oy) * ow;
                                    const real* irow = in_plane +
                                                       static_cast<size_t>(iy) * wd +
                                                       (kx - p);
                                    for (int ox = lo; ox < hi; ++ox)
                                        s += grow[ox] * irow[ox * stride];
                                }
                            } else {
                                for (int oy = 0; oy < oh; ++oy) {
                                    const int iy = reflect_index(oy * stride + ky - p, h);
                                    const real* grow =
                                        g_plane + static_cast<size_t>(oy) * ow;
                                    const real* irow =
                                        in_plane + static_cast<size_t>(iy) * wd;
                                    for (int ox = 0; ox < ow; ++ox)
                                        s += grow[ox] *
                                             irow[reflect_index(ox * stride + kx - p, wd)];
                                }
                            }
                            wg.at(oc, ic, ky * k + kx) += s;
                        }
                    }
                }
            }
        }

        if (xp->requires_grad) {
            xp->ensure_grad();
            Tensor& xg = xp->grad;
            // transposed shifted-row scatter, channel-parallel so each thread
            // owns its input plane
#pragma omp parallel for schedule(static) if (static_cast<long>(ci) * h * wd > 8192)
            for (int ic = 0; ic < ci; ++ic) {
                real* xg_plane = xg.data() + static_cast<size_t>(ic) * h * wd;
                for (int oc = 0; oc < co; ++oc) {
                    const real* g_plane = g.data() + static_cast<size_t>(oc) * oh * ow;
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const real wv = wt.at(oc, ic, ky * k + kx);
                            if (wv == 0.0) continue;
                            if (!reflect) {
                                const auto [lo, hi] = ox_range(wd, ow, stride, kx, p);
                                for (int oy = 0; oy < oh; ++oy) {
                                    const int iy = oy * stride + ky - p;
                                    if (iy < 0 || iy >= h) continue;
                                    const real* grow =
                                        g_plane + static_cast<size_t>(oy) * ow;
                                    real* xrow = xg_plane +
                                                 static_cast<size_t>(iy) * wd + (kx - p);
                                    for (int ox = lo; ox < hi; ++ox)
                                        xrow[ox * stride] += wv * grow[ox];
                                }
                            } else {
                                for (int oy = 0; oy < oh; ++oy) {
                                    const int iy = reflect_index(oy * stride + ky - p, h);
                                    const real* grow =
                                        g_plane + static_cast<size_t>(oy) * ow;
                                    real* xrow = xg_plane + static_cast<size_t>(iy) * wd;
                                    for (int ox = 0; ox < ow; ++ox)
                                        xrow[reflect_index(ox * stride + kx - p, wd)] +=
                                            wv * grow[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

NodePtr instance_norm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                      real eps) {
    const Tensor& in = x->value;
    const int c = in.channels(), h = in.height(), w = in.width();
    const int hw = h * w;
    if (gamma->value.channels() != c || beta->value.channels() != c)
        throw core::ContractError("instance_norm: affine shape mismatch");

    Tensor out(c, h, w);
    std::vector<real> mean(c), inv_std(c);
    for (int ch = 0; ch < c; ++ch) {
        real m = 0;
        for (int i = 0; i < hw; ++i) m += in.data()[ch * hw + i];
        m /= hw;
        real v = 0;
        for (int i = 0; i < hw; ++i) {
            real d = in.data()[ch * hw + i] - m;
            v += d * d;
        }
        v /= hw;
        mean[ch] = m;
        inv_std[ch] = 1.0 / std::sqrt(v + eps);
        const real g = gamma->value[ch], b = beta->value[ch];
        for (int i = 0; i < hw; ++i)
            out.data()[ch * hw + i] = g * (in.data()[ch * hw + i] - m) * inv_std[ch] + b;
    }

    Node* xp = x.get();
    Node* gp = gamma.get();
    Node* bp = beta.get();
    return make_node(std::move(out), {x, gamma, beta},
                     [=, mean = std::move(mean), inv_std = std::move(inv_std), c = c,
                      hw = hw](Node& self) {
                         const Tensor& g = self.grad;
                         const Tensor& in = xp->value;
                         for (int ch = 0; ch < c; ++ch) {
                             const real* xi = in.data() + static_cast<size_t>(ch) * hw;
                             const real* gi = g.data() + static_cast<size_t>(ch) * hw;
                             const real is = inv_std[ch];
                             const real m = mean[ch];
                             real sum_g = 0, sum_gx = 0;
                             for (int i = 0; i < hw; ++i) {
                                 sum_g += gi[i];
                                 sum_gx += gi[i] * (xi[i] - m) * is;
                             }
                             if (gp->requires_grad) {
                                 gp->ensure_grad();
                                 gp->grad[ch] += sum_gx;
                             }
                             if (bp->requires_grad) {
                                 bp->ensure_grad();
                                 bp->grad[ch] += sum_g;
                             }
                             if (xp->requires_grad) {
                                 xp->ensure_grad();
                                 real* xg = xp->grad.data() + static_cast<size_t>(ch) * hw;
                                 const real gam = gp->value[ch];
                                 const real mg = sum_g / hw, mgx = sum_gx / hw;
                                 for (int i = 0; i < hw; ++i) {
                                     real xhat = (xi[i] - m) * is;
                                     xg[i] += gam * is * (gi[i] - mg - xhat * mgx);
                                 }
                             }
                         }
                     });
}

NodePtr relu(const NodePtr& x) {
    Tensor out = x->value;
    for (size_t i = 0; i < out.size(); ++i)
        if (out[i] < 0) out[i] = 0;
    Node* xp = x.get();
    return make_node(std::move(out), {x}, [xp](Node& self) {
        xp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            if (xp->value[i] > 0) xp->grad[i] += self.grad[i];
    });
}

NodePtr silu(const NodePtr& x) {
    Tensor out = x->value;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = out[i] / (1.0 + std::exp(-out[i]));
    Node* xp = x.get();
    return make_node(std::move(out), {x}, [xp](Node& self) {
        xp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const real v = xp->value[i];
            const real s = 1.0 / (1.0 + std::exp(-v));
            xp->grad[i] += self.grad[i] * s * (1.0 + v * (1.0 - s));
        }
    });
}

NodePtr sigmoid(const NodePtr& x) {
    Tensor out = x->value;
    for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    Node* xp = x.get();
    return make_node(std::move(out), {x}, [xp](Node& self) {
        xp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            real s = self.value[i];
            xp->grad[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

NodePtr tanh_act(const NodePtr& x) {
    Tensor out = x->value;
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    Node* xp = x.get();
    return make_node(std::move(out), {x}, [xp](Node& self) {
        xp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            real t = self.value[i];
            xp->grad[i] += self.grad[i] * (1.0 - t * t);
        }
    });
}

NodePtr upsample_nearest2(const NodePtr& x) {
    const Tensor& in = x->value;
    const int c = in.channels(), h = in.height(), w = in.width();
    Tensor out(c, h * 2, w * 2);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                out.at(ch, y, xx) = in.at(ch, y / 2, xx / 2);
    Node* xp = x.get();
    return make_node(std::move(out), {x}, [xp, c, h, w](Node& self) {
        xp->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx)
                    xp->grad.at(ch, y / 2, xx / 2) += self.grad.at(ch, y, xx);
    });
}

NodePtr concat_channels(const NodePtr& a, const NodePtr& b) {
    const Tensor& ta = a->value;
    const Tensor& tb = b->value;
    if (ta.height() != tb.height() || ta.width() != tb.width())
        throw core::ContractError("concat_channels: spatial mismatch");
    const int ca = ta.channels(), cb = tb.channels();
    Tensor out(ca + cb, ta.height(), ta.width());
    std::copy(ta.data(), ta.data() + ta.size(), out.data());
    std::copy(tb.data(), tb.data() + tb.size(), out.data() + ta.size());
    Node* ap = a.get();
    Node* bp = b.get();
    return make_node(std::move(out), {a, b}, [ap, bp](Node& self) {
        const size_t na = ap->value.size();
        if (ap->requires_grad) {
            ap->ensure_grad();
            for (size_t i = 0; i < na; ++i) ap->grad[i] += self.grad[i];
        }
        if (bp->requires_grad) {
            bp->ensure_grad();
            for (size_t i = 0; i < bp->value.size(); ++i)
                bp->grad[i] += self.grad[na + i];
        }
    });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value)) throw core::ContractError("add: shape mismatch");
    Tensor out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
    Node* ap = a.get();
    Node* bp = b.get();
    return make_node(std::move(out), {a, b}, [ap, bp](Node& self) {
        for (Node* p : {ap, bp}) {
            if (!p->requires_grad) continue;
            p->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value)) throw core::ContractError("sub: shape mismatch");
    Tensor out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
    Node* ap = a.get();
    Node* bp = b.get();
    return make_node(std::move(out), {a, b}, [ap, bp](Node& self) {
        if (ap->requires_grad) {
            ap->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += self.grad[i];
        }
        if (bp->requires_grad) {
            bp->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) bp->grad[i] -= self.grad[i];
        }
    });
}

NodePtr scale(const NodePtr& a, real s) {
    Tensor out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out[i] *= s;
    Node* ap = a.get();
    return make_node(std::move(out), {a}, [ap, s](Node& self) {
        ap->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += s * self.grad[i];
    });
}

NodePtr hypot_smooth(const NodePtr& a, const NodePtr& b, real eps) {
    if (!a->value.same_shape(b->value))
        throw core::ContractError("hypot_smooth: shape mismatch");
    Tensor out = a->value;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = std::sqrt(a->value[i] * a->value[i] + b->value[i] * b->value[i] + eps);
    Node* ap = a.get();
    Node* bp = b.get();
    return make_node(std::move(out), {a, b}, [ap, bp](Node& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const real m = self.value[i];
            const real g = self.grad[i] / m;
            if (ap->requires_grad) {
                ap->ensure_grad();
                ap->grad[i] += g * ap->value[i];
            }
            if (bp->requires_grad) {
                bp->ensure_grad();
                bp->grad[i] += g * bp->value[i];
            }
        }
    });
}

NodePtr reflect_pad(const NodePtr& x, int right, int bottom) {
    const Tensor& in = x->value;
    const int c = in.channels(), h = in.height(), w = in.width();
    if (right >= w || bottom >= h)
        throw core::ContractError("reflect_pad: pad exceeds image size");
    Tensor out(c, h + bottom, w + right);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h + bottom; ++y)
            for (int xx = 0; xx < w + right; ++xx)
                out.at(ch, y, xx) = in.at(ch, reflect_index(y, h), reflect_index(xx, w));
    Node* xp = x.get();
    return make_node(std::move(out), {x}, [xp, c, h, w, right, bottom](Node& self) {
        xp->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h + bottom; ++y)
                for (int xx = 0; xx < w + right; ++xx)
                    xp->grad.at(ch, reflect_index(y, h), reflect_index(xx, w)) +=
                        self.grad.at(ch, y, xx);
    });
}

NodePtr crop_top_left(const NodePtr& x, int h, int w) {
    const Tensor& in = x->value;
    const int c = in.channels();
    if (h > in.height() || w > in.width())
        throw core::ContractError("crop_top_left: crop exceeds image");
    Tensor out(c, h, w);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at(ch, y, xx) = in.at(ch, y, xx);
    Node* xp = x.get();
    return make_node(std::move(out), {x}, [xp, c, h, w](Node& self) {
        xp->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx)
                    xp->grad.at(ch, y, xx) += self.grad.at(ch, y, xx);
    });
}

NodePtr gram(const NodePtr& f) {
    const Tensor& in = f->value;
    const int c = in.channels(), hw = in.height() * in.width();
    Tensor out(1, c, c);
    for (int a = 0; a < c; ++a) {
        const real* fa = in.data() + static_cast<size_t>(a) * hw;
        for (int b = a; b < c; ++b) {
            const real* fb = in.data() + static_cast<size_t>(b) * hw;
            real s = 0;
            for (int i = 0; i < hw; ++i) s += fa[i] * fb[i];
            s /= hw;
            out.at(0, a, b) = s;
            out.at(0, b, a) = s;
        }
    }
    Node* fp = f.get();
    return make_node(std::move(out), {f}, [fp, c, hw](Node& self) {
        fp->ensure_grad();
        // dL/dF[a] = sum_b (G'[a][b] + G'[b][a]) F[b] / (H*W)
        for (int a = 0; a < c; ++a) {
            real* ga = fp->grad.data() + static_cast<size_t>(a) * hw;
            for (int b = 0; b < c; ++b) {
                const real coef =
                    (self.grad.at(0, a, b) + self.grad.at(0, b, a)) / hw;
                if (coef == 0.0) continue;
                const real* fb = fp->value.data() + static_cast<size_t>(b) * hw;
                for (int i = 0; i < hw; ++i) ga[i] += coef * fb[i];
            }
        }
    });
}

NodePtr mse(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value)) throw core::ContractError("mse: shape mismatch");
    const size_t n = a->value.size();
    real s = 0;
    for (size_t i = 0; i < n; ++i) {
        real d = a->value[i] - b->value[i];
        s += d * d;
    }
    Tensor out(1, 1, 1);
    out[0] = s / static_cast<real>(n);
    Node* ap = a.get();
    Node* bp = b.get();
    return make_node(std::move(out), {a, b}, [ap, bp, n](Node& self) {
        const real g = self.grad[0] * 2.0 / static_cast<real>(n);
        if (ap->requires_grad) {
            ap->ensure_grad();
            for (size_t i = 0; i < n; ++i)
                ap->grad[i] += g * (ap->value[i] - bp->value[i]);
        }
        if (bp->requires_grad) {
            bp->ensure_grad();
            for (size_t i = 0; i < n; ++i)
                bp->grad[i] -= g * (ap->value[i] - bp->value[i]);
        }
    });
}

NodePtr weighted_sum(const std::vector<std::pair<NodePtr, real>>& terms) {
    if (terms.empty()) throw core::ContractError("weighted_sum: no terms");
    real s = 0;
    std::vector<NodePtr> parents;
    std::vector<real> weights;
    for (const auto& [node, w] : terms) {
        if (!is_scalar(node->value))
            throw core::ContractError("weighted_sum: non-scalar term");
        s += w * node->value[0];
        parents.push_back(node);
        weights.push_back(w);
    }
    Tensor out(1, 1, 1);
    out[0] = s;
    std::vector<Node*> raw;
    for (auto& p : parents) raw.push_back(p.get());
    return make_node(std::move(out), std::move(parents),
                     [raw = std::move(raw), weights = std::move(weights)](Node& self) {
                         for (size_t k = 0; k < raw.size(); ++k) {
                             if (!raw[k]->requires_grad) continue;
                             raw[k]->ensure_grad();
                             raw[k]->grad[0] += weights[k] * self.grad[0];
                         }
                     });
}

NodePtr injected_value(const NodePtr& x, real value, Tensor grad_wrt_x) {
    if (!grad_wrt_x.same_shape(x->value))
        throw core::ContractError("injected_value: gradient shape mismatch");
    Tensor out(1, 1, 1);
    out[0] = value;
    Node* xp = x.get();
    return make_node(std::move(out), {x},
                     [xp, g = std::move(grad_wrt_x)](Node& self) {
                         xp->ensure_grad();
                         const real u = self.grad[0];
                         for (size_t i = 0; i < g.size(); ++i)
                             xp->grad[i] += u * g[i];
                     });
}

void backward(const NodePtr& root) {
    if (!is_scalar(root->value)) throw core::ContractError("backward: root not scalar");
    if (!root->requires_grad) return;

    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : order)
        if (n != root.get()) n->zero_grad();
    root->ensure_grad();
    root->grad[0] = 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && !n->grad.empty()) n->backprop(*n);
    }
}

} // namespace sr::nn
