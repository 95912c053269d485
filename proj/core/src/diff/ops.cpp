#include "wordspot/diff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "wordspot/error.hpp"
#include "wordspot/hash.hpp"

namespace wordspot::diff {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

[[noreturn]] void shape_error(const std::string& what) {
  throw Error(ErrorCode::kShapeMismatch, what);
}

void require_rank(const Array& a, std::size_t rank, const char* op,
                  const char* name) {
  if (a.rank() != rank) {
    shape_error(std::string(op) + ": " + name + " must have rank " +
                std::to_string(rank) + ", got " + shape_string(a.shape()));
  }
}

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kernel_h, kernel_w, pad_h, pad_w, stride;
  std::size_t out_h, out_w;

  std::size_t patch() const { return channels * kernel_h * kernel_w; }
  std::size_t positions() const { return out_h * out_w; }
  bool is_pointwise() const {
    return kernel_h == 1 && kernel_w == 1 && stride == 1;
  }
};

// Lays out every receptive field as a column: rows are (c, ky, kx), columns
// are output positions.
void im2col(const double* input, const ConvGeometry& geo, double* cols) {
  const std::size_t positions = geo.positions();
  for (std::size_t c = 0; c < geo.channels; ++c) {
    const double* plane = input + c * geo.height * geo.width;
    for (std::size_t ky = 0; ky < geo.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < geo.kernel_w; ++kx) {
        double* row = cols + ((c * geo.kernel_h + ky) * geo.kernel_w + kx) *
                                 positions;
        for (std::size_t oy = 0; oy < geo.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                         static_cast<std::ptrdiff_t>(geo.pad_h);
          double* out = row + oy * geo.out_w;
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(geo.height)) {
            std::fill(out, out + geo.out_w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(y) * geo.width;
          for (std::size_t ox = 0; ox < geo.out_w; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                           static_cast<std::ptrdiff_t>(geo.pad_w);
            out[ox] = (x < 0 || x >= static_cast<std::ptrdiff_t>(geo.width))
                          ? 0.0
                          : src[x];
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& geo, double* input) {
  const std::size_t positions = geo.positions();
  for (std::size_t c = 0; c < geo.channels; ++c) {
    double* plane = input + c * geo.height * geo.width;
    for (std::size_t ky = 0; ky < geo.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < geo.kernel_w; ++kx) {
        const double* row =
            cols + ((c * geo.kernel_h + ky) * geo.kernel_w + kx) * positions;
        for (std::size_t oy = 0; oy < geo.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                         static_cast<std::ptrdiff_t>(geo.pad_h);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(geo.height)) continue;
          double* dst = plane + static_cast<std::size_t>(y) * geo.width;
          const double* src = row + oy * geo.out_w;
          for (std::size_t ox = 0; ox < geo.out_w; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                           static_cast<std::ptrdiff_t>(geo.pad_w);
            if (x >= 0 && x < static_cast<std::ptrdiff_t>(geo.width)) {
              dst[x] += src[ox];
            }
          }
        }
      }
    }
  }
}

std::uint64_t hash_indices(const std::vector<std::uint32_t>& indices) {
  return Fnv1a().update(indices.data(), indices.size() * sizeof(std::uint32_t))
      .digest();
}

struct PoolGeometry {
  std::size_t channels, height, width, window, stride, out_h, out_w;
};

PoolGeometry pool_geometry(const Array& x, int window, int stride,
                           const char* op) {
  require_rank(x, 3, op, "input");
  if (window <= 0 || stride <= 0) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": window and stride must be positive");
  }
  const auto k = static_cast<std::size_t>(window);
  const auto s = static_cast<std::size_t>(stride);
  if (x.extent(1) < k || x.extent(2) < k) {
    shape_error(std::string(op) + ": window " + std::to_string(window) +
                " exceeds input " + shape_string(x.shape()));
  }
  return {x.extent(0), x.extent(1), x.extent(2), k, s,
          (x.extent(1) - k) / s + 1, (x.extent(2) - k) / s + 1};
}

}  // namespace

Var conv2d(Graph& g, Var input, Var filters, std::optional<Var> bias,
           int stride) {
  const Array& x = g.value(input);
  const Array& w = g.value(filters);
  require_rank(x, 3, "conv2d", "input");
  require_rank(w, 4, "conv2d", "filters");
  if (w.extent(1) != x.extent(0)) {
    shape_error("conv2d: filters expect " + std::to_string(w.extent(1)) +
                " channels, input has " + std::to_string(x.extent(0)));
  }
  if (w.extent(2) % 2 == 0 || w.extent(3) % 2 == 0) {
    shape_error("conv2d: kernel extents must be odd, got " +
                shape_string(w.shape()));
  }
  if (stride <= 0) shape_error("conv2d: stride must be positive");
  const std::size_t filter_count = w.extent(0);
  if (bias) {
    const Array& b = g.value(*bias);
    if (b.size() != filter_count) {
      shape_error("conv2d: bias has " + std::to_string(b.size()) +
                  " entries for " + std::to_string(filter_count) + " filters");
    }
  }

  ConvGeometry geo{};
  geo.channels = x.extent(0);
  geo.height = x.extent(1);
  geo.width = x.extent(2);
  geo.kernel_h = w.extent(2);
  geo.kernel_w = w.extent(3);
  geo.pad_h = (geo.kernel_h - 1) / 2;
  geo.pad_w = (geo.kernel_w - 1) / 2;
  geo.stride = static_cast<std::size_t>(stride);
  geo.out_h = (geo.height - 1) / geo.stride + 1;
  geo.out_w = (geo.width - 1) / geo.stride + 1;

  const std::size_t patch = geo.patch();
  const std::size_t positions = geo.positions();

  // Pointwise convolutions read the input directly as the column matrix.
  Storage cols;
  if (!geo.is_pointwise()) {
    cols.resize(patch * positions);
    im2col(x.data(), geo, cols.data());
  }
  const double* cols_data = geo.is_pointwise() ? x.data() : cols.data();

  Array out({filter_count, geo.out_h, geo.out_w});
  MatrixMap out_m(out.data(), filter_count, positions);
  out_m.noalias() = ConstMatrixMap(w.data(), filter_count, patch) *
                    ConstMatrixMap(cols_data, patch, positions);
  if (bias) {
    out_m.colwise() += ConstVectorMap(g.value(*bias).data(), filter_count);
  }

  std::vector<Var> inputs{input, filters};
  if (bias) inputs.push_back(*bias);
  return g.record(
      OpTag::kConv2d, std::move(out), std::move(inputs),
      [geo, cols = std::move(cols)](Graph& g, Var self) {
        const auto& in = g.inputs(self);
        const Var input = in[0];
        const Var filters = in[1];
        const std::size_t patch = geo.patch();
        const std::size_t positions = geo.positions();
        const std::size_t filter_count = g.value(filters).extent(0);
        ConstMatrixMap dout(g.grad(self).data(), filter_count, positions);
        const double* cols_data =
            geo.is_pointwise() ? g.value(input).data() : cols.data();

        if (g.requires_grad(filters)) {
          MatrixMap dw(g.grad(filters).data(), filter_count, patch);
          dw.noalias() +=
              dout * ConstMatrixMap(cols_data, patch, positions).transpose();
        }
        if (in.size() > 2 && g.requires_grad(in[2])) {
          VectorMap(g.grad(in[2]).data(), filter_count) +=
              dout.rowwise().sum();
        }
        if (g.requires_grad(input)) {
          ConstMatrixMap wm(g.value(filters).data(), filter_count, patch);
          if (geo.is_pointwise()) {
            MatrixMap(g.grad(input).data(), patch, positions).noalias() +=
                wm.transpose() * dout;
          } else {
            RowMatrix dcols = wm.transpose() * dout;
            col2im_add(dcols.data(), geo, g.grad(input).data());
          }
        }
      });
}

Var max_pool2d(Graph& g, Var input, int window, int stride) {
  const Array& x = g.value(input);
  const PoolGeometry geo = pool_geometry(x, window, stride, "max_pool2d");
  Array out({geo.channels, geo.out_h, geo.out_w});
  std::vector<std::uint32_t> argmax(out.size());
  std::size_t o = 0;
  for (std::size_t c = 0; c < geo.channels; ++c) {
    for (std::size_t oy = 0; oy < geo.out_h; ++oy) {
      for (std::size_t ox = 0; ox < geo.out_w; ++ox, ++o) {
        std::size_t best = (c * geo.height + oy * geo.stride) * geo.width +
                           ox * geo.stride;
        for (std::size_t ky = 0; ky < geo.window; ++ky) {
          for (std::size_t kx = 0; kx < geo.window; ++kx) {
            const std::size_t idx =
                (c * geo.height + oy * geo.stride + ky) * geo.width +
                ox * geo.stride + kx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        out[o] = x[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  g.note_branches(hash_indices(argmax));
  return g.record(OpTag::kMaxPool, std::move(out), {input},
                  [argmax = std::move(argmax)](Graph& g, Var self) {
                    const Var input = g.inputs(self)[0];
                    if (!g.requires_grad(input)) return;
                    const Array& dout = g.grad(self);
                    Array& dx = g.grad(input);
                    for (std::size_t i = 0; i < argmax.size(); ++i) {
                      dx[argmax[i]] += dout[i];
                    }
                  });
}

Var avg_pool2d(Graph& g, Var input, int window, int stride) {
  const Array& x = g.value(input);
  const PoolGeometry geo = pool_geometry(x, window, stride, "avg_pool2d");
  const double scale = 1.0 / static_cast<double>(geo.window * geo.window);
  Array out({geo.channels, geo.out_h, geo.out_w});
  std::size_t o = 0;
  for (std::size_t c = 0; c < geo.channels; ++c) {
    for (std::size_t oy = 0; oy < geo.out_h; ++oy) {
      for (std::size_t ox = 0; ox < geo.out_w; ++ox, ++o) {
        double sum = 0.0;
        for (std::size_t ky = 0; ky < geo.window; ++ky) {
          for (std::size_t kx = 0; kx < geo.window; ++kx) {
            sum += x.at(c, oy * geo.stride + ky, ox * geo.stride + kx);
          }
        }
        out[o] = sum * scale;
      }
    }
  }
  return g.record(
      OpTag::kAvgPool, std::move(out), {input}, [geo, scale](Graph& g, Var self) {
        const Var input = g.inputs(self)[0];
        if (!g.requires_grad(input)) return;
        const Array& dout = g.grad(self);
        Array& dx = g.grad(input);
        std::size_t o = 0;
        for (std::size_t c = 0; c < geo.channels; ++c) {
          for (std::size_t oy = 0; oy < geo.out_h; ++oy) {
            for (std::size_t ox = 0; ox < geo.out_w; ++ox, ++o) {
              const double share = dout[o] * scale;
              for (std::size_t ky = 0; ky < geo.window; ++ky) {
                for (std::size_t kx = 0; kx < geo.window; ++kx) {
                  dx.at(c, oy * geo.stride + ky, ox * geo.stride + kx) += share;
                }
              }
            }
          }
        }
      });
}

Var relu(Graph& g, Var input) {
  const Array& x = g.value(input);
  Array out(x.shape());
  Fnv1a mask;
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool active = x[i] > 0.0;
    out[i] = active ? x[i] : 0.0;
    word = (word << 1) | static_cast<std::uint64_t>(active);
    if (i % 64 == 63) {
      mask.update_value(word);
      word = 0;
    }
  }
  mask.update_value(word);
  g.note_branches(mask.digest());
  return g.record(OpTag::kRelu, std::move(out), {input}, [](Graph& g, Var self) {
    const Var input = g.inputs(self)[0];
    if (!g.requires_grad(input)) return;
    const Array& x = g.value(input);
    const Array& dout = g.grad(self);
    Array& dx = g.grad(input);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) dx[i] += dout[i];
    }
  });
}

Var sigmoid(Graph& g, Var input) {
  const Array& x = g.value(input);
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return g.record(OpTag::kSigmoid, std::move(out), {input},
                  [](Graph& g, Var self) {
                    const Var input = g.inputs(self)[0];
                    if (!g.requires_grad(input)) return;
                    const Array& y = g.value(self);
                    const Array& dout = g.grad(self);
                    Array& dx = g.grad(input);
                    for (std::size_t i = 0; i < y.size(); ++i) {
                      dx[i] += dout[i] * y[i] * (1.0 - y[i]);
                    }
                  });
}

Var linear(Graph& g, Var input, Var weights, Var bias) {
  const Array& x = g.value(input);
  const Array& w = g.value(weights);
  const Array& b = g.value(bias);
  require_rank(w, 2, "linear", "weights");
  const std::size_t out_features = w.extent(0);
  const std::size_t in_features = w.extent(1);
  if (x.size() != in_features) {
    shape_error("linear: weights expect " + std::to_string(in_features) +
                " inputs, got " + shape_string(x.shape()));
  }
  if (b.size() != out_features) {
    shape_error("linear: bias has " + std::to_string(b.size()) +
                " entries for " + std::to_string(out_features) + " outputs");
  }
  Array out({out_features});
  VectorMap(out.data(), out_features).noalias() =
      ConstMatrixMap(w.data(), out_features, in_features) *
          ConstVectorMap(x.data(), in_features) +
      ConstVectorMap(b.data(), out_features);
  return g.record(
      OpTag::kLinear, std::move(out), {input, weights, bias},
      [](Graph& g, Var self) {
        const auto& in = g.inputs(self);
        const Array& w = g.value(in[1]);
        const std::size_t rows = w.extent(0);
        const std::size_t cols = w.extent(1);
        ConstVectorMap dout(g.grad(self).data(), rows);
        if (g.requires_grad(in[1])) {
          MatrixMap(g.grad(in[1]).data(), rows, cols).noalias() +=
              dout * ConstVectorMap(g.value(in[0]).data(), cols).transpose();
        }
        if (g.requires_grad(in[2])) {
          VectorMap(g.grad(in[2]).data(), rows) += dout;
        }
        if (g.requires_grad(in[0])) {
          VectorMap(g.grad(in[0]).data(), cols).noalias() +=
              ConstMatrixMap(w.data(), rows, cols).transpose() * dout;
        }
      });
}

Var dropout(Graph& g, Var input, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidProbability,
                "dropout probability must lie in [0, 1), got " +
                    std::to_string(p));
  }
  if (g.mode() == Mode::kEval || p == 0.0) return input;
  const Array& x = g.value(input);
  const double keep_scale = 1.0 / (1.0 - p);
  Array out(x.shape());
  std::vector<double> mask(x.size());
  auto& rng = g.rng();
  for (std::size_t i = 0; i < x.size(); ++i) {
    // 53-bit uniform in [0, 1), identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    mask[i] = u < p ? 0.0 : keep_scale;
    out[i] = x[i] * mask[i];
  }
  return g.record(OpTag::kDropout, std::move(out), {input},
                  [mask = std::move(mask)](Graph& g, Var self) {
                    const Var input = g.inputs(self)[0];
                    if (!g.requires_grad(input)) return;
                    const Array& dout = g.grad(self);
                    Array& dx = g.grad(input);
                    for (std::size_t i = 0; i < mask.size(); ++i) {
                      dx[i] += dout[i] * mask[i];
                    }
                  });
}

Var concat_channels(Graph& g, Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_channels(g, parts);
}

Var concat_channels(Graph& g, std::span<const Var> parts) {
  if (parts.empty()) shape_error("concat_channels: nothing to concatenate");
  const Array& first = g.value(parts[0]);
  require_rank(first, 3, "concat_channels", "input");
  std::size_t channels = 0;
  for (const Var part : parts) {
    const Array& v = g.value(part);
    require_rank(v, 3, "concat_channels", "input");
    if (v.extent(1) != first.extent(1) || v.extent(2) != first.extent(2)) {
      shape_error("concat_channels: spatial extents differ, " +
                  shape_string(first.shape()) + " vs " +
                  shape_string(v.shape()));
    }
    channels += v.extent(0);
  }
  Array out({channels, first.extent(1), first.extent(2)});
  double* dst = out.data();
  for (const Var part : parts) {
    const Array& v = g.value(part);
    dst = std::copy(v.data(), v.data() + v.size(), dst);
  }
  return g.record(OpTag::kConcat, std::move(out),
                  std::vector<Var>(parts.begin(), parts.end()),
                  [](Graph& g, Var self) {
                    const double* src = g.grad(self).data();
                    for (const Var part : g.inputs(self)) {
                      const std::size_t n = g.value(part).size();
                      if (g.requires_grad(part)) {
                        Array& d = g.grad(part);
                        for (std::size_t i = 0; i < n; ++i) d[i] += src[i];
                      }
                      src += n;
                    }
                  });
}

Var add(Graph& g, Var a, Var b) {
  const Array& x = g.value(a);
  const Array& y = g.value(b);
  if (x.shape() != y.shape()) {
    shape_error("add: " + shape_string(x.shape()) + " vs " +
                shape_string(y.shape()));
  }
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return g.record(OpTag::kAdd, std::move(out), {a, b}, [](Graph& g, Var self) {
    const Array& dout = g.grad(self);
    for (const Var part : g.inputs(self)) {
      if (!g.requires_grad(part)) continue;
      Array& d = g.grad(part);
      for (std::size_t i = 0; i < dout.size(); ++i) d[i] += dout[i];
    }
  });
}

Var tpp(Graph& g, Var input, const TppConfig& config) {
  const Array& x = g.value(input);
  require_rank(x, 3, "tpp", "input");
  if (config.levels <= 0) shape_error("tpp: levels must be positive");
  const std::size_t channels = x.extent(0);
  const std::size_t height = x.extent(1);
  const std::size_t width = x.extent(2);
  const auto levels = static_cast<std::size_t>(config.levels);
  if (width < levels) {
    throw Error(ErrorCode::kInputTooNarrow,
                "tpp: width " + std::to_string(width) + " < " +
                    std::to_string(levels) + " levels");
  }

  struct Bin {
    std::size_t begin, end;
  };
  std::vector<Bin> bins;
  for (std::size_t n = 1; n <= levels; ++n) {
    for (std::size_t r = 0; r < n; ++r) {
      bins.push_back({r * width / n, (r + 1) * width / n});
    }
  }

  const bool use_max = config.pooling == TppPooling::kMax;
  Array out({bins.size() * channels});
  std::vector<std::uint32_t> argmax(use_max ? out.size() : 0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const Bin bin = bins[b];
    const double area = static_cast<double>(height * (bin.end - bin.begin));
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t o = b * channels + c;
      if (use_max) {
        std::size_t best = (c * height) * width + bin.begin;
        for (std::size_t y = 0; y < height; ++y) {
          for (std::size_t col = bin.begin; col < bin.end; ++col) {
            const std::size_t idx = (c * height + y) * width + col;
            if (x[idx] > x[best]) best = idx;
          }
        }
        out[o] = x[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      } else {
        double sum = 0.0;
        for (std::size_t y = 0; y < height; ++y) {
          for (std::size_t col = bin.begin; col < bin.end; ++col) {
            sum += x.at(c, y, col);
          }
        }
        out[o] = sum / area;
      }
    }
  }
  if (use_max) g.note_branches(hash_indices(argmax));

  return g.record(
      OpTag::kTpp, std::move(out), {input},
      [bins = std::move(bins), argmax = std::move(argmax), use_max](Graph& g,
                                                                    Var self) {
        const Var input = g.inputs(self)[0];
        if (!g.requires_grad(input)) return;
        const Array& dout = g.grad(self);
        Array& dx = g.grad(input);
        if (use_max) {
          for (std::size_t i = 0; i < argmax.size(); ++i) {
            dx[argmax[i]] += dout[i];
          }
          return;
        }
        const std::size_t channels = dx.extent(0);
        const std::size_t height = dx.extent(1);
        for (std::size_t b = 0; b < bins.size(); ++b) {
          const double area =
              static_cast<double>(height * (bins[b].end - bins[b].begin));
          for (std::size_t c = 0; c < channels; ++c) {
            const double share = dout[b * channels + c] / area;
            for (std::size_t y = 0; y < height; ++y) {
              for (std::size_t col = bins[b].begin; col < bins[b].end; ++col) {
                dx.at(c, y, col) += share;
              }
            }
          }
        }
      });
}

Var bce_loss(Graph& g, Var prediction, std::span<const double> target) {
  const Array& p = g.value(prediction);
  if (p.size() != target.size()) {
    shape_error("bce_loss: " + std::to_string(p.size()) + " predictions, " +
                std::to_string(target.size()) + " targets");
  }
  const double inv_n = 1.0 / static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    total -= target[i] * std::log(q) + (1.0 - target[i]) * std::log1p(-q);
  }
  Array out({1}, total * inv_n);
  // The derivative is evaluated at the clamped probability so saturated
  // sigmoid units still receive a signal.
  return g.record(
      OpTag::kBce, std::move(out), {prediction},
      [t = std::vector<double>(target.begin(), target.end()), inv_n](Graph& g,
                                                                      Var self) {
        const Var prediction = g.inputs(self)[0];
        if (!g.requires_grad(prediction)) return;
        const Array& p = g.value(prediction);
        const double upstream = g.grad(self)[0];
        Array& dp = g.grad(prediction);
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
          dp[i] += upstream * inv_n * ((1.0 - t[i]) / (1.0 - q) - t[i] / q);
        }
      });
}

}  // namespace wordspot::diff
