#include "boilernet/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "boilernet/errors.hpp"

namespace boilernet::model {

namespace {

void check(bool ok, const std::string& message) {
    if (!ok) throw ParameterError(message);
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Keeps probabilities strictly inside (0,1) after float underflow; NaN is
// rejected before clamping.
constexpr double kProbEps = 1e-12;

} // namespace

ModelParams ModelParams::zeros_like() const {
    ModelParams z;
    z.d = d;
    z.m = m;
    z.h = h;
    z.layers = layers;
    z.embed_w = Eigen::MatrixXd::Zero(embed_w.rows(), embed_w.cols());
    z.embed_b = Eigen::VectorXd::Zero(embed_b.size());
    for (const LstmWeights& w : fwd) {
        z.fwd.push_back({Eigen::MatrixXd::Zero(w.wx.rows(), w.wx.cols()),
                         Eigen::MatrixXd::Zero(w.wh.rows(), w.wh.cols()),
                         Eigen::VectorXd::Zero(w.b.size())});
    }
    for (const LstmWeights& w : bwd) {
        z.bwd.push_back({Eigen::MatrixXd::Zero(w.wx.rows(), w.wx.cols()),
                         Eigen::MatrixXd::Zero(w.wh.rows(), w.wh.cols()),
                         Eigen::VectorXd::Zero(w.b.size())});
    }
    z.out_w = Eigen::VectorXd::Zero(out_w.size());
    z.out_b = Eigen::VectorXd::Zero(1);
    return z;
}

std::vector<TensorView> tensor_views(ModelParams& p) {
    std::vector<TensorView> views;
    views.push_back({"embed_w", p.embed_w.data(), static_cast<std::size_t>(p.embed_w.size())});
    views.push_back({"embed_b", p.embed_b.data(), static_cast<std::size_t>(p.embed_b.size())});
    for (std::size_t layer = 0; layer < p.fwd.size(); ++layer) {
        const std::string prefix = "layer" + std::to_string(layer + 1);
        for (auto [dir, w] : {std::pair{".fwd", &p.fwd[layer]}, std::pair{".bwd", &p.bwd[layer]}}) {
            views.push_back({prefix + dir + ".wx", w->wx.data(),
                             static_cast<std::size_t>(w->wx.size())});
            views.push_back({prefix + dir + ".wh", w->wh.data(),
                             static_cast<std::size_t>(w->wh.size())});
            views.push_back(
                {prefix + dir + ".b", w->b.data(), static_cast<std::size_t>(w->b.size())});
        }
    }
    views.push_back({"out_w", p.out_w.data(), static_cast<std::size_t>(p.out_w.size())});
    views.push_back({"out_b", p.out_b.data(), static_cast<std::size_t>(p.out_b.size())});
    return views;
}

namespace {

// Row-major fill so the draw order is independent of Eigen's storage.
void fill_xavier(Eigen::MatrixXd& mat, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
        for (Eigen::Index c = 0; c < mat.cols(); ++c) {
            mat(r, c) = rng.uniform(-bound, bound);
        }
    }
}

LstmWeights init_lstm(std::size_t in_dim, std::size_t h, Rng& rng) {
    LstmWeights w;
    w.wx.resize(static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(4 * h));
    w.wh.resize(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(4 * h));
    fill_xavier(w.wx, in_dim, 4 * h, rng);
    fill_xavier(w.wh, h, 4 * h, rng);
    w.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * h));
    w.b.segment(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(h)).setOnes();
    return w;
}

} // namespace

ModelParams init_params(const ModelConfig& config) {
    check(config.d > 0 && config.m > 0 && config.h > 0 && config.layers > 0,
          "model dimensions must be positive");
    check(config.dropout_p >= 0.0 && config.dropout_p < 1.0, "dropout_p must be in [0,1)");
    Rng rng(config.seed);
    ModelParams p;
    p.d = config.d;
    p.m = config.m;
    p.h = config.h;
    p.layers = config.layers;
    p.embed_w.resize(static_cast<Eigen::Index>(config.d), static_cast<Eigen::Index>(config.m));
    fill_xavier(p.embed_w, config.d, config.m, rng);
    p.embed_b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.m));
    for (std::size_t layer = 0; layer < config.layers; ++layer) {
        std::size_t in_dim = layer == 0 ? config.m : 2 * config.h;
        p.fwd.push_back(init_lstm(in_dim, config.h, rng));
        p.bwd.push_back(init_lstm(in_dim, config.h, rng));
    }
    p.out_w.resize(static_cast<Eigen::Index>(2 * config.h));
    {
        double bound = std::sqrt(6.0 / static_cast<double>(2 * config.h + 1));
        for (Eigen::Index i = 0; i < p.out_w.size(); ++i) {
            p.out_w(i) = rng.uniform(-bound, bound);
        }
    }
    p.out_b = Eigen::VectorXd::Zero(1);
    return p;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_cell(const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& h_prev,
                                                      const Eigen::VectorXd& c_prev,
                                                      const LstmWeights& w) {
    const Eigen::Index h = w.wh.rows();
    check(w.wx.cols() == 4 * h && w.wh.cols() == 4 * h && w.b.size() == 4 * h,
          "inconsistent LSTM parameter shapes");
    check(x.size() == w.wx.rows(), "lstm_cell: input dimension mismatch");
    check(h_prev.size() == h && c_prev.size() == h, "lstm_cell: state dimension mismatch");

    Eigen::VectorXd a = w.wx.transpose() * x + w.wh.transpose() * h_prev + w.b;
    Eigen::VectorXd gi = a.segment(0, h).unaryExpr([](double v) { return sigmoid(v); });
    Eigen::VectorXd gf = a.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
    Eigen::VectorXd gg = a.segment(2 * h, h).array().tanh();
    Eigen::VectorXd go = a.segment(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });
    Eigen::VectorXd c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    Eigen::VectorXd hv = go.cwiseProduct(c.array().tanh().matrix());
    return {hv, c};
}

namespace {

// Runs one direction over the input order given by `indices`, recording
// activations when a cache is supplied. Results are stored per input
// position, not per visitation step.
void run_direction(const std::vector<Eigen::VectorXd>& inputs,
                   const std::vector<std::size_t>& indices, const LstmWeights& w,
                   std::vector<Eigen::VectorXd>& h_out, DirectionCache* cache) {
    const Eigen::Index h = w.wh.rows();
    const std::size_t n = inputs.size();
    if (cache) {
        cache->gate_i.assign(n, {});
        cache->gate_f.assign(n, {});
        cache->gate_g.assign(n, {});
        cache->gate_o.assign(n, {});
        cache->c.assign(n, {});
        cache->h.assign(n, {});
        cache->tanh_c.assign(n, {});
    }
    Eigen::VectorXd hv = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(h);
    for (std::size_t t : indices) {
        const Eigen::VectorXd& x = inputs[t];
        Eigen::VectorXd a = w.wx.transpose() * x + w.wh.transpose() * hv + w.b;
        Eigen::VectorXd gi = a.segment(0, h).unaryExpr([](double v) { return sigmoid(v); });
        Eigen::VectorXd gf = a.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
        Eigen::VectorXd gg = a.segment(2 * h, h).array().tanh();
        Eigen::VectorXd go = a.segment(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });
        c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
        Eigen::VectorXd tc = c.array().tanh();
        hv = go.cwiseProduct(tc);
        h_out[t] = hv;
        if (cache) {
            cache->gate_i[t] = gi;
            cache->gate_f[t] = gf;
            cache->gate_g[t] = gg;
            cache->gate_o[t] = go;
            cache->c[t] = c;
            cache->h[t] = hv;
            cache->tanh_c[t] = tc;
        }
    }
}

std::vector<std::size_t> forward_order(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

std::vector<std::size_t> backward_order(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = n - 1 - i;
    return idx;
}

} // namespace

std::vector<Eigen::VectorXd> bilstm_layer(const std::vector<Eigen::VectorXd>& inputs,
                                          const LstmWeights& wf, const LstmWeights& wb) {
    check(!inputs.empty(), "bilstm_layer: empty input sequence");
    const Eigen::Index h = wf.wh.rows();
    check(wb.wh.rows() == h, "bilstm_layer: direction width mismatch");
    const std::size_t n = inputs.size();
    std::vector<Eigen::VectorXd> hf(n), hb(n);
    run_direction(inputs, forward_order(n), wf, hf, nullptr);
    run_direction(inputs, backward_order(n), wb, hb, nullptr);
    std::vector<Eigen::VectorXd> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        out[t].resize(2 * h);
        out[t] << hf[t], hb[t];
    }
    return out;
}

Eigen::VectorXd forward(const Eigen::MatrixXd& x, const ModelParams& params,
                        const ForwardOptions& options, ForwardCache* cache) {
    check(static_cast<std::size_t>(x.cols()) == params.d,
          "forward: input has " + std::to_string(x.cols()) + " columns, model expects d=" +
              std::to_string(params.d));
    check(x.rows() > 0, "forward: empty sequence");
    check(params.fwd.size() == params.layers && params.bwd.size() == params.layers,
          "forward: layer count mismatch");
    if (!x.allFinite()) throw NumericalError("forward: non-finite input");

    const std::size_t n = static_cast<std::size_t>(x.rows());
    const Eigen::Index h = static_cast<Eigen::Index>(params.h);

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;
    fc.embedded.assign(n, {});
    fc.layer_inputs.assign(params.layers, {});
    fc.fwd_cache.assign(params.layers, {});
    fc.bwd_cache.assign(params.layers, {});

    for (std::size_t t = 0; t < n; ++t) {
        fc.embedded[t] =
            params.embed_w.transpose() * x.row(static_cast<Eigen::Index>(t)).transpose() +
            params.embed_b;
    }

    std::vector<Eigen::VectorXd> current = fc.embedded;
    for (std::size_t layer = 0; layer < params.layers; ++layer) {
        check(current[0].size() == params.fwd[layer].wx.rows(),
              "forward: layer " + std::to_string(layer + 1) + " input width mismatch");
        fc.layer_inputs[layer] = current;
        std::vector<Eigen::VectorXd> hf(n), hb(n);
        run_direction(current, forward_order(n), params.fwd[layer], hf,
                      cache ? &fc.fwd_cache[layer] : nullptr);
        run_direction(current, backward_order(n), params.bwd[layer], hb,
                      cache ? &fc.bwd_cache[layer] : nullptr);
        std::vector<Eigen::VectorXd> next(n);
        for (std::size_t t = 0; t < n; ++t) {
            next[t].resize(2 * h);
            next[t] << hf[t], hb[t];
        }
        current = std::move(next);
    }
    fc.concat = current;

    // inverted dropout after the last LSTM layer, train mode only
    fc.dropout_scale = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 2 * h);
    if (options.mode == Mode::Train && options.dropout_p > 0.0) {
        if (options.dropout_scale) {
            check(options.dropout_scale->rows() == static_cast<Eigen::Index>(n) &&
                      options.dropout_scale->cols() == 2 * h,
                  "forward: dropout mask shape mismatch");
            fc.dropout_scale = *options.dropout_scale;
        } else {
            check(options.rng != nullptr, "forward: train mode with dropout needs an rng");
            double keep = 1.0 - options.dropout_p;
            for (Eigen::Index r = 0; r < fc.dropout_scale.rows(); ++r) {
                for (Eigen::Index cidx = 0; cidx < fc.dropout_scale.cols(); ++cidx) {
                    fc.dropout_scale(r, cidx) =
                        options.rng->bernoulli(keep) ? 1.0 / keep : 0.0;
                }
            }
        }
    }
    fc.dropped.assign(n, {});
    fc.logits.resize(static_cast<Eigen::Index>(n));
    fc.probs.resize(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        fc.dropped[t] = fc.concat[t].cwiseProduct(
            fc.dropout_scale.row(static_cast<Eigen::Index>(t)).transpose());
        double logit = params.out_w.dot(fc.dropped[t]) + params.out_b(0);
        fc.logits(static_cast<Eigen::Index>(t)) = logit;
        double p = sigmoid(logit);
        if (std::isnan(p)) throw NumericalError("forward: NaN probability");
        fc.probs(static_cast<Eigen::Index>(t)) =
            std::min(1.0 - kProbEps, std::max(kProbEps, p));
    }
    return fc.probs;
}

Eigen::VectorXd forward(const Eigen::MatrixXd& x, const ModelParams& params, Mode mode,
                        double dropout_p, Rng* rng) {
    ForwardOptions opts;
    opts.mode = mode;
    opts.dropout_p = dropout_p;
    opts.rng = rng;
    return forward(x, params, opts);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

void put_matrix_row_major(std::string& out, const Eigen::MatrixXd& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
        for (Eigen::Index c = 0; c < mat.cols(); ++c) {
            put_f32(out, static_cast<float>(mat(r, c)));
        }
    }
}

void put_vector(std::string& out, const Eigen::VectorXd& vec) {
    for (Eigen::Index i = 0; i < vec.size(); ++i) put_f32(out, static_cast<float>(vec(i)));
}

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f32();
        }
        return m;
    }

    Eigen::VectorXd vector(Eigen::Index size) {
        Eigen::VectorXd v(size);
        for (Eigen::Index i = 0; i < size; ++i) v(i) = f32();
        return v;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    char byte() {
        need(1);
        return bytes_[pos_++];
    }

  private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw TruncatedFileError("parameter file is truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string serialize_params(const ModelParams& p) {
    std::string out = "BSEQ";
    out += static_cast<char>(kParamsFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(p.d));
    put_u32(out, static_cast<std::uint32_t>(p.m));
    put_u32(out, static_cast<std::uint32_t>(p.h));
    put_u32(out, static_cast<std::uint32_t>(p.layers));
    put_matrix_row_major(out, p.embed_w);
    put_vector(out, p.embed_b);
    for (std::size_t layer = 0; layer < p.layers; ++layer) {
        for (const LstmWeights* w : {&p.fwd[layer], &p.bwd[layer]}) {
            put_matrix_row_major(out, w->wx);
            put_matrix_row_major(out, w->wh);
            put_vector(out, w->b);
        }
    }
    put_vector(out, p.out_w);
    put_vector(out, p.out_b);
    return out;
}

ModelParams deserialize_params(std::string_view bytes) {
    if (bytes.size() < 5 || bytes.substr(0, 4) != "BSEQ") {
        throw FormatError("not a BSEQ parameter file");
    }
    Reader reader(bytes.substr(4));
    auto version = static_cast<std::uint8_t>(reader.byte());
    if (version != kParamsFormatVersion) {
        throw VersionMismatchError("unsupported parameter format version " +
                                   std::to_string(version));
    }
    std::size_t d = reader.u32();
    std::size_t m = reader.u32();
    std::size_t h = reader.u32();
    std::size_t layers = reader.u32();
    if (d == 0 || m == 0 || h == 0 || layers == 0) {
        throw ShapeMismatchError("parameter header has zero dimension");
    }
    // total payload implied by the header must match the file exactly
    std::size_t floats = d * m + m;
    for (std::size_t layer = 0; layer < layers; ++layer) {
        std::size_t in_dim = layer == 0 ? m : 2 * h;
        floats += 2 * (in_dim * 4 * h + h * 4 * h + 4 * h);
    }
    floats += 2 * h + 1;
    if (reader.remaining() < floats * 4) {
        throw TruncatedFileError("parameter file is truncated: expected " +
                                 std::to_string(floats * 4) + " payload bytes, found " +
                                 std::to_string(reader.remaining()));
    }
    if (reader.remaining() > floats * 4) {
        throw ShapeMismatchError("parameter payload does not match declared shapes");
    }

    ModelParams p;
    p.d = d;
    p.m = m;
    p.h = h;
    p.layers = layers;
    p.embed_w = reader.matrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    p.embed_b = reader.vector(static_cast<Eigen::Index>(m));
    for (std::size_t layer = 0; layer < layers; ++layer) {
        std::size_t in_dim = layer == 0 ? m : 2 * h;
        for (int dir = 0; dir < 2; ++dir) {
            LstmWeights w;
            w.wx = reader.matrix(static_cast<Eigen::Index>(in_dim),
                                 static_cast<Eigen::Index>(4 * h));
            w.wh = reader.matrix(static_cast<Eigen::Index>(h),
                                 static_cast<Eigen::Index>(4 * h));
            w.b = reader.vector(static_cast<Eigen::Index>(4 * h));
            (dir == 0 ? p.fwd : p.bwd).push_back(std::move(w));
        }
    }
    p.out_w = reader.vector(static_cast<Eigen::Index>(2 * h));
    p.out_b = reader.vector(1);
    for (TensorView& view : tensor_views(p)) {
        for (std::size_t i = 0; i < view.size; ++i) {
            if (!std::isfinite(view.data[i])) {
                throw NumericalError("non-finite value in parameter block " + view.name);
            }
        }
    }
    return p;
}

void save_params(const ModelParams& params, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + file.string());
    std::string bytes = serialize_params(params);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing file: " + file.string());
}

ModelParams load_params(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_params(buf.str());
}

} // namespace boilernet::model
