#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudseq/rng.hpp"
#include "fraudseq/sequencing.hpp"

namespace fraudseq {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kProbClamp = 1e-7;

// ---------------------------------------------------------------------------
// LSTM cell parameters. Gate rows are stacked in the order
// input / forget / candidate / output: w_in is (4H x D), w_rec is (4H x H).
// ---------------------------------------------------------------------------

struct LstmParams {
    Mat w_in;
    Mat w_rec;
    Vec bias;

    static LstmParams zeros(int input_dim, int hidden) {
        LstmParams p;
        p.w_in = Mat::Zero(4 * hidden, input_dim);
        p.w_rec = Mat::Zero(4 * hidden, hidden);
        p.bias = Vec::Zero(4 * hidden);
        return p;
    }

    int hidden() const { return static_cast<int>(w_rec.cols()); }
};

struct DenseParams {
    Mat w1;  // head x Z
    Vec b1;
    Mat w2;  // 2 x head
    Vec b2;
};

struct TrainConfig {
    int hidden = 32;
    int head = 32;
    double dropout = 0.2;
    int epochs = 8;
    double lr = 1e-3;
    int batch_size = 256;
    std::uint64_t seed = 1;
};

// Forward LSTM consumes the window up to the target left-to-right; the
// backward LSTM (present when the triplet has future context) consumes it
// from the end down to the target. Hidden states AT the target index from
// both directions are concatenated, passed through dropout and a
// ReLU dense layer, and softmaxed over {genuine, fraud}.
struct BiLstmModel {
    int input_dim = 0;
    int hidden = 0;
    int head_size = 0;
    Triplet triplet;
    bool bidirectional = false;
    double dropout = 0.0;
    LstmParams fwd;
    LstmParams bwd;  // unused when !bidirectional
    DenseParams dense;

    int concat_dim() const { return bidirectional ? 2 * hidden : hidden; }

    BiLstmModel zeros_like() const {
        BiLstmModel g = *this;
        g.fwd = LstmParams::zeros(input_dim, hidden);
        if (bidirectional) g.bwd = LstmParams::zeros(input_dim, hidden);
        g.dense.w1.setZero();
        g.dense.b1.setZero();
        g.dense.w2.setZero();
        g.dense.b2.setZero();
        return g;
    }
};

inline BiLstmModel init_model(int input_dim, const Triplet& triplet, const TrainConfig& cfg,
                              std::uint64_t seed) {
    if (cfg.hidden <= 0 || cfg.head <= 0)
        throw std::invalid_argument("init_model: hidden and head sizes must be positive");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
        throw std::invalid_argument("init_model: dropout must be in [0,1)");
    BiLstmModel m;
    m.input_dim = input_dim;
    m.hidden = cfg.hidden;
    m.head_size = cfg.head;
    m.triplet = triplet;
    m.bidirectional = triplet.future > 0;
    m.dropout = cfg.dropout;

    Rng rng(derive_seed(seed, 0x696e6974));
    const double r = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
    auto fill = [&rng](Mat& mat, double lim) {
        for (Eigen::Index j = 0; j < mat.cols(); ++j)
            for (Eigen::Index i = 0; i < mat.rows(); ++i) mat(i, j) = rng.uniform(-lim, lim);
    };
    m.fwd = LstmParams::zeros(input_dim, cfg.hidden);
    fill(m.fwd.w_in, r);
    fill(m.fwd.w_rec, r);
    if (m.bidirectional) {
        m.bwd = LstmParams::zeros(input_dim, cfg.hidden);
        fill(m.bwd.w_in, r);
        fill(m.bwd.w_rec, r);
    }
    m.dense.w1 = Mat::Zero(cfg.head, m.concat_dim());
    m.dense.b1 = Vec::Zero(cfg.head);
    m.dense.w2 = Mat::Zero(2, cfg.head);
    m.dense.b2 = Vec::Zero(2);
    fill(m.dense.w1, 0.05);
    fill(m.dense.w2, 0.05);
    return m;
}

// ---------------------------------------------------------------------------
// Flat tensor views, shared by Adam and the finite-difference tests.
// ---------------------------------------------------------------------------

struct TensorView {
    double* data;
    std::size_t size;
};

inline std::vector<TensorView> model_tensors(BiLstmModel& m) {
    std::vector<TensorView> v;
    auto add_mat = [&v](Mat& mat) {
        v.push_back({mat.data(), static_cast<std::size_t>(mat.size())});
    };
    auto add_vec = [&v](Vec& vec) {
        v.push_back({vec.data(), static_cast<std::size_t>(vec.size())});
    };
    add_mat(m.fwd.w_in);
    add_mat(m.fwd.w_rec);
    add_vec(m.fwd.bias);
    if (m.bidirectional) {
        add_mat(m.bwd.w_in);
        add_mat(m.bwd.w_rec);
        add_vec(m.bwd.bias);
    }
    add_mat(m.dense.w1);
    add_vec(m.dense.b1);
    add_mat(m.dense.w2);
    add_vec(m.dense.b2);
    return v;
}

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init(const std::vector<TensorView>& params) {
        m.clear();
        v.clear();
        step = 0;
        for (const auto& p : params) {
            m.emplace_back(p.size, 0.0);
            v.emplace_back(p.size, 0.0);
        }
    }
};

// Standard Adam update with bias correction.
inline void adam_step(const std::vector<TensorView>& params,
                      const std::vector<TensorView>& grads, AdamState& state, double lr) {
    if (state.m.size() != params.size()) state.init(params);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        double* p = params[t].data;
        const double* g = grads[t].data;
        double* mo = state.m[t].data();
        double* ve = state.v[t].data();
        for (std::size_t i = 0; i < params[t].size; ++i) {
            mo[i] = state.beta1 * mo[i] + (1.0 - state.beta1) * g[i];
            ve[i] = state.beta2 * ve[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = mo[i] / bc1;
            const double v_hat = ve[i] / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Forward / backward passes
// ---------------------------------------------------------------------------

namespace net_detail {

struct LstmCache {
    std::vector<Mat> x;  // inputs per processing step, B x D
    std::vector<Mat> gi, gf, gg, go;
    std::vector<Mat> c, tanh_c, h;
};

inline void lstm_forward(const LstmParams& p, const std::vector<Mat>& inputs, LstmCache& cache) {
    const int hidden = p.hidden();
    const auto b = inputs.empty() ? 0 : inputs.front().rows();
    Mat h_prev = Mat::Zero(b, hidden);
    Mat c_prev = Mat::Zero(b, hidden);
    cache.x = inputs;
    for (const Mat& x : inputs) {
        Mat pre = x * p.w_in.transpose() + h_prev * p.w_rec.transpose();
        pre.rowwise() += p.bias.transpose();
        Mat i = (1.0 + (-pre.leftCols(hidden).array()).exp()).inverse().matrix();
        Mat f = (1.0 + (-pre.middleCols(hidden, hidden).array()).exp()).inverse().matrix();
        Mat g = pre.middleCols(2 * hidden, hidden).array().tanh().matrix();
        Mat o = (1.0 + (-pre.rightCols(hidden).array()).exp()).inverse().matrix();
        Mat c = (f.array() * c_prev.array() + i.array() * g.array()).matrix();
        Mat tc = c.array().tanh().matrix();
        Mat h = (o.array() * tc.array()).matrix();
        cache.gi.push_back(std::move(i));
        cache.gf.push_back(std::move(f));
        cache.gg.push_back(std::move(g));
        cache.go.push_back(std::move(o));
        cache.c.push_back(c);
        cache.tanh_c.push_back(std::move(tc));
        cache.h.push_back(h);
        h_prev = cache.h.back();
        c_prev = std::move(c);
    }
}

// Backpropagation through time; external gradient enters only at the last
// processed step (the target). Accumulates into `grads`.
inline void lstm_backward(const LstmParams& p, const LstmCache& cache, const Mat& dh_last,
                          LstmParams& grads) {
    const int hidden = p.hidden();
    const int steps = static_cast<int>(cache.x.size());
    const auto b = dh_last.rows();
    Mat dh = dh_last;
    Mat dc = Mat::Zero(b, hidden);
    for (int t = steps - 1; t >= 0; --t) {
        const std::size_t ti = static_cast<std::size_t>(t);
        const Mat& i = cache.gi[ti];
        const Mat& f = cache.gf[ti];
        const Mat& g = cache.gg[ti];
        const Mat& o = cache.go[ti];
        const Mat& tc = cache.tanh_c[ti];

        Mat d_o = (dh.array() * tc.array()).matrix();
        dc.array() += dh.array() * o.array() * (1.0 - tc.array().square());
        Mat d_i = (dc.array() * g.array()).matrix();
        Mat d_g = (dc.array() * i.array()).matrix();
        Mat c_prev = t > 0 ? cache.c[ti - 1] : Mat::Zero(b, hidden);
        Mat d_f = (dc.array() * c_prev.array()).matrix();

        Mat d_pre(b, 4 * hidden);
        d_pre.leftCols(hidden) = (d_i.array() * i.array() * (1.0 - i.array())).matrix();
        d_pre.middleCols(hidden, hidden) = (d_f.array() * f.array() * (1.0 - f.array())).matrix();
        d_pre.middleCols(2 * hidden, hidden) = (d_g.array() * (1.0 - g.array().square())).matrix();
        d_pre.rightCols(hidden) = (d_o.array() * o.array() * (1.0 - o.array())).matrix();

        grads.w_in.noalias() += d_pre.transpose() * cache.x[ti];
        if (t > 0) grads.w_rec.noalias() += d_pre.transpose() * cache.h[ti - 1];
        grads.bias += d_pre.colwise().sum().transpose();

        dh.noalias() = d_pre * p.w_rec;
        dc = (dc.array() * f.array()).matrix();
    }
}

}  // namespace net_detail

// View over a batch of samples from one SampleSet.
struct BatchView {
    const SampleSet* set;
    std::vector<std::uint32_t> indices;

    std::size_t size() const { return indices.size(); }
};

namespace net_detail {

// Gathers the feature rows at one window position into a B x D matrix.
inline Mat gather_step(const BatchView& batch, int step, int dim) {
    Mat x(static_cast<Eigen::Index>(batch.size()), dim);
    const std::size_t d = static_cast<std::size_t>(dim);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& s = batch.set->samples[batch.indices[b]];
        const float* row = s.data.data() + static_cast<std::size_t>(step) * d;
        for (std::size_t c = 0; c < d; ++c)
            x(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) = row[c];
    }
    return x;
}

}  // namespace net_detail

struct ForwardCache {
    net_detail::LstmCache fwd;
    net_detail::LstmCache bwd;
    Mat concat;   // B x Z, pre-dropout
    Mat mask;     // dropout mask (already scaled); ones in eval mode
    Mat dropped;  // concat after mask
    Mat a1;       // pre-ReLU
    Mat relu;
    Mat probs;  // B x 2 softmax
};

// Returns class probabilities for the batch targets. In train mode dropout
// draws a fresh mask from `dropout_rng` (or uses `fixed_mask` when supplied,
// which the gradient tests rely on).
inline Mat forward(const BiLstmModel& model, const BatchView& batch, bool train_mode,
                   ForwardCache* cache = nullptr, Rng* dropout_rng = nullptr,
                   const Mat* fixed_mask = nullptr) {
    const int l_s = model.triplet.length();
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& s = batch.set->samples[batch.indices[b]];
        if (static_cast<int>(s.data.size()) != l_s * batch.set->dim)
            throw std::invalid_argument(
                "forward: sample window length " +
                std::to_string(s.data.size() / static_cast<std::size_t>(batch.set->dim)) +
                " does not match model sequence length " + std::to_string(l_s));
    }
    if (batch.set->dim != model.input_dim)
        throw std::invalid_argument("forward: feature dim " + std::to_string(batch.set->dim) +
                                    " does not match model input dim " +
                                    std::to_string(model.input_dim));

    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;
    const int target = model.triplet.target_index();

    std::vector<Mat> fwd_inputs;
    for (int t = 0; t <= target; ++t)
        fwd_inputs.push_back(net_detail::gather_step(batch, t, model.input_dim));
    net_detail::lstm_forward(model.fwd, fwd_inputs, cc.fwd);

    if (model.bidirectional) {
        std::vector<Mat> bwd_inputs;
        for (int t = l_s - 1; t >= target; --t)
            bwd_inputs.push_back(net_detail::gather_step(batch, t, model.input_dim));
        net_detail::lstm_forward(model.bwd, bwd_inputs, cc.bwd);
        cc.concat.resize(static_cast<Eigen::Index>(batch.size()), 2 * model.hidden);
        cc.concat.leftCols(model.hidden) = cc.fwd.h.back();
        cc.concat.rightCols(model.hidden) = cc.bwd.h.back();
    } else {
        cc.concat = cc.fwd.h.back();
    }

    if (train_mode && model.dropout > 0.0) {
        if (fixed_mask != nullptr) {
            cc.mask = *fixed_mask;
        } else {
            if (dropout_rng == nullptr)
                throw std::invalid_argument("forward: train mode with dropout needs an rng");
            const double keep = 1.0 - model.dropout;
            cc.mask.resize(cc.concat.rows(), cc.concat.cols());
            for (Eigen::Index j = 0; j < cc.mask.cols(); ++j)
                for (Eigen::Index i = 0; i < cc.mask.rows(); ++i)
                    cc.mask(i, j) = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        cc.dropped = (cc.concat.array() * cc.mask.array()).matrix();
    } else {
        cc.mask = Mat::Ones(cc.concat.rows(), cc.concat.cols());
        cc.dropped = cc.concat;
    }

    cc.a1 = cc.dropped * model.dense.w1.transpose();
    cc.a1.rowwise() += model.dense.b1.transpose();
    cc.relu = cc.a1.array().max(0.0).matrix();
    Mat logits = cc.relu * model.dense.w2.transpose();
    logits.rowwise() += model.dense.b2.transpose();

    // row-wise stable softmax
    cc.probs.resize(logits.rows(), 2);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = std::max(logits(i, 0), logits(i, 1));
        const double e0 = std::exp(logits(i, 0) - mx);
        const double e1 = std::exp(logits(i, 1) - mx);
        cc.probs(i, 0) = e0 / (e0 + e1);
        cc.probs(i, 1) = e1 / (e0 + e1);
    }
    return cc.probs;
}

// Mean cross-entropy over the batch with probabilities clamped to
// [kProbClamp, 1 - kProbClamp].
inline double cross_entropy(const Mat& probs, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw std::invalid_argument("cross_entropy: batch size mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double p = std::clamp(probs(i, labels[static_cast<std::size_t>(i)] ? 1 : 0),
                                    kProbClamp, 1.0 - kProbClamp);
        total += -std::log(p);
    }
    return total / static_cast<double>(probs.rows());
}

// Exact gradients of cross_entropy(forward(...)) for every parameter.
inline BiLstmModel backward(const BiLstmModel& model, const ForwardCache& cache,
                            const std::vector<int>& labels) {
    const auto b = cache.probs.rows();
    BiLstmModel grads = model.zeros_like();

    Mat dlogits = Mat::Zero(b, 2);
    for (Eigen::Index i = 0; i < b; ++i) {
        const int y = labels[static_cast<std::size_t>(i)] ? 1 : 0;
        const double p = cache.probs(i, y);
        if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;  // clamp active: flat loss
        dlogits(i, 0) = (cache.probs(i, 0) - (y == 0 ? 1.0 : 0.0)) / static_cast<double>(b);
        dlogits(i, 1) = (cache.probs(i, 1) - (y == 1 ? 1.0 : 0.0)) / static_cast<double>(b);
    }

    grads.dense.w2.noalias() = dlogits.transpose() * cache.relu;
    grads.dense.b2 = dlogits.colwise().sum().transpose();
    Mat drelu = dlogits * model.dense.w2;
    Mat da1 = ((cache.a1.array() > 0.0).cast<double>() * drelu.array()).matrix();
    grads.dense.w1.noalias() = da1.transpose() * cache.dropped;
    grads.dense.b1 = da1.colwise().sum().transpose();
    Mat ddropped = da1 * model.dense.w1;
    Mat dconcat = (ddropped.array() * cache.mask.array()).matrix();

    if (model.bidirectional) {
        net_detail::lstm_backward(model.fwd, cache.fwd, dconcat.leftCols(model.hidden),
                                  grads.fwd);
        net_detail::lstm_backward(model.bwd, cache.bwd, dconcat.rightCols(model.hidden),
                                  grads.bwd);
    } else {
        net_detail::lstm_backward(model.fwd, cache.fwd, dconcat, grads.fwd);
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Training loop: seeded shuffling, mini-batches, Adam.
// ---------------------------------------------------------------------------

struct TrainResult {
    BiLstmModel model;
    std::vector<double> epoch_losses;
};

inline TrainResult train(const SampleSet& data, const Triplet& triplet, const TrainConfig& cfg) {
    if (data.samples.empty()) throw std::invalid_argument("train: empty dataset");
    if (triplet.length() != data.triplet.length())
        throw std::invalid_argument("train: dataset triplet " + data.triplet.str() +
                                    " does not match requested " + triplet.str());

    TrainResult result;
    result.model = init_model(data.dim, triplet, cfg, cfg.seed);
    auto params = model_tensors(result.model);
    AdamState adam;
    adam.init(params);
    Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566));
    Rng dropout_rng(derive_seed(cfg.seed, 0x64726f70));

    std::vector<std::uint32_t> order(data.samples.size());
    std::iota(order.begin(), order.end(), 0u);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch_size)) {
            BatchView batch;
            batch.set = &data;
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
            batch.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
            std::vector<int> labels(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i)
                labels[i] = batch.set->samples[batch.indices[i]].label == Label::fraud ? 1 : 0;

            ForwardCache cache;
            forward(result.model, batch, /*train_mode=*/true, &cache, &dropout_rng);
            const double batch_loss = cross_entropy(cache.probs, labels);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error(
                    "train: loss became non-finite at epoch " + std::to_string(epoch) +
                    "; try a lower learning rate");
            epoch_loss += batch_loss;
            ++batches;

            BiLstmModel grads = backward(result.model, cache, labels);
            auto grad_views = model_tensors(grads);
            adam_step(params, grad_views, adam, cfg.lr);
        }
        result.epoch_losses.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
    }
    return result;
}

// Fraud probability per sample, eval mode, clamped into (0, 1).
inline std::vector<double> score(const BiLstmModel& model, const SampleSet& data,
                                 int batch_size = 512) {
    std::vector<double> out;
    out.reserve(data.samples.size());
    for (std::size_t pos = 0; pos < data.samples.size();
         pos += static_cast<std::size_t>(batch_size)) {
        BatchView batch;
        batch.set = &data;
        const std::size_t end =
            std::min(data.samples.size(), pos + static_cast<std::size_t>(batch_size));
        for (std::size_t i = pos; i < end; ++i)
            batch.indices.push_back(static_cast<std::uint32_t>(i));
        const Mat probs = forward(model, batch, /*train_mode=*/false);
        for (Eigen::Index i = 0; i < probs.rows(); ++i)
            out.push_back(std::clamp(probs(i, 1), kProbClamp, 1.0 - kProbClamp));
    }
    return out;
}

}  // namespace fraudseq
