#include "pff/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pff/checkpoint.hpp"
#include "pff/detail/pipeline.hpp"
#include "pff/errors.hpp"

namespace pff {

std::string TrainConfig::to_kv() const {
    std::ostringstream os;
    os << "patch=" << patch << "\n"
       << "batch=" << batch << "\n"
       << "lr=" << lr << "\n"
       << "beta1=" << beta1 << "\n"
       << "beta2=" << beta2 << "\n"
       << "adam_eps=" << adam_eps << "\n"
       << "weight_decay=" << weight_decay << "\n"
       << "flow_smooth_l2=" << flow_smooth_l2 << "\n"
       << "flow_sparse_l1=" << flow_sparse_l1 << "\n"
       << "steps=" << steps << "\n"
       << "eval_every=" << eval_every << "\n"
       << "ckpt_every=" << ckpt_every << "\n"
       << "seed=" << seed << "\n";
    std::istringstream deg(degrade.to_kv());
    std::string line;
    while (std::getline(deg, line)) os << "degrade." << line << "\n";
    std::istringstream net_is(net.to_kv());
    while (std::getline(net_is, line)) os << "net." << line << "\n";
    return os.str();
}

TrainConfig TrainConfig::from_kv(const std::string& text) {
    TrainConfig c;
    std::string deg_text, net_text;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("degrade.", 0) == 0) {
            deg_text += line.substr(8) + "\n";
            continue;
        }
        if (line.rfind("net.", 0) == 0) {
            net_text += line.substr(4) + "\n";
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("TrainConfig: bad line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "patch") c.patch = std::stoi(val);
        else if (key == "batch") c.batch = std::stoi(val);
        else if (key == "lr") c.lr = std::stod(val);
        else if (key == "beta1") c.beta1 = std::stod(val);
        else if (key == "beta2") c.beta2 = std::stod(val);
        else if (key == "adam_eps") c.adam_eps = std::stod(val);
        else if (key == "weight_decay") c.weight_decay = std::stod(val);
        else if (key == "flow_smooth_l2") c.flow_smooth_l2 = std::stod(val);
        else if (key == "flow_sparse_l1") c.flow_sparse_l1 = std::stod(val);
        else if (key == "steps") c.steps = std::stoi(val);
        else if (key == "eval_every") c.eval_every = std::stoi(val);
        else if (key == "ckpt_every") c.ckpt_every = std::stoi(val);
        else if (key == "seed") c.seed = std::stoull(val);
        else throw FormatError("TrainConfig: unknown key '" + key + "'");
    }
    if (!deg_text.empty()) c.degrade = DegradeSpec::from_kv(deg_text);
    if (!net_text.empty()) c.net = NetConfig::from_kv(net_text);
    return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_kv(ss.str());
}

TrainState TrainState::init(Network& net, uint64_t seed) {
    TrainState st;
    st.rng = Rng(seed ^ 0x5eedf00dULL);
    for (auto& p : net.params()) {
        st.m.emplace_back(p.value->size(), 0.f);
        st.v.emplace_back(p.value->size(), 0.f);
    }
    return st;
}

namespace {

Image crop(const Image& img, int y0, int x0, int ch, int cw) {
    Image out(img.channels, ch, cw);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
    return out;
}

Tensor to_tensor(const std::vector<Image>& batch) {
    const Image& first = batch.front();
    Tensor t(static_cast<int>(batch.size()), first.channels, first.height, first.width);
    for (size_t i = 0; i < batch.size(); ++i)
        std::copy(batch[i].data.begin(), batch[i].data.end(),
                  t.v.begin() + static_cast<size_t>(i) * first.data.size());
    return t;
}

// replicate-pad to (th, tw)
Image pad_replicate(const Image& img, int th, int tw) {
    if (th == img.height && tw == img.width) return img;
    Image out(img.channels, th, tw);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x)
                out.at(c, y, x) =
                    img.at(c, std::min(y, img.height - 1), std::min(x, img.width - 1));
    return out;
}

int ceil_to_multiple(int v, int m) { return (v + m - 1) / m * m; }

}  // namespace

Batch sample_batch(const std::vector<Image>& corpus, const TrainConfig& cfg, Rng& rng) {
    if (corpus.empty()) throw FormatError("sample_batch: empty corpus");
    Batch b;
    for (int i = 0; i < cfg.batch; ++i) {
        const int pick = rng.uniform_int(0, static_cast<int>(corpus.size()) - 1);
        const Image& src = corpus[pick];
        if (src.height < cfg.patch || src.width < cfg.patch)
            throw FormatError("sample_batch: corpus image smaller than the patch size");
        const int y0 = rng.uniform_int(0, src.height - cfg.patch);
        const int x0 = rng.uniform_int(0, src.width - cfg.patch);
        Image clean = crop(src, y0, x0, cfg.patch, cfg.patch);
        b.inputs.push_back(degrade_image(clean, cfg.degrade, rng));
        b.targets.push_back(std::move(clean));
    }
    return b;
}

L1Result l1_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) throw FormatError("l1_loss: shape mismatch");
    L1Result r;
    r.loss = detail::l1_loss_kernel(pred, target, &r.grad);
    return r;
}

void adam_step(Network& net, const Gradients& grads, TrainState& state, const TrainConfig& cfg) {
    auto params = net.params();
    if (grads.tensors.size() != params.size() || state.m.size() != params.size())
        throw FormatError("adam_step: gradient/parameter structure mismatch");

    const int64_t t = state.step + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i].value;
        const auto& g_in = grads.tensors[i];
        if (g_in.size() != p.size())
            throw FormatError("adam_step: shape mismatch for " + params[i].name);
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (size_t j = 0; j < p.size(); ++j) {
            if (!std::isfinite(g_in[j]))
                throw NumericalError("non-finite gradient in " + params[i].name);
            const double g = g_in[j] + cfg.weight_decay * p[j];
            m[j] = static_cast<float>(cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g);
            v[j] = static_cast<float>(cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g);
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] = static_cast<float>(p[j] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps));
        }
    }
    state.step = t;
}

double train_step(Network& net, TrainState& state, const Batch& batch, const TrainConfig& cfg) {
    const Tensor input = to_tensor(batch.inputs);
    const Tensor target = to_tensor(batch.targets);

    net.zero_grad();
    Tensor logits = net.forward(input, /*train=*/true);

    double loss;
    if (net.config().head == HeadMode::direct_image) {
        L1Result l1 = l1_loss(logits, target);
        loss = l1.loss;
        net.backward(l1.grad);
    } else {
        detail::FlowPipeline<float> pipe;
        const bool simplex = net.config().flow_constraint == FlowConstraint::simplex;
        Tensor restored = pipe.forward(logits, input, simplex, net.config().k);
        L1Result l1 = l1_loss(restored, target);
        double penalty = 0.0;
        Tensor dlogits = pipe.backward(l1.grad, cfg.flow_smooth_l2, cfg.flow_sparse_l1, &penalty);
        loss = l1.loss + penalty;
        net.backward(dlogits);
    }

    if (!std::isfinite(loss)) throw NumericalError("training loss is non-finite");
    Gradients grads = net.collect_gradients();
    adam_step(net, grads, state, cfg);
    return loss;
}

TrainResult train(const TrainConfig& cfg, const std::vector<Image>& corpus,
                  const std::vector<Image>& heldout_clean, const std::string& ckpt_path,
                  const std::string& log_path) {
    Network net(cfg.net);
    TrainState state = TrainState::init(net, cfg.seed);
    Rng data_rng(cfg.seed);

    // fixed eval set, one degradation per held-out image
    std::vector<std::pair<Image, Image>> eval_pairs;
    {
        Rng eval_rng(cfg.seed ^ 0xe7a1ULL);
        for (const auto& clean : heldout_clean)
            eval_pairs.emplace_back(degrade_image(clean, cfg.degrade, eval_rng), clean);
    }

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw IoError("cannot write " + log_path);
        log << "step\tloss\tpsnr\tssim\n";
    }

    TrainResult result{Network(cfg.net), TrainState{}, {}};
    double last_loss = 0.0;
    for (int s = 0; s < cfg.steps; ++s) {
        Batch batch = sample_batch(corpus, cfg, data_rng);
        try {
            last_loss = train_step(net, state, batch, cfg);
        } catch (const NumericalError&) {
            // divergence guard: keep the last good checkpoint on disk
            if (!ckpt_path.empty() && state.step > 0) save_checkpoint(net, &state, ckpt_path);
            throw;
        }
        result.loss_history.push_back(last_loss);

        const bool at_eval = cfg.eval_every > 0 && (s + 1) % cfg.eval_every == 0;
        if (at_eval && log.is_open()) {
            double p = 0.0, ss = 0.0;
            if (!eval_pairs.empty()) {
                EvalReport rep = evaluate(net, eval_pairs, cfg.patch);
                p = rep.restored.mean_psnr_db;
                ss = rep.restored.mean_ssim;
            }
            log << state.step << "\t" << last_loss << "\t" << p << "\t" << ss << "\n" << std::flush;
        }
        if (cfg.ckpt_every > 0 && (s + 1) % cfg.ckpt_every == 0 && !ckpt_path.empty())
            save_checkpoint(net, &state, ckpt_path);
    }
    if (!ckpt_path.empty()) save_checkpoint(net, &state, ckpt_path);

    result.net = std::move(net);
    result.state = std::move(state);
    return result;
}

InferResult infer_tiled(Network& net, const Image& img, int tile) {
    const NetConfig& cfg = net.config();

    if (cfg.identity_stub) {
        FilterFlow flow = identity_flow(img.height, img.width, cfg.k);
        Image restored = apply_flow(flow, img);
        return {std::move(restored), std::move(flow)};
    }

    const int pf = cfg.pool_factor();
    if (tile < pf) throw FormatError("infer_tiled: tile smaller than the pooling granularity");
    if (img.channels != cfg.in_channels) throw FormatError("infer_tiled: channel mismatch");

    const bool direct = cfg.head == HeadMode::direct_image;
    Image direct_out;
    FilterFlow raw;
    if (direct)
        direct_out = Image(img.channels, img.height, img.width);
    else
        raw = FilterFlow(img.height, img.width, cfg.k, FlowConstraint::free);
    const int kk = cfg.k * cfg.k;

    for (int ty = 0; ty < img.height; ty += tile) {
        for (int tx = 0; tx < img.width; tx += tile) {
            const int rh = std::min(tile, img.height - ty);
            const int rw = std::min(tile, img.width - tx);
            // edge tiles pad by replication to the pooling granularity
            const Image patch = pad_replicate(crop(img, ty, tx, rh, rw),
                                              ceil_to_multiple(rh, pf), ceil_to_multiple(rw, pf));
            Tensor x(1, patch.channels, patch.height, patch.width);
            std::copy(patch.data.begin(), patch.data.end(), x.v.begin());
            const Tensor logits = net.forward(x, /*train=*/false);
            if (direct) {
                for (int c = 0; c < img.channels; ++c)
                    for (int y = 0; y < rh; ++y)
                        for (int xx = 0; xx < rw; ++xx)
                            direct_out.at(c, ty + y, tx + xx) = logits.at(0, c, y, xx);
            } else {
                for (int y = 0; y < rh; ++y)
                    for (int xx = 0; xx < rw; ++xx) {
                        float* dst = raw.pixel(ty + y, tx + xx);
                        for (int o = 0; o < kk; ++o) dst[o] = logits.at(0, o, y, xx);
                    }
            }
        }
    }

    if (direct) return {std::move(direct_out), FilterFlow{}};

    FilterFlow flow = cfg.flow_constraint == FlowConstraint::simplex ? normalize_simplex(raw)
                                                                     : std::move(raw);
    Image restored = apply_flow(flow, img);
    return {std::move(restored), std::move(flow)};
}

std::vector<Image> iterate_pff(Network& net, const Image& img, int n, int tile) {
    if (n < 1) throw FormatError("iterate_pff: n must be >= 1");
    std::vector<Image> outs;
    Image cur = img;
    for (int i = 0; i < n; ++i) {
        InferResult r = infer_tiled(net, cur, tile);
        cur = r.restored;
        outs.push_back(cur);
    }
    return outs;
}

EvalReport evaluate(Network& net, const std::vector<std::pair<Image, Image>>& pairs, int tile) {
    EvalReport rep;
    for (const auto& [degraded, clean] : pairs) {
        if (degraded.height != clean.height || degraded.width != clean.width ||
            degraded.channels != clean.channels)
            throw FormatError("evaluate: pair dimension mismatch");
        InferResult r = infer_tiled(net, degraded, tile);
        const Image restored = clamp01(r.restored);
        rep.restored.push(psnr(clean, restored), ssim(clean, restored));
        rep.degraded.push(psnr(clean, degraded), ssim(clean, degraded));
    }
    return rep;
}

std::vector<Image> load_corpus(const std::string& dir, int channels) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    std::vector<Image> out;
    for (const auto& f : files) {
        Image img = load_image(f);
        if (channels == 1 && img.channels == 3) img = rgb_to_y(img);
        if (channels == 3 && img.channels == 1) {
            Image rgb(3, img.height, img.width);
            for (int c = 0; c < 3; ++c)
                std::copy(img.plane(0), img.plane(0) + img.size(), rgb.plane(c));
            img = std::move(rgb);
        }
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace pff
