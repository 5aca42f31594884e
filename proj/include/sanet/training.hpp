#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanet/adam.hpp"
#include "sanet/image.hpp"
#include "sanet/losses.hpp"

// Training loop: synthetic image pools, seeded per-step batch sampling,
// Eq. 6 loss, Adam. Batch draws are a pure function of (seed, step), so a
// resumed run replays exactly the batches an uninterrupted run would see.

namespace sanet {

struct TrainConfig {
    double learning_rate = 1e-4;  // paper's Adam lr
    int batch_size = 2;           // desk default (paper: 5)
    int steps = 500;
    uint64_t seed = 7;
    int image_size = 32;  // desk default (paper crops 256)
    LossWeights weights;
    int c_feat = 32;
    int c_attn = 0;  // 0 -> c_feat / 2
    int content_pool = 8;
    int style_pool = 8;
    int checkpoint_every = 0;  // 0 -> only at the end
    std::string checkpoint_out = "sanet.ckpt";
    std::string report_out = "train_report.csv";
    std::string resume;  // checkpoint to continue from
};

inline TrainConfig parse_train_config(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        if (strip(line).empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        const auto num = [&](const char* what) {
            try {
                return std::stod(val);
            } catch (const std::exception&) {
                throw std::invalid_argument("config: bad " + std::string(what) + " value '" + val +
                                            "'");
            }
        };
        if (key == "learning_rate") c.learning_rate = num(key.c_str());
        else if (key == "batch_size") c.batch_size = static_cast<int>(num(key.c_str()));
        else if (key == "steps") c.steps = static_cast<int>(num(key.c_str()));
        else if (key == "seed") c.seed = static_cast<uint64_t>(num(key.c_str()));
        else if (key == "image_size") c.image_size = static_cast<int>(num(key.c_str()));
        else if (key == "lambda_c") c.weights.lambda_c = num(key.c_str());
        else if (key == "lambda_s") c.weights.lambda_s = num(key.c_str());
        else if (key == "lambda_identity1") c.weights.lambda_id1 = num(key.c_str());
        else if (key == "lambda_identity2") c.weights.lambda_id2 = num(key.c_str());
        else if (key == "c_feat") c.c_feat = static_cast<int>(num(key.c_str()));
        else if (key == "c_attn") c.c_attn = static_cast<int>(num(key.c_str()));
        else if (key == "content_pool") c.content_pool = static_cast<int>(num(key.c_str()));
        else if (key == "style_pool") c.style_pool = static_cast<int>(num(key.c_str()));
        else if (key == "checkpoint_every") c.checkpoint_every = static_cast<int>(num(key.c_str()));
        else if (key == "checkpoint_out") c.checkpoint_out = val;
        else if (key == "report_out") c.report_out = val;
        else if (key == "resume") c.resume = val;
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    if (c.learning_rate <= 0) throw std::invalid_argument("config: learning_rate must be > 0");
    if (c.batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (c.steps < 0) throw std::invalid_argument("config: steps must be >= 0");
    if (c.image_size < 32 || c.image_size % 16 != 0) {
        throw std::invalid_argument("config: image_size must be >= 32 and divisible by 16");
    }
    if (c.content_pool < 1 || c.style_pool < 1) {
        throw std::invalid_argument("config: pool sizes must be >= 1");
    }
    return c;
}

// Stacks single-sample (1, C, H, W) images into one (B, C, H, W) batch.
inline Tensor stack_batch(const std::vector<Tensor>& items) {
    if (items.empty()) throw std::invalid_argument("stack_batch: empty batch");
    const Shape s0 = items[0].shape;
    Tensor out(Shape{static_cast<int>(items.size()), s0.c, s0.h, s0.w});
    for (size_t i = 0; i < items.size(); ++i) {
        if (!(items[i].shape == s0)) throw std::invalid_argument("stack_batch: mixed shapes");
        std::copy(items[i].data.begin(), items[i].data.end(),
                  out.data.begin() + static_cast<long>(i) * s0.numel());
    }
    return out;
}

// One optimizer step over an already-stacked batch pair.
inline LossReport train_step(TransformNet& net, AdamState& state, const Tensor& content,
                             const Tensor& style, const LossWeights& weights, double lr) {
    Graph g;
    NetValuesT<float> v = net_leaves(g, net, true);
    TotalLossGraphT<float> loss =
        total_loss_graph(g, net, v, g.leaf(content), g.leaf(style), weights);
    g.backward(loss.total);

    auto params = net.params();
    const std::vector<int> ids = net_leaf_ids(v);
    std::map<std::string, Tensor> grads;
    for (size_t i = 0; i < params.size(); ++i) grads[params[i].first] = g.grad(ids[i]);
    adam_step(params, grads, state, lr);
    return loss.report();
}

// Deterministic pools: contents and styles rotate through the three synth
// families with per-image seeds derived from the run seed.
inline std::vector<Tensor> make_pool(uint64_t seed, uint64_t salt, int count, int size) {
    static constexpr SynthKind kKinds[3] = {SynthKind::Blobs, SynthKind::Stripes,
                                            SynthKind::Checker};
    std::vector<Tensor> pool;
    for (int i = 0; i < count; ++i) {
        pool.push_back(synth_image(kKinds[i % 3], derive_seed(seed, salt + static_cast<uint64_t>(i)),
                                   size));
    }
    return pool;
}

// Batch for a given step, independent of any earlier sampling.
inline std::pair<Tensor, Tensor> sample_batch(const TrainConfig& cfg,
                                              const std::vector<Tensor>& contents,
                                              const std::vector<Tensor>& styles, int step) {
    Rng rng(derive_seed(derive_seed(cfg.seed, 0xBA7C4ULL), static_cast<uint64_t>(step)));
    std::vector<Tensor> cb, sb;
    for (int i = 0; i < cfg.batch_size; ++i) {
        const auto& c = contents[rng.below(contents.size())];
        cb.push_back(random_crop(c, cfg.image_size, rng));
        const auto& s = styles[rng.below(styles.size())];
        sb.push_back(random_crop(s, cfg.image_size, rng));
    }
    return {stack_batch(cb), stack_batch(sb)};
}

inline std::vector<std::pair<std::string, const Tensor*>> optimizer_extras(const AdamState& state,
                                                                           Tensor& t_holder) {
    std::vector<std::pair<std::string, const Tensor*>> extras;
    t_holder = Tensor::scalar(static_cast<float>(state.t));
    extras.emplace_back("opt.t", &t_holder);
    for (const auto& [name, m] : state.m) extras.emplace_back("opt.m." + name, &m);
    for (const auto& [name, v] : state.v) extras.emplace_back("opt.v." + name, &v);
    return extras;
}

struct TrainResult {
    TransformNet net;
    AdamState state;
    std::vector<LossReport> reports;  // one per executed step
    int first_step = 0;               // 1 unless resumed
};

// Full training run. Deterministic given the config; writes the checkpoint
// and CSV report to the configured paths (empty path = skip writing).
inline TrainResult train(const TrainConfig& cfg) {
    TrainResult r;
    if (!cfg.resume.empty()) {
        LoadedCheckpoint lc = load_checkpoint(read_file(cfg.resume));
        if (cfg.c_feat != lc.net.c_feat) {
            throw std::invalid_argument("resume: checkpoint c_feat " +
                                        std::to_string(lc.net.c_feat) +
                                        " conflicts with config c_feat " +
                                        std::to_string(cfg.c_feat));
        }
        r.net = std::move(lc.net);
        auto t_it = lc.extras.find("opt.t");
        if (t_it != lc.extras.end()) {
            r.state.reset_to_step(static_cast<int64_t>(t_it->second.item()));
        }
        for (auto& [name, t] : lc.extras) {
            if (name.rfind("opt.m.", 0) == 0) r.state.m[name.substr(6)] = std::move(t);
            else if (name.rfind("opt.v.", 0) == 0) r.state.v[name.substr(6)] = std::move(t);
        }
    } else {
        r.net = make_network<float>(derive_seed(cfg.seed, 0xE0C0DEULL),
                                    derive_seed(cfg.seed, 0x5EED1ULL), cfg.c_feat, cfg.c_attn);
    }
    r.first_step = static_cast<int>(r.state.t) + 1;

    const int pool_px = cfg.image_size * 2;
    const std::vector<Tensor> contents = make_pool(cfg.seed, 1000, cfg.content_pool, pool_px);
    const std::vector<Tensor> styles = make_pool(cfg.seed, 2000, cfg.style_pool, pool_px);

    std::ofstream report;
    if (!cfg.report_out.empty()) {
        report.open(cfg.report_out);
        if (!report) throw std::runtime_error("cannot open " + cfg.report_out + " for writing");
        report << loss_csv_header() << "\n";
    }
    Tensor t_holder;
    const auto save = [&]() {
        if (cfg.checkpoint_out.empty()) return;
        write_file(cfg.checkpoint_out, save_checkpoint(r.net, optimizer_extras(r.state, t_holder)));
    };

    for (int step = r.first_step; step <= cfg.steps; ++step) {
        auto [content, style] = sample_batch(cfg, contents, styles, step);
        LossReport rep = train_step(r.net, r.state, content, style, cfg.weights, cfg.learning_rate);
        r.reports.push_back(rep);
        if (report) report << loss_csv_row(step, rep) << "\n";
        if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) save();
    }
    save();
    return r;
}

}  // namespace sanet
