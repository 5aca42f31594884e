#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sanet/verify.hpp"

// Single-binary CLI over the library: training, stylization, the three
// runtime controls, the verification harnesses and a relative benchmark.

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
        const size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::vector<sanet::Tensor> read_ppm_list(const std::string& csv) {
    std::vector<sanet::Tensor> out;
    for (const std::string& path : split_csv(csv)) out.push_back(sanet::read_ppm(path));
    return out;
}

sanet::TransformNet load_net(const std::string& ckpt) {
    return sanet::load_checkpoint(sanet::read_file(ckpt)).net;
}

int report_and_exit(const std::vector<sanet::OracleReport>& reports) {
    std::cout << sanet::oracle_csv(reports);
    int failed = 0;
    for (const auto& r : reports) failed += r.pass ? 0 : 1;
    if (failed) {
        std::cerr << failed << " check(s) failed\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SANet-style arbitrary style transfer, desk scale"};
    app.require_subcommand(1);
    int exit_code = 0;

    // train
    auto* train_cmd = app.add_subcommand("train", "train from a key=value config file");
    std::string config_path;
    train_cmd->add_option("--config", config_path, "config file")->required();
    train_cmd->callback([&] {
        const auto bytes = sanet::read_file(config_path);
        const sanet::TrainConfig cfg =
            sanet::parse_train_config(std::string(bytes.begin(), bytes.end()));
        const sanet::TrainResult r = sanet::train(cfg);
        if (!r.reports.empty()) {
            std::printf("steps %d..%d  first total %.6g  final total %.6g\n", r.first_step,
                        cfg.steps, r.reports.front().total, r.reports.back().total);
        } else {
            std::printf("no steps executed (steps=%d, resumed at %d)\n", cfg.steps, r.first_step);
        }
        if (!cfg.checkpoint_out.empty()) std::printf("checkpoint: %s\n", cfg.checkpoint_out.c_str());
        if (!cfg.report_out.empty()) std::printf("report: %s\n", cfg.report_out.c_str());
    });

    // stylize
    auto* stylize_cmd = app.add_subcommand("stylize", "stylize a content image");
    std::string ckpt, content_path, style_path, out_path;
    double alpha = 1.0;
    bool alpha_set = false;
    stylize_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
    stylize_cmd->add_option("--content", content_path, "content PPM")->required();
    stylize_cmd->add_option("--style", style_path, "style PPM")->required();
    stylize_cmd->add_option("--out", out_path, "output PPM")->required();
    stylize_cmd->add_option("--alpha", alpha, "content-style tradeoff in [0,1]")
        ->check(CLI::Range(0.0, 1.0))
        ->each([&](const std::string&) { alpha_set = true; });
    stylize_cmd->callback([&] {
        sanet::TransformNet net = load_net(ckpt);
        const sanet::Tensor content = sanet::read_ppm(content_path);
        const sanet::Tensor style = sanet::read_ppm(style_path);
        const sanet::Tensor image = alpha_set ? sanet::tradeoff(net, content, style, alpha)
                                              : sanet::stylize(net, content, style).image;
        sanet::write_ppm(out_path, image);
        std::printf("wrote %s\n", out_path.c_str());
    });

    // interpolate
    auto* interp_cmd = app.add_subcommand("interpolate", "convex combination of styles");
    std::string styles_csv, weights_csv;
    interp_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
    interp_cmd->add_option("--content", content_path, "content PPM")->required();
    interp_cmd->add_option("--styles", styles_csv, "comma-separated style PPMs")->required();
    interp_cmd->add_option("--weights", weights_csv, "comma-separated weights")->required();
    interp_cmd->add_option("--out", out_path, "output PPM")->required();
    interp_cmd->callback([&] {
        sanet::TransformNet net = load_net(ckpt);
        const sanet::Tensor content = sanet::read_ppm(content_path);
        const std::vector<sanet::Tensor> styles = read_ppm_list(styles_csv);
        std::vector<double> weights;
        for (const std::string& w : split_csv(weights_csv)) weights.push_back(std::stod(w));
        sanet::write_ppm(out_path, sanet::style_interpolate(net, content, styles, weights));
        std::printf("wrote %s\n", out_path.c_str());
    });

    // mask
    auto* mask_cmd = app.add_subcommand("mask", "per-region styles via a mask partition");
    std::string masks_csv;
    mask_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
    mask_cmd->add_option("--content", content_path, "content PPM")->required();
    mask_cmd->add_option("--styles", styles_csv, "comma-separated style PPMs")->required();
    mask_cmd->add_option("--masks", masks_csv, "comma-separated mask PPMs (nonzero red = 1)")
        ->required();
    mask_cmd->add_option("--out", out_path, "output PPM")->required();
    mask_cmd->callback([&] {
        sanet::TransformNet net = load_net(ckpt);
        const sanet::Tensor content = sanet::read_ppm(content_path);
        const std::vector<sanet::Tensor> styles = read_ppm_list(styles_csv);
        const std::vector<sanet::Tensor> mask_images = read_ppm_list(masks_csv);
        const sanet::MaskSet ms =
            sanet::make_mask_set(mask_images, content.shape.h / sanet::kLevelAStride,
                                 content.shape.w / sanet::kLevelAStride);
        sanet::write_ppm(out_path, sanet::spatial_control(net, content, styles, ms));
        std::printf("wrote %s\n", out_path.c_str());
    });

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    uint64_t seed = 7;
    grad_cmd->add_option("--seed", seed, "rng seed");
    grad_cmd->callback([&] { exit_code = report_and_exit(sanet::run_gradcheck(seed)); });

    // oracle-check
    auto* oracle_cmd = app.add_subcommand("oracle-check", "brute-force attention comparison");
    int instances = 100;
    oracle_cmd->add_option("--seed", seed, "rng seed");
    oracle_cmd->add_option("--instances", instances, "random instances to compare");
    oracle_cmd->callback(
        [&] { exit_code = report_and_exit(sanet::run_oracle_check(seed, instances)); });

    // properties
    auto* prop_cmd = app.add_subcommand("properties", "cross-module property suite");
    prop_cmd->add_option("--seed", seed, "rng seed");
    prop_cmd->callback([&] { exit_code = report_and_exit(sanet::run_property_suite(seed)); });

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "single-level vs dual-level relative timing");
    int bench_size = 256;
    int repeats = 5;
    bench_cmd->add_option("--size", bench_size, "input resolution in px");
    bench_cmd->add_option("--repeats", repeats, "timing repetitions (min is reported)");
    bench_cmd->callback([&] { std::cout << sanet::bench_report(sanet::run_bench(bench_size, repeats)); });

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write a procedural PPM test image");
    std::string kind = "blobs";
    int width = 64, height = 0;
    synth_cmd->add_option("--kind", kind, "stripes|blobs|checker");
    synth_cmd->add_option("--seed", seed, "rng seed");
    synth_cmd->add_option("--width", width, "width in px");
    synth_cmd->add_option("--height", height, "height in px (default: width)");
    synth_cmd->add_option("--out", out_path, "output PPM")->required();
    synth_cmd->callback([&] {
        if (height == 0) height = width;
        sanet::write_ppm(out_path,
                         sanet::synth_image(seed, width, height, sanet::parse_synth_kind(kind)));
        std::printf("wrote %s\n", out_path.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
