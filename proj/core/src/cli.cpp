#include "pff/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pff/analysis.hpp"
#include "pff/checkpoint.hpp"
#include "pff/degrade.hpp"
#include "pff/errors.hpp"
#include "pff/metrics.hpp"
#include "pff/parallel.hpp"
#include "pff/trainer.hpp"

namespace pff {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> list_images(const std::string& dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_degrade(const std::string& task_name_str, const std::string& in_dir,
                const std::string& out_dir, uint64_t seed, int qf, double max_len,
                int kernel_size, int factor) {
    DegradeSpec spec;
    spec.task = parse_task(task_name_str);
    spec.seed = seed;
    spec.quality = qf;
    spec.max_len = max_len;
    spec.kernel_size = kernel_size;
    spec.sr_factor = factor;

    const auto files = list_images(in_dir);
    if (files.empty()) throw IoError("no images found under " + in_dir);

    fs::create_directories(fs::path(out_dir) / "degraded");
    fs::create_directories(fs::path(out_dir) / "clean");

    Rng rng(seed);
    std::ofstream manifest(fs::path(out_dir) / "manifest.txt");
    if (!manifest) throw IoError("cannot write manifest under " + out_dir);
    manifest << "# degradation manifest\n" << spec.to_kv() << "#\n";

    for (const auto& f : files) {
        Image clean = load_image(f);
        if (spec.task == Task::super_resolution)
            clean = crop_to_multiple(clean, spec.sr_factor);
        const Image out = clamp01(degrade_image(clean, spec, rng));
        const std::string name = fs::path(f).filename().replace_extension(".png").string();
        save_image(out, (fs::path(out_dir) / "degraded" / name).string());
        save_image(clean, (fs::path(out_dir) / "clean" / name).string());
        manifest << name << "\n";
        std::cerr << "degraded " << name << "\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& corpus_dir,
              const std::string& heldout_dir, const std::string& out_ckpt,
              std::string log_path) {
    TrainConfig cfg = TrainConfig::from_file(config_path);
    if (log_path.empty()) log_path = out_ckpt + ".log";

    const auto corpus = load_corpus(corpus_dir, cfg.net.in_channels);
    std::vector<Image> heldout;
    if (!heldout_dir.empty()) heldout = load_corpus(heldout_dir, cfg.net.in_channels);

    TrainResult result = train(cfg, corpus, heldout, out_ckpt, log_path);
    const double final_loss =
        result.loss_history.empty() ? 0.0 : result.loss_history.back();
    std::cerr << "trained " << result.state.step << " steps, final loss " << final_loss
              << ", checkpoint " << out_ckpt << "\n";
    return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& in_path, const std::string& out_path,
              const std::string& flow_path, int iters, int tile) {
    LoadedCheckpoint lc = load_checkpoint(ckpt);
    Image img = load_image(in_path);
    if (img.channels != lc.net.config().in_channels && !lc.net.config().identity_stub) {
        if (lc.net.config().in_channels == 1)
            img = rgb_to_y(img);
        else
            throw FormatError("checkpoint wants 3-channel input, image is grayscale");
    }

    Image cur = img;
    FilterFlow last_flow;
    for (int i = 0; i < iters; ++i) {
        InferResult r = infer_tiled(lc.net, cur, tile);
        if (i > 0)
            std::cerr << "iteration " << (i + 1) << ": PSNR vs previous iterate "
                      << psnr(cur, r.restored) << " dB\n";
        cur = clamp01(r.restored);
        last_flow = std::move(r.flow);
    }
    save_image(cur, out_path);
    if (!flow_path.empty()) {
        if (last_flow.k == 0)
            std::cerr << "direct-image checkpoint produces no flow, skipping " << flow_path << "\n";
        else
            write_flow(last_flow, flow_path);
    }
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& pairs_dir, int tile) {
    LoadedCheckpoint lc = load_checkpoint(ckpt);
    const fs::path base(pairs_dir);
    const auto degraded_files = list_images((base / "degraded").string());
    if (degraded_files.empty()) throw IoError("no images under " + (base / "degraded").string());

    std::vector<std::pair<Image, Image>> pairs;
    std::vector<std::string> names;
    for (const auto& df : degraded_files) {
        const std::string name = fs::path(df).filename().string();
        const fs::path cf = base / "clean" / name;
        if (!fs::exists(cf)) throw IoError("missing clean counterpart for " + name);
        Image degraded = load_image(df);
        Image clean = load_image(cf.string());
        if (!lc.net.config().identity_stub && lc.net.config().in_channels == 1) {
            degraded = rgb_to_y(degraded);
            clean = rgb_to_y(clean);
        }
        pairs.emplace_back(std::move(degraded), std::move(clean));
        names.push_back(name);
    }

    EvalReport rep = evaluate(lc.net, pairs, tile);
    std::cout << "name\tpsnr\tssim\tbase_psnr\tbase_ssim\n";
    for (size_t i = 0; i < names.size(); ++i) {
        const auto& r = rep.restored.per_image[i];
        const auto& b = rep.degraded.per_image[i];
        std::cout << names[i] << "\t" << r.psnr_db << "\t" << r.ssim << "\t" << b.psnr_db << "\t"
                  << b.ssim << "\n";
    }
    std::cout << "mean\t" << rep.restored.mean_psnr_db << "\t" << rep.restored.mean_ssim << "\t"
              << rep.degraded.mean_psnr_db << "\t" << rep.degraded.mean_ssim << "\n";
    std::cerr << "mean PSNR " << rep.restored.mean_psnr_db << " dB (input "
              << rep.degraded.mean_psnr_db << " dB), gain "
              << rep.restored.mean_psnr_db - rep.degraded.mean_psnr_db << " dB over "
              << names.size() << " pairs\n";
    return 0;
}

int cmd_analyze(const std::string& flow_path, int kmeans_k, int pca_d, uint64_t seed,
                int max_filters, const std::string& out_dir) {
    const FilterFlow flow = read_flow(flow_path);
    fs::create_directories(out_dir);
    std::ofstream report(fs::path(out_dir) / "report.txt");
    if (!report) throw IoError("cannot write report under " + out_dir);

    report << "flow=" << flow_path << "\n"
           << "height=" << flow.height << " width=" << flow.width << " k=" << flow.k << "\n"
           << "constraint=" << (flow.constraint == FlowConstraint::simplex ? "simplex" : "free")
           << "\n";

    const FlowField field = expected_flow(flow);
    save_image(colorize_flow(field, flow.radius()), (fs::path(out_dir) / "flow_map.png").string());
    if (field.from_free) report << "expected_flow_normalized_from_free=1\n";

    const FilterBank bank = gather_filters(flow, max_filters, seed);
    report << "filters=" << bank.n << "\n";

    if (pca_d > 0) {
        const int d = std::min(pca_d, std::min(bank.n, bank.dim()));
        const PcaResult pca = pca_filters(bank, d);
        report << "pca_components=" << d << (pca.degenerate ? " (degenerate)" : "") << "\n";
        double cum = 0;
        for (int i = 0; i < d; ++i) {
            cum += pca.energy[i];
            report << "pca_energy_" << i << "=" << pca.energy[i] << " cumulative=" << cum << "\n";
        }
        const LoadingMaps maps = loading_factor_maps(flow, pca, d);
        for (int i = 0; i < d; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "loading_%02d.png", i);
            save_image(maps.maps[i], (fs::path(out_dir) / name).string());
            report << "loading_" << i << "_range=[" << maps.ranges[i].first << ","
                   << maps.ranges[i].second << "]\n";
        }
    }

    if (kmeans_k > 0) {
        const int K = std::min(kmeans_k, bank.n);
        const KmeansResult km = kmeans_filters(bank, K, seed);
        report << "kmeans_K=" << K << " iterations=" << km.iterations
               << " inertia=" << km.inertia << "\n";
        std::vector<int> sizes(K, 0);
        for (int a : km.assignments) ++sizes[a];
        for (int c = 0; c < K; ++c) report << "cluster_" << c << "_size=" << sizes[c] << "\n";
        // per-pixel centroid colorization needs the unsampled bank
        if (bank.n == flow.height * flow.width) {
            save_image(colorize_assignments(km.assignments, flow.height, flow.width, km),
                       (fs::path(out_dir) / "clusters.png").string());
        } else {
            report << "clusters_png_skipped=subsampled_bank\n";
        }
    }
    std::cerr << "analysis written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"predictive filter flow: restoration by per-pixel linear filters"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (default 1, reproducible)");

    // degrade
    auto* degrade = app.add_subcommand("degrade", "synthesize degraded/clean pairs");
    std::string d_task, d_in, d_out;
    uint64_t d_seed = 0;
    int d_qf = 10, d_ks = 9, d_factor = 4;
    double d_maxlen = 9;
    degrade->add_option("--task", d_task, "motion-blur | jpeg | super-resolution")->required();
    degrade->add_option("--in", d_in, "input image directory")->required();
    degrade->add_option("--out", d_out, "output directory")->required();
    degrade->add_option("--seed", d_seed, "rng seed");
    degrade->add_option("--qf", d_qf, "jpeg quality factor");
    degrade->add_option("--max-len", d_maxlen, "max blur length, pixels");
    degrade->add_option("--kernel-size", d_ks, "blur kernel extent (odd)");
    degrade->add_option("--factor", d_factor, "super-resolution factor");

    // train
    auto* train_cmd = app.add_subcommand("train", "run the self-supervised trainer");
    std::string t_config, t_corpus, t_heldout, t_out, t_log;
    train_cmd->add_option("--config", t_config, "key=value training config")->required();
    train_cmd->add_option("--corpus", t_corpus, "clean training image directory")->required();
    train_cmd->add_option("--heldout", t_heldout, "held-out clean images for eval rows");
    train_cmd->add_option("--out", t_out, "checkpoint output path")->required();
    train_cmd->add_option("--log", t_log, "TSV log path (default <out>.log)");

    // infer
    auto* infer = app.add_subcommand("infer", "restore one image with a checkpoint");
    std::string i_ckpt, i_in, i_out, i_flow;
    int i_iters = 1, i_tile = 32;
    infer->add_option("--ckpt", i_ckpt, "checkpoint path")->required();
    infer->add_option("--in", i_in, "input image")->required();
    infer->add_option("--out", i_out, "output image")->required();
    infer->add_option("--save-flow", i_flow, "also write the predicted flow (PFF1)");
    infer->add_option("--iters", i_iters, "feed the output back n times")->check(CLI::Range(1, 64));
    infer->add_option("--tile", i_tile, "tile size for non-overlapping inference");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "metrics over degraded/clean pairs");
    std::string e_ckpt, e_pairs;
    int e_tile = 32;
    eval_cmd->add_option("--ckpt", e_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--pairs", e_pairs, "directory with degraded/ and clean/")->required();
    eval_cmd->add_option("--tile", e_tile, "tile size");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "filter statistics and visualizations");
    std::string a_flow, a_out;
    int a_kmeans = 0, a_pca = 0, a_max = 20000;
    uint64_t a_seed = 0;
    analyze->add_option("--flow", a_flow, "PFF1 flow file")->required();
    analyze->add_option("--out", a_out, "output directory")->required();
    analyze->add_option("--kmeans", a_kmeans, "cluster count (0: skip)");
    analyze->add_option("--pca", a_pca, "principal components (0: skip)");
    analyze->add_option("--seed", a_seed, "rng seed");
    analyze->add_option("--max-filters", a_max, "subsample cap for the filter bank");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        // CLI11 prints usage/help itself; help exits with success
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        set_num_threads(threads);
        if (degrade->parsed())
            return cmd_degrade(d_task, d_in, d_out, d_seed, d_qf, d_maxlen, d_ks, d_factor);
        if (train_cmd->parsed()) return cmd_train(t_config, t_corpus, t_heldout, t_out, t_log);
        if (infer->parsed()) return cmd_infer(i_ckpt, i_in, i_out, i_flow, i_iters, i_tile);
        if (eval_cmd->parsed()) return cmd_eval(e_ckpt, e_pairs, e_tile);
        if (analyze->parsed()) return cmd_analyze(a_flow, a_kmeans, a_pca, a_seed, a_max, a_out);
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace pff
