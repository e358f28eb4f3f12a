#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "pidinet/bench.hpp"
#include "pidinet/config.hpp"
#include "pidinet/dataset_io.hpp"
#include "pidinet/eval.hpp"
#include "pidinet/model.hpp"
#include "pidinet/model_io.hpp"
#include "pidinet/pnm.hpp"
#include "pidinet/train.hpp"

namespace fs = std::filesystem;
using namespace pidinet;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw DataError("write failed for '" + path + "'");
}

int run(int argc, char** argv) {
    CLI::App app{"pixel-difference edge detection"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic edge dataset");
    int s_n = 10, s_size = 64, s_annot = 5;
    std::uint64_t s_seed = 1;
    std::string s_out;
    synth->add_option("--n", s_n, "number of samples");
    synth->add_option("--size", s_size, "image size in pixels");
    synth->add_option("--annotators", s_annot, "simulated annotators");
    synth->add_option("--seed", s_seed, "generator seed");
    synth->add_option("--out", s_out, "output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "train a model");
    std::string t_data, t_config = "[CARV]x4", t_out, t_log;
    int t_channels = 60, t_epochs = 14, t_crop = 0;
    double t_lambda = 1.1, t_eta = 0.3, t_lr = 0.005;
    std::uint64_t t_seed = 1;
    bool t_no_csam = false, t_no_cdcm = false, t_augment = false, t_extra = false;
    train->add_option("--data", t_data, "dataset directory")->required();
    train->add_option("--config", t_config, "architecture string, e.g. [CARV]x4");
    train->add_option("--channels", t_channels, "base channel count C");
    train->add_option("--epochs", t_epochs, "training epochs");
    train->add_option("--lambda", t_lambda, "loss lambda");
    train->add_option("--eta", t_eta, "loss eta");
    train->add_option("--lr", t_lr, "initial learning rate");
    train->add_option("--seed", t_seed, "training seed");
    train->add_option("--out", t_out, "output model file")->required();
    train->add_option("--log", t_log, "loss log CSV (default: <out>.log.csv)");
    train->add_flag("--no-csam", t_no_csam, "drop the spatial attention modules");
    train->add_flag("--no-cdcm", t_no_cdcm, "drop the dilated side modules");
    train->add_flag("--augment", t_augment, "random flip/scale/rotate/crop");
    train->add_option("--crop", t_crop, "training crop size (with --augment)");
    train->add_flag("--extra-data-schedule", t_extra, "decay at epochs 10/16 instead of 8/12");

    // infer
    auto* infer = app.add_subcommand("infer", "run a model on one image");
    std::string i_model, i_image, i_out;
    bool i_sides = false;
    infer->add_option("--model", i_model, "model file")->required();
    infer->add_option("--image", i_image, "input PPM")->required();
    infer->add_option("--out", i_out, "output edge map PGM")->required();
    infer->add_flag("--save-side-maps", i_sides, "also write the four side maps");

    // convert
    auto* convert = app.add_subcommand("convert", "rewrite PDC kernels as dense convolutions");
    std::string c_in, c_out;
    convert->add_option("--model", c_in, "input model")->required();
    convert->add_option("--out", c_out, "output model")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
    std::string e_pred, e_truth, e_report;
    int e_thresholds = 33;
    double e_radius = 0.0075, e_eta = 0.3;
    bool e_quantile = false, e_no_thin = false;
    eval->add_option("--pred", e_pred, "directory of predicted PGM maps")->required();
    eval->add_option("--truth", e_truth, "directory of NAME.gt.pgm maps")->required();
    eval->add_option("--thresholds", e_thresholds, "threshold count");
    eval->add_option("--radius-frac", e_radius, "match radius as a fraction of the diagonal");
    eval->add_option("--eta", e_eta, "truth binarization threshold");
    eval->add_flag("--quantile", e_quantile, "use per-image quantile thresholds");
    eval->add_flag("--no-thin", e_no_thin, "skip thinning");
    eval->add_option("--report", e_report, "PR curve CSV path");

    // bench
    auto* bench = app.add_subcommand("bench", "measure throughput and complexity");
    std::string b_model, b_report;
    int b_size = 200, b_iters = 50, b_warmup = 5;
    bench->add_option("--model", b_model, "model file")->required();
    bench->add_option("--size", b_size, "square input size");
    bench->add_option("--iters", b_iters, "timed iterations");
    bench->add_option("--warmup", b_warmup, "discarded warmup iterations");
    bench->add_option("--report", b_report, "JSON report path");

    // params
    auto* params = app.add_subcommand("params", "print parameter and MAC counts");
    std::string p_config = "[CARV]x4";
    int p_channels = 60, p_size = 200;
    bool p_no_csam = false, p_no_cdcm = false;
    params->add_option("--config", p_config, "architecture string");
    params->add_option("--channels", p_channels, "base channel count C");
    params->add_option("--size", p_size, "input size for the MAC count");
    params->add_flag("--no-csam", p_no_csam, "drop the spatial attention modules");
    params->add_flag("--no-cdcm", p_no_cdcm, "drop the dilated side modules");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help() << "\n";
        return 1;
    }

    if (synth->parsed()) {
        auto data = synth_dataset(s_n, s_size, s_annot, s_seed);
        write_dataset(s_out, data);
        std::cout << "wrote " << data.size() << " samples to " << s_out << "\n";
        return 0;
    }

    if (train->parsed()) {
        const ArchConfig cfg =
            make_arch_config(t_config, t_channels, !t_no_csam, !t_no_cdcm);
        auto data = load_dataset(t_data);
        PiDiNetModel model = build_model(cfg, t_seed);
        TrainConfig tcfg;
        tcfg.epochs = t_epochs;
        tcfg.lr = t_lr;
        tcfg.extra_data_schedule = t_extra;
        tcfg.loss.lambda = t_lambda;
        tcfg.loss.eta = t_eta;
        tcfg.seed = t_seed;
        tcfg.use_augment = t_augment;
        tcfg.crop_size = t_crop;
        tcfg.progress = &std::cerr;
        TrainResult tr = train_loop(model, data, tcfg);
        save_model(model, t_out);
        write_text(t_log.empty() ? t_out + ".log.csv" : t_log, train_log_csv(tr.log));
        if (tr.aborted) {
            std::cerr << "training aborted: " << tr.abort_reason
                      << " (kept the last completed epoch)\n";
            return 2;
        }
        std::cout << "saved " << t_out << "\n";
        return 0;
    }

    if (infer->parsed()) {
        PiDiNetModel model = load_model(i_model);
        const Tensor img = read_ppm(i_image);
        const ForwardResult out = forward(model, img);
        write_pgm(i_out, out.fused, 65535);
        if (i_sides) {
            const fs::path base(i_out);
            const std::string stem = (base.parent_path() / base.stem()).string();
            for (int s = 0; s < 4; ++s)
                write_pgm(stem + ".side" + std::to_string(s + 1) + ".pgm",
                          out.side[std::size_t(s)], 65535);
        }
        return 0;
    }

    if (convert->parsed()) {
        PiDiNetModel model = load_model(c_in);
        save_model(convert_model_for_inference(model), c_out);
        return 0;
    }

    if (eval->parsed()) {
        auto truth_set = load_dataset(e_truth);
        std::vector<Tensor> preds, truths;
        for (const Sample& s : truth_set) {
            const fs::path p = fs::path(e_pred) / (s.name + ".pgm");
            preds.push_back(read_pgm(p.string()));
            truths.push_back(s.truth);
        }
        EvalConfig ecfg;
        ecfg.n_thresholds = e_thresholds;
        ecfg.match_radius_frac = e_radius;
        ecfg.truth_eta = e_eta;
        ecfg.quantile_thresholds = e_quantile;
        ecfg.thin = !e_no_thin;
        const EvalReport rep = ods_ois(preds, truths, ecfg);
        if (!e_report.empty()) write_text(e_report, pr_curve_csv(rep.pr_curve));
        std::printf("ODS %.6f\nOIS %.6f\n", rep.ods_f, rep.ois_f);
        return 0;
    }

    if (bench->parsed()) {
        PiDiNetModel model = load_model(b_model);
        const BenchReport rep = benchmark(model, b_size, b_size, b_warmup, b_iters);
        std::cout << bench_report_text(rep);
        if (!b_report.empty()) write_text(b_report, bench_report_json(rep));
        return 0;
    }

    if (params->parsed()) {
        const ArchConfig cfg =
            make_arch_config(p_config, p_channels, !p_no_csam, !p_no_cdcm);
        PiDiNetModel model = build_model(cfg, 1);
        std::printf("params %lld\nmacs_%dx%d %lld\n", (long long)count_params(model), p_size,
                    p_size, (long long)count_macs(model, p_size, p_size));
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
