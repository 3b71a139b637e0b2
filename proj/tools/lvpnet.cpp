// lvpnet: train / compress / decompress / verify / eval / ablate front end.
// Stdout carries one tab-separated record per line; the fully resolved
// configuration is echoed as config records at the start of every run.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "lvp/container.hpp"
#include "lvp/model.hpp"
#include "lvp/training.hpp"

namespace fs = std::filesystem;
using namespace lvp;

namespace {

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Usage:
        case ErrorKind::Config:
        case ErrorKind::Io:
            return 2;
        case ErrorKind::HashMismatch:
            return 3;
        case ErrorKind::CorruptStream:
            return 4;
        default:
            return 1;
    }
}

struct Options {
    TrainConfig train;
    int timing_reps = 5;
    bool qcm_blocks_set = false;

    void apply_key(const std::string& key, const std::string& value) {
        auto as_double = [&](const std::string& v) -> double {
            try {
                size_t idx = 0;
                double d = std::stod(v, &idx);
                require(idx == v.size(), ErrorKind::Config, "bad numeric value: " + v);
                return d;
            } catch (const std::logic_error&) {
                raise(ErrorKind::Config, "bad numeric value for " + key + ": " + v);
            }
        };
        auto as_int = [&](const std::string& v) -> int64_t {
            double d = as_double(v);
            require(d == static_cast<double>(static_cast<int64_t>(d)), ErrorKind::Config,
                    "expected integer for " + key + ": " + v);
            return static_cast<int64_t>(d);
        };

        if (key == "seed")
            train.seed = static_cast<uint64_t>(as_int(value));
        else if (key == "epochs")
            train.epochs = static_cast<int>(as_int(value));
        else if (key == "batch_size")
            train.batch_size = static_cast<int>(as_int(value));
        else if (key == "lr")
            train.lr = as_double(value);
        else if (key == "lr_decay_every")
            train.lr_decay_every = static_cast<int>(as_int(value));
        else if (key == "lr_decay_factor")
            train.lr_decay_factor = as_double(value);
        else if (key == "mode") {
            if (value == "dataset")
                train.mode = TrainMode::Dataset;
            else if (value == "single")
                train.mode = TrainMode::SingleImage;
            else
                raise(ErrorKind::Config, "mode must be dataset|single, got " + value);
        } else if (key == "rate")
            train.codec.set_rate(as_double(value));
        else if (key == "q_step")
            train.codec.q_step = as_double(value);
        else if (key == "stages")
            train.codec.stages = static_cast<int>(as_int(value));
        else if (key == "qcm_blocks") {
            train.codec.qcm_blocks = static_cast<int>(as_int(value));
            qcm_blocks_set = true;
        } else if (key == "predictor_width")
            train.codec.predictor_width = static_cast<int>(as_int(value));
        else if (key == "sampling") {
            if (value == "gmsm")
                train.codec.sampling = Sampling::Multiscale;
            else if (value == "cnn")
                train.codec.sampling = Sampling::PlainCnn;
            else
                raise(ErrorKind::Config, "sampling must be gmsm|cnn, got " + value);
        } else if (key == "use_qcm")
            train.codec.use_qcm = as_int(value) != 0;
        else if (key == "timing_reps")
            timing_reps = static_cast<int>(as_int(value));
        else
            raise(ErrorKind::Config, "unknown configuration key: " + key);
    }

    void load_file(const std::string& path) {
        std::ifstream f(path);
        require(f.good(), ErrorKind::Io, "cannot open config file: " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
            };
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                require(trim(line).empty(), ErrorKind::Config,
                        path + ":" + std::to_string(lineno) + ": expected key = value");
                continue;
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            require(!key.empty() && !value.empty(), ErrorKind::Config,
                    path + ":" + std::to_string(lineno) + ": expected key = value");
            apply_key(key, value);
        }
    }

    void finalize() {
        if (!qcm_blocks_set) train.codec.qcm_blocks = TrainConfig::default_qcm_blocks(train.mode);
        require(timing_reps >= 1, ErrorKind::Config, "timing_reps must be >= 1");
        train.validate();
    }

    void log_resolved(std::ostream& os) const {
        os << "config\tseed\t" << train.seed << "\n";
        os << "config\tepochs\t" << train.epochs << "\n";
        os << "config\tbatch_size\t" << train.batch_size << "\n";
        os << "config\tlr\t" << train.lr << "\n";
        os << "config\tlr_decay_every\t" << train.lr_decay_every << "\n";
        os << "config\tlr_decay_factor\t" << train.lr_decay_factor << "\n";
        os << "config\tmode\t" << (train.mode == TrainMode::Dataset ? "dataset" : "single")
           << "\n";
        os << "config\trate\t" << train.codec.rate() << "\n";
        os << "config\tq_step\t" << train.codec.q_step << "\n";
        os << "config\tstages\t" << train.codec.stages << "\n";
        os << "config\tqcm_blocks\t" << train.codec.qcm_blocks << "\n";
        os << "config\tpredictor_width\t" << train.codec.predictor_width << "\n";
        os << "config\tsampling\t"
           << (train.codec.sampling == Sampling::Multiscale ? "gmsm" : "cnn") << "\n";
        os << "config\tuse_qcm\t" << (train.codec.use_qcm ? 1 : 0) << "\n";
        os << "config\ttiming_reps\t" << timing_reps << "\n";
    }
};

// Ordered (key, value) overrides: config file first, then flags as given.
struct FlagSet {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value configuration file");
        auto track = [this](const std::string& key) {
            return [this, key](const std::string& v) { overrides.emplace_back(key, v); };
        };
        cmd->add_option_function<std::string>("--seed", track("seed"), "RNG seed");
        cmd->add_option_function<std::string>("--epochs", track("epochs"), "training epochs");
        cmd->add_option_function<std::string>("--batch", track("batch_size"), "batch size");
        cmd->add_option_function<std::string>("--lr", track("lr"), "initial learning rate");
        cmd->add_option_function<std::string>("--lr-decay-every", track("lr_decay_every"),
                                              "epochs between learning-rate decays");
        cmd->add_option_function<std::string>("--lr-decay-factor", track("lr_decay_factor"),
                                              "learning-rate decay factor");
        cmd->add_option_function<std::string>("--mode", track("mode"), "dataset|single");
        cmd->add_option_function<std::string>("--rate", track("rate"), "sampling rate r");
        cmd->add_option_function<std::string>("--qstep", track("q_step"),
                                              "quantization step size");
        cmd->add_option_function<std::string>("--stages", track("stages"), "encoder stages T");
        cmd->add_option_function<std::string>("--qcm-blocks", track("qcm_blocks"),
                                              "QCM residual blocks");
        cmd->add_option_function<std::string>("--predictor-width", track("predictor_width"),
                                              "predictor full-resolution width");
        cmd->add_option_function<std::string>("--sampling", track("sampling"), "gmsm|cnn");
        cmd->add_flag_function(
            "--no-qcm", [this](int64_t) { overrides.emplace_back("use_qcm", "0"); },
            "disable the quantization compensation module");
        cmd->add_option_function<std::string>("--reps", track("timing_reps"),
                                              "timing repetitions per sample");
    }

    Options resolve() const {
        Options opt;
        if (!config_path.empty()) opt.load_file(config_path);
        for (const auto& [k, v] : overrides) opt.apply_key(k, v);
        opt.finalize();
        return opt;
    }
};

void dump_features(const LvpModel& model, const Image8& img, const std::string& dir) {
    fs::create_directories(dir);
    Image8 padded = pad_replicate(img, model.cfg.grid_divisor());
    Tensor x({1, padded.h, padded.w});
    for (size_t i = 0; i < padded.pixels.size(); ++i) x.data[i] = padded.pixels[i] / 255.0;
    auto dump = model.feature_dump(x);
    auto write_plane = [&](const Tensor& t, const std::string& name) {
        std::ostringstream fname;
        fname << name << "_" << t.dim(0) << "x" << t.dim(1) << "x" << t.dim(2) << ".f64";
        std::ofstream f(fs::path(dir) / fname.str(), std::ios::binary);
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    };
    for (size_t t = 0; t < dump.stage_features.size(); ++t)
        write_plane(dump.stage_features[t], "f" + std::to_string(t + 1));
    write_plane(dump.latent, "y");
    write_plane(dump.dequantized, "y_hat");
    write_plane(dump.compensated, "compensated");
}

int cmd_train(const std::string& corpus_path, const std::string& model_path,
              const FlagSet& flags) {
    Options opt = flags.resolve();
    opt.log_resolved(std::cout);
    Corpus corpus = load_corpus(corpus_path);

    std::ostringstream log;
    auto result = train(corpus, opt.train, &log);
    std::cout << log.str();

    std::ofstream logfile(model_path + ".log");
    logfile << log.str();

    const uint64_t hash = save_model(result.model, model_path);
    std::cout << "model\t" << model_path << "\t" << std::hex << hash << std::dec << "\n";
    return 0;
}

int cmd_compress(const std::string& model_path, const std::string& input_path,
                 const std::string& output_path, const std::string& features_dir) {
    auto loaded = load_model(model_path);
    Image8 img = read_pgm(input_path);
    auto c = compress_image(img, loaded.model, loaded.hash);
    write_container(c, output_path);
    if (!features_dir.empty()) dump_features(loaded.model, img, features_dir);
    std::cout << "bpp\t" << container_bpp(c) << "\n";
    std::cout << "pixel_bpp\t" << pixel_stream_bpp(c) << "\n";
    return 0;
}

int cmd_decompress(const std::string& model_path, const std::string& input_path,
                   const std::string& output_path) {
    auto loaded = load_model(model_path);
    Image8 img = decompress_image(read_container_bytes(input_path), loaded.model, loaded.hash);
    write_pgm(img, output_path);
    std::cout << "ok\t" << output_path << "\n";
    return 0;
}

int cmd_verify(const std::string& model_path, const std::string& corpus_path) {
    auto loaded = load_model(model_path);
    Corpus corpus = load_corpus(corpus_path);
    const size_t model_bytes = fs::file_size(model_path);
    auto report = evaluate(corpus, loaded.model, loaded.hash, model_bytes, 1);

    std::vector<const EvalRecord*> rows;
    for (const auto& r : report.records) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(),
              [](const EvalRecord* a, const EvalRecord* b) { return a->name < b->name; });
    for (const auto* r : rows)
        std::cout << "verify\t" << r->name << "\t" << r->h << "x" << r->w << "\t" << r->bpp
                  << "\t" << r->pixel_bpp << "\t" << (r->lossless ? "ok" : "MISMATCH") << "\n";
    std::cout << "mean_bpp\t" << report.mean_bpp << "\t" << report.mean_pixel_bpp << "\n";
    if (!report.all_lossless) {
        for (const auto* r : rows)
            if (!r->lossless) std::cout << "mismatch\t" << r->name << "\n";
        return 5;
    }
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& corpus_path,
             const FlagSet& flags) {
    Options opt = flags.resolve();
    auto loaded = load_model(model_path);
    Corpus corpus = load_corpus(corpus_path);
    const size_t model_bytes = fs::file_size(model_path);
    auto report = evaluate(corpus, loaded.model, loaded.hash, model_bytes, opt.timing_reps);

    for (const auto& r : report.records)
        std::cout << "eval\t" << r.name << "\t" << r.bpp << "\t" << r.pixel_bpp << "\t"
                  << r.bpp_with_model << "\t" << r.enc_ms << "\t" << r.dec_ms << "\t"
                  << (r.lossless ? "ok" : "MISMATCH") << "\n";
    std::cout << "eval_mean\t" << report.mean_bpp << "\t" << report.mean_pixel_bpp << "\t"
              << report.mean_bpp_with_model << "\t" << report.mean_enc_ms << "\t"
              << report.mean_dec_ms << "\n";
    std::cout << "baseline_bpp\t" << marginal_entropy_bpp(corpus) << "\n";
    return report.all_lossless ? 0 : 5;
}

struct AblateRow {
    std::string label;
    double dataset_bpp = 0.0;
    double single_bpp = 0.0;
    double enc_ms = 0.0;
    double dec_ms = 0.0;
};

AblateRow run_ablate_variant(const std::string& label, const Corpus& corpus, TrainConfig cfg,
                             const std::string& out_dir) {
    AblateRow row;
    row.label = label;

    cfg.mode = TrainMode::Dataset;
    auto r = train(corpus, cfg);
    const std::string model_path = (fs::path(out_dir) / (label + ".lvpm")).string();
    const uint64_t hash = save_model(r.model, model_path);
    auto report = evaluate(corpus, r.model, hash, fs::file_size(model_path), 3);
    row.dataset_bpp = report.mean_bpp;
    row.enc_ms = report.mean_enc_ms;
    row.dec_ms = report.mean_dec_ms;

    // single-image column: a 3-block model trained on the first image alone
    TrainConfig single = cfg;
    single.mode = TrainMode::SingleImage;
    single.codec.qcm_blocks = TrainConfig::default_qcm_blocks(TrainMode::SingleImage);
    Corpus first;
    first.names.push_back(corpus.names[0]);
    first.images.push_back(corpus.images[0]);
    auto rs = train(first, single);
    auto sc = compress_image(first.images[0], rs.model, 1);
    row.single_bpp = container_bpp(sc);
    return row;
}

int cmd_ablate(const std::string& corpus_path, const std::string& out_dir,
               const std::string& variants_csv, const FlagSet& flags) {
    Options opt = flags.resolve();
    opt.log_resolved(std::cout);

    std::set<std::string> variants;
    std::stringstream ss(variants_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        require(item == "cnn_sampling" || item == "no_qcm" || item == "rate_sweep",
                ErrorKind::Usage, "unknown ablation variant: " + item);
        variants.insert(item);
    }

    Corpus corpus = load_corpus(corpus_path);
    fs::create_directories(out_dir);

    std::vector<AblateRow> rows;
    rows.push_back(run_ablate_variant("gmsm_qcm", corpus, opt.train, out_dir));
    if (variants.count("no_qcm")) {
        TrainConfig v = opt.train;
        v.codec.use_qcm = false;
        rows.push_back(run_ablate_variant("gmsm_noqcm", corpus, v, out_dir));
    }
    if (variants.count("cnn_sampling")) {
        TrainConfig v = opt.train;
        v.codec.sampling = Sampling::PlainCnn;
        rows.push_back(run_ablate_variant("cnn_qcm", corpus, v, out_dir));
    }
    if (variants.count("no_qcm") && variants.count("cnn_sampling")) {
        TrainConfig v = opt.train;
        v.codec.use_qcm = false;
        v.codec.sampling = Sampling::PlainCnn;
        rows.push_back(run_ablate_variant("cnn_noqcm", corpus, v, out_dir));
    }
    for (const auto& r : rows)
        std::cout << "ablate\t" << r.label << "\t" << r.dataset_bpp << "\t" << r.single_bpp
                  << "\t" << r.enc_ms << "\t" << r.dec_ms << "\n";

    if (variants.count("rate_sweep")) {
        for (double rate : {0.05, 0.10, 0.15, 0.20, 0.25}) {
            TrainConfig v = opt.train;
            v.codec.set_rate(rate);
            std::ostringstream label;
            label << "rate_" << rate;
            AblateRow row = run_ablate_variant(label.str(), corpus, v, out_dir);
            std::cout << "rate_sweep\t" << rate << "\t" << row.dataset_bpp << "\t"
                      << row.single_bpp << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lvpnet: learned lossless grayscale image codec"};
    app.require_subcommand(1);

    FlagSet train_flags, eval_flags, ablate_flags;
    std::string corpus_path, model_path, input_path, output_path, features_dir;
    std::string variants = "cnn_sampling,no_qcm,rate_sweep";

    auto* train_cmd = app.add_subcommand("train", "train a model on a corpus");
    train_cmd->add_option("corpus", corpus_path, "corpus directory or .lvpc file")->required();
    train_cmd->add_option("model", model_path, "output model path (.lvpm)")->required();
    train_flags.attach(train_cmd);

    auto* compress_cmd = app.add_subcommand("compress", "compress one PGM image");
    compress_cmd->add_option("model", model_path, "model file")->required();
    compress_cmd->add_option("input", input_path, "input .pgm")->required();
    compress_cmd->add_option("output", output_path, "output .lvp")->required();
    compress_cmd->add_option("--dump-features", features_dir,
                             "write raw feature planes to this directory");

    auto* decompress_cmd = app.add_subcommand("decompress", "decompress one .lvp container");
    decompress_cmd->add_option("model", model_path, "model file")->required();
    decompress_cmd->add_option("input", input_path, "input .lvp")->required();
    decompress_cmd->add_option("output", output_path, "output .pgm")->required();

    auto* verify_cmd = app.add_subcommand("verify", "round-trip an entire corpus");
    verify_cmd->add_option("model", model_path, "model file")->required();
    verify_cmd->add_option("corpus", corpus_path, "corpus directory or .lvpc file")->required();

    auto* eval_cmd = app.add_subcommand("eval", "bpp and timing report for a corpus");
    eval_cmd->add_option("model", model_path, "model file")->required();
    eval_cmd->add_option("corpus", corpus_path, "corpus directory or .lvpc file")->required();
    eval_flags.attach(eval_cmd);

    auto* ablate_cmd = app.add_subcommand("ablate", "train and compare ablation variants");
    ablate_cmd->add_option("corpus", corpus_path, "corpus directory or .lvpc file")->required();
    ablate_cmd->add_option("outdir", output_path, "directory for variant models")->required();
    ablate_cmd->add_option("--variants", variants, "subset of cnn_sampling,no_qcm,rate_sweep");
    ablate_flags.attach(ablate_cmd);

    try {
        app.parse(argc, argv);
        if (*train_cmd) return cmd_train(corpus_path, model_path, train_flags);
        if (*compress_cmd) return cmd_compress(model_path, input_path, output_path, features_dir);
        if (*decompress_cmd) return cmd_decompress(model_path, input_path, output_path);
        if (*verify_cmd) return cmd_verify(model_path, corpus_path);
        if (*eval_cmd) return cmd_eval(model_path, corpus_path, eval_flags);
        if (*ablate_cmd) return cmd_ablate(corpus_path, output_path, variants, ablate_flags);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help path
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
