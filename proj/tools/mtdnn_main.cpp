// Command-line entry points: train, finetune, eval, sample, gradcheck, synth.
// Exit codes: 0 success, 1 check failure, 2 usage/validation error, 3 numeric
// abort. Every nonzero exit prints a diagnostic to stderr.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtdnn/mtdnn.hpp"

namespace fs = std::filesystem;

namespace {

using namespace mtdnn;

// Data and vocabulary paths in a config resolve relative to the config file.
std::string resolve_path(const std::string& base_dir, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) return path;
    return (fs::path(base_dir) / path).string();
}

struct LoadedRun {
    RunConfig rc;
    std::string base_dir;
    Vocabulary vocab;
};

LoadedRun load_run(const std::string& config_path) {
    RunConfig rc = load_run_config(config_path);
    std::string base = fs::path(config_path).parent_path().string();
    Vocabulary vocab = Vocabulary::load(resolve_path(base, rc.vocab_path));
    return {std::move(rc), std::move(base), std::move(vocab)};
}

DatasetSplit load_split(const LoadedRun& run, const TaskSpec& spec, Split which) {
    const std::string* path = nullptr;
    const char* label = nullptr;
    switch (which) {
        case Split::train: path = &spec.train_path; label = "train"; break;
        case Split::dev: path = &spec.dev_path; label = "dev"; break;
        case Split::test: path = &spec.test_path; label = "test"; break;
    }
    if (path->empty()) {
        throw ConfigError("task " + spec.name + ": no " + label + " file configured");
    }
    return load_tsv(resolve_path(run.base_dir, *path), spec, which);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_log(const std::string& out_dir) {
    const std::string path = (fs::path(out_dir) / "train_log.tsv").string();
    std::ofstream log(path);
    if (!log) throw InputError("cannot write " + path);
    return log;
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// train / finetune / eval
// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
    LoadedRun run = load_run(config_path);
    run.rc.training.seed = seed;
    Rng init_rng = Rng(seed).split(RngStream::init);
    Model model = Model::init(run.rc.model, run.vocab, run.rc.tasks, init_rng);
    std::vector<DatasetSplit> splits;
    for (const TaskSpec& t : run.rc.tasks) splits.push_back(load_split(run, t, Split::train));
    ensure_dir(out_dir);
    Trainer trainer(model, splits, run.rc.training);
    std::ofstream log = open_log(out_dir);
    TrainResult result = trainer.run(&log, out_dir);
    std::cout << "trained " << result.total_steps << " step(s) over " << model.tasks.size()
              << " task(s); checkpoints and log in " << out_dir << "\n";
    return 0;
}

int cmd_finetune(const std::string& config_path, const std::string& init_path,
                 const std::string& task_name, std::uint64_t seed, const std::string& out_dir) {
    LoadedRun run = load_run(config_path);
    const TaskSpec& spec = run.rc.task(task_name);
    NamedTensors loaded = load_checkpoint(init_path);
    Rng init_rng = Rng(seed).split(RngStream::init);
    Model model = fine_tune_init(loaded, run.rc.model, run.vocab, spec, init_rng);
    std::vector<DatasetSplit> splits = {load_split(run, spec, Split::train)};
    run.rc.training.seed = seed;
    ensure_dir(out_dir);
    Trainer trainer(model, splits, run.rc.training);
    std::ofstream log = open_log(out_dir);
    TrainResult result = trainer.run(&log, out_dir);
    std::cout << "fine-tuned task " << task_name << " for " << result.total_steps
              << " step(s); checkpoints and log in " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path,
             const std::string& split_name, const std::string& out_dir) {
    const Split which = split_name == "dev" ? Split::dev : Split::test;
    LoadedRun run = load_run(config_path);
    Rng init_rng = Rng(0).split(RngStream::init);
    Model model = Model::init(run.rc.model, run.vocab, run.rc.tasks, init_rng);
    NamedTensors loaded = load_checkpoint(ckpt_path);
    assign_params(loaded, model.named_params());
    ensure_dir(out_dir);
    const std::string tsv_path = (fs::path(out_dir) / "eval.tsv").string();
    std::ofstream tsv(tsv_path);
    if (!tsv) throw InputError("cannot write " + tsv_path);
    for (std::size_t ti = 0; ti < model.tasks.size(); ++ti) {
        DatasetSplit ds = load_split(run, model.tasks[ti], which);
        EvalReport report = evaluate_task(model, ti, ds);
        for (const auto& [metric, value] : report.metrics) {
            const std::string line =
                report.task_name + "\t" + split_name + "\t" + metric + "\t" + fmt_g17(value);
            std::cout << line << "\n";
            tsv << line << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sample: uniform subsample of a data file's lines at a fixed fraction
// ---------------------------------------------------------------------------

int cmd_sample(const std::string& input, double fraction, std::uint64_t seed,
               const std::string& output) {
    std::ifstream in(input);
    if (!in) throw InputError("sample: cannot open " + input);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    const std::size_t k = subsample_size(lines.size(), fraction);
    if (k == 0) {
        throw ValidationError("sample: " + std::to_string(lines.size()) + " line(s) at fraction " +
                              fmt_g17(fraction) + " leaves an empty file");
    }
    std::vector<std::size_t> idx(lines.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = Rng(seed).split(RngStream::sampling);
    rng.shuffle(idx);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    std::ofstream out(output);
    if (!out) throw InputError("sample: cannot write " + output);
    for (std::size_t i : idx) out << lines[i] << '\n';
    std::cout << "sampled " << k << " of " << lines.size() << " line(s) into " << output << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck: finite-difference suite over ops, encoder, heads and losses
// ---------------------------------------------------------------------------

struct CheckCase {
    std::string name;
    std::vector<Tensor> params;
    std::function<Tensor(Graph&)> fn;
};

// Fixed small operands; values keep abs() away from 0 and log arguments
// positive so central differences stay well defined.
std::vector<CheckCase> op_cases() {
    Tensor a = Tensor::from({3}, {0.3, -0.7, 1.2}, true);
    Tensor b = Tensor::from({3}, {-0.4, 0.9, 0.5}, true);
    Tensor pos = Tensor::from({3}, {0.3, 1.2, 0.5}, true);
    Tensor A = Tensor::from({2, 3}, {0.2, -0.5, 0.8, 1.1, -0.3, 0.4}, true);
    Tensor B = Tensor::from({3, 2}, {0.6, -0.2, 0.15, 0.9, -0.7, 0.35}, true);
    Tensor C = Tensor::from({2, 3}, {0.9, -0.1, 0.3, -0.6, 0.2, 1.0}, false);
    Tensor gain = Tensor::from({3}, {1.1, 0.9, 1.3}, true);
    Tensor bias = Tensor::from({3}, {0.1, -0.2, 0.05}, true);
    Tensor table = Tensor::from({4, 3},
                                {0.2, -0.1, 0.4, 0.7, 0.3, -0.5, -0.2, 0.6, 0.1, 0.5, -0.4, 0.8},
                                true);
    const std::vector<std::size_t> ids = {0, 2, 3, 2};
    Tensor lw = Tensor::from({3, 2}, {0.4, -0.6, 0.2, 0.8, -0.3, 0.5}, true);
    Tensor lb = Tensor::from({2}, {0.1, -0.2}, true);

    std::vector<CheckCase> cases;
    auto add_case = [&](std::string name, std::vector<Tensor> params,
                        std::function<Tensor(Graph&)> fn) {
        cases.push_back({std::move(name), std::move(params), std::move(fn)});
    };
    add_case("op.add", {a, b}, [=](Graph& g) { return sum(g, add(g, a, b)); });
    add_case("op.sub", {a, b}, [=](Graph& g) { return sum(g, mul(g, sub(g, a, b), b)); });
    add_case("op.mul", {a, b}, [=](Graph& g) { return sum(g, mul(g, a, b)); });
    add_case("op.scale", {a}, [=](Graph& g) { return sum(g, mul(g, scale(g, a, 1.7), a)); });
    add_case("op.abs", {a}, [=](Graph& g) { return sum(g, mul(g, abs(g, a), b)); });
    add_case("op.one_minus", {a},
             [=](Graph& g) { return sum(g, mul(g, one_minus(g, a), b)); });
    add_case("op.sigmoid", {a}, [=](Graph& g) { return sum(g, sigmoid(g, a)); });
    add_case("op.tanh", {a}, [=](Graph& g) { return sum(g, tanh(g, a)); });
    add_case("op.gelu", {a}, [=](Graph& g) { return sum(g, gelu(g, a)); });
    add_case("op.log_clamped", {pos},
             [=](Graph& g) { return sum(g, log_clamped(g, pos, 1e-12)); });
    add_case("op.matmul", {A, B}, [=](Graph& g) { return sum(g, matmul(g, A, B)); });
    add_case("op.transpose", {A},
             [=](Graph& g) { return sum(g, mul(g, transpose(g, A), B)); });
    add_case("op.dot", {a, b}, [=](Graph& g) { return dot(g, a, b); });
    add_case("op.sum", {a}, [=](Graph& g) { return sum(g, a); });
    add_case("op.mean", {A}, [=](Graph& g) { return mean(g, mul(g, A, A)); });
    add_case("op.reshape", {A},
             [=](Graph& g) { return sum(g, mul(g, reshape(g, A, {3, 2}), B)); });
    add_case("op.select", {a}, [=](Graph& g) { return select(g, sigmoid(g, a), 1); });
    add_case("op.slice_rows", {A},
             [=](Graph& g) { return sum(g, sigmoid(g, slice_rows(g, A, 1, 1))); });
    add_case("op.slice_cols", {A},
             [=](Graph& g) { return sum(g, sigmoid(g, slice_cols(g, A, 1, 2))); });
    add_case("op.take_row", {A},
             [=](Graph& g) { return sum(g, mul(g, take_row(g, A, 0), a)); });
    add_case("op.concat", {a, b}, [=](Graph& g) {
        return sum(g, sigmoid(g, concat(g, {a, b}, 0)));
    });
    add_case("op.add_row_broadcast", {A, a}, [=](Graph& g) {
        return sum(g, sigmoid(g, add_row_broadcast(g, A, a)));
    });
    add_case("op.softmax_rows", {A},
             [=](Graph& g) { return sum(g, mul(g, softmax(g, A, 1), C)); });
    add_case("op.softmax_cols", {A},
             [=](Graph& g) { return sum(g, mul(g, softmax(g, A, 0), C)); });
    add_case("op.layer_norm", {A, gain, bias}, [=](Graph& g) {
        return sum(g, mul(g, layer_norm(g, A, gain, bias, 1e-5), C));
    });
    add_case("op.embedding_lookup", {table}, [=](Graph& g) {
        return sum(g, sigmoid(g, embedding_lookup(g, table, ids)));
    });
    add_case("op.linear", {A, lw, lb}, [=](Graph& g) {
        return sum(g, sigmoid(g, linear(g, A, lw, lb)));
    });
    add_case("op.dropout_identity", {a}, [=](Graph& g) {
        Rng r(0);
        return sum(g, mul(g, dropout(g, a, 0.5, false, r), b));
    });
    return cases;
}

// Shared encoder at the config's width/depth/heads; the position table is kept
// short so the finite-difference sweep stays fast.
CheckCase encoder_case(const ModelConfig& cfg) {
    Vocabulary vocab = synthetic_vocab(24);
    Rng rng = Rng(11).split(RngStream::init);
    const std::size_t max_len = 16;
    auto enc = std::make_shared<EncoderParams>(EncoderParams::init(
        vocab.size(), cfg.d, cfg.n_layers, cfg.n_heads, max_len, rng, cfg.ffn_multiplier));
    PackedInput packed =
        pack({5, 9, 7}, std::optional<std::vector<std::size_t>>({8, 6}), vocab, max_len);
    CheckCase c;
    c.name = "encoder.transformer";
    enc->for_each_param("", [&](const std::string&, Tensor& t) { c.params.push_back(t); });
    c.fn = [enc, packed](Graph& g) {
        Rng eval_rng(0);
        Tensor l1 = lexicon_encode(g, packed, *enc);
        Tensor ctx = transformer_encode(g, l1, *enc, false, eval_rng);
        return mean(g, ctx);
    };
    return c;
}

std::vector<CheckCase> head_cases(const ModelConfig& cfg) {
    const std::size_t d = cfg.d;
    Rng rng = Rng(13).split(RngStream::init);
    Tensor x = Tensor::randn({d}, rng, 0.5, true);
    Tensor probe3 = Tensor::randn({3}, rng, 1.0, false);
    std::vector<CheckCase> cases;

    auto cls = std::make_shared<ClassificationHead>(ClassificationHead::init(d, 3, rng));
    CheckCase c1{"head.classification", {x}, nullptr};
    cls->for_each_param("", [&](const std::string&, Tensor& t) { c1.params.push_back(t); });
    c1.fn = [cls, x, probe3](Graph& g) { return dot(g, classify_single(g, x, *cls), probe3); };
    cases.push_back(std::move(c1));

    auto san = std::make_shared<SanHead>(SanHead::init(d, 3, cfg.k_steps, 0.0, rng));
    Tensor m_p = Tensor::randn({4, d}, rng, 0.5, true);
    Tensor m_h = Tensor::randn({3, d}, rng, 0.5, true);
    CheckCase c2{"head.pairwise_multistep", {m_p, m_h}, nullptr};
    san->for_each_param("", [&](const std::string&, Tensor& t) { c2.params.push_back(t); });
    c2.fn = [san, m_p, m_h, probe3](Graph& g) {
        Rng eval_rng(0);
        return dot(g, san_forward(g, m_p, m_h, *san, false, eval_rng), probe3);
    };
    cases.push_back(std::move(c2));

    auto sim = std::make_shared<SimilarityHead>(SimilarityHead::init(d, rng));
    CheckCase c3{"head.similarity", {x, sim->w}, nullptr};
    c3.fn = [sim, x](Graph& g) { return tanh(g, similarity(g, x, *sim)); };
    cases.push_back(std::move(c3));

    auto rank = std::make_shared<RankingHead>(RankingHead::init(d, rng));
    CheckCase c4{"head.relevance", {x, rank->w}, nullptr};
    c4.fn = [rank, x](Graph& g) { return relevance(g, x, *rank); };
    cases.push_back(std::move(c4));
    return cases;
}

std::vector<CheckCase> loss_cases() {
    std::vector<CheckCase> cases;

    Tensor l0 = Tensor::from({3}, {0.4, -0.2, 0.9}, true);
    Tensor l1 = Tensor::from({3}, {-0.8, 0.3, 0.1}, true);
    CheckCase c1{"loss.cross_entropy", {l0, l1}, [=](Graph& g) {
                     std::vector<Tensor> dists = {softmax(g, l0, 0), softmax(g, l1, 0)};
                     return cross_entropy(g, dists, {2, 0}).value;
                 }};
    cases.push_back(std::move(c1));

    Tensor s0 = Tensor::scalar(0.35, true);
    Tensor s1 = Tensor::scalar(-0.6, true);
    CheckCase c2{"loss.mse", {s0, s1}, [=](Graph& g) {
                     std::vector<Tensor> scores = {sigmoid(g, s0), sigmoid(g, s1)};
                     return mse(g, scores, {0.2, 0.8}).value;
                 }};
    cases.push_back(std::move(c2));

    Tensor r0 = Tensor::scalar(0.7, true);
    Tensor r1 = Tensor::scalar(-0.3, true);
    Tensor r2 = Tensor::scalar(0.2, true);
    CheckCase c3{"loss.ranking_nll", {r0, r1, r2}, [=](Graph& g) {
                     RankedGroup q;
                     q.scores = {sigmoid(g, r0), sigmoid(g, r1), sigmoid(g, r2)};
                     q.positive = 0;
                     return ranking_nll(g, {q}, 1.0).value;
                 }};
    cases.push_back(std::move(c3));
    return cases;
}

int cmd_gradcheck(const std::string& config_path, double tol) {
    LoadedRun run = load_run(config_path);
    std::vector<CheckCase> cases = op_cases();
    cases.push_back(encoder_case(run.rc.model));
    for (auto& c : head_cases(run.rc.model)) cases.push_back(std::move(c));
    for (auto& c : loss_cases()) cases.push_back(std::move(c));

    bool all_pass = true;
    std::string first_fail;
    for (const CheckCase& c : cases) {
        GradCheckResult res = grad_check(c.fn, c.params, tol);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-24s\t%.3e\t%s", c.name.c_str(), res.max_rel_err,
                      res.pass ? "PASS" : "FAIL");
        std::cout << buf << "\n";
        if (!res.pass && all_pass) {
            all_pass = false;
            first_fail = c.name + " (worst " + res.worst + ", rel err " +
                         fmt_g17(res.max_rel_err) + ")";
        }
    }
    std::cout << "checked " << cases.size() << " component(s) at tolerance " << tol << "\n";
    if (!all_pass) {
        std::cerr << "gradcheck: " << first_fail << " exceeds tolerance " << tol << "\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// synth: self-contained four-task synthetic bundle (vocab, TSVs, config)
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out_dir, std::uint64_t seed, std::size_t vocab_size,
              std::size_t train_size, std::size_t dev_size) {
    ensure_dir(out_dir);
    Vocabulary vocab = synthetic_vocab(vocab_size);
    vocab.save((fs::path(out_dir) / "vocab.txt").string());
    Rng rng = Rng(seed).split(RngStream::sampling);
    const TaskType kinds[] = {TaskType::single_classification, TaskType::pair_classification,
                              TaskType::regression, TaskType::ranking};
    std::vector<TaskSpec> specs;
    for (TaskType kind : kinds) {
        DatasetSplit train = make_synthetic(kind, train_size, vocab_size, rng);
        DatasetSplit dev = make_synthetic(kind, dev_size, vocab_size, rng);
        TaskSpec spec = synthetic_task_spec(kind, train.task_name);
        spec.train_path = spec.name + "_train.tsv";
        spec.dev_path = spec.name + "_dev.tsv";
        save_tsv((fs::path(out_dir) / spec.train_path).string(), train, spec);
        save_tsv((fs::path(out_dir) / spec.dev_path).string(), dev, spec);
        specs.push_back(std::move(spec));
    }
    const std::string cfg_path = (fs::path(out_dir) / "run.cfg").string();
    std::ofstream cfg(cfg_path);
    if (!cfg) throw InputError("synth: cannot write " + cfg_path);
    cfg << "# generated synthetic four-task bundle\n"
        << "[model]\n"
        << "d = 32\nn_layers = 2\nn_heads = 2\nk_steps = 5\nmax_len = 64\n"
        << "vocab = vocab.txt\n\n"
        << "[training]\n"
        << "lr_peak = 0.0005\nbatch_size = 8\nepochs = 2\nwarmup_fraction = 0.1\n"
        << "clip_norm = 1.0\n";
    for (const TaskSpec& spec : specs) {
        cfg << "\n[task " << spec.name << "]\n"
            << "type = " << task_type_name(spec.type) << "\n";
        if (!spec.labels.empty()) {
            cfg << "labels = ";
            for (std::size_t i = 0; i < spec.labels.size(); ++i) {
                cfg << (i ? "," : "") << spec.labels[i];
            }
            cfg << "\n";
        }
        cfg << "dropout = 0.1\n"
            << "train = " << spec.train_path << "\n"
            << "dev = " << spec.dev_path << "\n"
            << "metrics = ";
        for (std::size_t i = 0; i < spec.metrics.size(); ++i) {
            cfg << (i ? "," : "") << spec.metrics[i];
        }
        cfg << "\n";
    }
    cfg.close();
    std::cout << "wrote vocabulary, " << specs.size() << " task(s) x train/dev TSVs and run.cfg in "
              << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-task text encoder: training, fine-tuning, evaluation and checks"};
    app.require_subcommand(1);

    std::string config_path, out_dir, init_path, task_name, ckpt_path, split_name = "dev";
    std::string input_path, output_path;
    std::uint64_t seed = 0;
    double fraction = 1.0, tol = 1e-4;
    std::size_t vocab_size = 100, train_size = 64, dev_size = 16;

    CLI::App* train = app.add_subcommand("train", "train all configured tasks jointly");
    train->add_option("--config", config_path, "run config file")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "random seed (default 0)");
    train->add_option("--out", out_dir, "output directory")->required();

    CLI::App* finetune =
        app.add_subcommand("finetune", "adapt a trained encoder to one configured task");
    finetune->add_option("--config", config_path, "run config file")
        ->required()
        ->check(CLI::ExistingFile);
    finetune->add_option("--init", init_path, "checkpoint providing the encoder")->required();
    finetune->add_option("--task", task_name, "task name from the config")->required();
    finetune->add_option("--seed", seed, "random seed (default 0)");
    finetune->add_option("--out", out_dir, "output directory")->required();

    CLI::App* eval = app.add_subcommand("eval", "report configured metrics for every task");
    eval->add_option("--config", config_path, "run config file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--checkpoint", ckpt_path, "checkpoint to evaluate")->required();
    eval->add_option("--split", split_name, "dev or test (default dev)")
        ->check(CLI::IsMember({"dev", "test"}));
    eval->add_option("--out", out_dir, "output directory for eval.tsv")->required();

    CLI::App* sample = app.add_subcommand("sample", "subsample a data file's lines");
    sample->add_option("--input", input_path, "input file")->required()->check(CLI::ExistingFile);
    sample->add_option("--fraction", fraction, "one of 0.001, 0.01, 0.1, 1.0")->required();
    sample->add_option("--seed", seed, "random seed (default 0)");
    sample->add_option("--output", output_path, "output file")->required();

    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference gradient suite at the config's sizes");
    gradcheck->add_option("--config", config_path, "run config file")
        ->required()
        ->check(CLI::ExistingFile);
    gradcheck->add_option("--tol", tol, "max relative error (default 1e-4)");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic four-task bundle");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--seed", seed, "random seed (default 0)");
    synth->add_option("--vocab-size", vocab_size, "vocabulary size (default 100)");
    synth->add_option("--train-size", train_size, "examples per training split (default 64)");
    synth->add_option("--dev-size", dev_size, "examples per dev split (default 16)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) return cmd_train(config_path, seed, out_dir);
        if (finetune->parsed()) return cmd_finetune(config_path, init_path, task_name, seed, out_dir);
        if (eval->parsed()) return cmd_eval(config_path, ckpt_path, split_name, out_dir);
        if (sample->parsed()) return cmd_sample(input_path, fraction, seed, output_path);
        if (gradcheck->parsed()) return cmd_gradcheck(config_path, tol);
        if (synth->parsed()) return cmd_synth(out_dir, seed, vocab_size, train_size, dev_size);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
