// Command-line harness: synthetic data generation, training, equivariance
// audit and evaluation, all reproducible from a single root seed.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "egn/audit.hpp"
#include "egn/compare.hpp"
#include "egn/errors.hpp"
#include "egn/rng.hpp"
#include "egn/serialize.hpp"
#include "egn/synthetic.hpp"
#include "egn/train.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    std::string task = "invariant_energy";
    long n_nodes = 5;
    long dim = 2;
    double noise = 0.0;
    long count = 64;
    std::uint64_t seed = 0;
    std::string out = ".";
};

egn::SyntheticTask make_task(const CommonOpts& o, std::uint64_t seed) {
    egn::SyntheticTask task;
    task.kind = egn::task_from_name(o.task);
    task.node_count = o.n_nodes;
    task.coord_dim = o.dim;
    task.noise = o.noise;
    task.seed = seed;
    return task;
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw egn::ValidationError("cannot open '" + path.string() + "' for writing");
    }
    f << content;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

int run_gen(const CommonOpts& o) {
    const egn::SyntheticTask task = make_task(o, o.seed);
    const auto samples = egn::gen_dataset(task, o.count);
    const fs::path dir = prepare_out_dir(o.out);
    egn::write_json_file((dir / "dataset.json").string(), egn::dataset_to_json(task, samples));
    std::cout << "wrote " << (dir / "dataset.json").string() << " (" << samples.size()
              << " samples)" << std::endl;
    return 0;
}

int run_train(const CommonOpts& o, long layers, long hidden, long epochs, double lr, long batch,
              const std::string& optimizer) {
    const egn::Rng root(o.seed);
    egn::SyntheticTask train_task = make_task(o, root.child("train-data"));
    egn::SyntheticTask eval_task = make_task(o, root.child("eval-data"));
    const auto train_data = egn::gen_dataset(train_task, o.count);
    const auto eval_data = egn::gen_dataset(eval_task, std::max<long>(1, o.count / 4));

    egn::EgnModel model =
        egn::make_model(train_task.kind, egn::BlockSizes{train_task.n_e, train_task.n_v,
                                                         train_task.n_u},
                        train_task.coord_dim, layers, hidden, egn::Aggregators{},
                        root.child("init"));

    egn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.seed = root.child("train");
    if (optimizer == "sgd") {
        cfg.optimizer = egn::OptimizerKind::kSgd;
    } else if (optimizer == "adam") {
        cfg.optimizer = egn::OptimizerKind::kAdam;
    } else {
        throw egn::ValidationError("unknown optimizer '" + optimizer + "'");
    }

    const egn::TrainResult result = egn::train(model, train_data, eval_data, cfg);

    const fs::path dir = prepare_out_dir(o.out);
    std::string metrics = "epoch,train_loss,eval_loss\n";
    std::string curve = "epoch,loss\n";
    for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
        metrics += std::to_string(e) + "," + format_double(result.train_loss[e]) + "," +
                   format_double(result.eval_loss[e]) + "\n";
        curve += std::to_string(e) + "," + format_double(result.train_loss[e]) + "\n";
    }
    write_text_file(dir / "metrics.csv", metrics);
    write_text_file(dir / "loss_curve.csv", curve);
    egn::write_json_file((dir / "ckpt.json").string(), egn::model_to_json(model));
    std::cout << "final train loss " << result.train_loss.back() << ", eval loss "
              << result.eval_loss.back() << "; checkpoint at "
              << (dir / "ckpt.json").string() << std::endl;
    return 0;
}

int run_audit(const std::string& ckpt, long samples, std::uint64_t seed, const std::string& out) {
    const egn::EgnModel model = egn::model_from_json(egn::read_json_file(ckpt));
    const egn::AuditReport report = egn::audit(model, static_cast<int>(samples), seed);
    const fs::path dir = prepare_out_dir(out);
    egn::write_json_file((dir / "audit.json").string(), egn::audit_to_json(report));
    for (const auto& [name, check] : report.checks) {
        std::cout << (check.pass ? "pass " : "FAIL ") << name << ": max_violation "
                  << format_double(check.max_violation) << " (tolerance "
                  << format_double(check.tolerance) << ", " << check.samples << " samples)"
                  << std::endl;
    }
    return report.all_pass() ? 0 : 2;
}

int run_compare(const CommonOpts& o, long layers, long hidden, long epochs, double lr,
                long batch, const std::string& sizes_csv) {
    egn::CompareConfig cfg;
    cfg.node_count = o.n_nodes;
    cfg.coord_dim = o.dim;
    cfg.block_count = layers;
    cfg.hidden_width = hidden;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.eval_count = std::max<long>(1, o.count / 4);
    cfg.seed = o.seed;
    cfg.train_sizes.clear();
    std::stringstream ss(sizes_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        cfg.train_sizes.push_back(std::stol(item));
    }

    const auto rows = egn::run_comparison(cfg);
    const fs::path dir = prepare_out_dir(o.out);
    std::string csv = "train_size,model,train_loss,eval_loss\n";
    for (const auto& r : rows) {
        csv += std::to_string(r.train_size) + "," + r.model + "," + format_double(r.train_loss) +
               "," + format_double(r.eval_loss) + "\n";
    }
    write_text_file(dir / "compare.csv", csv);
    for (const auto& r : rows) {
        std::cout << r.model << " @ " << r.train_size << " samples: eval mse " << r.eval_loss
                  << std::endl;
    }
    return 0;
}

int run_eval(const CommonOpts& o, const std::string& ckpt, const std::string& format) {
    const egn::EgnModel model = egn::model_from_json(egn::read_json_file(ckpt));
    const egn::SyntheticTask task = make_task(o, o.seed);
    if (task.kind != model.task) {
        throw egn::ValidationError("checkpoint was trained for task '" +
                                   egn::task_name(model.task) + "', requested '" + o.task + "'");
    }
    const auto data = egn::gen_dataset(task, o.count);
    const double loss = egn::mean_loss(model, data);
    const fs::path dir = prepare_out_dir(o.out);
    if (format == "csv") {
        write_text_file(dir / "eval.csv",
                        "task,count,mean_mse\n" + o.task + "," + std::to_string(data.size()) +
                            "," + format_double(loss) + "\n");
    } else {
        egn::Json j;
        j["task"] = o.task;
        j["count"] = data.size();
        j["mean_mse"] = loss;
        egn::write_json_file((dir / "eval.json").string(), j);
    }
    std::cout << "mean mse " << loss << " over " << data.size() << " samples" << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"E(n)-equivariant graph network: synthetic tasks, training and audit"};
    app.require_subcommand(1);

    CommonOpts opts;
    long layers = 2, hidden = 32, epochs = 30, batch = 16, samples = 20;
    double lr = 3e-3;
    std::string ckpt, format = "json", optimizer = "adam";

    auto add_task_flags = [&](CLI::App* cmd) {
        cmd->add_option("--task", opts.task, "Task kind: displacement_field | invariant_energy");
        cmd->add_option("--n-nodes", opts.n_nodes, "Nodes per graph");
        cmd->add_option("--dim", opts.dim, "Coordinate dimension n_x");
        cmd->add_option("--noise", opts.noise, "Coordinate noise level");
        cmd->add_option("--count", opts.count, "Number of samples");
    };

    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    add_task_flags(gen);
    gen->add_option("--seed", opts.seed, "Root seed");
    gen->add_option("--out", opts.out, "Output directory");

    CLI::App* train = app.add_subcommand("train", "Train a model on a synthetic task");
    add_task_flags(train);
    train->add_option("--layers", layers, "Number of stacked blocks");
    train->add_option("--hidden", hidden, "Hidden width of each update net");
    train->add_option("--epochs", epochs, "Training epochs");
    train->add_option("--lr", lr, "Learning rate");
    train->add_option("--batch", batch, "Batch size");
    train->add_option("--optimizer", optimizer, "sgd | adam");
    train->add_option("--seed", opts.seed, "Root seed");
    train->add_option("--out", opts.out, "Output directory");

    CLI::App* audit = app.add_subcommand("audit", "Run the equivariance audit on a checkpoint");
    audit->add_option("--ckpt", ckpt, "Model checkpoint path")->required();
    audit->add_option("--samples", samples, "Samples per audit check");
    audit->add_option("--seed", opts.seed, "Audit seed");
    audit->add_option("--out", opts.out, "Output directory");

    std::string sizes_csv = "16,64,256";
    CLI::App* compare = app.add_subcommand(
        "compare", "Equivariant model vs a coordinate-as-features baseline (no threshold)");
    compare->add_option("--n-nodes", opts.n_nodes, "Nodes per graph");
    compare->add_option("--dim", opts.dim, "Coordinate dimension n_x");
    compare->add_option("--count", opts.count, "Eval pool size (eval uses count/4)");
    compare->add_option("--sizes", sizes_csv, "Comma-separated training-set sizes");
    compare->add_option("--layers", layers, "Number of stacked blocks");
    compare->add_option("--hidden", hidden, "Hidden width of each update net");
    compare->add_option("--epochs", epochs, "Training epochs");
    compare->add_option("--lr", lr, "Learning rate");
    compare->add_option("--batch", batch, "Batch size");
    compare->add_option("--seed", opts.seed, "Root seed");
    compare->add_option("--out", opts.out, "Output directory");

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on fresh data");
    add_task_flags(eval);
    eval->add_option("--ckpt", ckpt, "Model checkpoint path")->required();
    eval->add_option("--seed", opts.seed, "Data seed");
    eval->add_option("--out", opts.out, "Output directory");
    eval->add_option("--format", format, "Output format: json | csv")
        ->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "Run with --help for usage." << std::endl;
        return 1;
    }

    try {
        if (gen->parsed()) {
            return run_gen(opts);
        }
        if (train->parsed()) {
            return run_train(opts, layers, hidden, epochs, lr, batch, optimizer);
        }
        if (audit->parsed()) {
            return run_audit(ckpt, samples, opts.seed, opts.out);
        }
        if (compare->parsed()) {
            return run_compare(opts, layers, hidden, epochs, lr, batch, sizes_csv);
        }
        if (eval->parsed()) {
            return run_eval(opts, ckpt, format);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 1;
}
