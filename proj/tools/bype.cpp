// Command-line surface for the pseudocoreset VAE laboratory.
//
// Subcommands: train | eval | generate | augment | coreset-export | report.
// Configuration is a flat `key = value` file plus repeatable --set overrides;
// the resolved configuration is echoed into the run directory so any run can
// be reproduced from its own echo. Exit codes: 0 success, 1 usage error,
// 2 numeric failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "bype/checkpoint.hpp"
#include "bype/config.hpp"
#include "bype/data.hpp"
#include "bype/evalsuite.hpp"
#include "bype/metrics.hpp"
#include "bype/pgm.hpp"
#include "bype/sampling.hpp"
#include "bype/trainer.hpp"

namespace fs = std::filesystem;
using namespace bype;

namespace {

std::string runs_root() {
    const char* env = std::getenv("BYPE_RUNS_DIR");
    return env != nullptr && *env != '\0' ? env : "runs";
}

std::string run_dir(const cfg::Config& c) {
    return runs_root() + "/" + c.get("run.name");
}

data::Dataset build_dataset(const cfg::Config& c) {
    const std::string kind = c.get("dataset.kind");
    data::Dataset ds;
    if (kind == "pinwheel") {
        Rng rng(Rng::derive(c.get_u64("seed"), 77));
        ds = data::make_pinwheel(static_cast<std::size_t>(c.get_long("dataset.classes")),
                                 static_cast<std::size_t>(c.get_long("dataset.per_class")),
                                 c.get_double("dataset.noise"), rng);
    } else if (kind == "idx") {
        ds = data::load_idx(c.get("dataset.images"), c.get("dataset.labels"));
    } else if (kind == "cifar") {
        ds = data::load_cifar(c.get_list("dataset.cifar"));
    } else if (kind == "uniform") {
        Rng rng(Rng::derive(c.get_u64("seed"), 78));
        const auto n = static_cast<std::size_t>(c.get_long("dataset.count"));
        const auto d = static_cast<std::size_t>(c.get_long("dataset.dim"));
        ds.name = "uniform";
        ds.X = Tensor({n, d});
        for (std::size_t i = 0; i < ds.X.numel(); ++i) ds.X[i] = rng.uniform();
    } else {
        throw UsageError("unknown dataset.kind: " + kind);
    }
    const auto limit = static_cast<std::size_t>(c.get_long("dataset.limit"));
    return data::take(ds, limit);
}

data::Splits build_splits(const cfg::Config& c, const data::Dataset& ds) {
    return data::split(ds,
                       {c.get_double("split.train"), c.get_double("split.val"),
                        c.get_double("split.test")},
                       Rng::derive(c.get_u64("seed"), 99));
}

model::VaeSpec vae_spec_from(const cfg::Config& c, std::size_t d) {
    model::VaeSpec s;
    s.d = d;
    s.d_z = static_cast<std::size_t>(c.get_long("model.d_z"));
    s.hidden = static_cast<std::size_t>(c.get_long("model.hidden"));
    s.n_hidden = static_cast<std::size_t>(c.get_long("model.layers"));
    s.act = model::act_from_string(c.get("model.activation"));
    s.dec_out = model::out_act_from_string(c.get("model.dec_out"));
    return s;
}

train::RunConfig run_config_from(const cfg::Config& c, std::size_t d) {
    train::RunConfig r;
    r.epochs = static_cast<std::size_t>(c.get_long("train.epochs"));
    r.batch = static_cast<std::size_t>(c.get_long("train.batch"));
    r.lr = c.get_double("train.lr");
    r.warmup_epochs = static_cast<std::size_t>(c.get_long("train.warmup_epochs"));
    r.patience = static_cast<std::size_t>(c.get_long("train.patience"));
    r.prior = priors::kind_from_string(c.get("prior.kind"));
    r.vamp_components = static_cast<std::size_t>(c.get_long("prior.components"));
    r.coreset_M = static_cast<std::size_t>(c.get_long("coreset.M"));
    r.coreset_step = c.get_double("coreset.step");
    r.coreset_S = static_cast<std::size_t>(c.get_long("coreset.S"));
    r.coreset_interval = static_cast<std::size_t>(c.get_long("coreset.k"));
    r.coreset_steps_per_update =
        static_cast<std::size_t>(c.get_long("coreset.steps_per_update"));
    r.coreset_step_decay = c.get_bool("coreset.step_decay");
    r.model = vae_spec_from(c, d);
    r.seed = c.get_u64("seed");
    r.checkpoint_dir = run_dir(c) + "/checkpoints";
    return r;
}

std::string checkpoint_path(const cfg::Config& c) {
    const std::string explicit_path = c.get("eval.checkpoint");
    return explicit_path.empty() ? run_dir(c) + "/checkpoints/best.ckpt"
                                 : explicit_path;
}

struct LoadedModel {
    model::VaeParams params;
    priors::PriorSpec prior;
};

LoadedModel load_model(const cfg::Config& c, const data::Splits& splits) {
    const std::string path = checkpoint_path(c);
    if (!fs::exists(path))
        throw UsageError("checkpoint not found: " + path);
    auto entries = model::load_checkpoint(path);

    Rng dummy(1);
    model::VaeParams params =
        model::VaeParams::init(vae_spec_from(c, splits.train.X.cols()), dummy);
    params.for_each_param([&entries, &path](const std::string& name, Tensor& t) {
        const auto it = entries.find(name);
        if (it == entries.end())
            throw FormatError("checkpoint " + path + " is missing " + name);
        if (!it->second.same_shape(t))
            throw FormatError("checkpoint " + path + " has wrong shape for " + name);
        t = it->second;
    });

    priors::PriorSpec spec;
    switch (priors::kind_from_string(c.get("prior.kind"))) {
    case priors::Kind::StandardGaussian:
        spec = priors::PriorSpec::gaussian();
        break;
    case priors::Kind::Vamp: {
        const auto it = entries.find("vamp.pseudo_inputs");
        if (it == entries.end())
            throw FormatError("checkpoint " + path + " is missing vamp.pseudo_inputs");
        spec = priors::PriorSpec::vamp(it->second,
                                       static_cast<double>(splits.train.N()));
        break;
    }
    case priors::Kind::Exemplar:
        spec = priors::PriorSpec::exemplar(splits.train.X);
        break;
    case priors::Kind::ByPE: {
        const auto u = entries.find("coreset.U");
        const auto w = entries.find("coreset.w");
        if (u == entries.end() || w == entries.end())
            throw FormatError("checkpoint " + path + " is missing coreset.U/coreset.w");
        coreset::Pseudocoreset core;
        core.U = u->second;
        core.w = w->second;
        const auto n = entries.find("coreset.n_mass");
        core.N = n != entries.end() ? n->second[0]
                                    : static_cast<double>(splits.train.N());
        spec = priors::PriorSpec::bype(std::move(core));
        break;
    }
    }
    return {std::move(params), std::move(spec)};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write " + path);
    os << text;
}

std::pair<std::size_t, std::size_t> tile_shape(const cfg::Config& c,
                                               const data::Dataset& ds) {
    if (ds.img_rows > 0 && ds.img_rows * ds.img_cols == ds.d())
        return {ds.img_rows, ds.img_cols};
    (void)c;
    return {1, ds.d()};
}

int cmd_train(const cfg::Config& c) {
    const data::Dataset ds = build_dataset(c);
    const data::Splits splits = build_splits(c, ds);
    const std::string dir = run_dir(c);
    fs::create_directories(dir);
    fs::create_directories(dir + "/checkpoints");
    fs::create_directories(dir + "/samples");
    c.write_resolved(dir + "/config.resolved");

    const train::RunConfig rc = run_config_from(c, ds.d());
    const train::TrainResult result = train::train(rc, splits);
    result.log.write(dir);
    std::cout << "run " << c.get("run.name") << ": best validation elbo "
              << train::format_double(result.best_val_elbo) << " at epoch "
              << result.best_epoch << " (" << result.epochs_run << " epochs run)"
              << (result.diverged ? ", diverged" : "") << "\n";
    return result.diverged ? 2 : 0;
}

int cmd_eval(const cfg::Config& c) {
    const data::Dataset ds = build_dataset(c);
    const data::Splits splits = build_splits(c, ds);
    const LoadedModel m = load_model(c, splits);
    const std::string dir = run_dir(c);
    fs::create_directories(dir);

    const auto K = static_cast<std::size_t>(c.get_long("eval.iwae_k"));
    Rng rng(Rng::derive(c.get_u64("seed"), 12345));
    const double nll =
        evalsuite::density_eval(m.params, m.prior, splits.test.X, K, rng);

    std::vector<evalsuite::ReportRow> rows;
    evalsuite::ReportRow base;
    base.prior = priors::to_string(m.prior.kind);
    base.dataset = ds.name;
    base.seed = c.get("seed");
    base.desk_scale = c.get_bool("eval.desk_scale");
    {
        evalsuite::ReportRow r = base;
        r.metric = "nll";
        r.K = static_cast<long>(K);
        r.value = nll;
        rows.push_back(r);
        std::cout << "iwae-" << K << " nll: " << train::format_double(nll) << "\n";
    }
    if (c.get_bool("eval.knn") && splits.train.labeled() && splits.test.labeled()) {
        std::vector<std::size_t> ks;
        for (const auto& s : c.get_list("eval.knn_ks"))
            ks.push_back(static_cast<std::size_t>(std::stol(s)));
        const auto acc = evalsuite::knn_eval(m.params, splits.train, splits.test, ks);
        for (const auto& [k, a] : acc) {
            evalsuite::ReportRow r = base;
            r.metric = "knn_acc";
            r.K = static_cast<long>(k);
            r.value = a;
            rows.push_back(r);
            std::cout << "knn k=" << k << " accuracy: " << train::format_double(a)
                      << "\n";
        }
    }
    if (c.get_bool("eval.embeddings"))
        evalsuite::dump_embeddings(dir + "/embeddings.csv", m.params, splits.test);

    evalsuite::EvalReport report = evalsuite::build_report({rows});
    evalsuite::write_report_csv(dir + "/report.csv", report);
    return 0;
}

int cmd_generate(const cfg::Config& c, long n_flag) {
    const data::Dataset ds = build_dataset(c);
    const data::Splits splits = build_splits(c, ds);
    const LoadedModel m = load_model(c, splits);
    const std::string dir = run_dir(c) + "/samples";
    fs::create_directories(dir);

    const auto n = static_cast<std::size_t>(n_flag > 0 ? n_flag
                                                       : c.get_long("generate.n"));
    Rng rng(Rng::derive(c.get_u64("seed"), 4242));
    const auto batch = sampling::generate(m.params, m.prior, n, rng);

    const auto [tr, tc] = tile_shape(c, ds);
    io::write_pgm_grid(dir + "/samples.pgm", batch.samples, tr, tc,
                       static_cast<std::size_t>(c.get_long("generate.grid")));

    std::ostringstream os;
    os << "index,provenance";
    for (std::size_t j = 0; j < batch.latents.cols(); ++j) os << ",z_" << j;
    os << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        os << i << ',' << batch.provenance[i];
        for (std::size_t j = 0; j < batch.latents.cols(); ++j)
            os << ',' << train::format_double(batch.latents.at(i, j));
        os << "\n";
    }
    write_text(dir + "/provenance.csv", os.str());
    std::cout << "wrote " << n << " samples to " << dir << "\n";
    return 0;
}

int cmd_augment(const cfg::Config& c) {
    const data::Dataset ds = build_dataset(c);
    const data::Splits splits = build_splits(c, ds);
    const LoadedModel m = load_model(c, splits);

    evalsuite::AugmentOptions opt;
    opt.lambda = c.get_double("augment.lambda");
    opt.way = sampling::way_from_string(c.get("augment.way"));
    opt.epochs = static_cast<std::size_t>(c.get_long("augment.epochs"));
    opt.batch = static_cast<std::size_t>(c.get_long("augment.batch"));
    opt.hidden = static_cast<std::size_t>(c.get_long("augment.hidden"));
    opt.lr = c.get_double("augment.lr");

    Rng rng(Rng::derive(c.get_u64("seed"), 31337));
    const double err =
        evalsuite::augmentation_train(m.params, splits.train, splits.test, opt, rng);
    std::cout << "augmentation test error (lambda="
              << train::format_double(opt.lambda) << ", way=" << c.get("augment.way")
              << "): " << train::format_double(err) << "\n";
    return 0;
}

int cmd_coreset_export(const cfg::Config& c) {
    const data::Dataset ds = build_dataset(c);
    const data::Splits splits = build_splits(c, ds);
    const LoadedModel m = load_model(c, splits);
    if (m.prior.kind != priors::Kind::ByPE)
        throw UsageError("coreset-export requires prior.kind = bype");
    const std::string dir = run_dir(c);
    fs::create_directories(dir);

    const auto [tr, tc] = tile_shape(c, ds);
    io::write_pgm_grid(dir + "/coreset.pgm", m.prior.core.U, tr, tc,
                       static_cast<std::size_t>(c.get_long("generate.grid")));
    model::save_checkpoint(dir + "/coreset.ckpt",
                           {{"coreset.U", m.prior.core.U},
                            {"coreset.w", m.prior.core.w},
                            {"coreset.n_mass", Tensor::scalar(m.prior.core.N)}});
    std::cout << "exported coreset (M=" << m.prior.core.M() << ") to " << dir
              << "\n";
    return 0;
}

int cmd_report(const cfg::Config& c) {
    const auto names = c.get_list("report.runs");
    if (names.empty())
        throw UsageError("report.runs must list at least one run name");
    std::vector<std::vector<evalsuite::ReportRow>> runs;
    for (const auto& name : names) {
        const std::string path = runs_root() + "/" + name + "/report.csv";
        std::vector<evalsuite::ReportRow> rows;
        // keep only per-run rows; aggregates are recomputed
        for (auto& r : evalsuite::read_report_csv(path))
            if (r.seed != "mean" && r.seed != "std") rows.push_back(r);
        runs.push_back(std::move(rows));
    }
    const auto report = evalsuite::build_report(runs);
    evalsuite::write_report_csv(c.get("report.out"), report);
    std::cout << "wrote " << c.get("report.out") << " from " << names.size()
              << " runs\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudocoreset-prior VAE laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    long n_flag = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file");
        sub->add_option("--set", overrides, "override: key=value")
            ->take_all()
            ->allow_extra_args(false);
    };
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    CLI::App* eval_cmd = app.add_subcommand("eval", "density / knn evaluation");
    CLI::App* gen_cmd = app.add_subcommand("generate", "draw samples");
    CLI::App* aug_cmd = app.add_subcommand("augment", "generative data augmentation");
    CLI::App* core_cmd = app.add_subcommand("coreset-export", "export the coreset");
    CLI::App* report_cmd = app.add_subcommand("report", "aggregate run reports");
    for (CLI::App* sub : {train_cmd, eval_cmd, gen_cmd, aug_cmd, core_cmd, report_cmd})
        add_common(sub);
    gen_cmd->add_option("--n", n_flag, "number of samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 1;
    }

    try {
        cfg::Config c = cfg::Config::defaults();
        if (!config_path.empty()) c.load_file(config_path);
        for (const auto& o : overrides) c.apply_override(o);

        if (*train_cmd) return cmd_train(c);
        if (*eval_cmd) return cmd_eval(c);
        if (*gen_cmd) return cmd_generate(c, n_flag);
        if (*aug_cmd) return cmd_augment(c);
        if (*core_cmd) return cmd_coreset_export(c);
        if (*report_cmd) return cmd_report(c);
        std::cerr << app.help() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
