#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bype/evalsuite.hpp"
#include "bype/objective.hpp"
#include "oracles.hpp"

using namespace bype;
using model::VaeParams;
using priors::PriorSpec;

namespace {

VaeParams tiny_vae(std::uint64_t seed, std::size_t d = 2) {
    model::VaeSpec s;
    s.d = d;
    s.d_z = 2;
    s.hidden = 8;
    s.n_hidden = 2;
    Rng rng(seed);
    return VaeParams::init(s, rng);
}

data::Dataset blobs(std::size_t per_class, double gap, std::uint64_t seed) {
    Rng rng(seed);
    data::Dataset ds;
    ds.name = "blobs";
    ds.X = Tensor({2 * per_class, 2});
    ds.labels.resize(2 * per_class);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const int cls = i < per_class ? 0 : 1;
        const double cx = cls == 0 ? 0.3 : 0.3 + gap;
        ds.X.at(i, 0) = std::clamp(cx + 0.05 * rng.normal(), 0.0, 1.0);
        ds.X.at(i, 1) = std::clamp(0.5 + 0.05 * rng.normal(), 0.0, 1.0);
        ds.labels[i] = cls;
    }
    return ds;
}

} // namespace

TEST_CASE("density_eval with K=1 equals the mean negated one-sample ELBO") {
    const VaeParams p = tiny_vae(1);
    const PriorSpec spec = PriorSpec::gaussian();
    Rng xr(2);
    Tensor X({5, 2});
    for (std::size_t i = 0; i < X.numel(); ++i) X[i] = xr.uniform();

    Rng ra(3);
    const double nll = evalsuite::density_eval(p, spec, X, 1, ra);
    // replicate the internal per-row streams to share the eps draws
    Rng rb(3);
    double want = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        Rng row = rb.stream(i);
        Tensor eps({2}, {row.normal(), row.normal()});
        const Tensor x({2}, {X.at(i, 0), X.at(i, 1)});
        want += -objective::elbo(p, spec, x, eps, 1.0).total;
    }
    want /= 5.0;
    CHECK(nll == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("density_eval recovers the exact linear-Gaussian mean NLL") {
    oracles::LinearGaussian lg;
    lg.C = Tensor({3, 2}, {2.0, 0.0, 0.0, 1.5, 0.0, 0.0});
    lg.e = Tensor::row({0.1, -0.2, 0.4});
    lg.obs_var = 0.5;
    VaeParams p = oracles::optimal_linear_vae(lg);
    p.enc_mean.b[1] += 0.25; // mildly suboptimal posterior
    Rng xr(30);
    Tensor X({4, 3});
    for (std::size_t i = 0; i < X.numel(); ++i) X[i] = xr.normal();
    double exact = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        exact += -lg.marginal_logpdf(Tensor({3}, {X.at(i, 0), X.at(i, 1), X.at(i, 2)}));
    exact /= 4.0;
    Rng rng(31);
    const double nll =
        evalsuite::density_eval(p, PriorSpec::gaussian(), X, 2000, rng);
    CHECK(std::fabs(nll - exact) < 0.05);
}

TEST_CASE("density_eval is nonincreasing in K within noise") {
    const VaeParams p = tiny_vae(4);
    const PriorSpec spec = PriorSpec::gaussian();
    Rng xr(5);
    Tensor X({8, 2});
    for (std::size_t i = 0; i < X.numel(); ++i) X[i] = xr.uniform();
    std::vector<double> diffs;
    for (int rep = 0; rep < 60; ++rep) {
        Rng r1(1000 + rep), r2(5000 + rep);
        diffs.push_back(evalsuite::density_eval(p, spec, X, 1, r1) -
                        evalsuite::density_eval(p, spec, X, 32, r2));
    }
    const auto ms = oracles::mean_std(diffs);
    CHECK(ms.mean >= -2.0 * ms.se);
}

TEST_CASE("knn: single training point labels everything") {
    const VaeParams p = tiny_vae(6);
    data::Dataset train = blobs(1, 0.4, 7);
    train.X = slice_rows(train.X, 0, 1);
    train.labels = {4};
    const data::Dataset test = blobs(10, 0.4, 8);
    const auto acc = evalsuite::knn_eval(p, train, test, {1});
    CHECK(acc.at(1) == 0.0); // no test point carries label 4
    data::Dataset test2 = test;
    for (auto& l : test2.labels) l = 4;
    CHECK(evalsuite::knn_eval(p, train, test2, {1}).at(1) == 1.0);
}

TEST_CASE("knn: K=1 on train == test is perfect") {
    const VaeParams p = tiny_vae(9);
    const data::Dataset ds = blobs(20, 0.4, 10);
    CHECK(evalsuite::knn_eval(p, ds, ds, {1}).at(1) == 1.0);
}

TEST_CASE("knn matches the exhaustive oracle at every paper K") {
    const VaeParams p = tiny_vae(11);
    const data::Dataset train = blobs(100, 0.25, 12); // 200 points
    const data::Dataset test = blobs(30, 0.25, 13);
    const Tensor emb_train = model::encode(p, train.X).first;
    const Tensor emb_test = model::encode(p, test.X).first;
    for (std::size_t k : {3, 5, 7, 9, 11, 13, 15}) {
        const auto acc = evalsuite::knn_eval(p, train, test, {k});
        const auto pred =
            oracles::knn_bruteforce(emb_train, train.labels, emb_test, k);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == test.labels[i]) ++correct;
        CHECK(acc.at(k) ==
              doctest::Approx(static_cast<double>(correct) / pred.size())
                  .epsilon(1e-12));
    }
    CHECK_THROWS_AS((void)evalsuite::knn_eval(p, train, test, {300}),
                    bype::UsageError);
}

TEST_CASE("knn is invariant under a rigid rotation of the embeddings") {
    // rotate data fed to a linear encoder; Euclidean distances are preserved
    oracles::LinearGaussian lg;
    lg.C = Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0});
    lg.e = Tensor::row({0.0, 0.0});
    lg.obs_var = 1.0;
    const Tensor A({2, 2}, {1.0, 0.0, 0.0, 1.0});
    const VaeParams ident = oracles::linear_vae(lg, A, Tensor({2}), {0.0, 0.0});

    const data::Dataset train = blobs(40, 0.3, 14);
    const data::Dataset test = blobs(15, 0.3, 15);
    const double th = 0.7;
    auto rotate = [&](const data::Dataset& ds) {
        data::Dataset out = ds;
        for (std::size_t i = 0; i < ds.X.rows(); ++i) {
            const double x = ds.X.at(i, 0), y = ds.X.at(i, 1);
            out.X.at(i, 0) = std::cos(th) * x - std::sin(th) * y;
            out.X.at(i, 1) = std::sin(th) * x + std::cos(th) * y;
        }
        return out;
    };
    for (std::size_t k : {3, 7}) {
        const auto a = evalsuite::knn_eval(ident, train, test, {k});
        const auto b = evalsuite::knn_eval(ident, rotate(train), rotate(test), {k});
        CHECK(a.at(k) == b.at(k));
    }
}

TEST_CASE("augmentation: lambda=1 is byte-equivalent to plain training") {
    const VaeParams vae = tiny_vae(16);
    const data::Dataset train = blobs(40, 0.3, 17);
    const data::Dataset test = blobs(15, 0.3, 18);
    evalsuite::AugmentOptions opt;
    opt.lambda = 1.0;
    opt.epochs = 3;
    opt.hidden = 16;
    opt.batch = 20;

    Rng r1(19), r2(19);
    const double e1 = evalsuite::augmentation_train(vae, train, test, opt, r1);
    const double e2 = evalsuite::augmentation_train(vae, train, test, opt, r2);
    CHECK(e1 == e2);
    // rng state advanced identically: no synthetic draws happened
    CHECK(r1.uniform() == r2.uniform());
}

TEST_CASE("augmentation reaches low error on a separable toy set") {
    const VaeParams vae = tiny_vae(20);
    const data::Dataset train = blobs(100, 0.4, 21);
    const data::Dataset test = blobs(50, 0.4, 22);
    evalsuite::AugmentOptions opt;
    opt.lambda = 1.0;
    opt.epochs = 50;
    opt.hidden = 32;
    Rng rng(23);
    CHECK(evalsuite::augmentation_train(vae, train, test, opt, rng) < 0.02);
}

TEST_CASE("augmentation runs both ways and all lambda endpoints") {
    // quick VAE so the synthetic branch produces sane samples
    const data::Dataset train = blobs(40, 0.4, 24);
    const data::Dataset test = blobs(20, 0.4, 25);
    const VaeParams vae = tiny_vae(26);
    for (auto way : {sampling::Way::Posterior, sampling::Way::Prior}) {
        for (double lambda : {0.0, 0.4, 1.0}) {
            evalsuite::AugmentOptions opt;
            opt.lambda = lambda;
            opt.way = way;
            opt.epochs = 2;
            opt.hidden = 8;
            Rng rng(27);
            const double err =
                evalsuite::augmentation_train(vae, train, test, opt, rng);
            CHECK(err >= 0.0);
            CHECK(err <= 1.0);
        }
    }
}

TEST_CASE("build_report aggregates mean and sample std") {
    auto row = [](const std::string& seed, double v) {
        evalsuite::ReportRow r;
        r.prior = "bype";
        r.dataset = "pinwheel";
        r.seed = seed;
        r.metric = "nll";
        r.K = 256;
        r.value = v;
        r.desk_scale = true;
        return r;
    };
    const auto report =
        evalsuite::build_report({{row("1", 1.0)}, {row("2", 2.0)}, {row("3", 3.0)}});
    double mean = -1, sd = -1;
    for (const auto& r : report.rows) {
        if (r.seed == "mean") mean = r.value;
        if (r.seed == "std") sd = r.value;
    }
    CHECK(mean == 2.0);
    CHECK(sd == 1.0);

    const auto single = evalsuite::build_report({{row("1", 5.0)}});
    for (const auto& r : single.rows)
        if (r.seed == "std") CHECK(r.value == 0.0);

    // inconsistent metric grids are rejected
    auto other = row("2", 2.0);
    other.metric = "knn_acc";
    CHECK_THROWS_AS((void)evalsuite::build_report({{row("1", 1.0)}, {other}}),
                    bype::UsageError);
}

TEST_CASE("report csv header and column order are pinned") {
    evalsuite::ReportRow r;
    r.prior = "bype";
    r.dataset = "pinwheel";
    r.seed = "7";
    r.metric = "nll";
    r.K = 256;
    r.value = 2.5;
    r.desk_scale = true;
    const auto report = evalsuite::build_report({{r}});
    const std::string csv = evalsuite::report_csv(report);
    CHECK(csv.rfind("prior,dataset,seed,metric,K,value,desk_scale\n", 0) == 0);
    CHECK(csv.find("bype,pinwheel,7,nll,256,2.5,1\n") != std::string::npos);

    const auto path =
        (std::filesystem::temp_directory_path() / "bype_report_test.csv").string();
    evalsuite::write_report_csv(path, report);
    const auto rows = evalsuite::read_report_csv(path);
    REQUIRE(rows.size() == 3); // run row + mean + std
    CHECK(rows[0].prior == "bype");
    CHECK(rows[0].value == 2.5);
    std::filesystem::remove(path);
}

TEST_CASE("embedding dump has the documented schema") {
    const VaeParams p = tiny_vae(28);
    const data::Dataset ds = blobs(3, 0.3, 29);
    const auto path =
        (std::filesystem::temp_directory_path() / "bype_emb_test.csv").string();
    evalsuite::dump_embeddings(path, p, ds);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "index,label,z_0,z_1");
    std::size_t lines = 0;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 6);
    std::filesystem::remove(path);
}
