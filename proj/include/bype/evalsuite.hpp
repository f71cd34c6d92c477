#pragma once

#include <map>

#include "bype/data.hpp"
#include "bype/sampling.hpp"

namespace bype::evalsuite {

// Mean importance-weighted NLL over the test set, K samples per point.
double density_eval(const model::VaeParams& p, const priors::PriorSpec& spec,
                    const Tensor& test_X, std::size_t K, Rng& rng);

// Exact kNN on encoder-mean embeddings; majority vote, ties broken by
// smallest summed distance, then smallest label index.
std::map<std::size_t, double> knn_eval(const model::VaeParams& p,
                                       const data::Dataset& train,
                                       const data::Dataset& test,
                                       const std::vector<std::size_t>& Ks);
std::vector<int> knn_predict(const model::VaeParams& p, const data::Dataset& train,
                             const data::Dataset& test, std::size_t k);

struct AugmentOptions {
    double lambda = 0.4;
    sampling::Way way = sampling::Way::Posterior;
    std::size_t epochs = 30;
    std::size_t batch = 100;
    std::size_t hidden = 1024;
    double lr = 1e-3;
};

struct AugmentResult {
    double test_error = 0.0;
    std::uint64_t classifier_hash = 0; // trained parameter bytes
};

// The generative-augmentation classifier loop: per minibatch, synthesize a
// paired batch through the VAE and minimize the weighted cross entropy
//   -[lambda log p(y|x) + (1-lambda) log p(y|x~)].
// lambda = 1 runs the plain real-data path (the synthetic branch is never
// built, so it is byte-equivalent to ordinary training). Returns test error.
double augmentation_train(const model::VaeParams& p, const data::Dataset& train,
                          const data::Dataset& test, const AugmentOptions& opt,
                          Rng& rng);
AugmentResult augmentation_train_result(const model::VaeParams& p,
                                        const data::Dataset& train,
                                        const data::Dataset& test,
                                        const AugmentOptions& opt, Rng& rng);

struct ReportRow {
    std::string prior;
    std::string dataset;
    std::string seed; // run seed, or "mean"/"std" on aggregate rows
    std::string metric;
    long K = 0;
    double value = 0.0;
    bool desk_scale = true;
};

struct EvalReport {
    std::vector<ReportRow> rows; // per-run rows followed by aggregates
};

// Aggregates per-run rows into mean and sample std (n-1) per metric group.
// Runs must agree on the (prior, dataset, metric, K, desk_scale) grid.
EvalReport build_report(const std::vector<std::vector<ReportRow>>& runs);

std::string report_csv(const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);
std::vector<ReportRow> read_report_csv(const std::string& path);

// CSV schema: index,label,z_0..z_{dz-1}
void dump_embeddings(const std::string& path, const model::VaeParams& p,
                     const data::Dataset& ds);

} // namespace bype::evalsuite
