#include "bype/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bype/adam.hpp"
#include "bype/hash.hpp"
#include "bype/kernels.hpp"
#include "bype/metrics.hpp"
#include "bype/objective.hpp"

namespace bype::evalsuite {
namespace {
const kernels::Table& K() { return kernels::active(); }
} // namespace

double density_eval(const model::VaeParams& p, const priors::PriorSpec& spec,
                    const Tensor& test_X, std::size_t K_samples, Rng& rng) {
    if (test_X.rows() == 0) throw UsageError("density_eval: empty test set");
    double acc = 0.0;
    for (std::size_t i = 0; i < test_X.rows(); ++i) {
        Rng row_rng = rng.stream(i);
        const Tensor x({1, test_X.cols()},
                       std::vector<double>(test_X.row_ptr(i),
                                           test_X.row_ptr(i) + test_X.cols()));
        acc += objective::iwae_nll(p, spec, x, K_samples, row_rng);
    }
    return acc / static_cast<double>(test_X.rows());
}

namespace {
struct Neighbor {
    double dist;
    std::size_t idx;
};

int vote(const std::vector<Neighbor>& nb, std::size_t k,
         const std::vector<int>& labels) {
    std::map<int, std::pair<std::size_t, double>> tally; // label -> count, dist sum
    for (std::size_t i = 0; i < k; ++i) {
        auto& t = tally[labels[nb[i].idx]];
        t.first += 1;
        t.second += nb[i].dist;
    }
    int best = -1;
    std::size_t best_count = 0;
    double best_dist = 0.0;
    for (const auto& [label, t] : tally) {
        const bool wins =
            t.first > best_count ||
            (t.first == best_count &&
             (t.second < best_dist || (t.second == best_dist && label < best)));
        if (best == -1 || wins) {
            best = label;
            best_count = t.first;
            best_dist = t.second;
        }
    }
    return best;
}
} // namespace

std::vector<int> knn_predict(const model::VaeParams& p, const data::Dataset& train,
                             const data::Dataset& test, std::size_t k) {
    if (!train.labeled()) throw UsageError("knn_predict: train labels required");
    if (k == 0 || k > train.N())
        throw UsageError("knn_predict: K must be in [1, train size]");
    const Tensor emb_train = model::encode(p, train.X).first;
    const Tensor emb_test = model::encode(p, test.X).first;
    const std::size_t d = emb_train.cols();
    std::vector<int> pred(test.N());
    std::vector<Neighbor> nb(train.N());
    for (std::size_t i = 0; i < test.N(); ++i) {
        for (std::size_t j = 0; j < train.N(); ++j)
            nb[j] = {K().sqdiff(emb_test.row_ptr(i), emb_train.row_ptr(j), d), j};
        std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(k),
                          nb.end(), [](const Neighbor& a, const Neighbor& b) {
                              return a.dist != b.dist ? a.dist < b.dist
                                                      : a.idx < b.idx;
                          });
        pred[i] = vote(nb, k, train.labels);
    }
    return pred;
}

std::map<std::size_t, double> knn_eval(const model::VaeParams& p,
                                       const data::Dataset& train,
                                       const data::Dataset& test,
                                       const std::vector<std::size_t>& Ks) {
    if (!train.labeled() || !test.labeled())
        throw UsageError("knn_eval: both splits need labels");
    if (train.N() == 0 || test.N() == 0)
        throw UsageError("knn_eval: empty split");
    std::size_t max_k = 0;
    for (auto k : Ks) {
        if (k == 0 || k > train.N())
            throw UsageError("knn_eval: K must be in [1, train size]");
        max_k = std::max(max_k, k);
    }
    const Tensor emb_train = model::encode(p, train.X).first;
    const Tensor emb_test = model::encode(p, test.X).first;
    const std::size_t d = emb_train.cols();

    std::map<std::size_t, std::size_t> correct;
    for (auto k : Ks) correct[k] = 0;
    std::vector<Neighbor> nb(train.N());
    for (std::size_t i = 0; i < test.N(); ++i) {
        for (std::size_t j = 0; j < train.N(); ++j)
            nb[j] = {K().sqdiff(emb_test.row_ptr(i), emb_train.row_ptr(j), d), j};
        std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(max_k),
                          nb.end(), [](const Neighbor& a, const Neighbor& b) {
                              return a.dist != b.dist ? a.dist < b.dist
                                                      : a.idx < b.idx;
                          });
        for (auto k : Ks)
            if (vote(nb, k, train.labels) == test.labels[i]) ++correct[k];
    }
    std::map<std::size_t, double> acc;
    for (auto k : Ks)
        acc[k] = static_cast<double>(correct[k]) / static_cast<double>(test.N());
    return acc;
}

// ---------------------------------------------------------------------------
// Generative-augmentation classifier (two hidden layers, relu, softmax CE)
// ---------------------------------------------------------------------------
namespace {

struct Classifier {
    std::vector<model::HiddenLayer> hidden;
    model::Dense out;
    std::size_t classes = 0;

    static Classifier init(std::size_t d, std::size_t width, std::size_t classes,
                           Rng& rng) {
        auto glorot = [&rng](std::size_t o, std::size_t i) {
            model::Dense dn;
            dn.W = Tensor({o, i});
            dn.b = Tensor({o});
            const double lim = std::sqrt(6.0 / static_cast<double>(i + o));
            for (std::size_t j = 0; j < dn.W.numel(); ++j)
                dn.W[j] = (2.0 * rng.uniform() - 1.0) * lim;
            return dn;
        };
        Classifier c;
        c.classes = classes;
        c.hidden.push_back({glorot(width, d), {}});
        c.hidden.push_back({glorot(width, width), {}});
        c.out = glorot(classes, width);
        return c;
    }

    train::ParamRefs refs() {
        train::ParamRefs r;
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            r.emplace_back("cls.l" + std::to_string(i) + ".w", &hidden[i].main.W);
            r.emplace_back("cls.l" + std::to_string(i) + ".b", &hidden[i].main.b);
        }
        r.emplace_back("cls.out.w", &out.W);
        r.emplace_back("cls.out.b", &out.b);
        return r;
    }

    // plain forward for prediction
    std::vector<int> predict(const Tensor& X) const {
        Tape t;
        int h = t.constant(X);
        for (const auto& l : hidden) {
            model::TapedDense td{t.constant(l.main.W), t.constant(l.main.b)};
            h = t.vrelu(model::apply_dense(t, td, h));
        }
        model::TapedDense td{t.constant(out.W), t.constant(out.b)};
        const Tensor& L = t.val(model::apply_dense(t, td, h));
        std::vector<int> out_labels(L.rows());
        for (std::size_t i = 0; i < L.rows(); ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < L.cols(); ++j)
                if (L.at(i, j) > L.at(i, best)) best = j;
            out_labels[i] = static_cast<int>(best);
        }
        return out_labels;
    }

    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& l : hidden) {
            h = hash_tensor(l.main.W, h);
            h = hash_tensor(l.main.b, h);
        }
        h = hash_tensor(out.W, h);
        return hash_tensor(out.b, h);
    }
};

struct TapedClassifier {
    std::vector<model::TapedDense> hidden;
    model::TapedDense out;
};

TapedClassifier bind_classifier(Tape& t, const Classifier& cls) {
    TapedClassifier tc;
    for (std::size_t i = 0; i < cls.hidden.size(); ++i)
        tc.hidden.push_back(
            {t.param("cls.l" + std::to_string(i) + ".w", cls.hidden[i].main.W),
             t.param("cls.l" + std::to_string(i) + ".b", cls.hidden[i].main.b)});
    tc.out = {t.param("cls.out.w", cls.out.W), t.param("cls.out.b", cls.out.b)};
    return tc;
}

// mean log p(y|x) for the batch, through the shared parameter nodes
int mean_logp(Tape& t, const TapedClassifier& tc, std::size_t classes,
              const Tensor& X, const std::vector<int>& y) {
    int h = t.constant(X);
    for (const auto& td : tc.hidden) h = t.vrelu(model::apply_dense(t, td, h));
    const int logits = model::apply_dense(t, tc.out, h);
    Tensor onehot({X.rows(), classes});
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const int label = y[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw UsageError("classifier: label out of range");
        onehot.at(i, static_cast<std::size_t>(label)) = 1.0;
    }
    const int picked = t.rowsum(t.mul(logits, t.constant(onehot)));
    const int lse = t.lse_rows(logits, Tensor::full({classes}, 1.0));
    return t.mean(t.sub(picked, lse));
}

struct AugmentInternal {
    double test_error = 0.0;
    std::uint64_t params_hash = 0;
};

std::size_t count_classes(const data::Dataset& ds) {
    int m = 0;
    for (int l : ds.labels) m = std::max(m, l);
    return static_cast<std::size_t>(m) + 1;
}

// One training loop serves both the plain path (synth == false) and the
// mixed path; lambda == 1 callers take the plain path so the synthetic
// branch contributes neither graph nodes nor rng draws.
AugmentInternal run_classifier(const model::VaeParams* vae,
                               const data::Dataset& train_ds,
                               const data::Dataset& test_ds,
                               const AugmentOptions& opt, bool synth, Rng& rng) {
    if (!train_ds.labeled() || !test_ds.labeled())
        throw UsageError("augmentation_train: labeled data required");
    if (!(opt.lambda >= 0.0 && opt.lambda <= 1.0))
        throw UsageError("augmentation_train: lambda must be in [0,1]");
    const std::size_t classes =
        std::max(count_classes(train_ds), count_classes(test_ds));
    Classifier cls = Classifier::init(train_ds.d(), opt.hidden, classes, rng);
    train::AdamState adam;
    const auto refs = cls.refs();
    const std::size_t N = train_ds.N();

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        const auto perm = rng.permutation(N);
        for (std::size_t start = 0; start < N; start += opt.batch) {
            const std::size_t stop = std::min(start + opt.batch, N);
            std::vector<std::size_t> idx(perm.begin() + start, perm.begin() + stop);
            const Tensor xb = gather_rows(train_ds.X, idx);
            std::vector<int> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
                yb[i] = train_ds.labels[idx[i]];

            Tape t;
            const TapedClassifier tc = bind_classifier(t, cls);
            int loss;
            if (!synth) {
                loss = t.scale(mean_logp(t, tc, classes, xb, yb), -1.0);
            } else {
                const auto gen =
                    sampling::synthesize_augmentation(*vae, xb, yb, opt.way, rng);
                if (opt.lambda == 0.0) {
                    loss = t.scale(
                        mean_logp(t, tc, classes, gen.samples, gen.labels), -1.0);
                } else {
                    const int real = mean_logp(t, tc, classes, xb, yb);
                    const int fake =
                        mean_logp(t, tc, classes, gen.samples, gen.labels);
                    loss = t.add(t.scale(real, -opt.lambda),
                                 t.scale(fake, -(1.0 - opt.lambda)));
                }
            }
            const GradMap grads = t.backward(loss);
            train::normalized_adam_step(adam, refs, grads, opt.lr);
        }
    }

    const auto pred = cls.predict(test_ds.X);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] != test_ds.labels[i]) ++wrong;
    AugmentInternal out;
    out.test_error = static_cast<double>(wrong) / static_cast<double>(pred.size());
    out.params_hash = cls.hash();
    return out;
}

} // namespace

AugmentResult augmentation_train_result(const model::VaeParams& p,
                                        const data::Dataset& train,
                                        const data::Dataset& test,
                                        const AugmentOptions& opt, Rng& rng) {
    const bool synth = opt.lambda < 1.0;
    const AugmentInternal r =
        run_classifier(synth ? &p : nullptr, train, test, opt, synth, rng);
    return {r.test_error, r.params_hash};
}

double augmentation_train(const model::VaeParams& p, const data::Dataset& train,
                          const data::Dataset& test, const AugmentOptions& opt,
                          Rng& rng) {
    return augmentation_train_result(p, train, test, opt, rng).test_error;
}

EvalReport build_report(const std::vector<std::vector<ReportRow>>& runs) {
    if (runs.empty()) throw UsageError("build_report: need at least one run");
    // group key: prior|dataset|metric|K|desk_scale
    auto key_of = [](const ReportRow& r) {
        std::ostringstream os;
        os << r.prior << '|' << r.dataset << '|' << r.metric << '|' << r.K << '|'
           << (r.desk_scale ? 1 : 0);
        return os.str();
    };
    std::vector<std::string> grid;
    for (const auto& r : runs.front()) grid.push_back(key_of(r));
    std::sort(grid.begin(), grid.end());
    for (const auto& run : runs) {
        std::vector<std::string> g;
        for (const auto& r : run) g.push_back(key_of(r));
        std::sort(g.begin(), g.end());
        if (g != grid)
            throw UsageError("build_report: runs report inconsistent metric grids");
    }

    EvalReport report;
    std::map<std::string, std::vector<double>> values;
    std::map<std::string, ReportRow> proto;
    for (const auto& run : runs) {
        for (const auto& r : run) {
            report.rows.push_back(r);
            values[key_of(r)].push_back(r.value);
            proto.emplace(key_of(r), r);
        }
    }
    for (auto& [key, vs] : values) {
        const double n = static_cast<double>(vs.size());
        double m = 0.0;
        for (double v : vs) m += v;
        m /= n;
        double s2 = 0.0;
        for (double v : vs) s2 += (v - m) * (v - m);
        const double sd = vs.size() > 1 ? std::sqrt(s2 / (n - 1.0)) : 0.0;
        ReportRow mean_row = proto.at(key);
        mean_row.seed = "mean";
        mean_row.value = m;
        ReportRow std_row = proto.at(key);
        std_row.seed = "std";
        std_row.value = sd;
        report.rows.push_back(mean_row);
        report.rows.push_back(std_row);
    }
    return report;
}

std::string report_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "prior,dataset,seed,metric,K,value,desk_scale\n";
    for (const auto& r : report.rows)
        os << r.prior << ',' << r.dataset << ',' << r.seed << ',' << r.metric
           << ',' << r.K << ',' << train::format_double(r.value) << ','
           << (r.desk_scale ? 1 : 0) << '\n';
    return os.str();
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write report: " + path);
    os << report_csv(report);
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open report: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "prior,dataset,seed,metric,K,value,desk_scale")
        throw FormatError("bad report header in " + path);
    std::vector<ReportRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        ReportRow r;
        std::getline(ls, r.prior, ',');
        std::getline(ls, r.dataset, ',');
        std::getline(ls, r.seed, ',');
        std::getline(ls, r.metric, ',');
        std::getline(ls, field, ',');
        r.K = std::stol(field);
        std::getline(ls, field, ',');
        r.value = std::stod(field);
        std::getline(ls, field, ',');
        r.desk_scale = field == "1" || field == "true";
        rows.push_back(r);
    }
    return rows;
}

void dump_embeddings(const std::string& path, const model::VaeParams& p,
                     const data::Dataset& ds) {
    const Tensor emb = model::encode(p, ds.X).first;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write embeddings: " + path);
    os << "index,label";
    for (std::size_t j = 0; j < emb.cols(); ++j) os << ",z_" << j;
    os << '\n';
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        os << i << ',' << (ds.labeled() ? ds.labels[i] : -1);
        for (std::size_t j = 0; j < emb.cols(); ++j)
            os << ',' << train::format_double(emb.at(i, j));
        os << '\n';
    }
}

} // namespace bype::evalsuite
