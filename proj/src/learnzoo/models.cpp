#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psbo/error.hpp"

namespace psbo::zoo {

namespace {

int argmax_class(const std::vector<double>& scores) {
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

nlohmann::json json_u32(const std::vector<std::uint32_t>& v) {
    return nlohmann::json(v);
}

std::vector<std::uint32_t> u32_from(const nlohmann::json& j) {
    return j.get<std::vector<std::uint32_t>>();
}

}  // namespace

// ---------------------------------------------------------------------------
// ClassTree

int ClassTree::predict(const Dataset& d, std::uint32_t row,
                       const std::vector<std::uint32_t>& cols) const {
    if (nodes.empty()) return 0;
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const Node& n = nodes[static_cast<std::size_t>(i)];
        const double v = d.value(row, cols[static_cast<std::size_t>(n.feature)]);
        const bool go_left = n.equality ? v == n.threshold : v <= n.threshold;
        i = go_left ? n.left : n.right;
        if (i < 0) return n.label;  // frontier node in a budget-truncated tree
    }
    return nodes[static_cast<std::size_t>(i)].label;
}

std::size_t ClassTree::depth_estimate() const {
    std::size_t d = 1;
    std::size_t n = nodes.size();
    while (n > 1) {
        n /= 2;
        ++d;
    }
    return d;
}

nlohmann::json ClassTree::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Node& n : nodes)
        arr.push_back({{"f", n.feature}, {"eq", n.equality}, {"t", n.threshold}, {"l", n.left},
                       {"r", n.right}, {"c", n.label}});
    return arr;
}

ClassTree ClassTree::from_json(const nlohmann::json& j) {
    ClassTree tree;
    for (const auto& nj : j) {
        Node n;
        n.feature = nj.at("f").get<int>();
        n.equality = nj.at("eq").get<bool>();
        n.threshold = nj.at("t").get<double>();
        n.left = nj.at("l").get<int>();
        n.right = nj.at("r").get<int>();
        n.label = nj.at("c").get<int>();
        tree.nodes.push_back(n);
    }
    return tree;
}

// ---------------------------------------------------------------------------
// LinearEncoder

void LinearEncoder::fit(const Dataset& d, const std::vector<std::uint32_t>& rows,
                        const std::vector<std::uint32_t>& columns) {
    cols = columns;
    offsets.clear();
    widths.clear();
    means.clear();
    scales.clear();
    dim = 0;
    for (std::uint32_t c : cols) {
        offsets.push_back(dim);
        if (d.feature(c).kind == FeatureKind::categorical) {
            const int w = static_cast<int>(d.feature(c).categories.size());
            widths.push_back(w);
            means.push_back(0.0);
            scales.push_back(1.0);
            dim += w;
        } else {
            widths.push_back(1);
            double mean = 0.0;
            for (std::uint32_t r : rows) mean += d.value(r, c);
            mean /= static_cast<double>(rows.size());
            double var = 0.0;
            for (std::uint32_t r : rows) {
                const double v = d.value(r, c) - mean;
                var += v * v;
            }
            var /= static_cast<double>(rows.size());
            means.push_back(mean);
            scales.push_back(var > 1e-12 ? std::sqrt(var) : 1.0);
            dim += 1;
        }
    }
}

void LinearEncoder::encode(const Dataset& d, std::uint32_t row, std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const double v = d.value(row, cols[i]);
        if (widths[i] == 1) {
            out[static_cast<std::size_t>(offsets[i])] = (v - means[i]) / scales[i];
        } else {
            const int level = static_cast<int>(v);
            if (level >= 0 && level < widths[i])
                out[static_cast<std::size_t>(offsets[i] + level)] = 1.0;
        }
    }
}

nlohmann::json LinearEncoder::to_json() const {
    return {{"cols", json_u32(cols)}, {"offsets", offsets}, {"widths", widths},
            {"means", means},         {"scales", scales},   {"dim", dim}};
}

LinearEncoder LinearEncoder::from_json(const nlohmann::json& j) {
    LinearEncoder e;
    e.cols = u32_from(j.at("cols"));
    e.offsets = j.at("offsets").get<std::vector<int>>();
    e.widths = j.at("widths").get<std::vector<int>>();
    e.means = j.at("means").get<std::vector<double>>();
    e.scales = j.at("scales").get<std::vector<double>>();
    e.dim = j.at("dim").get<int>();
    return e;
}

// ---------------------------------------------------------------------------
// ZeroR

nlohmann::json ZeroRModel::to_json() const {
    return {{"model", "zeror"}, {"majority", majority}};
}

std::unique_ptr<Model> ZeroRModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<ZeroRModel>();
    m->majority = j.at("majority").get<int>();
    return m;
}

// ---------------------------------------------------------------------------
// kNN

int KnnModel::predict(const Dataset& d, std::uint32_t row) const {
    const std::size_t f = cols.size();
    const std::size_t n = labels.size();
    // (distance, training index), kept as a bounded max-heap of size k.
    std::vector<std::pair<double, std::size_t>> best;
    best.reserve(static_cast<std::size_t>(k) + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double dist = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            const double a = d.value(row, cols[j]);
            const double b = points[i * f + j];
            if (categorical[j]) {
                dist += a == b ? 0.0 : 1.0;
            } else {
                const double range = hi[j] - lo[j];
                dist += range > 0 ? std::abs(a - b) / range : 0.0;
            }
        }
        best.push_back({dist, i});
        std::push_heap(best.begin(), best.end());
        if (best.size() > static_cast<std::size_t>(k)) {
            std::pop_heap(best.begin(), best.end());
            best.pop_back();
        }
    }
    std::sort(best.begin(), best.end());
    std::vector<double> votes(static_cast<std::size_t>(classes), 0.0);
    for (const auto& [dist, idx] : best) {
        const double w = distance_weighted ? 1.0 / (dist + 1e-6) : 1.0;
        votes[static_cast<std::size_t>(labels[idx])] += w;
    }
    return argmax_class(votes);
}

nlohmann::json KnnModel::to_json() const {
    return {{"model", "knn"},
            {"k", k},
            {"distance_weighted", distance_weighted},
            {"classes", classes},
            {"cols", json_u32(cols)},
            {"categorical", categorical},
            {"lo", lo},
            {"hi", hi},
            {"points", points},
            {"labels", labels}};
}

std::unique_ptr<Model> KnnModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<KnnModel>();
    m->k = j.at("k").get<int>();
    m->distance_weighted = j.at("distance_weighted").get<bool>();
    m->classes = j.at("classes").get<int>();
    m->cols = u32_from(j.at("cols"));
    m->categorical = j.at("categorical").get<std::vector<bool>>();
    m->lo = j.at("lo").get<std::vector<double>>();
    m->hi = j.at("hi").get<std::vector<double>>();
    m->points = j.at("points").get<std::vector<double>>();
    m->labels = j.at("labels").get<std::vector<int>>();
    return m;
}

// ---------------------------------------------------------------------------
// Naive Bayes

int NaiveBayesModel::predict(const Dataset& d, std::uint32_t row) const {
    std::vector<double> log_post = log_prior;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const Feature& f = features[i];
        const double v = d.value(row, cols[i]);
        for (int c = 0; c < classes; ++c) {
            double ll = 0.0;
            switch (f.model) {
                case FeatureModel::categorical: {
                    int level = static_cast<int>(v);
                    if (level < 0 || level >= f.arity) level = 0;
                    ll = f.log_prob[static_cast<std::size_t>(c) * f.arity +
                                    static_cast<std::size_t>(level)];
                    break;
                }
                case FeatureModel::binned: {
                    const int bin = static_cast<int>(
                        std::lower_bound(f.cuts.begin(), f.cuts.end(), v) - f.cuts.begin());
                    ll = f.log_prob[static_cast<std::size_t>(c) * f.arity +
                                    static_cast<std::size_t>(bin)];
                    break;
                }
                case FeatureModel::gaussian: {
                    const double var = f.var[static_cast<std::size_t>(c)];
                    const double diff = v - f.mean[static_cast<std::size_t>(c)];
                    ll = -0.5 * (std::log(2.0 * 3.14159265358979323846 * var) + diff * diff / var);
                    break;
                }
                case FeatureModel::kde: {
                    const auto& vals = f.kde_values[static_cast<std::size_t>(c)];
                    const double bw = f.kde_bandwidth[static_cast<std::size_t>(c)];
                    if (vals.empty()) {
                        ll = -30.0;
                        break;
                    }
                    double acc = 0.0;
                    for (double x : vals) {
                        const double z = (v - x) / bw;
                        acc += std::exp(-0.5 * z * z);
                    }
                    const double density =
                        acc / (static_cast<double>(vals.size()) * bw * 2.50662827463100050242);
                    ll = std::log(std::max(density, 1e-300));
                    break;
                }
            }
            log_post[static_cast<std::size_t>(c)] += ll;
        }
    }
    return argmax_class(log_post);
}

double NaiveBayesModel::predict_ops() const {
    double ops = static_cast<double>(classes);
    for (const Feature& f : features) {
        if (f.model == FeatureModel::kde) {
            double n = 0;
            for (const auto& v : f.kde_values) n += static_cast<double>(v.size());
            ops += n * 4.0;
        } else {
            ops += static_cast<double>(classes) * 3.0;
        }
    }
    return ops;
}

nlohmann::json NaiveBayesModel::to_json() const {
    nlohmann::json fs = nlohmann::json::array();
    for (const Feature& f : features) {
        fs.push_back({{"m", static_cast<int>(f.model)},
                      {"log_prob", f.log_prob},
                      {"arity", f.arity},
                      {"cuts", f.cuts},
                      {"mean", f.mean},
                      {"var", f.var},
                      {"kde_values", f.kde_values},
                      {"kde_bandwidth", f.kde_bandwidth}});
    }
    return {{"model", "naive_bayes"}, {"classes", classes},     {"cols", json_u32(cols)},
            {"log_prior", log_prior}, {"features", fs}};
}

std::unique_ptr<Model> NaiveBayesModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<NaiveBayesModel>();
    m->classes = j.at("classes").get<int>();
    m->cols = u32_from(j.at("cols"));
    m->log_prior = j.at("log_prior").get<std::vector<double>>();
    for (const auto& fj : j.at("features")) {
        Feature f;
        f.model = static_cast<FeatureModel>(fj.at("m").get<int>());
        f.log_prob = fj.at("log_prob").get<std::vector<double>>();
        f.arity = fj.at("arity").get<int>();
        f.cuts = fj.at("cuts").get<std::vector<double>>();
        f.mean = fj.at("mean").get<std::vector<double>>();
        f.var = fj.at("var").get<std::vector<double>>();
        f.kde_values = fj.at("kde_values").get<std::vector<std::vector<double>>>();
        f.kde_bandwidth = fj.at("kde_bandwidth").get<std::vector<double>>();
        m->features.push_back(std::move(f));
    }
    return m;
}

// ---------------------------------------------------------------------------
// CART / forest

nlohmann::json CartModel::to_json() const {
    return {{"model", "cart"}, {"tree", tree.to_json()}, {"cols", json_u32(cols)}};
}

std::unique_ptr<Model> CartModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<CartModel>();
    m->tree = ClassTree::from_json(j.at("tree"));
    m->cols = u32_from(j.at("cols"));
    return m;
}

int ForestModel::predict(const Dataset& d, std::uint32_t row) const {
    std::vector<double> votes(static_cast<std::size_t>(classes), 0.0);
    for (const ClassTree& t : trees) votes[static_cast<std::size_t>(t.predict(d, row, cols))] += 1.0;
    return argmax_class(votes);
}

double ForestModel::predict_ops() const {
    double ops = 0;
    for (const ClassTree& t : trees) ops += static_cast<double>(t.depth_estimate()) * 2.0;
    return ops + static_cast<double>(classes);
}

nlohmann::json ForestModel::to_json() const {
    nlohmann::json ts = nlohmann::json::array();
    for (const ClassTree& t : trees) ts.push_back(t.to_json());
    return {{"model", "random_forest"}, {"trees", ts}, {"cols", json_u32(cols)},
            {"classes", classes}};
}

std::unique_ptr<Model> ForestModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<ForestModel>();
    for (const auto& tj : j.at("trees")) m->trees.push_back(ClassTree::from_json(tj));
    m->cols = u32_from(j.at("cols"));
    m->classes = j.at("classes").get<int>();
    return m;
}

// ---------------------------------------------------------------------------
// Linear SVM

int LinearSvmModel::predict(const Dataset& d, std::uint32_t row) const {
    std::vector<double> x;
    enc.encode(d, row, x);
    std::vector<double> margins(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
        double m = weights[j][static_cast<std::size_t>(enc.dim)];
        for (int i = 0; i < enc.dim; ++i) m += weights[j][static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        margins[j] = m;
    }
    // Linear loss-based decoding over the codebook.
    std::vector<double> scores(static_cast<std::size_t>(classes), 0.0);
    for (int c = 0; c < classes; ++c)
        for (std::size_t j = 0; j < margins.size(); ++j)
            scores[static_cast<std::size_t>(c)] +=
                static_cast<double>(codebook[static_cast<std::size_t>(c)][j]) * margins[j];
    return argmax_class(scores);
}

nlohmann::json LinearSvmModel::to_json() const {
    return {{"model", "linear_svm"}, {"enc", enc.to_json()}, {"classes", classes},
            {"codebook", codebook},  {"weights", weights}};
}

std::unique_ptr<Model> LinearSvmModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<LinearSvmModel>();
    m->enc = LinearEncoder::from_json(j.at("enc"));
    m->classes = j.at("classes").get<int>();
    m->codebook = j.at("codebook").get<std::vector<std::vector<int>>>();
    m->weights = j.at("weights").get<std::vector<std::vector<double>>>();
    return m;
}

// ---------------------------------------------------------------------------
// Logistic regression

int LogRegModel::predict(const Dataset& d, std::uint32_t row) const {
    std::vector<double> x;
    enc.encode(d, row, x);
    std::vector<double> logits(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) {
        double m = weights[static_cast<std::size_t>(c)][static_cast<std::size_t>(enc.dim)];
        for (int i = 0; i < enc.dim; ++i)
            m += weights[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] *
                 x[static_cast<std::size_t>(i)];
        logits[static_cast<std::size_t>(c)] = m;
    }
    return argmax_class(logits);
}

nlohmann::json LogRegModel::to_json() const {
    return {{"model", "logistic_regression"}, {"enc", enc.to_json()}, {"classes", classes},
            {"weights", weights}};
}

std::unique_ptr<Model> LogRegModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<LogRegModel>();
    m->enc = LinearEncoder::from_json(j.at("enc"));
    m->classes = j.at("classes").get<int>();
    m->weights = j.at("weights").get<std::vector<std::vector<double>>>();
    return m;
}

// ---------------------------------------------------------------------------
// Gradient boosting

int GbmModel::predict(const Dataset& d, std::uint32_t row) const {
    std::vector<double> scores = base_score;
    std::vector<double> x(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) x[i] = d.value(row, cols[i]);
    for (const auto& round : rounds)
        for (int c = 0; c < classes; ++c)
            scores[static_cast<std::size_t>(c)] +=
                learning_rate * round[static_cast<std::size_t>(c)].predict(x);
    return argmax_class(scores);
}

nlohmann::json GbmModel::to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& round : rounds) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& t : round) r.push_back(t.to_json());
        rs.push_back(r);
    }
    return {{"model", "gradient_boosting"}, {"classes", classes},
            {"learning_rate", learning_rate}, {"cols", json_u32(cols)},
            {"base_score", base_score},       {"rounds", rs}};
}

std::unique_ptr<Model> GbmModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<GbmModel>();
    m->classes = j.at("classes").get<int>();
    m->learning_rate = j.at("learning_rate").get<double>();
    m->cols = u32_from(j.at("cols"));
    m->base_score = j.at("base_score").get<std::vector<double>>();
    for (const auto& rj : j.at("rounds")) {
        std::vector<RegressionTree> round;
        for (const auto& tj : rj) round.push_back(RegressionTree::from_json(tj));
        m->rounds.push_back(std::move(round));
    }
    return m;
}

// ---------------------------------------------------------------------------
// AdaBoost

int AdaBoostModel::predict(const Dataset& d, std::uint32_t row) const {
    std::vector<double> votes(static_cast<std::size_t>(classes), 0.0);
    for (std::size_t s = 0; s < stages.size(); ++s)
        votes[static_cast<std::size_t>(stages[s]->predict(d, row))] += alphas[s];
    return argmax_class(votes);
}

double AdaBoostModel::predict_ops() const {
    double ops = static_cast<double>(classes);
    for (const auto& s : stages) ops += s->predict_ops();
    return ops;
}

nlohmann::json AdaBoostModel::to_json() const {
    nlohmann::json ss = nlohmann::json::array();
    for (const auto& s : stages) ss.push_back(s->to_json());
    return {{"model", "adaboost"}, {"classes", classes}, {"alphas", alphas}, {"stages", ss}};
}

std::unique_ptr<Model> AdaBoostModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<AdaBoostModel>();
    m->classes = j.at("classes").get<int>();
    m->alphas = j.at("alphas").get<std::vector<double>>();
    for (const auto& sj : j.at("stages")) m->stages.push_back(model_from_json(sj));
    return m;
}

// ---------------------------------------------------------------------------
// Voting

int VotingModel::predict(const Dataset& d, std::uint32_t row) const {
    std::vector<double> votes(static_cast<std::size_t>(classes), 0.0);
    for (const auto& member : members)
        votes[static_cast<std::size_t>(member->predict(d, row))] += 1.0;
    return argmax_class(votes);
}

double VotingModel::predict_ops() const {
    double ops = static_cast<double>(classes);
    for (const auto& member : members) ops += member->predict_ops();
    return ops;
}

nlohmann::json VotingModel::to_json() const {
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& member : members) ms.push_back(member->to_json());
    return {{"model", "voting"}, {"classes", classes}, {"members", ms}};
}

std::unique_ptr<Model> VotingModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<VotingModel>();
    m->classes = j.at("classes").get<int>();
    for (const auto& mj : j.at("members")) m->members.push_back(model_from_json(mj));
    return m;
}

}  // namespace psbo::zoo

namespace psbo {

std::unique_ptr<Model> model_from_json(const nlohmann::json& j) {
    const std::string name = j.at("model").get<std::string>();
    using namespace zoo;
    if (name == "zeror") return ZeroRModel::from_json(j);
    if (name == "knn") return KnnModel::from_json(j);
    if (name == "naive_bayes") return NaiveBayesModel::from_json(j);
    if (name == "cart") return CartModel::from_json(j);
    if (name == "random_forest") return ForestModel::from_json(j);
    if (name == "linear_svm") return LinearSvmModel::from_json(j);
    if (name == "logistic_regression") return LogRegModel::from_json(j);
    if (name == "gradient_boosting") return GbmModel::from_json(j);
    if (name == "adaboost") return AdaBoostModel::from_json(j);
    if (name == "voting") return VotingModel::from_json(j);
    throw Error("unknown model kind '" + name + "'");
}

}  // namespace psbo
