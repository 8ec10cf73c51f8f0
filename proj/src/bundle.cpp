#include "somcm/bundle.hpp"

#include <cmath>

#include "somcm/error.hpp"
#include "somcm/io.hpp"
#include "somcm/timeutil.hpp"

namespace somcm {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        out.push_back(v(k));
    }
    return out;
}

json permutation_json(const Eigen::PermutationMatrix<Eigen::Dynamic>& p) {
    json out = json::array();
    for (Eigen::Index k = 0; k < p.indices().size(); ++k) {
        out.push_back(p.indices()(k));
    }
    return out;
}

Eigen::MatrixXd matrix_from(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

Eigen::VectorXd vector_from(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
    }
    return v;
}

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> number_or_null(const json& j) {
    return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

// Schema checks with JSON-pointer-like paths in the messages.
class Checker {
public:
    const json& field(const json& obj, const std::string& path, const std::string& key) {
        need(obj.is_object(), path, "expected an object");
        const auto it = obj.find(key);
        need(it != obj.end(), path + "/" + key, "missing");
        return *it;
    }
    const json& object(const json& obj, const std::string& path, const std::string& key) {
        const json& v = field(obj, path, key);
        need(v.is_object(), path + "/" + key, "expected an object");
        return v;
    }
    const json& array(const json& obj, const std::string& path, const std::string& key) {
        const json& v = field(obj, path, key);
        need(v.is_array(), path + "/" + key, "expected an array");
        return v;
    }
    double number(const json& obj, const std::string& path, const std::string& key) {
        const json& v = field(obj, path, key);
        need(v.is_number(), path + "/" + key, "expected a number");
        return v.get<double>();
    }
    std::uint64_t count(const json& obj, const std::string& path, const std::string& key) {
        const json& v = field(obj, path, key);
        need(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
             path + "/" + key, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    void string(const json& obj, const std::string& path, const std::string& key) {
        need(field(obj, path, key).is_string(), path + "/" + key, "expected a string");
    }
    void boolean(const json& obj, const std::string& path, const std::string& key) {
        need(field(obj, path, key).is_boolean(), path + "/" + key, "expected a boolean");
    }
    void version(const json& obj, const std::string& path, const std::string& key, const char* expected) {
        const json& v = field(obj, path, key);
        need(v.is_string() && v.get<std::string>() == expected, path + "/" + key,
             std::string("expected \"") + expected + "\"");
    }
    void numbers(const json& arr, const std::string& path, std::size_t size) {
        need(arr.is_array() && arr.size() == size, path,
             "expected an array of " + std::to_string(size) + " numbers");
        for (std::size_t k = 0; k < arr.size(); ++k) {
            need(arr[k].is_number(), path + "/" + std::to_string(k), "expected a number");
        }
    }
    void matrix(const json& arr, const std::string& path, std::size_t rows, std::size_t cols) {
        need(arr.is_array() && arr.size() == rows, path,
             "expected " + std::to_string(rows) + " rows");
        for (std::size_t r = 0; r < rows; ++r) {
            numbers(arr[r], path + "/" + std::to_string(r), cols);
        }
    }
    void nullable_number(const json& obj, const std::string& path, const std::string& key) {
        const json& v = field(obj, path, key);
        need(v.is_null() || v.is_number(), path + "/" + key, "expected a number or null");
    }
    static void need(bool ok, const std::string& path, const std::string& msg) {
        if (!ok) {
            fail(ErrorKind::InvalidInput, "bundle schema: " + path + ": " + msg);
        }
    }
};

json norm_stats_json(const std::vector<NormStat>& stats) {
    json out = json::array();
    for (const auto& s : stats) {
        out.push_back({{"id", s.id}, {"active", s.active}, {"offset", s.offset}, {"scale", s.scale}});
    }
    return out;
}

std::vector<NormStat> norm_stats_from(const json& j) {
    std::vector<NormStat> out;
    for (const auto& s : j) {
        out.push_back({s.at("id").get<std::string>(), s.at("active").get<bool>(),
                       s.at("offset").get<double>(), s.at("scale").get<double>()});
    }
    return out;
}

}  // namespace

json to_json(const SomModel& model) {
    const TrainingMeta& m = model.meta();
    return {
        {"version", kSomFormat},
        {"topology", {{"rows", model.topology().rows}, {"cols", model.topology().cols}}},
        {"sigma_final", model.sigma()},
        {"codebook", matrix_json(model.codebook())},
        {"trainingMeta",
         {{"epochs", m.epochs},
          {"final_distortion", m.final_distortion},
          {"data_fingerprint", m.data_fingerprint},
          {"rows_used", m.rows_used},
          {"random_init", m.random_init}}},
    };
}

SomModel som_from_json(const json& j) {
    const json& meta = j.at("trainingMeta");
    TrainingMeta m;
    m.epochs = meta.at("epochs").get<std::size_t>();
    m.final_distortion = meta.at("final_distortion").get<double>();
    m.data_fingerprint = meta.at("data_fingerprint").get<std::string>();
    m.rows_used = meta.at("rows_used").get<std::size_t>();
    m.random_init = meta.at("random_init").get<bool>();
    const GridTopology grid(j.at("topology").at("rows").get<std::size_t>(),
                            j.at("topology").at("cols").get<std::size_t>());
    return SomModel(grid, matrix_from(j.at("codebook")), j.at("sigma_final").get<double>(), std::move(m));
}

json to_json(const NominalBaseline& b) {
    return {
        {"dm_delta", b.dm_delta},
        {"kpi_mean", b.kpi_mean},
        {"kpi_std", b.kpi_std},
        {"lcl", b.lcl},
        {"contribution_baseline", vector_json(b.contribution_baseline.transpose())},
        {"norm_stats", norm_stats_json(b.norm_stats)},
        {"filter", {{"window", b.filter.window}, {"lambda", b.filter.lambda}}},
        {"warmup_discarded", b.warmup_discarded},
    };
}

NominalBaseline baseline_from_json(const json& j) {
    NominalBaseline b;
    b.dm_delta = j.at("dm_delta").get<double>();
    b.kpi_mean = j.at("kpi_mean").get<double>();
    b.kpi_std = j.at("kpi_std").get<double>();
    b.lcl = j.at("lcl").get<double>();
    b.contribution_baseline = vector_from(j.at("contribution_baseline")).transpose();
    b.norm_stats = norm_stats_from(j.at("norm_stats"));
    b.filter.window = j.at("filter").at("window").get<std::size_t>();
    b.filter.lambda = j.at("filter").at("lambda").get<double>();
    b.warmup_discarded = j.at("warmup_discarded").get<std::size_t>();
    return b;
}

json to_json(const HotellingBaseline& h) {
    return {
        {"version", kHotellingFormat},
        {"mean", vector_json(h.mean())},
        {"covariance", matrix_json(h.covariance())},
        {"t2_mean", h.t2_mean()},
        {"t2_std", h.t2_std()},
        {"ucl", h.ucl()},
        {"lcl", h.lcl()},
        {"ridge", h.ridge()},
        {"factor",
         {{"permutation", permutation_json(h.factor().permutation)},
          {"lower", matrix_json(h.factor().lower)},
          {"diagonal", vector_json(h.factor().diagonal)}}},
    };
}

HotellingBaseline hotelling_from_json(const json& j) {
    if (!j.contains("factor")) {
        return HotellingBaseline(vector_from(j.at("mean")), matrix_from(j.at("covariance")),
                                 j.at("t2_mean").get<double>(), j.at("t2_std").get<double>(),
                                 j.at("ridge").get<double>());
    }
    const json& f = j.at("factor");
    CovarianceFactor factor;
    const auto idx = f.at("permutation").get<std::vector<int>>();
    factor.permutation.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        factor.permutation.indices()(static_cast<Eigen::Index>(k)) = idx[k];
    }
    factor.lower = matrix_from(f.at("lower"));
    factor.diagonal = vector_from(f.at("diagonal"));
    if (j.at("ridge").get<double>() > 0.0) {
        return HotellingBaseline(vector_from(j.at("mean")), matrix_from(j.at("covariance")),
                                 j.at("t2_mean").get<double>(), j.at("t2_std").get<double>(),
                                 j.at("ridge").get<double>());
    }
    return HotellingBaseline(vector_from(j.at("mean")), matrix_from(j.at("covariance")), std::move(factor),
                             j.at("t2_mean").get<double>(), j.at("t2_std").get<double>());
}

json to_json(const Bundle& b) {
    json vars = json::array();
    for (const auto& v : b.variables) {
        vars.push_back({{"id", v.id},
                        {"name", v.name},
                        {"unit", v.unit},
                        {"min_limit", optional_number(v.min_limit)},
                        {"max_limit", optional_number(v.max_limit)}});
    }
    json windows = json::array();
    for (const auto& w : b.training.fault_windows) {
        windows.push_back({{"start", format_iso8601(w.start)}, {"end", format_iso8601(w.end)}, {"note", w.note}});
    }
    return {
        {"format", kBundleFormat},
        {"variables", std::move(vars)},
        {"som", to_json(b.model)},
        {"baseline", to_json(b.baseline)},
        {"hotelling", to_json(b.hotelling)},
        {"training",
         {{"rows_input", b.training.rows_input},
          {"rows_excluded", b.training.rows_excluded},
          {"rows_dropped", b.training.rows_dropped},
          {"rows_used", b.training.rows_used},
          {"fault_windows", std::move(windows)}}},
        {"config", b.config},
    };
}

void validate_bundle(const json& j) {
    Checker c;
    Checker::need(j.is_object(), "", "bundle must be a JSON object");
    c.version(j, "", "format", kBundleFormat);

    const json& vars = c.array(j, "", "variables");
    Checker::need(!vars.empty(), "/variables", "at least one variable required");
    for (std::size_t k = 0; k < vars.size(); ++k) {
        const std::string p = "/variables/" + std::to_string(k);
        c.string(vars[k], p, "id");
        c.string(vars[k], p, "name");
        c.string(vars[k], p, "unit");
        c.nullable_number(vars[k], p, "min_limit");
        c.nullable_number(vars[k], p, "max_limit");
    }

    const json& baseline = c.object(j, "", "baseline");
    const json& stats = c.array(baseline, "/baseline", "norm_stats");
    Checker::need(stats.size() == vars.size(), "/baseline/norm_stats", "one entry per variable required");
    std::size_t active = 0;
    for (std::size_t k = 0; k < stats.size(); ++k) {
        const std::string p = "/baseline/norm_stats/" + std::to_string(k);
        c.string(stats[k], p, "id");
        Checker::need(stats[k]["id"] == vars[k]["id"], p + "/id", "does not match /variables");
        c.boolean(stats[k], p, "active");
        c.number(stats[k], p, "offset");
        const double scale = c.number(stats[k], p, "scale");
        Checker::need(scale > 0.0, p + "/scale", "must be positive");
        active += stats[k]["active"].get<bool>() ? 1 : 0;
    }
    Checker::need(active >= 1, "/baseline/norm_stats", "no active variable");

    const json& som = c.object(j, "", "som");
    c.version(som, "/som", "version", kSomFormat);
    const json& topo = c.object(som, "/som", "topology");
    const auto rows = c.count(topo, "/som/topology", "rows");
    const auto cols = c.count(topo, "/som/topology", "cols");
    Checker::need(rows >= 1 && cols >= 1, "/som/topology", "dimensions must be positive");
    Checker::need(c.number(som, "/som", "sigma_final") > 0.0, "/som/sigma_final", "must be positive");
    c.matrix(c.field(som, "/som", "codebook"), "/som/codebook", rows * cols, active);
    const json& meta = c.object(som, "/som", "trainingMeta");
    c.count(meta, "/som/trainingMeta", "epochs");
    c.number(meta, "/som/trainingMeta", "final_distortion");
    c.string(meta, "/som/trainingMeta", "data_fingerprint");
    c.count(meta, "/som/trainingMeta", "rows_used");
    c.boolean(meta, "/som/trainingMeta", "random_init");

    Checker::need(c.number(baseline, "/baseline", "dm_delta") > 0.0, "/baseline/dm_delta", "must be positive");
    c.number(baseline, "/baseline", "kpi_mean");
    Checker::need(c.number(baseline, "/baseline", "kpi_std") >= 0.0, "/baseline/kpi_std", "must be non-negative");
    c.number(baseline, "/baseline", "lcl");
    c.numbers(c.field(baseline, "/baseline", "contribution_baseline"), "/baseline/contribution_baseline", active);
    const json& filter = c.object(baseline, "/baseline", "filter");
    Checker::need(c.count(filter, "/baseline/filter", "window") >= 1, "/baseline/filter/window", "must be >= 1");
    const double lambda = c.number(filter, "/baseline/filter", "lambda");
    Checker::need(lambda > 0.0 && lambda < 1.0, "/baseline/filter/lambda", "must lie in (0, 1)");
    c.count(baseline, "/baseline", "warmup_discarded");

    const json& hot = c.object(j, "", "hotelling");
    c.version(hot, "/hotelling", "version", kHotellingFormat);
    c.numbers(c.field(hot, "/hotelling", "mean"), "/hotelling/mean", active);
    c.matrix(c.field(hot, "/hotelling", "covariance"), "/hotelling/covariance", active, active);
    c.number(hot, "/hotelling", "t2_mean");
    Checker::need(c.number(hot, "/hotelling", "t2_std") >= 0.0, "/hotelling/t2_std", "must be non-negative");
    c.number(hot, "/hotelling", "ucl");
    c.number(hot, "/hotelling", "lcl");
    Checker::need(c.number(hot, "/hotelling", "ridge") >= 0.0, "/hotelling/ridge", "must be non-negative");
    if (hot.contains("factor")) {
        const json& f = c.object(hot, "/hotelling", "factor");
        const json& perm = c.field(f, "/hotelling/factor", "permutation");
        c.numbers(perm, "/hotelling/factor/permutation", active);
        std::vector<bool> seen(active, false);
        for (std::size_t k = 0; k < active; ++k) {
            const std::string p = "/hotelling/factor/permutation/" + std::to_string(k);
            Checker::need(perm[k].is_number_integer() && perm[k].get<long long>() >= 0 &&
                              perm[k].get<std::size_t>() < active && !seen[perm[k].get<std::size_t>()],
                          p, "expected a permutation of 0 .. n-1");
            seen[perm[k].get<std::size_t>()] = true;
        }
        c.matrix(c.field(f, "/hotelling/factor", "lower"), "/hotelling/factor/lower", active, active);
        const json& diag = c.field(f, "/hotelling/factor", "diagonal");
        c.numbers(diag, "/hotelling/factor/diagonal", active);
        for (std::size_t k = 0; k < active; ++k) {
            Checker::need(diag[k].get<double>() > 0.0, "/hotelling/factor/diagonal/" + std::to_string(k),
                          "must be positive");
        }
    }

    const json& training = c.object(j, "", "training");
    for (const char* key : {"rows_input", "rows_excluded", "rows_dropped", "rows_used"}) {
        c.count(training, "/training", key);
    }
    const json& windows = c.array(training, "/training", "fault_windows");
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const std::string p = "/training/fault_windows/" + std::to_string(k);
        for (const char* key : {"start", "end", "note"}) {
            c.string(windows[k], p, key);
        }
        for (const char* key : {"start", "end"}) {
            Checker::need(parse_iso8601(windows[k][key].get<std::string>()).has_value(), p + "/" + key,
                          "expected an ISO-8601 timestamp");
        }
    }
    c.string(j, "", "config");
}

Bundle bundle_from_json(const json& j) {
    validate_bundle(j);
    std::vector<VariableInfo> vars;
    for (const auto& v : j["variables"]) {
        vars.push_back({v["id"].get<std::string>(), v["name"].get<std::string>(), v["unit"].get<std::string>(),
                        number_or_null(v["min_limit"]), number_or_null(v["max_limit"])});
    }
    TrainingSummary training;
    const json& t = j["training"];
    training.rows_input = t["rows_input"].get<std::size_t>();
    training.rows_excluded = t["rows_excluded"].get<std::size_t>();
    training.rows_dropped = t["rows_dropped"].get<std::size_t>();
    training.rows_used = t["rows_used"].get<std::size_t>();
    for (const auto& w : t["fault_windows"]) {
        training.fault_windows.push_back({*parse_iso8601(w["start"].get<std::string>()),
                                          *parse_iso8601(w["end"].get<std::string>()),
                                          w["note"].get<std::string>()});
    }
    return Bundle{std::move(vars),
                  som_from_json(j["som"]),
                  baseline_from_json(j["baseline"]),
                  hotelling_from_json(j["hotelling"]),
                  std::move(training),
                  j["config"].get<std::string>()};
}

std::string serialize_bundle(const Bundle& bundle) {
    return to_json(bundle).dump(2) + "\n";
}

Bundle read_bundle_file(const std::string& path) {
    const std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::InvalidInput, path + ": not valid JSON (" + e.what() + ")");
    }
    try {
        return bundle_from_json(j);
    } catch (const Error& e) {
        fail(e.kind(), path + ": " + e.what());
    }
}

}  // namespace somcm
