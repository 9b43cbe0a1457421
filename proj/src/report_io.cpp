#include "copcp/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace copcp {

using nlohmann::json;

namespace {

// nlohmann writes non-finite doubles as null
double number_or_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where, "expected a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw ConfigError(key, "unknown key '" + key + "' in " + where);
}

template <class T>
T typed(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "wrong value type " + j.dump());
    }
}

json curve_json(const ValidityCurve& c) { return {{"grid", c.grid}, {"coverage", c.coverage}}; }

ValidityCurve curve_from(const json& j) {
    return {j.at("grid").get<std::vector<double>>(), j.at("coverage").get<std::vector<double>>()};
}

}  // namespace

json to_json(const RegressorSpec& spec) {
    return {{"kind", std::string(to_string(spec.kind))},
            {"widths", spec.widths},
            {"dropout", spec.dropout},
            {"epochs", spec.epochs},
            {"lr", spec.lr},
            {"batch", spec.batch},
            {"k", spec.k},
            {"l2", spec.l2}};
}

RegressorSpec regressor_spec_from_json(const json& j) {
    reject_unknown(j, {"kind", "widths", "dropout", "epochs", "lr", "batch", "k", "l2"}, "regressor");
    RegressorSpec spec;
    try {
        if (j.contains("kind")) spec.kind = regressor_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("widths")) spec.widths = j.at("widths").get<std::vector<int>>();
        if (j.contains("dropout")) spec.dropout = j.at("dropout").get<double>();
        if (j.contains("epochs")) spec.epochs = j.at("epochs").get<int>();
        if (j.contains("lr")) spec.lr = j.at("lr").get<double>();
        if (j.contains("batch")) spec.batch = j.at("batch").get<int>();
        if (j.contains("k")) spec.k = j.at("k").get<int>();
        if (j.contains("l2")) spec.l2 = j.at("l2").get<double>();
        spec.validate();
    } catch (const json::exception& e) {
        throw ConfigError("regressor", e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("regressor", e.detail());
    }
    return spec;
}

json to_json(const ExperimentConfig& c) {
    json copulas = json::array();
    for (auto k : c.copulas) copulas.push_back(std::string(to_string(k)));
    return {{"dataset", c.dataset},
            {"targets", c.targets},
            {"regressor", to_json(c.regressor)},
            {"error_model", c.error_model ? to_json(*c.error_model) : json(nullptr)},
            {"beta", c.beta},
            {"copulas", copulas},
            {"gumbel_estimator", std::string(to_string(c.gumbel_estimator))},
            {"ecdf_divisor", std::string(to_string(c.ecdf_divisor))},
            {"grid", c.grid},
            {"efficiency_epsilon", c.efficiency_epsilon},
            {"folds", c.folds},
            {"calibration_fraction", c.calibration_fraction},
            {"seed", c.seed},
            {"output_dir", c.output_dir}};
}

ExperimentConfig config_from_json(const json& j) {
    reject_unknown(j,
                   {"dataset", "targets", "regressor", "error_model", "beta", "copulas", "gumbel_estimator",
                    "ecdf_divisor", "grid", "efficiency_epsilon", "folds", "calibration_fraction", "seed",
                    "output_dir"},
                   "config");
    ExperimentConfig c;
    if (j.contains("dataset")) c.dataset = typed<std::string>(j.at("dataset"), "dataset");
    if (j.contains("targets")) c.targets = typed<std::vector<std::string>>(j.at("targets"), "targets");
    if (j.contains("regressor")) c.regressor = regressor_spec_from_json(j.at("regressor"));
    if (j.contains("error_model")) {
        const auto& e = j.at("error_model");
        try {
            c.error_model = e.is_null() ? std::nullopt : std::optional(regressor_spec_from_json(e));
        } catch (const ConfigError& err) {
            throw ConfigError("error_model", err.message());
        }
    }
    if (j.contains("beta")) c.beta = typed<double>(j.at("beta"), "beta");
    if (j.contains("copulas")) {
        c.copulas.clear();
        for (const auto& name : typed<std::vector<std::string>>(j.at("copulas"), "copulas")) {
            try {
                c.copulas.push_back(copula_kind_from_string(name));
            } catch (const Error& e) {
                throw ConfigError("copulas", e.detail());
            }
        }
    }
    try {
        if (j.contains("gumbel_estimator"))
            c.gumbel_estimator =
                gumbel_estimator_from_string(typed<std::string>(j.at("gumbel_estimator"), "gumbel_estimator"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("gumbel_estimator", e.detail());
    }
    try {
        if (j.contains("ecdf_divisor"))
            c.ecdf_divisor = ecdf_divisor_from_string(typed<std::string>(j.at("ecdf_divisor"), "ecdf_divisor"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("ecdf_divisor", e.detail());
    }
    if (j.contains("grid")) c.grid = typed<std::vector<double>>(j.at("grid"), "grid");
    if (j.contains("efficiency_epsilon"))
        c.efficiency_epsilon = typed<double>(j.at("efficiency_epsilon"), "efficiency_epsilon");
    if (j.contains("folds")) c.folds = typed<int>(j.at("folds"), "folds");
    if (j.contains("calibration_fraction"))
        c.calibration_fraction = typed<double>(j.at("calibration_fraction"), "calibration_fraction");
    if (j.contains("seed")) c.seed = typed<std::uint64_t>(j.at("seed"), "seed");
    if (j.contains("output_dir")) c.output_dir = typed<std::string>(j.at("output_dir"), "output_dir");

    try {
        c.validate();
    } catch (const Error& e) {
        // validate() reports "<field>: <reason>"
        const std::string& msg = e.detail();
        const auto colon = msg.find(": ");
        if (colon == std::string::npos) throw ConfigError("config", msg);
        throw ConfigError(msg.substr(0, colon), msg.substr(colon + 2));
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open file", path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", e.what(), path.string());
    }
    try {
        return config_from_json(j);
    } catch (const ConfigError& e) {
        std::size_t line = 1;
        const auto pos = text.find("\"" + e.key() + "\"");
        if (pos != std::string::npos)
            line += static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
        throw ConfigError(e.key(), e.message(), path.string() + ":" + std::to_string(line));
    }
}

json to_json(const ExperimentReport& r) {
    json folds = json::array();
    for (const auto& f : r.folds) {
        json copulas = json::array();
        for (const auto& c : f.copulas) {
            copulas.push_back({{"copula", std::string(to_string(c.copula))},
                               {"validity_gap", c.gap},
                               {"median_volume", c.median_volume},
                               {"theta", c.theta ? json(*c.theta) : json(nullptr)},
                               {"warning", c.warning},
                               {"curve", curve_json(c.curve)}});
        }
        folds.push_back({{"fold", f.fold},
                         {"train_rows", f.train_rows},
                         {"calib_rows", f.calib_rows},
                         {"test_rows", f.test_rows},
                         {"target_mean", f.target_mean},
                         {"target_std", f.target_std},
                         {"seconds", f.seconds},
                         {"copulas", copulas}});
    }
    json summary = json::array();
    for (const auto& s : r.summary) {
        summary.push_back({{"copula", std::string(to_string(s.copula))},
                           {"validity_gap_mean", s.gap_mean},
                           {"validity_gap_std", s.gap_std},
                           {"median_volume_mean", s.volume_mean},
                           {"median_volume_std", s.volume_std},
                           {"mean_curve", curve_json(s.mean_curve)}});
    }
    return {{"config", to_json(r.config)},
            {"dataset", {{"rows", r.rows}, {"features", r.features}, {"targets", r.target_names}}},
            {"fold_count", r.folds.size()},
            {"folds", folds},
            {"summary", summary},
            {"runtime_seconds", r.seconds}};
}

ExperimentReport report_from_json(const json& j) {
    ExperimentReport r;
    try {
        r.config = config_from_json(j.at("config"));
        r.rows = j.at("dataset").at("rows").get<Eigen::Index>();
        r.features = j.at("dataset").at("features").get<Eigen::Index>();
        r.target_names = j.at("dataset").at("targets").get<std::vector<std::string>>();
        for (const auto& f : j.at("folds")) {
            FoldResult fold;
            fold.fold = f.at("fold").get<int>();
            fold.train_rows = f.at("train_rows").get<Eigen::Index>();
            fold.calib_rows = f.at("calib_rows").get<Eigen::Index>();
            fold.test_rows = f.at("test_rows").get<Eigen::Index>();
            fold.target_mean = f.at("target_mean").get<std::vector<double>>();
            fold.target_std = f.at("target_std").get<std::vector<double>>();
            fold.seconds = f.at("seconds").get<double>();
            for (const auto& c : f.at("copulas")) {
                CopulaFoldResult res;
                res.copula = copula_kind_from_string(c.at("copula").get<std::string>());
                res.gap = c.at("validity_gap").get<double>();
                res.median_volume = number_or_inf(c.at("median_volume"));
                if (!c.at("theta").is_null()) res.theta = c.at("theta").get<double>();
                res.warning = c.at("warning").get<std::string>();
                res.curve = curve_from(c.at("curve"));
                fold.copulas.push_back(std::move(res));
            }
            r.folds.push_back(std::move(fold));
        }
        for (const auto& s : j.at("summary")) {
            CopulaSummary sum;
            sum.copula = copula_kind_from_string(s.at("copula").get<std::string>());
            sum.gap_mean = s.at("validity_gap_mean").get<double>();
            sum.gap_std = s.at("validity_gap_std").get<double>();
            sum.volume_mean = number_or_inf(s.at("median_volume_mean"));
            sum.volume_std = number_or_inf(s.at("median_volume_std"));
            sum.mean_curve = curve_from(s.at("mean_curve"));
            r.summary.push_back(std::move(sum));
        }
        r.seconds = j.at("runtime_seconds").get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed report: ") + e.what());
    }
    return r;
}

void write_curves_csv(const std::filesystem::path& path, const ExperimentReport& report) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.precision(17);
    std::ostringstream eps;
    eps << report.config.efficiency_epsilon;
    out << "fold,copula,epsilon_g,coverage,median_volume_at_" << eps.str() << '\n';
    for (const auto& f : report.folds)
        for (const auto& c : f.copulas)
            for (std::size_t g = 0; g < c.curve.grid.size(); ++g)
                out << f.fold << ',' << to_string(c.copula) << ',' << c.curve.grid[g] << ',' << c.curve.coverage[g]
                    << ',' << c.median_volume << '\n';
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

struct Canvas {
    double width = 480, height = 400, left = 60, right = 20, top = 30, bottom = 50;
    double px(double x, double lo, double hi) const { return left + (x - lo) / (hi - lo) * (width - left - right); }
    double py(double y, double lo, double hi) const {
        return height - bottom - (y - lo) / (hi - lo) * (height - top - bottom);
    }
};

std::string svg_open(const Canvas& c, const std::string& title) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width << "\" height=\"" << c.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << c.width / 2 << "\" y=\"18\" text-anchor=\"middle\">" << title << "</text>\n";
    return s.str();
}

}  // namespace

std::string validity_svg(const ExperimentReport& report) {
    const Canvas c;
    std::ostringstream s;
    s.precision(6);
    s << svg_open(c, "Validity (fold average)");
    // axes, both in [0, 1]
    s << "<line x1=\"" << c.px(0, 0, 1) << "\" y1=\"" << c.py(0, 0, 1) << "\" x2=\"" << c.px(1, 0, 1) << "\" y2=\""
      << c.py(0, 0, 1) << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << c.px(0, 0, 1) << "\" y1=\"" << c.py(0, 0, 1) << "\" x2=\"" << c.px(0, 0, 1) << "\" y2=\""
      << c.py(1, 0, 1) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        s << "<text x=\"" << c.px(v, 0, 1) << "\" y=\"" << c.py(0, 0, 1) + 16 << "\" text-anchor=\"middle\">" << v
          << "</text>\n";
        s << "<text x=\"" << c.px(0, 0, 1) - 6 << "\" y=\"" << c.py(v, 0, 1) + 4 << "\" text-anchor=\"end\">" << v
          << "</text>\n";
    }
    s << "<text x=\"" << c.width / 2 << "\" y=\"" << c.height - 12
      << "\" text-anchor=\"middle\">confidence 1 - epsilon_g</text>\n";
    s << "<text x=\"16\" y=\"" << c.height / 2 << "\" transform=\"rotate(-90 16 " << c.height / 2
      << ")\" text-anchor=\"middle\">empirical coverage</text>\n";
    s << "<line x1=\"" << c.px(0, 0, 1) << "\" y1=\"" << c.py(0, 0, 1) << "\" x2=\"" << c.px(1, 0, 1) << "\" y2=\""
      << c.py(1, 0, 1) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t k = 0; k < report.summary.size(); ++k) {
        const auto& sum = report.summary[k];
        const char* color = kPalette[k % std::size(kPalette)];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t g = 0; g < sum.mean_curve.grid.size(); ++g)
            s << c.px(1.0 - sum.mean_curve.grid[g], 0, 1) << ',' << c.py(sum.mean_curve.coverage[g], 0, 1) << ' ';
        s << "\"/>\n";
        s << "<text x=\"" << c.px(0.05, 0, 1) << "\" y=\"" << c.py(0.95, 0, 1) + 16.0 * static_cast<double>(k)
          << "\" fill=\"" << color << "\">" << to_string(sum.copula) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string volume_svg(const ExperimentReport& report) {
    const Canvas c;
    std::ostringstream s;
    s.precision(6);
    s << svg_open(c, "Box volumes at epsilon_g = " + std::to_string(report.config.efficiency_epsilon).substr(0, 4));

    struct Stats {
        double lo, q1, med, q3, hi;
    };
    std::vector<Stats> stats;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (std::size_t k = 0; k < report.config.copulas.size(); ++k) {
        std::vector<double> v;
        for (const auto& f : report.folds)
            for (double x : f.copulas[k].volumes)
                if (std::isfinite(x)) v.push_back(x);
        // reports read back from JSON only carry fold medians
        if (v.empty())
            for (const auto& f : report.folds)
                if (std::isfinite(f.copulas[k].median_volume)) v.push_back(f.copulas[k].median_volume);
        if (v.empty()) v.push_back(0.0);
        std::ranges::sort(v);
        const auto q = [&](double p) {
            const double pos = p * static_cast<double>(v.size() - 1);
            const auto i = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(i);
            return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
        };
        const double q1 = q(0.25), q3 = q(0.75), iqr = q3 - q1;
        const double lo = *std::ranges::find_if(v, [&](double x) { return x >= q1 - 1.5 * iqr; });
        const double hi = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= q3 + 1.5 * iqr; });
        stats.push_back({lo, q1, q(0.5), q3, hi});
        ymin = std::min(ymin, lo);
        ymax = std::max(ymax, hi);
    }
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    s << "<line x1=\"" << c.left << "\" y1=\"" << c.py(ymin, ymin, ymax) << "\" x2=\"" << c.left << "\" y2=\""
      << c.py(ymax, ymin, ymax) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = ymin + (ymax - ymin) * t / 4.0;
        s << "<text x=\"" << c.left - 6 << "\" y=\"" << c.py(v, ymin, ymax) + 4 << "\" text-anchor=\"end\">" << v
          << "</text>\n";
    }
    const double slot = (c.width - c.left - c.right) / static_cast<double>(std::max<std::size_t>(stats.size(), 1));
    for (std::size_t k = 0; k < stats.size(); ++k) {
        const auto& st = stats[k];
        const double cx = c.left + slot * (static_cast<double>(k) + 0.5);
        const double w = slot * 0.3;
        const char* color = kPalette[k % std::size(kPalette)];
        s << "<line x1=\"" << cx << "\" y1=\"" << c.py(st.lo, ymin, ymax) << "\" x2=\"" << cx << "\" y2=\""
          << c.py(st.hi, ymin, ymax) << "\" stroke=\"" << color << "\"/>\n";
        s << "<rect x=\"" << cx - w << "\" y=\"" << c.py(st.q3, ymin, ymax) << "\" width=\"" << 2 * w
          << "\" height=\"" << c.py(st.q1, ymin, ymax) - c.py(st.q3, ymin, ymax) << "\" fill=\"white\" stroke=\""
          << color << "\"/>\n";
        s << "<line x1=\"" << cx - w << "\" y1=\"" << c.py(st.med, ymin, ymax) << "\" x2=\"" << cx + w << "\" y2=\""
          << c.py(st.med, ymin, ymax) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << cx << "\" y=\"" << c.height - 20 << "\" text-anchor=\"middle\">"
          << to_string(report.config.copulas[k]) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_report_artifacts(const std::filesystem::path& dir, const ExperimentReport& report) {
    std::filesystem::create_directories(dir / "plots");
    const auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
        out << text;
    };
    write(dir / "report.json", to_json(report).dump(2) + "\n");
    write_curves_csv(dir / "curves.csv", report);
    write(dir / "plots" / "validity.svg", validity_svg(report));
    write(dir / "plots" / "volumes.svg", volume_svg(report));
}

std::string format_summary(const ExperimentReport& report) {
    std::ostringstream s;
    s << "folds: " << report.folds.size() << ", rows: " << report.rows << ", targets: " << report.target_names.size()
      << "\n";
    char line[160];
    char volume_header[64];
    std::snprintf(volume_header, sizeof volume_header, "median volume (eps_g=%g)", report.config.efficiency_epsilon);
    std::snprintf(line, sizeof line, "%-12s %22s %26s\n", "copula", "validity gap (%)", volume_header);
    s << line;
    for (const auto& sum : report.summary) {
        std::snprintf(line, sizeof line, "%-12s %12.2f +/- %-6.2f %14.4g +/- %-9.3g\n",
                      std::string(to_string(sum.copula)).c_str(), sum.gap_mean, sum.gap_std, sum.volume_mean,
                      sum.volume_std);
        s << line;
    }
    return s.str();
}

}  // namespace copcp
