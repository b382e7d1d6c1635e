#include "grainrisk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <stdexcept>

#include "grainrisk/core.hpp"
#include "grainrisk/csv.hpp"
#include "grainrisk/network.hpp"
#include "grainrisk/stats.hpp"
#include "grainrisk/svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace grainrisk {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(trim(part));
  return out;
}

int parse_max_features(const std::string& spec, int dims) {
  if (spec == "third") return std::max(1, dims / 3);
  if (spec == "sqrt")
    return std::max(1, static_cast<int>(std::lround(std::sqrt(dims))));
  if (spec == "all") return dims;
  return std::max(1, std::stoi(spec));
}

}  // namespace

void RunConfig::validate() const {
  if (prices_path.empty()) throw std::runtime_error("config: prices path missing");
  if (!fs::exists(prices_path))
    throw std::runtime_error("config: prices file does not exist: " + prices_path);
  for (const auto& f : factors)
    if (!fs::exists(f.path))
      throw std::runtime_error("config: factor file does not exist: " + f.path);
  if (window < 30) throw std::runtime_error("config: window must be >= 30");
  if (step < 1) throw std::runtime_error("config: step must be >= 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw std::runtime_error("config: split ratio must lie in (0,1)");
  if (ensemble.realizations < 1)
    throw std::runtime_error("config: ensemble size must be >= 1");
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));

    if (key == "prices") cfg.prices_path = value;
    else if (key == "pair") {
      // pair = group: futures_column, spot_column
      const auto colon = value.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": pair wants 'group: futures, spot'");
      const auto cols = split(value.substr(colon + 1), ',');
      if (cols.size() != 2)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": pair wants two column names");
      cfg.pairs.push_back({trim(value.substr(0, colon)), cols[0], cols[1]});
    } else if (key == "factors_daily")
      cfg.factors.push_back({value, Frequency::daily});
    else if (key == "factors_monthly")
      cfg.factors.push_back({value, Frequency::monthly});
    else if (key == "factors_annual")
      cfg.factors.push_back({value, Frequency::annual});
    else if (key == "out") cfg.out_dir = value;
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "threads") cfg.threads = std::stoi(value);
    else if (key == "iceemdan_realizations") cfg.ensemble.realizations = std::stoi(value);
    else if (key == "iceemdan_epsilon") cfg.ensemble.noise_scale = std::stod(value);
    else if (key == "sift_stop_rule")
      cfg.sift.stop_rule = value == "sd" ? SiftStopRule::sd_threshold : SiftStopRule::s_number;
    else if (key == "sift_s_number") cfg.sift.s_number = std::stoi(value);
    else if (key == "sift_sd_threshold") cfg.sift.sd_threshold = std::stod(value);
    else if (key == "sift_max_iterations") cfg.sift.max_sift_iterations = std::stoi(value);
    else if (key == "sift_mirror_extrema") cfg.sift.mirror_extrema = std::stoi(value);
    else if (key == "max_modes") cfg.sift.max_modes = std::stoi(value);
    else if (key == "gmm_clusters") cfg.classify.clusters = std::stoi(value);
    else if (key == "gmm_scale")
      cfg.classify.scale = value == "raw" ? RunLengthScale::raw : RunLengthScale::log_scale;
    else if (key == "gmm_restarts") cfg.classify.gmm.restarts = std::stoi(value);
    else if (key == "connect_mode")
      cfg.connect.mode = value == "gfevd" ? SpilloverMode::gfevd : SpilloverMode::r2_decomposed;
    else if (key == "connect_window") cfg.window = std::stoi(value);
    else if (key == "connect_step") cfg.step = std::stoi(value);
    else if (key == "connect_h") cfg.connect.horizon = std::stoi(value);
    else if (key == "connect_lags") cfg.connect.lags = std::stoi(value);
    else if (key == "connect_var_lags") cfg.connect.var_lags = std::stoi(value);
    else if (key == "forest_trees") {
      cfg.grid_trees.clear();
      for (const auto& v : split(value, ',')) cfg.grid_trees.push_back(std::stoi(v));
    } else if (key == "forest_depths") {
      cfg.grid_depths.clear();
      for (const auto& v : split(value, ',')) cfg.grid_depths.push_back(std::stoi(v));
    } else if (key == "forest_features") {
      cfg.grid_features = split(value, ',');
    } else if (key == "forest_min_leaf") cfg.min_leaf = std::stoi(value);
    else if (key == "split_ratio") cfg.split_ratio = std::stod(value);
    else if (key == "split_mode")
      cfg.split_mode = value == "chronological" ? SplitMode::chronological : SplitMode::random;
    else if (key == "permutation_importance")
      cfg.permutation_importance = value == "true" || value == "1";
    else
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
  }
  if (const char* env = std::getenv("GRAINRISK_OUT"); env && *env) cfg.out_dir = env;
  return cfg;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("digest: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[20];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json config_to_json(const RunConfig& cfg) {
  json j;
  j["prices"] = cfg.prices_path;
  json pairs = json::array();
  for (const auto& p : cfg.pairs)
    pairs.push_back({{"group", p.group}, {"futures", p.futures}, {"spot", p.spot}});
  j["pairs"] = pairs;
  json factors = json::array();
  for (const auto& f : cfg.factors)
    factors.push_back({{"path", f.path}, {"frequency", to_string(f.frequency)}});
  j["factors"] = factors;
  j["seed"] = cfg.seed;
  j["iceemdan"] = {{"realizations", cfg.ensemble.realizations},
                   {"epsilon", cfg.ensemble.noise_scale}};
  j["sift"] = {{"stop_rule", cfg.sift.stop_rule == SiftStopRule::sd_threshold
                                  ? "sd"
                                  : "s_number"},
               {"s_number", cfg.sift.s_number},
               {"sd_threshold", cfg.sift.sd_threshold},
               {"max_iterations", cfg.sift.max_sift_iterations},
               {"mirror_extrema", cfg.sift.mirror_extrema},
               {"max_modes", cfg.sift.max_modes}};
  j["gmm"] = {{"clusters", cfg.classify.clusters},
              {"scale", cfg.classify.scale == RunLengthScale::raw ? "raw" : "log"},
              {"restarts", cfg.classify.gmm.restarts}};
  j["connect"] = {{"mode", cfg.connect.mode == SpilloverMode::gfevd ? "gfevd" : "r2"},
                  {"window", cfg.window},
                  {"step", cfg.step},
                  {"horizon", cfg.connect.horizon},
                  {"lags", cfg.connect.lags}};
  j["forest"] = {{"trees", cfg.grid_trees},
                 {"depths", cfg.grid_depths},
                 {"features", cfg.grid_features},
                 {"min_leaf", cfg.min_leaf},
                 {"split_ratio", cfg.split_ratio},
                 {"split_mode", cfg.split_mode == SplitMode::chronological
                                    ? "chronological"
                                    : "random"}};
  return j;
}

/// Collects inputs/outputs of one stage and writes its manifest.
class StageWriter {
 public:
  StageWriter(const RunConfig& cfg, std::string stage)
      : cfg_(cfg), stage_(std::move(stage)), dir_(fs::path(cfg.out_dir) / stage_) {
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  void add_input(const std::string& path) { inputs_[path] = file_digest(path); }

  std::string path_of(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& content) {
    const std::string p = path_of(name);
    write_text_file(p, content);
    outputs_[name] = file_digest(p);
  }

  void finish() {
    json m;
    m["schema_version"] = 1;
    m["stage"] = stage_;
    m["seed"] = cfg_.seed;
    m["config"] = config_to_json(cfg_);
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    write_text_file((dir_ / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  const RunConfig& cfg_;
  std::string stage_;
  fs::path dir_;
  std::map<std::string, std::string> inputs_, outputs_;
};

std::string require_artifact(const RunConfig& cfg, const std::string& stage,
                             const std::string& name, const std::string& command) {
  const fs::path p = fs::path(cfg.out_dir) / stage / name;
  if (!fs::exists(p))
    throw std::runtime_error("missing artifact " + p.string() + "; run `grainrisk " +
                             command + "` first");
  return p.string();
}

std::string bool_cell(bool b) { return b ? "1" : "0"; }

// ---- returns ---------------------------------------------------------------

struct ReturnsPanel {
  std::vector<Date> dates;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [series][t]
};

ReturnsPanel compute_returns(const RunConfig& cfg) {
  const TimeSeriesFrame prices = load_csv(cfg.prices_path, Frequency::daily);
  ReturnsPanel panel;
  panel.names = prices.names;
  for (std::size_t s = 0; s < prices.series_count(); ++s) {
    const ReturnSeries r = log_returns(prices.dates, prices.values[s]);
    if (s == 0) panel.dates = r.dates;
    panel.values.push_back(r.values);
  }
  return panel;
}

ReturnsPanel load_returns_artifact(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  ReturnsPanel panel;
  panel.names.assign(t.header.begin() + 1, t.header.end());
  panel.values.assign(panel.names.size(), {});
  for (const auto& row : t.rows) {
    panel.dates.push_back(Date::parse(row[0]));
    for (std::size_t c = 1; c < row.size(); ++c)
      panel.values[c - 1].push_back(std::stod(row[c]));
  }
  return panel;
}

std::string returns_to_csv(const ReturnsPanel& panel) {
  csv::Table t;
  t.header.push_back("date");
  for (const auto& n : panel.names) t.header.push_back(n);
  for (std::size_t i = 0; i < panel.dates.size(); ++i) {
    std::vector<std::string> row{panel.dates[i].iso()};
    for (const auto& v : panel.values) row.push_back(csv::format_number(v[i]));
    t.rows.push_back(std::move(row));
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

// ---- connectedness table serialization -------------------------------------

std::string table_to_csv(const ConnectednessTable& t) {
  const int k = static_cast<int>(t.names.size());
  std::ostringstream os;
  os << "label";
  for (const auto& n : t.names) os << ',' << n;
  os << ",FROM\n";
  for (int i = 0; i < k; ++i) {
    os << t.names[i];
    for (int j = 0; j < k; ++j) os << ',' << csv::format_number(t.contributions(i, j));
    os << ',' << csv::format_number(t.from(i)) << '\n';
  }
  os << "TO";
  for (int j = 0; j < k; ++j) os << ',' << csv::format_number(t.to(j));
  os << ",TCI\n";
  os << "NET";
  for (int j = 0; j < k; ++j) os << ',' << csv::format_number(t.net(j));
  os << ',' << csv::format_number(t.tci) << '\n';
  return os.str();
}

json table_to_json(const ConnectednessTable& t) {
  const int k = static_cast<int>(t.names.size());
  json j;
  j["names"] = t.names;
  auto matrix = [&](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < k; ++i) {
      json row = json::array();
      for (int c = 0; c < k; ++c) row.push_back(m(i, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto vec = [&](const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < k; ++i) out.push_back(v(i));
    return out;
  };
  j["contributions"] = matrix(t.contributions);
  j["npdc"] = matrix(t.npdc);
  j["r2"] = vec(t.r2);
  j["to"] = vec(t.to);
  j["from"] = vec(t.from);
  j["net"] = vec(t.net);
  j["tci"] = t.tci;
  return j;
}

}  // namespace

ConnectednessTable table_from_json_file(const std::string& path) {
  const json j = json::parse(read_text_file(path));
  ConnectednessTable t;
  t.names = j.at("names").get<std::vector<std::string>>();
  const int k = static_cast<int>(t.names.size());
  t.contributions.resize(k, k);
  t.npdc.resize(k, k);
  t.r2.resize(k);
  t.to.resize(k);
  t.from.resize(k);
  t.net.resize(k);
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < k; ++c) {
      t.contributions(i, c) = j.at("contributions")[i][c].get<double>();
      t.npdc(i, c) = j.at("npdc")[i][c].get<double>();
    }
    t.r2(i) = j.at("r2")[i].get<double>();
    t.to(i) = j.at("to")[i].get<double>();
    t.from(i) = j.at("from")[i].get<double>();
    t.net(i) = j.at("net")[i].get<double>();
  }
  t.tci = j.at("tci").get<double>();
  return t;
}

std::string component_label(const std::string& series, const RunConfig& cfg,
                            ComponentKind kind) {
  static constexpr char kScale[3] = {'S', 'M', 'L'};
  for (const auto& p : cfg.pairs) {
    if (p.futures == series || p.spot == series) {
      std::string label;
      label += static_cast<char>(std::toupper(static_cast<unsigned char>(p.group[0])));
      label += p.futures == series ? 'F' : 'S';
      label += kScale[static_cast<int>(kind)];
      return label;
    }
  }
  return series + "." + kScale[static_cast<int>(kind)];
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void cmd_stats(const RunConfig& cfg) {
  cfg.validate();
  StageWriter stage(cfg, "stats");
  stage.add_input(cfg.prices_path);

  const ReturnsPanel returns = compute_returns(cfg);
  stage.write("returns.csv", returns_to_csv(returns));

  std::ostringstream os;
  os << "series,max,min,mean,stddev,skewness,kurtosis,jarque_bera,jb_significant_1pct,"
        "adf_statistic,adf_significant_1pct\n";
  json jstats = json::array();
  for (std::size_t s = 0; s < returns.names.size(); ++s) {
    const StatsRow row = describe(returns.values[s]);
    os << returns.names[s] << ',' << csv::format_number(row.max) << ','
       << csv::format_number(row.min) << ',' << csv::format_number(row.mean) << ','
       << csv::format_number(row.stddev) << ',' << csv::format_number(row.skewness)
       << ',' << csv::format_number(row.kurtosis) << ','
       << csv::format_number(row.jarque_bera) << ',' << bool_cell(row.jb_significant_1pct)
       << ',' << csv::format_number(row.adf_statistic) << ','
       << bool_cell(row.adf_significant_1pct) << '\n';
    jstats.push_back({{"series", returns.names[s]},
                      {"max", row.max},
                      {"min", row.min},
                      {"mean", row.mean},
                      {"stddev", row.stddev},
                      {"skewness", row.skewness},
                      {"kurtosis", row.kurtosis},
                      {"jarque_bera", row.jarque_bera},
                      {"jb_significant_1pct", row.jb_significant_1pct},
                      {"adf_statistic", row.adf_statistic},
                      {"adf_significant_1pct", row.adf_significant_1pct}});
  }
  stage.write("stats.csv", os.str());
  stage.write("stats.json", json(jstats).dump(2) + "\n");
  stage.finish();
}

void cmd_decompose(const RunConfig& cfg) {
  cfg.validate();
  StageWriter stage(cfg, "decompose");
  const std::string returns_path = require_artifact(cfg, "stats", "returns.csv", "stats");
  stage.add_input(returns_path);
  const ReturnsPanel returns = load_returns_artifact(returns_path);

  for (std::size_t s = 0; s < returns.names.size(); ++s) {
    const std::string& name = returns.names[s];
    EnsembleConfig ens = cfg.ensemble;
    ens.seed = derive_seed(cfg.seed, "decompose:" + name);
    const IMFSet imfs = iceemdan(returns.values[s], cfg.sift, ens, cfg.threads);

    std::ostringstream os;
    os << "date";
    for (std::size_t m = 0; m < imfs.mode_count(); ++m) os << ",imf" << m + 1;
    os << ",residue\n";
    for (std::size_t t = 0; t < imfs.length(); ++t) {
      os << returns.dates[t].iso();
      for (const auto& mode : imfs.modes) os << ',' << csv::format_number(mode[t]);
      os << ',' << csv::format_number(imfs.residue[t]) << '\n';
    }
    stage.write("imf_" + name + ".csv", os.str());

    json meta;
    meta["series"] = name;
    meta["modes"] = imfs.mode_count();
    meta["length"] = imfs.length();
    meta["ensemble"] = {{"realizations", ens.realizations},
                        {"epsilon", ens.noise_scale},
                        {"seed", ens.seed}};
    meta["sift"] = {{"stop_rule", cfg.sift.stop_rule == SiftStopRule::sd_threshold
                                       ? "sd"
                                       : "s_number"},
                    {"s_number", cfg.sift.s_number},
                    {"sd_threshold", cfg.sift.sd_threshold},
                    {"max_iterations", cfg.sift.max_sift_iterations},
                    {"mirror_extrema", cfg.sift.mirror_extrema}};
    meta["reconstruction_error"] = imfs.reconstruction_error(returns.values[s]);
    stage.write("imf_" + name + ".json", meta.dump(2) + "\n");
  }
  stage.finish();
}

namespace {

struct DecomposedSeries {
  std::vector<Date> dates;
  std::vector<double> original;
  IMFSet imfs;
};

DecomposedSeries load_imf_artifact(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  DecomposedSeries out;
  const std::size_t n_modes = t.header.size() - 2;  // date, imf*, residue
  out.imfs.modes.assign(n_modes, {});
  for (const auto& row : t.rows) {
    out.dates.push_back(Date::parse(row[0]));
    double total = 0.0;
    for (std::size_t m = 0; m < n_modes; ++m) {
      const double v = std::stod(row[1 + m]);
      out.imfs.modes[m].push_back(v);
      total += v;
    }
    const double res = std::stod(row.back());
    out.imfs.residue.push_back(res);
    out.original.push_back(total + res);
  }
  return out;
}

}  // namespace

void cmd_reconstruct(const RunConfig& cfg) {
  cfg.validate();
  StageWriter stage(cfg, "reconstruct");
  const ReturnsPanel returns = load_returns_artifact(
      require_artifact(cfg, "stats", "returns.csv", "stats"));

  std::ostringstream comp_stats;
  comp_stats << "component,series,max,min,mean,stddev,skewness,kurtosis,jarque_bera,"
                "jb_significant_1pct,adf_statistic,adf_significant_1pct\n";

  for (std::size_t s = 0; s < returns.names.size(); ++s) {
    const std::string& name = returns.names[s];
    const std::string imf_path =
        require_artifact(cfg, "decompose", "imf_" + name + ".csv", "decompose");
    stage.add_input(imf_path);
    const DecomposedSeries dec = load_imf_artifact(imf_path);

    ClassifyConfig ccfg = cfg.classify;
    ccfg.gmm.seed = derive_seed(cfg.seed, "reconstruct:" + name);
    const ComponentSet comp = classify_components(dec.imfs, ccfg);
    const auto measures = measure_modes(dec.imfs, returns.values[s]);

    std::ostringstream os;
    os << "mode,mean_period,spearman_rho,spearman_significance,variance_share_pct,"
          "run_length,group\n";
    static constexpr const char* kGroup[3] = {"STC", "MTC", "LTC"};
    for (std::size_t m = 0; m < measures.size(); ++m) {
      os << "imf" << m + 1 << ',';
      if (measures[m].mean_period) os << csv::format_number(*measures[m].mean_period);
      os << ',' << csv::format_number(measures[m].correlation.rho) << ','
         << (measures[m].correlation.significant_1pct
                 ? "***"
                 : (measures[m].correlation.significant_5pct ? "**" : ""))
         << ',' << csv::format_number(100.0 * measures[m].variance_share) << ','
         << measures[m].run_length << ','
         << kGroup[static_cast<int>(comp.membership[m])] << '\n';
    }
    {
      const SpearmanResult res_corr = spearman(dec.imfs.residue, returns.values[s]);
      os << "residue,," << csv::format_number(res_corr.rho) << ','
         << (res_corr.significant_1pct ? "***" : (res_corr.significant_5pct ? "**" : ""))
         << ','
         << csv::format_number(100.0 * variance_share(dec.imfs.residue,
                                                      returns.values[s]))
         << ",,\n";
    }
    stage.write("measures_" + name + ".csv", os.str());

    std::ostringstream cs;
    cs << "date,STC,MTC,LTC\n";
    for (std::size_t t = 0; t < dec.dates.size(); ++t)
      cs << dec.dates[t].iso() << ',' << csv::format_number(comp.stc[t]) << ','
         << csv::format_number(comp.mtc[t]) << ',' << csv::format_number(comp.ltc[t])
         << '\n';
    stage.write("components_" + name + ".csv", cs.str());

    const std::vector<std::pair<const char*, const std::vector<double>*>> comps = {
        {"STC", &comp.stc}, {"MTC", &comp.mtc}, {"LTC", &comp.ltc}};
    for (const auto& [label, series] : comps) {
      const StatsRow row = describe(*series);
      comp_stats << label << ',' << name << ',' << csv::format_number(row.max) << ','
                 << csv::format_number(row.min) << ',' << csv::format_number(row.mean)
                 << ',' << csv::format_number(row.stddev) << ','
                 << csv::format_number(row.skewness) << ','
                 << csv::format_number(row.kurtosis) << ','
                 << csv::format_number(row.jarque_bera) << ','
                 << bool_cell(row.jb_significant_1pct) << ','
                 << csv::format_number(row.adf_statistic) << ','
                 << bool_cell(row.adf_significant_1pct) << '\n';
    }
  }
  stage.write("component_stats.csv", comp_stats.str());
  stage.finish();
}

namespace {

struct Components {
  std::vector<Date> dates;
  std::vector<double> stc, mtc, ltc;
  const std::vector<double>& of(ComponentKind kind) const {
    switch (kind) {
      case ComponentKind::short_term: return stc;
      case ComponentKind::medium_term: return mtc;
      default: return ltc;
    }
  }
};

Components load_components_artifact(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  Components out;
  for (const auto& row : t.rows) {
    out.dates.push_back(Date::parse(row[0]));
    out.stc.push_back(std::stod(row[1]));
    out.mtc.push_back(std::stod(row[2]));
    out.ltc.push_back(std::stod(row[3]));
  }
  return out;
}

std::string rolling_to_long_csv(const RollingResult& rolling,
                                const std::vector<Date>& dates) {
  std::ostringstream os;
  os << "date,metric,from,to,value\n";
  for (std::size_t w = 0; w < rolling.tables.size(); ++w) {
    const auto& t = rolling.tables[w];
    const std::string date = dates[rolling.window_ends[w]].iso();
    os << date << ",tci,,," << csv::format_number(t.tci) << '\n';
    const int k = static_cast<int>(t.names.size());
    for (int i = 0; i < k; ++i) {
      os << date << ",to," << t.names[i] << ",," << csv::format_number(t.to(i)) << '\n';
      os << date << ",from,," << t.names[i] << ',' << csv::format_number(t.from(i))
         << '\n';
      os << date << ",net," << t.names[i] << ",," << csv::format_number(t.net(i))
         << '\n';
    }
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < i; ++j)
        os << date << ",npdc," << t.names[j] << ',' << t.names[i] << ','
           << csv::format_number(t.npdc(i, j)) << '\n';
  }
  return os.str();
}

std::string tci_series_csv(const RollingResult& rolling, const std::vector<Date>& dates) {
  std::ostringstream os;
  os << "date,tci\n";
  for (std::size_t w = 0; w < rolling.tables.size(); ++w)
    os << dates[rolling.window_ends[w]].iso() << ','
       << csv::format_number(rolling.tables[w].tci) << '\n';
  return os.str();
}

std::string heatmap_matrix_csv(const ConnectednessTable& t) {
  std::ostringstream os;
  os << "label";
  for (const auto& n : t.names) os << ',' << n;
  os << '\n';
  const int k = static_cast<int>(t.names.size());
  for (int i = 0; i < k; ++i) {
    os << t.names[i];
    for (int j = 0; j < k; ++j) os << ',' << csv::format_number(t.contributions(i, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace

void cmd_connect(const RunConfig& cfg) {
  cfg.validate();
  StageWriter stage(cfg, "connect");
  const ReturnsPanel returns = load_returns_artifact(
      require_artifact(cfg, "stats", "returns.csv", "stats"));

  std::map<std::string, Components> components;
  for (const auto& name : returns.names) {
    const std::string path =
        require_artifact(cfg, "reconstruct", "components_" + name + ".csv", "reconstruct");
    stage.add_input(path);
    components.emplace(name, load_components_artifact(path));
  }
  const std::vector<Date>& dates = components.begin()->second.dates;

  static constexpr ComponentKind kKinds[3] = {ComponentKind::short_term,
                                              ComponentKind::medium_term,
                                              ComponentKind::long_term};
  static constexpr const char* kScaleName[3] = {"STC", "MTC", "LTC"};

  auto emit_panel = [&](const std::string& base, const Panel& panel) {
    const ConnectednessTable static_table = connectedness_table(panel, cfg.connect);
    stage.write("static_" + base + ".csv", table_to_csv(static_table));
    stage.write("static_" + base + ".json", table_to_json(static_table).dump(2) + "\n");

    const RollingResult rolling = rolling_connectedness(panel, cfg.window, cfg.step,
                                                        cfg.connect, cfg.threads);
    stage.write("rolling_" + base + ".csv", rolling_to_long_csv(rolling, dates));
    stage.write("tci_" + base + ".csv", tci_series_csv(rolling, dates));
    const ConnectednessTable avg = average_connectedness(rolling.tables);
    stage.write("average_" + base + ".csv", table_to_csv(avg));
    stage.write("average_" + base + ".json", table_to_json(avg).dump(2) + "\n");
  };

  // Cross-grain: one panel per timescale over all series.
  for (int scale = 0; scale < 3; ++scale) {
    Panel panel;
    panel.data.resize(dates.size(), returns.names.size());
    for (std::size_t s = 0; s < returns.names.size(); ++s) {
      panel.names.push_back(returns.names[s]);
      const auto& series = components.at(returns.names[s]).of(kKinds[scale]);
      for (std::size_t t = 0; t < series.size(); ++t) panel.data(t, s) = series[t];
    }
    emit_panel(std::string("cross_grain_") + kScaleName[scale], panel);
  }

  // Cross-timescale: one panel per pair group (or per series without pairs).
  struct GroupSpec {
    std::string name;
    std::vector<std::string> series;
  };
  std::vector<GroupSpec> groups;
  if (!cfg.pairs.empty()) {
    for (const auto& p : cfg.pairs) groups.push_back({p.group, {p.futures, p.spot}});
  } else {
    for (const auto& name : returns.names) groups.push_back({name, {name}});
  }
  for (const auto& g : groups) {
    Panel panel;
    panel.data.resize(dates.size(), g.series.size() * 3);
    int col = 0;
    for (const auto& series_name : g.series) {
      for (int scale = 0; scale < 3; ++scale) {
        panel.names.push_back(component_label(series_name, cfg, kKinds[scale]));
        const auto& series = components.at(series_name).of(kKinds[scale]);
        for (std::size_t t = 0; t < series.size(); ++t) panel.data(t, col) = series[t];
        ++col;
      }
    }
    emit_panel("cross_timescale_" + g.name, panel);
  }

  // All components: the static heatmap across every (series, scale) node.
  {
    Panel panel;
    panel.data.resize(dates.size(), returns.names.size() * 3);
    int col = 0;
    for (const auto& name : returns.names) {
      for (int scale = 0; scale < 3; ++scale) {
        panel.names.push_back(component_label(name, cfg, kKinds[scale]));
        const auto& series = components.at(name).of(kKinds[scale]);
        for (std::size_t t = 0; t < series.size(); ++t) panel.data(t, col) = series[t];
        ++col;
      }
    }
    const ConnectednessTable table = connectedness_table(panel, cfg.connect);
    stage.write("static_all_components.csv", table_to_csv(table));
    stage.write("static_all_components.json", table_to_json(table).dump(2) + "\n");
    stage.write("heatmap_matrix.csv", heatmap_matrix_csv(table));
    stage.write("heatmap.svg", render_heatmap_svg(table.names, table.contributions));
  }
  stage.finish();
}

void cmd_network(const RunConfig& cfg) {
  cfg.validate();
  StageWriter stage(cfg, "network");

  std::vector<std::string> bases;
  for (const char* scale : {"STC", "MTC", "LTC"})
    bases.push_back(std::string("cross_grain_") + scale);
  if (!cfg.pairs.empty()) {
    for (const auto& p : cfg.pairs) bases.push_back("cross_timescale_" + p.group);
  } else {
    const ReturnsPanel returns = load_returns_artifact(
        require_artifact(cfg, "stats", "returns.csv", "stats"));
    for (const auto& name : returns.names) bases.push_back("cross_timescale_" + name);
  }

  for (const std::string& base : bases) {
    for (const char* kind : {"static", "average"}) {
      const std::string table_path = require_artifact(
          cfg, "connect", std::string(kind) + "_" + base + ".json", "connect");
      stage.add_input(table_path);
      const ConnectednessTable table = table_from_json_file(table_path);
      const SpilloverNetwork net = build_network(table);
      const std::string stem = std::string(kind) + "_" + base;
      stage.write(stem + ".dot", to_dot(net));
      stage.write(stem + ".network.json", to_json(net) + "\n");
      stage.write(stem + ".edges.csv", to_csv(net));
    }
  }
  stage.finish();
}

namespace {

struct TciSeries {
  std::vector<Date> dates;
  std::vector<double> values;
};

TciSeries load_tci_artifact(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  TciSeries out;
  for (const auto& row : t.rows) {
    out.dates.push_back(Date::parse(row[0]));
    out.values.push_back(std::stod(row[1]));
  }
  return out;
}

}  // namespace

void cmd_drivers(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.factors.empty())
    throw std::runtime_error("drivers: no factor files configured");
  StageWriter stage(cfg, "drivers");

  std::vector<TimeSeriesFrame> factor_frames;
  for (const auto& f : cfg.factors) {
    stage.add_input(f.path);
    factor_frames.push_back(load_csv(f.path, f.frequency));
  }

  std::vector<std::string> targets;
  for (const char* scale : {"STC", "MTC", "LTC"})
    targets.push_back(std::string("cross_grain_") + scale);
  if (!cfg.pairs.empty()) {
    for (const auto& p : cfg.pairs) targets.push_back("cross_timescale_" + p.group);
  } else {
    const ReturnsPanel returns = load_returns_artifact(
        require_artifact(cfg, "stats", "returns.csv", "stats"));
    for (const auto& name : returns.names) targets.push_back("cross_timescale_" + name);
  }

  for (const std::string& target : targets) {
    const std::string tci_path =
        require_artifact(cfg, "connect", "tci_" + target + ".csv", "connect");
    stage.add_input(tci_path);
    const TciSeries tci = load_tci_artifact(tci_path);

    const TimeSeriesFrame aligned = align_forward_fill(factor_frames, tci.dates);
    // Target values on the aligned calendar (alignment may trim the start).
    std::vector<double> y;
    std::vector<std::vector<double>> x;
    {
      std::size_t ti = 0;
      for (std::size_t a = 0; a < aligned.dates.size(); ++a) {
        while (ti < tci.dates.size() && tci.dates[ti] < aligned.dates[a]) ++ti;
        if (ti >= tci.dates.size()) break;
        if (tci.dates[ti] == aligned.dates[a]) {
          y.push_back(tci.values[ti]);
          std::vector<double> row;
          for (const auto& col : aligned.values) row.push_back(col[a]);
          x.push_back(std::move(row));
        }
      }
    }

    const Dataset data =
        standardize_split(x, y, aligned.names, cfg.split_ratio, cfg.split_mode,
                          derive_seed(cfg.seed, "drivers:" + target));

    std::vector<ForestParams> grid;
    for (int trees : cfg.grid_trees)
      for (int depth : cfg.grid_depths)
        for (const auto& mf : cfg.grid_features) {
          ForestParams p;
          p.trees = trees;
          p.tree.max_depth = depth;
          p.tree.max_features = parse_max_features(mf, static_cast<int>(data.dims()));
          p.tree.min_leaf = cfg.min_leaf;
          grid.push_back(p);
        }

    const std::uint64_t seed = derive_seed(cfg.seed, "forest:" + target);
    const GridSearchResult search = grid_search(data, grid, seed, cfg.threads);
    const ForestModel model = fit_forest(data, search.best, seed, cfg.threads);
    const Metrics train = evaluate(model, data, data.train_indices);
    const Metrics test = evaluate(model, data, data.test_indices);

    json j;
    j["target"] = target;
    j["samples"] = data.rows();
    j["train_size"] = data.train_indices.size();
    j["test_size"] = data.test_indices.size();
    j["params"] = {{"trees", search.best.trees},
                   {"max_depth", search.best.tree.max_depth},
                   {"max_features", search.best.tree.max_features},
                   {"min_leaf", search.best.tree.min_leaf}};
    j["cv_mse"] = search.best_cv_mse;
    j["train"] = {{"mae", train.mae}, {"mse", train.mse}};
    j["test"] = {{"mae", test.mae}, {"mse", test.mse}};
    j["dropped_features"] = data.dropped_features;
    json imp = json::array();
    std::vector<std::size_t> order(data.dims());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return model.importance[a] > model.importance[b];
    });
    for (std::size_t i : order)
      imp.push_back({{"feature", data.feature_names[i]},
                     {"importance", model.importance[i]}});
    j["importance"] = imp;
    if (cfg.permutation_importance) {
      const auto perm = permutation_importance(model, data, seed);
      json jp = json::array();
      for (std::size_t i = 0; i < data.dims(); ++i)
        jp.push_back({{"feature", data.feature_names[i]}, {"mse_increase", perm[i]}});
      j["permutation_importance"] = jp;
    }
    stage.write("model_" + target + ".json", j.dump(2) + "\n");

    std::ostringstream os;
    os << "feature,importance\n";
    for (std::size_t i : order)
      os << data.feature_names[i] << ',' << csv::format_number(model.importance[i])
         << '\n';
    stage.write("importance_" + target + ".csv", os.str());
  }
  stage.finish();
}

void cmd_all(const RunConfig& cfg) {
  cmd_stats(cfg);
  cmd_decompose(cfg);
  cmd_reconstruct(cfg);
  cmd_connect(cfg);
  cmd_network(cfg);
  if (!cfg.factors.empty()) cmd_drivers(cfg);
}

void render_heatmap_file(const std::string& matrix_csv_path,
                         const std::string& svg_path) {
  const csv::Table t = csv::read_file(matrix_csv_path);
  const int k = static_cast<int>(t.rows.size());
  if (static_cast<int>(t.header.size()) != k + 1)
    throw std::runtime_error("heatmap: matrix is not square (" + std::to_string(k) +
                             " rows, " + std::to_string(t.header.size() - 1) +
                             " columns)");
  std::vector<std::string> labels;
  Eigen::MatrixXd m(k, k);
  for (int i = 0; i < k; ++i) {
    labels.push_back(t.rows[i][0]);
    for (int j = 0; j < k; ++j) m(i, j) = std::stod(t.rows[i][j + 1]);
  }
  write_text_file(svg_path, render_heatmap_svg(labels, m));
}

}  // namespace grainrisk
