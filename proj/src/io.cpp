#include "rkmp/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rkmp/empirical.hpp"
#include "rkmp/errors.hpp"
#include "rkmp/rng.hpp"
#include "rkmp/svd.hpp"

namespace rkmp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[5] = {'R', 'K', 'M', 'P', '1'};
constexpr std::uint8_t kElementF64Le = 1;

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t read_u64_le(const std::string& buf, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b)
    v = (v << 8) | static_cast<std::uint8_t>(buf[offset + static_cast<std::size_t>(b)]);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- configuration -------------------------------------------------------

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("config: unknown key '" + (path.empty() ? "" : path + ".") + item.key() +
                        "'");
  }
}

std::string key_path(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

double get_double(const json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError("config: '" + key_path(path, key) + "' must be a number");
  return obj[key].get<double>();
}

std::size_t get_size(const json& obj, const char* key, std::size_t fallback,
                     const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_unsigned())
    throw ConfigError("config: '" + key_path(path, key) + "' must be a nonnegative integer");
  return obj[key].get<std::size_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean())
    throw ConfigError("config: '" + key_path(path, key) + "' must be a boolean");
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string())
    throw ConfigError("config: '" + key_path(path, key) + "' must be a string");
  return obj[key].get<std::string>();
}

Task parse_task(const std::string& s) {
  if (s == "forward") return Task::forward;
  if (s == "inverse") return Task::inverse;
  if (s == "autoencode") return Task::autoencode;
  if (s == "denoise") return Task::denoise;
  throw ConfigError("config: 'kind' must be forward|inverse|autoencode|denoise, got '" + s + "'");
}

Optimizer parse_optimizer(const std::string& s) {
  if (s == "adam-style") return Optimizer::adam_style;
  if (s == "plain-gd") return Optimizer::plain_gd;
  throw ConfigError("config: 'train.optimizer' must be adam-style|plain-gd, got '" + s + "'");
}

}  // namespace

void write_matrix_binary(const std::string& path, const DenseMatrix& m) {
  std::string buf;
  buf.reserve(22 + m.data().size() * 8);
  buf.append(kMagic, 5);
  buf.push_back(static_cast<char>(kElementF64Le));
  append_u64_le(buf, m.rows());
  append_u64_le(buf, m.cols());
  for (double v : m.data()) append_u64_le(buf, std::bit_cast<std::uint64_t>(v));
  write_text_file(path, buf);
}

DenseMatrix read_matrix_binary(const std::string& path) {
  const std::string buf = read_text_file(path);
  if (buf.size() < 22)
    throw IoError(path + ": truncated header, file ends at byte " + std::to_string(buf.size()));
  if (buf.compare(0, 5, kMagic, 5) != 0) throw IoError(path + ": bad magic string at byte 0");
  if (static_cast<std::uint8_t>(buf[5]) != kElementF64Le)
    throw IoError(path + ": unsupported element kind at byte 5");
  const std::uint64_t rows = read_u64_le(buf, 6);
  const std::uint64_t cols = read_u64_le(buf, 14);
  const std::uint64_t expect = 22 + rows * cols * 8;
  if (buf.size() != expect)
    throw IoError(path + ": payload ends at byte " + std::to_string(buf.size()) + ", expected " +
                  std::to_string(expect));
  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = std::bit_cast<double>(read_u64_le(buf, 22 + i * 8));
  DenseMatrix out(rows, cols);
  std::copy(data.begin(), data.end(), out.data().begin());
  return out;
}

void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
  std::string buf;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) buf.push_back(',');
      buf += format_double(m(i, j));
    }
    buf.push_back('\n');
  }
  write_text_file(path, buf);
}

DenseMatrix read_matrix_csv(const std::string& path) {
  const std::string buf = read_text_file(path);
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
  std::istringstream lines(buf);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{}) throw IoError(path + ": unparsable cell '" + cell + "'");
      row.push_back(v);
    }
    if (cols == 0) cols = row.size();
    if (row.size() != cols) throw IoError(path + ": ragged row in CSV");
    rows.push_back(std::move(row));
  }
  DenseMatrix out(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = rows[i][j];
  return out;
}

ReturnsCsv read_returns_csv(const std::string& path) {
  const std::string buf = read_text_file(path);
  std::istringstream lines(buf);
  std::string header;
  if (!std::getline(lines, header)) throw IoError(path + ": empty returns file");
  ReturnsCsv out;
  {
    std::istringstream cells(header);
    std::string cell;
    while (std::getline(cells, cell, ',')) out.tickers.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{}) throw IoError(path + ": unparsable return '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != out.tickers.size())
      throw IoError(path + ": row width does not match ticker count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no return rows");
  out.returns = DenseMatrix(rows.size(), out.tickers.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < out.tickers.size(); ++j) out.returns(i, j) = rows[i][j];
  return out;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(root,
             {"experiment", "seed", "kind", "affine", "ranks", "ridge", "train", "imaging",
              "finance", "swe"},
             "");

  ExperimentConfig cfg;
  cfg.experiment = get_string(root, "experiment", "", "");
  if (cfg.experiment != "sweep" && cfg.experiment != "imaging" && cfg.experiment != "finance" &&
      cfg.experiment != "swe")
    throw ConfigError("config: 'experiment' must be sweep|imaging|finance|swe");
  cfg.seed = get_size(root, "seed", 1, "");
  cfg.kind.task = parse_task(get_string(root, "kind", "forward", ""));
  cfg.kind.form = get_bool(root, "affine", false, "") ? Form::affine : Form::linear;
  if (root.contains("ranks")) {
    if (!root["ranks"].is_array()) throw ConfigError("config: 'ranks' must be an array");
    cfg.ranks.clear();
    for (const auto& v : root["ranks"]) {
      if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
        throw ConfigError("config: 'ranks' entries must be positive integers");
      cfg.ranks.push_back(v.get<std::size_t>());
    }
    if (cfg.ranks.empty()) throw ConfigError("config: 'ranks' must be nonempty");
    for (std::size_t i = 1; i < cfg.ranks.size(); ++i)
      if (cfg.ranks[i] <= cfg.ranks[i - 1])
        throw ConfigError("config: 'ranks' must be strictly ascending");
  }
  if (root.contains("ridge")) {
    if (!root["ridge"].is_null()) cfg.ridge = get_double(root, "ridge", 0.0, "");
  }

  if (root.contains("train")) {
    const json& t = root["train"];
    if (!t.is_object()) throw ConfigError("config: 'train' must be an object");
    check_keys(t, {"epochs", "learning_rate", "optimizer", "batch_size"}, "train");
    cfg.train.epochs = get_size(t, "epochs", cfg.train.epochs, "train");
    cfg.train.learning_rate = get_double(t, "learning_rate", cfg.train.learning_rate, "train");
    cfg.train.optimizer = parse_optimizer(get_string(t, "optimizer", "adam-style", "train"));
    cfg.train.batch_size = get_size(t, "batch_size", cfg.train.batch_size, "train");
  }

  if (root.contains("imaging")) {
    const json& im = root["imaging"];
    if (!im.is_object()) throw ConfigError("config: 'imaging' must be an object");
    check_keys(im, {"image_side", "kernel_side", "kernel_std", "noise_std", "samples"}, "imaging");
    cfg.imaging.image_side = get_size(im, "image_side", cfg.imaging.image_side, "imaging");
    cfg.imaging.kernel_side = get_size(im, "kernel_side", cfg.imaging.kernel_side, "imaging");
    cfg.imaging.kernel_std = get_double(im, "kernel_std", cfg.imaging.kernel_std, "imaging");
    cfg.imaging.noise_std = get_double(im, "noise_std", cfg.imaging.noise_std, "imaging");
    cfg.imaging.samples = get_size(im, "samples", cfg.imaging.samples, "imaging");
  }

  if (root.contains("finance")) {
    const json& fin = root["finance"];
    if (!fin.is_object()) throw ConfigError("config: 'finance' must be an object");
    check_keys(fin,
               {"days", "assets", "factors", "garch_omega", "garch_alpha", "garch_beta",
                "noise_scale", "factor_base_std", "ar1_coeff", "runs", "returns_csv"},
               "finance");
    SyntheticMarketSpec& mk = cfg.finance.market;
    mk.days = get_size(fin, "days", mk.days, "finance");
    mk.assets = get_size(fin, "assets", mk.assets, "finance");
    mk.factors = get_size(fin, "factors", mk.factors, "finance");
    mk.garch_omega = get_double(fin, "garch_omega", mk.garch_omega, "finance");
    mk.garch_alpha = get_double(fin, "garch_alpha", mk.garch_alpha, "finance");
    mk.garch_beta = get_double(fin, "garch_beta", mk.garch_beta, "finance");
    mk.noise_scale = get_double(fin, "noise_scale", mk.noise_scale, "finance");
    mk.factor_base_std = get_double(fin, "factor_base_std", mk.factor_base_std, "finance");
    mk.ar1_coeff = get_double(fin, "ar1_coeff", mk.ar1_coeff, "finance");
    cfg.finance.runs = get_size(fin, "runs", cfg.finance.runs, "finance");
    if (fin.contains("returns_csv") && !fin["returns_csv"].is_null())
      cfg.finance.returns_csv = get_string(fin, "returns_csv", "", "finance");
  }

  if (root.contains("swe")) {
    const json& sw = root["swe"];
    if (!sw.is_object()) throw ConfigError("config: 'swe' must be an object");
    check_keys(sw,
               {"grid", "final_step", "train_per_family", "test_in_distribution",
                "test_out_of_distribution", "noise_std", "rank", "ridge"},
               "swe");
    cfg.swe.grid = get_size(sw, "grid", cfg.swe.grid, "swe");
    cfg.swe.final_step = get_size(sw, "final_step", cfg.swe.final_step, "swe");
    cfg.swe.train_per_family = get_size(sw, "train_per_family", cfg.swe.train_per_family, "swe");
    cfg.swe.test_in_distribution =
        get_size(sw, "test_in_distribution", cfg.swe.test_in_distribution, "swe");
    cfg.swe.test_out_of_distribution =
        get_size(sw, "test_out_of_distribution", cfg.swe.test_out_of_distribution, "swe");
    cfg.swe.noise_std = get_double(sw, "noise_std", cfg.swe.noise_std, "swe");
    cfg.swe.rank = get_size(sw, "rank", cfg.swe.rank, "swe");
    cfg.swe.ridge = get_double(sw, "ridge", cfg.swe.ridge, "swe");
  }

  cfg.echo_json = root.dump(2);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

ExperimentConfig preset_config(const std::string& name) {
  std::string text;
  if (name == "paper-imaging") {
    text = R"({
      "experiment": "imaging",
      "seed": 1,
      "ranks": [25, 50, 75, 100, 125, 150, 175, 200],
      "imaging": {"image_side": 28, "kernel_side": 5, "kernel_std": 1.5,
                  "noise_std": 0.05, "samples": 160},
      "train": {"epochs": 200, "learning_rate": 0.001, "optimizer": "adam-style"}
    })";
  } else if (name == "paper-swe") {
    text = R"({
      "experiment": "swe",
      "seed": 1,
      "swe": {"grid": 64, "final_step": 1500, "train_per_family": 625,
              "test_in_distribution": 2000, "test_out_of_distribution": 1000,
              "noise_std": 0.05, "rank": 250, "ridge": 0.01},
      "train": {"epochs": 200, "learning_rate": 0.001, "optimizer": "adam-style"}
    })";
  } else if (name == "desk-swe") {
    text = R"({
      "experiment": "swe",
      "seed": 1,
      "swe": {"grid": 16, "final_step": 400, "train_per_family": 50,
              "test_in_distribution": 100, "test_out_of_distribution": 50,
              "noise_std": 0.01, "rank": 64, "ridge": 0.01},
      "train": {"epochs": 200, "learning_rate": 0.001, "optimizer": "adam-style"}
    })";
  } else if (name == "paper-finance") {
    text = R"({
      "experiment": "finance",
      "seed": 1,
      "finance": {"days": 2000, "assets": 10, "factors": 3,
                  "garch_omega": 0.01, "garch_alpha": 0.1, "garch_beta": 0.85,
                  "runs": 20},
      "train": {"epochs": 150, "learning_rate": 0.001, "optimizer": "adam-style"}
    })";
  } else {
    throw ConfigError("unknown preset '" + name +
                      "'; expected paper-imaging|paper-swe|desk-swe|paper-finance");
  }
  return parse_config_text(text);
}

std::string default_out_root() {
  const char* env = std::getenv("RKMP_OUT_DIR");
  if (env != nullptr && env[0] != '\0') return env;
  return "rkmp_out";
}

Stage stage_from_verb(const std::string& verb) {
  if (verb == "generate") return Stage::generate;
  if (verb == "fit") return Stage::fit;
  if (verb == "evaluate") return Stage::evaluate;
  if (verb == "sweep") return Stage::sweep;
  if (verb == "run") return Stage::run;
  throw ConfigError("unknown verb '" + verb + "'");
}

// ---- experiment pipelines -------------------------------------------------

namespace {

struct ImagingData {
  DataSet data;
  DenseMatrix forward_op;
};

ImagingData make_imaging_dataset(const ExperimentConfig& cfg) {
  ImagingData out;
  DenseMatrix x = synthetic_images(cfg.imaging.image_side, cfg.imaging.samples, cfg.seed);
  DenseMatrix y;
  // Autoencoding reconstructs the signal itself; denoising observes the
  // signal plus noise; forward/inverse observe the blurred, noisy signal.
  if (cfg.kind.task == Task::autoencode) {
    out.forward_op = DenseMatrix::identity(x.rows());
    y = x;
  } else if (cfg.kind.task == Task::denoise) {
    out.forward_op = DenseMatrix::identity(x.rows());
    y = add_white_noise(x, cfg.imaging.noise_std, Rng(cfg.seed).split(7).next_u64());
  } else {
    BlurSpec blur;
    blur.image_side = cfg.imaging.image_side;
    blur.kernel_side = cfg.imaging.kernel_side;
    blur.kernel_std = cfg.imaging.kernel_std;
    out.forward_op = build_blur_operator(blur);
    y = add_white_noise(multiply(out.forward_op, x), cfg.imaging.noise_std,
                        Rng(cfg.seed).split(7).next_u64());
  }
  out.data = DataSet{std::move(x), std::move(y)};
  return out;
}

std::vector<SweepRow> sweep_rows_on(const ExperimentConfig& cfg, const DataSet& data,
                                    Task direction) {
  const bool inverse = direction == Task::inverse || direction == Task::denoise;
  const bool affine = cfg.kind.form == Form::affine;
  const DataSet train_view =
      inverse ? DataSet{*data.Y, data.X} : DataSet{data.X, *data.Y};

  const MapBuilder optimal = [&](std::size_t r) {
    const OptimalMap m = affine ? empirical_forward_map_affine(train_view, r)
                                : empirical_forward_map(train_view, r);
    return EvaluatedMap{m.A, m.bias};
  };
  const MapBuilder learned = [&](std::size_t r) {
    TrainConfig tc;
    tc.rank = r;
    tc.epochs = cfg.train.epochs;
    tc.learning_rate = cfg.train.learning_rate;
    tc.optimizer = cfg.train.optimizer;
    tc.batch_size = cfg.train.batch_size;
    tc.affine = affine;
    tc.seed = cfg.seed + 1000 + r;
    const TrainedMap m = train_encoder_decoder(train_view, tc);
    return EvaluatedMap{m.composed(), m.bias};
  };
  return risk_rank_sweep(optimal, learned, cfg.ranks, data, inverse);
}

ErrorReport swe_report(const DenseMatrix& a, const SweDataset& set) {
  const DenseMatrix pred = multiply(a, *set.data.Y);
  return field_error_report(pred, set.data.X, {set.u_begin, set.u_end},
                            {set.v_begin, set.v_end}, {set.eta_begin, set.eta_end});
}

std::string csv_header_error_rows() {
  return "method,set,total_nrmse,eta_nrmse,u_mae,v_mae,mse,samples\n";
}

std::string error_row(const std::string& method, const std::string& set, const ErrorReport& r) {
  std::string row = method + "," + set;
  for (double v : {r.total_nrmse, r.eta_nrmse, r.u_mae, r.v_mae, r.mse_value})
    row += "," + format_double(v);
  row += "," + std::to_string(r.sample_count) + "\n";
  return row;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_manifest(const ExperimentConfig& cfg, const std::string& out_dir) {
  json manifest;
  manifest["config"] = json::parse(cfg.echo_json);
  manifest["seed"] = cfg.seed;
  manifest["version"] = kLibraryVersion;
  write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

int stage_level(Stage stage) {
  switch (stage) {
    case Stage::generate:
      return 0;
    case Stage::fit:
      return 1;
    case Stage::evaluate:
      return 2;
    case Stage::sweep:
    case Stage::run:
      return 3;
  }
  return 3;
}

void run_imaging_or_sweep(const ExperimentConfig& cfg, const std::string& out_dir, Stage stage) {
  const int level = stage_level(stage);
  const ImagingData im = make_imaging_dataset(cfg);
  const fs::path out(out_dir);
  write_matrix_binary((out / "x.rkm").string(), im.data.X);
  write_matrix_binary((out / "y.rkm").string(), *im.data.Y);

  if (level >= 1) {
    const std::size_t r = cfg.ranks.front();
    const bool inverse = cfg.kind.task == Task::inverse || cfg.kind.task == Task::denoise;
    const DataSet train_view =
        inverse ? DataSet{*im.data.Y, im.data.X} : DataSet{im.data.X, *im.data.Y};
    const OptimalMap m = cfg.kind.form == Form::affine
                             ? empirical_forward_map_affine(train_view, r)
                             : empirical_forward_map(train_view, r);
    write_matrix_binary((out / "map_optimal.rkm").string(), m.A);
    if (m.bias) {
      DenseMatrix b(m.bias->size(), 1);
      for (std::size_t i = 0; i < m.bias->size(); ++i) b(i, 0) = (*m.bias)[i];
      write_matrix_binary((out / "map_optimal_bias.rkm").string(), b);
    }
    if (level >= 2) {
      std::string csv = "rank,optimal_risk\n";
      csv += std::to_string(r) + "," + format_double(m.risk) + "\n";
      write_text_file((out / "metrics.csv").string(), csv);
    }
  }

  if (level >= 3) {
    const bool both = cfg.experiment == "imaging";
    const Task first = both ? Task::forward : cfg.kind.task;
    auto write_sweep = [&](Task direction, const std::string& name) {
      const auto rows = sweep_rows_on(cfg, im.data, direction);
      std::string csv = "rank,optimal_risk,learned_risk\n";
      for (const SweepRow& row : rows)
        csv += std::to_string(row.rank) + "," + format_double(row.optimal_risk) + "," +
               format_double(row.learned_risk) + "\n";
      write_text_file((out / name).string(), csv);
    };
    write_sweep(first, "sweep.csv");
    if (both) write_sweep(Task::inverse, "sweep_inverse.csv");
  }
}

void run_finance(const ExperimentConfig& cfg, const std::string& out_dir, Stage stage) {
  const int level = stage_level(stage);
  const fs::path out(out_dir);
  const FinanceExperimentResult result = run_finance_experiment(cfg);

  // Dataset echo for downstream tooling.
  if (!cfg.finance.returns_csv) {
    SyntheticMarketSpec spec = cfg.finance.market;
    spec.seed = cfg.seed;
    const SyntheticMarket market = synthetic_market(spec);
    write_matrix_csv((out / "returns.csv").string(), market.returns);
    write_matrix_csv((out / "factors_true.csv").string(), market.true_factors);
    write_matrix_csv((out / "loadings_true.csv").string(), market.true_loadings);
  }
  if (level >= 2) {
    std::string mse_csv = "method,mse\n";
    std::string cev_csv = "method";
    const std::size_t r = cfg.finance.market.factors;
    for (std::size_t f = 1; f <= r; ++f) cev_csv += ",factor" + std::to_string(f) + "_cev";
    cev_csv += ",total_cev,factor_balance\n";
    std::string corr_csv = "method";
    for (std::size_t f = 1; f <= r; ++f) corr_csv += ",factor" + std::to_string(f) + "_corr";
    corr_csv += "\n";
    for (const FinanceMethodReport& m : result.methods) {
      mse_csv += m.method + "," + format_double(m.mse_value) + "\n";
      cev_csv += m.method;
      for (double c : m.cev) cev_csv += "," + format_double(c);
      cev_csv += "," + format_double(m.total_cev) + "," + format_double(m.balance) + "\n";
      if (!m.correlations.empty()) {
        corr_csv += m.method;
        for (double c : m.correlations) corr_csv += "," + format_double(c);
        corr_csv += "\n";
      }
    }
    write_text_file((out / "mse.csv").string(), mse_csv);
    write_text_file((out / "cev.csv").string(), cev_csv);
    if (result.has_ground_truth) write_text_file((out / "correlations.csv").string(), corr_csv);
  }
}

void run_swe(const ExperimentConfig& cfg, const std::string& out_dir, Stage stage) {
  const int level = stage_level(stage);
  const fs::path out(out_dir);
  const SweExperimentResult result = run_swe_experiment(cfg);

  if (level >= 1) write_matrix_binary((out / "map_optimal.rkm").string(), result.optimal_map);
  if (level >= 2) {
    std::string csv = csv_header_error_rows();
    csv += error_row("optimal", "train", result.optimal_train);
    csv += error_row("optimal", "in_distribution", result.optimal_id);
    csv += error_row("optimal", "out_of_distribution", result.optimal_ood);
    csv += error_row("learned", "train", result.learned_train);
    csv += error_row("learned", "in_distribution", result.learned_id);
    csv += error_row("learned", "out_of_distribution", result.learned_ood);
    write_text_file((out / "metrics.csv").string(), csv);
  }
}

}  // namespace

SweepExperimentResult run_sweep_experiment(const ExperimentConfig& cfg, Task direction) {
  SweepExperimentResult out;
  ImagingData im = make_imaging_dataset(cfg);
  out.rows = sweep_rows_on(cfg, im.data, direction);
  out.data = std::move(im.data);
  out.forward_op = std::move(im.forward_op);
  return out;
}

FinanceExperimentResult run_finance_experiment(const ExperimentConfig& cfg) {
  FinanceExperimentResult result;
  DenseMatrix returns;  // T×A
  std::optional<DenseMatrix> truth_factors;
  if (cfg.finance.returns_csv) {
    returns = read_returns_csv(*cfg.finance.returns_csv).returns;
  } else {
    SyntheticMarketSpec spec = cfg.finance.market;
    spec.seed = cfg.seed;
    const SyntheticMarket market = synthetic_market(spec);
    returns = market.returns;
    truth_factors = market.true_factors;
    result.has_ground_truth = true;
  }
  const std::size_t t_len = returns.rows();
  const std::size_t assets = returns.cols();
  const std::size_t r = cfg.finance.market.factors;
  if (r > assets) throw ContractError("finance: latent dimension exceeds asset count");

  // Chronological 80/20 train/test split; no future data leaks into fitting.
  const std::size_t t_train = std::max<std::size_t>(2, (t_len * 8) / 10);
  const std::size_t t_test = t_len - t_train;
  if (t_test < 2) throw ContractError("finance: not enough rows for a test block");
  DenseMatrix train_cols(assets, t_train), test_cols(assets, t_test);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t a = 0; a < assets; ++a) {
      if (t < t_train)
        train_cols(a, t) = returns(t, a);
      else
        test_cols(a, t - t_train) = returns(t, a);
    }
  const DataSet train{train_cols, std::nullopt};

  DenseMatrix truth_test;
  if (truth_factors) {
    truth_test = DenseMatrix(t_test, r);
    for (std::size_t t = 0; t < t_test; ++t)
      for (std::size_t f = 0; f < r; ++f) truth_test(t, f) = (*truth_factors)(t + t_train, f);
  }

  const Vector train_mean = column_mean(train_cols);
  const DenseMatrix test_centered = center_columns(test_cols, train_mean);
  DenseMatrix returns_test(t_test, assets);
  for (std::size_t t = 0; t < t_test; ++t)
    for (std::size_t a2 = 0; a2 < assets; ++a2) returns_test(t, a2) = test_cols(a2, t);

  const auto eval_method = [&](const std::string& name, const DenseMatrix& a,
                               const std::optional<Vector>& bias, const DenseMatrix& loadings,
                               const DenseMatrix& encoder) {
    FinanceMethodReport report;
    report.method = name;
    report.mse_value = empirical_map_risk(EvaluatedMap{a, bias}, test_cols, test_cols);

    // Latent scores on the test block.
    const DenseMatrix scores = transpose(multiply(encoder, test_centered));  // T×r

    LatentFactors lf{scores, loadings, false};
    const VarimaxResult rotated = varimax_rotate(lf);
    const CevReport cev = cumulative_explained_variance(rotated.factors, returns_test);
    report.cev = cev.per_factor;
    report.total_cev = cev.total;
    report.balance = factor_balance(cev.per_factor);
    if (truth_factors) {
      const ProcrustesResult aligned = procrustes_align(scores, truth_test);
      report.correlations = aligned_factor_correlations(aligned.aligned, truth_test);
    }
    return report;
  };

  // Optimal affine autoencoder (empirical covariance of the train block).
  {
    ProblemSpec spec;
    spec.kind = {Task::autoencode, Form::affine};
    spec.signal = empirical_covariance(train, cfg.ridge.value_or(0.0));
    spec.rank = r;
    const OptimalMap map = optimal_autoencoder(spec);
    const SvdFactors fl = svd(spec.signal.factor.L);
    DenseMatrix ur(assets, std::min(r, fl.effective_rank));
    for (std::size_t j = 0; j < ur.cols(); ++j)
      for (std::size_t i = 0; i < assets; ++i) ur(i, j) = fl.U(i, j);
    result.methods.push_back(eval_method("optimal-affine", map.A, map.bias, ur, transpose(ur)));
  }

  // PCA baseline (identical construction by design; kept as its own row).
  {
    const OptimalMap map = pca_baseline(train, r);
    const SvdFactors fl = svd(empirical_covariance(train, 0.0).factor.L);
    DenseMatrix ur(assets, std::min(r, fl.effective_rank));
    for (std::size_t j = 0; j < ur.cols(); ++j)
      for (std::size_t i = 0; i < assets; ++i) ur(i, j) = fl.U(i, j);
    result.methods.push_back(eval_method("pca", map.A, map.bias, ur, transpose(ur)));
  }

  // Trained baselines: per-run reports reduced to medians, since the trained
  // maps depend on their initialization.
  const auto aggregate = [&](const std::string& name,
                             const std::vector<FinanceMethodReport>& runs) {
    FinanceMethodReport rep;
    rep.method = name;
    std::vector<double> mses, totals, balances;
    for (const FinanceMethodReport& one : runs) {
      mses.push_back(one.mse_value);
      totals.push_back(one.total_cev);
      balances.push_back(one.balance);
    }
    rep.mse_value = median_of(mses);
    rep.total_cev = median_of(totals);
    rep.balance = median_of(balances);
    rep.cev.assign(r, 0.0);
    for (std::size_t f = 0; f < r; ++f) {
      std::vector<double> per;
      for (const FinanceMethodReport& one : runs) per.push_back(one.cev[f]);
      rep.cev[f] = median_of(per);
    }
    if (!runs.empty() && !runs.front().correlations.empty()) {
      rep.correlations.assign(r, 0.0);
      for (std::size_t f = 0; f < r; ++f) {
        std::vector<double> per;
        for (const FinanceMethodReport& one : runs) per.push_back(one.correlations[f]);
        rep.correlations[f] = median_of(per);
      }
    }
    return rep;
  };

  const DataSet train_pair{train_cols, train_cols};
  const std::size_t repetitions = std::max<std::size_t>(1, cfg.finance.runs);
  {
    std::vector<FinanceMethodReport> runs;
    for (std::size_t run = 0; run < repetitions; ++run) {
      TrainConfig tc;
      tc.rank = r;
      tc.epochs = cfg.train.epochs;
      tc.learning_rate = cfg.train.learning_rate;
      tc.optimizer = cfg.train.optimizer;
      tc.affine = true;
      tc.seed = cfg.seed + 5000 + run;
      const TrainedMap m = train_encoder_decoder(train_pair, tc);
      runs.push_back(eval_method("trained-affine", m.composed(), m.bias, m.decoder, m.encoder));
    }
    result.methods.push_back(aggregate("trained-affine", runs));
  }
  {
    std::vector<FinanceMethodReport> runs;
    for (std::size_t run = 0; run < repetitions; ++run) {
      NonlinearConfig nc;
      nc.base.rank = r;
      nc.base.epochs = std::min<std::size_t>(cfg.train.epochs, 100);
      nc.base.learning_rate = cfg.train.learning_rate;
      nc.base.optimizer = cfg.train.optimizer;
      nc.base.seed = cfg.seed + 6000 + run;
      const TrainedNonlinearMap m = train_nonlinear_encoder_decoder(train_pair, nc);
      // The composed map is nonlinear; score the reconstruction directly and
      // reuse the decoder/encoder pair for the factor diagnostics.
      FinanceMethodReport rep =
          eval_method("trained-nonlinear", DenseMatrix::identity(assets), std::nullopt,
                      m.decoder, m.encoder);
      rep.mse_value = mse(m.apply(test_cols), test_cols);
      runs.push_back(std::move(rep));
    }
    result.methods.push_back(aggregate("trained-nonlinear", runs));
  }

  return result;
}

SweExperimentResult run_swe_experiment(const ExperimentConfig& cfg) {
  SweParams params;
  params.n1 = cfg.swe.grid;
  params.n2 = cfg.swe.grid;
  const std::vector<IcFamily> id_families = {IcFamily::gaussian_bump_eta,
                                             IcFamily::gaussian_dipole_eta, IcFamily::velocity_jet,
                                             IcFamily::mixed_uv_eta};
  const std::vector<IcFamily> ood_families = {IcFamily::ring_wave, IcFamily::step_wave};

  const SweDataset train = build_swe_dataset(cfg.swe.train_per_family, id_families, params,
                                             cfg.swe.final_step, cfg.swe.noise_std, cfg.seed);
  const std::size_t id_per = (cfg.swe.test_in_distribution + id_families.size() - 1) /
                             id_families.size();
  const std::size_t ood_per = (cfg.swe.test_out_of_distribution + ood_families.size() - 1) /
                              ood_families.size();
  const SweDataset test_id = build_swe_dataset(std::max<std::size_t>(1, id_per), id_families,
                                               params, cfg.swe.final_step, cfg.swe.noise_std,
                                               cfg.seed + 1);
  const SweDataset test_ood = build_swe_dataset(std::max<std::size_t>(1, ood_per), ood_families,
                                                params, cfg.swe.final_step, cfg.swe.noise_std,
                                                cfg.seed + 2);

  // Ridge-regularized moment plug-in map fitted on the training block.
  const double j = static_cast<double>(train.data.sample_count());
  DenseMatrix gamma_y = multiply(*train.data.Y, transpose(*train.data.Y));
  for (double& v : gamma_y.data()) v /= j;
  const SymmetricFactor ly =
      symmetric_factor(gamma_y, FactorStrategy::cholesky_with_ridge, cfg.swe.ridge);
  DenseMatrix gamma_xy = multiply(train.data.X, transpose(*train.data.Y));
  for (double& v : gamma_xy.data()) v /= j;

  SweExperimentResult result;
  result.optimal_map = rank_constrained_map_from_moments(gamma_xy, ly, cfg.swe.rank);
  result.optimal_train = swe_report(result.optimal_map, train);
  result.optimal_id = swe_report(result.optimal_map, test_id);
  result.optimal_ood = swe_report(result.optimal_map, test_ood);

  TrainConfig tc;
  tc.rank = cfg.swe.rank;
  tc.epochs = cfg.train.epochs;
  tc.learning_rate = cfg.train.learning_rate;
  tc.optimizer = cfg.train.optimizer;
  tc.batch_size = cfg.train.batch_size;
  tc.seed = cfg.seed + 9000;
  const DataSet inverse_pair{*train.data.Y, train.data.X};
  const TrainedMap learned = train_encoder_decoder(inverse_pair, tc);
  const DenseMatrix la = learned.composed();
  result.learned_train = swe_report(la, train);
  result.learned_id = swe_report(la, test_id);
  result.learned_ood = swe_report(la, test_ood);

  // Dataset files are written by run_experiment; keep the training set
  // reachable for it via the deterministic rebuild.
  return result;
}

void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, Stage stage) {
  fs::create_directories(out_dir);
  write_manifest(cfg, out_dir);
  if (cfg.experiment == "sweep" || cfg.experiment == "imaging") {
    run_imaging_or_sweep(cfg, out_dir, stage);
  } else if (cfg.experiment == "finance") {
    run_finance(cfg, out_dir, stage);
  } else if (cfg.experiment == "swe") {
    // Dataset files first so `generate` alone is useful.
    SweParams params;
    params.n1 = cfg.swe.grid;
    params.n2 = cfg.swe.grid;
    const std::vector<IcFamily> id_families = {
        IcFamily::gaussian_bump_eta, IcFamily::gaussian_dipole_eta, IcFamily::velocity_jet,
        IcFamily::mixed_uv_eta};
    const SweDataset train = build_swe_dataset(cfg.swe.train_per_family, id_families, params,
                                               cfg.swe.final_step, cfg.swe.noise_std, cfg.seed);
    const fs::path out(out_dir);
    write_matrix_binary((out / "swe_train_x.rkm").string(), train.data.X);
    write_matrix_binary((out / "swe_train_y.rkm").string(), *train.data.Y);
    if (stage_level(stage) >= 1) run_swe(cfg, out_dir, stage);
  } else {
    throw ConfigError("run_experiment: unknown experiment '" + cfg.experiment + "'");
  }
}

}  // namespace rkmp
