#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "lshpr/analysis.hpp"
#include "lshpr/binary_io.hpp"
#include "lshpr/compress.hpp"
#include "lshpr/dist_metrics.hpp"
#include "lshpr/embedding_io.hpp"
#include "lshpr/error.hpp"
#include "lshpr/lsh_core.hpp"
#include "lshpr/pr_metrics.hpp"

namespace lshpr::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error("malformed " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return value;
}

std::string absolute_path(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

std::string kv(std::string_view key, std::string_view value) {
  std::string line(key);
  line += '=';
  line += value;
  line += '\n';
  return line;
}

// Comma-separated list option values.
template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
  std::vector<T> items;
  for (auto part : split(text, ',')) {
    if (part.empty()) throw Error("empty entry in list '" + text + "'");
    items.push_back(parse(part));
  }
  return items;
}

EmbeddingSet load_set(const std::string& path) { return load_embeddings(path, format_from_extension(path)); }

std::optional<std::uint32_t> parse_hyperplane_flag(const std::string& text) {
  if (text == "auto") return std::nullopt;
  return parse_number<std::uint32_t>(text, "--H value (expected 'auto' or an integer)");
}

// Shared state of one invocation: the manifest being recorded and where to
// put it.
struct Invocation {
  RunManifest manifest;
  std::string manifest_path;

  void input(const std::string& path) { manifest.inputs.push_back(absolute_path(path)); }
  void config(std::string key, std::string value) { manifest.config.emplace_back(std::move(key), std::move(value)); }
  void output(std::string key, const std::string& path) {
    manifest.outputs.emplace_back(std::move(key), absolute_path(path));
  }
  void finish() const {
    if (!manifest_path.empty()) io::write_file_atomic(manifest_path, manifest.encode());
  }
};

void add_manifest_option(CLI::App* cmd, Invocation& inv) {
  cmd->add_option("--manifest", inv.manifest_path, "Also write a replayable run manifest here");
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string real, gen, out, estimator = "lsh-knn", hyperplanes = "auto", format = "kv";
  std::uint32_t k = 3, runs = 3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

std::string eval_record_kv(const PRScore& score, const EvalArgs& a) {
  std::string s;
  s += kv("estimator", to_string(score.estimator));
  s += kv("k", std::to_string(score.config.k));
  s += kv("H", a.hyperplanes);
  s += kv("runs", std::to_string(score.config.runs));
  s += kv("seed", std::to_string(score.config.seed));
  s += kv("precision", format_double(score.precision));
  s += kv("recall", format_double(score.recall));
  const ComparisonStats total = score.total_stats();
  s += kv("distance_evals", std::to_string(total.distance_evals));
  s += kv("queries", std::to_string(total.queries));
  s += kv("mean_evals_per_query", format_double(total.mean_per_query()));
  for (std::size_t r = 0; r < score.per_run.size(); ++r) {
    const RunScore& run = score.per_run[r];
    const std::string p = "run." + std::to_string(r) + ".";
    s += kv(p + "seed", std::to_string(run.seed));
    s += kv(p + "H", std::to_string(run.hyperplanes));
    s += kv(p + "precision", format_double(run.precision));
    s += kv(p + "recall", format_double(run.recall));
    s += kv(p + "distance_evals", std::to_string(run.stats.distance_evals));
    s += kv(p + "queries", std::to_string(run.stats.queries));
  }
  return s;
}

Json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::string eval_record_json(const PRScore& score, const EvalArgs& a) {
  Json j;
  j["estimator"] = std::string(to_string(score.estimator));
  j["k"] = score.config.k;
  j["H"] = a.hyperplanes;
  j["runs"] = score.config.runs;
  j["seed"] = score.config.seed;
  j["precision"] = number_or_string(score.precision);
  j["recall"] = number_or_string(score.recall);
  const ComparisonStats total = score.total_stats();
  j["distance_evals"] = total.distance_evals;
  j["queries"] = total.queries;
  j["mean_evals_per_query"] = total.mean_per_query();
  Json runs = Json::array();
  for (const RunScore& run : score.per_run) {
    Json r;
    r["seed"] = run.seed;
    r["H"] = run.hyperplanes;
    r["precision"] = number_or_string(run.precision);
    r["recall"] = number_or_string(run.recall);
    r["distance_evals"] = run.stats.distance_evals;
    r["queries"] = run.stats.queries;
    runs.push_back(std::move(r));
  }
  j["per_run"] = std::move(runs);
  return j.dump(2) + "\n";
}

void run_eval(const EvalArgs& a, Invocation& inv) {
  if (a.format != "kv" && a.format != "json") throw Error("--format must be kv or json");
  EvalConfig cfg;
  cfg.k = a.k;
  cfg.hyperplanes = parse_hyperplane_flag(a.hyperplanes);
  cfg.runs = a.runs;
  cfg.seed = a.seed;
  cfg.estimator = parse_estimator(a.estimator);
  cfg.threads = a.threads;
  cfg.validate();

  const EmbeddingSet real = load_set(a.real);
  const EmbeddingSet gen = load_set(a.gen);
  const PRScore score = evaluate(real, gen, cfg);
  io::write_file_atomic(a.out, a.format == "json" ? eval_record_json(score, a) : eval_record_kv(score, a));

  inv.input(a.real);
  inv.input(a.gen);
  inv.config("estimator", std::string(to_string(cfg.estimator)));
  inv.config("k", std::to_string(a.k));
  inv.config("H", a.hyperplanes);
  inv.config("runs", std::to_string(a.runs));
  inv.config("seed", std::to_string(a.seed));
  inv.config("format", a.format);
  inv.config("threads", std::to_string(a.threads));
  inv.output("out", a.out);
  inv.manifest.seed = a.seed;
}

// ---------------------------------------------------------------------------
// realism

struct RealismArgs {
  std::string real, gen, out, hyperplanes = "auto", planes;
  std::uint32_t k = 3;
  std::uint64_t seed = 0;
  bool drop_largest_radii = false;
};

void run_realism(const RealismArgs& a, Invocation& inv) {
  if (a.k == 0) throw Error("k must be at least 1");
  auto real = std::make_shared<const EmbeddingSet>(load_set(a.real));
  const EmbeddingSet gen = load_set(a.gen);
  if (real->dim() != gen.dim()) throw Error("dimension mismatch between sets");

  std::shared_ptr<const HyperplaneSet> planes;
  if (!a.planes.empty()) {
    if (a.hyperplanes != "auto") throw Error("--H and --planes are mutually exclusive");
    planes = std::make_shared<const HyperplaneSet>(load_hyperplanes(a.planes));
    if (planes->dim() != real->dim()) throw Error("hyperplane dimension does not match the embeddings");
  } else {
    const auto fixed = parse_hyperplane_flag(a.hyperplanes);
    const std::uint32_t count = fixed ? *fixed : choose_H(real->size() + gen.size());
    if (count > kMaxHyperplanes) throw Error("--H exceeds 64");
    planes = std::make_shared<const HyperplaneSet>(
        generate_hyperplanes(count, static_cast<std::uint32_t>(real->dim()), a.seed));
  }
  const HashTable table = build_table(real, planes);
  const RealismReport report = realism_scores(gen, table, a.k, RealismOptions{a.drop_largest_radii});

  std::string csv = "index,score\n";
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    csv += std::to_string(i);
    csv += ',';
    csv += format_double(report.scores[i]);
    csv += '\n';
  }
  io::write_file_atomic(a.out, csv);

  inv.input(a.real);
  inv.input(a.gen);
  inv.config("k", std::to_string(a.k));
  inv.config("H", a.hyperplanes);
  inv.config("seed", std::to_string(a.seed));
  inv.config("drop-largest-radii", a.drop_largest_radii ? "true" : "false");
  if (!a.planes.empty()) inv.config("planes", absolute_path(a.planes));
  inv.output("out", a.out);
  inv.manifest.seed = a.seed;
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineArgs {
  std::string real, gen, out, metric = "fid";
  std::optional<std::size_t> block_size;
};

void run_baseline(const BaselineArgs& a, Invocation& inv) {
  if (a.metric != "fid" && a.metric != "kid") throw Error("--metric must be fid or kid");
  if (a.metric == "fid" && a.block_size) throw Error("--block-size applies to kid only");
  const EmbeddingSet real = load_set(a.real);
  const EmbeddingSet gen = load_set(a.gen);
  const double value = a.metric == "fid" ? fid(real, gen) : kid(real, gen, a.block_size);

  std::string s;
  s += kv("metric", a.metric);
  s += kv("value", format_double(value));
  s += kv("n_real", std::to_string(real.size()));
  s += kv("n_gen", std::to_string(gen.size()));
  s += kv("dim", std::to_string(real.dim()));
  if (a.metric == "kid") {
    s += kv("block_size", std::to_string(a.block_size.value_or(std::min<std::size_t>(
                              std::min(real.size(), gen.size()), 1000))));
  }
  io::write_file_atomic(a.out, s);

  inv.input(a.real);
  inv.input(a.gen);
  inv.config("metric", a.metric);
  if (a.block_size) inv.config("block-size", std::to_string(*a.block_size));
  inv.output("out", a.out);
}

// ---------------------------------------------------------------------------
// compress

struct CompressArgs {
  std::string tensor, out, report, scheme = "lq";
  std::uint32_t bits = 8, mcq_samples = 0;
  double expand_ratio = 0.01;
  std::uint64_t seed = 0;
};

std::string report_kv(const CompressionSpec& spec, const CompressionReport& r, std::size_t in_size,
                      std::size_t out_size) {
  std::string s;
  s += kv("scheme", to_string(spec.scheme));
  s += kv("bits", std::to_string(spec.bits));
  s += kv("mcq_samples", std::to_string(spec.mcq_samples));
  s += kv("expand_ratio", format_double(spec.expand_ratio));
  s += kv("seed", std::to_string(spec.seed));
  s += kv("size_in", std::to_string(in_size));
  s += kv("size_out", std::to_string(out_size));
  s += kv("distinct_levels", std::to_string(r.distinct_levels));
  s += kv("pruned_fraction", format_double(r.pruned_fraction));
  s += kv("max_abs_error", format_double(r.max_abs_error));
  s += kv("l1_in", format_double(r.l1_in));
  s += kv("l1_out", format_double(r.l1_out));
  s += kv("clip_threshold", r.clip_threshold ? format_double(*r.clip_threshold) : "none");
  return s;
}

void run_compress(const CompressArgs& a, Invocation& inv) {
  CompressionSpec spec;
  spec.scheme = parse_scheme(a.scheme);
  spec.bits = a.bits;
  spec.mcq_samples = a.mcq_samples;
  spec.expand_ratio = a.expand_ratio;
  spec.seed = a.seed;
  spec.validate();

  const WeightTensor x = load_tensor(a.tensor);
  const auto [y, report] = compress(x, spec);
  const std::string report_text = report_kv(spec, report, x.size(), y.size());
  save_tensor(y, a.out);
  if (!a.report.empty()) io::write_file_atomic(a.report, report_text);

  inv.input(a.tensor);
  inv.config("scheme", std::string(to_string(spec.scheme)));
  inv.config("bits", std::to_string(a.bits));
  inv.config("mcq-samples", std::to_string(a.mcq_samples));
  inv.config("expand-ratio", format_double(a.expand_ratio));
  inv.config("seed", std::to_string(a.seed));
  inv.output("out", a.out);
  if (!a.report.empty()) inv.output("report", a.report);
  inv.manifest.seed = a.seed;
}

// ---------------------------------------------------------------------------
// correlate / pareto

struct CorrelateArgs {
  std::string scores, out, method = "both";
};

void run_correlate(const CorrelateArgs& a, Invocation& inv) {
  if (a.method != "pearson" && a.method != "spearman" && a.method != "both") {
    throw Error("--method must be pearson, spearman or both");
  }
  const std::string text = io::read_file(a.scores);
  const auto lines = lines_of(text);
  if (lines.empty()) throw Error(a.scores + ": empty scores file");
  ScoreSeries sa, sb;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != 3) throw Error(a.scores + ": line " + std::to_string(i + 1) + " needs 3 fields");
    sa.labels.emplace_back(fields[0]);
    sb.labels.emplace_back(fields[0]);
    sa.values.push_back(parse_number<double>(fields[1], "score"));
    sb.values.push_back(parse_number<double>(fields[2], "score"));
  }
  std::string s;
  s += kv("method", a.method);
  s += kv("n", std::to_string(sa.values.size()));
  if (a.method != "spearman") s += kv("pearson", format_double(pearson(sa, sb)));
  if (a.method != "pearson") s += kv("spearman", format_double(spearman(sa, sb)));
  io::write_file_atomic(a.out, s);

  inv.input(a.scores);
  inv.config("method", a.method);
  inv.output("out", a.out);
}

struct ParetoArgs {
  std::string points, out;
};

void run_pareto(const ParetoArgs& a, Invocation& inv) {
  const std::string text = io::read_file(a.points);
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw Error(a.points + ": no points");
  std::vector<ParetoPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != 3) throw Error(a.points + ": line " + std::to_string(i + 1) + " needs 3 fields");
    ParetoPoint p{parse_number<double>(fields[1], "precision"), parse_number<double>(fields[2], "recall"),
                  std::string(fields[0])};
    if (!(p.precision >= 0.0 && p.precision <= 1.0 && p.recall >= 0.0 && p.recall <= 1.0)) {
      throw Error(a.points + ": line " + std::to_string(i + 1) + " has a value outside [0, 1]");
    }
    points.push_back(std::move(p));
  }
  std::string csv = "tag,precision,recall\n";
  for (const ParetoPoint& p : pareto_frontier(points)) {
    csv += p.tag + "," + format_double(p.precision) + "," + format_double(p.recall) + "\n";
  }
  io::write_file_atomic(a.out, csv);

  inv.input(a.points);
  inv.output("out", a.out);
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string out, timings, sizes, estimators = "lsh,lsh-knn,knn", distribution = "normal";
  std::size_t d = 64;
  std::uint64_t seed = 0;
  std::uint32_t repeats = 1, k = 3;
  unsigned threads = 1;
};

void run_bench(const BenchArgs& a, Invocation& inv) {
  BenchConfig cfg;
  cfg.dim = a.d;
  cfg.sizes = parse_list<std::size_t>(a.sizes, [](std::string_view s) {
    return parse_number<std::size_t>(s, "size");
  });
  cfg.estimators = parse_list<Estimator>(a.estimators, [](std::string_view s) { return parse_estimator(s); });
  cfg.seed = a.seed;
  cfg.repeats = a.repeats;
  cfg.k = a.k;
  if (a.distribution == "normal") {
    cfg.distribution = SampleDistribution::normal;
  } else if (a.distribution == "uniform") {
    cfg.distribution = SampleDistribution::uniform;
  } else {
    throw Error("--distribution must be normal or uniform");
  }
  cfg.threads = a.threads;

  const auto rows = scaling_benchmark(cfg);
  std::string csv = "n,estimator,seed,H,distance_evals,queries,mean_evals_per_query,precision,recall\n";
  std::string timing = "n,estimator,seed,wall_seconds\n";
  for (const BenchRow& r : rows) {
    const std::string head = std::to_string(r.n) + "," + std::string(to_string(r.estimator)) + "," +
                             std::to_string(r.seed);
    csv += head + "," + std::to_string(r.hyperplanes) + "," + std::to_string(r.stats.distance_evals) + "," +
           std::to_string(r.stats.queries) + "," + format_double(r.stats.mean_per_query()) + "," +
           format_double(r.precision) + "," + format_double(r.recall) + "\n";
    timing += head + "," + format_double(r.wall_seconds) + "\n";
  }
  io::write_file_atomic(a.out, csv);
  if (!a.timings.empty()) io::write_file_atomic(a.timings, timing);

  inv.config("d", std::to_string(a.d));
  inv.config("sizes", a.sizes);
  inv.config("estimators", a.estimators);
  inv.config("seed", std::to_string(a.seed));
  inv.config("repeats", std::to_string(a.repeats));
  inv.config("k", std::to_string(a.k));
  inv.config("distribution", a.distribution);
  inv.config("threads", std::to_string(a.threads));
  inv.output("out", a.out);
  if (!a.timings.empty()) inv.output("timings", a.timings);
  inv.manifest.seed = a.seed;
}

// ---------------------------------------------------------------------------
// replay

struct ReplayArgs {
  std::string manifest, out_dir;
};

}  // namespace

// ---------------------------------------------------------------------------
// RunManifest

std::string RunManifest::encode() const {
  std::string s;
  s += kv("command", command);
  s += kv("seed", std::to_string(seed));
  for (const auto& in : inputs) s += kv("input", in);
  for (const auto& [k, v] : config) s += kv("config." + k, v);
  for (const auto& [k, v] : outputs) s += kv("output." + k, v);
  return s;
}

RunManifest RunManifest::decode(std::string_view text) {
  RunManifest m;
  bool have_command = false;
  for (auto line : lines_of(text)) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error("manifest line without '=': " + std::string(line));
    const std::string key(line.substr(0, eq));
    const std::string value(line.substr(eq + 1));
    if (key == "command") {
      m.command = value;
      have_command = true;
    } else if (key == "seed") {
      m.seed = parse_number<std::uint64_t>(value, "manifest seed");
    } else if (key == "input") {
      m.inputs.push_back(value);
    } else if (key.starts_with("config.")) {
      m.config.emplace_back(key.substr(7), value);
    } else if (key.starts_with("output.")) {
      m.outputs.emplace_back(key.substr(7), value);
    } else {
      throw Error("unknown manifest key '" + key + "'");
    }
  }
  if (!have_command) throw Error("manifest has no command");
  if (m.command == "replay") throw Error("manifest cannot replay a replay");
  return m;
}

std::vector<std::string> RunManifest::to_args() const {
  std::vector<std::string> args{command};
  for (const auto& in : inputs) args.push_back(in);
  for (const auto& [k, v] : config) args.push_back("--" + k + "=" + v);
  for (const auto& [k, v] : outputs) args.push_back("--" + k + "=" + v);
  return args;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Precision/recall of embedding sets with LSH manifold estimators, and weight compression"};
  app.name("lshpr");
  app.require_subcommand(1);

  Invocation inv;

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Precision and recall of a generated set against a real set");
  eval->add_option("real", ev.real, "Real (reference) embeddings, EMB1 or .csv")->required();
  eval->add_option("generated", ev.gen, "Generated embeddings, EMB1 or .csv")->required();
  eval->add_option("--estimator", ev.estimator, "lsh | lsh-knn | knn")->capture_default_str();
  eval->add_option("--k", ev.k, "Neighbourhood size")->capture_default_str();
  eval->add_option("--H", ev.hyperplanes, "Hyperplane count or 'auto'")->capture_default_str();
  eval->add_option("--runs", ev.runs, "Independent hyperplane draws")->capture_default_str();
  eval->add_option("--seed", ev.seed, "Base seed; run r uses seed + r")->capture_default_str();
  eval->add_option("--format", ev.format, "kv | json")->capture_default_str();
  eval->add_option("--threads", ev.threads, "Worker cap (0 = all cores)")->capture_default_str();
  eval->add_option("--out", ev.out, "Result record")->required();
  add_manifest_option(eval, inv);

  RealismArgs rs;
  auto* realism = app.add_subcommand("realism", "Per-sample realism score of generated points");
  realism->add_option("real", rs.real, "Real (reference) embeddings")->required();
  realism->add_option("generated", rs.gen, "Generated embeddings")->required();
  realism->add_option("--k", rs.k, "Neighbourhood size")->capture_default_str();
  realism->add_option("--H", rs.hyperplanes, "Hyperplane count or 'auto'")->capture_default_str();
  realism->add_option("--seed", rs.seed, "Hyperplane seed")->capture_default_str();
  realism->add_option("--planes", rs.planes, "Use stored HYP1 hyperplanes instead of drawing them");
  realism->add_flag("--drop-largest-radii", rs.drop_largest_radii,
                    "Ignore the half of the reference points with the largest radii");
  realism->add_option("--out", rs.out, "CSV of index,score")->required();
  add_manifest_option(realism, inv);

  BaselineArgs bl;
  auto* baseline = app.add_subcommand("baseline", "FID or KID between two sets");
  baseline->add_option("real", bl.real, "Real embeddings")->required();
  baseline->add_option("generated", bl.gen, "Generated embeddings")->required();
  baseline->add_option("--metric", bl.metric, "fid | kid")->capture_default_str();
  baseline->add_option("--block-size", bl.block_size, "KID block size (default min(n, 1000))");
  baseline->add_option("--out", bl.out, "Result record")->required();
  add_manifest_option(baseline, inv);

  CompressArgs cp;
  auto* comp = app.add_subcommand("compress", "Compress a TEN1 weight tensor");
  comp->add_option("tensor", cp.tensor, "Input TEN1 tensor")->required();
  comp->add_option("--scheme", cp.scheme, "lq | mcq | ocs-lq | aciq-lq")->capture_default_str();
  comp->add_option("--bits", cp.bits, "Bit-width for lq, ocs-lq and aciq-lq")->capture_default_str();
  comp->add_option("--mcq-samples", cp.mcq_samples, "Monte-Carlo sample count for mcq")->capture_default_str();
  comp->add_option("--expand-ratio", cp.expand_ratio, "Fraction of weights split by ocs-lq")
      ->capture_default_str();
  comp->add_option("--seed", cp.seed, "Seed for mcq")->capture_default_str();
  comp->add_option("--out", cp.out, "Output TEN1 tensor")->required();
  comp->add_option("--report", cp.report, "Optional key=value compression report");
  add_manifest_option(comp, inv);

  CorrelateArgs co;
  auto* corr = app.add_subcommand("correlate", "Correlation between two score series");
  corr->add_option("scores", co.scores, "CSV with header label,a,b")->required();
  corr->add_option("--method", co.method, "pearson | spearman | both")->capture_default_str();
  corr->add_option("--out", co.out, "Result record")->required();
  add_manifest_option(corr, inv);

  ParetoArgs pa;
  auto* pareto = app.add_subcommand("pareto", "Pareto frontier of precision/recall points");
  pareto->add_option("points", pa.points, "CSV with header tag,precision,recall")->required();
  pareto->add_option("--out", pa.out, "Frontier CSV")->required();
  add_manifest_option(pareto, inv);

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Distance-evaluation scaling benchmark on synthetic data");
  bench->add_option("--d", be.d, "Dimension")->capture_default_str();
  bench->add_option("--sizes", be.sizes, "Ascending comma-separated set sizes")->required();
  bench->add_option("--estimators", be.estimators, "Comma-separated estimators")->capture_default_str();
  bench->add_option("--seed", be.seed, "Base seed; repeat r uses seed + r")->capture_default_str();
  bench->add_option("--repeats", be.repeats, "Draws per size")->capture_default_str();
  bench->add_option("--k", be.k, "Neighbourhood size")->capture_default_str();
  bench->add_option("--distribution", be.distribution, "normal | uniform")->capture_default_str();
  bench->add_option("--threads", be.threads, "Worker cap (0 = all cores)")->capture_default_str();
  bench->add_option("--out", be.out, "Deterministic counts CSV")->required();
  bench->add_option("--timings", be.timings, "Optional wall-time CSV");
  add_manifest_option(bench, inv);

  ReplayArgs rp;
  auto* replay = app.add_subcommand("replay", "Re-run an invocation from its manifest");
  replay->add_option("manifest", rp.manifest, "Run manifest")->required();
  replay->add_option("--out-dir", rp.out_dir, "Write outputs here (same file names) instead");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (replay->parsed()) {
      RunManifest m = RunManifest::decode(io::read_file(rp.manifest));
      if (!rp.out_dir.empty()) {
        fs::create_directories(rp.out_dir);
        for (auto& [key, path] : m.outputs) path = (fs::path(rp.out_dir) / fs::path(path).filename()).string();
      }
      return run(m.to_args(), out, err);
    }
    inv.manifest.command = app.get_subcommands().front()->get_name();
    if (eval->parsed()) run_eval(ev, inv);
    if (realism->parsed()) run_realism(rs, inv);
    if (baseline->parsed()) run_baseline(bl, inv);
    if (comp->parsed()) run_compress(cp, inv);
    if (corr->parsed()) run_correlate(co, inv);
    if (pareto->parsed()) run_pareto(pa, inv);
    if (bench->parsed()) run_bench(be, inv);
    inv.finish();
  } catch (const std::exception& e) {
    err << "lshpr " << inv.manifest.command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lshpr::cli
