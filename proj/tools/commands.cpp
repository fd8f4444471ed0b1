#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "artifacts.hpp"
#include "attnshape/corpus.hpp"
#include "attnshape/error.hpp"
#include "attnshape/kvconfig.hpp"
#include "attnshape/network.hpp"
#include "attnshape/profile.hpp"
#include "attnshape/shape.hpp"
#include "attnshape/simulate.hpp"

namespace attnshape::cli {
namespace fs = std::filesystem;

namespace {

// Bad input content; maps to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad flag values that CLI11 cannot check on its own; exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::size_t n_quantiles = kDefaultQuantiles;
  std::uint64_t min_count = kDefaultMinCount;
  bool strict = false;
  std::string tag_mode = "per-occurrence";
  bool reverse_edges = false;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  return in;
}

// Prefixes parse failures with the file they came from.
template <typename F>
auto with_file(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

InputFormat resolve_format(const std::string& flag, const std::string& path) {
  if (flag == "csv") return InputFormat::csv;
  if (flag == "ndjson") return InputFormat::ndjson;
  return fs::path(path).extension() == ".csv" ? InputFormat::csv
                                              : InputFormat::ndjson;
}

Corpus load_corpus(const std::string& path, const std::string& format,
                   const GlobalOptions& g) {
  auto in = open_input(path);
  return with_file(path, [&] {
    return ingest(in, resolve_format(format, path), parse_tag_mode(g.tag_mode));
  });
}

KeyValues load_config(const std::string& path) {
  if (path.empty()) return {};
  auto in = open_input(path);
  try {
    return KeyValues::parse(in);
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct GraphSpec {
  std::string path;
  std::string ba;
  bool undirected = false;
};

FollowerGraph load_graph(const GraphSpec& spec, const GlobalOptions& g,
                         std::uint64_t seed, std::ostream& err) {
  if (!spec.ba.empty()) {
    const auto comma = spec.ba.find(',');
    std::size_t n = 0, m = 0;
    const auto parse = [](std::string_view s, std::size_t& v) {
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc{} && p == s.data() + s.size();
    };
    const std::string_view text = spec.ba;
    if (comma == std::string::npos || !parse(text.substr(0, comma), n) ||
        !parse(text.substr(comma + 1), m))
      throw UsageError("--ba expects n,m, got '" + spec.ba + "'");
    return generate_ba(n, m, seed);
  }
  auto in = open_input(spec.path);
  EdgeListLoad load = with_file(spec.path, [&] {
    return load_edgelist(in, !spec.undirected, g.reverse_edges);
  });
  for (const auto& w : load.warnings) err << spec.path << ": " << w << '\n';
  return std::move(load.graph);
}

void add_graph_options(CLI::App* cmd, GraphSpec& spec) {
  auto* graph = cmd->add_option("--graph", spec.path, "edge list, `src dst` per line")
                    ->check(CLI::ExistingFile);
  auto* ba = cmd->add_option("--ba", spec.ba, "Barabasi-Albert graph as n,m");
  graph->excludes(ba);
  cmd->add_flag("--undirected", spec.undirected, "treat edges as mutual follows");
}

std::string graph_description(const GraphSpec& spec) {
  return spec.ba.empty() ? "file:" + spec.path : "ba:" + spec.ba;
}

Manifest manifest_for(std::string command, const KeyValues& cfg) {
  Manifest m;
  m.command = std::move(command);
  m.config_digest = sha256_hex(cfg.canonical());
  return m;
}

void add_input(Manifest& m, const std::string& path) {
  if (!path.empty()) m.inputs.emplace_back(path, sha256_file(path));
}

std::string sanitize(std::string_view text) {
  std::string out(text);
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return out;
}

struct Excluded {
  std::string tag, label, reason;
};

void write_excluded(const fs::path& path, const std::vector<Excluded>& rows) {
  std::ostringstream out;
  out << "tag,label,reason\n";
  for (const auto& r : rows)
    out << csv_field(r.tag) << ',' << csv_field(r.label) << ','
        << csv_field(r.reason) << '\n';
  write_atomic(path, out.str());
}

fs::path excluded_path(const fs::path& output) {
  auto p = output;
  p += ".excluded.csv";
  return p;
}

// ---------------------------------------------------------------------------

struct RepresentArgs {
  std::string corpus, intervals, output, format = "auto";
  std::optional<double> cap;
};

void cmd_represent(const RepresentArgs& a, const GlobalOptions& g,
                   std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus(a.corpus, a.format, g);
  auto spec_in = open_input(a.intervals);
  const auto specs =
      with_file(a.intervals, [&] { return parse_interval_specs(spec_in, corpus); });

  std::vector<LabeledVector> rows;
  std::vector<Excluded> excluded;
  for (const IntervalSpec& spec : specs) {
    std::vector<SplitInterval> parts;
    try {
      parts = split(corpus, spec, g.min_count);
    } catch (const ArgumentError& e) {
      throw DataError(a.intervals + ": " + e.what());
    }
    for (const SplitInterval& part : parts) {
      const auto& iv = part.interval;
      if (part.excluded) {
        if (g.strict)
          throw ThresholdError("interval " + iv.tag + "," + iv.label + " " +
                               part.reason);
        excluded.push_back({iv.tag, iv.label, part.reason});
        continue;
      }
      try {
        ShapeVector v = representation(corpus, iv, {g.n_quantiles, g.min_count, g.strict});
        if (!a.cap && v.has_infinity()) {
          excluded.push_back({iv.tag, iv.label, "infinite rate (duplicate positions)"});
          continue;
        }
        rows.push_back({iv, std::move(v)});
      } catch (const DegenerateIntervalError& e) {
        excluded.push_back({iv.tag, iv.label, e.what()});
      }
    }
  }
  for (const auto& x : excluded)
    err << "excluded " << x.tag << ',' << x.label << ": " << x.reason << '\n';

  AtomicFile file(a.output);
  export_vectors(file.stream(), rows, a.cap);
  file.commit();
  write_excluded(excluded_path(a.output), excluded);

  KeyValues cfg;
  cfg.set("format", a.format);
  cfg.set("n_quantiles", std::to_string(g.n_quantiles));
  cfg.set("min_count", std::to_string(g.min_count));
  cfg.set("strict", g.strict ? "true" : "false");
  cfg.set("tag_mode", g.tag_mode);
  if (a.cap) cfg.set("cap", format_rate(*a.cap));
  Manifest m = manifest_for("represent", cfg);
  add_input(m, a.corpus);
  add_input(m, a.intervals);
  m.seed = g.seed.value_or(0);
  m.outputs = {a.output, excluded_path(a.output).string()};
  write_atomic(manifest_path(a.output), manifest_json(m));
  out << rows.size() << " vectors, " << excluded.size() << " excluded\n";
}

// ---------------------------------------------------------------------------

struct BinsArgs {
  std::string corpus, tag, out_dir = ".", format = "auto";
  std::vector<std::string> widths;
};

void cmd_bins(const BinsArgs& a, const GlobalOptions& g, std::ostream& out) {
  std::vector<std::int64_t> widths;
  for (const auto& w : a.widths) {
    std::int64_t ms = 0;
    try {
      ms = parse_duration(w);
    } catch (const ArgumentError& e) {
      throw UsageError(std::string("--widths: ") + e.what());
    }
    if (ms <= 0) throw UsageError("--widths: bin width must be positive, got '" + w + "'");
    widths.push_back(ms);
  }
  const Corpus corpus = load_corpus(a.corpus, a.format, g);
  const std::string tag = normalize_tag(a.tag);
  fs::create_directories(a.out_dir);

  KeyValues cfg;
  cfg.set("tag", tag);
  cfg.set("tag_mode", g.tag_mode);
  std::string joined;
  for (const auto& w : a.widths) joined += (joined.empty() ? "" : ",") + w;
  cfg.set("widths", joined);
  Manifest m = manifest_for("bins", cfg);
  add_input(m, a.corpus);
  m.seed = g.seed.value_or(0);

  for (std::size_t i = 0; i < widths.size(); ++i) {
    const fs::path path = fs::path(a.out_dir) / (sanitize(tag) + "_" + sanitize(a.widths[i]) + ".csv");
    AtomicFile file(path);
    write_bins_csv(file.stream(), bin_counts(corpus, tag, widths[i]));
    file.commit();
    m.outputs.push_back(path.string());
    out << path.string() << '\n';
  }
  write_atomic(fs::path(a.out_dir) / (sanitize(tag) + "_bins.manifest.json"),
               manifest_json(m));
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string vectors, config, output;
};

void cmd_classify(const ClassifyArgs& a, const GlobalOptions& g,
                  std::ostream& out, std::ostream& err) {
  KeyValues kv = load_config(a.config);
  const KeyValues section = kv.section("classifier");
  const ClassifierParams params =
      ClassifierParams::from_config(section.entries().empty() ? kv : section);
  auto in = open_input(a.vectors);
  const auto rows = with_file(a.vectors, [&] { return read_vectors_csv(in); });

  std::ostringstream csv;
  csv << "tag,label,shape,score\n";
  std::vector<Excluded> excluded;
  std::size_t counts[6] = {};
  for (const LabeledVector& row : rows) {
    try {
      const ShapeClass c = classify(row.vector, params);
      ++counts[static_cast<int>(c.label)];
      csv << csv_field(row.interval.tag) << ',' << csv_field(row.interval.label) << ','
          << to_string(c.label) << ',' << format_rate(c.score) << '\n';
    } catch (const ArgumentError& e) {
      excluded.push_back({row.interval.tag, row.interval.label, e.what()});
      err << "excluded " << row.interval.tag << ',' << row.interval.label << ": "
          << e.what() << '\n';
    }
  }
  write_atomic(a.output, csv.str());
  write_excluded(excluded_path(a.output), excluded);

  KeyValues cfg = kv;
  Manifest m = manifest_for("classify", cfg);
  add_input(m, a.vectors);
  add_input(m, a.config);
  m.seed = g.seed.value_or(0);
  m.outputs = {a.output, excluded_path(a.output).string()};
  write_atomic(manifest_path(a.output), manifest_json(m));
  for (int k = 0; k < 6; ++k)
    if (counts[k]) out << to_string(static_cast<ShapeLabel>(k)) << ' ' << counts[k] << '\n';
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  std::vector<std::string> vectors;
  std::string output;
  std::optional<double> cap;
};

void cmd_export(const ExportArgs& a, const GlobalOptions& g, std::ostream& out,
                std::ostream& err) {
  std::vector<LabeledVector> rows;
  for (const auto& path : a.vectors) {
    auto in = open_input(path);
    auto part = with_file(path, [&] { return read_vectors_csv(in); });
    for (auto& r : part) {
      if (!rows.empty() && r.vector.n_quantiles != rows.front().vector.n_quantiles)
        throw DataError(path + ": vectors of different lengths (" +
                        std::to_string(r.vector.n_quantiles) + " vs " +
                        std::to_string(rows.front().vector.n_quantiles) + ")");
      rows.push_back(std::move(r));
    }
  }
  AtomicFile file(a.output);
  const ExportResult result = export_vectors(file.stream(), rows, a.cap);
  file.commit();
  std::vector<Excluded> excluded;
  for (const auto& note : result.excluded) {
    err << "excluded " << note << '\n';
    const auto colon = note.find(": ");
    const auto comma = note.find(',');
    excluded.push_back({note.substr(0, comma), note.substr(comma + 1, colon - comma - 1),
                        note.substr(colon + 2)});
  }
  write_excluded(excluded_path(a.output), excluded);

  KeyValues cfg;
  if (a.cap) cfg.set("cap", format_rate(*a.cap));
  Manifest m = manifest_for("export", cfg);
  for (const auto& p : a.vectors) add_input(m, p);
  m.seed = g.seed.value_or(0);
  m.outputs = {a.output, excluded_path(a.output).string()};
  write_atomic(manifest_path(a.output), manifest_json(m));
  out << result.rows << " rows, " << excluded.size() << " excluded\n";
}

// ---------------------------------------------------------------------------

SimConfig load_sim_config(const std::string& path, const GlobalOptions& g) {
  SimConfig config = SimConfig::from_config(load_config(path));
  if (g.seed) config.seed = *g.seed;
  return config;
}

struct SimulateArgs {
  GraphSpec graph;
  std::string config, out_dir = ".";
  std::size_t seeds = 1;
  std::size_t threads = 0;
};

void cmd_simulate(const SimulateArgs& a, const GlobalOptions& g,
                  std::ostream& out, std::ostream& err) {
  const SimConfig config = load_sim_config(a.config, g);
  const FollowerGraph graph = load_graph(a.graph, g, config.seed, err);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);

  const SimTrace trace = run(graph, config);
  const TraceInterval ti = trace_to_interval(trace);
  const ShapeVector vector = representation(ti.corpus, ti.interval, {g.n_quantiles, 0, false});

  {
    AtomicFile file(dir / "trace.csv");
    write_trace_csv(file.stream(), trace);
    file.commit();
  }
  {
    AtomicFile file(dir / "vectors.csv");
    write_vectors_header(file.stream(), g.n_quantiles);
    write_vector_row(file.stream(), {ti.interval, vector});
    file.commit();
  }

  nlohmann::ordered_json summary;
  summary["seed"] = config.seed;
  summary["steps"] = trace.steps;
  summary["agents"] = graph.node_count();
  summary["edges"] = graph.edge_count();
  summary["spammers"] = std::count(trace.spammer.begin(), trace.spammer.end(), true);
  summary["total_posts"] = trace.total_posts;
  summary["topical_posts"] = trace.topical_posts;
  std::vector<std::uint64_t> per_step(trace.steps);
  for (std::uint32_t t = 0; t < trace.steps; ++t) {
    const auto s = trace.states_at(t);
    per_step[t] = static_cast<std::uint64_t>(std::count(s.begin(), s.end(), kOnTopic));
  }
  summary["topical_per_step"] = per_step;
  if (a.seeds > 1) {
    const MeanShape mean = mean_shape(graph, config, {a.seeds, g.n_quantiles, a.threads});
    auto& e = summary["ensemble"];
    e["seeds"] = mean.runs;
    e["degenerate_runs"] = mean.degenerate_runs;
    e["infinite_entries"] = mean.infinite_entries;
    e["mean_total_posts"] = mean.mean_posts;
    e["mean_topical_posts"] = mean.mean_topical;
    std::vector<std::string> values;
    for (double v : mean.values) values.push_back(format_rate(v));
    e["mean_vector"] = values;
  }
  write_atomic(dir / "summary.json", summary.dump(2) + "\n");

  KeyValues cfg = config.to_config();
  cfg.set("cli.graph", graph_description(a.graph));
  cfg.set("cli.undirected", a.graph.undirected ? "true" : "false");
  cfg.set("cli.reverse_edges", g.reverse_edges ? "true" : "false");
  cfg.set("cli.seeds", std::to_string(a.seeds));
  cfg.set("cli.n_quantiles", std::to_string(g.n_quantiles));
  Manifest m = manifest_for("simulate", cfg);
  add_input(m, a.graph.path);
  add_input(m, a.config);
  m.seed = config.seed;
  m.outputs = {(dir / "trace.csv").string(), (dir / "vectors.csv").string(),
               (dir / "summary.json").string()};
  write_atomic(dir / "manifest.json", manifest_json(m));
  out << trace.topical_posts << " topical of " << trace.total_posts << " posts\n";
}

struct SweepArgs {
  GraphSpec graph;
  std::string config, parameter, output;
  std::vector<double> values;
  std::size_t seeds = 30;
  std::size_t threads = 0;
};

void cmd_sweep(const SweepArgs& a, const GlobalOptions& g, std::ostream& out,
               std::ostream& err) {
  const SimConfig config = load_sim_config(a.config, g);
  const FollowerGraph graph = load_graph(a.graph, g, config.seed, err);
  const auto rows = sweep(config, a.parameter, a.values, graph,
                          {a.seeds, g.n_quantiles, a.threads});
  for (const auto& r : rows)
    if (r.shape.degenerate_runs)
      err << a.parameter << '=' << format_rate(r.value) << ": "
          << r.shape.degenerate_runs << " degenerate runs skipped\n";

  AtomicFile file(a.output);
  write_sweep_csv(file.stream(), rows);
  file.commit();

  KeyValues cfg = config.to_config();
  cfg.set("cli.graph", graph_description(a.graph));
  cfg.set("cli.undirected", a.graph.undirected ? "true" : "false");
  cfg.set("cli.reverse_edges", g.reverse_edges ? "true" : "false");
  cfg.set("cli.parameter", a.parameter);
  std::string joined;
  for (double v : a.values) joined += (joined.empty() ? "" : ",") + format_rate(v);
  cfg.set("cli.values", joined);
  cfg.set("cli.seeds", std::to_string(a.seeds));
  cfg.set("cli.n_quantiles", std::to_string(g.n_quantiles));
  Manifest m = manifest_for("sweep", cfg);
  add_input(m, a.graph.path);
  add_input(m, a.config);
  m.seed = config.seed;
  m.outputs = {a.output};
  write_atomic(manifest_path(a.output), manifest_json(m));
  out << rows.size() << " sweep rows\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Scale-independent shapes of collective attention events"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));

  GlobalOptions g;
  app.add_option("--seed", g.seed, "root seed (overrides the config file)");
  app.add_option("--n-quantiles", g.n_quantiles, "representation length N")
      ->check(CLI::PositiveNumber);
  app.add_option("--min-count", g.min_count, "minimum topical posts per interval");
  app.add_flag("--strict", g.strict, "treat under-threshold intervals as errors");
  app.add_option("--tag-mode", g.tag_mode, "per-occurrence or per-post")
      ->check(CLI::IsMember({"per-occurrence", "per-post"}));
  app.add_flag("--reverse-edges", g.reverse_edges,
               "read edge-list lines as `follower leader`");

  const auto format_check = CLI::IsMember({"auto", "ndjson", "csv"});

  RepresentArgs rep;
  auto* represent = app.add_subcommand("represent", "interval shape vectors");
  represent->add_option("--corpus", rep.corpus)->required()->check(CLI::ExistingFile);
  represent->add_option("--intervals", rep.intervals)->required()->check(CLI::ExistingFile);
  represent->add_option("-o,--output", rep.output)->required();
  represent->add_option("--format", rep.format)->check(format_check);
  represent->add_option("--cap", rep.cap, "clamp infinite rates to this value")
      ->check(CLI::PositiveNumber);

  BinsArgs bins;
  auto* bins_cmd = app.add_subcommand("bins", "binned tag counts");
  bins_cmd->add_option("--corpus", bins.corpus)->required()->check(CLI::ExistingFile);
  bins_cmd->add_option("--tag", bins.tag)->required();
  bins_cmd->add_option("--widths", bins.widths, "e.g. 1h,6h,1d")->required()->delimiter(',');
  bins_cmd->add_option("--out-dir", bins.out_dir);
  bins_cmd->add_option("--format", bins.format)->check(format_check);

  ClassifyArgs cls;
  auto* classify_cmd = app.add_subcommand("classify", "label vector shapes");
  classify_cmd->add_option("--vectors", cls.vectors)->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--config", cls.config, "classifier thresholds")
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("-o,--output", cls.output)->required();

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export", "merge vectors for embedding tools");
  export_cmd->add_option("--vectors", exp.vectors)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("-o,--output", exp.output)->required();
  export_cmd->add_option("--cap", exp.cap)->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "run the agent model");
  add_graph_options(simulate_cmd, sim.graph);
  simulate_cmd->add_option("--config", sim.config)->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out-dir", sim.out_dir);
  simulate_cmd->add_option("--seeds", sim.seeds, "ensemble size for the mean vector")
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--threads", sim.threads);

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "mean vectors over a parameter");
  add_graph_options(sweep_cmd, sw.graph);
  sweep_cmd->add_option("--config", sw.config)->check(CLI::ExistingFile);
  sweep_cmd->add_option("--param", sw.parameter)->required();
  sweep_cmd->add_option("--values", sw.values)->required()->delimiter(',');
  sweep_cmd->add_option("--seeds", sw.seeds)->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--threads", sw.threads);
  sweep_cmd->add_option("-o,--output", sw.output)->required();

  std::vector<const char*> argv{"attnshape"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const auto need_graph = [&](const GraphSpec& s) {
    if (s.path.empty() && s.ba.empty()) throw UsageError("one of --graph or --ba is required");
  };
  try {
    if (*represent) cmd_represent(rep, g, out, err);
    else if (*bins_cmd) cmd_bins(bins, g, out);
    else if (*classify_cmd) cmd_classify(cls, g, out, err);
    else if (*export_cmd) cmd_export(exp, g, out, err);
    else if (*simulate_cmd) {
      need_graph(sim.graph);
      cmd_simulate(sim, g, out, err);
    } else if (*sweep_cmd) {
      need_graph(sw.graph);
      cmd_sweep(sw, g, out, err);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

}  // namespace attnshape::cli
