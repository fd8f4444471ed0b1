#include "attnshape/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "attnshape/error.hpp"

namespace attnshape {

void AttentionCurve::validate() const {
  if (!(t_start >= 0 && t_start <= t_peak && t_peak <= t_stop))
    throw ConfigError("attention curve needs 0 <= t_start <= t_peak <= t_stop");
  if (!(floor >= 0.0 && floor <= 1.0))
    throw ConfigError("attention floor must lie in [0, 1]");
}

double eval_curve(const AttentionCurve& c, double t) {
  if (t <= c.t_start || t >= c.t_stop) return c.floor;
  if (t < c.t_peak)
    return std::max(1.0 - (c.t_peak - t) / (c.t_peak - c.t_start), c.floor);
  return std::max(1.0 - (t - c.t_peak) / (c.t_stop - c.t_peak), c.floor);
}

namespace {

void check_probability(double p, std::string_view name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError(std::string(name) + " must be a probability in [0, 1]");
}

std::uint32_t checked_u32(const KeyValues& kv, const std::string& key,
                          std::uint32_t fallback) {
  const std::int64_t v = kv.get_int(key, fallback);
  if (v < 0 || v > std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("key '" + key + "' out of range");
  return static_cast<std::uint32_t>(v);
}

constexpr std::array<std::string_view, 8> kSweepParameters = {
    "t_start", "t_peak", "t_stop", "floor",
    "global_awareness", "activity", "spam_fraction", "memory"};

}  // namespace

void SimConfig::validate() const {
  check_probability(global_awareness, "global_awareness");
  check_probability(activity, "activity");
  check_probability(spam_fraction, "spam_fraction");
  if (steps == 0) throw ConfigError("steps must be positive");
  if (memory == 0) throw ConfigError("memory must be positive");
  if (!(spam_start <= spam_stop && spam_stop <= steps))
    throw ConfigError("spam window needs spam_start <= spam_stop <= steps");
  curve.validate();
}

SimConfig SimConfig::from_config(const KeyValues& kv, const SimConfig& base) {
  static constexpr std::array<std::string_view, 14> known = {
      "global_awareness", "activity", "steps", "spam_fraction", "memory",
      "spam_start", "spam_stop", "t_start", "t_peak", "t_stop", "floor",
      "seed", "spam_assignment", "empty_pool"};
  for (const auto& [key, value] : kv.entries())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown simulation key '" + key + "'");

  SimConfig c = base;
  c.global_awareness = kv.get_double("global_awareness", c.global_awareness);
  c.activity = kv.get_double("activity", c.activity);
  c.steps = checked_u32(kv, "steps", c.steps);
  c.spam_fraction = kv.get_double("spam_fraction", c.spam_fraction);
  c.memory = checked_u32(kv, "memory", c.memory);
  c.spam_start = checked_u32(kv, "spam_start", c.spam_start);
  c.spam_stop = checked_u32(kv, "spam_stop", c.spam_stop);
  c.curve.t_start = kv.get_double("t_start", c.curve.t_start);
  c.curve.t_peak = kv.get_double("t_peak", c.curve.t_peak);
  c.curve.t_stop = kv.get_double("t_stop", c.curve.t_stop);
  c.curve.floor = kv.get_double("floor", c.curve.floor);
  if (const auto s = kv.get("seed")) {
    const std::int64_t v = kv.get_int("seed", 0);
    if (v < 0) throw ConfigError("seed must be non-negative, got " + *s);
    c.seed = static_cast<std::uint64_t>(v);
  }
  if (const auto s = kv.get("spam_assignment")) {
    if (*s == "coin_flip") c.spam_assignment = SpamAssignment::coin_flip;
    else if (*s == "fixed_count") c.spam_assignment = SpamAssignment::fixed_count;
    else throw ConfigError("spam_assignment must be coin_flip or fixed_count");
  }
  if (const auto s = kv.get("empty_pool")) {
    if (*s == "off_topic") c.empty_pool = EmptyPoolPolicy::off_topic;
    else if (*s == "global") c.empty_pool = EmptyPoolPolicy::defer_global;
    else throw ConfigError("empty_pool must be off_topic or global");
  }
  c.validate();
  return c;
}

KeyValues SimConfig::to_config() const {
  KeyValues kv;
  kv.set("global_awareness", format_rate(global_awareness));
  kv.set("activity", format_rate(activity));
  kv.set("steps", std::to_string(steps));
  kv.set("spam_fraction", format_rate(spam_fraction));
  kv.set("memory", std::to_string(memory));
  kv.set("spam_start", std::to_string(spam_start));
  kv.set("spam_stop", std::to_string(spam_stop));
  kv.set("t_start", format_rate(curve.t_start));
  kv.set("t_peak", format_rate(curve.t_peak));
  kv.set("t_stop", format_rate(curve.t_stop));
  kv.set("floor", format_rate(curve.floor));
  kv.set("seed", std::to_string(seed));
  kv.set("spam_assignment", spam_assignment == SpamAssignment::coin_flip
                                ? "coin_flip"
                                : "fixed_count");
  kv.set("empty_pool",
         empty_pool == EmptyPoolPolicy::off_topic ? "off_topic" : "global");
  return kv;
}

std::span<const std::string_view> sweep_parameters() { return kSweepParameters; }

SimConfig with_parameter(SimConfig c, std::string_view name, double value) {
  if (name == "t_start") c.curve.t_start = value;
  else if (name == "t_peak") c.curve.t_peak = value;
  else if (name == "t_stop") c.curve.t_stop = value;
  else if (name == "floor") c.curve.floor = value;
  else if (name == "global_awareness") c.global_awareness = value;
  else if (name == "activity") c.activity = value;
  else if (name == "spam_fraction") c.spam_fraction = value;
  else if (name == "memory") {
    if (!(value >= 1 && value == std::floor(value)))
      throw ConfigError("memory must be a positive integer");
    c.memory = static_cast<std::uint32_t>(value);
  } else {
    throw ArgumentError("unknown sweep parameter '" + std::string(name) + "'");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

PostMemory::PostMemory(std::size_t agents, std::uint32_t capacity)
    : capacity_(capacity),
      slots_(agents * capacity, kSilent),
      head_(agents, 0),
      fill_(agents, 0),
      on_(agents, 0),
      off_(agents, 0) {}

void PostMemory::record(NodeId agent, std::uint8_t state) {
  std::uint8_t* ring = slots_.data() + static_cast<std::size_t>(agent) * capacity_;
  std::uint32_t& head = head_[agent];
  if (fill_[agent] == capacity_) {
    const std::uint8_t evicted = ring[head];
    if (evicted == kOnTopic) --on_[agent];
    else if (evicted == kOffTopic) --off_[agent];
  } else {
    ++fill_[agent];
  }
  ring[head] = state;
  if (state == kOnTopic) ++on_[agent];
  else if (state == kOffTopic) ++off_[agent];
  head = head + 1 == capacity_ ? 0 : head + 1;
}

std::vector<std::uint8_t> PostMemory::recent(NodeId agent) const {
  const std::uint8_t* ring =
      slots_.data() + static_cast<std::size_t>(agent) * capacity_;
  std::vector<std::uint8_t> out;
  const std::uint32_t n = fill_[agent];
  // Oldest entry sits at head once the ring is full, at 0 before that.
  const std::uint32_t start = n == capacity_ ? head_[agent] : 0;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(ring[(start + i) % capacity_]);
  return out;
}

std::uint8_t step_spammer(std::uint32_t t, const SimConfig& config) {
  return config.spam_start <= t && t <= config.spam_stop ? kOnTopic : kSilent;
}

std::uint8_t step_authentic(NodeId agent, std::uint32_t t,
                            const FollowerGraph& graph,
                            const PostMemory& memory, const SimConfig& config,
                            Rng& rng) {
  if (!(rng.uniform() < config.activity)) return kSilent;
  const auto global_draw = [&] {
    return rng.uniform() < eval_curve(config.curve, t) ? kOnTopic : kOffTopic;
  };
  if (rng.uniform() < config.global_awareness) return global_draw();

  std::uint64_t on = 0, active = 0;
  for (NodeId leader : graph.leaders(agent)) {
    on += memory.on_topic(leader);
    active += memory.on_topic(leader) + memory.off_topic(leader);
  }
  if (active == 0)
    return config.empty_pool == EmptyPoolPolicy::defer_global ? global_draw()
                                                              : kOffTopic;
  return rng.uniform() < static_cast<double>(on) / static_cast<double>(active)
             ? kOnTopic
             : kOffTopic;
}

std::vector<bool> assign_spammers(std::size_t n, const SimConfig& config) {
  std::vector<bool> spammer(n, false);
  Rng setup(derive_seed(config.seed, 0));
  if (config.spam_assignment == SpamAssignment::coin_flip) {
    for (std::size_t i = 0; i < n; ++i) spammer[i] = setup.bernoulli(config.spam_fraction);
  } else {
    const auto k = static_cast<std::size_t>(
        std::llround(config.spam_fraction * static_cast<double>(n)));
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + setup.below(n - i);
      std::swap(ids[i], ids[j]);
      spammer[ids[i]] = true;
    }
  }
  return spammer;
}

namespace {

// Shared driver; `sink(step, agent, state)` sees every activation in order.
template <class Sink>
std::vector<bool> simulate(const FollowerGraph& graph, const SimConfig& config,
                           Sink&& sink) {
  config.validate();
  const std::size_t n = graph.node_count();
  if (n == 0) throw ArgumentError("simulation needs a nonempty graph");
  std::vector<bool> spammer = assign_spammers(n, config);
  PostMemory memory(n, config.memory);
  std::vector<NodeId> order(n);
  for (std::uint32_t t = 0; t < config.steps; ++t) {
    Rng rng(derive_seed(config.seed, 1 + static_cast<std::uint64_t>(t)));
    std::iota(order.begin(), order.end(), NodeId{0});
    rng.shuffle(order.begin(), order.end());
    for (NodeId agent : order) {
      const std::uint8_t state =
          spammer[agent] ? step_spammer(t, config)
                         : step_authentic(agent, t, graph, memory, config, rng);
      memory.record(agent, state);
      sink(t, agent, state);
    }
  }
  return spammer;
}

}  // namespace

SimTrace run(const FollowerGraph& graph, const SimConfig& config) {
  SimTrace trace;
  trace.steps = config.steps;
  trace.node_count = graph.node_count();
  trace.agents.reserve(trace.node_count * config.steps);
  trace.states.reserve(trace.node_count * config.steps);
  trace.spammer = simulate(graph, config, [&](std::uint32_t, NodeId agent,
                                              std::uint8_t state) {
    trace.agents.push_back(agent);
    trace.states.push_back(state);
    if (state != kSilent) ++trace.total_posts;
    if (state == kOnTopic) ++trace.topical_posts;
  });
  return trace;
}

RunHits run_hits(const FollowerGraph& graph, const SimConfig& config) {
  RunHits out;
  simulate(graph, config, [&](std::uint32_t, NodeId, std::uint8_t state) {
    if (state == kSilent) return;
    if (state == kOnTopic) {
      out.hits.push_back({out.total_posts, 1});
      ++out.topical_posts;
    }
    ++out.total_posts;
  });
  return out;
}

std::vector<TagHit> trace_hits(const SimTrace& trace) {
  std::vector<TagHit> hits;
  std::uint64_t id = 0;
  for (std::uint8_t s : trace.states) {
    if (s == kSilent) continue;
    if (s == kOnTopic) hits.push_back({id, 1});
    ++id;
  }
  return hits;
}

TraceInterval trace_to_interval(const SimTrace& trace) {
  CorpusBuilder builder(TagMode::per_post);
  const std::array<std::string_view, 1> topical = {kSimulatedTopic};
  for (std::uint32_t t = 0; t < trace.steps; ++t)
    for (std::uint8_t s : trace.states_at(t)) {
      if (s == kSilent) continue;
      builder.add_normalized(t, s == kOnTopic
                                    ? std::span<const std::string_view>(topical)
                                    : std::span<const std::string_view>{});
    }
  TraceInterval out{std::move(builder).finish(), {}};
  const auto hits = out.corpus.hits(kSimulatedTopic);
  if (hits.size() < 2)
    throw DegenerateIntervalError(
        "simulated trace has " + std::to_string(hits.size()) +
        " topical post(s); need at least two (is activity 0?)");
  out.interval = {std::string(kSimulatedTopic), hits.front().dataset_id,
                  hits.back().dataset_id, "trace"};
  return out;
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << "step,agent,state\n";
  for (std::uint32_t t = 0; t < trace.steps; ++t) {
    const auto agents = trace.order(t);
    const auto states = trace.states_at(t);
    for (std::size_t k = 0; k < agents.size(); ++k)
      out << t << ',' << agents[k] << ',' << static_cast<int>(states[k]) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

struct RunResult {
  std::vector<double> values;  // empty when degenerate
  std::uint64_t topical = 0;
  std::uint64_t posts = 0;
};

RunResult evaluate(const FollowerGraph& graph, const SimConfig& config,
                   std::size_t n_quantiles) {
  RunHits hits = run_hits(graph, config);
  RunResult r{{}, hits.topical_posts, hits.total_posts};
  try {
    r.values = representation(hits.hits, n_quantiles).values;
  } catch (const DegenerateIntervalError&) {
  }
  return r;
}

std::vector<RunResult> run_all(const FollowerGraph& graph,
                               const std::vector<SimConfig>& configs,
                               std::size_t n_quantiles, std::size_t threads) {
  std::vector<RunResult> results(configs.size());
  std::size_t workers = threads != 0 ? threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(configs.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < configs.size(); ++i)
      results[i] = evaluate(graph, configs[i], n_quantiles);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
          try {
            results[i] = evaluate(graph, configs[i], n_quantiles);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

MeanShape aggregate(std::span<const RunResult> runs, std::size_t n_quantiles) {
  MeanShape m;
  m.runs = runs.size();
  std::vector<double> sums(n_quantiles, 0.0);
  m.finite_counts.assign(n_quantiles, 0);
  double topical = 0, posts = 0;
  for (const RunResult& r : runs) {
    topical += static_cast<double>(r.topical);
    posts += static_cast<double>(r.posts);
    if (r.values.empty()) {
      ++m.degenerate_runs;
      continue;
    }
    for (std::size_t i = 0; i < n_quantiles; ++i) {
      if (std::isinf(r.values[i])) {
        ++m.infinite_entries;
        continue;
      }
      sums[i] += r.values[i];
      ++m.finite_counts[i];
    }
  }
  if (!runs.empty()) {
    m.mean_topical = topical / static_cast<double>(runs.size());
    m.mean_posts = posts / static_cast<double>(runs.size());
  }
  if (m.degenerate_runs < runs.size()) {
    m.values.resize(n_quantiles);
    for (std::size_t i = 0; i < n_quantiles; ++i)
      m.values[i] = m.finite_counts[i] == 0
                        ? kInfiniteRate
                        : sums[i] / static_cast<double>(m.finite_counts[i]);
  }
  return m;
}

}  // namespace

MeanShape mean_shape(const FollowerGraph& graph, const SimConfig& config,
                     const EnsembleOptions& options) {
  config.validate();
  std::vector<SimConfig> configs;
  for (std::size_t k = 0; k < options.seeds; ++k) {
    SimConfig c = config;
    c.seed = config.seed + k;
    configs.push_back(c);
  }
  const auto results = run_all(graph, configs, options.n_quantiles, options.threads);
  return aggregate(results, options.n_quantiles);
}

std::vector<SweepRow> sweep(const SimConfig& base, std::string_view parameter,
                            std::span<const double> values,
                            const FollowerGraph& graph,
                            const EnsembleOptions& options) {
  if (std::find(kSweepParameters.begin(), kSweepParameters.end(), parameter) ==
      kSweepParameters.end())
    throw ArgumentError("unknown sweep parameter '" + std::string(parameter) + "'");
  std::vector<SimConfig> configs;
  for (double value : values) {
    const SimConfig point = with_parameter(base, parameter, value);
    for (std::size_t k = 0; k < options.seeds; ++k) {
      SimConfig c = point;
      c.seed = base.seed + k;
      configs.push_back(c);
    }
  }
  const auto results = run_all(graph, configs, options.n_quantiles, options.threads);
  std::vector<SweepRow> rows;
  for (std::size_t v = 0; v < values.size(); ++v) {
    const std::span<const RunResult> slice(results.data() + v * options.seeds,
                                           options.seeds);
    rows.push_back({values[v], aggregate(slice, options.n_quantiles)});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  std::size_t n = 0;
  for (const auto& r : rows) n = std::max(n, r.shape.values.size());
  out << "param_value,total_topical";
  for (std::size_t i = 1; i <= n; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& r : rows) {
    out << format_rate(r.value) << ',' << format_rate(r.shape.mean_topical);
    for (double v : r.shape.values) out << ',' << format_rate(v);
    out << '\n';
  }
}

}  // namespace attnshape
