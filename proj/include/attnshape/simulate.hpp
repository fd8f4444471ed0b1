#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnshape/corpus.hpp"
#include "attnshape/kvconfig.hpp"
#include "attnshape/network.hpp"
#include "attnshape/rng.hpp"
#include "attnshape/shape.hpp"

namespace attnshape {

// Piecewise-linear global attention: `floor` outside (t_start, t_stop),
// rising to 1 at t_peak and falling back, never below `floor`.
struct AttentionCurve {
  double t_start = 125;
  double t_peak = 250;
  double t_stop = 375;
  double floor = 0.2;

  // Throws ConfigError unless t_start <= t_peak <= t_stop and floor in [0,1].
  void validate() const;
};

double eval_curve(const AttentionCurve& curve, double t);

enum class SpamAssignment {
  coin_flip,    // each agent independently with probability spam_fraction
  fixed_count,  // exactly round(spam_fraction * n) agents
};

// What an authentic agent does when its leaders' recent posts hold no
// active (state 1 or 2) entries.
enum class EmptyPoolPolicy {
  off_topic,      // post state 1
  defer_global,   // fall back to the global-attention draw
};

struct SimConfig {
  double global_awareness = 0.4;
  double activity = 0.3;
  std::uint32_t steps = 500;
  double spam_fraction = 0.0;
  std::uint32_t memory = 5;
  std::uint32_t spam_start = 375;
  std::uint32_t spam_stop = 475;
  AttentionCurve curve;
  std::uint64_t seed = 0;
  SpamAssignment spam_assignment = SpamAssignment::coin_flip;
  EmptyPoolPolicy empty_pool = EmptyPoolPolicy::off_topic;

  void validate() const;

  // Keys: global_awareness, activity, steps, spam_fraction, memory,
  // spam_start, spam_stop, t_start, t_peak, t_stop, floor, seed,
  // spam_assignment (coin_flip|fixed_count), empty_pool (off_topic|global).
  // Missing keys keep the values of `base`.
  static SimConfig from_config(const KeyValues& kv, const SimConfig& base);
  static SimConfig from_config(const KeyValues& kv) { return from_config(kv, SimConfig{}); }
  KeyValues to_config() const;
};

// Names accepted by with_parameter() and sweep().
std::span<const std::string_view> sweep_parameters();

// Copy of `config` with one numeric parameter replaced and re-validated.
SimConfig with_parameter(SimConfig config, std::string_view name, double value);

enum PostState : std::uint8_t { kSilent = 0, kOffTopic = 1, kOnTopic = 2 };

// Fixed-capacity history of each agent's recorded states, with running counts
// of active entries.
class PostMemory {
 public:
  PostMemory(std::size_t agents, std::uint32_t capacity);

  void record(NodeId agent, std::uint8_t state);

  std::uint32_t on_topic(NodeId agent) const { return on_[agent]; }
  std::uint32_t off_topic(NodeId agent) const { return off_[agent]; }
  std::uint32_t filled(NodeId agent) const { return fill_[agent]; }

  // Recorded states, oldest first.
  std::vector<std::uint8_t> recent(NodeId agent) const;

 private:
  std::uint32_t capacity_;
  std::vector<std::uint8_t> slots_;
  std::vector<std::uint32_t> head_;
  std::vector<std::uint32_t> fill_;
  std::vector<std::uint32_t> on_;
  std::vector<std::uint32_t> off_;
};

// Per-step log in activation order.
struct SimTrace {
  std::uint32_t steps = 0;
  std::size_t node_count = 0;
  std::vector<NodeId> agents;        // steps * node_count, step-major
  std::vector<std::uint8_t> states;  // parallel to agents
  std::vector<bool> spammer;
  std::uint64_t total_posts = 0;
  std::uint64_t topical_posts = 0;

  std::span<const NodeId> order(std::uint32_t step) const {
    return {agents.data() + step * node_count, node_count};
  }
  std::span<const std::uint8_t> states_at(std::uint32_t step) const {
    return {states.data() + step * node_count, node_count};
  }
};

std::uint8_t step_spammer(std::uint32_t t, const SimConfig& config);

std::uint8_t step_authentic(NodeId agent, std::uint32_t t,
                            const FollowerGraph& graph,
                            const PostMemory& memory, const SimConfig& config,
                            Rng& rng);

// Spammer flags drawn at setup for `config`.
std::vector<bool> assign_spammers(std::size_t n, const SimConfig& config);

SimTrace run(const FollowerGraph& graph, const SimConfig& config);

// Topical hits (dataset ids over posts with state 1 or 2) without keeping
// the trace. Same ids as trace_to_interval(run(graph, config)).
struct RunHits {
  std::vector<TagHit> hits;
  std::uint64_t total_posts = 0;
  std::uint64_t topical_posts = 0;
};
RunHits run_hits(const FollowerGraph& graph, const SimConfig& config);

inline constexpr std::string_view kSimulatedTopic = "topic";

struct TraceInterval {
  Corpus corpus;
  EventInterval interval;
};

// Posts with state 1 or 2 become the corpus in activation order, timestamped
// by step; state-2 posts carry the tag "topic". Throws
// DegenerateIntervalError with fewer than two topical posts.
TraceInterval trace_to_interval(const SimTrace& trace);

std::vector<TagHit> trace_hits(const SimTrace& trace);

void write_trace_csv(std::ostream& out, const SimTrace& trace);

// Elementwise mean of per-seed vectors; infinite entries are skipped and
// counted, degenerate runs are skipped and counted.
struct MeanShape {
  std::vector<double> values;
  std::vector<std::uint32_t> finite_counts;
  double mean_topical = 0.0;
  double mean_posts = 0.0;
  std::size_t runs = 0;
  std::size_t degenerate_runs = 0;
  std::size_t infinite_entries = 0;
};

struct EnsembleOptions {
  std::size_t seeds = 30;
  std::size_t n_quantiles = kDefaultQuantiles;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Runs seeds config.seed, config.seed + 1, ...
MeanShape mean_shape(const FollowerGraph& graph, const SimConfig& config,
                     const EnsembleOptions& options);

struct SweepRow {
  double value = 0.0;
  MeanShape shape;
};

// Throws ArgumentError for a parameter outside sweep_parameters().
std::vector<SweepRow> sweep(const SimConfig& base, std::string_view parameter,
                            std::span<const double> values,
                            const FollowerGraph& graph,
                            const EnsembleOptions& options);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace attnshape
