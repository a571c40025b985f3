#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revtraj/serialize.hpp"
#include "revtraj/traj.hpp"

namespace revtraj {

enum class SampleKind { good, revision, general };
enum class Role { human, assistant };

const char* to_string(SampleKind kind) noexcept;
const char* to_string(Role role) noexcept;
SampleKind sample_kind_from_string(std::string_view text);
// Accepts human/user and assistant/gpt.
Role role_from_string(std::string_view text);

struct Message {
  Role role = Role::human;
  std::string content;
  bool train = false;

  bool operator==(const Message&) const = default;
};

struct SampleMeta {
  std::string env;
  std::string task_id;
  int iteration = 0;
  std::optional<double> reward;
  std::optional<std::size_t> divergence;
  std::optional<std::size_t> transition;
  std::optional<int> thought_index;

  bool operator==(const SampleMeta&) const = default;
};

struct DatasetSample {
  std::string id;
  SampleKind kind = SampleKind::good;
  std::vector<Message> messages;
  SampleMeta meta;

  bool operator==(const DatasetSample&) const = default;
};

Json to_json(const DatasetSample& sample);
DatasetSample sample_from_json(const Json& j);

// Opening human turn: the instruction, then the first observation on the next
// line when there is one.
std::string opening_message(const Instruction& instruction, std::string_view initial_observation);

// Every assistant turn is trainable.
DatasetSample render_sample(const Trajectory& trajectory, int iteration, std::string id);

// Assistant turns before the signal are context only; the signal and the
// good suffix are trainable. The signal is the bare reflection, answered by
// the fixed acknowledgement.
DatasetSample render_sample(const RevisionTrajectory& revision, int iteration, std::string id);

// Which pool eta weights. agent: eta is the agent share (the default);
// general: eta is the general share.
enum class MixDirection { agent, general };

const char* to_string(MixDirection direction) noexcept;
MixDirection mix_direction_from_string(std::string_view text);

struct MixConfig {
  double eta = 0.2;
  MixDirection direction = MixDirection::agent;
  std::uint64_t seed = 0;

  void validate() const;
  double agent_share() const noexcept { return direction == MixDirection::agent ? eta : 1.0 - eta; }
};

// Both pools are shuffled, then each draw takes from the agent pool with
// probability agent_share() and from the general pool otherwise, stopping the
// first time the chosen pool is empty. A share of exactly 1 (or 0) emits one
// pool whole. Throws EmptyPool when a share strictly between 0 and 1 meets an
// empty pool.
std::vector<DatasetSample> mix(std::vector<DatasetSample> agent,
                               std::vector<DatasetSample> general, const MixConfig& cfg);

void write_jsonl(std::span<const DatasetSample> samples, const std::filesystem::path& path);
std::vector<DatasetSample> read_jsonl(const std::filesystem::path& path);

// Chat-format JSONL with {messages:[{role,content}]} per line (id optional).
// Samples become kind general with exactly the assistant turns trainable.
std::vector<DatasetSample> load_general(const std::filesystem::path& path);

}  // namespace revtraj
