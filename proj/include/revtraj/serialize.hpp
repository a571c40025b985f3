#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "revtraj/traj.hpp"

namespace revtraj {

using Json = nlohmann::json;

// Canonical trajectory JSON:
//   {instruction:{env,task_id,text}, initial_observation?, steps:[{thought?,action,observation}],
//    reward, terminal, kind}
// Revisions add {divergence, transition, bad_length, bad_reward, signal:{index,text}, source}.
Json to_json(const Step& step);
Json to_json(const Trajectory& trajectory);
Json to_json(const RevisionTrajectory& revision);

Step step_from_json(const Json& j);
Trajectory trajectory_from_json(const Json& j);
RevisionTrajectory revision_from_json(const Json& j);

// One JSON value per line; blank lines are skipped on read. Parse failures
// report the 1-based line number.
void write_json_lines(std::span<const Json> values, const std::filesystem::path& path);
std::vector<Json> read_json_lines(const std::filesystem::path& path);

void write_json_file(const Json& value, const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

}  // namespace revtraj
