#pragma once

// CSV artifacts of training and greedy runs.

#include <filesystem>

#include "fiberpinn/reduced_basis.hpp"
#include "fiberpinn/trainer.hpp"

namespace fiberpinn {

/// epoch, total, residual, boundary for every evaluated epoch.
void write_training_log(const std::filesystem::path& path, const TrainedBasis& basis);

/// rate, loss, is_basis for every candidate.
void write_candidates(const std::filesystem::path& path, const ReducedBasisModel& model);

/// selection_history.csv, round_errors.csv, candidates.csv and one
/// basis_NN_training_log.csv per basis with a recorded history.
void write_greedy_tables(const std::filesystem::path& dir, const ReducedBasisModel& model);

}  // namespace fiberpinn
