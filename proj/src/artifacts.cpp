#include "fiberpinn/artifacts.hpp"

#include <cstdio>

#include "fiberpinn/csv.hpp"

namespace fiberpinn {

void write_training_log(const std::filesystem::path& path, const TrainedBasis& b) {
  CsvWriter csv(path, {"epoch", "total", "residual", "boundary"});
  const std::size_t first = b.epochs_run + 1 - b.term_history.size();
  for (std::size_t k = 0; k < b.term_history.size(); ++k) {
    const LossTerms& t = b.term_history[k];
    csv.row({static_cast<double>(first + k), t.total, t.residual, t.boundary});
  }
  csv.close();
}

void write_candidates(const std::filesystem::path& path, const ReducedBasisModel& m) {
  CsvWriter csv(path, {"rate", "loss", "is_basis"});
  for (const auto& c : m.candidates) csv.row({c.rate, c.loss.total, c.is_basis ? 1.0 : 0.0});
  csv.close();
}

void write_greedy_tables(const std::filesystem::path& dir, const ReducedBasisModel& m) {
  CsvWriter hist(dir / "selection_history.csv", {"round", "rate", "worst_loss"});
  for (const auto& s : m.selection_history) {
    hist.row({static_cast<double>(s.round), s.rate, s.worst_loss});
  }
  hist.close();
  CsvWriter rounds(dir / "round_errors.csv",
                   {"n_bases", "rate", "loss", "residual", "boundary", "hit_max_iterations"});
  for (const auto& r : m.rounds) {
    for (const auto& e : r.entries) {
      rounds.row({static_cast<double>(r.n_bases), e.rate, e.loss.total, e.loss.residual,
                  e.loss.boundary, e.hit_max_iterations ? 1.0 : 0.0});
    }
  }
  rounds.close();
  write_candidates(dir / "candidates.csv", m);
  for (std::size_t k = 0; k < m.bases.size(); ++k) {
    if (m.bases[k].term_history.empty()) continue;
    char name[48];
    std::snprintf(name, sizeof name, "basis_%02zu_training_log.csv", k);
    write_training_log(dir / name, m.bases[k]);
  }
}

}  // namespace fiberpinn
