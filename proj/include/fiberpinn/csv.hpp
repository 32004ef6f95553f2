#pragma once

// Plain CSV output. Numbers are written with %.17g so files round-trip and
// two identical runs produce identical bytes.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "fiberpinn/physical_model.hpp"

namespace fiberpinn {

std::string format_number(double x);

class CsvWriter {
 public:
  /// Throws kIo when the file cannot be created.
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(std::initializer_list<double> values);
  void row(const std::vector<std::string>& cells);
  /// Flushes and throws kIo on a write error.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Columns t, zeta, s_real, s_imag in the grid's flat order.
void write_field_csv(const std::filesystem::path& path, const GriddedField& field,
                     const Grid& grid);

}  // namespace fiberpinn
