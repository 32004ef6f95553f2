#include "fiberpinn/csv.hpp"

#include <cstdio>

#include "fiberpinn/error.hpp"

namespace fiberpinn {

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path) {
  if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  row(header);
}

void CsvWriter::row(std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    out_ << (first ? "" : ",") << format_number(v);
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
  out_ << '\n';
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::kIo, "error while writing " + path_.string());
  out_.close();
}

void write_field_csv(const std::filesystem::path& path, const GriddedField& field,
                     const Grid& grid) {
  if (field.n_t != grid.n_t() || field.n_zeta != grid.n_zeta()) {
    throw Error(ErrorCode::kInvalidGrid, "field shape differs from grid");
  }
  CsvWriter csv(path, {"t", "zeta", "s_real", "s_imag"});
  for (std::size_t j = 0; j < grid.n_zeta(); ++j) {
    for (std::size_t i = 0; i < grid.n_t(); ++i) {
      const auto s = field.at(i, j);
      csv.row({grid.t_nodes[i], grid.zeta_nodes[j], s.real(), s.imag()});
    }
  }
  csv.close();
}

}  // namespace fiberpinn
