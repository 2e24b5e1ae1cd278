#include <stdexcept>

#include "aftvo/eval.hpp"
#include "aftvo/io.hpp"

namespace aftvo::eval {
namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_cell(cells[i]);
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw std::invalid_argument("csv row width differs from header");
    line(r);
  }
}

std::vector<std::string> rpe_columns() {
  return {"rmse_m", "max_m", "mean_m", "std_m", "rot_rmse_rad", "rot_max_rad", "rot_mean_rad", "rot_std_rad"};
}

std::vector<std::string> rpe_cells(const RpeReport& r) {
  return {io::format_double(r.rmse),     io::format_double(r.max),     io::format_double(r.mean),
          io::format_double(r.std),      io::format_double(r.rot_rmse), io::format_double(r.rot_max),
          io::format_double(r.rot_mean), io::format_double(r.rot_std)};
}

bool HarnessResult::any_failed() const {
  for (const auto& c : cells)
    if (!c.error.empty()) return true;
  return false;
}

const HarnessRow& HarnessResult::row(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw std::out_of_range("no harness row '" + label + "'");
}

void write_harness_table(std::ostream& out, const HarnessResult& result) {
  std::vector<std::string> header{"row"};
  for (auto& c : rpe_columns()) header.push_back("median_" + c);
  header.push_back("seeds_ok");
  header.push_back("seeds_failed");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : result.rows) {
    std::vector<std::string> cells{r.label};
    for (auto& c : rpe_cells(r.median)) cells.push_back(c);
    cells.push_back(std::to_string(r.succeeded));
    cells.push_back(std::to_string(r.failed));
    rows.push_back(std::move(cells));
  }
  out << "# rpe pairs: consecutive query stamps\n";
  write_csv(out, header, rows);
}

}  // namespace aftvo::eval
