#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "sntf/errors.hpp"
#include "sntf/panel.hpp"

namespace sntf {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Reads a headered CSV, checking the header and the column count of every row.
template <class RowFn>
void read_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                RowFn&& on_row) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (!seen_header) {
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw CsvError(path.string(), line_no, "expected header '" + expected + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw CsvError(path.string(), line_no,
                     "expected " + std::to_string(header.size()) + " columns, got " +
                         std::to_string(fields.size()));
    on_row(fields, line_no);
  }
  if (!seen_header) throw CsvError(path.string(), line_no, "missing header");
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw CsvError(path.string(), line, "not a number: '" + text + "'");
  }
}

std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

double parse_clock(const std::string& text) {
  int hh = 0, mm = 0;
  const auto colon = text.find(':');
  bool ok = colon != std::string::npos && colon > 0 && colon + 3 == text.size();
  if (ok) {
    const auto r1 = std::from_chars(text.data(), text.data() + colon, hh);
    const auto r2 = std::from_chars(text.data() + colon + 1, text.data() + text.size(), mm);
    ok = r1.ec == std::errc{} && r1.ptr == text.data() + colon && r2.ec == std::errc{} &&
         r2.ptr == text.data() + text.size() && hh >= 0 && hh < 24 && mm >= 0 && mm < 60;
  }
  if (!ok) throw InputError("malformed time '" + text + "' (expected HH:MM)");
  return static_cast<double>(hh * 60 + mm) / 60.0;
}

std::string format_clock(double hours) {
  const long minutes = std::lround(hours * 60.0);
  std::ostringstream os;
  os << std::setw(2) << std::setfill('0') << minutes / 60 << ':' << std::setw(2)
     << std::setfill('0') << minutes % 60;
  return os.str();
}

LoadPanel read_panel_csv(const PanelFiles& files) {
  std::vector<std::string> sites, days;
  std::unordered_map<std::string, Index> site_index, day_index;
  std::map<long, double> time_of_minutes;
  // (site, day) -> minutes -> load
  std::map<std::pair<Index, Index>, std::map<long, double>> rows;

  auto intern = [](std::vector<std::string>& names, std::unordered_map<std::string, Index>& index,
                   const std::string& name) {
    auto [it, inserted] = index.try_emplace(name, static_cast<Index>(names.size()));
    if (inserted) names.push_back(name);
    return it->second;
  };

  read_table(files.loads, {"site", "day", "time", "load"},
             [&](const std::vector<std::string>& f, std::size_t line) {
               double hours = 0.0;
               try {
                 hours = parse_clock(f[2]);
               } catch (const InputError& e) {
                 throw CsvError(files.loads.string(), line, e.what());
               }
               const long minutes = std::lround(hours * 60.0);
               time_of_minutes[minutes] = hours;
               const double value = parse_number(f[3], files.loads, line);
               const Index n = intern(sites, site_index, f[0]);
               const Index j = intern(days, day_index, f[1]);
               if (!rows[{n, j}].emplace(minutes, value).second)
                 throw CsvError(files.loads.string(), line, "duplicate load row");
             });

  std::map<std::pair<Index, Index>, double> temps;
  if (files.temps) {
    read_table(*files.temps, {"site", "day", "temp"},
               [&](const std::vector<std::string>& f, std::size_t line) {
                 const double t = parse_number(f[2], *files.temps, line);
                 auto s = site_index.find(f[0]);
                 auto d = day_index.find(f[1]);
                 if (s == site_index.end() || d == day_index.end()) return;
                 if (!temps.emplace(std::pair{s->second, d->second}, t).second)
                   throw CsvError(files.temps->string(), line, "duplicate temperature row");
               });
  }

  std::map<std::pair<Index, Index>, int> regimes;
  int regime_count = 1;
  if (files.regimes) {
    read_table(*files.regimes, {"site", "day", "regime"},
               [&](const std::vector<std::string>& f, std::size_t line) {
                 int e = 0;
                 const auto r = std::from_chars(f[2].data(), f[2].data() + f[2].size(), e);
                 if (r.ec != std::errc{} || r.ptr != f[2].data() + f[2].size() || e < 1)
                   throw CsvError(files.regimes->string(), line,
                                  "regime must be a positive integer, got '" + f[2] + "'");
                 auto s = site_index.find(f[0]);
                 auto d = day_index.find(f[1]);
                 if (s == site_index.end() || d == day_index.end()) return;
                 if (!regimes.emplace(std::pair{s->second, d->second}, e).second)
                   throw CsvError(files.regimes->string(), line, "duplicate regime row");
                 regime_count = std::max(regime_count, e);
               });
  }

  std::vector<double> grid;
  for (const auto& [minutes, hours] : time_of_minutes) grid.push_back(hours);
  LoadPanel panel(grid, sites, days, regime_count, files.temps.has_value());

  std::vector<double> curve(grid.size());
  for (const auto& [key, values] : rows) {
    if (values.size() != grid.size()) continue;
    std::size_t i = 0;
    for (const auto& [minutes, value] : values) curve[i++] = value;
    double t = std::numeric_limits<double>::quiet_NaN();
    if (files.temps) {
      auto it = temps.find(key);
      if (it == temps.end() || !std::isfinite(it->second)) continue;
      t = it->second;
    }
    int e = 1;
    if (files.regimes) {
      auto it = regimes.find(key);
      if (it == regimes.end()) continue;
      e = it->second;
    }
    panel.set_day(key.second, key.first, curve, t, e);
  }
  return panel;
}

void write_panel_csv(const LoadPanel& panel, const PanelFiles& files) {
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    return out;
  };
  auto loads = open(files.loads);
  loads << "site,day,time,load\n";
  for (Index n = 0; n < panel.site_count(); ++n)
    for (Index j = 0; j < panel.day_count(); ++j) {
      if (!panel.observed(j, n)) continue;
      for (Index i = 0; i < panel.intraday_size(); ++i)
        loads << panel.sites()[n] << ',' << panel.days()[j] << ','
              << format_clock(panel.intraday_grid()[i]) << ',' << format_number(panel.load(j, n, i))
              << '\n';
    }
  if (files.temps) {
    if (!panel.has_temperatures()) throw InputError("panel has no temperatures to write");
    auto temps = open(*files.temps);
    temps << "site,day,temp\n";
    for (Index n = 0; n < panel.site_count(); ++n)
      for (Index j = 0; j < panel.day_count(); ++j)
        if (panel.observed(j, n))
          temps << panel.sites()[n] << ',' << panel.days()[j] << ','
                << format_number(panel.temperature(j, n)) << '\n';
  }
  if (files.regimes) {
    auto regimes = open(*files.regimes);
    regimes << "site,day,regime\n";
    for (Index n = 0; n < panel.site_count(); ++n)
      for (Index j = 0; j < panel.day_count(); ++j)
        if (panel.observed(j, n))
          regimes << panel.sites()[n] << ',' << panel.days()[j] << ',' << panel.regime(j, n) << '\n';
  }
}

}  // namespace sntf
