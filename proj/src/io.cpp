#include "emz/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "emz/errors.hpp"

namespace emz {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw ResourceError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ConfigError("cannot read input file '" + path + "'");
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, const std::string& path, int line) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw ConfigError(path + ":" + std::to_string(line) + ": '" + cell + "' is not a number");
  return v;
}

}  // namespace

void write_csv(const std::string& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw std::invalid_argument("csv: header/column mismatch");
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& c : columns)
    if (c.size() != rows) throw std::invalid_argument("csv: ragged columns");
  auto out = open_out(path);
  out << "# manifest " << manifest_hash << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    line.clear();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) line += ',';
      line += format_double(columns[c][r]);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw ResourceError("write failed for '" + path + "'");
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw ConfigError("CSV has no column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(const std::string& path) {
  auto in = open_in(path);
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# manifest ";
      if (line.rfind(tag, 0) == 0) t.manifest_hash = line.substr(tag.size());
      continue;
    }
    const auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = cells;
      t.columns.assign(cells.size(), {});
      continue;
    }
    if (cells.size() != t.header.size())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " columns");
    for (std::size_t i = 0; i < cells.size(); ++i)
      t.columns[i].push_back(parse_cell(cells[i], path, lineno));
  }
  if (t.header.empty()) throw ConfigError("'" + path + "' has no header row");
  return t;
}

void write_sampled(const std::string& path, const std::string& manifest_hash,
                   const SampledFunction& f, const std::vector<double>& std_error) {
  std::vector<double> t(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) t[i] = f.time(i);
  if (std_error.empty())
    write_csv(path, manifest_hash, {"t", "value"}, {t, f.values});
  else
    write_csv(path, manifest_hash, {"t", "value", "std_error"}, {t, f.values, std_error});
}

SampledFunction read_sampled(const std::string& path, std::vector<double>* std_error) {
  const CsvTable table = read_csv(path);
  const auto& t = table.column("t");
  SampledFunction f;
  f.values = table.column("value");
  if (t.size() < 2) throw ConfigError("'" + path + "' needs at least two samples");
  f.t0 = t[0];
  f.dt = t[1] - t[0];
  if (!(f.dt > 0.0)) throw ConfigError("'" + path + "': time column must increase");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - (f.t0 + i * f.dt)) > 1e-6 * f.dt)
      throw ConfigError("'" + path + "': non-uniform time grid at row " + std::to_string(i));
  f.validate();
  if (std_error) *std_error = table.has_column("std_error") ? table.column("std_error")
                                                            : std::vector<double>{};
  return f;
}

nlohmann::json to_json(const KernelModel& k) {
  return {{"format", "emz-kernel-model"},
          {"omega", k.omega},
          {"basis",
           {{"kind", to_string(k.basis.kind)},
            {"shift", k.basis.shift},
            {"width", k.basis.width},
            {"sigma", k.basis.sigma}}},
          {"coeffs", k.coeffs},
          {"observable", {{"name", k.observable.name}, {"c0", k.observable.c0}}}};
}

KernelModel kernel_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "emz-kernel-model") throw ConfigError("not a kernel model file");
    KernelModel k;
    k.omega = j.at("omega").get<double>();
    const auto& b = j.at("basis");
    k.basis.kind = basis_kind_from_string(b.at("kind").get<std::string>());
    k.basis.shift = b.at("shift").get<double>();
    k.basis.width = b.at("width").get<double>();
    k.basis.sigma = b.at("sigma").get<double>();
    k.coeffs = j.at("coeffs").get<std::vector<double>>();
    k.observable.name = j.at("observable").at("name").get<std::string>();
    k.observable.c0 = j.at("observable").at("c0").get<double>();
    k.basis.validate();
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed kernel model: ") + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) throw ResourceError("write failed for '" + path + "'");
}

nlohmann::json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void save_kernel_model(const std::string& path, const KernelModel& k) { write_json(path, to_json(k)); }

KernelModel load_kernel_model(const std::string& path) {
  return kernel_model_from_json(read_json(path));
}

nlohmann::json to_json(const KLModel& kl) {
  nlohmann::json modes = nlohmann::json::array();
  for (int k = 0; k < kl.modes(); ++k) {
    std::vector<double> col(kl.eigenfunctions.col(k).data(),
                            kl.eigenfunctions.col(k).data() + kl.points);
    modes.push_back(col);
  }
  return {{"format", "emz-kl-model"},    {"dt", kl.dt},
          {"points", kl.points},         {"eigenvalues", kl.eigenvalues},
          {"eigenfunctions", modes},     {"lambda_max", kl.lambda_max},
          {"discarded_trace", kl.discarded_trace}};
}

KLModel kl_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "emz-kl-model") throw ConfigError("not a KL model file");
    KLModel kl;
    kl.dt = j.at("dt").get<double>();
    kl.points = j.at("points").get<int>();
    kl.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    kl.lambda_max = j.at("lambda_max").get<double>();
    kl.discarded_trace = j.at("discarded_trace").get<double>();
    const auto& modes = j.at("eigenfunctions");
    if (modes.size() != kl.eigenvalues.size())
      throw ConfigError("KL model: eigenfunction count differs from eigenvalue count");
    kl.eigenfunctions.resize(kl.points, static_cast<Eigen::Index>(modes.size()));
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto col = modes[k].get<std::vector<double>>();
      if (static_cast<int>(col.size()) != kl.points)
        throw ConfigError("KL model: eigenfunction length differs from grid size");
      for (int i = 0; i < kl.points; ++i) kl.eigenfunctions(i, k) = col[i];
    }
    return kl;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed KL model: ") + e.what());
  }
}

void save_kl_model(const std::string& path, const KLModel& kl) { write_json(path, to_json(kl)); }

KLModel load_kl_model(const std::string& path) { return kl_model_from_json(read_json(path)); }

namespace {

nlohmann::json store_header(const TrajectoryStore& s, const nlohmann::json& manifest) {
  return {{"observables", s.observables}, {"paths", s.paths}, {"times", s.times},
          {"t0", s.t0},                   {"dt", s.dt},       {"manifest", manifest}};
}

TrajectoryStore store_from_header(const nlohmann::json& h) {
  try {
    return TrajectoryStore(h.at("observables").get<std::vector<std::string>>(),
                           h.at("paths").get<int>(), h.at("times").get<int>(),
                           h.at("t0").get<double>(), h.at("dt").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed trajectory store header: ") + e.what());
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void save_store(const std::string& path, const TrajectoryStore& store,
                const nlohmann::json& manifest) {
  const nlohmann::json header = store_header(store, manifest);
  if (ends_with(path, ".csv")) {
    auto out = open_out(path);
    out << "# manifest " << manifest.value("hash", "") << "\n";
    out << "# store " << header.dump() << "\n";
    out << "path,t";
    for (const auto& o : store.observables) out << "," << o;
    out << "\n";
    std::string line;
    for (int p = 0; p < store.paths; ++p)
      for (int k = 0; k < store.times; ++k) {
        line = std::to_string(p) + "," + format_double(store.time(k));
        for (std::size_t o = 0; o < store.observables.size(); ++o)
          line += "," + format_double(store.at(p, static_cast<int>(o), k));
        line += '\n';
        out << line;
      }
    if (!out) throw ResourceError("write failed for '" + path + "'");
    return;
  }
  static_assert(sizeof(double) == 8);
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "EMZSTORE1\n" << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(store.data.data()),
            static_cast<std::streamsize>(store.data.size() * sizeof(double)));
  if (!out) throw ResourceError("write failed for '" + path + "'");
}

TrajectoryStore load_store(const std::string& path) {
  if (ends_with(path, ".csv")) {
    auto in = open_in(path);
    std::string line;
    nlohmann::json header;
    while (std::getline(in, line) && line.rfind("#", 0) == 0)
      if (line.rfind("# store ", 0) == 0) header = nlohmann::json::parse(line.substr(8));
    if (header.is_null()) throw ConfigError("'" + path + "' has no store header line");
    TrajectoryStore s = store_from_header(header);
    const std::size_t nobs = s.observables.size();
    for (int p = 0; p < s.paths; ++p)
      for (int k = 0; k < s.times; ++k) {
        if (!std::getline(in, line)) throw ConfigError("'" + path + "' is truncated");
        const auto cells = split(line, ',');
        if (cells.size() != nobs + 2) throw ConfigError("'" + path + "': bad row");
        for (std::size_t o = 0; o < nobs; ++o)
          s.at(p, static_cast<int>(o), k) = parse_cell(cells[o + 2], path, 0);
      }
    return s;
  }
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != "EMZSTORE1") throw ConfigError("'" + path + "' is not a trajectory store");
  std::getline(in, header_line);
  TrajectoryStore s = store_from_header(nlohmann::json::parse(header_line));
  in.read(reinterpret_cast<char*>(s.data.data()),
          static_cast<std::streamsize>(s.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(s.data.size() * sizeof(double)))
    throw ConfigError("'" + path + "' is truncated");
  return s;
}

}  // namespace emz
