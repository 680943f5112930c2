#include "lodadapt/io.hpp"

#include "lodadapt/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace lodadapt {

std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), path_(path.string()), columns_(header.size()) {
  if (!out_)
    throw ConfigError("cannot write " + path_);
  for (size_t i = 0; i < header.size(); ++i)
    out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != columns_)
    throw StateError("CSV row with " + std::to_string(cells.size()) + " cells for " + std::to_string(columns_) +
                     " columns in " + path_);
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i)
      out_ << ',';
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>)
            out_ << format_double(v);
          else
            out_ << v;
        },
        cells[i]);
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_)
    throw ConfigError("write failed: " + path_);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

void write_field(const std::filesystem::path& path, const FieldFile& field) {
  size_t expect = 1;
  for (int c : field.counts)
    expect *= static_cast<size_t>(c);
  if (static_cast<int>(field.counts.size()) != field.dim || expect != field.values.size())
    throw StateError("field shape does not match its values");
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot write " + path.string());
  out << "lodadapt-field v1 " << field.dim;
  for (int c : field.counts)
    out << ' ' << c;
  out << '\n';
  for (double v : field.values)
    out << format_double(v) << '\n';
  if (!out)
    throw ConfigError("write failed: " + path.string());
}

FieldFile read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read " + path.string());
  std::string magic, version;
  FieldFile f;
  in >> magic >> version >> f.dim;
  if (magic != "lodadapt-field" || version != "v1" || f.dim < 1 || f.dim > 3)
    throw ConfigError(path.string() + " is not a lodadapt-field v1 file");
  size_t n = 1;
  f.counts.resize(f.dim);
  for (int& c : f.counts) {
    in >> c;
    if (!in || c < 1)
      throw ConfigError("bad field header in " + path.string());
    n *= static_cast<size_t>(c);
  }
  f.values.resize(n);
  std::string token;
  for (double& v : f.values) {
    if (!(in >> token))
      throw ConfigError("field file " + path.string() + " ends early");
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
      throw ConfigError("bad value '" + token + "' in " + path.string());
  }
  if (in >> token)
    throw ConfigError("field file " + path.string() + " has trailing data");
  return f;
}

FieldFile coefficient_field(const MeshPair& mesh, const Coefficient& a) {
  if (!(a.box() == mesh.fine_cell_box()))
    throw StateError("coefficient does not cover the fine mesh");
  FieldFile f;
  f.dim = mesh.dim();
  for (int i = 0; i < f.dim; ++i)
    f.counts.push_back(mesh.fine_cells()[i]);
  f.values = a.values();
  return f;
}

Coefficient field_coefficient(const MeshPair& mesh, const FieldFile& field) {
  bool match = field.dim == mesh.dim();
  for (int i = 0; match && i < field.dim; ++i)
    match = field.counts[i] == mesh.fine_cells()[i];
  if (!match)
    throw ConfigError("field file shape does not match the fine mesh");
  return Coefficient(mesh.fine_cell_box(), field.values);
}

FieldFile coarse_cell_field(const MeshPair& mesh, const Eigen::VectorXd& values) {
  FieldFile f;
  f.dim = mesh.dim();
  for (int i = 0; i < f.dim; ++i)
    f.counts.push_back(mesh.coarse_cells()[i]);
  f.values.assign(values.data(), values.data() + values.size());
  return f;
}

void write_coarse_solution(const std::filesystem::path& path, const MeshPair& mesh, const CoarseFunction& alpha) {
  const char* axes[] = {"x", "y", "z"};
  std::vector<std::string> header{"node_index"};
  for (int a = 0; a < mesh.dim(); ++a)
    header.emplace_back(axes[a]);
  header.emplace_back("value");
  CsvWriter w(path, header);
  const IndexBox nodes = mesh.coarse_node_box();
  for_each_index(nodes, [&](const IVec& n) {
    const int i = nodes.linear(n);
    const DVec x = mesh.coarse_node_point(n);
    std::vector<CsvCell> row{static_cast<std::int64_t>(i)};
    for (int a = 0; a < mesh.dim(); ++a)
      row.emplace_back(x[a]);
    row.emplace_back(alpha[i]);
    w.row(row);
  });
  w.close();
}

void write_flux(const std::filesystem::path& path, const MeshPair& mesh, const FaceSet& faces,
                const Eigen::VectorXd& sigma) {
  const char* axes[] = {"i", "j", "k"};
  std::vector<std::string> header{"face_index", "axis"};
  for (int a = 0; a < mesh.dim(); ++a)
    header.emplace_back(axes[a]);
  header.emplace_back("sigma");
  CsvWriter w(path, header);
  for (int i = 0; i < faces.size(); ++i) {
    const Face& f = faces[i];
    std::vector<CsvCell> row{static_cast<std::int64_t>(i), static_cast<std::int64_t>(f.axis)};
    for (int a = 0; a < mesh.dim(); ++a)
      row.emplace_back(static_cast<std::int64_t>(f.position[a]));
    row.emplace_back(sigma[i]);
    w.row(row);
  }
  w.close();
}

namespace {

std::string masked_content(const std::filesystem::path& p, const std::vector<std::string>& ignored) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  if (p.extension() != ".csv")
    return ss.str();
  const auto rows = read_csv(p);
  std::vector<bool> skip;
  if (!rows.empty())
    for (const std::string& h : rows[0])
      skip.push_back(std::find(ignored.begin(), ignored.end(), h) != ignored.end());
  std::string out;
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i)
      if (i >= skip.size() || !skip[i])
        out += row[i] + ',';
    out += '\n';
  }
  return out;
}

std::set<std::string> artifact_names(const std::filesystem::path& dir) {
  std::set<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "metadata.json")
      names.insert(e.path().filename().string());
  return names;
}

} // namespace

std::vector<std::string> artifact_differences(const std::filesystem::path& a, const std::filesystem::path& b,
                                              const std::vector<std::string>& ignored_columns) {
  const std::set<std::string> na = artifact_names(a), nb = artifact_names(b);
  std::set<std::string> all = na;
  all.insert(nb.begin(), nb.end());
  std::vector<std::string> diff;
  for (const std::string& n : all) {
    if (!na.count(n) || !nb.count(n) ||
        masked_content(a / n, ignored_columns) != masked_content(b / n, ignored_columns))
      diff.push_back(n);
  }
  return diff;
}

} // namespace lodadapt
