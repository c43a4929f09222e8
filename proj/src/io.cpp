#include "effdyn/csv.hpp"
#include "effdyn/errors.hpp"
#include "effdyn/io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <sstream>

namespace effdyn {

static_assert(std::endian::native == std::endian::little, "binary records assume a little-endian host");

namespace {

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("binary record truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

void put_amplitudes(std::string& out, const Eigen::VectorXcd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    put<double>(out, v(i).real());
    put<double>(out, v(i).imag());
  }
}

Eigen::VectorXcd take_amplitudes(const std::string& in, size_t& pos, Eigen::Index count) {
  if (in.size() - pos != static_cast<size_t>(count) * 16) throw IoError("binary record payload has the wrong length");
  Eigen::VectorXcd v(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double re = take<double>(in, pos);
    const double im = take<double>(in, pos);
    v(i) = Complex(re, im);
  }
  return v;
}

} // namespace

std::string encode_field(const Field& f) {
  std::string out;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.dimension()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.points_per_axis()));
  put<double>(out, f.grid.box_length());
  put_amplitudes(out, f.values);
  return out;
}

Field decode_field(const std::string& bytes) {
  size_t pos = 0;
  const auto dim = take<std::uint32_t>(bytes, pos);
  const auto n = take<std::uint32_t>(bytes, pos);
  const double length = take<double>(bytes, pos);
  GridSpec g = [&] {
    try {
      return GridSpec(static_cast<int>(dim), static_cast<int>(n), length);
    } catch (const std::invalid_argument& e) {
      throw IoError(std::string("field record has an invalid grid header: ") + e.what());
    }
  }();
  return Field(g, take_amplitudes(bytes, pos, g.size()));
}

void write_field(const Field& f, const std::filesystem::path& path) { write_text(path, encode_field(f)); }
Field read_field(const std::filesystem::path& path) { return decode_field(read_text(path)); }

std::string encode_state(const ManyBodyState& s) {
  if (!s.basis) throw std::invalid_argument("state has no basis");
  std::string out;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.basis->n_particles()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.basis->sites()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(s.basis->dimension()));
  put_amplitudes(out, s.amplitudes);
  return out;
}

ManyBodyState decode_state(const std::string& bytes, std::int64_t cap) {
  size_t pos = 0;
  const auto n = take<std::uint32_t>(bytes, pos);
  const auto m = take<std::uint32_t>(bytes, pos);
  const auto dim = take<std::uint64_t>(bytes, pos);
  if (n > 255 || m < 1 || m > (1u << 20)) throw IoError("state record has an invalid header");
  auto basis = std::make_shared<const SymmetricBasis>(static_cast<int>(n), static_cast<int>(m), cap);
  if (static_cast<std::uint64_t>(basis->dimension()) != dim)
    throw IoError("state record dimension does not match C(N + M - 1, N)");
  return {basis, take_amplitudes(bytes, pos, basis->dimension())};
}

void write_state(const ManyBodyState& s, const std::filesystem::path& path) { write_text(path, encode_state(s)); }
ManyBodyState read_state(const std::filesystem::path& path, std::int64_t cap) {
  return decode_state(read_text(path), cap);
}

std::string format_reduced_density(const ReducedDensityRecord& record) {
  const ReducedDensity& g = record.density;
  nlohmann::ordered_json meta;
  meta["N"] = record.n_particles;
  meta["M"] = g.sites;
  meta["k"] = g.k;
  meta["t"] = record.time;
  meta["spacing"] = g.spacing;
  std::string out = "# " + meta.dump() + "\nrow,col,re,im\n";
  for (Eigen::Index r = 0; r < g.kernel.rows(); ++r)
    for (Eigen::Index c = 0; c < g.kernel.cols(); ++c)
      out += std::to_string(r) + "," + std::to_string(c) + "," + format_double(g.kernel(r, c).real()) + "," +
             format_double(g.kernel(r, c).imag()) + "\n";
  return out;
}

ReducedDensityRecord parse_reduced_density(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IoError("reduced density file lacks its metadata line");
  ReducedDensityRecord record;
  try {
    const auto meta = nlohmann::json::parse(line.substr(2));
    record.n_particles = meta.at("N").get<int>();
    record.time = meta.at("t").get<double>();
    record.density.sites = meta.at("M").get<int>();
    record.density.k = meta.at("k").get<int>();
    record.density.spacing = meta.value("spacing", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("reduced density metadata is malformed: ") + e.what());
  }
  Eigen::Index n = 1;
  for (int j = 0; j < record.density.k; ++j) n *= record.density.sites;
  record.density.kernel = Eigen::MatrixXcd::Zero(n, n);
  const Series entries = parse_series(std::string(std::istreambuf_iterator<char>(in), {}));
  if (entries.columns != std::vector<std::string>{"row", "col", "re", "im"})
    throw IoError("reduced density table must have columns row,col,re,im");
  for (const auto& row : entries.rows) {
    const auto r = static_cast<Eigen::Index>(row[0]);
    const auto c = static_cast<Eigen::Index>(row[1]);
    if (r < 0 || c < 0 || r >= n || c >= n) throw IoError("reduced density entry index out of range");
    record.density.kernel(r, c) = Complex(row[2], row[3]);
  }
  return record;
}

} // namespace effdyn
