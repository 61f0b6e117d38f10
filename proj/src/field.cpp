#include "bvc/field.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace bvc {

void GridSpec::validate() const {
  if (d < 1 || d > 3) throw std::invalid_argument("GridSpec: d must be 1, 2 or 3");
  if (m < 8 || (m & (m - 1)) != 0) throw std::invalid_argument("GridSpec: m must be a power of two >= 8");
  const int limit = d == 1 ? 4096 : (d == 2 ? 256 : 64);
  if (m > limit) throw std::invalid_argument("GridSpec: m exceeds the per-dimension limit");
  if (!(box > 0.0) || !std::isfinite(box)) throw std::invalid_argument("GridSpec: box must be positive");
  if (size() > (Eigen::Index{1} << 22)) throw std::invalid_argument("GridSpec: too many points");
}

Eigen::Index GridSpec::size() const {
  Eigen::Index total = 1;
  for (int k = 0; k < d; ++k) total *= m;
  return total;
}

double GridSpec::cell_volume() const { return std::pow(cell(), d); }

std::array<int, 3> GridSpec::unflatten(Eigen::Index flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int k = d - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(flat % m);
    flat /= m;
  }
  return idx;
}

double GridSpec::wavenumber(int slot) const {
  const int k = slot < m / 2 ? slot : slot - m;
  return 2.0 * std::numbers::pi / box * k;
}

double periodic_distance(const GridSpec& grid, Eigen::Index a, Eigen::Index b) {
  const auto ia = grid.unflatten(a);
  const auto ib = grid.unflatten(b);
  double sum = 0.0;
  for (int k = 0; k < grid.d; ++k) {
    int diff = std::abs(ia[k] - ib[k]);
    diff = std::min(diff, grid.m - diff);
    const double dx = diff * grid.cell();
    sum += dx * dx;
  }
  return std::sqrt(sum);
}

SampledField::SampledField(const GridSpec& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) { validate(); }

SampledField SampledField::zeros(const GridSpec& g) { return constant(g, 0.0); }

SampledField SampledField::constant(const GridSpec& g, double c) {
  g.validate();
  return SampledField(g, Eigen::VectorXd::Constant(g.size(), c));
}

SampledField SampledField::from_function(const GridSpec& g,
                                         const std::function<double(std::span<const double>)>& f) {
  g.validate();
  Eigen::VectorXd v(g.size());
  std::array<double, 3> x{};
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto idx = g.unflatten(i);
    for (int k = 0; k < g.d; ++k) x[k] = g.coordinate(idx[k]);
    v(i) = f(std::span<const double>(x.data(), g.d));
  }
  return SampledField(g, std::move(v));
}

void SampledField::validate() const {
  grid.validate();
  if (values.size() != grid.size()) throw std::invalid_argument("SampledField: length does not match grid");
  if (!values.allFinite()) throw std::invalid_argument("SampledField: values must be finite");
}

namespace {

constexpr char kMagic[4] = {'B', 'V', 'C', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("read_field: truncated input");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void write_field(std::ostream& out, const SampledField& field) {
  field.validate();
  out.write(kMagic, 4);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(field.grid.d));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(field.grid.m));
  put_le<double>(out, field.grid.box);
  for (Eigen::Index i = 0; i < field.values.size(); ++i) put_le<double>(out, field.values(i));
  if (!out) throw std::runtime_error("write_field: stream failure");
}

SampledField read_field(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("read_field: bad magic");
  GridSpec grid;
  const auto d = get_le<std::uint64_t>(in);
  const auto m = get_le<std::uint64_t>(in);
  if (d > 3 || m > 4096) throw std::runtime_error("read_field: header out of range");
  grid.d = static_cast<int>(d);
  grid.m = static_cast<int>(m);
  grid.box = get_le<double>(in);
  grid.validate();
  Eigen::VectorXd values(grid.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = get_le<double>(in);
  return SampledField(grid, std::move(values));
}

}  // namespace bvc
