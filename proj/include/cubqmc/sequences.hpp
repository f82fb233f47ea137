#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cubqmc/detail/bits.hpp"
#include "cubqmc/detail/joe_kuo_1024.hpp"
#include "cubqmc/detail/lattice_vector_1024.hpp"
#include "cubqmc/errors.hpp"

namespace cubqmc {

/// Bits per coordinate of a digital point. Every coordinate is an exact binary64 fraction.
inline constexpr int kDigitalPrecision = 52;

enum class Family { digital, lattice };

inline const char* to_string(Family f) { return f == Family::digital ? "digital" : "lattice"; }

inline Family parse_family(const std::string& s) {
  if (s == "digital") return Family::digital;
  if (s == "lattice") return Family::lattice;
  throw InputError("unknown generator family '" + s + "' (expected digital|lattice)");
}

/// Row-major block of points x_{start}, ..., x_{start+count-1}.
struct PointBatch {
  std::uint64_t start = 0;
  std::size_t count = 0;
  std::size_t dimension = 0;
  std::vector<double> coords;

  std::span<const double> row(std::size_t i) const {
    return {coords.data() + i * dimension, dimension};
  }
  double operator()(std::size_t i, std::size_t j) const { return coords[i * dimension + j]; }
};

// ---------------------------------------------------------------------------
// Direction numbers
// ---------------------------------------------------------------------------

/// Parsed Joe-Kuo style direction-number table. Dimension 1 is implicit
/// (all m_k = 1, the van der Corput coordinate).
class DirectionNumberTable {
 public:
  struct Entry {
    int degree = 0;               // s
    std::uint64_t coefficients = 0;  // a
    std::vector<std::uint64_t> initial;  // m_1 .. m_s
  };

  DirectionNumberTable() = default;
  explicit DirectionNumberTable(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  /// Number of coordinates the table can generate, counting the implicit first one.
  std::size_t dimensions() const noexcept { return entries_.size() + 1; }

  /// The 52 generator-matrix columns of coordinate j (0-based). Column k holds the
  /// image of input bit k; bit 51 of a column is the first binary digit.
  std::array<std::uint64_t, kDigitalPrecision> columns(std::size_t j) const {
    if (j >= dimensions())
      throw CapacityError("direction-number table has " + std::to_string(dimensions()) +
                          " dimensions, coordinate " + std::to_string(j + 1) + " requested");
    constexpr int w = kDigitalPrecision;
    std::array<std::uint64_t, w> m{};
    if (j == 0) {
      m.fill(1);
    } else {
      const Entry& e = entries_[j - 1];
      const int s = e.degree;
      for (int k = 0; k < s && k < w; ++k) m[k] = e.initial[k];
      // m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}
      for (int k = s; k < w; ++k) {
        std::uint64_t v = (m[k - s] << s) ^ m[k - s];
        for (int i = 1; i < s; ++i) {
          if ((e.coefficients >> (s - 1 - i)) & 1u) v ^= m[k - i] << i;
        }
        m[k] = v;
      }
    }
    std::array<std::uint64_t, w> cols{};
    for (int k = 0; k < w; ++k) cols[k] = m[k] << (w - 1 - k);
    return cols;
  }

 private:
  std::vector<Entry> entries_;
};

/// Parse a table in the Joe-Kuo layout: one header line, then "d s a m_1 ... m_s" per line.
/// Reads at most `max_dimensions` coordinates (counting the implicit first one).
inline DirectionNumberTable load_direction_numbers(std::istream& in,
                                                   std::size_t max_dimensions = SIZE_MAX) {
  std::vector<DirectionNumberTable::Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (entries.size() + 1 < max_dimensions && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    long long d = 0, s = 0, a = 0;
    if (!(fields >> d >> s >> a)) throw ParseError("expected 'd s a m_1 ... m_s'", line_no);
    const auto expected_d = static_cast<long long>(entries.size() + 2);
    if (d != expected_d)
      throw ParseError("dimension " + std::to_string(d) + " out of sequence (expected " +
                           std::to_string(expected_d) + ")",
                       line_no);
    if (s < 1 || s >= kDigitalPrecision) throw ParseError("degree out of range", line_no);
    if (a < 0 || a >= (1LL << (s - 1))) throw ParseError("polynomial coefficients out of range", line_no);
    DirectionNumberTable::Entry e;
    e.degree = static_cast<int>(s);
    e.coefficients = static_cast<std::uint64_t>(a);
    for (long long k = 1; k <= s; ++k) {
      long long mk = 0;
      if (!(fields >> mk)) throw ParseError("missing m_" + std::to_string(k), line_no);
      if (mk <= 0 || mk % 2 == 0 || mk >= (1LL << k))
        throw ParseError("m_" + std::to_string(k) + " must be odd and below 2^" + std::to_string(k),
                         line_no);
      e.initial.push_back(static_cast<std::uint64_t>(mk));
    }
    std::string extra;
    if (fields >> extra) throw ParseError("trailing token '" + extra + "'", line_no);
    entries.push_back(std::move(e));
  }
  return DirectionNumberTable(std::move(entries));
}

inline DirectionNumberTable load_direction_numbers_file(const std::string& path,
                                                        std::size_t max_dimensions = SIZE_MAX) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open direction-number file '" + path + "'", 0);
  return load_direction_numbers(in, max_dimensions);
}

/// Embedded table: the first 1024 Joe-Kuo dimensions.
inline const DirectionNumberTable& default_direction_numbers() {
  static const DirectionNumberTable table = [] {
    std::istringstream in(detail::kJoeKuo1024);
    return load_direction_numbers(in);
  }();
  return table;
}

// ---------------------------------------------------------------------------
// Digital sequences
// ---------------------------------------------------------------------------

/// Base-2 digital sequence with optional linear matrix scrambling and digital shift.
/// Immutable after construction.
class DigitalGenerator {
 public:
  using Columns = std::array<std::uint64_t, kDigitalPrecision>;

  /// Unscrambled, unshifted template with the first `dimension` coordinates of `table`.
  DigitalGenerator(const DirectionNumberTable& table, std::size_t dimension) {
    if (dimension == 0) throw InputError("digital generator dimension must be positive");
    if (dimension > table.dimensions())
      throw CapacityError("requested dimension " + std::to_string(dimension) +
                          " exceeds direction-number table (" +
                          std::to_string(table.dimensions()) + ")");
    base_.reserve(dimension);
    for (std::size_t j = 0; j < dimension; ++j) base_.push_back(table.columns(j));
    scramble_.assign(dimension, identity_scramble());
    shift_.assign(dimension, 0);
    rebuild();
  }

  std::size_t dimension() const noexcept { return base_.size(); }
  int max_level() const noexcept { return kDigitalPrecision; }

  /// Generator columns before scrambling.
  const Columns& base_columns(std::size_t j) const { return base_[j]; }
  /// Columns after scrambling: what the points are generated from.
  const Columns& columns(std::size_t j) const { return columns_[j]; }
  /// Row r of the lower-triangular scramble matrix for coordinate j; bit (51 - c) set means
  /// output digit r+1 depends on input digit c+1.
  const Columns& scramble_rows(std::size_t j) const { return scramble_[j]; }
  std::uint64_t shift_bits(std::size_t j) const { return shift_[j]; }

  /// Unshifted digit vector z_i of coordinate j (52-bit integer, MSB = first digit).
  std::uint64_t digits(std::uint64_t i, std::size_t j) const {
    std::uint64_t z = 0;
    for (int k = 0; i != 0; ++k, i >>= 1)
      if (i & 1u) z ^= columns_[j][k];
    return z;
  }

  friend DigitalGenerator randomize_digital(const DigitalGenerator& tmpl, std::uint64_t seed);
  friend PointBatch digital_points(const DigitalGenerator& gen, std::uint64_t start,
                                   std::size_t count, std::size_t dimension);

 private:
  static Columns identity_scramble() {
    Columns rows{};
    for (int r = 0; r < kDigitalPrecision; ++r) rows[r] = std::uint64_t{1} << (kDigitalPrecision - 1 - r);
    return rows;
  }

  static std::uint64_t apply(const Columns& rows, std::uint64_t column) {
    std::uint64_t out = 0;
    for (int r = 0; r < kDigitalPrecision; ++r)
      out |= static_cast<std::uint64_t>(detail::parity(rows[r] & column))
             << (kDigitalPrecision - 1 - r);
    return out;
  }

  void rebuild() {
    const std::size_t d = base_.size();
    columns_.resize(d);
    gray_.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      std::uint64_t acc = 0;
      for (int k = 0; k < kDigitalPrecision; ++k) {
        columns_[j][k] = apply(scramble_[j], base_[j][k]);
        acc ^= columns_[j][k];
        gray_[j][k] = acc;
      }
    }
  }

  std::vector<Columns> base_;
  std::vector<Columns> scramble_;
  std::vector<Columns> columns_;
  std::vector<Columns> gray_;  // gray_[j][t] = columns 0..t XORed: the step i-1 -> i when ctz(i) = t
  std::vector<std::uint64_t> shift_;
};

/// Draw an independent unit-diagonal lower-triangular scramble matrix and a 52-bit digital
/// shift per coordinate from mt19937_64(seed). Same seed, same generator.
inline DigitalGenerator randomize_digital(const DigitalGenerator& tmpl, std::uint64_t seed) {
  DigitalGenerator gen = tmpl;
  std::mt19937_64 engine(seed);
  constexpr int w = kDigitalPrecision;
  constexpr std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  for (std::size_t j = 0; j < gen.dimension(); ++j) {
    for (int r = 0; r < w; ++r) {
      const std::uint64_t diag = std::uint64_t{1} << (w - 1 - r);
      const std::uint64_t above = mask & ~((diag << 1) - 1);  // digits 1..r
      gen.scramble_[j][r] = diag | (engine() & above);
    }
    gen.shift_[j] = engine() & mask;
  }
  gen.rebuild();
  return gen;
}

/// Points x_i = scramble(z_i) XOR shift in natural index order.
inline PointBatch digital_points(const DigitalGenerator& gen, std::uint64_t start,
                                 std::size_t count, std::size_t dimension) {
  constexpr std::uint64_t capacity = std::uint64_t{1} << kDigitalPrecision;
  if (dimension > gen.dimension())
    throw CapacityError("digital generator has " + std::to_string(gen.dimension()) +
                        " dimensions, " + std::to_string(dimension) + " requested");
  if (start > capacity || count > capacity - start)
    throw CapacityError("digital point index range exceeds 2^52");
  PointBatch batch{start, count, dimension, std::vector<double>(count * dimension)};
  if (count == 0) return batch;
  constexpr double scale = 0x1.0p-52;
  for (std::size_t j = 0; j < dimension; ++j) {
    std::uint64_t z = gen.digits(start, j);
    const auto& step = gen.gray_[j];
    const std::uint64_t shift = gen.shift_[j];
    batch.coords[j] = static_cast<double>(z ^ shift) * scale;
    for (std::size_t i = 1; i < count; ++i) {
      z ^= step[std::countr_zero(start + i)];
      batch.coords[i * dimension + j] = static_cast<double>(z ^ shift) * scale;
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Rank-1 lattice node sequences
// ---------------------------------------------------------------------------

/// Points frac(phi_2(i) g + shift) for i < 2^max_level. Immutable after construction.
class LatticeGenerator {
 public:
  LatticeGenerator(std::vector<std::uint64_t> generating_vector, int max_level,
                   std::vector<double> shift = {})
      : g_(std::move(generating_vector)), max_level_(max_level), shift_(std::move(shift)) {
    if (g_.empty()) throw InputError("lattice generating vector is empty");
    if (max_level_ < 1 || max_level_ > 52) throw InputError("lattice max level must be in [1, 52]");
    if (shift_.empty()) shift_.assign(g_.size(), 0.0);
    if (shift_.size() != g_.size()) throw InputError("lattice shift/vector dimension mismatch");
    const std::uint64_t mod_mask = (std::uint64_t{1} << max_level_) - 1;
    for (auto& gj : g_) gj &= mod_mask;
  }

  std::size_t dimension() const noexcept { return g_.size(); }
  int max_level() const noexcept { return max_level_; }
  std::span<const std::uint64_t> generating_vector() const noexcept { return g_; }
  std::span<const double> shift() const noexcept { return shift_; }

  /// The first `dimension` coordinates only.
  LatticeGenerator truncated(std::size_t dimension) const {
    if (dimension == 0 || dimension > g_.size())
      throw CapacityError("lattice generating vector has " + std::to_string(g_.size()) +
                          " components, " + std::to_string(dimension) + " requested");
    return LatticeGenerator({g_.begin(), g_.begin() + static_cast<std::ptrdiff_t>(dimension)},
                            max_level_,
                            {shift_.begin(), shift_.begin() + static_cast<std::ptrdiff_t>(dimension)});
  }

 private:
  std::vector<std::uint64_t> g_;
  int max_level_;
  std::vector<double> shift_;
};

/// Read one decimal integer per line (component j of g).
inline std::vector<std::uint64_t> load_lattice_vector(std::istream& in) {
  std::vector<std::uint64_t> g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long v = 0;
    std::string extra;
    if (!(fields >> v) || v < 0) throw ParseError("expected a non-negative integer", line_no);
    if (fields >> extra) throw ParseError("trailing token '" + extra + "'", line_no);
    g.push_back(static_cast<std::uint64_t>(v));
  }
  if (g.empty()) throw ParseError("lattice vector file is empty", line_no);
  return g;
}

inline std::vector<std::uint64_t> load_lattice_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lattice vector file '" + path + "'", 0);
  return load_lattice_vector(in);
}

inline std::vector<std::uint64_t> default_lattice_vector() {
  return {detail::kDefaultLatticeVector.begin(), detail::kDefaultLatticeVector.end()};
}

/// Uniform random shift in [0,1)^d from mt19937_64(seed).
inline LatticeGenerator randomize_lattice(const LatticeGenerator& tmpl, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<double> shift(tmpl.dimension());
  for (auto& s : shift) s = detail::uniform01(engine);
  const auto g = tmpl.generating_vector();
  return LatticeGenerator({g.begin(), g.end()}, tmpl.max_level(), std::move(shift));
}

inline PointBatch lattice_points(const LatticeGenerator& gen, std::uint64_t start,
                                 std::size_t count, std::size_t dimension) {
  const int m = gen.max_level();
  const std::uint64_t capacity = std::uint64_t{1} << m;
  if (dimension > gen.dimension())
    throw CapacityError("lattice generator has " + std::to_string(gen.dimension()) +
                        " dimensions, " + std::to_string(dimension) + " requested");
  if (start > capacity || count > capacity - start)
    throw CapacityError("lattice index range exceeds modulus 2^" + std::to_string(m));
  PointBatch batch{start, count, dimension, std::vector<double>(count * dimension)};
  const std::uint64_t mask = capacity - 1;
  const double scale = std::ldexp(1.0, -m);
  const auto g = gen.generating_vector();
  const auto shift = gen.shift();
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t k = detail::reverse_bits(start + i, m);
    for (std::size_t j = 0; j < dimension; ++j) {
      // wraparound mod 2^64 keeps the low m bits exact
      double x = static_cast<double>((k * g[j]) & mask) * scale + shift[j];
      if (x >= 1.0) x -= 1.0;
      batch.coords[i * dimension + j] = x;
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Family-agnostic handle
// ---------------------------------------------------------------------------

/// Where generator parameters come from; defaults are the embedded tables.
struct GeneratorSources {
  std::shared_ptr<const DirectionNumberTable> directions;
  std::shared_ptr<const std::vector<std::uint64_t>> lattice_vector;
  int lattice_max_level = detail::kDefaultLatticeMaxLevel;
};

/// A randomized digital or lattice sequence.
class SequenceGenerator {
 public:
  explicit SequenceGenerator(DigitalGenerator g) : impl_(std::move(g)) {}
  explicit SequenceGenerator(LatticeGenerator g) : impl_(std::move(g)) {}

  Family family() const noexcept {
    return std::holds_alternative<DigitalGenerator>(impl_) ? Family::digital : Family::lattice;
  }
  std::size_t dimension() const {
    return std::visit([](const auto& g) { return g.dimension(); }, impl_);
  }
  int max_level() const {
    return std::visit([](const auto& g) { return g.max_level(); }, impl_);
  }
  PointBatch points(std::uint64_t start, std::size_t count) const {
    return points(start, count, dimension());
  }
  PointBatch points(std::uint64_t start, std::size_t count, std::size_t dimension) const {
    if (const auto* d = std::get_if<DigitalGenerator>(&impl_))
      return digital_points(*d, start, count, dimension);
    return lattice_points(std::get<LatticeGenerator>(impl_), start, count, dimension);
  }
  const DigitalGenerator* digital() const { return std::get_if<DigitalGenerator>(&impl_); }
  const LatticeGenerator* lattice() const { return std::get_if<LatticeGenerator>(&impl_); }

 private:
  std::variant<DigitalGenerator, LatticeGenerator> impl_;
};

/// Randomized generator of the given family and dimension.
inline SequenceGenerator make_generator(Family family, std::size_t dimension, std::uint64_t seed,
                                        const GeneratorSources& sources = {}) {
  if (family == Family::digital) {
    const DirectionNumberTable& table =
        sources.directions ? *sources.directions : default_direction_numbers();
    return SequenceGenerator(randomize_digital(DigitalGenerator(table, dimension), seed));
  }
  const auto g = sources.lattice_vector ? *sources.lattice_vector : default_lattice_vector();
  if (dimension == 0 || dimension > g.size())
    throw CapacityError("lattice generating vector has " + std::to_string(g.size()) +
                        " components, " + std::to_string(dimension) + " requested");
  LatticeGenerator tmpl({g.begin(), g.begin() + static_cast<std::ptrdiff_t>(dimension)},
                        sources.lattice_max_level);
  return SequenceGenerator(randomize_lattice(tmpl, seed));
}

}  // namespace cubqmc
