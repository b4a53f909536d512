#include "diffmean/sampling.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

#include "diffmean/error.hpp"

namespace diffmean {

namespace {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_probability(double alpha, double lo, double hi, bool open, const char* what) {
  const bool ok = open ? (alpha > lo && alpha < hi) : (alpha >= lo && alpha <= hi);
  if (!ok) {
    std::ostringstream os;
    os << what << ": alpha=" << alpha << " outside " << (open ? "(" : "[") << lo << ", " << hi << (open ? ")" : "]");
    throw DomainError(os.str());
  }
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& field, double& out) {
  const std::string f = trim(field);
  if (f.empty()) return false;
  const char* begin = f.data();
  const char* end = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

RandomSeed RandomSeed::split(std::uint64_t index) const {
  return RandomSeed{mix64(mix64(value) ^ mix64(index + 0x632be59bd9b4e019ULL))};
}

Rng::Rng(RandomSeed seed) : engine_(mix64(seed.value)) {}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

void DistributionSpec::validate() const {
  if (dim < 1) throw DomainError("distribution dimension must be at least 1");
  std::visit(Overloaded{
                 [](const TwoPole& d) { check_probability(d.alpha, 0.0, 0.5, false, "TwoPole"); },
                 [](const BimodalBrownianNormal& d) {
                   if (!(d.sigma2 > 0.0)) throw DomainError("BimodalBrownianNormal: sigma2 must be positive");
                   check_probability(d.alpha, 0.0, 1.0, false, "BimodalBrownianNormal");
                 },
                 [](const HemispherePointMass& d) { check_probability(d.alpha, 0.0, 1.0, true, "HemispherePointMass"); },
                 [this](const BrownianNormal& d) {
                   if (!(d.sigma2 > 0.0)) throw DomainError("BrownianNormal: sigma2 must be positive");
                   if (d.center && d.center->dim() != dim) throw DomainError("BrownianNormal: center dimension mismatch");
                 },
             },
             variant);
}

UnitVector DistributionSpec::reference_point() const {
  if (const auto* bn = std::get_if<BrownianNormal>(&variant); bn && bn->center) return *bn->center;
  return UnitVector::north_pole(dim);
}

std::string DistributionSpec::name() const {
  return std::visit(Overloaded{
                        [](const TwoPole&) { return std::string("two-pole"); },
                        [](const BimodalBrownianNormal&) { return std::string("bimodal"); },
                        [](const HemispherePointMass&) { return std::string("hemisphere"); },
                        [](const BrownianNormal&) { return std::string("brownian"); },
                    },
                    variant);
}

EmpiricalSample::EmpiricalSample(std::vector<UnitVector> points, std::optional<std::vector<double>> weights,
                                 std::optional<RandomSeed> provenance)
    : points_(std::move(points)), weights_(std::move(weights)), provenance_(provenance) {
  if (points_.empty()) throw DomainError("empirical sample must be nonempty");
  const int d = points_.front().ambient_dim();
  for (const auto& p : points_) {
    if (p.ambient_dim() != d) throw DomainError("all sample points must have the same dimension");
  }
  if (weights_) {
    if (weights_->size() != points_.size()) throw DomainError("weights and points differ in length");
    double total = 0.0;
    for (double w : *weights_) {
      if (!(w >= 0.0)) throw DomainError("sample weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("sample weights must sum to 1");
  }
}

Vector EmpiricalSample::extrinsic_average() const {
  Vector acc = Vector::Zero(points_.front().ambient_dim());
  for (std::size_t i = 0; i < points_.size(); ++i) acc += weight(i) * points_[i].coords();
  return acc;
}

int default_brownian_steps(double total_time) {
  return std::max(100, 100 * static_cast<int>(std::ceil(total_time)));
}

UnitVector brownian_sample(const UnitVector& center, double total_time, int steps, Rng& rng) {
  if (!(total_time > 0.0)) throw DomainError("brownian_sample: total_time must be positive");
  if (steps < 1) throw DomainError("brownian_sample: steps must be at least 1");
  const double sd = std::sqrt(total_time / steps);
  const int n = center.ambient_dim();
  UnitVector x = center;
  Vector g(n);
  for (int s = 0; s < steps; ++s) {
    for (int i = 0; i < n; ++i) g[i] = sd * rng.normal();
    // Dropping the normal component leaves an isotropic tangent Gaussian.
    g -= x.coords().dot(g) * x.coords();
    const double len = g.norm();
    if (len > 0.0) x = UnitVector(std::cos(len) * x.coords() + (std::sin(len) / len) * g);
  }
  return x;
}

UnitVector brownian_sample(const UnitVector& center, double total_time, int steps, RandomSeed seed) {
  Rng rng(seed);
  return brownian_sample(center, total_time, steps, rng);
}

UnitVector uniform_on_sphere(int m, Rng& rng) {
  Vector g(m + 1);
  double n = 0.0;
  do {
    for (int i = 0; i <= m; ++i) g[i] = rng.normal();
    n = g.norm();
  } while (n < 1e-12);
  return UnitVector(g);
}

EmpiricalSample draw(const DistributionSpec& dist, std::size_t n, RandomSeed seed) {
  dist.validate();
  if (n < 1) throw DomainError("draw: n must be at least 1");
  Rng rng(seed);
  const int m = dist.dim;
  const UnitVector mu = UnitVector::north_pole(m);
  std::vector<UnitVector> points;
  points.reserve(n);
  std::visit(Overloaded{
                 [&](const TwoPole& d) {
                   for (std::size_t i = 0; i < n; ++i) points.push_back(rng.uniform() < d.alpha ? mu.antipode() : mu);
                 },
                 [&](const BimodalBrownianNormal& d) {
                   const int steps = default_brownian_steps(d.sigma2);
                   for (std::size_t i = 0; i < n; ++i) {
                     const bool south = rng.uniform() < d.alpha;
                     points.push_back(brownian_sample(south ? mu.antipode() : mu, d.sigma2, steps, rng));
                   }
                 },
                 [&](const HemispherePointMass& d) {
                   for (std::size_t i = 0; i < n; ++i) {
                     if (rng.uniform() < d.alpha) {
                       Vector v = uniform_on_sphere(m, rng).coords();
                       v[1] = -std::abs(v[1]);
                       points.emplace_back(std::move(v));
                     } else {
                       points.push_back(mu);
                     }
                   }
                 },
                 [&](const BrownianNormal& d) {
                   const UnitVector c = d.center ? *d.center : mu;
                   const int steps = default_brownian_steps(d.sigma2);
                   for (std::size_t i = 0; i < n; ++i) points.push_back(brownian_sample(c, d.sigma2, steps, rng));
                 },
             },
             dist.variant);
  return EmpiricalSample(std::move(points), std::nullopt, seed);
}

EmpiricalSample population_sample(const DistributionSpec& dist) {
  dist.validate();
  const auto* tp = std::get_if<TwoPole>(&dist.variant);
  if (!tp) throw DomainError("population_sample: only the atomic two-pole distribution has a finite representation");
  const UnitVector mu = UnitVector::north_pole(dist.dim);
  return EmpiricalSample({mu, mu.antipode()}, std::vector<double>{1.0 - tp->alpha, tp->alpha});
}

UnitVector latlon_to_unit(double lat, double lon, const LatLonConvention& conv) {
  const double scale = conv.unit == LatLonConvention::Unit::Degrees ? std::numbers::pi / 180.0 : 1.0;
  const double limit = conv.unit == LatLonConvention::Unit::Degrees ? 90.0 : std::numbers::pi / 2.0;
  if (!(std::abs(lat) <= limit)) throw DomainError("latitude outside [-90, 90] degrees");
  const double phi = lat * scale;
  const double lam = lon * scale;
  Vector v(3);
  v << std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam), std::sin(phi);
  return UnitVector(std::move(v));
}

std::pair<double, double> unit_to_latlon(const UnitVector& p, const LatLonConvention& conv) {
  if (p.dim() != 2) throw DomainError("lat/lon conversion requires points on S^2");
  const double scale = conv.unit == LatLonConvention::Unit::Degrees ? 180.0 / std::numbers::pi : 1.0;
  const double lat = std::atan2(p[2], std::hypot(p[0], p[1]));
  const double lon = std::atan2(p[1], p[0]);
  return {lat * scale, lon * scale};
}

EmpiricalSample read_latlon_csv(std::istream& in, const LatLonConvention& conv) {
  std::vector<UnitVector> points;
  std::string line;
  int line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto comma = text.find(',');
    double lat = 0.0;
    double lon = 0.0;
    const bool ok = comma != std::string::npos && text.find(',', comma + 1) == std::string::npos &&
                    parse_double(text.substr(0, comma), lat) && parse_double(text.substr(comma + 1), lon);
    if (!ok) {
      if (!seen_data && points.empty()) {
        seen_data = true;  // header row
        continue;
      }
      throw ParseError("line " + std::to_string(line_no) + ": expected two finite numbers 'lat,lon'", line_no);
    }
    seen_data = true;
    try {
      points.push_back(latlon_to_unit(lat, lon, conv));
    } catch (const DomainError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  if (points.empty()) throw ParseError("lat/lon file contains no data rows", line_no);
  return EmpiricalSample(std::move(points));
}

std::vector<Vector> read_vectors_csv(std::istream& in) {
  std::vector<Vector> rows;
  std::string line;
  int line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::vector<double> vals;
    bool ok = true;
    std::size_t start = 0;
    while (ok) {
      const auto comma = text.find(',', start);
      double v = 0.0;
      ok = parse_double(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start), v);
      if (ok) vals.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!ok) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw ParseError("line " + std::to_string(line_no) + ": expected comma-separated finite numbers", line_no);
    }
    header_allowed = false;
    if (!rows.empty() && static_cast<std::size_t>(rows.front().size()) != vals.size())
      throw ParseError("line " + std::to_string(line_no) + ": row length differs from the first row", line_no);
    rows.emplace_back(Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  if (rows.empty()) throw ParseError("coordinate file contains no data rows", line_no);
  return rows;
}

std::vector<Vector> load_vectors_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return read_vectors_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

EmpiricalSample to_sphere_sample(const std::vector<Vector>& rows) {
  std::vector<UnitVector> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) pts.emplace_back(r);
  return EmpiricalSample(std::move(pts));
}

EmpiricalSample ingest_latlon_csv(const std::filesystem::path& path, const LatLonConvention& conv) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return read_latlon_csv(in, conv);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_latlon_csv(std::ostream& out, const EmpiricalSample& sample, const LatLonConvention& conv) {
  out << "lat,lon\n" << std::setprecision(17);
  for (const auto& p : sample.points()) {
    const auto [lat, lon] = unit_to_latlon(p, conv);
    out << lat << ',' << lon << '\n';
  }
}

void export_latlon_csv(const std::filesystem::path& path, const EmpiricalSample& sample, const LatLonConvention& conv) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_latlon_csv(out, sample, conv);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace diffmean
