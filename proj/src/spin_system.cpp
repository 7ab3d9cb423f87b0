#include "spinamp/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "spinamp/error.hpp"
#include "text.hpp"

namespace spinamp {

namespace {

// CODATA 2018.
constexpr double kPlanck = 6.62607015e-34;         // J s
constexpr double kMu0Over4Pi = 1.00000000055e-7;   // T^2 m^3 / J
constexpr double kAngstrom = 1e-10;                // m

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd d) : d_(std::move(d)) {
  if (d_.rows() != d_.cols()) throw InvalidArgument("coupling matrix must be square");
  for (Eigen::Index i = 0; i < d_.rows(); ++i) {
    if (d_(i, i) != 0.0) throw InvalidArgument("coupling matrix must have a zero diagonal");
    for (Eigen::Index j = 0; j < d_.cols(); ++j) {
      if (!std::isfinite(d_(i, j))) throw InvalidArgument("coupling matrix entries must be finite");
      if (d_(i, j) != d_(j, i)) throw InvalidArgument("coupling matrix must be symmetric");
    }
  }
}

CouplingMatrix CouplingMatrix::zeros(std::size_t n) {
  return CouplingMatrix(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

FieldPoint::FieldPoint(double g) : gauss(g) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("field strength must be finite and >= 0");
}

double larmor_hz(double gamma_mhz_per_t, FieldPoint field) { return gamma_mhz_per_t * 1e6 * field.tesla(); }

double dipolar_coupling(const Vec3& pos_i, const Vec3& pos_j, double gamma_i, double gamma_j,
                        const Vec3& field_axis) {
  const Vec3 r{pos_j[0] - pos_i[0], pos_j[1] - pos_i[1], pos_j[2] - pos_i[2]};
  const double dist = norm(r);
  if (!(dist > 0.0)) throw InvalidArgument("degenerate geometry: coincident spin positions");
  const double axis_norm = norm(field_axis);
  if (std::abs(axis_norm - 1.0) > 1e-9) throw InvalidArgument("field axis must be a unit vector");
  const double cos_theta = (r[0] * field_axis[0] + r[1] * field_axis[1] + r[2] * field_axis[2]) / dist;
  const double angular = 1.0 - 3.0 * cos_theta * cos_theta;
  const double r_m = dist * kAngstrom;
  return kMu0Over4Pi * kPlanck * (gamma_i * 1e6) * (gamma_j * 1e6) * angular / (r_m * r_m * r_m);
}

SpinSystem::SpinSystem(std::vector<SpinSpecies> species, std::vector<SpinSite> sites,
                       std::optional<CouplingMatrix> couplings, Vec3 field_axis)
    : species_(std::move(species)), sites_(std::move(sites)) {
  for (std::size_t a = 0; a < species_.size(); ++a) {
    if (!(species_[a].gamma_mhz_per_t != 0.0) || !std::isfinite(species_[a].gamma_mhz_per_t))
      throw InvalidArgument("species '" + species_[a].label + "' needs a finite non-zero gyromagnetic ratio");
    for (std::size_t b = 0; b < a; ++b)
      if (species_[a].label == species_[b].label)
        throw InvalidArgument("duplicate species label '" + species_[a].label + "'");
  }
  if (sites_.size() < 2) throw InvalidArgument("a spin system needs one S site and at least one I site");

  std::size_t s_count = 0;
  std::size_t with_position = 0;
  for (std::size_t k = 0; k < sites_.size(); ++k) {
    const auto& site = sites_[k];
    const auto it = std::find_if(species_.begin(), species_.end(),
                                 [&](const SpinSpecies& s) { return s.label == site.species; });
    if (it == species_.end()) throw InvalidArgument("site references unknown species '" + site.species + "'");
    species_index_.push_back(static_cast<std::size_t>(it - species_.begin()));
    if (site.role == Role::S) {
      ++s_count;
      s_index_ = k;
    } else {
      i_indices_.push_back(k);
    }
    if (site.position) ++with_position;
  }
  if (s_count != 1) throw InvalidArgument("a spin system needs exactly one S site");
  if (with_position != 0 && with_position != sites_.size())
    throw InvalidArgument("positions must be given for all sites or for none");

  if (couplings) {
    if (couplings->size() != sites_.size())
      throw InvalidArgument("coupling matrix dimension does not match the site count");
    couplings_ = std::move(*couplings);
    return;
  }
  if (with_position == 0) {
    couplings_ = CouplingMatrix::zeros(sites_.size());
    return;
  }
  const auto n = static_cast<Eigen::Index>(sites_.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto a = static_cast<std::size_t>(i);
      const auto b = static_cast<std::size_t>(j);
      d(i, j) = dipolar_coupling(*sites_[a].position, *sites_[b].position, gamma(a), gamma(b), field_axis);
      d(j, i) = d(i, j);
    }
  }
  couplings_ = CouplingMatrix(std::move(d));
}

double SpinSystem::gamma(std::size_t site) const { return species_of(site).gamma_mhz_per_t; }

const SpinSpecies& SpinSystem::species_of(std::size_t site) const {
  if (site >= sites_.size()) throw InvalidArgument("site index out of range");
  return species_[species_index_[site]];
}

bool SpinSystem::has_species(std::string_view label) const {
  return std::any_of(species_.begin(), species_.end(), [&](const SpinSpecies& s) { return s.label == label; });
}

bool SpinSystem::homonuclear(std::size_t a, std::size_t b) const {
  return species_index_.at(a) == species_index_.at(b);
}

RegimeMap classify_regime(const SpinSystem& system, FieldPoint field, double threshold_ratio) {
  if (!(threshold_ratio > 0.0)) throw InvalidArgument("threshold_ratio must be > 0");
  RegimeMap map(system.size());
  for (std::size_t a = 0; a < system.size(); ++a) {
    for (std::size_t b = a + 1; b < system.size(); ++b) {
      if (system.homonuclear(a, b)) continue;
      const double dw = std::abs(larmor_hz(system.gamma(a), field) - larmor_hz(system.gamma(b), field));
      map.set(a, b, dw <= threshold_ratio * std::abs(system.couplings()(a, b)));
    }
  }
  return map;
}

// --- system description parsing ---------------------------------------------

void SystemBuilder::add_species(std::string_view args, std::size_t line) {
  const auto w = text::split_ws(args);
  if (w.size() != 2) throw ConfigError("species expects '<label> <gamma_mhz_per_t>'", line);
  const double gamma = text::to_double(w[1], line, "gyromagnetic ratio");
  for (const auto& s : species_)
    if (s.label == w[0]) throw ConfigError("duplicate species label '" + std::string(w[0]) + "'", line);
  if (gamma == 0.0) throw ConfigError("gyromagnetic ratio must be non-zero", line);
  species_.push_back({std::string(w[0]), gamma});
}

void SystemBuilder::add_site(std::string_view args, std::size_t line) {
  const auto w = text::split_ws(args);
  if (w.size() != 2 && w.size() != 5) throw ConfigError("site expects '<species> <S|I> [x y z]'", line);
  SpinSite site;
  site.species = std::string(w[0]);
  if (w[1] == "S" || w[1] == "s") {
    site.role = Role::S;
  } else if (w[1] == "I" || w[1] == "i") {
    site.role = Role::I;
  } else {
    throw ConfigError("site role must be S or I, got '" + std::string(w[1]) + "'", line);
  }
  if (w.size() == 5) {
    site.position = Vec3{text::to_double(w[2], line, "x"), text::to_double(w[3], line, "y"),
                         text::to_double(w[4], line, "z")};
  }
  sites_.push_back({std::move(site), line});
}

void SystemBuilder::add_coupling(std::string_view args, std::size_t line) {
  const auto w = text::split_ws(args);
  if (w.size() != 3) throw ConfigError("coupling expects '<i> <j> <d_hz>'", line);
  const auto i = text::to_int(w[0], line, "site index");
  const auto j = text::to_int(w[1], line, "site index");
  if (i < 0 || j < 0) throw ConfigError("site indices must be >= 0", line);
  if (i == j) throw ConfigError("a coupling needs two distinct sites", line);
  couplings_.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                        text::to_double(w[2], line, "coupling"), line});
}

void SystemBuilder::set_field_axis(std::string_view args, std::size_t line) {
  const auto w = text::split_ws(args);
  if (w.size() != 3) throw ConfigError("field_axis expects three components", line);
  Vec3 v{text::to_double(w[0], line, "x"), text::to_double(w[1], line, "y"), text::to_double(w[2], line, "z")};
  const double n = norm(v);
  if (!(n > 0.0)) throw ConfigError("field_axis must be non-zero", line);
  for (auto& c : v) c /= n;
  field_axis_ = v;
}

void SystemBuilder::add_line(std::string_view raw, std::size_t line) {
  const auto body = text::trim(text::strip_comment(raw));
  if (body.empty()) return;
  const auto sp = body.find_first_of(" \t");
  const auto head = body.substr(0, sp);
  const auto rest = sp == std::string_view::npos ? std::string_view{} : body.substr(sp + 1);
  if (head == "species") {
    add_species(rest, line);
  } else if (head == "coupling") {
    add_coupling(rest, line);
  } else if (head == "field_axis") {
    set_field_axis(rest, line);
  } else {
    add_site(body, line);
  }
}

SpinSystem SystemBuilder::build() const {
  if (species_.empty()) throw ConfigError("missing key 'species': no spin species defined");
  for (const auto& p : sites_) {
    const bool known = std::any_of(species_.begin(), species_.end(),
                                   [&](const SpinSpecies& s) { return s.label == p.site.species; });
    if (!known)
      throw ConfigError("site references undefined species '" + p.site.species + "' (missing key 'species')",
                        p.line);
  }
  std::vector<SpinSite> sites;
  sites.reserve(sites_.size());
  for (const auto& p : sites_) sites.push_back(p.site);

  std::optional<CouplingMatrix> couplings;
  if (!couplings_.empty()) {
    const auto n = static_cast<Eigen::Index>(sites.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (const auto& c : couplings_) {
      if (c.i >= sites.size() || c.j >= sites.size()) throw ConfigError("coupling site index out of range", c.line);
      d(static_cast<Eigen::Index>(c.i), static_cast<Eigen::Index>(c.j)) = c.d;
      d(static_cast<Eigen::Index>(c.j), static_cast<Eigen::Index>(c.i)) = c.d;
    }
    couplings = CouplingMatrix(std::move(d));
  }
  try {
    return SpinSystem(species_, std::move(sites), std::move(couplings), field_axis_);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

SpinSystem parse_system(std::istream& in) {
  SystemBuilder builder;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) builder.add_line(line, ++n);
  return builder.build();
}

SpinSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open system file '" + path + "'");
  return parse_system(in);
}

}  // namespace spinamp
