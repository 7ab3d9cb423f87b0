#pragma once

// Spin species, cluster geometry, dipolar couplings and the field-dependent
// classification of heteronuclear flip-flop terms.
//
// Frequencies are in cycles (Hz, MHz) throughout. Gyromagnetic ratios are
// given in MHz/T, fields in gauss, positions in angstrom.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace spinamp {

using Vec3 = std::array<double, 3>;

struct SpinSpecies {
  std::string label;
  double gamma_mhz_per_t = 0.0;
};

enum class Role { S, I };

struct SpinSite {
  std::string species;
  Role role = Role::I;
  std::optional<Vec3> position;
};

/// Symmetric matrix of pairwise couplings d_ij in Hz with zero diagonal.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  explicit CouplingMatrix(Eigen::MatrixXd d);

  static CouplingMatrix zeros(std::size_t n);

  double operator()(std::size_t i, std::size_t j) const { return d_(i, j); }
  std::size_t size() const { return static_cast<std::size_t>(d_.rows()); }
  const Eigen::MatrixXd& matrix() const { return d_; }

 private:
  Eigen::MatrixXd d_;
};

struct FieldPoint {
  double gauss = 0.0;

  explicit FieldPoint(double g = 0.0);
  double tesla() const { return gauss * 1e-4; }
};

/// Larmor frequency in Hz for a gyromagnetic ratio (MHz/T) at the given field.
double larmor_hz(double gamma_mhz_per_t, FieldPoint field);

/// An S-I^m cluster: exactly one S site, m >= 1 I sites.
class SpinSystem {
 public:
  /// Couplings, when supplied, win over geometry. Without couplings every
  /// site must carry a position and the matrix is derived from geometry
  /// with the static field along `field_axis`.
  SpinSystem(std::vector<SpinSpecies> species, std::vector<SpinSite> sites,
             std::optional<CouplingMatrix> couplings = std::nullopt,
             Vec3 field_axis = {0.0, 0.0, 1.0});

  const std::vector<SpinSpecies>& species() const { return species_; }
  const std::vector<SpinSite>& sites() const { return sites_; }
  const CouplingMatrix& couplings() const { return couplings_; }

  std::size_t size() const { return sites_.size(); }
  std::size_t m() const { return sites_.size() - 1; }
  std::size_t s_index() const { return s_index_; }
  /// Site indices with role I, in site order.
  const std::vector<std::size_t>& i_indices() const { return i_indices_; }

  double gamma(std::size_t site) const;
  const SpinSpecies& species_of(std::size_t site) const;
  bool has_species(std::string_view label) const;
  bool homonuclear(std::size_t a, std::size_t b) const;

 private:
  std::vector<SpinSpecies> species_;
  std::vector<SpinSite> sites_;
  CouplingMatrix couplings_;
  std::size_t s_index_ = 0;
  std::vector<std::size_t> i_indices_;
  std::vector<std::size_t> species_index_;
};

/// Secular dipolar coupling constant d (Hz) between two spins, in the
/// convention where the pair Hamiltonian reads
///   d * IzJz - d/2 * (IxJx + IyJy)
/// which gives d = (mu0/4pi) * h * gamma_i * gamma_j * (1 - 3 cos^2 theta) / r^3
/// with gammas in cycles per tesla. theta is measured from `field_axis`.
double dipolar_coupling(const Vec3& pos_i, const Vec3& pos_j, double gamma_i_mhz_per_t,
                        double gamma_j_mhz_per_t, const Vec3& field_axis = {0.0, 0.0, 1.0});

enum class FlipFlop { Active, Suppressed };

/// Pairwise flip-flop flags. Homonuclear pairs are always active.
class RegimeMap {
 public:
  explicit RegimeMap(std::size_t n) : n_(n), active_(n * n, true) {}

  bool active(std::size_t i, std::size_t j) const { return active_[i * n_ + j]; }
  FlipFlop operator()(std::size_t i, std::size_t j) const {
    return active(i, j) ? FlipFlop::Active : FlipFlop::Suppressed;
  }
  void set(std::size_t i, std::size_t j, bool on) {
    active_[i * n_ + j] = on;
    active_[j * n_ + i] = on;
  }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::vector<bool> active_;
};

/// A heteronuclear pair is active iff |f_a - f_b| <= threshold_ratio * |d_ab|.
RegimeMap classify_regime(const SpinSystem& system, FieldPoint field, double threshold_ratio = 1.0);

/// Incremental builder for the line-oriented system description:
///
///   species <label> <gamma_mhz_per_t>
///   <species-label> <S|I> [x y z]
///   coupling <i> <j> <d_hz>
///   field_axis <x> <y> <z>
///
/// '#' starts a comment. Site indices in coupling lines are 0-based in
/// site order.
class SystemBuilder {
 public:
  void add_species(std::string_view args, std::size_t line);
  void add_site(std::string_view args, std::size_t line);
  void add_coupling(std::string_view args, std::size_t line);
  void set_field_axis(std::string_view args, std::size_t line);
  /// Dispatch on the first word of a system-file line.
  void add_line(std::string_view text, std::size_t line);

  SpinSystem build() const;

 private:
  struct PendingCoupling {
    std::size_t i, j;
    double d;
    std::size_t line;
  };
  struct PendingSite {
    SpinSite site;
    std::size_t line;
  };
  std::vector<SpinSpecies> species_;
  std::vector<PendingSite> sites_;
  std::vector<PendingCoupling> couplings_;
  Vec3 field_axis_{0.0, 0.0, 1.0};
};

SpinSystem parse_system(std::istream& in);
SpinSystem load_system(const std::string& path);

}  // namespace spinamp
