#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pqpan {

enum class SchemeKind { Kem, Signature };

/// The on-air transfer a frame or energy figure belongs to.
enum class TransferOp { NotifyPk, WriteCt, Payload };

std::string_view to_string(SchemeKind kind);
std::string_view to_string(TransferOp op);
TransferOp parse_transfer_op(std::string_view text);

/// Artifact sizes of one named scheme. For KEMs `ct_or_sig_min` equals
/// `ct_or_sig_max` and is the ciphertext size; signature families printed as a
/// size range keep both ends.
struct KemParamSet {
  std::string name;
  SchemeKind kind = SchemeKind::Kem;
  std::size_t pk_size = 0;
  std::size_t sk_size = 0;
  std::size_t ct_or_sig_min = 0;
  std::size_t ct_or_sig_max = 0;
  std::optional<int> nist_level;  // empty for classical schemes

  bool is_kem() const { return kind == SchemeKind::Kem; }
  std::size_t ct_size() const { return ct_or_sig_min; }

  friend bool operator==(const KemParamSet&, const KemParamSet&) = default;
};

class SchemeCatalog {
 public:
  /// Parses the `schemes.csv` schema: name,kind,pk,sk,ct_or_sig_min,ct_or_sig_max,level.
  static SchemeCatalog parse(std::string_view csv);
  static SchemeCatalog from_file(const std::filesystem::path& path);
  static const SchemeCatalog& builtin();

  /// Case-insensitive; '_' is accepted in place of '-'.
  const KemParamSet& lookup(std::string_view name) const;
  const std::vector<KemParamSet>& all() const { return schemes_; }

  /// The three ML-KEM parameter sets in ascending security level.
  std::vector<KemParamSet> ml_kem() const;

 private:
  std::vector<KemParamSet> schemes_;
};

const KemParamSet& lookup_scheme(std::string_view name);

/// One row of the published communication-energy table.
struct ReferenceEnergyRow {
  std::string scheme;
  int att_mtu = 0;
  int ll_pdu = 0;
  TransferOp op = TransferOp::NotifyPk;
  double e_theor_uj = 0.0;
  double e_emp_uj = 0.0;
  double delta_pct = 0.0;

  double delta() const { return delta_pct / 100.0; }

  friend bool operator==(const ReferenceEnergyRow&,
                         const ReferenceEnergyRow&) = default;
};

inline constexpr std::size_t kReferenceRowCount = 48;
inline constexpr double kDeltaTolerance = 1e-3;

/// Parses the `reference_energy.csv` schema and checks each row's stored delta against
/// (e_emp - e_theor) / e_emp. Throws ParseError or ConsistencyError. Any row
/// count is accepted, which lets synthetic tables feed the fitter.
std::vector<ReferenceEnergyRow> parse_reference_csv(std::string_view csv);

/// Loads the bundled table (no path) or a file, and additionally requires the
/// full 48-row shape.
std::vector<ReferenceEnergyRow> load_reference_table(
    const std::optional<std::filesystem::path>& path = std::nullopt);

/// Serializes rows with two decimals, the precision of the printed table.
std::string write_reference_csv(const std::vector<ReferenceEnergyRow>& rows);

/// Multiplicative corrections aligning the analytical model with hardware
/// measurements. Computation factors are indexed by NIST level 1, 3, 5.
struct CalibrationFactors {
  std::array<double, 3> keygen{1.27, 1.38, 1.62};
  std::array<double, 3> decap{1.12, 1.19, 1.32};
  double comm = 1.15;

  double gamma_keygen(int nist_level) const;
  double gamma_decap(int nist_level) const;

  /// Throws InvalidConfig if any factor is below 1.
  void validate() const;

  static CalibrationFactors identity();
};

}  // namespace pqpan
